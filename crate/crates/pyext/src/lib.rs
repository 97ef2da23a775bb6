//! Python bindings: the formula layer, error budget, fidelity, and the full
//! ensemble runner (config JSON in, summary JSON out).
//!
//! Build with `cargo build --release -p eprtel-py`, then copy
//! `target/release/libeprtel.so` next to your script as `eprtel.so`
//! (python/build_native.sh does both).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use eprtel_core::config::Config;
use eprtel_core::constants::{
    IonSpecies, ATOMIC_MASS_UNIT, BOLTZMANN, ELEMENTARY_CHARGE, EPSILON_0, HBAR,
};
use eprtel_core::phasespace::GaussianState;
use eprtel_core::teleport::{run_ensemble, NoiseBudget};
use eprtel_core::{collision, phasespace, source, teleport};

fn err(e: eprtel_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Fragment/molecule species preset or custom definition.
#[pyclass(name = "IonSpecies", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyIonSpecies {
    inner: IonSpecies,
}

#[pymethods]
impl PyIonSpecies {
    /// IonSpecies(name, fragment_mass, molecule_mass, charge_number)
    #[new]
    fn new(name: &str, fragment_mass: f64, molecule_mass: f64, charge_number: i32) -> PyResult<Self> {
        Ok(PyIonSpecies {
            inner: IonSpecies::new(name, fragment_mass, molecule_mass, charge_number).map_err(err)?,
        })
    }

    /// Built-in presets: "H2+", "Li2-", "Li+".
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(PyIonSpecies {
            inner: IonSpecies::preset(name).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// Fragment mass (kg).
    #[getter]
    fn fragment_mass(&self) -> f64 {
        self.inner.fragment_mass
    }

    /// Molecule mass (kg).
    #[getter]
    fn molecule_mass(&self) -> f64 {
        self.inner.molecule_mass
    }

    /// Fragment charge (C, signed).
    #[getter]
    fn charge(&self) -> f64 {
        self.inner.charge
    }

    fn __repr__(&self) -> String {
        format!(
            "IonSpecies(name='{}', m={:.6e}, M={:.6e}, q={:+.0}e)",
            self.inner.name,
            self.inner.fragment_mass,
            self.inner.molecule_mass,
            self.inner.charge / ELEMENTARY_CHARGE
        )
    }
}

/// Total teleportation error per quadrature and their product.
#[pyclass(name = "ErrorBudget", frozen)]
struct PyErrorBudget {
    inner: teleport::ErrorBudget,
}

#[pymethods]
impl PyErrorBudget {
    /// Total position error (m).
    #[getter]
    fn dx_t(&self) -> f64 {
        self.inner.dx_t
    }

    /// Total momentum error (kg·m/s).
    #[getter]
    fn dp_t(&self) -> f64 {
        self.inner.dp_t
    }

    #[getter]
    fn product_over_hbar(&self) -> f64 {
        self.inner.product_over_hbar
    }

    fn __repr__(&self) -> String {
        format!(
            "ErrorBudget(dx_t={:.6e}, dp_t={:.6e}, product_over_hbar={:.6})",
            self.inner.dx_t, self.inner.dp_t, self.inner.product_over_hbar
        )
    }
}

/// T = hbar^2 / (M kB D^2) (K).
#[pyfunction]
fn com_temperature(species: &PyIonSpecies, com_size: f64) -> PyResult<f64> {
    source::com_temperature(&species.inner, com_size).map_err(err)
}

/// s = D / dd.
#[pyfunction]
fn squeezing_parameter(com_size: f64, frag_spread: f64) -> PyResult<f64> {
    source::squeezing_parameter(com_size, frag_spread).map_err(err)
}

/// sqrt(dd0^2 + (dv01 t)^2) (m).
#[pyfunction]
fn spread_at(dd0: f64, dv01: f64, t: f64) -> PyResult<f64> {
    source::spread_at(dd0, dv01, t).map_err(err)
}

/// Coulomb collision range R_col (m).
#[pyfunction]
fn collision_range(species: &PyIonSpecies, v_y: f64) -> PyResult<f64> {
    collision::collision_range(&species.inner, v_y).map_err(err)
}

/// Rutherford deflection angle (rad) for transverse offset x_minus.
#[pyfunction]
fn deflection_angle(x_minus: f64, r_col: f64) -> PyResult<f64> {
    collision::deflection_angle(x_minus, r_col).map_err(err)
}

/// Inverse of deflection_angle.
#[pyfunction]
fn invert_deflection(theta: f64, r_col: f64) -> PyResult<f64> {
    collision::invert_deflection(theta, r_col).map_err(err)
}

/// Position-difference readout resolution (m); raises below the validity
/// threshold.
#[pyfunction]
fn position_resolution(species: &PyIonSpecies, com_size: f64, vib_spread: f64, v_y: f64) -> PyResult<f64> {
    collision::position_resolution(&species.inner, com_size, vib_spread, v_y).map_err(err)
}

/// Momentum threshold sqrt(m q^2 / (4 pi eps0 D)) (kg·m/s).
#[pyfunction]
fn validity_threshold(species: &PyIonSpecies, com_size: f64) -> PyResult<f64> {
    collision::validity_threshold(&species.inner, com_size).map_err(err)
}

/// Quadrature error budget from source spreads and noise terms.
#[pyfunction]
#[pyo3(signature = (frag_spread, psum_spread, dx_meas=0.0, dp_meas=0.0, dx_shift=0.0, dp_shift=0.0))]
fn error_budget(
    frag_spread: f64,
    psum_spread: f64,
    dx_meas: f64,
    dp_meas: f64,
    dx_shift: f64,
    dp_shift: f64,
) -> PyErrorBudget {
    PyErrorBudget {
        inner: teleport::error_budget(
            frag_spread,
            psum_spread,
            &NoiseBudget {
                dx_meas,
                dp_meas,
                dx_shift,
                dp_shift,
            },
        ),
    }
}

/// Maximum Gaussian-wavepacket fidelity 1/(1 + product).
#[pyfunction]
fn f_max(product_over_hbar: f64) -> f64 {
    teleport::f_max(product_over_hbar)
}

/// Fidelity of a minimum-uncertainty input of width sigma_x against its
/// noise-broadened output.
#[pyfunction]
fn gaussian_fidelity(sigma_x: f64, dx_t: f64, dp_t: f64) -> PyResult<f64> {
    let input = GaussianState::mus(sigma_x).map_err(err)?;
    phasespace::gaussian_fidelity(&input, dx_t, dp_t).map_err(err)
}

/// Run a full experiment from config JSON (same schema as the CLI) and
/// return the summary report as a JSON string.
#[pyfunction]
fn run(config_json: &str) -> PyResult<String> {
    let config = Config::from_json(config_json).map_err(err)?;
    let run_config = config.run_config().map_err(err)?;
    let report = run_ensemble(&run_config).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Derived quantities for a (possibly source-only) config JSON, as a JSON
/// string: temperature, squeezing, pair spreads, and when collision keys are
/// present, range/resolutions and the error budget.
#[pyfunction]
fn derived_params(config_json: &str) -> PyResult<String> {
    let config = Config::from_json(config_json).map_err(err)?;
    let source = config.source_params().map_err(err)?;
    let pair = source.pair_state().map_err(err)?;
    let mut out = serde_json::json!({
        "species": source.species.name,
        "com_temperature_k": source.com_temperature().map_err(err)?,
        "squeezing": source.squeezing().map_err(err)?,
        "sigma_xdiff_m": pair.sigma_xdiff,
        "sigma_psum_kgmps": pair.sigma_psum,
        "epr_product_over_hbar": pair.epr_product_over_hbar(),
    });
    if let Some(col) = config.collision_params().map_err(err)? {
        let noise = config.noise_spec().resolve(&source, &col).map_err(err)?;
        let budget = teleport::error_budget(pair.sigma_xdiff, pair.sigma_psum, &noise);
        out["collision_range_m"] = collision::collision_range(&col.species, col.approach_speed)
            .map_err(err)?
            .into();
        out["position_resolution_m"] = noise.dx_meas.into();
        out["product_over_hbar"] = budget.product_over_hbar.into();
        out["f_max"] = teleport::f_max(budget.product_over_hbar).into();
        out["warnings"] = source::design_check(&source, &col).into();
    }
    serde_json::to_string(&out).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn eprtel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HBAR", HBAR)?;
    m.add("EPSILON_0", EPSILON_0)?;
    m.add("ELEMENTARY_CHARGE", ELEMENTARY_CHARGE)?;
    m.add("BOLTZMANN", BOLTZMANN)?;
    m.add("ATOMIC_MASS_UNIT", ATOMIC_MASS_UNIT)?;
    m.add_class::<PyIonSpecies>()?;
    m.add_class::<PyErrorBudget>()?;
    m.add_function(wrap_pyfunction!(com_temperature, m)?)?;
    m.add_function(wrap_pyfunction!(squeezing_parameter, m)?)?;
    m.add_function(wrap_pyfunction!(spread_at, m)?)?;
    m.add_function(wrap_pyfunction!(collision_range, m)?)?;
    m.add_function(wrap_pyfunction!(deflection_angle, m)?)?;
    m.add_function(wrap_pyfunction!(invert_deflection, m)?)?;
    m.add_function(wrap_pyfunction!(position_resolution, m)?)?;
    m.add_function(wrap_pyfunction!(validity_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(error_budget, m)?)?;
    m.add_function(wrap_pyfunction!(f_max, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(derived_params, m)?)?;
    Ok(())
}
