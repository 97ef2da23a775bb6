//! Physical constants (SI, CODATA 2018) and ion/molecule species presets.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant (J·s). Derived from the exact SI value of h.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Elementary charge (C). Exact in the 2019 SI.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Boltzmann constant (J/K). Exact in the 2019 SI.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Atomic mass of ¹H (u).
const MASS_H_U: f64 = 1.007_825_032_07;

/// Atomic mass of ⁷Li (u).
const MASS_LI7_U: f64 = 7.016_003_436_6;

/// The SI constants bundled as a value, for callers that want to pass them
/// around or serialize them alongside results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J·s)
    pub hbar: f64,
    /// Vacuum permittivity (F/m)
    pub epsilon0: f64,
    /// Elementary charge (C)
    pub elementary_charge: f64,
    /// Boltzmann constant (J/K)
    pub boltzmann: f64,
    /// Atomic mass unit (kg)
    pub atomic_mass_unit: f64,
}

pub const SI: PhysicalConstants = PhysicalConstants {
    hbar: HBAR,
    epsilon0: EPSILON_0,
    elementary_charge: ELEMENTARY_CHARGE,
    boltzmann: BOLTZMANN,
    atomic_mass_unit: ATOMIC_MASS_UNIT,
};

/// A fragment/molecule preset: the dissociating homonuclear diatom and the
/// charged fragment that takes part in the collision measurement.
///
/// Electron-mass corrections to the ion masses are below 0.1% and ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    pub name: String,
    /// Fragment mass m (kg).
    pub fragment_mass: f64,
    /// Parent molecule mass M (kg).
    pub molecule_mass: f64,
    /// Fragment charge q (C, signed). Zero only for source-only species.
    pub charge: f64,
}

impl IonSpecies {
    /// Custom species. `charge_number` is the signed charge in units of e.
    pub fn new(
        name: &str,
        fragment_mass: f64,
        molecule_mass: f64,
        charge_number: i32,
    ) -> Result<Self> {
        if !(fragment_mass > 0.0) {
            return Err(Error::invalid("fragment_mass", "m > 0"));
        }
        if !(molecule_mass >= fragment_mass) {
            return Err(Error::invalid("molecule_mass", "M >= m"));
        }
        Ok(IonSpecies {
            name: name.to_string(),
            fragment_mass,
            molecule_mass,
            charge: f64::from(charge_number) * ELEMENTARY_CHARGE,
        })
    }

    /// Look up one of the built-in presets: `H2+`, `Li2-`, `Li+`.
    ///
    /// `Li+`/`Li2-` use the ⁷Li isotope. The charge is the magnitude-e charge
    /// of the colliding fragment; its sign never enters the formulas (only q²
    /// appears), but is kept for bookkeeping.
    pub fn preset(name: &str) -> Result<Self> {
        let (fragment_u, charge_number) = match name {
            "H2+" => (MASS_H_U, 1),
            "Li2-" => (MASS_LI7_U, -1),
            "Li+" => (MASS_LI7_U, 1),
            other => return Err(Error::UnknownSpecies(other.to_string())),
        };
        let m = fragment_u * ATOMIC_MASS_UNIT;
        Ok(IonSpecies {
            name: name.to_string(),
            fragment_mass: m,
            molecule_mass: 2.0 * m,
            charge: f64::from(charge_number) * ELEMENTARY_CHARGE,
        })
    }

    pub fn is_charged(&self) -> bool {
        self.charge != 0.0
    }
}
