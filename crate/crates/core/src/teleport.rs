//! Full teleportation pipeline: error budget, conditional shifts,
//! non-classicality and fidelity metrics, and the quantum / classical / cat
//! ensemble runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::collision::{CollisionParams, MeasurementRecord};
use crate::constants::HBAR;
use crate::phasespace::{
    gaussian_fidelity, CatState, DensityGrid, GaussianState, GridSpec, Histogram1D, PhasePoint,
    RunningMoments,
};
use crate::source::{design_check, SourceParams};
use crate::{Error, Result};

/// Gaussian noise spreads of the measurement and shift stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Std of the position-difference measurement noise (m).
    pub dx_meas: f64,
    /// Std of the momentum-sum measurement noise (kg·m/s).
    pub dp_meas: f64,
    /// Std of the position-shifter noise (m).
    pub dx_shift: f64,
    /// Std of the momentum-shifter noise (kg·m/s).
    pub dp_shift: f64,
}

impl NoiseBudget {
    pub fn zero() -> Self {
        NoiseBudget {
            dx_meas: 0.0,
            dp_meas: 0.0,
            dx_shift: 0.0,
            dp_shift: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dx_meas", self.dx_meas),
            ("dp_meas", self.dp_meas),
            ("dx_shift", self.dx_shift),
            ("dp_shift", self.dp_shift),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "noise spreads >= 0"));
            }
        }
        Ok(())
    }
}

/// Per-component noise resolution: a fixed value or "auto" (derived from the
/// source and collision parameters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseEntry {
    Fixed(f64),
    Auto(AutoWord),
}

/// The literal string "auto" in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AutoWord {
    #[serde(rename = "auto")]
    Auto,
}

impl NoiseEntry {
    pub const AUTO: NoiseEntry = NoiseEntry::Auto(AutoWord::Auto);
}

/// Noise specification of a run; `resolve` turns it into a [`NoiseBudget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub x_meas: NoiseEntry,
    pub p_meas: NoiseEntry,
    pub x_shift: f64,
    pub p_shift: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            x_meas: NoiseEntry::AUTO,
            p_meas: NoiseEntry::AUTO,
            x_shift: 0.0,
            p_shift: 0.0,
        }
    }
}

impl NoiseSpec {
    /// Auto components: position resolution from the deflection readout,
    /// momentum resolution from the pair's COM fluctuation combined with the
    /// instrument floor. Shifter noise defaults to zero (ion optics is
    /// subdominant here).
    pub fn resolve(
        &self,
        source: &SourceParams,
        collision: &CollisionParams,
    ) -> Result<NoiseBudget> {
        let dx_meas = match self.x_meas {
            NoiseEntry::Fixed(v) => v,
            NoiseEntry::Auto(_) => crate::collision::position_resolution(
                &collision.species,
                source.com_size,
                source.vib_spread,
                collision.approach_speed,
            )?,
        };
        let dp_meas = match self.p_meas {
            NoiseEntry::Fixed(v) => v,
            NoiseEntry::Auto(_) => collision.momentum_resolution(source.com_size),
        };
        let budget = NoiseBudget {
            dx_meas,
            dp_meas,
            dx_shift: self.x_shift,
            dp_shift: self.p_shift,
        };
        budget.validate()?;
        Ok(budget)
    }
}

/// Total teleportation accuracy: quadrature sums of source, measurement and
/// shift spreads per quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Total position error Δx_T (m).
    pub dx_t: f64,
    /// Total momentum error Δp_T (kg·m/s).
    pub dp_t: f64,
    /// Δx_T·Δp_T / hbar.
    pub product_over_hbar: f64,
}

/// `dx_t^2 = dd^2 + dx_meas^2 + dx_shift^2`,
/// `dp_t^2 = dPx^2 + dp_meas^2 + dp_shift^2`.
pub fn error_budget(frag_spread: f64, psum_spread: f64, noise: &NoiseBudget) -> ErrorBudget {
    let dx_t = (frag_spread * frag_spread
        + noise.dx_meas * noise.dx_meas
        + noise.dx_shift * noise.dx_shift)
        .sqrt();
    let dp_t = (psum_spread * psum_spread
        + noise.dp_meas * noise.dp_meas
        + noise.dp_shift * noise.dp_shift)
        .sqrt();
    ErrorBudget {
        dx_t,
        dp_t,
        product_over_hbar: dx_t * dp_t / HBAR,
    }
}

/// Non-classicality criterion: the error-budget product must stay below hbar
/// (strict inequality).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonclassicality {
    pub product_over_hbar: f64,
    pub nonclassical: bool,
}

pub fn nonclassicality(budget: &ErrorBudget) -> Nonclassicality {
    Nonclassicality {
        product_over_hbar: budget.product_over_hbar,
        nonclassical: budget.product_over_hbar < 1.0,
    }
}

/// Maximum attainable Gaussian-wavepacket fidelity for a given error-budget
/// product: `1 / (1 + Δx_T Δp_T / hbar)`.
pub fn f_max(product_over_hbar: f64) -> f64 {
    debug_assert!(product_over_hbar >= 0.0);
    1.0 / (1.0 + product_over_hbar)
}

/// One teleportation event: shift the readout particle by the measured
/// position difference and momentum sum, with shifter noise.
///
/// `readout` is the free member of the EPR pair; `meas` must come from the
/// collision of the other member with the input particle.
pub fn run_event<R: Rng + ?Sized>(
    readout: PhasePoint,
    meas: &MeasurementRecord,
    noise: &NoiseBudget,
    rng: &mut R,
) -> PhasePoint {
    let nx: f64 = rng.sample(StandardNormal);
    let np: f64 = rng.sample(StandardNormal);
    PhasePoint {
        x: readout.x - meas.x_minus_meas + noise.dx_shift * nx,
        p: readout.p + meas.p_plus_meas + noise.dp_shift * np,
    }
}

/// The wavepacket to teleport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InputState {
    Gaussian(GaussianState),
    Cat(CatState),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Quantum,
    Classical,
}

/// Complete description of one simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: SourceParams,
    pub collision: CollisionParams,
    pub noise: NoiseSpec,
    pub input: InputState,
    pub n_events: u64,
    pub seed: u64,
    pub mode: RunMode,
    pub workers: usize,
    /// Histogram bin count.
    pub bins: usize,
    /// Histogram half-range in units of the expected output spread.
    pub hist_range_sigma: f64,
    /// Density-grid resolution for cat runs and analytic curves.
    pub grid_points: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.collision.validate()?;
        if self.n_events == 0 {
            return Err(Error::invalid("events", "events >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers", "workers >= 1"));
        }
        if self.bins == 0 {
            return Err(Error::invalid("bins", "bins >= 1"));
        }
        if !(self.hist_range_sigma > 0.0) {
            return Err(Error::invalid("hist_range_sigma", "> 0"));
        }
        if self.grid_points < 16 {
            return Err(Error::invalid("grid_points", ">= 16"));
        }
        Ok(())
    }

    /// Resolve the noise spec against this config's source and collision.
    pub fn noise_budget(&self) -> Result<NoiseBudget> {
        self.noise.resolve(&self.source, &self.collision)
    }

    /// The quantum-protocol error budget implied by this config.
    pub fn error_budget(&self) -> Result<ErrorBudget> {
        let pair = self.source.pair_state()?;
        let noise = self.noise_budget()?;
        Ok(error_budget(pair.sigma_xdiff, pair.sigma_psum, &noise))
    }
}

/// Mean and spread of one phase-space marginal pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean_x: f64,
    pub std_x: f64,
    pub mean_p: f64,
    pub std_p: f64,
}

/// Input and output densities on a shared axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPair {
    pub input: DensityGrid,
    pub output: DensityGrid,
}

/// Fringe bookkeeping for cat runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeReport {
    /// Peak-to-valley visibility of the momentum fringes before noise.
    pub visibility_in: f64,
    /// Peak-to-valley visibility after noise.
    pub visibility_out: f64,
    /// Fringe contrast (characteristic-function modulus) before noise.
    pub contrast_in: f64,
    /// Fringe contrast after noise.
    pub contrast_out: f64,
    /// Measured contrast_out / contrast_in.
    pub attenuation: f64,
    /// exp(-a^2 Δp_T^2 / (2 hbar^2)).
    pub predicted_attenuation: f64,
}

/// Correlation diagnostics of the trajectory ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDiagnostics {
    /// Sample correlation between the added position noise and the input
    /// position; near zero when teleportation noise is input-independent.
    pub noise_input_corr_x: f64,
    pub noise_input_corr_p: f64,
}

/// Everything a run produces. Bulky per-bin/per-point payloads are kept out
/// of the serialized summary; the CLI writes them to their own files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub workers: usize,
    pub seed: u64,
    pub budget: ErrorBudget,
    pub f_max: f64,
    pub nonclassicality: Nonclassicality,
    pub input_moments: MomentSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output_moments: Option<MomentSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<TrajectoryDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fringes: Option<FringeReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fidelity_estimate: Option<f64>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub hist_x: Option<Histogram1D>,
    #[serde(skip)]
    pub hist_p: Option<Histogram1D>,
    #[serde(skip)]
    pub density_x: Option<DensityPair>,
    #[serde(skip)]
    pub density_p: Option<DensityPair>,
}

/// Per-worker accumulator; merging is associative and commutative.
struct WorkerPartial {
    hist_x: Histogram1D,
    hist_p: Histogram1D,
    out_x: RunningMoments,
    out_p: RunningMoments,
    cross_x: f64,
    cross_p: f64,
    in_x: RunningMoments,
    in_p: RunningMoments,
}

impl WorkerPartial {
    fn new(hist_x: &Histogram1D, hist_p: &Histogram1D) -> Self {
        WorkerPartial {
            hist_x: hist_x.clone(),
            hist_p: hist_p.clone(),
            out_x: RunningMoments::default(),
            out_p: RunningMoments::default(),
            cross_x: 0.0,
            cross_p: 0.0,
            in_x: RunningMoments::default(),
            in_p: RunningMoments::default(),
        }
    }

    fn record(&mut self, input: PhasePoint, output: PhasePoint) {
        self.hist_x.add(output.x);
        self.hist_p.add(output.p);
        self.out_x.add(output.x);
        self.out_p.add(output.p);
        self.in_x.add(input.x);
        self.in_p.add(input.p);
        self.cross_x += (output.x - input.x) * input.x;
        self.cross_p += (output.p - input.p) * input.p;
    }

    fn merge(&mut self, other: &WorkerPartial) -> Result<()> {
        self.hist_x.merge(&other.hist_x)?;
        self.hist_p.merge(&other.hist_p)?;
        self.out_x.merge(&other.out_x);
        self.out_p.merge(&other.out_p);
        self.in_x.merge(&other.in_x);
        self.in_p.merge(&other.in_p);
        self.cross_x += other.cross_x;
        self.cross_p += other.cross_p;
        Ok(())
    }
}

/// Run the experiment described by `config`.
///
/// Dispatch: two-peak inputs go through the density-convolution pathway
/// (they cannot be trajectory-sampled); Gaussian inputs run trajectories in
/// the configured mode.
pub fn run_ensemble(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    match (&config.input, config.mode) {
        (InputState::Cat(_), RunMode::Quantum) => run_cat_output(config),
        (InputState::Cat(_), RunMode::Classical) => Err(Error::invalid(
            "input",
            "classical mode needs a Gaussian minimum-uncertainty input, got a two-peak state",
        )),
        (InputState::Gaussian(_), RunMode::Quantum) => run_quantum(config),
        (InputState::Gaussian(_), RunMode::Classical) => run_classical(config),
    }
}

fn gaussian_input(config: &RunConfig) -> Result<GaussianState> {
    match config.input {
        InputState::Gaussian(g) => {
            GaussianState::new(g.mean_x, g.mean_p, g.sigma_x, g.sigma_p, g.corr)?;
            Ok(g)
        }
        InputState::Cat(_) => Err(Error::NegativeWigner),
    }
}

/// Quantum-mode trajectory run: per event, sample the input and the EPR pair,
/// measure the collision, shift the readout particle.
pub fn run_quantum(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let input = gaussian_input(config)?;
    let pair = config.source.pair_state()?;
    let noise = config.noise_budget()?;
    let budget = error_budget(pair.sigma_xdiff, pair.sigma_psum, &noise);
    let collision = &config.collision;

    let report = run_trajectories(config, input, budget, move |rng| {
        let particle2 = input.sample(rng);
        let (readout, partner) = pair.sample(rng);
        // measure() cannot fail here: config.validate checked the species
        let meas = collision
            .measure(partner, particle2, &noise, rng)
            .expect("validated collision params");
        (particle2, run_event(readout, &meas, &noise, rng))
    })?;
    Ok(report)
}

/// Classical baseline: simultaneous noisy measurement of both quadratures of
/// the input (noise = the input's own spreads, the optimal symmetric choice)
/// followed by repreparation of a fresh minimum-uncertainty wavepacket
/// centered on the measured values. Saturates the classical fidelity bound.
pub fn run_classical(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let input = gaussian_input(config).map_err(|_| {
        Error::invalid(
            "input",
            "classical mode needs a Gaussian minimum-uncertainty input, got a two-peak state",
        )
    })?;
    if !input.is_mus() {
        return Err(Error::NotMinimumUncertainty {
            product: input.sigma_x * input.sigma_p,
            corr: input.corr,
        });
    }
    let (sx, sp) = (input.sigma_x, input.sigma_p);
    // measurement + repreparation add the input spread twice, in quadrature
    let dx_t = std::f64::consts::SQRT_2 * sx;
    let dp_t = std::f64::consts::SQRT_2 * sp;
    let budget = ErrorBudget {
        dx_t,
        dp_t,
        product_over_hbar: dx_t * dp_t / HBAR,
    };

    run_trajectories(config, input, budget, move |rng| {
        let particle2 = input.sample(rng);
        let mx: f64 = rng.sample(StandardNormal);
        let mp: f64 = rng.sample(StandardNormal);
        let rx: f64 = rng.sample(StandardNormal);
        let rp: f64 = rng.sample(StandardNormal);
        let out = PhasePoint {
            x: particle2.x + sx * mx + sx * rx,
            p: particle2.p + sp * mp + sp * rp,
        };
        (particle2, out)
    })
}

fn run_trajectories<F>(
    config: &RunConfig,
    input: GaussianState,
    budget: ErrorBudget,
    event: F,
) -> Result<RunReport>
where
    F: Fn(&mut ChaCha12Rng) -> (PhasePoint, PhasePoint) + Sync,
{
    let sx_out = (input.sigma_x * input.sigma_x + budget.dx_t * budget.dx_t).sqrt();
    let sp_out = (input.sigma_p * input.sigma_p + budget.dp_t * budget.dp_t).sqrt();
    let k = config.hist_range_sigma;
    let hist_x = Histogram1D::new(
        input.mean_x - k * sx_out,
        input.mean_x + k * sx_out,
        config.bins,
    )?;
    let hist_p = Histogram1D::new(
        input.mean_p - k * sp_out,
        input.mean_p + k * sp_out,
        config.bins,
    )?;

    let workers = config.workers;
    let n = config.n_events;
    let base = n / workers as u64;
    let rem = n % workers as u64;

    let partials: Vec<Result<WorkerPartial>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let hist_x = &hist_x;
                let hist_p = &hist_p;
                let event = &event;
                let count = base + u64::from((w as u64) < rem);
                let seed = config.seed;
                scope.spawn(move || {
                    let mut rng = ChaCha12Rng::seed_from_u64(seed);
                    rng.set_stream(w as u64);
                    let mut partial = WorkerPartial::new(hist_x, hist_p);
                    for _ in 0..count {
                        let (input_pt, output_pt) = event(&mut rng);
                        partial.record(input_pt, output_pt);
                    }
                    Ok(partial)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let mut merged: Option<WorkerPartial> = None;
    for partial in partials {
        let partial = partial?;
        match &mut merged {
            None => merged = Some(partial),
            Some(m) => m.merge(&partial)?,
        }
    }
    let acc = merged.expect("at least one worker");

    let output_moments = MomentSummary {
        mean_x: acc.out_x.mean(),
        std_x: acc.out_x.std(),
        mean_p: acc.out_p.mean(),
        std_p: acc.out_p.std(),
    };
    let nf = acc.out_x.n as f64;
    let diagnostics = TrajectoryDiagnostics {
        noise_input_corr_x: noise_input_corr(acc.cross_x, &acc.in_x, budget.dx_t, nf),
        noise_input_corr_p: noise_input_corr(acc.cross_p, &acc.in_p, budget.dp_t, nf),
    };

    let fidelity_estimate = if input.is_mus() {
        let vx = acc.out_x.variance() - input.sigma_x * input.sigma_x;
        let vp = acc.out_p.variance() - input.sigma_p * input.sigma_p;
        Some(gaussian_fidelity(
            &input,
            vx.max(0.0).sqrt(),
            vp.max(0.0).sqrt(),
        )?)
    } else {
        None
    };

    let mut warnings = design_check(&config.source, &config.collision);
    for (label, moments, expect, scale) in [
        ("x", &acc.out_x, input.mean_x, sx_out),
        ("p", &acc.out_p, input.mean_p, sp_out),
    ] {
        let drift = (moments.mean() - expect).abs() / (scale / nf.sqrt());
        if drift > 3.0 {
            warnings.push(format!(
                "output {label} mean drifted {drift:.2} standard errors from the input mean"
            ));
        }
    }

    // analytic marginals over the histogram ranges, for plotting
    let grid_x = GridSpec::new(hist_x.bin_edges[0], *hist_x.bin_edges.last().unwrap(), config.grid_points)?;
    let grid_p = GridSpec::new(hist_p.bin_edges[0], *hist_p.bin_edges.last().unwrap(), config.grid_points)?;
    let out_state_x = GaussianState::new(input.mean_x, input.mean_p, sx_out, sp_out, 0.0)?;
    let density_x = DensityPair {
        input: input.position_density(&grid_x)?,
        output: out_state_x.position_density(&grid_x)?,
    };
    let density_p = DensityPair {
        input: input.momentum_density(&grid_p)?,
        output: out_state_x.momentum_density(&grid_p)?,
    };

    Ok(RunReport {
        config: config.clone(),
        workers,
        seed: config.seed,
        budget,
        f_max: f_max(budget.product_over_hbar),
        nonclassicality: nonclassicality(&budget),
        input_moments: MomentSummary {
            mean_x: input.mean_x,
            std_x: input.sigma_x,
            mean_p: input.mean_p,
            std_p: input.sigma_p,
        },
        output_moments: Some(output_moments),
        diagnostics: Some(diagnostics),
        fringes: None,
        fidelity_estimate,
        warnings,
        hist_x: Some(acc.hist_x),
        hist_p: Some(acc.hist_p),
        density_x: Some(density_x),
        density_p: Some(density_p),
    })
}

fn noise_input_corr(cross: f64, input: &RunningMoments, noise_std: f64, n: f64) -> f64 {
    let denom = noise_std * input.std();
    if denom == 0.0 {
        return 0.0;
    }
    (cross / n - 0.0) / denom
}

/// Two-peak (cat) run: the output densities are the input densities
/// coarse-grained by the error budget, exactly as the trajectory ensemble
/// would produce in distribution, but without sampling a negative-Wigner
/// state.
pub fn run_cat_output(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let cat = match config.input {
        InputState::Cat(c) => CatState::new(c.separation, c.peak_sigma, c.mean_x)?,
        InputState::Gaussian(_) => {
            return Err(Error::invalid(
                "input",
                "cat run needs a two-peak input; Gaussian inputs use the trajectory pathway",
            ))
        }
    };
    let pair = config.source.pair_state()?;
    let noise = config.noise_budget()?;
    let budget = error_budget(pair.sigma_xdiff, pair.sigma_psum, &noise);

    let sigma_x_out = (cat.peak_sigma * cat.peak_sigma + budget.dx_t * budget.dx_t).sqrt();
    let half_x = cat.separation / 2.0 + 6.0 * sigma_x_out;
    let grid_x = GridSpec::symmetric(cat.mean_x, half_x, config.grid_points)?;
    let env_p = HBAR / (2.0 * cat.peak_sigma);
    let half_p = 6.0 * (env_p * env_p + budget.dp_t * budget.dp_t).sqrt();
    let grid_p = GridSpec::symmetric(0.0, half_p, config.grid_points)?;

    let input_x = cat.position_density(&grid_x)?;
    let output_x = input_x.convolved(budget.dx_t)?;
    let input_p = cat.momentum_density(&grid_p)?;
    let output_p = input_p.convolved(budget.dp_t)?;

    let omega = cat.fringe_frequency();
    let contrast_in = input_p.fringe_contrast(omega);
    let contrast_out = output_p.fringe_contrast(omega);
    let fringes = FringeReport {
        visibility_in: input_p.peak_valley_visibility(),
        visibility_out: output_p.peak_valley_visibility(),
        contrast_in,
        contrast_out,
        attenuation: contrast_out / contrast_in,
        predicted_attenuation: (-cat.separation * cat.separation * budget.dp_t * budget.dp_t
            / (2.0 * HBAR * HBAR))
            .exp(),
    };

    let input_moments = MomentSummary {
        mean_x: input_x.mean(),
        std_x: input_x.variance().sqrt(),
        mean_p: input_p.mean(),
        std_p: input_p.variance().sqrt(),
    };
    let output_moments = MomentSummary {
        mean_x: output_x.mean(),
        std_x: output_x.variance().sqrt(),
        mean_p: output_p.mean(),
        std_p: output_p.variance().sqrt(),
    };

    Ok(RunReport {
        config: config.clone(),
        workers: config.workers,
        seed: config.seed,
        budget,
        f_max: f_max(budget.product_over_hbar),
        nonclassicality: nonclassicality(&budget),
        input_moments,
        output_moments: Some(output_moments),
        diagnostics: None,
        fringes: Some(fringes),
        fidelity_estimate: None,
        warnings: design_check(&config.source, &config.collision),
        hist_x: None,
        hist_p: None,
        density_x: Some(DensityPair {
            input: input_x,
            output: output_x,
        }),
        density_p: Some(DensityPair {
            input: input_p,
            output: output_p,
        }),
    })
}

/// One row of a parameter sweep. Formula columns are exact; the Monte Carlo
/// fidelity column is filled only when requested. Rows whose parameter value
/// violates a formula precondition carry the error in `note`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub product_over_hbar: Option<f64>,
    pub f_max: Option<f64>,
    pub fidelity_estimate: Option<f64>,
    pub note: Option<String>,
}

/// Evaluate the error budget (and optionally a Monte Carlo run) across a
/// parameter grid. `parameter` is one of the config keys
/// `D_m`, `dd_m`, `dd_v_m`, `v_y_mps`.
pub fn sweep(
    config: &RunConfig,
    parameter: &str,
    values: &[f64],
    with_mc: bool,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = config.clone();
        match parameter {
            "D_m" => cfg.source.com_size = value,
            "dd_m" => cfg.source.frag_spread = value,
            "dd_v_m" => cfg.source.vib_spread = value,
            "v_y_mps" => cfg.collision.approach_speed = value,
            other => return Err(Error::UnknownSweepParameter(other.to_string())),
        }
        match cfg.error_budget() {
            Ok(budget) => {
                let fidelity_estimate = if with_mc {
                    run_ensemble(&cfg)?.fidelity_estimate
                } else {
                    None
                };
                rows.push(SweepRow {
                    value,
                    product_over_hbar: Some(budget.product_over_hbar),
                    f_max: Some(f_max(budget.product_over_hbar)),
                    fidelity_estimate,
                    note: None,
                });
            }
            Err(err) => rows.push(SweepRow {
                value,
                product_over_hbar: None,
                f_max: None,
                fidelity_estimate: None,
                note: Some(err.to_string()),
            }),
        }
    }
    Ok(rows)
}
