//! Phase-space Monte Carlo simulator of continuous-variable teleportation of
//! atomic wavepackets.
//!
//! The pipeline modeled here: a cold diatomic molecular ion dissociates into a
//! pair of fragments whose positions and momenta are strongly correlated (an
//! EPR pair). One fragment Coulomb-collides with the input particle, which
//! realizes a joint measurement of their position difference and momentum sum;
//! the measured values steer position and momentum shifts applied to the other
//! fragment, whose final phase-space distribution reproduces the input up to a
//! Gaussian noise budget.
//!
//! Everything is in SI units. All stochastic operations draw from caller-owned
//! seeded generators, so runs are reproducible.

// validation uses `!(x > 0.0)` so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collision;
pub mod config;
pub mod constants;
pub mod phasespace;
pub mod source;
pub mod teleport;

use thiserror::Error;

/// Errors from parameter validation, formula preconditions, and config parsing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown species `{0}` (known presets: H2+, Li2-, Li+)")]
    UnknownSpecies(String),

    /// A physical invariant was violated; the message names the inequality.
    #[error("invalid `{name}`: {constraint}")]
    InvalidParameter { name: String, constraint: String },

    /// Position-difference readout is only meaningful above the momentum
    /// threshold; carries both sides of the comparison.
    #[error(
        "collision below validity threshold: p_y = {p_y:.6e} kg·m/s < {threshold:.6e} kg·m/s \
         (v_y = {v_y:.3} m/s < {v_threshold:.3} m/s)"
    )]
    BelowValidityThreshold {
        p_y: f64,
        threshold: f64,
        v_y: f64,
        v_threshold: f64,
    },

    #[error("grid spacing {spacing:.6e} too coarse for kernel sigma {sigma:.6e}; need spacing < sigma/3")]
    GridTooCoarse { spacing: f64, sigma: f64 },

    #[error("grid [{lo:.6e}, {hi:.6e}] does not cover required support ±{required:.6e}")]
    GridCoverage { lo: f64, hi: f64, required: f64 },

    #[error("two-peak input has a negative Wigner function and cannot be trajectory-sampled; use the density-convolution pathway (cat run)")]
    NegativeWigner,

    #[error("expected a minimum-uncertainty Gaussian input (sigma_x*sigma_p = hbar/2, corr = 0), got sigma_x*sigma_p = {product:.6e}, corr = {corr}")]
    NotMinimumUncertainty { product: f64, corr: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("unknown sweep parameter `{0}` (one of: D_m, dd_m, dd_v_m, v_y_mps)")]
    UnknownSweepParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &str, constraint: &str) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            constraint: constraint.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub use collision::{
    collision_range, deflection_angle, invert_deflection, position_resolution,
    validity_threshold, CollisionParams, MeasurementRecord,
};
pub use config::Config;
pub use constants::{IonSpecies, PhysicalConstants, SI};
pub use phasespace::{
    gaussian_fidelity, tv_distance, CatState, DensityGrid, GaussianState, GridSpec, Histogram1D,
    PhasePoint,
};
pub use source::{design_check, spread_at, EprPairState, SourceParams};
pub use teleport::{
    error_budget, f_max, nonclassicality, run_cat_output, run_classical, run_ensemble, run_event,
    run_quantum, sweep, ErrorBudget, InputState, NoiseBudget, NoiseEntry, NoiseSpec,
    Nonclassicality, RunConfig, RunMode, RunReport, SweepRow,
};
