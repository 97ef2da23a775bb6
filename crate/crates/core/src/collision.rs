//! Coulomb-collision joint measurement of the colliding pair's position
//! difference and momentum sum.
//!
//! Two equally charged particles approach with opposite transverse speeds
//! `±v_y`; their repulsive Coulomb deflection angle encodes the transverse
//! offset `x_minus = x1 - x2` through the Rutherford relation, and the
//! momentum sum is conserved through the collision and read out separately.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::{EPSILON_0, HBAR, IonSpecies};
use crate::phasespace::PhasePoint;
use crate::teleport::NoiseBudget;
use crate::{Error, Result};

/// Collision-stage experimental parameters. Both colliding particles are the
/// same species with the same charge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionParams {
    pub species: IonSpecies,
    /// Transverse approach speed of each particle (m/s).
    pub approach_speed: f64,
    /// Wavepacket extent along the approach/beam axes (m).
    pub packet_extent: f64,
    /// Instrumental momentum resolution of the Doppler readout (kg·m/s).
    pub instrument_momentum: f64,
}

impl CollisionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.approach_speed > 0.0) {
            return Err(Error::invalid("v_y_mps", "v_y > 0"));
        }
        if !(self.packet_extent > 0.0) {
            return Err(Error::invalid("dd_c_m", "dd_c > 0"));
        }
        if self.instrument_momentum < 0.0 {
            return Err(Error::invalid("p_instr", "p_instr >= 0"));
        }
        Ok(())
    }

    /// Transverse momentum of each particle, `p_y = m v_y`.
    pub fn transverse_momentum(&self) -> f64 {
        self.species.fragment_mass * self.approach_speed
    }

    pub fn range(&self) -> Result<f64> {
        collision_range(&self.species, self.approach_speed)
    }

    /// Default momentum-measurement resolution: the COM momentum fluctuation
    /// of the pair combined in quadrature with the instrument floor.
    pub fn momentum_resolution(&self, com_size: f64) -> f64 {
        let dpx = HBAR / com_size;
        (dpx * dpx + self.instrument_momentum * self.instrument_momentum).sqrt()
    }

    /// Joint noisy measurement of the colliding pair (particle 1 of the EPR
    /// pair and the input particle 2).
    ///
    /// The momentum sum uses pre-collision values (it is conserved); the
    /// deflection angle of the true offset is kept as a diagnostic.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        particle1: PhasePoint,
        particle2: PhasePoint,
        noise: &NoiseBudget,
        rng: &mut R,
    ) -> Result<MeasurementRecord> {
        let r_col = self.range()?;
        let x_minus = particle1.x - particle2.x;
        let p_plus = particle1.p + particle2.p;
        let nx: f64 = rng.sample(StandardNormal);
        let np: f64 = rng.sample(StandardNormal);
        Ok(MeasurementRecord {
            x_minus_meas: x_minus + noise.dx_meas * nx,
            p_plus_meas: p_plus + noise.dp_meas * np,
            theta: deflection_angle(x_minus, r_col)?,
        })
    }
}

/// Outcome of one collision measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Measured x1 - x2 (m).
    pub x_minus_meas: f64,
    /// Measured p1 + p2 (kg·m/s).
    pub p_plus_meas: f64,
    /// Relative deflection angle of the true offset (rad), in (0, 2π).
    pub theta: f64,
}

/// Characteristic Coulomb collision range `R_col = m q^2 / (4 pi eps0 p_y^2)`
/// with `p_y = m v_y`: the offset at which the relative deflection is 90°.
pub fn collision_range(species: &IonSpecies, v_y: f64) -> Result<f64> {
    if !species.is_charged() {
        return Err(Error::invalid("species", "q != 0 for collision formulas"));
    }
    if !(v_y > 0.0) {
        return Err(Error::invalid("v_y", "v_y > 0"));
    }
    let p_y = species.fragment_mass * v_y;
    Ok(species.fragment_mass * species.charge * species.charge / (4.0 * PI * EPSILON_0 * p_y * p_y))
}

/// Rutherford relative deflection angle
/// `theta = pi - 2 atan(x_minus / r_col)`, strictly decreasing, in (0, 2π).
pub fn deflection_angle(x_minus: f64, r_col: f64) -> Result<f64> {
    if !(r_col > 0.0) {
        return Err(Error::invalid("r_col", "r_col > 0"));
    }
    Ok(PI - 2.0 * (x_minus / r_col).atan())
}

/// Inverse of [`deflection_angle`]: `x_minus = r_col tan((pi - theta)/2)`.
pub fn invert_deflection(theta: f64, r_col: f64) -> Result<f64> {
    if !(r_col > 0.0) {
        return Err(Error::invalid("r_col", "r_col > 0"));
    }
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::invalid("theta", "theta in (0, 2*pi)"));
    }
    Ok(r_col * ((PI - theta) / 2.0).tan())
}

/// Resolution of the position-difference readout inferred from the deflection
/// angle: `dx_meas = pi eps0 hbar D^2 p_y / (2 q^2 m dd_v)`.
///
/// Valid only above the momentum threshold of [`validity_threshold`]; below
/// it the error carries both sides of the comparison.
pub fn position_resolution(
    species: &IonSpecies,
    com_size: f64,
    vib_spread: f64,
    v_y: f64,
) -> Result<f64> {
    if !(com_size > 0.0) {
        return Err(Error::invalid("D_m", "D > 0"));
    }
    if !(vib_spread > 0.0) {
        return Err(Error::invalid("dd_v_m", "dd_v > 0"));
    }
    let threshold = validity_threshold(species, com_size)?;
    let p_y = species.fragment_mass * v_y;
    if p_y < threshold {
        return Err(Error::BelowValidityThreshold {
            p_y,
            threshold,
            v_y,
            v_threshold: threshold / species.fragment_mass,
        });
    }
    let q2 = species.charge * species.charge;
    Ok(PI * EPSILON_0 * HBAR * com_size * com_size * p_y
        / (2.0 * q2 * species.fragment_mass * vib_spread))
}

/// Momentum threshold for the deflection readout:
/// `p_y >= sqrt(m q^2 / (4 pi eps0 D))`.
pub fn validity_threshold(species: &IonSpecies, com_size: f64) -> Result<f64> {
    if !species.is_charged() {
        return Err(Error::invalid("species", "q != 0 for collision formulas"));
    }
    if !(com_size > 0.0) {
        return Err(Error::invalid("D_m", "D > 0"));
    }
    Ok(
        (species.fragment_mass * species.charge * species.charge
            / (4.0 * PI * EPSILON_0 * com_size))
            .sqrt(),
    )
}
