//! Dissociation EPR-pair source: derived source quantities and the
//! correlated two-particle sampler.
//!
//! The post-dissociation two-particle state is a product of Gaussians in the
//! collective coordinates: position difference (spread `dd`, the internuclear
//! spread at completion of dissociation), position sum (spread `D`, the COM
//! wavepacket size), momentum sum (spread `hbar/D`, the molecular
//! minimum-uncertainty COM spread) and momentum difference (spread
//! `hbar/dd`). Momentum-sum times position-difference spreads multiply to
//! `hbar/s`, which is what makes the pair an approximate EPR state for
//! squeezing `s = D/dd >> 1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::collision::{collision_range, CollisionParams};
use crate::constants::{BOLTZMANN, HBAR, IonSpecies};
use crate::phasespace::PhasePoint;
use crate::{Error, Result};

/// Source-stage experimental parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    pub species: IonSpecies,
    /// COM wavepacket size D (m); std of x0+x1.
    pub com_size: f64,
    /// Vibrational internuclear spread before dissociation (m).
    pub vib_spread: f64,
    /// Internuclear spread at completion of dissociation, Δd (m).
    pub frag_spread: f64,
    /// Spread of the fragments' velocity difference (m/s).
    pub vel_diff_spread: f64,
    /// Aperture size L of the dissociation region (m).
    pub aperture: f64,
    /// Beam speed along the propagation axis (m/s); metadata only.
    pub beam_speed: f64,
    /// Optional focusing-lens resolution floor (m), inflating the
    /// position-difference spread in quadrature at the collision plane.
    pub lens_floor: f64,
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.com_size > 0.0) {
            return Err(Error::invalid("D_m", "D > 0"));
        }
        if !(self.vib_spread > 0.0) {
            return Err(Error::invalid("dd_v_m", "dd_v > 0"));
        }
        if self.frag_spread < self.vib_spread {
            return Err(Error::invalid("dd_m", "dd >= dd_v"));
        }
        if self.vel_diff_spread < 0.0 {
            return Err(Error::invalid("dv01_mps", "dv01 >= 0"));
        }
        if !(self.aperture > 0.0) {
            return Err(Error::invalid("L_m", "L > 0"));
        }
        if self.lens_floor < 0.0 {
            return Err(Error::invalid("lens_floor_m", "lens_floor >= 0"));
        }
        Ok(())
    }

    /// Temperature at which the molecular COM is coherent over `D`:
    /// `T = hbar^2 / (M k_B D^2)`.
    pub fn com_temperature(&self) -> Result<f64> {
        com_temperature(&self.species, self.com_size)
    }

    /// Squeezing parameter `s = D / dd`.
    pub fn squeezing(&self) -> Result<f64> {
        squeezing_parameter(self.com_size, self.frag_spread)
    }

    /// The collective-mode Gaussian spreads of the pair at the collision
    /// plane (the lens restores the dissociation-time spread up to its
    /// resolution floor).
    pub fn pair_state(&self) -> Result<EprPairState> {
        self.validate()?;
        let dd = (self.frag_spread * self.frag_spread + self.lens_floor * self.lens_floor).sqrt();
        if dd > self.com_size {
            return Err(Error::invalid(
                "dd_m",
                "dd <= D (position-difference spread cannot exceed the COM size)",
            ));
        }
        Ok(EprPairState {
            sigma_xdiff: dd,
            sigma_xsum: self.com_size,
            sigma_psum: HBAR / self.com_size,
            sigma_pdiff: HBAR / dd,
        })
    }
}

/// `T = hbar^2 / (M k_B D^2)` for molecule mass M.
pub fn com_temperature(species: &IonSpecies, com_size: f64) -> Result<f64> {
    if !(com_size > 0.0) {
        return Err(Error::invalid("D_m", "D > 0"));
    }
    Ok(HBAR * HBAR / (species.molecule_mass * BOLTZMANN * com_size * com_size))
}

/// `s = D / dd`.
pub fn squeezing_parameter(com_size: f64, frag_spread: f64) -> Result<f64> {
    if !(com_size > 0.0) {
        return Err(Error::invalid("D_m", "D > 0"));
    }
    if !(frag_spread > 0.0) {
        return Err(Error::invalid("dd_m", "dd > 0"));
    }
    Ok(com_size / frag_spread)
}

/// Free spreading of the position-difference wavepacket:
/// `dx(t) = sqrt(dd0^2 + (dv01 t)^2)`.
pub fn spread_at(dd0: f64, dv01: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::invalid("t", "t >= 0"));
    }
    Ok((dd0 * dd0 + dv01 * dv01 * t * t).sqrt())
}

/// Two-particle correlated Gaussian given by four collective-mode spreads.
///
/// Both collective mode pairs are at the purity bound:
/// `sigma_xdiff * sigma_pdiff = sigma_xsum * sigma_psum = hbar` (the
/// conjugate pairs are (x0-x1, (p0-p1)/2) and (x0+x1, (p0+p1)/2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprPairState {
    /// Std of x0 - x1 (m).
    pub sigma_xdiff: f64,
    /// Std of x0 + x1 (m).
    pub sigma_xsum: f64,
    /// Std of p0 + p1 (kg·m/s).
    pub sigma_psum: f64,
    /// Std of p0 - p1 (kg·m/s).
    pub sigma_pdiff: f64,
}

impl EprPairState {
    /// The EPR figure of merit `std(x0-x1) * std(p0+p1)`; equals `hbar/s`.
    pub fn epr_product(&self) -> f64 {
        self.sigma_xdiff * self.sigma_psum
    }

    /// EPR product in units of hbar (< 1 beats the naive limit).
    pub fn epr_product_over_hbar(&self) -> f64 {
        self.epr_product() / HBAR
    }

    /// EPR product in units of hbar/2 (< 1 is strictly sub-Heisenberg).
    pub fn epr_product_over_half_hbar(&self) -> f64 {
        self.epr_product() / (HBAR / 2.0)
    }

    /// Draw one correlated pair: independent zero-mean Gaussians for the four
    /// collective coordinates, solved for the particle coordinates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (PhasePoint, PhasePoint) {
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let xdiff = self.sigma_xdiff * z[0];
        let xsum = self.sigma_xsum * z[1];
        let psum = self.sigma_psum * z[2];
        let pdiff = self.sigma_pdiff * z[3];
        (
            PhasePoint {
                x: 0.5 * (xsum + xdiff),
                p: 0.5 * (psum + pdiff),
            },
            PhasePoint {
                x: 0.5 * (xsum - xdiff),
                p: 0.5 * (psum - pdiff),
            },
        )
    }
}

/// Check the geometry/scale inequalities the measurement scheme relies on.
///
/// "Much less than" uses a factor-of-5 threshold, "of the same order" a
/// factor-of-3 band. Returns one warning string per violated inequality.
pub fn design_check(source: &SourceParams, collision: &CollisionParams) -> Vec<String> {
    let mut warnings = Vec::new();
    let r_col = collision_range(&collision.species, collision.approach_speed)
        .unwrap_or(f64::INFINITY);
    if 5.0 * collision.packet_extent > r_col {
        warnings.push(format!(
            "dd_c << R_col violated: dd_c = {:.3e} m vs R_col = {:.3e} m (need 5*dd_c <= R_col)",
            collision.packet_extent, r_col
        ));
    }
    let ratio = r_col / source.com_size;
    if !(1.0 / 3.0..=3.0).contains(&ratio) {
        warnings.push(format!(
            "R_col ~ D violated: R_col/D = {ratio:.3} outside [1/3, 3]"
        ));
    }
    if source.com_size > source.aperture {
        warnings.push(format!(
            "D <~ L violated: D = {:.3e} m exceeds aperture L = {:.3e} m",
            source.com_size, source.aperture
        ));
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::RunningMoments;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn li_source() -> SourceParams {
        SourceParams {
            species: IonSpecies::preset("Li+").unwrap(),
            com_size: 300e-9,
            vib_spread: 0.1e-9,
            frag_spread: 1e-9,
            vel_diff_spread: 0.0,
            aperture: 1e-6,
            beam_speed: 1000.0,
            lens_floor: 0.0,
        }
    }

    fn li_collision() -> CollisionParams {
        CollisionParams {
            species: IonSpecies::preset("Li+").unwrap(),
            approach_speed: 300.0,
            packet_extent: 10e-9,
            instrument_momentum: IonSpecies::preset("Li+").unwrap().fragment_mass * 1e-3,
        }
    }

    #[test]
    fn com_temperature_paper_values() {
        let h2 = IonSpecies::preset("H2+").unwrap();
        let t = com_temperature(&h2, 300e-9).unwrap();
        assert!((2.5e-6..3.1e-6).contains(&t), "T(H2+) = {t}");
        let li2 = IonSpecies::preset("Li2-").unwrap();
        let t = com_temperature(&li2, 300e-9).unwrap();
        assert!((0.35e-6..0.45e-6).contains(&t), "T(Li2-) = {t}");
    }

    #[test]
    fn com_temperature_inverse_square_scaling() {
        let li2 = IonSpecies::preset("Li2-").unwrap();
        let t1 = com_temperature(&li2, 300e-9).unwrap();
        let t2 = com_temperature(&li2, 600e-9).unwrap();
        assert!((t1 / t2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn squeezing_values() {
        assert!((squeezing_parameter(300e-9, 1e-9).unwrap() - 300.0).abs() < 1e-12 * 300.0);
        assert_eq!(squeezing_parameter(1e-9, 1e-9).unwrap(), 1.0);
        assert!(squeezing_parameter(-1.0, 1e-9).is_err());
        assert!((squeezing_parameter(300e-9, 15e-9).unwrap() - 20.0).abs() < 1e-12 * 20.0);
    }

    #[test]
    fn spreading_law() {
        assert_eq!(spread_at(3e-9, 0.0, 0.0).unwrap(), 3e-9);
        // 3-4-5 triangle
        let s = spread_at(3e-9, 4e-9, 1.0).unwrap();
        assert!((s - 5e-9).abs() < 1e-12 * 5e-9);
        assert!(spread_at(1e-9, 1.0, -1.0).is_err());
        let mut prev = 0.0;
        for k in 0..10 {
            let s = spread_at(1e-9, 1e-3, k as f64 * 1e-6).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn pair_state_spreads_and_products() {
        let st = li_source().pair_state().unwrap();
        assert_eq!(st.sigma_xdiff, 1e-9);
        assert_eq!(st.sigma_xsum, 300e-9);
        // EPR product = hbar/s
        let s = 300.0;
        assert!((st.epr_product() - HBAR / s).abs() / (HBAR / s) < 1e-12);
        // purity products exactly hbar
        assert!((st.sigma_xdiff * st.sigma_pdiff - HBAR).abs() / HBAR < 1e-12);
        assert!((st.sigma_xsum * st.sigma_psum - HBAR).abs() / HBAR < 1e-12);
        // momentum-sum spread as a velocity: ~30 mm/s for Li at D = 300 nm
        let v = st.sigma_psum / li_source().species.fragment_mass;
        assert!((0.028..0.032).contains(&v), "dPx/m = {v}");
    }

    #[test]
    fn pair_state_unentangled_limit() {
        let mut p = li_source();
        p.frag_spread = p.com_size;
        let st = p.pair_state().unwrap();
        assert!((st.epr_product() - HBAR).abs() / HBAR < 1e-12);
        assert!((st.epr_product_over_hbar() - 1.0).abs() < 1e-12);
        assert!((st.epr_product_over_half_hbar() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lens_floor_inflates_xdiff_in_quadrature() {
        let mut p = li_source();
        p.lens_floor = 1e-9;
        let st = p.pair_state().unwrap();
        let expect = (1e-18f64 + 1e-18).sqrt();
        assert!((st.sigma_xdiff - expect).abs() < 1e-24);
    }

    #[test]
    fn sampler_collective_variances() {
        let st = li_source().pair_state().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 50_000;
        let mut xdiff = RunningMoments::default();
        let mut psum = RunningMoments::default();
        let mut x0 = RunningMoments::default();
        let mut cross = 0.0;
        for _ in 0..n {
            let (a, b) = st.sample(&mut rng);
            xdiff.add(a.x - b.x);
            psum.add(a.p + b.p);
            x0.add(a.x);
            cross += (a.x - b.x) * (a.p + b.p);
        }
        let vr = xdiff.variance() / (st.sigma_xdiff * st.sigma_xdiff);
        assert!((0.97..1.03).contains(&vr), "Var(x0-x1) ratio {vr}");
        let vr = psum.variance() / (st.sigma_psum * st.sigma_psum);
        assert!((0.97..1.03).contains(&vr), "Var(p0+p1) ratio {vr}");
        // single-particle variance (D^2 + dd^2)/4 dwarfs the difference variance
        let expect = (st.sigma_xsum * st.sigma_xsum + st.sigma_xdiff * st.sigma_xdiff) / 4.0;
        let vr = x0.variance() / expect;
        assert!((0.97..1.03).contains(&vr), "Var(x0) ratio {vr}");
        assert!(x0.variance() > 100.0 * xdiff.variance());
        // independent collective modes: normalized covariance within 4/sqrt(n)
        let rho = cross / (n as f64) / (st.sigma_xdiff * st.sigma_psum);
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "rho = {rho}");
    }

    #[test]
    fn sampler_deterministic() {
        let st = li_source().pair_state().unwrap();
        let a = st.sample(&mut ChaCha12Rng::seed_from_u64(9));
        let b = st.sample(&mut ChaCha12Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn design_check_paper_parameters_clean() {
        let warnings = design_check(&li_source(), &li_collision());
        assert!(warnings.is_empty(), "unexpected warnings: {warnings:?}");
    }

    #[test]
    fn design_check_flags_violations() {
        let src = li_source();
        let mut col = li_collision();
        col.packet_extent = src.com_size; // dd_c = D
        let warnings = design_check(&src, &col);
        assert!(warnings.iter().any(|w| w.contains("dd_c << R_col")));

        let mut src2 = li_source();
        src2.com_size = 2.0 * src2.aperture;
        let warnings = design_check(&src2, &li_collision());
        assert!(warnings.iter().any(|w| w.contains("D <~ L")));
    }

    #[test]
    fn source_validation_names_inequality() {
        let mut p = li_source();
        p.com_size = -1.0;
        let err = p.pair_state().unwrap_err();
        assert!(err.to_string().contains("D > 0"), "{err}");
        let mut p = li_source();
        p.frag_spread = 0.01e-9; // below vib_spread
        assert!(p.pair_state().is_err());
    }

    #[test]
    fn pair_spread_cannot_exceed_com_size() {
        let mut p = li_source();
        p.frag_spread = 2.0 * p.com_size;
        let err = p.pair_state().unwrap_err();
        assert!(err.to_string().contains("dd <= D"), "{err}");
        // the lens floor counts toward the bound too
        let mut p = li_source();
        p.lens_floor = 2.0 * p.com_size;
        assert!(p.pair_state().is_err());
    }
}
