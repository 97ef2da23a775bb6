//! Single-particle phase-space states, trajectory sampling, density grids,
//! Gaussian coarse-graining, and overlap fidelity.
//!
//! Trajectory sampling is exact for the Gaussian states used here: their
//! Wigner functions are non-negative, so classical trajectories drawn from
//! them reproduce all quantum marginals. Two-peak superpositions have
//! negative Wigner regions and are handled through density convolution
//! instead of sampling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::{Error, Result};

/// One classical trajectory sample: transverse position (m) and momentum
/// (kg·m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

/// A single-mode phase-space Gaussian.
///
/// `corr` is the dimensionless x–p correlation coefficient. The state is a
/// valid pure state only if `sigma_x * sigma_p * sqrt(1 - corr^2) >= hbar/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub corr: f64,
}

impl GaussianState {
    pub fn new(mean_x: f64, mean_p: f64, sigma_x: f64, sigma_p: f64, corr: f64) -> Result<Self> {
        if !(sigma_x > 0.0) || !sigma_x.is_finite() {
            return Err(Error::invalid("sigma_x", "sigma_x > 0"));
        }
        if !(sigma_p > 0.0) || !sigma_p.is_finite() {
            return Err(Error::invalid("sigma_p", "sigma_p > 0"));
        }
        if !(corr.abs() < 1.0) {
            return Err(Error::invalid("corr", "|corr| < 1"));
        }
        Ok(GaussianState {
            mean_x,
            mean_p,
            sigma_x,
            sigma_p,
            corr,
        })
    }

    /// Zero-mean minimum-uncertainty wavepacket of the given position spread:
    /// `sigma_p = hbar / (2 sigma_x)`, no correlation.
    pub fn mus(sigma_x: f64) -> Result<Self> {
        if !(sigma_x > 0.0) || !sigma_x.is_finite() {
            return Err(Error::invalid("sigma_x", "sigma_x > 0"));
        }
        GaussianState::new(0.0, 0.0, sigma_x, HBAR / (2.0 * sigma_x), 0.0)
    }

    /// Uncertainty product sigma_x*sigma_p*sqrt(1-corr^2) relative to hbar/2.
    pub fn purity_ratio(&self) -> f64 {
        self.sigma_x * self.sigma_p * (1.0 - self.corr * self.corr).sqrt() / (HBAR / 2.0)
    }

    /// True for an uncorrelated minimum-uncertainty state (to 1e-12 relative).
    pub fn is_mus(&self) -> bool {
        self.corr == 0.0 && (self.purity_ratio() - 1.0).abs() < 1e-12
    }

    /// Draw one phase-space point from the state's bivariate normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PhasePoint {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let t = (1.0 - self.corr * self.corr).sqrt();
        PhasePoint {
            x: self.mean_x + self.sigma_x * z1,
            p: self.mean_p + self.sigma_p * (self.corr * z1 + t * z2),
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<PhasePoint> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Marginal position density on a grid.
    pub fn position_density(&self, grid: &GridSpec) -> Result<DensityGrid> {
        gaussian_density(grid, self.mean_x, self.sigma_x)
    }

    /// Marginal momentum density on a grid.
    pub fn momentum_density(&self, grid: &GridSpec) -> Result<DensityGrid> {
        gaussian_density(grid, self.mean_p, self.sigma_p)
    }
}

fn gaussian_density(grid: &GridSpec, mean: f64, sigma: f64) -> Result<DensityGrid> {
    let axis = grid.axis()?;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let values = axis
        .iter()
        .map(|&x| {
            let z = (x - mean) / sigma;
            norm * (-0.5 * z * z).exp()
        })
        .collect();
    Ok(DensityGrid { axis, values })
}

/// Two-peak superposition: equal-weight Gaussian wavepackets of width
/// `peak_sigma` centered at `mean_x ± separation/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatState {
    pub separation: f64,
    pub peak_sigma: f64,
    pub mean_x: f64,
}

impl CatState {
    pub fn new(separation: f64, peak_sigma: f64, mean_x: f64) -> Result<Self> {
        if !(separation > 0.0) {
            return Err(Error::invalid("separation", "a > 0"));
        }
        if !(peak_sigma > 0.0) {
            return Err(Error::invalid("peak_sigma", "peak_sigma > 0"));
        }
        Ok(CatState {
            separation,
            peak_sigma,
            mean_x,
        })
    }

    /// Half-width of the position support the grid must cover (around mean_x).
    pub fn position_support(&self) -> f64 {
        self.separation / 2.0 + 6.0 * self.peak_sigma
    }

    /// Half-width of the momentum support the grid must cover (around 0).
    pub fn momentum_support(&self) -> f64 {
        6.0 * HBAR / (2.0 * self.peak_sigma)
    }

    /// Fringe spatial frequency of the momentum density: the two peaks
    /// interfere with momentum-domain period 2*pi*hbar/separation.
    pub fn fringe_frequency(&self) -> f64 {
        self.separation / HBAR
    }

    /// Position density |G(x - a/2) + G(x + a/2)|^2, normalized on the grid.
    ///
    /// The coherent cross term is 2*exp(-a^2/(8 sigma^2))*G0(x); it only
    /// matters when the peaks overlap.
    pub fn position_density(&self, grid: &GridSpec) -> Result<DensityGrid> {
        let axis = grid.axis()?;
        grid.require_cover(self.mean_x, self.position_support())?;
        let s2 = 2.0 * self.peak_sigma * self.peak_sigma;
        let half = self.separation / 2.0;
        let cross = (-self.separation * self.separation / (4.0 * s2)).exp();
        let values: Vec<f64> = axis
            .iter()
            .map(|&x| {
                let u = x - self.mean_x;
                let right = (-(u - half) * (u - half) / s2).exp();
                let left = (-(u + half) * (u + half) / s2).exp();
                let mid = 2.0 * cross * (-u * u / s2).exp();
                right + left + mid
            })
            .collect();
        DensityGrid { axis, values }.normalized()
    }

    /// Momentum density: Gaussian envelope times cos^2(a p / (2 hbar)),
    /// normalized on the grid.
    pub fn momentum_density(&self, grid: &GridSpec) -> Result<DensityGrid> {
        let axis = grid.axis()?;
        grid.require_cover(0.0, self.momentum_support())?;
        let s = self.peak_sigma;
        let values: Vec<f64> = axis
            .iter()
            .map(|&p| {
                let envelope = (-2.0 * s * s * p * p / (HBAR * HBAR)).exp();
                let phase = self.separation * p / (2.0 * HBAR);
                envelope * phase.cos().powi(2)
            })
            .collect();
        DensityGrid { axis, values }.normalized()
    }
}

/// Uniform grid specification: `points` samples spanning [min, max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(max > min) {
            return Err(Error::invalid("grid", "max > min"));
        }
        if points < 2 {
            return Err(Error::invalid("grid points", "points >= 2"));
        }
        Ok(GridSpec { min, max, points })
    }

    /// Symmetric span `center ± half_span`.
    pub fn symmetric(center: f64, half_span: f64, points: usize) -> Result<Self> {
        GridSpec::new(center - half_span, center + half_span, points)
    }

    pub fn axis(&self) -> Result<Vec<f64>> {
        GridSpec::new(self.min, self.max, self.points)?;
        let step = (self.max - self.min) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.min + step * i as f64)
            .collect())
    }

    fn require_cover(&self, center: f64, half_span: f64) -> Result<()> {
        if self.min > center - half_span || self.max < center + half_span {
            return Err(Error::GridCoverage {
                lo: self.min,
                hi: self.max,
                required: half_span,
            });
        }
        Ok(())
    }
}

/// A probability density sampled on a uniform axis; trapezoid integral is the
/// probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn step(&self) -> f64 {
        (self.axis[self.axis.len() - 1] - self.axis[0]) / (self.axis.len() - 1) as f64
    }

    /// Trapezoid integral over the whole grid.
    pub fn integral(&self) -> f64 {
        let h = self.step();
        let n = self.values.len();
        let interior: f64 = self.values[1..n - 1].iter().sum();
        h * (interior + 0.5 * (self.values[0] + self.values[n - 1]))
    }

    pub fn normalized(self) -> Result<DensityGrid> {
        let total = self.integral();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("density", "integral > 0"));
        }
        Ok(DensityGrid {
            axis: self.axis,
            values: self.values.iter().map(|v| v / total).collect(),
        })
    }

    /// Mean of the density (trapezoid moments).
    pub fn mean(&self) -> f64 {
        let h = self.step();
        let n = self.values.len();
        let mut acc = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * self.axis[i] * self.values[i];
        }
        acc * h / self.integral()
    }

    /// Variance of the density (trapezoid moments).
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let h = self.step();
        let n = self.values.len();
        let mut acc = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let d = self.axis[i] - mu;
            acc += w * d * d * self.values[i];
        }
        acc * h / self.integral()
    }

    /// Gaussian coarse-graining: convolution with a zero-mean Gaussian kernel
    /// of standard deviation `sigma`, by direct summation with the kernel
    /// truncated at 6 sigma. `sigma = 0` returns the grid unchanged.
    ///
    /// Requires the grid to resolve the kernel: spacing < sigma/3.
    pub fn convolved(&self, sigma: f64) -> Result<DensityGrid> {
        if sigma < 0.0 {
            return Err(Error::invalid("sigma", "sigma >= 0"));
        }
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        let h = self.step();
        if h >= sigma / 3.0 {
            return Err(Error::GridTooCoarse { spacing: h, sigma });
        }
        let half = (6.0 * sigma / h).ceil() as i64;
        let mut weights = Vec::with_capacity(2 * half as usize + 1);
        for k in -half..=half {
            let d = k as f64 * h;
            weights.push((-d * d / (2.0 * sigma * sigma)).exp());
        }
        // Discrete normalization keeps total mass exact away from the edges.
        let wsum: f64 = weights.iter().sum();
        let n = self.values.len() as i64;
        let mut out = vec![0.0; self.values.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let i = i as i64;
            let mut acc = 0.0;
            let lo = (i - half).max(0);
            let hi = (i + half).min(n - 1);
            for j in lo..=hi {
                acc += self.values[j as usize] * weights[(j - i + half) as usize];
            }
            *o = acc / wsum;
        }
        Ok(DensityGrid {
            axis: self.axis.clone(),
            values: out,
        })
    }

    /// Cumulative trapezoid integral from the grid start to `x` (linear
    /// interpolation inside the straddled cell). `x` must lie on the grid.
    pub fn cdf_at(&self, x: f64) -> Result<f64> {
        let lo = self.axis[0];
        let hi = self.axis[self.axis.len() - 1];
        if x < lo || x > hi {
            return Err(Error::GridCoverage {
                lo,
                hi,
                required: x.abs(),
            });
        }
        let h = self.step();
        let pos = (x - lo) / h;
        let cell = (pos.floor() as usize).min(self.axis.len() - 2);
        let mut acc = 0.0;
        for j in 0..cell {
            acc += 0.5 * (self.values[j] + self.values[j + 1]) * h;
        }
        let frac = x - self.axis[cell];
        if frac > 0.0 {
            let v_at = self.values[cell]
                + (self.values[cell + 1] - self.values[cell]) * (frac / h);
            acc += 0.5 * (self.values[cell] + v_at) * frac;
        }
        Ok(acc)
    }

    /// Fringe contrast at a given spatial frequency: twice the modulus of the
    /// density's characteristic function at `omega`, i.e. the Michelson
    /// visibility of a modulation `1 + V cos(omega t)` under the envelope.
    ///
    /// Convolving with a Gaussian of std `k` multiplies this quantity by
    /// exactly exp(-omega^2 k^2 / 2) at every frequency.
    pub fn fringe_contrast(&self, omega: f64) -> f64 {
        let n = self.values.len();
        let (mut re, mut im, mut mass) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let v = w * self.values[i];
            let phase = omega * self.axis[i];
            re += v * phase.cos();
            im += v * phase.sin();
            mass += v;
        }
        2.0 * (re * re + im * im).sqrt() / mass
    }

    /// Peak-to-valley fringe visibility: (max - min)/(max + min) using the
    /// global maximum and the deepest local minimum adjacent to it, both
    /// refined by 3-point parabolic interpolation (valley clamped at 0).
    ///
    /// Returns 0 for fringe-free densities (no interior local minimum).
    pub fn peak_valley_visibility(&self) -> f64 {
        let n = self.values.len();
        let imax = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let peak = self.refine_extremum(imax);
        let mut valley: Option<f64> = None;
        // nearest local minimum on each side of the global maximum
        for dir in [-1i64, 1i64] {
            let mut i = imax as i64 + dir;
            while i > 0 && (i as usize) < n - 1 {
                let u = i as usize;
                if self.values[u] <= self.values[u - 1] && self.values[u] <= self.values[u + 1] {
                    let v = self.refine_extremum(u).max(0.0);
                    valley = Some(valley.map_or(v, |cur: f64| cur.min(v)));
                    break;
                }
                i += dir;
            }
        }
        match valley {
            Some(v) if peak + v > 0.0 => (peak - v) / (peak + v),
            _ => 0.0,
        }
    }

    /// Parabolic refinement of the extremum value around grid index i.
    fn refine_extremum(&self, i: usize) -> f64 {
        if i == 0 || i == self.values.len() - 1 {
            return self.values[i];
        }
        let (a, b, c) = (self.values[i - 1], self.values[i], self.values[i + 1]);
        let denom = a - 2.0 * b + c;
        if denom == 0.0 {
            return b;
        }
        let offset = 0.5 * (a - c) / denom;
        b - 0.25 * (a - c) * offset
    }
}

/// Wigner-overlap fidelity between a pure minimum-uncertainty input and the
/// same state coarse-grained by independent Gaussian noise of spreads
/// (`dx_t`, `dp_t`):
///
/// `F = hbar / sqrt((2 sigma_x^2 + dx_t^2)(2 sigma_p^2 + dp_t^2))`
///
/// For noise matched to the input aspect ratio (`dx_t/dp_t = sigma_x/sigma_p`)
/// this reduces to `1/(1 + dx_t*dp_t/hbar)`, the maximum attainable value.
pub fn gaussian_fidelity(input: &GaussianState, dx_t: f64, dp_t: f64) -> Result<f64> {
    if !input.is_mus() {
        return Err(Error::NotMinimumUncertainty {
            product: input.sigma_x * input.sigma_p,
            corr: input.corr,
        });
    }
    if dx_t < 0.0 || dp_t < 0.0 {
        return Err(Error::invalid("noise spread", "dx_t, dp_t >= 0"));
    }
    let sx2 = input.sigma_x * input.sigma_x;
    let sp2 = input.sigma_p * input.sigma_p;
    Ok(HBAR / ((2.0 * sx2 + dx_t * dx_t) * (2.0 * sp2 + dp_t * dp_t)).sqrt())
}

/// Fixed uniform-bin histogram with out-of-range samples tracked separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram1D {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub total: u64,
}

impl Histogram1D {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::invalid("histogram range", "hi > lo"));
        }
        if bins == 0 {
            return Err(Error::invalid("bins", "bins >= 1"));
        }
        let w = (hi - lo) / bins as f64;
        let bin_edges = (0..=bins).map(|i| lo + w * i as f64).collect();
        Ok(Histogram1D {
            bin_edges,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
            total: 0,
        })
    }

    pub fn from_points(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let mut h = Histogram1D::new(lo, hi, bins)?;
        let mut any = false;
        for v in values {
            h.add(v);
            any = true;
        }
        if !any {
            return Err(Error::EmptyInput("histogram needs at least one point"));
        }
        Ok(h)
    }

    pub fn add(&mut self, value: f64) {
        self.total += 1;
        let lo = self.bin_edges[0];
        let hi = self.bin_edges[self.bin_edges.len() - 1];
        if value < lo {
            self.underflow += 1;
            return;
        }
        if value > hi {
            self.overflow += 1;
            return;
        }
        let bins = self.counts.len();
        let w = (hi - lo) / bins as f64;
        let i = (((value - lo) / w) as usize).min(bins - 1);
        self.counts[i] += 1;
    }

    /// Merge a partition partial into this histogram. Bin layouts must match.
    pub fn merge(&mut self, other: &Histogram1D) -> Result<()> {
        if self.bin_edges != other.bin_edges {
            return Err(Error::invalid("histogram merge", "identical bin edges"));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.total += other.total;
        Ok(())
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Piecewise-linear density (tent per bin) whose trapezoid integral over
    /// every bin equals that bin's observed probability mass exactly.
    pub fn implied_density(&self) -> Result<DensityGrid> {
        if self.total == 0 {
            return Err(Error::EmptyInput("histogram is empty"));
        }
        let bins = self.counts.len();
        let w = self.bin_edges[1] - self.bin_edges[0];
        let mut axis = Vec::with_capacity(2 * bins + 1);
        let mut values = Vec::with_capacity(2 * bins + 1);
        for i in 0..bins {
            axis.push(self.bin_edges[i]);
            values.push(0.0);
            axis.push(0.5 * (self.bin_edges[i] + self.bin_edges[i + 1]));
            values.push(2.0 * self.counts[i] as f64 / (self.total as f64 * w));
        }
        axis.push(self.bin_edges[bins]);
        values.push(0.0);
        Ok(DensityGrid { axis, values })
    }
}

/// Total-variation distance between a histogram's normalized bin masses and
/// the masses a reference density assigns to the same bins (plus the
/// out-of-range remainder). Lies in [0, 1].
///
/// The density grid must cover the histogram range.
pub fn tv_distance(hist: &Histogram1D, density: &DensityGrid) -> Result<f64> {
    if hist.total == 0 {
        return Err(Error::EmptyInput("histogram is empty"));
    }
    let total = hist.total as f64;
    let mut acc = 0.0;
    let mut ref_in_range = 0.0;
    let mut cdf_left = density.cdf_at(hist.bin_edges[0])?;
    for (i, &count) in hist.counts.iter().enumerate() {
        let cdf_right = density.cdf_at(hist.bin_edges[i + 1])?;
        let p_ref = cdf_right - cdf_left;
        ref_in_range += p_ref;
        acc += (count as f64 / total - p_ref).abs();
        cdf_left = cdf_right;
    }
    let out_hist = (hist.underflow + hist.overflow) as f64 / total;
    let out_ref = (density.integral() - ref_in_range).max(0.0);
    acc += (out_hist - out_ref).abs();
    Ok(0.5 * acc)
}

/// Streaming mean/variance accumulator with associative-commutative merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl RunningMoments {
    pub fn add(&mut self, value: f64) {
        self.n += 1;
        self.sum += value;
        self.sum_sq += value * value;
    }

    pub fn merge(&mut self, other: &RunningMoments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn mus_spreads() {
        let st = GaussianState::mus(1.5e-7).unwrap();
        // hbar / (3e-7)
        assert!((st.sigma_p - 3.515e-28).abs() / 3.515e-28 < 1e-3);
        assert!((st.sigma_x * st.sigma_p - HBAR / 2.0).abs() / (HBAR / 2.0) < 1e-12);
        assert!(st.is_mus());
    }

    #[test]
    fn mus_rejects_degenerate_width() {
        assert!(GaussianState::mus(0.0).is_err());
        assert!(GaussianState::mus(-1.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let st = GaussianState::mus(1e-7).unwrap();
        let a = st.sample_n(&mut ChaCha12Rng::seed_from_u64(7), 100);
        let b = st.sample_n(&mut ChaCha12Rng::seed_from_u64(7), 100);
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_variance_matches_state() {
        // chi-square 3-sigma band at n = 5e4 is well inside [0.97, 1.03]
        let st = GaussianState::mus(1e-7).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut mx = RunningMoments::default();
        let mut mp = RunningMoments::default();
        for pt in st.sample_n(&mut rng, 50_000) {
            mx.add(pt.x);
            mp.add(pt.p);
        }
        let rx = mx.variance() / (st.sigma_x * st.sigma_x);
        let rp = mp.variance() / (st.sigma_p * st.sigma_p);
        assert!((0.97..1.03).contains(&rx), "var ratio x = {rx}");
        assert!((0.97..1.03).contains(&rp), "var ratio p = {rp}");
        // mean drift bound 4 sigma / sqrt(n)
        let bound = 4.0 * st.sigma_x / (50_000f64).sqrt();
        assert!(mx.mean().abs() < bound);
    }

    #[test]
    fn sampling_reproduces_correlation() {
        // Fisher-z 3-sigma interval at n = 1e5 is ~0.002 wide; assert ±0.01
        let st = GaussianState::new(0.0, 0.0, 1.0, 2.0, 0.9).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 100_000;
        let pts = st.sample_n(&mut rng, n);
        let (mut sx, mut sp, mut sxp, mut sxx, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for pt in &pts {
            sx += pt.x;
            sp += pt.p;
            sxp += pt.x * pt.p;
            sxx += pt.x * pt.x;
            spp += pt.p * pt.p;
        }
        let nf = n as f64;
        let cov = sxp / nf - (sx / nf) * (sp / nf);
        let vx = sxx / nf - (sx / nf) * (sx / nf);
        let vp = spp / nf - (sp / nf) * (sp / nf);
        let r = cov / (vx * vp).sqrt();
        assert!((r - 0.9).abs() < 0.01, "pearson r = {r}");
    }

    #[test]
    fn cat_far_separated_peak_masses() {
        let cat = CatState::new(20.0, 1.0, 0.0).unwrap();
        let grid = GridSpec::symmetric(0.0, cat.position_support(), 4001).unwrap();
        let d = cat.position_density(&grid).unwrap();
        // mass on each half-line
        let left = d.cdf_at(0.0).unwrap();
        assert!((left - 0.5).abs() < 1e-6, "left mass = {left}");
        assert!((d.integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cat_zero_separation_limits() {
        // a -> 0+ reduces to a single Gaussian of width peak_sigma
        let cat = CatState::new(1e-12, 1.0, 0.0).unwrap();
        let grid = GridSpec::symmetric(0.0, 8.0, 2001).unwrap();
        let d = cat.position_density(&grid).unwrap();
        assert!((d.variance() - 1.0).abs() < 1e-4);
        let dp = cat.momentum_density(&GridSpec::symmetric(0.0, cat.momentum_support(), 2001).unwrap()).unwrap();
        // fringe-free
        assert!(dp.peak_valley_visibility() < 1e-6);
    }

    #[test]
    fn cat_grid_coverage_enforced() {
        let cat = CatState::new(10.0, 1.0, 0.0).unwrap();
        let grid = GridSpec::symmetric(0.0, 5.0, 101).unwrap();
        assert!(matches!(
            cat.position_density(&grid),
            Err(Error::GridCoverage { .. })
        ));
    }

    #[test]
    fn cat_momentum_fringe_period() {
        // zeros of cos^2 spaced by 2*pi*hbar/a -> measured via contrast peak
        let cat = CatState::new(12.0 * 1e-9, 1e-9, 0.0).unwrap();
        let grid = GridSpec::symmetric(0.0, cat.momentum_support(), 8001).unwrap();
        let d = cat.momentum_density(&grid).unwrap();
        let omega = cat.fringe_frequency();
        // contrast is near 1 at the true fringe frequency, tiny off-frequency
        assert!(d.fringe_contrast(omega) > 0.999);
        assert!(d.fringe_contrast(0.5 * omega) < 0.05);
        assert!(d.peak_valley_visibility() > 1.0 - 1e-6);
    }

    #[test]
    fn convolve_zero_sigma_is_identity() {
        let st = GaussianState::mus(1.0e-9).unwrap();
        let grid = GridSpec::symmetric(0.0, 8e-9, 501).unwrap();
        let d = st.position_density(&grid).unwrap();
        let c = d.convolved(0.0).unwrap();
        assert_eq!(d, c);
    }

    #[test]
    fn convolve_gaussian_widths_add_in_quadrature() {
        let st = GaussianState::mus(1.0).unwrap();
        let grid = GridSpec::symmetric(0.0, 12.0, 2001).unwrap();
        let d = st.position_density(&grid).unwrap();
        let c = d.convolved(0.5).unwrap();
        let expect = 1.0f64.powi(2) + 0.25;
        assert!((c.variance() - expect).abs() / expect < 1e-4);
        assert!((c.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn convolve_rejects_coarse_grid() {
        let st = GaussianState::mus(1.0).unwrap();
        let grid = GridSpec::symmetric(0.0, 10.0, 21).unwrap(); // spacing 1
        let d = st.position_density(&grid).unwrap();
        assert!(matches!(
            d.convolved(1.0),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn fidelity_examples() {
        let st = GaussianState::mus(1e-8).unwrap();
        assert!((gaussian_fidelity(&st, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        // matched noise with dx*dp = hbar -> classical bound 1/2
        let lam = 2.0f64.sqrt();
        let f = gaussian_fidelity(&st, lam * st.sigma_x, lam * st.sigma_p).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
        // matched, dx*dp = 0.08 hbar -> 1/1.08
        let lam = (2.0 * 0.08f64).sqrt();
        let f = gaussian_fidelity(&st, lam * st.sigma_x, lam * st.sigma_p).unwrap();
        assert!((f - 1.0 / 1.08).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_non_mus() {
        let st = GaussianState::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            gaussian_fidelity(&st, 0.0, 0.0),
            Err(Error::NotMinimumUncertainty { .. })
        ));
    }

    #[test]
    fn fidelity_monotone_in_noise() {
        let st = GaussianState::mus(2e-8).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let dx = 1e-9 * k as f64;
            let f = gaussian_fidelity(&st, dx, 1e-28).unwrap();
            assert!(f < prev || k == 0);
            prev = f;
        }
    }

    #[test]
    fn histogram_basics() {
        let mut h = Histogram1D::new(0.0, 10.0, 5).unwrap();
        for _ in 0..7 {
            h.add(3.0);
        }
        h.add(-1.0);
        h.add(11.0);
        assert_eq!(h.counts[1], 7);
        assert_eq!(h.total, 9);
        assert_eq!(h.underflow, 1);
        assert_eq!(h.overflow, 1);
        assert!(h.in_range() <= h.total);
    }

    #[test]
    fn histogram_single_bin_holds_all() {
        let h = Histogram1D::from_points([1.0, 2.0, 3.0], 0.0, 10.0, 1).unwrap();
        assert_eq!(h.counts[0], 3);
        assert_eq!(h.total, 3);
    }

    #[test]
    fn histogram_rejects_empty() {
        assert!(matches!(
            Histogram1D::from_points(std::iter::empty(), 0.0, 1.0, 4),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn tv_distance_of_implied_density_is_zero() {
        let h = Histogram1D::from_points(
            [0.5, 1.5, 1.6, 2.5, 2.6, 2.7, 3.2],
            0.0,
            4.0,
            4,
        )
        .unwrap();
        let d = h.implied_density().unwrap();
        let tv = tv_distance(&h, &d).unwrap();
        assert!(tv < 1e-12, "tv = {tv}");
    }

    #[test]
    fn tv_distance_rejects_mismatched_ranges() {
        let h = Histogram1D::from_points([0.5], -10.0, 10.0, 4).unwrap();
        let st = GaussianState::mus(1.0).unwrap();
        let d = st.position_density(&GridSpec::symmetric(0.0, 5.0, 101).unwrap()).unwrap();
        assert!(tv_distance(&h, &d).is_err());
    }

    #[test]
    fn tv_distance_of_mus_ensemble_is_small() {
        // Monte Carlo calibration: 5e4 samples, 60 bins over ±4 sigma
        let st = GaussianState::mus(1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let pts = st.sample_n(&mut rng, 50_000);
        let h =
            Histogram1D::from_points(pts.iter().map(|p| p.x), -4.0, 4.0, 60).unwrap();
        let d = st
            .position_density(&GridSpec::symmetric(0.0, 8.0, 4001).unwrap())
            .unwrap();
        let tv = tv_distance(&h, &d).unwrap();
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn running_moments_merge_matches_single_pass() {
        let mut a = RunningMoments::default();
        let mut b = RunningMoments::default();
        let mut whole = RunningMoments::default();
        for i in 0..100 {
            let v = (i as f64).sin();
            whole.add(v);
            if i % 2 == 0 {
                a.add(v);
            } else {
                b.add(v);
            }
        }
        a.merge(&b);
        assert_eq!(a.n, whole.n);
        assert!((a.variance() - whole.variance()).abs() < 1e-15);
    }
}
