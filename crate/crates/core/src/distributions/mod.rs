//! Gaussians, finite mixtures, contaminated sources and uniform boxes.
//!
//! Every spec is validated at construction and is immutable afterwards, so it
//! can be shared across threads freely. Densities are evaluated in the log
//! domain; mixture log-densities sum their terms in sorted order, which makes
//! the value exactly invariant under reordering the components.

mod grid;
mod text;
mod tv;

pub use grid::{CandidateKey, MixtureEntry, ParameterGrid};
pub use text::parse_spec;
pub use tv::{effective_support, integrate_density_1d, tv_distance_1d, tv_distance_mc};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::quad::QuadError;
use crate::seed::{self, Rng};

pub type Point = Vec<f64>;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("operation requires a one-dimensional distribution (got d = {0})")]
    NotOneDimensional(usize),
    #[error("key does not fit the grid: {0}")]
    OutOfGrid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, DistError>;

#[derive(Debug, Clone, PartialEq)]
enum Factor {
    /// Per-coordinate standard deviations.
    Diagonal(Vec<f64>),
    /// Lower Cholesky factor.
    Full(DMatrix<f64>),
}

/// A d-dimensional Gaussian with symmetric positive-definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    mean: Vec<f64>,
    covariance: Vec<f64>,
    factor: Factor,
    log_norm: f64,
}

impl GaussianParams {
    /// `covariance` is row-major d×d.
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(DistError::Invalid("gaussian needs d >= 1".into()));
        }
        if covariance.len() != d * d {
            return Err(DistError::Invalid(format!(
                "covariance has {} entries, expected {}",
                covariance.len(),
                d * d
            )));
        }
        if mean.iter().chain(&covariance).any(|v| !v.is_finite()) {
            return Err(DistError::Invalid("non-finite gaussian parameter".into()));
        }
        let mut diagonal = true;
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (covariance[i * d + j], covariance[j * d + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(DistError::Invalid("covariance is not symmetric".into()));
                }
                if a != 0.0 || b != 0.0 {
                    diagonal = false;
                }
            }
        }
        if diagonal {
            let variances: Vec<f64> = (0..d).map(|i| covariance[i * d + i]).collect();
            return Self::diagonal(mean, variances);
        }
        let m = DMatrix::from_row_slice(d, d, &covariance);
        let chol = m
            .cholesky()
            .ok_or_else(|| DistError::Invalid("covariance is not positive definite".into()))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let log_norm = -0.5 * (d as f64 * LN_2PI + log_det);
        Ok(GaussianParams { mean, covariance, factor: Factor::Full(l), log_norm })
    }

    pub fn diagonal(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || variances.len() != d {
            return Err(DistError::Invalid(format!(
                "diagonal gaussian: {} means, {} variances",
                d,
                variances.len()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(DistError::Invalid("non-finite mean".into()));
        }
        if variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DistError::Invalid("variances must be finite and > 0".into()));
        }
        let mut covariance = vec![0.0; d * d];
        for (i, v) in variances.iter().enumerate() {
            covariance[i * d + i] = *v;
        }
        let log_det: f64 = variances.iter().map(|v| v.ln()).sum();
        let log_norm = -0.5 * (d as f64 * LN_2PI + log_det);
        let sd = variances.iter().map(|v| v.sqrt()).collect();
        Ok(GaussianParams { mean, covariance, factor: Factor::Diagonal(sd), log_norm })
    }

    pub fn univariate(mean: f64, variance: f64) -> Result<Self> {
        Self::diagonal(vec![mean], vec![variance])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major covariance.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn variances(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.covariance[i * d + i]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.factor, Factor::Diagonal(_))
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        match &self.factor {
            Factor::Diagonal(sd) => {
                let mut q = 0.0;
                for ((xi, mi), si) in x.iter().zip(&self.mean).zip(sd) {
                    let z = (xi - mi) / si;
                    q += z * z;
                }
                self.log_norm - 0.5 * q
            }
            Factor::Full(l) => {
                let r = DVector::from_iterator(
                    x.len(),
                    x.iter().zip(&self.mean).map(|(a, b)| a - b),
                );
                let y = l
                    .solve_lower_triangular(&r)
                    .expect("cholesky factor has a positive diagonal");
                self.log_norm - 0.5 * y.norm_squared()
            }
        }
    }

    fn draw(&self, rng: &mut Rng) -> Point {
        let d = self.dim();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        match &self.factor {
            Factor::Diagonal(sd) => {
                z.iter().zip(&self.mean).zip(sd).map(|((z, m), s)| m + s * z).collect()
            }
            Factor::Full(l) => {
                let y = l * DVector::from_vec(z);
                y.iter().zip(&self.mean).map(|(y, m)| m + y).collect()
            }
        }
    }
}

/// Weights on the simplex with one component per weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    components: Vec<DistributionSpec>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, components: Vec<DistributionSpec>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(DistError::Invalid(format!(
                "mixture: {} weights, {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(DistError::Invalid("mixture weights must be >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DistError::Invalid(format!("mixture weights sum to {total}")));
        }
        let d = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d) {
            return Err(DistError::DimensionMismatch { expected: d, got: c.dim() });
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(MixtureParams { weights, log_weights, components })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[DistributionSpec] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }
}

/// `(1 - rate)·base + rate·noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedSpec {
    base: Box<DistributionSpec>,
    noise: Box<DistributionSpec>,
    rate: f64,
}

impl CorruptedSpec {
    pub fn base(&self) -> &DistributionSpec {
        &self.base
    }

    pub fn noise(&self) -> &DistributionSpec {
        &self.noise
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Uniform distribution on the closed box `[low, high]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBox {
    low: Vec<f64>,
    high: Vec<f64>,
    log_density: f64,
}

impl UniformBox {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.is_empty() || low.len() != high.len() {
            return Err(DistError::Invalid("uniform: bounds must have equal length >= 1".into()));
        }
        if low.iter().zip(&high).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(DistError::Invalid("uniform: need finite low < high".into()));
        }
        let log_density = -low.iter().zip(&high).map(|(a, b)| (b - a).ln()).sum::<f64>();
        Ok(UniformBox { low, high, log_density })
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Gaussian(GaussianParams),
    Mixture(MixtureParams),
    Corrupted(CorruptedSpec),
    Uniform(UniformBox),
}

impl DistributionSpec {
    pub fn gaussian_1d(mean: f64, variance: f64) -> Result<Self> {
        Ok(DistributionSpec::Gaussian(GaussianParams::univariate(mean, variance)?))
    }

    pub fn mixture(weights: Vec<f64>, components: Vec<DistributionSpec>) -> Result<Self> {
        Ok(DistributionSpec::Mixture(MixtureParams::new(weights, components)?))
    }

    pub fn corrupted(base: DistributionSpec, noise: DistributionSpec, rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(DistError::Invalid(format!("corruption rate {rate} outside [0, 1]")));
        }
        if base.dim() != noise.dim() {
            return Err(DistError::DimensionMismatch { expected: base.dim(), got: noise.dim() });
        }
        Ok(DistributionSpec::Corrupted(CorruptedSpec {
            base: Box::new(base),
            noise: Box::new(noise),
            rate,
        }))
    }

    pub fn uniform(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        Ok(DistributionSpec::Uniform(UniformBox::new(low, high)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Gaussian(g) => g.dim(),
            DistributionSpec::Mixture(m) => m.components[0].dim(),
            DistributionSpec::Corrupted(c) => c.base.dim(),
            DistributionSpec::Uniform(u) => u.low.len(),
        }
    }

    /// `n` i.i.d. draws; the same seed always gives the same points.
    pub fn sample(&self, n: usize, rng_seed: u64) -> Vec<Point> {
        let mut rng = seed::rng(rng_seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with(&self, n: usize, rng: &mut Rng) -> Vec<Point> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    pub fn draw(&self, rng: &mut Rng) -> Point {
        match self {
            DistributionSpec::Gaussian(g) => g.draw(rng),
            DistributionSpec::Mixture(m) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = None;
                for (i, w) in m.weights.iter().enumerate() {
                    if *w > 0.0 {
                        pick = Some(i);
                        acc += w;
                        if u < acc {
                            break;
                        }
                    }
                }
                m.components[pick.expect("weights sum to one")].draw(rng)
            }
            DistributionSpec::Corrupted(c) => {
                let u: f64 = rng.random();
                if u < c.rate {
                    c.noise.draw(rng)
                } else {
                    c.base.draw(rng)
                }
            }
            DistributionSpec::Uniform(b) => b
                .low
                .iter()
                .zip(&b.high)
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        }
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(DistError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.log_density_unchecked(x))
    }

    /// Log-density without the dimension check; `x.len()` must equal `dim()`.
    pub fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            DistributionSpec::Gaussian(g) => g.log_density(x),
            DistributionSpec::Mixture(m) => {
                let terms = m
                    .log_weights
                    .iter()
                    .zip(&m.components)
                    .filter(|(lw, _)| lw.is_finite())
                    .map(|(lw, c)| lw + c.log_density_unchecked(x));
                if m.k() <= 8 {
                    let mut buf = [0.0; 8];
                    let mut n = 0;
                    for t in terms {
                        buf[n] = t;
                        n += 1;
                    }
                    log_sum_exp_sorted(&mut buf[..n])
                } else {
                    log_sum_exp_sorted(&mut terms.collect::<Vec<_>>())
                }
            }
            DistributionSpec::Corrupted(c) => {
                let mut terms = [0.0; 2];
                let mut n = 0;
                if c.rate < 1.0 {
                    terms[n] = (1.0 - c.rate).ln() + c.base.log_density_unchecked(x);
                    n += 1;
                }
                if c.rate > 0.0 {
                    terms[n] = c.rate.ln() + c.noise.log_density_unchecked(x);
                    n += 1;
                }
                log_sum_exp_sorted(&mut terms[..n])
            }
            DistributionSpec::Uniform(b) => {
                let inside = x
                    .iter()
                    .zip(b.low.iter().zip(&b.high))
                    .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
                if inside {
                    b.log_density
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Every Gaussian atom reachable through mixtures and contamination,
    /// together with every uniform box. Used to place quadrature breakpoints.
    pub(crate) fn atoms(&self, gaussians: &mut Vec<GaussianParams>, boxes: &mut Vec<UniformBox>) {
        match self {
            DistributionSpec::Gaussian(g) => gaussians.push(g.clone()),
            DistributionSpec::Mixture(m) => {
                for (w, c) in m.weights.iter().zip(&m.components) {
                    if *w > 0.0 {
                        c.atoms(gaussians, boxes);
                    }
                }
            }
            DistributionSpec::Corrupted(c) => {
                if c.rate < 1.0 {
                    c.base.atoms(gaussians, boxes);
                }
                if c.rate > 0.0 {
                    c.noise.atoms(gaussians, boxes);
                }
            }
            DistributionSpec::Uniform(b) => boxes.push(b.clone()),
        }
    }
}

/// Log-sum-exp over the terms in ascending order. Sorting first makes the
/// result independent of the order the terms were produced in.
pub fn log_sum_exp_sorted(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    let max = match terms.last() {
        Some(m) if m.is_finite() => *m,
        Some(m) => return *m,
        None => return f64::NEG_INFINITY,
    };
    let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal() -> DistributionSpec {
        DistributionSpec::gaussian_1d(0.0, 1.0).unwrap()
    }

    #[test]
    fn zero_samples() {
        assert!(std_normal().sample(0, 7).is_empty());
    }

    #[test]
    fn sample_mean_of_a_million_draws() {
        let xs = std_normal().sample(1_000_000, 1);
        let mean = xs.iter().map(|x| x[0]).sum::<f64>() / xs.len() as f64;
        // Standard error is 1e-3, so 0.01 is a 10 sigma band.
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn separated_mixture_splits_evenly() {
        let m = DistributionSpec::mixture(
            vec![0.5, 0.5],
            vec![
                DistributionSpec::gaussian_1d(-10.0, 1.0).unwrap(),
                DistributionSpec::gaussian_1d(10.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let xs = m.sample(10_000, 2);
        let frac = xs.iter().filter(|x| x[0] < 0.0).count() as f64 / 1e4;
        assert!((frac - 0.5).abs() < 0.02, "fraction {frac}");
    }

    #[test]
    fn seeds_reproduce() {
        let m = std_normal();
        assert_eq!(m.sample(50, 9), m.sample(50, 9));
        assert_ne!(m.sample(50, 9), m.sample(50, 10));
    }

    #[test]
    fn standard_normal_density_at_zero() {
        let p = std_normal().density(&[0.0]).unwrap();
        assert!((p - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn far_tail_is_finite() {
        let p = std_normal().density(&[1e6]).unwrap();
        assert!(p.is_finite() && p >= 0.0);
    }

    #[test]
    fn duplicate_components() {
        let m = DistributionSpec::mixture(vec![0.5, 0.5], vec![std_normal(), std_normal()]).unwrap();
        let a = m.density(&[0.0]).unwrap();
        let b = std_normal().density(&[0.0]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            std_normal().density(&[0.0, 1.0]),
            Err(DistError::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn full_covariance_matches_closed_form() {
        let g = GaussianParams::new(vec![1.0, -1.0], vec![2.0, 0.6, 0.6, 1.0]).unwrap();
        assert!(!g.is_diagonal());
        let spec = DistributionSpec::Gaussian(g);
        let x = [0.3, 0.2];
        let det: f64 = 2.0 - 0.36;
        let (dx, dy) = (x[0] - 1.0, x[1] + 1.0);
        let q = (1.0 * dx * dx - 2.0 * 0.6 * dx * dy + 2.0 * dy * dy) / det;
        let expected = -(LN_2PI) - 0.5 * det.ln() - 0.5 * q;
        assert!((spec.log_density(&x).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(GaussianParams::new(vec![0.0, 0.0], vec![1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(GaussianParams::new(vec![0.0, 0.0], vec![1.0, 0.1, 0.2, 1.0]).is_err());
        assert!(GaussianParams::univariate(0.0, 0.0).is_err());
        assert!(DistributionSpec::mixture(vec![0.5, 0.4], vec![std_normal(), std_normal()]).is_err());
        assert!(DistributionSpec::corrupted(std_normal(), std_normal(), 1.5).is_err());
        assert!(DistributionSpec::uniform(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn corrupted_density_is_the_convex_combination() {
        let noise = DistributionSpec::uniform(vec![-50.0], vec![50.0]).unwrap();
        let c = DistributionSpec::corrupted(std_normal(), noise.clone(), 0.1).unwrap();
        for x in [-60.0, -3.0, 0.0, 1.5, 49.9] {
            let expected = 0.9 * std_normal().density(&[x]).unwrap() + 0.1 * noise.density(&[x]).unwrap();
            assert!((c.density(&[x]).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn permuted_mixture_density_is_bitwise_equal() {
        let a = DistributionSpec::gaussian_1d(-1.0, 0.5).unwrap();
        let b = DistributionSpec::gaussian_1d(2.0, 3.0).unwrap();
        let c = DistributionSpec::gaussian_1d(0.1, 1.0).unwrap();
        let m1 = DistributionSpec::mixture(vec![0.2, 0.3, 0.5], vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let m2 = DistributionSpec::mixture(vec![0.5, 0.2, 0.3], vec![c, a, b]).unwrap();
        for x in [-4.0, -0.3, 0.0, 0.7, 5.0] {
            assert_eq!(m1.log_density(&[x]).unwrap(), m2.log_density(&[x]).unwrap());
        }
    }
}
