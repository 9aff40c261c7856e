//! Total-variation distance: adaptive quadrature in one dimension and an
//! importance-sampled Monte Carlo estimator for any dimension.

use rand::Rng as _;

use super::{DistError, DistributionSpec, Result};
use crate::quad::{integrate, QuadOptions};
use crate::seed;

const MAX_INTERVALS: usize = 20_000;

/// Interval holding at least `1 - tail` of the mass of a 1D spec.
///
/// Each Gaussian atom contributes `μ ± σ·sqrt(2 ln(2/tail))`, whose two-sided
/// tail is below `tail`; mixtures take the hull of their atoms, so their
/// outside mass is a convex combination of atom tails.
pub fn effective_support(spec: &DistributionSpec, tail: f64) -> Result<(f64, f64)> {
    if spec.dim() != 1 {
        return Err(DistError::NotOneDimensional(spec.dim()));
    }
    if !(tail > 0.0 && tail < 1.0) {
        return Err(DistError::Invalid(format!("tail mass {tail} outside (0, 1)")));
    }
    let (mut gs, mut boxes) = (Vec::new(), Vec::new());
    spec.atoms(&mut gs, &mut boxes);
    let z = (2.0 * (2.0 / tail).ln()).sqrt();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for g in &gs {
        let s = g.variances()[0].sqrt();
        lo = lo.min(g.mean()[0] - z * s);
        hi = hi.max(g.mean()[0] + z * s);
    }
    for b in &boxes {
        lo = lo.min(b.low()[0]);
        hi = hi.max(b.high()[0]);
    }
    Ok((lo, hi))
}

fn breakpoints(specs: &[&DistributionSpec]) -> Vec<f64> {
    let (mut gs, mut boxes) = (Vec::new(), Vec::new());
    for s in specs {
        s.atoms(&mut gs, &mut boxes);
    }
    let mut out = Vec::new();
    for g in &gs {
        let (m, s) = (g.mean()[0], g.variances()[0].sqrt());
        for k in [0.0, 1.0, 2.0, 3.0, 4.0, 6.0] {
            out.push(m + k * s);
            out.push(m - k * s);
        }
    }
    for b in &boxes {
        out.push(b.low()[0]);
        out.push(b.high()[0]);
    }
    out
}

/// ½∫|f − g| over a common effective support, accurate to `abs_tol`.
///
/// The support drops at most `abs_tol/4` of each mass, and the quadrature
/// runs at `abs_tol/2`.
pub fn tv_distance_1d(f: &DistributionSpec, g: &DistributionSpec, abs_tol: f64) -> Result<f64> {
    if !(abs_tol > 0.0) {
        return Err(DistError::Invalid(format!("abs_tol must be > 0, got {abs_tol}")));
    }
    for s in [f, g] {
        if s.dim() != 1 {
            return Err(DistError::NotOneDimensional(s.dim()));
        }
    }
    if f == g {
        return Ok(0.0);
    }
    let tail = (abs_tol / 4.0).min(0.5);
    let (a0, b0) = effective_support(f, tail)?;
    let (a1, b1) = effective_support(g, tail)?;
    let (lo, hi) = (a0.min(a1), b0.max(b1));
    let bps = breakpoints(&[f, g]);
    let integrand = |x: f64| {
        let p = f.log_density_unchecked(&[x]).exp();
        let q = g.log_density_unchecked(&[x]).exp();
        0.5 * (p - q).abs()
    };
    let opts = QuadOptions { abs_tol: abs_tol / 2.0, max_intervals: MAX_INTERVALS };
    let r = integrate(integrand, lo, hi, &bps, opts)?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// ∫ f over the effective support that drops at most `tail` of its mass.
pub fn integrate_density_1d(spec: &DistributionSpec, tail: f64, abs_tol: f64) -> Result<f64> {
    let (lo, hi) = effective_support(spec, tail)?;
    let bps = breakpoints(&[spec]);
    let opts = QuadOptions { abs_tol, max_intervals: MAX_INTERVALS };
    let r = integrate(|x| spec.log_density_unchecked(&[x]).exp(), lo, hi, &bps, opts)?;
    Ok(r.value)
}

/// Unbiased estimate of d_TV(f, g) with its standard error.
///
/// Points are drawn from h = (f+g)/2 and the integrand |f−g|/(f+g) is
/// evaluated as tanh(|ln f − ln g|/2), which is exactly zero wherever the two
/// log-densities agree bit for bit.
pub fn tv_distance_mc(
    f: &DistributionSpec,
    g: &DistributionSpec,
    n_samples: usize,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    if f.dim() != g.dim() {
        return Err(DistError::DimensionMismatch { expected: f.dim(), got: g.dim() });
    }
    if n_samples == 0 {
        return Err(DistError::Invalid("tv_distance_mc needs n_samples >= 1".into()));
    }
    let mut rng = seed::rng(rng_seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let x = if rng.random::<bool>() { f.draw(&mut rng) } else { g.draw(&mut rng) };
        let lf = f.log_density_unchecked(&x);
        let lg = g.log_density_unchecked(&x);
        let v = if lf == lg { 0.0 } else { (0.5 * (lf - lg).abs()).tanh() };
        sum += v;
        sum_sq += v * v;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}
