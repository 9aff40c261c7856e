//! Decoder contracts and the arithmetic of lifting them to mixtures.

use super::{DecodeError, Result};

/// `(C, α)`-accuracy together with `(m, ρ, L)`-stability. The list bound is
/// kept as `ln L` because lifted bounds overflow `f64` quickly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderContract {
    pub sample_size: usize,
    pub stability: f64,
    pub ln_list_bound: f64,
    pub c: f64,
    pub alpha: f64,
}

impl DecoderContract {
    pub fn new(sample_size: usize, stability: f64, list_bound: f64, c: f64, alpha: f64) -> Result<Self> {
        Self::with_ln_bound(sample_size, stability, list_bound.ln(), c, alpha)
    }

    pub fn with_ln_bound(
        sample_size: usize,
        stability: f64,
        ln_list_bound: f64,
        c: f64,
        alpha: f64,
    ) -> Result<Self> {
        let bad = |m: String| Err(DecodeError::InvalidParameter(m));
        if sample_size == 0 {
            return bad("sample size must be >= 1".into());
        }
        if !(stability > 0.0 && stability <= 1.0) {
            return bad(format!("stability {stability} outside (0, 1]"));
        }
        if !(ln_list_bound >= 0.0) {
            return bad(format!("list bound e^{ln_list_bound} must be >= 1"));
        }
        if !(c >= 1.0 && c.is_finite()) {
            return bad(format!("C = {c} must be >= 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return bad(format!("alpha {alpha} must be > 0"));
        }
        Ok(DecoderContract { sample_size, stability, ln_list_bound, c, alpha })
    }

    /// `L` as a float; infinite when it does not fit.
    pub fn list_bound(&self) -> f64 {
        self.ln_list_bound.exp()
    }

    pub fn admits(&self, list_size: usize) -> bool {
        list_size <= 1 || (list_size as f64).ln() <= self.ln_list_bound * (1.0 + 1e-12)
    }
}

/// `m₁ = ceil((2mk + 8k·ln(1/β))/α)`.
pub fn mixture_sample_size(m: usize, k: usize, alpha: f64, beta: f64) -> usize {
    let (m, k) = (m as f64, k as f64);
    ((2.0 * m * k + 8.0 * k * (1.0 / beta).ln()) / alpha).ceil() as usize
}

/// The contract of the k-mixture lift:
/// `m₁ = (2mk + 8k·ln(1/β))/α`, `L₁ = (Lk/α)^k·(10ek·ln(1/β)/α)^{mk}`,
/// stability `1 − 2kβ`, accuracy `(C, 5α)`.
pub fn contract_for_mixture(
    base: &DecoderContract,
    k: usize,
    alpha: f64,
    beta: f64,
) -> Result<DecoderContract> {
    if k == 0 {
        return Err(DecodeError::InvalidParameter("k must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
        return Err(DecodeError::InvalidParameter(format!("alpha {alpha}, beta {beta} outside (0, 1)")));
    }
    let stability = 1.0 - 2.0 * k as f64 * beta;
    if stability <= 0.0 {
        return Err(DecodeError::InvalidParameter(format!("1 - 2kβ = {stability} <= 0")));
    }
    let (kf, mf) = (k as f64, base.sample_size as f64);
    let ln_l1 = kf * (base.ln_list_bound + (kf / alpha).ln())
        + mf * kf * (10.0 * std::f64::consts::E * kf * (1.0 / beta).ln() / alpha).ln();
    DecoderContract::with_ln_bound(
        mixture_sample_size(base.sample_size, k, alpha, beta),
        stability,
        ln_l1,
        base.c,
        5.0 * alpha,
    )
}

/// Contract of k-mixtures of d-dimensional Gaussians, chosen so the lift
/// is `(3, α/(3+4C))`-accurate and 0.91-stable.
///
/// The Gaussian decoder's bounds are only known up to constants; they are
/// instantiated with unit constants: `m = ceil(d·ln(1/β_g))` and
/// `ln L = d²·ln(d/α_g)·ln(d·ln(1/β_g))`, with `β_g = 0.045/k` and
/// `α_g = α/(5(3+4C))`.
pub fn gaussian_mixture_contract(k: usize, d: usize, alpha: f64, c: f64) -> Result<DecoderContract> {
    if k == 0 || d == 0 {
        return Err(DecodeError::InvalidParameter("k and d must be >= 1".into()));
    }
    let beta_g = 0.045 / k as f64;
    let alpha_g = alpha / (5.0 * (3.0 + 4.0 * c));
    let df = d as f64;
    let inner = df * (1.0 / beta_g).ln();
    let m = inner.ceil() as usize;
    let ln_l = df * df * (df / alpha_g).ln() * inner.ln();
    let base = DecoderContract::with_ln_bound(m, 1.0 - beta_g, ln_l, 3.0, alpha_g)?;
    contract_for_mixture(&base, k, alpha_g, beta_g)
}
