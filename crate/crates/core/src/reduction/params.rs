//! Derived parameters of the private learner.
//!
//! In `PaperFaithful` mode every quantity follows the closed forms
//!
//! ```text
//! α′ = α/(3+4C)          ε′ = ε/(1+ln(1/α′))      δ′ = δ/(1+ln(1/α′))
//! β′ = βε′ / (7680·ln(9830400·L/(ε′³βδ′))·ln(1/α′))
//! m₁ = m + ln(L/β′)/α′²  T  = (640/ε′)·ln(1280·L/(β′δ′ε′²))
//! ```
//!
//! evaluated with `ln L` so that astronomically large list bounds stay
//! finite. `DeskScale` keeps α′, ε′, δ′ and the whole algorithm, but takes
//! T, β′, the MDE sample size and the acceptance fraction from overrides.

use super::{ReductionError, Result};
use crate::decode::DecoderContract;
use crate::mde::mde_sample_size;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    PaperFaithful,
    DeskScale,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::PaperFaithful => "paper",
            Mode::DeskScale => "desk",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = ReductionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" | "paper_faithful" => Ok(Mode::PaperFaithful),
            "desk" | "desk_scale" => Ok(Mode::DeskScale),
            other => Err(ReductionError::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeskOverrides {
    pub lists: usize,
    pub accept_fraction: f64,
    /// Defaults to β.
    pub beta_prime: Option<f64>,
    /// Defaults to `mde_sample_size(L, 0.2, β′)`.
    pub mde_samples: Option<usize>,
}

impl Default for DeskOverrides {
    fn default() -> Self {
        DeskOverrides { lists: 60, accept_fraction: 0.8, beta_prime: None, mde_samples: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionParams {
    pub mode: Mode,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    pub contract: DecoderContract,
    pub alpha_prime: f64,
    pub epsilon_prime: f64,
    pub delta_prime: f64,
    pub beta_prime: f64,
    /// `ln(L/β′)/α′²` before rounding (paper mode) or the override.
    pub mde_samples_exact: f64,
    /// `m + mde_samples_exact`.
    pub m1_exact: f64,
    /// T before rounding.
    pub lists_exact: f64,
    pub accept_fraction: f64,
    /// Monte Carlo draws per candidate inside the MDE.
    pub mc_samples: usize,
    /// Quadrature tolerance of the filtering TV oracle in one dimension.
    pub tv_abs_tol: f64,
    /// Monte Carlo draws of the filtering TV oracle in higher dimension.
    pub tv_mc_samples: usize,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ReductionError::InvalidParameter(format!("{name} = {v} outside (0, 1)")))
    }
}

fn finite_positive(name: &'static str, formula: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ReductionError::Formula { name, formula, value: v })
    }
}

struct Core {
    alpha_prime: f64,
    epsilon_prime: f64,
    delta_prime: f64,
}

fn core(alpha: f64, beta: f64, epsilon: f64, delta: f64, c: f64) -> Result<Core> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    check_unit("delta", delta)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ReductionError::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(ReductionError::InvalidParameter(format!("C = {c} must be >= 1")));
    }
    let alpha_prime = alpha / (3.0 + 4.0 * c);
    let log_term = 1.0 + (1.0 / alpha_prime).ln();
    Ok(Core { alpha_prime, epsilon_prime: epsilon / log_term, delta_prime: delta / log_term })
}

/// Every formula verbatim. MDE Monte Carlo size defaults to 200 draws.
pub fn derive_params(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    delta: f64,
    c: f64,
    contract: &DecoderContract,
) -> Result<ReductionParams> {
    let Core { alpha_prime, epsilon_prime: e, delta_prime: d } = core(alpha, beta, epsilon, delta, c)?;
    let ln_l = contract.ln_list_bound;
    let ln_inv_a = (1.0 / alpha_prime).ln();
    let inner = 9_830_400f64.ln() + ln_l - 3.0 * e.ln() - beta.ln() - d.ln();
    let beta_prime = finite_positive(
        "beta_prime",
        "β′ = βε′/(7680·ln(9830400·L/(ε′³βδ′))·ln(1/α′))",
        beta * e / (7680.0 * inner * ln_inv_a),
    )?;
    let mde = finite_positive("mde_samples", "ln(L/β′)/α′²", (ln_l - beta_prime.ln()) / (alpha_prime * alpha_prime))?;
    let m1 = finite_positive("m1", "m₁ = m + ln(L/β′)/α′²", contract.sample_size as f64 + mde)?;
    let lists = finite_positive(
        "T",
        "T = (640/ε′)·ln(1280·L/(β′δ′ε′²))",
        640.0 / e * (1280f64.ln() + ln_l - beta_prime.ln() - d.ln() - 2.0 * e.ln()),
    )?;
    for (name, formula, v) in [("T", "T·m₁ must fit in u64", lists * m1), ("m1", "m₁ must fit in u64", m1)] {
        if v >= 2f64.powi(63) {
            return Err(ReductionError::Formula { name, formula, value: v });
        }
    }
    Ok(ReductionParams {
        mode: Mode::PaperFaithful,
        alpha,
        beta,
        epsilon,
        delta,
        c,
        contract: *contract,
        alpha_prime,
        epsilon_prime: e,
        delta_prime: d,
        beta_prime,
        mde_samples_exact: mde,
        m1_exact: m1,
        lists_exact: lists,
        accept_fraction: 0.8,
        mc_samples: 200,
        tv_abs_tol: 1e-3,
        tv_mc_samples: 4000,
    })
}

pub fn desk_params(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    delta: f64,
    c: f64,
    contract: &DecoderContract,
    overrides: &DeskOverrides,
) -> Result<ReductionParams> {
    let Core { alpha_prime, epsilon_prime, delta_prime } = core(alpha, beta, epsilon, delta, c)?;
    if overrides.lists == 0 {
        return Err(ReductionError::InvalidParameter("T must be >= 1".into()));
    }
    if !(overrides.accept_fraction > 0.0 && overrides.accept_fraction <= 1.0) {
        return Err(ReductionError::InvalidParameter(format!(
            "accept fraction {} outside (0, 1]",
            overrides.accept_fraction
        )));
    }
    let beta_prime = overrides.beta_prime.unwrap_or(beta);
    check_unit("beta_prime", beta_prime)?;
    let l = contract.list_bound();
    if !l.is_finite() {
        return Err(ReductionError::Formula { name: "L", formula: "list bound must be finite at desk scale", value: l });
    }
    let mde = overrides.mde_samples.unwrap_or_else(|| mde_sample_size(l.round() as usize, 0.2, beta_prime).max(1));
    Ok(ReductionParams {
        mode: Mode::DeskScale,
        alpha,
        beta,
        epsilon,
        delta,
        c,
        contract: *contract,
        alpha_prime,
        epsilon_prime,
        delta_prime,
        beta_prime,
        mde_samples_exact: mde as f64,
        m1_exact: (contract.sample_size + mde) as f64,
        lists_exact: overrides.lists as f64,
        accept_fraction: overrides.accept_fraction,
        mc_samples: 200,
        tv_abs_tol: 1e-3,
        tv_mc_samples: 4000,
    })
}

impl ReductionParams {
    pub fn lists(&self) -> usize {
        self.lists_exact.ceil() as usize
    }

    pub fn mde_samples(&self) -> usize {
        self.mde_samples_exact.ceil().max(1.0) as usize
    }

    /// Samples per list: the decoder's m plus the MDE share.
    pub fn m1(&self) -> usize {
        self.contract.sample_size + self.mde_samples()
    }

    pub fn total_samples(&self) -> u128 {
        self.lists() as u128 * self.m1() as u128
    }

    /// Binary-search iterations, `ceil(log₂(1/α′))`.
    pub fn iterations(&self) -> usize {
        let mut width = 1.0f64;
        let mut n = 0;
        while width > self.alpha_prime {
            width *= 0.5;
            n += 1;
        }
        n
    }

    /// Filter radius `4C·OPT̃ + 2α′`.
    pub fn filter_radius(&self, opt_tilde: f64) -> f64 {
        4.0 * self.c * opt_tilde + 2.0 * self.alpha_prime
    }

    /// `accept_fraction·T + (1/ε′)·ln(1 + e^{ε′}/(2δ′))`.
    pub fn test_threshold(&self, lists: usize) -> f64 {
        self.accept_fraction * lists as f64
            + (self.epsilon_prime.exp() / (2.0 * self.delta_prime)).ln_1p() / self.epsilon_prime
    }
}

/// `min(1, 7C·OPT + α)`.
pub fn utility_bound(c: f64, opt: f64, alpha: f64) -> f64 {
    (7.0 * c * opt + alpha).min(1.0)
}
