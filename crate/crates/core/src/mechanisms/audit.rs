//! Empirical (ε, δ) audit of a seeded mechanism on a pair of neighbors.
//!
//! Both neighbors are run `trials` times with independent derived seeds and
//! the outcomes are binned. For every bin E and both orientations the audit
//! computes `ln((p₁_lo − δ)/p₂_hi)` from Clopper–Pearson bounds, with the
//! failure probability split evenly over every bound it uses. The reported
//! ε̂ is therefore a lower confidence bound on the true privacy loss: the
//! audit never claims a violation that the widened counts do not support.

use std::collections::BTreeMap;

use rayon::prelude::*;
use statrs::function::beta::inv_beta_reg;

use super::{MechanismError, Result};
use crate::distributions::CandidateKey;
use crate::seed;

pub const MIN_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Bottom,
    Key(CandidateKey),
    Value(f64),
    Label(String),
}

/// How outcomes are grouped into events.
#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    /// One bin per distinct outcome, with a dedicated ⊥ bin.
    Identity,
    /// `Value` outcomes go to the half-open interval between consecutive
    /// sorted edges, with one bin below the first edge and one above the last.
    /// Other outcomes fall back to identity bins.
    Intervals(Vec<f64>),
}

impl Partition {
    fn bin(&self, o: &Outcome) -> String {
        match (self, o) {
            (_, Outcome::Bottom) => "BOTTOM".to_string(),
            (_, Outcome::Key(k)) => format!("key:{k}"),
            (_, Outcome::Label(s)) => format!("label:{s}"),
            (Partition::Identity, Outcome::Value(v)) => format!("value:{v:?}"),
            (Partition::Intervals(edges), Outcome::Value(v)) => {
                let i = edges.partition_point(|e| e <= v);
                // Zero-padded so the textual order is the numeric order.
                format!("interval:{i:06}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinReport {
    pub label: String,
    pub count_a: u64,
    pub count_b: u64,
    pub epsilon_hat: f64,
    /// One side never landed here while the other did with mass above δ.
    pub unbounded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub trials: usize,
    pub delta: f64,
    pub confidence: f64,
    pub epsilon_hat: f64,
    pub worst_bin: String,
    pub unbounded: bool,
    pub bins: Vec<BinReport>,
}

impl AuditReport {
    /// True when the lower confidence bound on ε exceeds the claim.
    pub fn violates(&self, claimed_epsilon: f64) -> bool {
        self.epsilon_hat > claimed_epsilon
    }
}

fn cp_lower(k: u64, n: u64, alpha: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        inv_beta_reg(k as f64, (n - k + 1) as f64, alpha)
    }
}

fn cp_upper(k: u64, n: u64, alpha: f64) -> f64 {
    if k == n {
        1.0
    } else {
        inv_beta_reg((k + 1) as f64, (n - k) as f64, 1.0 - alpha)
    }
}

fn orientation(k1: u64, k2: u64, n: u64, delta: f64, alpha: f64) -> (f64, bool) {
    let lo = cp_lower(k1, n, alpha) - delta;
    if lo <= 0.0 {
        return (0.0, false);
    }
    let hi = cp_upper(k2, n, alpha);
    ((lo / hi).ln().max(0.0), k2 == 0)
}

/// `mechanism(input, seed)` must be a pure function of its arguments.
pub fn empirical_privacy_audit<I, M>(
    mechanism: M,
    neighbors: (&I, &I),
    trials: usize,
    bins: &Partition,
    delta: f64,
    confidence: f64,
    rng_seed: u64,
) -> Result<AuditReport>
where
    I: Sync + ?Sized,
    M: Fn(&I, u64) -> Outcome + Sync,
{
    if trials < MIN_TRIALS {
        return Err(MechanismError::TooFewTrials { min: MIN_TRIALS, got: trials });
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(MechanismError::InvalidParameter(format!("delta {delta} outside [0, 1)")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(MechanismError::InvalidParameter(format!("confidence {confidence} outside (0, 1)")));
    }
    if let Partition::Intervals(edges) = bins {
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MechanismError::InvalidParameter("interval edges must increase".into()));
        }
    }
    let (a, b) = neighbors;
    let labels: Vec<(String, String)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let oa = mechanism(a, seed::derive(rng_seed, "audit-a", t));
            let ob = mechanism(b, seed::derive(rng_seed, "audit-b", t));
            (bins.bin(&oa), bins.bin(&ob))
        })
        .collect();
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for (la, lb) in labels {
        counts.entry(la).or_default().0 += 1;
        counts.entry(lb).or_default().1 += 1;
    }
    let n = trials as u64;
    // Two orientations per bin, each using one lower and one upper bound.
    let alpha = (1.0 - confidence) / (4.0 * counts.len() as f64);
    let mut report = AuditReport {
        trials,
        delta,
        confidence,
        epsilon_hat: 0.0,
        worst_bin: String::new(),
        unbounded: false,
        bins: Vec::with_capacity(counts.len()),
    };
    for (label, (ka, kb)) in counts {
        let (e1, u1) = orientation(ka, kb, n, delta, alpha);
        let (e2, u2) = orientation(kb, ka, n, delta, alpha);
        let bin = BinReport { label, count_a: ka, count_b: kb, epsilon_hat: e1.max(e2), unbounded: u1 || u2 };
        if bin.epsilon_hat > report.epsilon_hat || report.worst_bin.is_empty() {
            report.epsilon_hat = bin.epsilon_hat;
            report.worst_bin = bin.label.clone();
        }
        report.unbounded |= bin.unbounded;
        report.bins.push(bin);
    }
    Ok(report)
}
