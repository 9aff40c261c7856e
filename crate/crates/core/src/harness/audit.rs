//! Privacy audits driven from a config: per-bin CSV rows plus a summary.

use serde::{Deserialize, Serialize};

use super::config::{AuditConfig, AuditKind};
use super::experiment::AtomicOutput;
use super::{HarnessError, Result};
use crate::decode::{CandidateList, DecoderContract, Provenance};
use crate::distributions::CandidateKey;
use crate::mechanisms::{
    empirical_privacy_audit, sample_tlap, AuditReport, Choice, Outcome, Partition, TruncatedLaplaceParams,
};
use crate::reduction::{desk_params, learn_from_lists, DeskOverrides, FnOracle, ReductionParams};

pub const AUDIT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub schema_version: u32,
    pub audit_id: String,
    pub kind: String,
    /// `bin` for per-bin rows, `summary` for the last row.
    pub row: String,
    pub label: String,
    pub count_a: u64,
    pub count_b: u64,
    pub epsilon_hat: f64,
    pub unbounded: bool,
    pub claimed_epsilon: f64,
    pub delta: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub claimed_epsilon: f64,
    pub delta: f64,
    pub report: AuditReport,
    pub violation: bool,
    pub rows: Vec<AuditRow>,
}

/// Eight lists over three keys. Seven hold keys 0 and 1 anchored at 0; the
/// eighth holds key 2 alone on one neighbor and keys 0, 1 on the other.
pub fn pipeline_neighbors() -> [(Vec<CandidateList>, Vec<CandidateKey>); 2] {
    let key = |i: u32| CandidateKey::Gaussian { mean: vec![i], logvar: vec![0] };
    let list = |ks: &[u32]| CandidateList::new(ks.iter().map(|&i| key(i)).collect(), Provenance::default());
    let mut a = (vec![list(&[0, 1]); 7], vec![key(0); 7]);
    let mut b = a.clone();
    a.0.push(list(&[2]));
    a.1.push(key(2));
    b.0.push(list(&[0, 1]));
    b.1.push(key(0));
    [a, b]
}

/// `0.3·|i − j|` between Gaussian keys, capped at 1.
pub fn pipeline_distance(f: &CandidateKey, g: &CandidateKey) -> f64 {
    match (f, g) {
        (CandidateKey::Gaussian { mean: a, .. }, CandidateKey::Gaussian { mean: b, .. }) => {
            (0.3 * f64::from(a[0].abs_diff(b[0]))).min(1.0)
        }
        _ => 1.0,
    }
}

pub fn pipeline_params(cfg: &AuditConfig) -> Result<ReductionParams> {
    let bad = |e: &dyn std::fmt::Display| HarnessError::Config(format!("pipeline audit parameters: {e}"));
    let contract = DecoderContract::new(1, 0.91, 2.0, cfg.pipeline.c, 0.1).map_err(|e| bad(&e))?;
    let o = DeskOverrides { lists: 8, mde_samples: Some(1), ..Default::default() };
    desk_params(cfg.pipeline.alpha, cfg.pipeline.beta, cfg.epsilon, cfg.delta, cfg.pipeline.c, &contract, &o)
        .map_err(|e| bad(&e))
}

/// Verdict history and released key of one pipeline run.
pub fn pipeline_outcome(
    input: &(Vec<CandidateList>, Vec<CandidateKey>),
    params: &ReductionParams,
    rng_seed: u64,
) -> Outcome {
    let oracle = FnOracle(pipeline_distance);
    match learn_from_lists(&input.0, &input.1, params, &oracle, rng_seed) {
        Ok(sel) => {
            let released = match &sel.choice.choice {
                Choice::Chosen(k) => k.to_string(),
                Choice::Bottom => "BOTTOM".into(),
            };
            Outcome::Label(format!("{}|{released}", sel.search.verdicts()))
        }
        Err(e) => Outcome::Label(format!("error:{e}")),
    }
}

fn release_edges(count: f64, bound: f64, bins: usize) -> Vec<f64> {
    let lo = count - bound - 0.5;
    let hi = count + 1.0 + bound + 0.5;
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

pub fn run_audit(cfg: &AuditConfig) -> Result<AuditSummary> {
    if cfg.trials == 0 {
        return Err(HarnessError::Config("trials must be >= 1".into()));
    }
    if cfg.bins == 0 {
        return Err(HarnessError::Config("bins must be >= 1".into()));
    }
    let sink = cfg.out.as_deref().map(AtomicOutput::open).transpose()?;
    let count = cfg.count as f64;
    let (report, claimed, delta) = match cfg.kind {
        AuditKind::TlapRelease | AuditKind::ExactRelease => {
            let tlap = TruncatedLaplaceParams::new(1.0, cfg.epsilon, cfg.delta)?;
            let noisy = cfg.kind == AuditKind::TlapRelease;
            let mech = |x: &f64, s: u64| Outcome::Value(if noisy { x + sample_tlap(&tlap, s) } else { *x });
            let edges = release_edges(count, tlap.bound(), cfg.bins);
            let r = empirical_privacy_audit(
                mech,
                (&count, &(count + 1.0)),
                cfg.trials,
                &Partition::Intervals(edges),
                cfg.delta,
                cfg.confidence,
                cfg.seed,
            )?;
            (r, cfg.epsilon, cfg.delta)
        }
        AuditKind::Pipeline => {
            let params = pipeline_params(cfg)?;
            let steps = (params.iterations() + 1) as f64;
            let (claimed, delta) = (steps * params.epsilon_prime, steps * params.delta_prime);
            if delta >= 1.0 {
                return Err(HarnessError::Config(format!("composed delta {delta} is not below 1")));
            }
            let [a, b] = pipeline_neighbors();
            let mech = |x: &(Vec<CandidateList>, Vec<CandidateKey>), s: u64| pipeline_outcome(x, &params, s);
            let r = empirical_privacy_audit(
                mech,
                (&a, &b),
                cfg.trials,
                &Partition::Identity,
                delta,
                cfg.confidence,
                cfg.seed,
            )?;
            (r, claimed, delta)
        }
    };
    let violation = report.violates(claimed);
    let kind = match cfg.kind {
        AuditKind::TlapRelease => "tlap_release",
        AuditKind::ExactRelease => "exact_release",
        AuditKind::Pipeline => "pipeline",
    };
    let row = |row: &str, label: &str, a: u64, b: u64, eps: f64, unb: bool, viol: bool| AuditRow {
        schema_version: AUDIT_SCHEMA_VERSION,
        audit_id: cfg.id.clone(),
        kind: kind.into(),
        row: row.into(),
        label: label.into(),
        count_a: a,
        count_b: b,
        epsilon_hat: eps,
        unbounded: unb,
        claimed_epsilon: claimed,
        delta,
        violation: viol,
    };
    let mut rows: Vec<AuditRow> = report
        .bins
        .iter()
        .map(|b| row("bin", &b.label, b.count_a, b.count_b, b.epsilon_hat, b.unbounded, b.epsilon_hat > claimed))
        .collect();
    let n = report.trials as u64;
    rows.push(row("summary", &report.worst_bin, n, n, report.epsilon_hat, report.unbounded, violation));
    if let Some(sink) = sink {
        sink.commit(&rows)?;
    }
    Ok(AuditSummary { claimed_epsilon: claimed, delta, report, violation, rows })
}
