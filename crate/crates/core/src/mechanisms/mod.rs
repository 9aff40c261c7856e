//! Differential-privacy primitives: Laplace and truncated Laplace noise, the
//! choosing mechanism, budget accounting and an empirical audit.

mod audit;
mod choosing;
mod laplace;

pub use audit::{empirical_privacy_audit, AuditReport, BinReport, Outcome, Partition};
pub use choosing::{
    choosing_mechanism, choosing_mechanism_detailed, choosing_threshold, choosing_utility_bound,
    Choice, ChoosingOutcome, ScoreTable,
};
pub use laplace::{sample_laplace, sample_tlap, TruncatedLaplaceParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("audit needs at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, MechanismError>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(MechanismError::InvalidParameter(format!("epsilon {epsilon} must be >= 0")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(MechanismError::InvalidParameter(format!("delta {delta} outside [0, 1)")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    /// Whether `self` fits inside `limit` up to `tol` in each coordinate.
    pub fn within(&self, limit: &PrivacyBudget, tol: f64) -> bool {
        self.epsilon <= limit.epsilon + tol && self.delta <= limit.delta + tol
    }
}

/// Basic composition: component-wise sums. A composed δ ≥ 1 is returned
/// as is; it simply carries no guarantee.
pub fn compose(budgets: &[PrivacyBudget]) -> PrivacyBudget {
    budgets.iter().fold(PrivacyBudget::default(), |acc, b| PrivacyBudget {
        epsilon: acc.epsilon + b.epsilon,
        delta: acc.delta + b.delta,
    })
}

/// Every private release of a run, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BudgetLedger {
    events: Vec<(String, PrivacyBudget)>,
}

impl BudgetLedger {
    pub fn record(&mut self, label: impl Into<String>, budget: PrivacyBudget) {
        self.events.push((label.into(), budget));
    }

    pub fn events(&self) -> &[(String, PrivacyBudget)] {
        &self.events
    }

    pub fn total(&self) -> PrivacyBudget {
        let budgets: Vec<PrivacyBudget> = self.events.iter().map(|(_, b)| *b).collect();
        compose(&budgets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition() {
        assert_eq!(compose(&[]), PrivacyBudget { epsilon: 0.0, delta: 0.0 });
        let b = PrivacyBudget::new(1.0, 0.01).unwrap();
        let c = compose(&[b, b]);
        assert!((c.epsilon - 2.0).abs() < 1e-15 && (c.delta - 0.02).abs() < 1e-15);
        assert_eq!(compose(&[b]), b);
    }

    #[test]
    fn budget_validation() {
        assert!(PrivacyBudget::new(-1.0, 0.1).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        assert!(PrivacyBudget::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn ledger_totals() {
        let mut l = BudgetLedger::default();
        l.record("a", PrivacyBudget::new(0.5, 0.01).unwrap());
        l.record("b", PrivacyBudget::new(0.25, 0.02).unwrap());
        assert_eq!(l.events().len(), 2);
        let t = l.total();
        assert!((t.epsilon - 0.75).abs() < 1e-15 && (t.delta - 0.03).abs() < 1e-15);
    }
}
