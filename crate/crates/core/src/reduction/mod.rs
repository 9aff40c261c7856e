//! The private agnostic learner: T stable lists with MDE anchors, a binary
//! search over the filter radius driven by a noisy count test, then the
//! choosing mechanism over the surviving scores.
//!
//! Seed tree below a master seed `s`:
//!
//! ```text
//! s ─┬─ "data"        sample draw
//!    ├─ "partition"   split into T data sets, then "split"/i within each
//!    ├─ "decode"/i    decoder i
//!    ├─ "mde"/i       MDE i
//!    ├─ "tv"          Monte Carlo TV oracle (d > 1 only)
//!    ├─ "filter-test"/j   the TLap draw of iteration j
//!    └─ "choosing"    the final selection
//! ```

mod filter;
mod learn;
mod params;

pub use filter::{
    filter_and_test, get_candidates_and_scores, DistanceTable, FilterOutcome, FnOracle, GridTvOracle, IterationRecord,
    SearchOutcome, TvEstimate, TvOracle, Verdict,
};
pub use learn::{
    anchors_for_lists, learn_from_lists, private_agnostic_learn, private_agnostic_learn_from_samples, LearnOutcome,
    ListStage, SelectionOutcome, MAX_TOTAL_SAMPLES,
};
pub use params::{derive_params, desk_params, utility_bound, DeskOverrides, Mode, ReductionParams};

use thiserror::Error;

use crate::decode::DecodeError;
use crate::distributions::DistError;
use crate::mde::MdeError;
use crate::mechanisms::MechanismError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{name} is not a finite positive number ({value}); formula {formula}")]
    Formula { name: &'static str, formula: &'static str, value: f64 },
    #[error("anchor {index} is not a member of list {index}")]
    AnchorNotInList { index: usize },
    #[error("{lists} lists but {anchors} anchors")]
    CountMismatch { lists: usize, anchors: usize },
    #[error("no distance for pair ({0}, {1})")]
    MissingDistance(String, String),
    #[error("{needed} samples exceed the limit of {limit}")]
    SampleBudget { needed: u128, limit: u128 },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Mde(#[from] MdeError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Distribution(#[from] DistError),
}

pub type Result<T> = std::result::Result<T, ReductionError>;
