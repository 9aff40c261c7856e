//! Stable list decoders: the contract, candidate lists, a grid decoder for
//! Gaussians, the simplex cover and the lift to k-mixtures.

mod contract;
mod gaussian;
mod lift;
mod list;
mod simplex;

pub use contract::{contract_for_mixture, gaussian_mixture_contract, mixture_sample_size, DecoderContract};
pub use gaussian::{robust_estimate, FixedDecoder, GaussianDecoder};
pub use lift::{lift_to_mixture, LiftMode, LiftParams, LiftedDecoder};
pub use list::{CandidateList, Provenance};
pub use simplex::{build_simplex_cover, SimplexCover};

use thiserror::Error;

use crate::distributions::{DistError, ParameterGrid, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("decoder needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sample has dimension {got}, grid has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("list of {size} keys exceeds the contract bound L = e^{ln_bound}")]
    ListTooLong { size: usize, ln_bound: f64 },
    #[error("candidate list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Distribution(#[from] DistError),
}

pub type Result<T> = std::result::Result<T, DecodeError>;

/// An algorithm that maps at least `contract().sample_size` points to a
/// bounded list of grid keys.
pub trait StableListDecoder: Send + Sync {
    fn contract(&self) -> &DecoderContract;
    fn grid(&self) -> &ParameterGrid;
    fn decode(&self, samples: &[Point], rng_seed: u64) -> Result<CandidateList>;
}

pub(crate) fn check_samples(samples: &[Point], need: usize, dim: usize) -> Result<()> {
    if samples.len() < need {
        return Err(DecodeError::TooFewSamples { need, got: samples.len() });
    }
    if let Some(x) = samples.iter().find(|x| x.len() != dim) {
        return Err(DecodeError::DimensionMismatch { expected: dim, got: x.len() });
    }
    Ok(())
}
