//! The end-to-end learner.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::filter::{get_candidates_and_scores, DistanceTable, GridTvOracle, SearchOutcome, TvOracle};
use super::{ReductionError, ReductionParams, Result};
use crate::decode::{CandidateList, StableListDecoder};
use crate::distributions::{CandidateKey, DistributionSpec, Point};
use crate::mde::mde_select;
use crate::mechanisms::{choosing_mechanism_detailed, BudgetLedger, Choice, ChoosingOutcome, PrivacyBudget};
use crate::seed;

/// Upper limit on `T·m₁` for a single run.
pub const MAX_TOTAL_SAMPLES: u128 = 50_000_000;

/// The T decoded lists and their MDE anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct ListStage {
    pub lists: Vec<CandidateList>,
    pub anchors: Vec<CandidateKey>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub search: SearchOutcome,
    pub choice: ChoosingOutcome,
    pub ledger: BudgetLedger,
    pub composed: PrivacyBudget,
    /// `composed ≤ (ε, δ)` within 1e-9.
    pub within_budget: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub stage: ListStage,
    pub selection: SelectionOutcome,
    /// The released key and its distribution, `None` for ⊥.
    pub output: Option<(CandidateKey, DistributionSpec)>,
}

/// Splits `samples` into T data sets of m₁ points, each further split into
/// m decoder points and the rest for the MDE, then decodes and selects an
/// anchor per data set.
pub fn anchors_for_lists(
    samples: &[Point],
    params: &ReductionParams,
    decoder: &dyn StableListDecoder,
    rng_seed: u64,
) -> Result<ListStage> {
    let t = params.lists();
    let m = params.contract.sample_size;
    let m1 = params.m1();
    if m < decoder.contract().sample_size {
        return Err(ReductionError::InvalidParameter(format!(
            "contract m = {m} is below the decoder's {}",
            decoder.contract().sample_size
        )));
    }
    if (samples.len() as u128) < t as u128 * m1 as u128 {
        return Err(ReductionError::SampleBudget { needed: t as u128 * m1 as u128, limit: samples.len() as u128 });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive(rng_seed, "partition", 0)));

    let per_set: Vec<(CandidateList, CandidateKey)> = (0..t)
        .into_par_iter()
        .map(|i| {
            let mut idx = order[i * m1..(i + 1) * m1].to_vec();
            idx.shuffle(&mut seed::rng(seed::derive(rng_seed, "split", i as u64)));
            let d1: Vec<Point> = idx[..m].iter().map(|&j| samples[j].clone()).collect();
            let d2: Vec<Point> = idx[m..].iter().map(|&j| samples[j].clone()).collect();
            let list = decoder.decode(&d1, seed::derive(rng_seed, "decode", i as u64))?.with_dataset(i);
            list.check(&params.contract)?;
            let grid = decoder.grid();
            let specs: Vec<DistributionSpec> =
                list.keys().iter().map(|k| grid.key_to_spec(k)).collect::<std::result::Result<_, _>>()?;
            let pick = mde_select(&specs, &d2, params.mc_samples, seed::derive(rng_seed, "mde", i as u64))?;
            let anchor = list.keys()[pick].clone();
            Ok((list, anchor))
        })
        .collect::<Result<_>>()?;
    let (lists, anchors) = per_set.into_iter().unzip();
    Ok(ListStage { lists, anchors })
}

/// Binary search and choosing mechanism on given lists and anchors, with
/// the privacy ledger of every noisy step.
pub fn learn_from_lists(
    lists: &[CandidateList],
    anchors: &[CandidateKey],
    params: &ReductionParams,
    oracle: &dyn TvOracle,
    rng_seed: u64,
) -> Result<SelectionOutcome> {
    let search = get_candidates_and_scores(lists, anchors, params, oracle, rng_seed)?;
    let step = PrivacyBudget::new(params.epsilon_prime, params.delta_prime)?;
    let mut ledger = BudgetLedger::default();
    for j in 0..search.iterations() {
        ledger.record(format!("filter-test {j}"), step);
    }
    let k = params.contract.list_bound();
    if !k.is_finite() {
        return Err(ReductionError::Formula { name: "L", formula: "growth bound k = L must be finite", value: k });
    }
    let choice = choosing_mechanism_detailed(
        &search.scores,
        params.beta_prime,
        params.epsilon_prime,
        params.delta_prime,
        k.max(1.0),
        seed::derive(rng_seed, "choosing", 0),
    )?;
    ledger.record("choosing", step);
    let composed = ledger.total();
    let limit = PrivacyBudget { epsilon: params.epsilon, delta: params.delta };
    let within_budget = composed.within(&limit, 1e-9);
    Ok(SelectionOutcome { search, choice, ledger, composed, within_budget })
}

/// The learner on a fixed sample of at least `T·m₁` points.
pub fn private_agnostic_learn_from_samples(
    samples: &[Point],
    params: &ReductionParams,
    decoder: &dyn StableListDecoder,
    rng_seed: u64,
) -> Result<LearnOutcome> {
    let stage = anchors_for_lists(samples, params, decoder, rng_seed)?;
    let grid = decoder.grid();
    let oracle =
        GridTvOracle::new(grid.clone(), params.tv_abs_tol, params.tv_mc_samples, seed::derive(rng_seed, "tv", 0));
    let table = DistanceTable::build(&stage.lists, &stage.anchors, &oracle)?;
    let selection = learn_from_lists(&stage.lists, &stage.anchors, params, &table, rng_seed)?;
    let output = match &selection.choice.choice {
        Choice::Chosen(k) => Some((k.clone(), grid.key_to_spec(k)?)),
        Choice::Bottom => None,
    };
    Ok(LearnOutcome { stage, selection, output })
}

/// Draws `T·m₁` points from `data_source` and runs the learner.
pub fn private_agnostic_learn(
    data_source: &DistributionSpec,
    params: &ReductionParams,
    decoder: &dyn StableListDecoder,
    rng_seed: u64,
) -> Result<LearnOutcome> {
    let needed = params.total_samples();
    if needed > MAX_TOTAL_SAMPLES {
        return Err(ReductionError::SampleBudget { needed, limit: MAX_TOTAL_SAMPLES });
    }
    if data_source.dim() != decoder.grid().dim() {
        return Err(ReductionError::InvalidParameter(format!(
            "data has d = {}, grid has d = {}",
            data_source.dim(),
            decoder.grid().dim()
        )));
    }
    let samples = data_source.sample(needed as usize, seed::derive(rng_seed, "data", 0));
    private_agnostic_learn_from_samples(&samples, params, decoder, rng_seed)
}
