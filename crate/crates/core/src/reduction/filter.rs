//! Filter-and-test and the binary search over OPT̃.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{ReductionError, ReductionParams, Result};
use crate::decode::{CandidateList, Provenance};
use crate::distributions::{tv_distance_1d, tv_distance_mc, CandidateKey, ParameterGrid};
use crate::mechanisms::{sample_tlap, ScoreTable, TruncatedLaplaceParams};
use crate::seed;

/// A TV value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    pub error: f64,
}

pub trait TvOracle: Sync {
    fn distance(&self, f: &CandidateKey, g: &CandidateKey) -> Result<TvEstimate>;
}

/// Quadrature in one dimension; Monte Carlo otherwise, reporting three
/// standard errors.
#[derive(Debug, Clone)]
pub struct GridTvOracle {
    grid: ParameterGrid,
    abs_tol: f64,
    mc_samples: usize,
    rng_seed: u64,
}

impl GridTvOracle {
    pub fn new(grid: ParameterGrid, abs_tol: f64, mc_samples: usize, rng_seed: u64) -> Self {
        GridTvOracle { grid, abs_tol, mc_samples, rng_seed }
    }
}

impl TvOracle for GridTvOracle {
    fn distance(&self, f: &CandidateKey, g: &CandidateKey) -> Result<TvEstimate> {
        if f == g {
            return Ok(TvEstimate { value: 0.0, error: 0.0 });
        }
        let a = self.grid.key_to_spec(f)?;
        let b = self.grid.key_to_spec(g)?;
        if self.grid.dim() == 1 {
            return Ok(TvEstimate { value: tv_distance_1d(&a, &b, self.abs_tol)?, error: self.abs_tol });
        }
        // Order the pair so d(f, g) and d(g, f) share one draw.
        let (lo, hi) = if f < g { (f, g) } else { (g, f) };
        let text = format!("{lo}|{hi}");
        let s = seed::derive_content(self.rng_seed, "tv", text.as_bytes());
        let (value, se) = tv_distance_mc(&a, &b, self.mc_samples, s)?;
        Ok(TvEstimate { value, error: 3.0 * se })
    }
}

/// Wraps a closure, mostly for synthetic tests.
pub struct FnOracle<F>(pub F);

impl<F> TvOracle for FnOracle<F>
where
    F: Fn(&CandidateKey, &CandidateKey) -> f64 + Sync,
{
    fn distance(&self, f: &CandidateKey, g: &CandidateKey) -> Result<TvEstimate> {
        Ok(TvEstimate { value: (self.0)(f, g), error: 0.0 })
    }
}

/// Every (member, anchor) distance, computed once in parallel. Anchors stay
/// fixed across the binary search, so each iteration is a lookup.
#[derive(Debug, Clone, Default)]
pub struct DistanceTable {
    table: BTreeMap<(CandidateKey, CandidateKey), TvEstimate>,
}

impl DistanceTable {
    pub fn build(lists: &[CandidateList], anchors: &[CandidateKey], oracle: &dyn TvOracle) -> Result<Self> {
        check_inputs(lists, anchors)?;
        let mut pairs: Vec<(CandidateKey, CandidateKey)> = lists
            .iter()
            .zip(anchors)
            .flat_map(|(l, a)| l.keys().iter().map(move |k| (k.clone(), a.clone())))
            .collect();
        pairs.sort();
        pairs.dedup();
        let values: Vec<TvEstimate> =
            pairs.par_iter().map(|(f, g)| oracle.distance(f, g)).collect::<Result<_>>()?;
        Ok(DistanceTable { table: pairs.into_iter().zip(values).collect() })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl TvOracle for DistanceTable {
    fn distance(&self, f: &CandidateKey, g: &CandidateKey) -> Result<TvEstimate> {
        self.table
            .get(&(f.clone(), g.clone()))
            .copied()
            .ok_or_else(|| ReductionError::MissingDistance(f.to_string(), g.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn as_char(&self) -> char {
        match self {
            Verdict::Accept => 'A',
            Verdict::Reject => 'R',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub verdict: Verdict,
    pub filtered: Vec<CandidateList>,
    pub scores: ScoreTable,
    pub radius: f64,
    pub noisy_max: f64,
    pub threshold: f64,
}

fn check_inputs(lists: &[CandidateList], anchors: &[CandidateKey]) -> Result<()> {
    if lists.len() != anchors.len() {
        return Err(ReductionError::CountMismatch { lists: lists.len(), anchors: anchors.len() });
    }
    if lists.is_empty() {
        return Err(ReductionError::InvalidParameter("no lists".into()));
    }
    if let Some(index) = lists.iter().zip(anchors).position(|(l, a)| !l.contains(a)) {
        return Err(ReductionError::AnchorNotInList { index });
    }
    Ok(())
}

/// Keeps `f ∈ ℒᵢ` when `d_TV(f, f̂ᵢ) − error ≤ 4C·OPT̃ + 2α′`, scores keys by
/// how many filtered lists hold them, and rejects when
/// `MAX + TLap(1, ε′, δ′)` falls below the test threshold.
pub fn filter_and_test(
    lists: &[CandidateList],
    anchors: &[CandidateKey],
    opt_tilde: f64,
    params: &ReductionParams,
    oracle: &dyn TvOracle,
    rng_seed: u64,
) -> Result<FilterOutcome> {
    check_inputs(lists, anchors)?;
    if !(0.0..=1.0).contains(&opt_tilde) {
        return Err(ReductionError::InvalidParameter(format!("OPT~ = {opt_tilde} outside [0, 1]")));
    }
    let radius = params.filter_radius(opt_tilde);
    let mut filtered = Vec::with_capacity(lists.len());
    for (l, a) in lists.iter().zip(anchors) {
        let mut keep = Vec::new();
        for k in l.keys() {
            let d = oracle.distance(k, a)?;
            if d.value - d.error <= radius {
                keep.push(k.clone());
            }
        }
        let provenance = Provenance { dataset: l.provenance.dataset, mode: "filtered".into() };
        filtered.push(CandidateList::new(keep, provenance));
    }
    let scores = ScoreTable::from_lists(filtered.iter().map(CandidateList::keys));
    let tlap = TruncatedLaplaceParams::new(1.0, params.epsilon_prime, params.delta_prime)?;
    let noisy_max = scores.max() as f64 + sample_tlap(&tlap, rng_seed);
    let threshold = params.test_threshold(lists.len());
    let verdict = if noisy_max < threshold { Verdict::Reject } else { Verdict::Accept };
    Ok(FilterOutcome { verdict, filtered, scores, radius, noisy_max, threshold })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub opt_tilde: f64,
    pub verdict: Verdict,
    pub max: u64,
    pub noisy_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Filtered lists and scores of the last iteration.
    pub filtered: Vec<CandidateList>,
    pub scores: ScoreTable,
    /// UP when the loop stops.
    pub opt_tilde_final: f64,
    pub lp: f64,
    pub up: f64,
    pub history: Vec<IterationRecord>,
}

impl SearchOutcome {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// One character per iteration, `A` or `R`.
    pub fn verdicts(&self) -> String {
        self.history.iter().map(|r| r.verdict.as_char()).collect()
    }
}

/// Bisects `[LP, UP] = [0, 1]` until `UP − LP ≤ α′`, moving LP up on a
/// reject and UP down on an accept. Iteration j draws its noise from
/// `derive(seed, "filter-test", j)`.
pub fn get_candidates_and_scores(
    lists: &[CandidateList],
    anchors: &[CandidateKey],
    params: &ReductionParams,
    oracle: &dyn TvOracle,
    rng_seed: u64,
) -> Result<SearchOutcome> {
    check_inputs(lists, anchors)?;
    let (mut lp, mut up) = (0.0f64, 1.0f64);
    let mut history = Vec::new();
    let mut last = None;
    while up - lp > params.alpha_prime {
        let opt_tilde = 0.5 * (lp + up);
        let s = seed::derive(rng_seed, "filter-test", history.len() as u64);
        let out = filter_and_test(lists, anchors, opt_tilde, params, oracle, s)?;
        match out.verdict {
            Verdict::Reject => lp = opt_tilde,
            Verdict::Accept => up = opt_tilde,
        }
        history.push(IterationRecord {
            opt_tilde,
            verdict: out.verdict,
            max: out.scores.max(),
            noisy_max: out.noisy_max,
        });
        last = Some(out);
    }
    let (filtered, scores) = match last {
        Some(o) => (o.filtered, o.scores),
        // α′ ≥ 1: the loop never runs and nothing has been filtered.
        None => (Vec::new(), ScoreTable::new()),
    };
    Ok(SearchOutcome { filtered, scores, opt_tilde_final: up, lp, up, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::DecoderContract;
    use crate::reduction::{desk_params, DeskOverrides};

    fn key(i: u32) -> CandidateKey {
        CandidateKey::Gaussian { mean: vec![i], logvar: vec![0] }
    }

    fn list(keys: &[u32]) -> CandidateList {
        CandidateList::new(keys.iter().map(|&i| key(i)).collect(), Provenance::default())
    }

    fn params(eps: f64, delta: f64) -> ReductionParams {
        let c = DecoderContract::new(10, 0.91, 1000.0, 3.0, 0.1).unwrap();
        desk_params(0.3, 0.1, eps, delta, 3.0, &c, &DeskOverrides::default()).unwrap()
    }

    #[test]
    fn full_radius_filters_nothing() {
        let lists = vec![list(&[0, 1, 2]), list(&[1, 5])];
        let anchors = vec![key(0), key(5)];
        let p = params(1.0, 0.1);
        let out = filter_and_test(&lists, &anchors, 1.0, &p, &FnOracle(|_: &_, _: &_| 1.0), 0).unwrap();
        assert_eq!(out.filtered.iter().map(CandidateList::len).collect::<Vec<_>>(), vec![3, 2]);
        assert_eq!(out.scores.score(&key(1)), 2);
    }

    #[test]
    fn zero_radius_keeps_anchors() {
        let lists = vec![list(&[0, 1, 2]), list(&[0, 5]), list(&[0, 3])];
        let anchors = vec![key(0), key(0), key(3)];
        let p = params(1.0, 0.1);
        let far = FnOracle(|f: &CandidateKey, g: &CandidateKey| if f == g { 0.0 } else { 1.0 });
        let out = filter_and_test(&lists, &anchors, 0.0, &p, &far, 0).unwrap();
        assert_eq!(out.scores.score(&key(0)), 2);
        assert_eq!(out.scores.score(&key(3)), 1);
        assert_eq!(out.scores.score(&key(1)), 0);
    }

    #[test]
    fn clear_majority_is_accepted() {
        // MAX = 95 ≥ 80 + 2R with R ≈ 2.9, so every draw accepts.
        let c = DecoderContract::new(10, 0.91, 1000.0, 3.0, 0.1).unwrap();
        let mut p =
            desk_params(0.3, 0.1, 1.0, 0.05, 3.0, &c, &DeskOverrides { lists: 100, ..Default::default() }).unwrap();
        p.epsilon_prime = 1.0;
        p.delta_prime = 0.05;
        let mut lists = vec![list(&[7]); 95];
        let mut anchors = vec![key(7); 95];
        for i in 0..5 {
            lists.push(list(&[100 + i]));
            anchors.push(key(100 + i));
        }
        let zero = FnOracle(|_: &_, _: &_| 0.0);
        for s in 0..500 {
            let out = filter_and_test(&lists, &anchors, 0.5, &p, &zero, s).unwrap();
            assert_eq!(out.verdict, Verdict::Accept);
        }
    }

    #[test]
    fn anchor_must_be_listed() {
        let p = params(1.0, 0.1);
        let zero = FnOracle(|_: &_, _: &_| 0.0);
        assert_eq!(
            filter_and_test(&[list(&[1]), list(&[2])], &[key(1), key(3)], 0.5, &p, &zero, 0),
            Err(ReductionError::AnchorNotInList { index: 1 })
        );
        assert!(matches!(
            filter_and_test(&[list(&[1])], &[], 0.5, &p, &zero, 0),
            Err(ReductionError::CountMismatch { .. })
        ));
    }

    #[test]
    fn identical_singletons_collapse_up() {
        let p = params(20.0, 0.25);
        let lists = vec![list(&[4]); 60];
        let anchors = vec![key(4); 60];
        let out = get_candidates_and_scores(&lists, &anchors, &p, &FnOracle(|_: &_, _: &_| 0.0), 9).unwrap();
        assert_eq!(out.verdicts(), "AAAAAA");
        assert!(out.opt_tilde_final <= p.alpha_prime);
        assert_eq!(out.scores.score(&key(4)), 60);
    }

    #[test]
    fn no_majority_rejects_throughout() {
        let p = params(20.0, 0.25);
        let lists: Vec<_> = (0..60).map(|i| list(&[i])).collect();
        let anchors: Vec<_> = (0..60).map(key).collect();
        let out = get_candidates_and_scores(&lists, &anchors, &p, &FnOracle(|_: &_, _: &_| 0.0), 9).unwrap();
        assert_eq!(out.verdicts(), "RRRRRR");
        assert!(out.lp >= 1.0 - p.alpha_prime);
        assert_eq!(out.scores.max(), 1);
    }

    #[test]
    fn planted_key_sets_the_radius() {
        // Key 0 sits in 55 lists at distance radius(0.1) from their anchors.
        let p = params(20.0, 0.25);
        let r = p.filter_radius(0.1);
        let mut lists = Vec::new();
        let mut anchors = Vec::new();
        for i in 0..60u32 {
            let own = 1000 + i;
            lists.push(if i < 55 { list(&[0, own]) } else { list(&[own]) });
            anchors.push(key(own));
        }
        let oracle = FnOracle(move |f: &CandidateKey, g: &CandidateKey| if f == g { 0.0 } else { r });
        let out = get_candidates_and_scores(&lists, &anchors, &p, &oracle, 1).unwrap();
        assert_eq!(out.verdicts(), "AAARRA");
        assert!(out.opt_tilde_final >= 0.1 && out.opt_tilde_final <= 0.1 + p.alpha_prime);
        assert!(out.iterations() <= p.iterations());
        assert_eq!(out.scores.score(&key(0)), 55);
    }

    #[test]
    fn distance_table_matches_its_oracle() {
        let lists = vec![list(&[0, 1]), list(&[1, 2])];
        let anchors = vec![key(0), key(2)];
        let o = FnOracle(|f: &CandidateKey, g: &CandidateKey| {
            let (CandidateKey::Gaussian { mean: a, .. }, CandidateKey::Gaussian { mean: b, .. }) = (f, g) else {
                unreachable!()
            };
            f64::from(a[0].abs_diff(b[0])) / 10.0
        });
        let t = DistanceTable::build(&lists, &anchors, &o).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.distance(&key(1), &key(2)).unwrap().value, 0.1);
        assert!(t.distance(&key(0), &key(2)).is_err());
    }
}
