//! Minimum distance estimator over a finite candidate list.
//!
//! For candidates f₁..f_L the Yatracos sets are `A_ij = {x : f_i(x) > f_j(x)}`
//! for ordered pairs i ≠ j (strict, so ties are outside). The estimator
//! returns the candidate minimizing `max_ij |P_f(A_ij) − P̂(A_ij)|`, where P̂
//! is the empirical frequency on the data and `P_f` is a Monte Carlo estimate
//! from `mc_samples` draws of f. Ties go to the lowest index.
//!
//! Each candidate's draws are seeded by hashing its text form, so permuting
//! the list permutes the result exactly. The search bounds every candidate
//! from below by the pairs among the few most likely ones, visits candidates
//! by increasing bound and abandons one as soon as a single pair proves it
//! cannot beat the incumbent; [`mde_select_brute_force`] computes every
//! discrepancy and must agree.

use thiserror::Error;

use crate::distributions::{DistributionSpec, Point};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdeError {
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("data set is empty")]
    EmptyData,
    #[error("mc_samples must be >= 1")]
    NoMonteCarlo,
    #[error("dimension mismatch: candidates have d = {expected}, found {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdeOutcome {
    pub index: usize,
    pub discrepancy: f64,
    /// Worst-case standard error of a single `P_f(A)` estimate, `0.5/sqrt(mc)`.
    pub mc_std_error: f64,
    /// Candidates whose discrepancy was computed over every pair.
    pub fully_evaluated: usize,
}

/// `ceil(ln(L/β)/α²)`; zero when `L/β ≤ 1`.
pub fn mde_sample_size(list_size: usize, alpha: f64, beta: f64) -> usize {
    let v = ((list_size as f64 / beta).ln() / (alpha * alpha)).ceil();
    if v > 0.0 {
        v as usize
    } else {
        0
    }
}

struct Problem<'a> {
    candidates: &'a [DistributionSpec],
    mc_samples: usize,
    rng_seed: u64,
    n_data: f64,
    /// `data_counts[i * L + j]` = #{data points in A_ij}.
    data_counts: Vec<u32>,
}

impl<'a> Problem<'a> {
    fn new(
        candidates: &'a [DistributionSpec],
        data: &[Point],
        mc_samples: usize,
        rng_seed: u64,
    ) -> Result<Self, MdeError> {
        if candidates.is_empty() {
            return Err(MdeError::EmptyCandidates);
        }
        if data.is_empty() {
            return Err(MdeError::EmptyData);
        }
        if mc_samples == 0 {
            return Err(MdeError::NoMonteCarlo);
        }
        let d = candidates[0].dim();
        if let Some(c) = candidates.iter().find(|c| c.dim() != d) {
            return Err(MdeError::DimensionMismatch { expected: d, got: c.dim() });
        }
        if let Some(x) = data.iter().find(|x| x.len() != d) {
            return Err(MdeError::DimensionMismatch { expected: d, got: x.len() });
        }
        let l = candidates.len();
        let rows: Vec<Vec<f64>> = candidates
            .iter()
            .map(|c| data.iter().map(|x| c.log_density_unchecked(x)).collect())
            .collect();
        let mut data_counts = vec![0u32; l * l];
        for i in 0..l {
            for j in i + 1..l {
                let (a, b) = count_pair(&rows[i], &rows[j]);
                data_counts[i * l + j] = a;
                data_counts[j * l + i] = b;
            }
        }
        Ok(Problem { candidates, mc_samples, rng_seed, n_data: data.len() as f64, data_counts })
    }

    fn log_likelihoods(&self, data: &[Point]) -> Vec<f64> {
        self.candidates
            .iter()
            .map(|c| data.iter().map(|x| c.log_density_unchecked(x)).sum())
            .collect()
    }

    fn draws(&self, f: usize) -> Vec<Point> {
        let spec = &self.candidates[f];
        let s = seed::derive_content(self.rng_seed, "mde-candidate", spec.to_string().as_bytes());
        spec.sample(self.mc_samples, s)
    }
}

fn count_pair(a: &[f64], b: &[f64]) -> (u32, u32) {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    // Lane-wise wrapping accumulators so the loop vectorizes even with
    // overflow checks on; counts are bounded by the slice length.
    let mut gt = [0u64; 8];
    let mut lt = [0u64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            gt[k] = gt[k].wrapping_add(u64::from(x[k] > y[k]));
            lt[k] = lt[k].wrapping_add(u64::from(y[k] > x[k]));
        }
    }
    let (mut g, mut l): (u64, u64) = (gt.iter().sum(), lt.iter().sum());
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        g += u64::from(x > y);
        l += u64::from(y > x);
    }
    (g as u32, l as u32)
}

/// Discrepancy of candidate f, or `None` once a pair shows it cannot win.
struct Evaluator<'p, 'a> {
    problem: &'p Problem<'a>,
    draws: Vec<Point>,
    rows: Vec<Option<Vec<f64>>>,
}

impl<'p, 'a> Evaluator<'p, 'a> {
    fn new(problem: &'p Problem<'a>, f: usize) -> Self {
        let l = problem.candidates.len();
        Evaluator { problem, draws: problem.draws(f), rows: vec![None; l] }
    }

    fn row(&mut self, c: usize) {
        if self.rows[c].is_none() {
            let spec = &self.problem.candidates[c];
            self.rows[c] = Some(self.draws.iter().map(|x| spec.log_density_unchecked(x)).collect());
        }
    }

    fn pair(&mut self, i: usize, j: usize) -> f64 {
        self.row(i);
        self.row(j);
        let (a, b) = count_pair(
            self.rows[i].as_deref().expect("row computed"),
            self.rows[j].as_deref().expect("row computed"),
        );
        let p = self.problem;
        let l = p.candidates.len();
        let m = p.mc_samples as f64;
        let dij = (f64::from(a) / m - f64::from(p.data_counts[i * l + j]) / p.n_data).abs();
        let dji = (f64::from(b) / m - f64::from(p.data_counts[j * l + i]) / p.n_data).abs();
        dij.max(dji)
    }
}

/// Which pairs may be used to cut a candidate off early.
struct Bound {
    best: f64,
    /// True when f has a larger index than the incumbent, so equality loses.
    ties_lose: bool,
}

impl Bound {
    fn cuts(&self, running: f64) -> bool {
        running > self.best || (self.ties_lose && running >= self.best)
    }
}

fn evaluate(
    ev: &mut Evaluator<'_, '_>,
    bound: Option<&Bound>,
    start: f64,
    hot: &mut Vec<(usize, usize)>,
) -> Option<f64> {
    let l = ev.problem.candidates.len();
    let mut running = start;
    if let Some(b) = bound {
        for h in 0..hot.len() {
            let (i, j) = hot[h];
            running = running.max(ev.pair(i, j));
            if b.cuts(running) {
                let p = hot.remove(h);
                hot.insert(0, p);
                return None;
            }
        }
    }
    let mut worst = (0, 0);
    let mut worst_val = -1.0;
    for i in 0..l {
        for j in i + 1..l {
            let v = ev.pair(i, j);
            if v > worst_val {
                worst_val = v;
                worst = (i, j);
            }
            running = running.max(v);
            if let Some(b) = bound {
                if b.cuts(running) {
                    remember(hot, (i, j));
                    return None;
                }
            }
        }
    }
    if l > 1 {
        remember(hot, worst);
    }
    Some(running)
}

const PROBE: usize = 6;

fn remember(hot: &mut Vec<(usize, usize)>, pair: (usize, usize)) {
    const HOT_CAP: usize = 32;
    if let Some(pos) = hot.iter().position(|p| *p == pair) {
        hot.remove(pos);
    }
    hot.insert(0, pair);
    hot.truncate(HOT_CAP);
}

pub fn mde_select(
    candidates: &[DistributionSpec],
    data: &[Point],
    mc_samples: usize,
    rng_seed: u64,
) -> Result<usize, MdeError> {
    Ok(mde_select_detailed(candidates, data, mc_samples, rng_seed)?.index)
}

pub fn mde_select_detailed(
    candidates: &[DistributionSpec],
    data: &[Point],
    mc_samples: usize,
    rng_seed: u64,
) -> Result<MdeOutcome, MdeError> {
    let problem = Problem::new(candidates, data, mc_samples, rng_seed)?;
    let mc_std_error = 0.5 / (mc_samples as f64).sqrt();
    if candidates.len() == 1 {
        return Ok(MdeOutcome { index: 0, discrepancy: 0.0, mc_std_error, fully_evaluated: 0 });
    }
    let ll = problem.log_likelihoods(data);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| ll[b].total_cmp(&ll[a]).then(a.cmp(&b)));

    // Lower bounds from the pairs among the most likely candidates; the
    // search then visits candidates by increasing bound and skips any whose
    // bound already loses.
    let probe = &order[..order.len().min(PROBE)];
    let mut evals: Vec<(Evaluator<'_, '_>, f64)> = (0..candidates.len())
        .map(|f| {
            let mut ev = Evaluator::new(&problem, f);
            let mut lb = 0.0f64;
            for (a, &i) in probe.iter().enumerate() {
                for &j in &probe[a + 1..] {
                    lb = lb.max(ev.pair(i, j));
                }
            }
            (ev, lb)
        })
        .collect();
    let rank: Vec<usize> = {
        let mut r = vec![0; order.len()];
        for (pos, &f) in order.iter().enumerate() {
            r[f] = pos;
        }
        r
    };
    order.sort_by(|&a, &b| evals[a].1.total_cmp(&evals[b].1).then(rank[a].cmp(&rank[b])));

    let mut hot = Vec::new();
    let first = order[0];
    let lb0 = evals[first].1;
    let mut best = (first, evaluate(&mut evals[first].0, None, lb0, &mut hot).expect("no bound"));
    let mut fully_evaluated = 1;
    for &f in &order[1..] {
        let bound = Bound { best: best.1, ties_lose: f > best.0 };
        let (ev, lb) = &mut evals[f];
        if bound.cuts(*lb) {
            continue;
        }
        let lb = *lb;
        if let Some(d) = evaluate(ev, Some(&bound), lb, &mut hot) {
            fully_evaluated += 1;
            if d < best.1 || (d == best.1 && f < best.0) {
                best = (f, d);
            }
        }
    }
    Ok(MdeOutcome { index: best.0, discrepancy: best.1, mc_std_error, fully_evaluated })
}

/// Reference implementation: every discrepancy in full, then the argmin.
pub fn mde_select_brute_force(
    candidates: &[DistributionSpec],
    data: &[Point],
    mc_samples: usize,
    rng_seed: u64,
) -> Result<(usize, Vec<f64>), MdeError> {
    let problem = Problem::new(candidates, data, mc_samples, rng_seed)?;
    let mut hot = Vec::new();
    let ds: Vec<f64> = (0..candidates.len())
        .map(|f| evaluate(&mut Evaluator::new(&problem, f), None, 0.0, &mut hot).expect("no bound"))
        .collect();
    let mut best = 0;
    for (i, d) in ds.iter().enumerate() {
        if *d < ds[best] {
            best = i;
        }
    }
    Ok((best, ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::tv_distance_1d;

    fn n(m: f64, v: f64) -> DistributionSpec {
        DistributionSpec::gaussian_1d(m, v).unwrap()
    }

    #[test]
    fn sample_size_formula() {
        assert_eq!(mde_sample_size(1, 0.5, 0.5), 3);
        assert_eq!(mde_sample_size(10, 0.1, 0.1), 461);
        assert_eq!(mde_sample_size(1, 1.0, 1.0), 0);
    }

    #[test]
    fn singleton() {
        let data = n(5.0, 1.0).sample(10, 1);
        assert_eq!(mde_select(&[n(0.0, 1.0)], &data, 10, 0).unwrap(), 0);
    }

    #[test]
    fn picks_the_generating_candidate() {
        let data = n(0.0, 1.0).sample(200, 11);
        assert_eq!(mde_select(&[n(0.0, 1.0), n(10.0, 1.0)], &data, 100_000, 3).unwrap(), 0);
        assert_eq!(mde_select(&[n(10.0, 1.0), n(0.0, 1.0)], &data, 100_000, 3).unwrap(), 1);
    }

    #[test]
    fn near_duplicates_are_both_fine() {
        let truth = n(0.0, 1.0);
        let cands = [n(0.0, 1.0), n(0.01, 1.0)];
        let data = truth.sample(500, 4);
        let i = mde_select(&cands, &data, 2000, 5).unwrap();
        let tv = tv_distance_1d(&cands[i], &truth, 1e-9).unwrap();
        assert!(tv <= 3.0 * 0.0 + 0.1);
    }

    #[test]
    fn errors() {
        let data = n(0.0, 1.0).sample(5, 1);
        assert_eq!(mde_select(&[], &data, 10, 0), Err(MdeError::EmptyCandidates));
        assert_eq!(mde_select(&[n(0.0, 1.0)], &[], 10, 0), Err(MdeError::EmptyData));
        assert_eq!(mde_select(&[n(0.0, 1.0)], &data, 0, 0), Err(MdeError::NoMonteCarlo));
        assert!(matches!(
            mde_select(&[n(0.0, 1.0)], &[vec![0.0, 1.0]], 10, 0),
            Err(MdeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pruned_search_equals_brute_force() {
        for trial in 0..20u64 {
            let cands: Vec<DistributionSpec> = (0..12)
                .map(|i| n(-1.5 + 0.25 * (i % 6) as f64, if i < 6 { 1.0 } else { 1.6 }))
                .collect();
            let data = n(0.1 * trial as f64 - 1.0, 1.2).sample(150, 100 + trial);
            let fast = mde_select_detailed(&cands, &data, 300, trial).unwrap();
            let (slow, ds) = mde_select_brute_force(&cands, &data, 300, trial).unwrap();
            assert_eq!(fast.index, slow, "trial {trial}");
            assert_eq!(fast.discrepancy, ds[slow]);
        }
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        let c = n(0.0, 1.0);
        let data = c.sample(50, 2);
        assert_eq!(mde_select(&[c.clone(), c.clone(), c], &data, 100, 9).unwrap(), 0);
    }

    #[test]
    fn permutation_equivariance() {
        let cands = vec![n(-1.0, 1.0), n(0.0, 1.0), n(0.5, 2.0), n(3.0, 1.0)];
        let data = n(0.2, 1.1).sample(120, 8);
        let base = mde_select(&cands, &data, 400, 21).unwrap();
        let perm = [2usize, 0, 3, 1];
        let permuted: Vec<DistributionSpec> = perm.iter().map(|&i| cands[i].clone()).collect();
        let got = mde_select(&permuted, &data, 400, 21).unwrap();
        assert_eq!(perm[got], base);
    }
}
