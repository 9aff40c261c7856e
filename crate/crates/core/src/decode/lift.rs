//! Lifting a stable list decoder for a class F to its k-mixtures.
//!
//! The base decoder is run on a family of subsets of the sample and the
//! union of its outputs forms ℋ. Two ways of combining ℋ are offered:
//!
//! * [`LiftMode::Product`]: every mixture `Σ wⱼhⱼ` with `w` in the simplex
//!   cover at resolution `α/k` and `hⱼ ∈ ℋ`. This list is as large as
//!   `|cover|·|ℋ|^k`.
//! * [`LiftMode::Partition`]: the sample is sorted by its first coordinate
//!   and split into k contiguous parts at cover fractions `j/N`. Each part is
//!   decoded on its own and the part fractions become the weights. Every key
//!   produced this way also appears in the product list, which is much
//!   larger.
//!
//! The subset family is exhaustive when `C(n, m)` is within the budget.
//! Otherwise it is structured: every contiguous range of the sorted sample,
//! cut at the cover fractions, that can be one part of a k-part split and
//! holds at least `m` points. Optional uniformly random m-subsets are added
//! on top. For k = 1 the only range is the whole sample, so the lift is the
//! base list with weight 1.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;

use super::{
    build_simplex_cover, check_samples, contract_for_mixture, mixture_sample_size, CandidateList,
    DecodeError, DecoderContract, Provenance, Result, StableListDecoder,
};
use crate::distributions::{CandidateKey, ParameterGrid, Point};
use crate::seed;

const MAX_PRODUCT_KEYS: f64 = 5e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    Product,
    Partition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub subset_budget: u64,
    pub random_subsets: usize,
    pub mode: LiftMode,
}

impl LiftParams {
    pub fn new(k: usize, alpha: f64, beta: f64, mode: LiftMode) -> Self {
        LiftParams { k, alpha, beta, subset_budget: 2000, random_subsets: 0, mode }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(DecodeError::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0 && self.beta > 0.0 && self.beta < 1.0) {
            return Err(DecodeError::InvalidParameter(format!(
                "alpha {}, beta {} outside (0, 1)",
                self.alpha, self.beta
            )));
        }
        if self.subset_budget == 0 {
            return Err(DecodeError::InvalidParameter("subset_budget must be >= 1".into()));
        }
        Ok(())
    }
}

fn ln_binomial(n: usize, m: usize) -> f64 {
    if m > n {
        return f64::NEG_INFINITY;
    }
    let m = m.min(n - m);
    (0..m).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Sample positions of the cover fractions `j/N` in the sorted order.
fn cut_position(j: u32, n_cells: u32, n: usize) -> usize {
    let (j, cells, n) = (u64::from(j), u64::from(n_cells), n as u64);
    ((2 * j * n + cells) / (2 * cells)) as usize
}

fn sorted_order(samples: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| samples[a][0].total_cmp(&samples[b][0]).then(a.cmp(&b)));
    idx
}

/// Compositions of `n` into `k` positive parts, in lexicographic order.
fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn go(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            if left >= 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for first in 1..left {
            cur.push(first);
            go(left - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, &mut Vec::new(), &mut out);
    out
}

struct RangeDecoder<'a> {
    base: &'a dyn StableListDecoder,
    samples: &'a [Point],
    order: Vec<usize>,
    n_cells: u32,
    rng_seed: u64,
    cache: BTreeMap<(u32, u32), Option<Vec<CandidateKey>>>,
}

impl<'a> RangeDecoder<'a> {
    /// Base output on the sorted range of cells `[a, b)`, or `None` when it
    /// holds fewer than the base sample size.
    fn decode(&mut self, a: u32, b: u32) -> Result<Option<Vec<CandidateKey>>> {
        if let Some(hit) = self.cache.get(&(a, b)) {
            return Ok(hit.clone());
        }
        let n = self.samples.len();
        let (lo, hi) = (cut_position(a, self.n_cells, n), cut_position(b, self.n_cells, n));
        let out = if hi - lo < self.base.contract().sample_size {
            None
        } else {
            let part: Vec<Point> = self.order[lo..hi].iter().map(|&i| self.samples[i].clone()).collect();
            let s = seed::derive(self.rng_seed, "lift-range", u64::from(a) << 32 | u64::from(b));
            Some(self.base.decode(&part, s)?.into_keys())
        };
        self.cache.insert((a, b), out.clone());
        Ok(out)
    }
}

/// Union of base outputs over the subset family, and the family's name.
fn hypotheses(
    base: &dyn StableListDecoder,
    samples: &[Point],
    params: &LiftParams,
    n_cells: u32,
    rng_seed: u64,
) -> Result<(Vec<CandidateKey>, String)> {
    let m = base.contract().sample_size;
    let n = samples.len();
    let mut h = Vec::new();
    if ln_binomial(n, m) <= (params.subset_budget as f64).ln() {
        let mut combo: Vec<usize> = (0..m).collect();
        let mut count = 0u64;
        loop {
            let subset: Vec<Point> = combo.iter().map(|&i| samples[i].clone()).collect();
            h.extend(base.decode(&subset, seed::derive(rng_seed, "lift-exhaustive", count))?.into_keys());
            count += 1;
            // Next m-combination of 0..n in lexicographic order.
            let mut i = m;
            loop {
                if i == 0 {
                    h.sort();
                    h.dedup();
                    return Ok((h, "exhaustive".into()));
                }
                i -= 1;
                if combo[i] < n - m + i {
                    break;
                }
            }
            combo[i] += 1;
            for j in i + 1..m {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    let mut rd = RangeDecoder { base, samples, order: sorted_order(samples), n_cells, rng_seed, cache: BTreeMap::new() };
    let k = params.k as u32;
    for a in 0..n_cells {
        for b in a + 1..=n_cells {
            let needed = u32::from(a > 0) + u32::from(b < n_cells);
            let free = a + (n_cells - b);
            let is_part = if k == 1 { a == 0 && b == n_cells } else { needed < k && free >= k - 1 };
            if is_part {
                if let Some(keys) = rd.decode(a, b)? {
                    h.extend(keys);
                }
            }
        }
    }
    let mut mode = String::from("structured");
    if params.random_subsets > 0 {
        mode.push_str("+random");
        for r in 0..params.random_subsets {
            let mut rng = seed::rng(seed::derive(rng_seed, "lift-random", r as u64));
            let subset: Vec<Point> = sample_indices(&mut rng, n, m).iter().map(|i| samples[i].clone()).collect();
            h.extend(base.decode(&subset, seed::derive(rng_seed, "lift-random-decode", r as u64))?.into_keys());
        }
    }
    h.sort();
    h.dedup();
    Ok((h, mode))
}

fn product_keys(cover_units: &[Vec<u32>], denominator: u32, h: &[CandidateKey], k: usize) -> Result<Vec<CandidateKey>> {
    let size = cover_units.len() as f64 * (h.len() as f64).powi(k as i32);
    if size > MAX_PRODUCT_KEYS {
        return Err(DecodeError::InvalidParameter(format!(
            "product lift would build {size:.3e} keys; use the partition mode"
        )));
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut pick = vec![0usize; k];
    for w in cover_units {
        if h.is_empty() {
            break;
        }
        pick.iter_mut().for_each(|p| *p = 0);
        loop {
            let entries = w.iter().zip(&pick).map(|(u, &p)| (*u, h[p].clone())).collect();
            out.push(CandidateKey::mixture(denominator, entries)?);
            let mut i = 0;
            while i < k {
                pick[i] += 1;
                if pick[i] < h.len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    }
    Ok(out)
}

fn mixture_sentinel(grid: &ParameterGrid) -> CandidateKey {
    CandidateKey::mixture(1, vec![(1, grid.origin_key())]).expect("one unit of weight")
}

pub fn lift_to_mixture(
    base: &dyn StableListDecoder,
    samples: &[Point],
    params: &LiftParams,
    rng_seed: u64,
) -> Result<CandidateList> {
    params.validate()?;
    let m1 = mixture_sample_size(base.contract().sample_size, params.k, params.alpha, params.beta);
    check_samples(samples, m1, base.grid().dim())?;
    let cover = build_simplex_cover(params.k, params.alpha / params.k as f64)?;
    let n_cells = cover.denominator();
    match params.mode {
        LiftMode::Product => {
            let (h, mode) = hypotheses(base, samples, params, n_cells, rng_seed)?;
            let keys = product_keys(cover.units(), n_cells, &h, params.k)?;
            Ok(CandidateList::new(keys, Provenance { dataset: None, mode }))
        }
        LiftMode::Partition => {
            let g0 = base.grid().origin_key();
            let mut rd = RangeDecoder {
                base,
                samples,
                order: sorted_order(samples),
                n_cells,
                rng_seed,
                cache: BTreeMap::new(),
            };
            let mut keys = vec![mixture_sentinel(base.grid())];
            for comp in compositions(n_cells, params.k) {
                let mut parts: Vec<Vec<CandidateKey>> = Vec::with_capacity(params.k);
                let mut a = 0;
                for &u in &comp {
                    match rd.decode(a, a + u)? {
                        Some(mut ks) => {
                            ks.retain(|x| *x != g0);
                            parts.push(ks);
                        }
                        None => break,
                    }
                    a += u;
                }
                if parts.len() < params.k || parts.iter().any(Vec::is_empty) {
                    continue;
                }
                let mut pick = vec![0usize; params.k];
                loop {
                    let entries =
                        comp.iter().zip(&pick).zip(&parts).map(|((u, &p), ks)| (*u, ks[p].clone())).collect();
                    keys.push(CandidateKey::mixture(n_cells, entries)?);
                    let mut i = 0;
                    while i < params.k {
                        pick[i] += 1;
                        if pick[i] < parts[i].len() {
                            break;
                        }
                        pick[i] = 0;
                        i += 1;
                    }
                    if i == params.k {
                        break;
                    }
                }
            }
            Ok(CandidateList::new(keys, Provenance { dataset: None, mode: "partition".into() }))
        }
    }
}

/// A base decoder together with lift parameters, itself a decoder.
pub struct LiftedDecoder<D> {
    base: D,
    params: LiftParams,
    contract: DecoderContract,
}

impl<D: StableListDecoder> LiftedDecoder<D> {
    pub fn new(base: D, params: LiftParams) -> Result<Self> {
        params.validate()?;
        let bc = *base.contract();
        let contract = match params.mode {
            LiftMode::Product => contract_for_mixture(&bc, params.k, params.alpha, params.beta)?,
            LiftMode::Partition => {
                let cover = build_simplex_cover(params.k, params.alpha / params.k as f64)?;
                let splits = compositions(cover.denominator(), params.k).len() as f64;
                let per_part = (bc.list_bound() - 1.0).max(1.0);
                let l = splits * per_part.powi(params.k as i32) + 1.0;
                let generic = contract_for_mixture(&bc, params.k, params.alpha, params.beta)?;
                DecoderContract::new(generic.sample_size, generic.stability, l, generic.c, generic.alpha)?
            }
        };
        Ok(LiftedDecoder { base, params, contract })
    }

    pub fn base(&self) -> &D {
        &self.base
    }

    pub fn params(&self) -> &LiftParams {
        &self.params
    }
}

impl<D: StableListDecoder> StableListDecoder for LiftedDecoder<D> {
    fn contract(&self) -> &DecoderContract {
        &self.contract
    }

    fn grid(&self) -> &ParameterGrid {
        self.base.grid()
    }

    fn decode(&self, samples: &[Point], rng_seed: u64) -> Result<CandidateList> {
        lift_to_mixture(&self.base, samples, &self.params, rng_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::{FixedDecoder, GaussianDecoder};
    use crate::distributions::{tv_distance_1d, DistributionSpec};

    fn grid() -> ParameterGrid {
        ParameterGrid::new(10.0, 0.25, -1.5, 1.5, 0.3, 1).unwrap()
    }

    fn data(n: usize, seed: u64) -> Vec<Point> {
        DistributionSpec::mixture(
            vec![0.5, 0.5],
            vec![DistributionSpec::gaussian_1d(-8.0, 1.0).unwrap(), DistributionSpec::gaussian_1d(8.0, 1.0).unwrap()],
        )
        .unwrap()
        .sample(n, seed)
    }

    #[test]
    fn helpers() {
        assert_eq!(compositions(4, 2), vec![vec![1, 3], vec![2, 2], vec![3, 1]]);
        assert_eq!(compositions(4, 1), vec![vec![4]]);
        assert_eq!(compositions(3, 3), vec![vec![1, 1, 1]]);
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(cut_position(0, 4, 10), 0);
        assert_eq!(cut_position(4, 4, 10), 10);
        assert_eq!(cut_position(2, 4, 10), 5);
    }

    #[test]
    fn k1_lift_is_the_base_list() {
        let base = GaussianDecoder::new(grid(), 1, 40, 0.9, 0.1).unwrap();
        let p = LiftParams::new(1, 0.5, 0.2, LiftMode::Product);
        let m1 = mixture_sample_size(40, 1, 0.5, 0.2);
        let s = data(m1, 3);
        let base_list = base.decode(&s, 0).unwrap();
        let expected: Vec<CandidateKey> = base_list
            .keys()
            .iter()
            .map(|h| CandidateKey::mixture(1, vec![(1, h.clone())]).unwrap())
            .collect();
        let lifted = lift_to_mixture(&base, &s, &p, 9).unwrap();
        assert_eq!(lifted.keys(), CandidateList::new(expected, Provenance::default()).keys());
        let part = lift_to_mixture(&base, &s, &LiftParams { mode: LiftMode::Partition, ..p }, 9).unwrap();
        assert_eq!(part.keys(), lifted.keys());
    }

    #[test]
    fn product_size_bound() {
        let gr = grid();
        let h = vec![gr.snap_values(&[-8.0], &[1.0]), gr.snap_values(&[8.0], &[1.0])];
        let base = FixedDecoder::new(gr, h, 4).unwrap();
        let p = LiftParams::new(2, 0.5, 0.2, LiftMode::Product);
        let s = data(mixture_sample_size(4, 2, 0.5, 0.2), 1);
        let cover = build_simplex_cover(2, 0.25).unwrap();
        let lifted = lift_to_mixture(&base, &s, &p, 0).unwrap();
        assert!(lifted.len() <= cover.len() * 4);
    }

    #[test]
    fn partition_keys_are_in_the_product_list() {
        let base = GaussianDecoder::new(grid(), 1, 40, 0.9, 0.1).unwrap();
        let s = data(372, 5);
        let part = lift_to_mixture(&base, &s, &LiftParams::new(2, 0.5, 0.2, LiftMode::Partition), 1).unwrap();
        let prod = lift_to_mixture(&base, &s, &LiftParams::new(2, 0.5, 0.2, LiftMode::Product), 1).unwrap();
        assert!(part.len() < prod.len());
        assert!(part.keys().iter().all(|k| prod.contains(k)));
    }

    #[test]
    fn separated_target_is_listed() {
        let target = DistributionSpec::mixture(
            vec![0.5, 0.5],
            vec![DistributionSpec::gaussian_1d(-8.0, 1.0).unwrap(), DistributionSpec::gaussian_1d(8.0, 1.0).unwrap()],
        )
        .unwrap();
        let gr = grid();
        let base = GaussianDecoder::new(gr.clone(), 1, 40, 0.9, 0.1).unwrap();
        let dec = LiftedDecoder::new(base, LiftParams::new(2, 0.5, 0.2, LiftMode::Partition)).unwrap();
        let list = dec.decode(&data(372, 8), 2).unwrap();
        assert!(list.check(dec.contract()).is_ok());
        let best = list
            .keys()
            .iter()
            .map(|k| tv_distance_1d(&gr.key_to_spec(k).unwrap(), &target, 1e-6).unwrap())
            .fold(1.0, f64::min);
        assert!(best < 0.25, "best {best}");
    }

    #[test]
    fn exhaustive_mode_for_tiny_samples() {
        let gr = grid();
        let base = GaussianDecoder::new(gr, 0, 2, 0.9, 0.1).unwrap();
        let mut p = LiftParams::new(1, 0.9, 0.9, LiftMode::Product);
        p.subset_budget = 10_000;
        let m1 = mixture_sample_size(2, 1, 0.9, 0.9);
        let s = data(m1, 2);
        let list = lift_to_mixture(&base, &s, &p, 0).unwrap();
        assert_eq!(list.provenance.mode, "exhaustive");
        assert!(list.len() >= 2);
    }

    #[test]
    fn errors() {
        let base = GaussianDecoder::new(grid(), 1, 40, 0.9, 0.1).unwrap();
        let s = data(100, 1);
        assert!(matches!(
            lift_to_mixture(&base, &s, &LiftParams::new(2, 0.5, 0.2, LiftMode::Partition), 0),
            Err(DecodeError::TooFewSamples { need: 372, got: 100 })
        ));
        assert!(lift_to_mixture(&base, &s, &LiftParams::new(0, 0.5, 0.2, LiftMode::Partition), 0).is_err());
    }
}
