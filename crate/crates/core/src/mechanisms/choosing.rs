//! Score tables and the choosing mechanism.
//!
//! The mechanism releases `MAX + Lap(4/ε)`, refuses when that is at most
//! `(8/ε)·ln(4k/(βεδ))`, and otherwise samples a key with score ≥ 1 with
//! probability proportional to `exp(ε·score/4)`.

use std::collections::BTreeMap;

use rand::Rng as _;

use super::laplace::draw_laplace;
use super::{MechanismError, Result};
use crate::distributions::CandidateKey;
use crate::seed;

/// How many lists contain each key, out of `lists` lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreTable {
    scores: BTreeMap<CandidateKey, u64>,
    lists: u64,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_lists<'a, I>(lists: I) -> Self
    where
        I: IntoIterator<Item = &'a [CandidateKey]>,
    {
        let mut t = Self::new();
        for l in lists {
            t.add_list(l);
        }
        t
    }

    /// Counts one more list; a key repeated inside the list counts once.
    pub fn add_list(&mut self, keys: &[CandidateKey]) {
        let mut seen: Vec<&CandidateKey> = keys.iter().collect();
        seen.sort();
        seen.dedup();
        for k in seen {
            *self.scores.entry(k.clone()).or_insert(0) += 1;
        }
        self.lists += 1;
    }

    pub fn score(&self, key: &CandidateKey) -> u64 {
        self.scores.get(key).copied().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.scores.values().copied().max().unwrap_or(0)
    }

    pub fn lists(&self) -> u64 {
        self.lists
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CandidateKey, u64)> {
        self.scores.iter().map(|(k, v)| (k, *v))
    }

    /// A key with the highest score (the smallest such key).
    pub fn argmax(&self) -> Option<&CandidateKey> {
        let m = self.max();
        self.scores.iter().find(|(_, v)| **v == m).map(|(k, _)| k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choice {
    Chosen(CandidateKey),
    Bottom,
}

impl Choice {
    pub fn key(&self) -> Option<&CandidateKey> {
        match self {
            Choice::Chosen(k) => Some(k),
            Choice::Bottom => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoosingOutcome {
    pub choice: Choice,
    pub noisy_max: f64,
    pub threshold: f64,
}

/// `(8/ε)·ln(4k/(βεδ))`.
pub fn choosing_threshold(beta: f64, epsilon: f64, delta: f64, k_growth: f64) -> f64 {
    8.0 / epsilon * (4.0 * k_growth / (beta * epsilon * delta)).ln()
}

/// `(16/ε)·ln(4kT/(βεδ))`: how far below MAX a released key may score.
pub fn choosing_utility_bound(epsilon: f64, beta: f64, delta: f64, k_growth: f64, lists: f64) -> f64 {
    16.0 / epsilon * (4.0 * k_growth * lists / (beta * epsilon * delta)).ln()
}

fn validate(beta: f64, epsilon: f64, delta: f64, k_growth: f64) -> Result<()> {
    let bad = |m: String| Err(MechanismError::InvalidParameter(m));
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return bad(format!("epsilon {epsilon} must be > 0"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return bad(format!("beta {beta} outside (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return bad(format!("delta {delta} outside (0, 1)"));
    }
    if !(k_growth >= 1.0 && k_growth.is_finite()) {
        return bad(format!("k_growth {k_growth} must be >= 1"));
    }
    Ok(())
}

pub fn choosing_mechanism(
    scores: &ScoreTable,
    beta: f64,
    epsilon: f64,
    delta: f64,
    k_growth: f64,
    rng_seed: u64,
) -> Result<Choice> {
    Ok(choosing_mechanism_detailed(scores, beta, epsilon, delta, k_growth, rng_seed)?.choice)
}

pub fn choosing_mechanism_detailed(
    scores: &ScoreTable,
    beta: f64,
    epsilon: f64,
    delta: f64,
    k_growth: f64,
    rng_seed: u64,
) -> Result<ChoosingOutcome> {
    validate(beta, epsilon, delta, k_growth)?;
    let mut rng = seed::rng(rng_seed);
    let noisy_max = scores.max() as f64 + draw_laplace(4.0 / epsilon, &mut rng);
    let threshold = choosing_threshold(beta, epsilon, delta, k_growth);
    if noisy_max <= threshold {
        return Ok(ChoosingOutcome { choice: Choice::Bottom, noisy_max, threshold });
    }
    let good: Vec<(&CandidateKey, f64)> = scores
        .iter()
        .filter(|(_, s)| *s >= 1)
        .map(|(k, s)| (k, epsilon * s as f64 / 4.0))
        .collect();
    let Some(top) = good.iter().map(|(_, w)| *w).max_by(f64::total_cmp) else {
        return Ok(ChoosingOutcome { choice: Choice::Bottom, noisy_max, threshold });
    };
    let weights: Vec<f64> = good.iter().map(|(_, w)| (w - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut pick = good.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            pick = i;
            break;
        }
    }
    Ok(ChoosingOutcome { choice: Choice::Chosen(good[pick].0.clone()), noisy_max, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(i: u32) -> CandidateKey {
        CandidateKey::Gaussian { mean: vec![i], logvar: vec![0] }
    }

    fn table(scores: &[(u32, u64)], lists: u64) -> ScoreTable {
        let mut t = ScoreTable::new();
        for l in 0..lists {
            let keys: Vec<CandidateKey> =
                scores.iter().filter(|(_, s)| l < *s).map(|(k, _)| key(*k)).collect();
            t.add_list(&keys);
        }
        t
    }

    #[test]
    fn utility_bound_values() {
        let b = choosing_utility_bound(1.0, 0.1, 0.1, 1.0, 1.0);
        assert!((b - 95.863_432_753_727_71).abs() < 1e-9);
        let doubled = choosing_utility_bound(1.0, 0.1, 0.1, 1.0, 2.0);
        assert!((doubled - b - 16.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn scores_count_lists() {
        let mut t = ScoreTable::new();
        t.add_list(&[key(1), key(2), key(1)]);
        t.add_list(&[key(2)]);
        assert_eq!(t.score(&key(1)), 1);
        assert_eq!(t.score(&key(2)), 2);
        assert_eq!(t.score(&key(3)), 0);
        assert_eq!(t.max(), 2);
        assert_eq!(t.lists(), 2);
        assert_eq!(t.argmax(), Some(&key(2)));
    }

    #[test]
    fn empty_table_is_refused() {
        let (beta, eps, delta): (f64, f64, f64) = (0.1, 1.0, 0.1);
        let t = ScoreTable::new();
        let bottoms = (0..2000)
            .filter(|s| choosing_mechanism(&t, beta, eps, delta, 1.0, *s).unwrap() == Choice::Bottom)
            .count();
        assert!(bottoms as f64 >= (1.0 - beta) * 2000.0);
    }

    #[test]
    fn single_strong_key() {
        let (beta, eps, delta): (f64, f64, f64) = (0.1, 1.0, 0.1);
        let best = (16.0 / eps * (4.0 / (beta * eps * delta)).ln()).ceil() as u64;
        assert_eq!(best, 96);
        let t = table(&[(7, best)], best);
        let hits = (0..2000)
            .filter(|s| choosing_mechanism(&t, beta, eps, delta, 1.0, *s).unwrap() == Choice::Chosen(key(7)))
            .count();
        assert!(hits as f64 >= (1.0 - beta) * 2000.0, "hits {hits}");
    }

    #[test]
    fn zero_score_keys_are_never_chosen() {
        let mut t = table(&[(1, 96)], 96);
        t.scores.insert(key(2), 0);
        for s in 0..500 {
            let c = choosing_mechanism(&t, 0.1, 1.0, 0.1, 1.0, s).unwrap();
            assert!(c == Choice::Chosen(key(1)) || c == Choice::Bottom);
        }
    }

    #[test]
    fn huge_scores_do_not_overflow() {
        let t = table(&[(1, 5000), (2, 4990)], 5000);
        let c = choosing_mechanism(&t, 0.1, 50.0, 0.1, 2.0, 3).unwrap();
        assert_eq!(c, Choice::Chosen(key(1)));
    }

    #[test]
    fn rejects_bad_parameters() {
        let t = ScoreTable::new();
        assert!(choosing_mechanism(&t, 0.0, 1.0, 0.1, 1.0, 0).is_err());
        assert!(choosing_mechanism(&t, 0.1, 0.0, 0.1, 1.0, 0).is_err());
        assert!(choosing_mechanism(&t, 0.1, 1.0, 0.1, 0.5, 0).is_err());
    }
}
