//! Finite ℓ∞ cover of the probability simplex.
//!
//! With `N = ceil(1/α)`, the cube `[0,1]^k` is cut into cells of side `1/N`.
//! A closed cell with lower corner `c/N` meets the simplex exactly when
//! `Σc ≤ N ≤ Σc + k`; its representative is the lattice point obtained from
//! `c` by adding one unit to each of the first `N − Σc` coordinates, which
//! lies on the simplex and inside the cell. Every simplex point is therefore
//! within `1/N ≤ α` of a representative, and there are at most `N^k` of them.

use super::{DecodeError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexCover {
    k: usize,
    resolution: f64,
    denominator: u32,
    units: Vec<Vec<u32>>,
}

impl SimplexCover {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// N: every coordinate is a multiple of `1/N`.
    pub fn denominator(&self) -> u32 {
        self.denominator
    }

    /// Points as integer numerators over `denominator()`.
    pub fn units(&self) -> &[Vec<u32>] {
        &self.units
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let n = f64::from(self.denominator);
        self.units.iter().map(|u| u.iter().map(|v| f64::from(*v) / n).collect()).collect()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// ℓ∞ distance from `w` to the nearest cover point.
    pub fn distance(&self, w: &[f64]) -> f64 {
        self.points()
            .iter()
            .map(|p| p.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn build_simplex_cover(k: usize, alpha: f64) -> Result<SimplexCover> {
    if k == 0 {
        return Err(DecodeError::InvalidParameter("simplex cover needs k >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(DecodeError::InvalidParameter(format!("alpha {alpha} outside (0, 1]")));
    }
    let n_f = (1.0 / alpha - 1e-9).ceil().max(1.0);
    if n_f.powi(k as i32) > 1e7 {
        return Err(DecodeError::InvalidParameter(format!("cover with {n_f}^{k} cells is too large")));
    }
    let n = n_f as u32;
    let mut units = Vec::new();
    let mut corner = vec![0u32; k];
    loop {
        let s: u32 = corner.iter().sum();
        if s <= n && n <= s + k as u32 {
            let mut rep = corner.clone();
            for r in rep.iter_mut().take((n - s) as usize) {
                *r += 1;
            }
            units.push(rep);
        }
        // Advance the corner odometer over {0..N-1}^k.
        let mut i = 0;
        while i < k {
            corner[i] += 1;
            if corner[i] < n {
                break;
            }
            corner[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    units.sort();
    units.dedup();
    Ok(SimplexCover { k, resolution: alpha, denominator: n, units })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng as _;

    fn random_simplex_point(k: usize, rng: &mut seed::Rng) -> Vec<f64> {
        let e: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }

    #[test]
    fn zero_simplex() {
        for a in [1.0, 0.5, 0.01] {
            let c = build_simplex_cover(1, a).unwrap();
            assert_eq!(c.points(), vec![vec![1.0]]);
        }
    }

    #[test]
    fn two_weights_at_one_half() {
        let c = build_simplex_cover(2, 0.5).unwrap();
        assert!(c.len() <= 4);
        for i in 0..=100 {
            let w = f64::from(i) / 100.0;
            assert!(c.distance(&[w, 1.0 - w]) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn three_weights_cover_random_points() {
        let c = build_simplex_cover(3, 0.34).unwrap();
        assert!(c.len() <= 27);
        let mut rng = seed::rng(5);
        for _ in 0..10_000 {
            let w = random_simplex_point(3, &mut rng);
            assert!(c.distance(&w) <= 0.34 + 1e-12);
        }
    }

    #[test]
    fn points_lie_on_the_simplex() {
        for (k, a) in [(2, 0.25), (3, 0.2), (4, 0.5)] {
            let c = build_simplex_cover(k, a).unwrap();
            for p in c.points() {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p.iter().all(|v| *v >= 0.0));
            }
            assert!((c.len() as f64) <= (1.0 / a).ceil().powi(k as i32));
        }
    }

    #[test]
    fn invalid() {
        assert!(build_simplex_cover(0, 0.5).is_err());
        assert!(build_simplex_cover(2, 0.0).is_err());
        assert!(build_simplex_cover(2, 1.5).is_err());
    }
}
