//! Grid decoder for Gaussians: a robust point estimate, then every grid key
//! within a fixed index radius of its snap, plus the origin sentinel.

use super::{check_samples, CandidateList, DecodeError, DecoderContract, Provenance, Result, StableListDecoder};
use crate::distributions::{CandidateKey, ParameterGrid, Point};

/// 1/Φ⁻¹(3/4): makes the median absolute deviation consistent for σ.
const MAD_SCALE: f64 = 1.482_602_218_505_602;

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Coordinate-wise median and MAD-based variance. A zero MAD yields
/// `floor_variance`.
pub fn robust_estimate(samples: &[Point], floor_variance: f64) -> (Vec<f64>, Vec<f64>) {
    let d = samples.first().map_or(0, Vec::len);
    let mut mean = Vec::with_capacity(d);
    let mut var = Vec::with_capacity(d);
    let mut col = vec![0.0; samples.len()];
    for j in 0..d {
        for (c, x) in col.iter_mut().zip(samples) {
            *c = x[j];
        }
        let med = median(&mut col);
        for c in col.iter_mut() {
            *c = (*c - med).abs();
        }
        let sd = MAD_SCALE * median(&mut col);
        mean.push(med);
        var.push((sd * sd).max(floor_variance));
    }
    (mean, var)
}

#[derive(Debug, Clone)]
pub struct GaussianDecoder {
    grid: ParameterGrid,
    radius: u32,
    contract: DecoderContract,
}

impl GaussianDecoder {
    /// List bound `(2r+1)^{2d} + 1`; `alpha` is the grid accuracy and
    /// `stability` the advertised ρ.
    pub fn new(grid: ParameterGrid, radius: u32, sample_size: usize, stability: f64, alpha: f64) -> Result<Self> {
        let side = f64::from(2 * radius + 1);
        let l = side.powi(2 * grid.dim() as i32) + 1.0;
        let contract = DecoderContract::new(sample_size, stability, l, 3.0, alpha)?;
        Ok(GaussianDecoder { grid, radius, contract })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// The snapped robust estimate, before the neighborhood is added.
    pub fn center(&self, samples: &[Point]) -> CandidateKey {
        let floor = self.grid.logvar_value(0).exp();
        let (mean, var) = robust_estimate(samples, floor);
        self.grid.snap_values(&mean, &var)
    }
}

impl StableListDecoder for GaussianDecoder {
    fn contract(&self) -> &DecoderContract {
        &self.contract
    }

    fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    fn decode(&self, samples: &[Point], _rng_seed: u64) -> Result<CandidateList> {
        check_samples(samples, self.contract.sample_size, self.grid.dim())?;
        let mut keys = self.grid.neighborhood(&self.center(samples), self.radius)?;
        keys.push(self.grid.origin_key());
        Ok(CandidateList::new(keys, Provenance { dataset: None, mode: "neighborhood".into() }))
    }
}

/// Returns the same list for every input of sufficient size.
#[derive(Debug, Clone)]
pub struct FixedDecoder {
    grid: ParameterGrid,
    keys: Vec<CandidateKey>,
    contract: DecoderContract,
}

impl FixedDecoder {
    pub fn new(grid: ParameterGrid, keys: Vec<CandidateKey>, sample_size: usize) -> Result<Self> {
        if keys.is_empty() {
            return Err(DecodeError::InvalidParameter("fixed decoder needs at least one key".into()));
        }
        if let Some(k) = keys.iter().find(|k| !grid.contains(k)) {
            return Err(DecodeError::InvalidParameter(format!("key {k} is not on the grid")));
        }
        let l = CandidateList::new(keys.clone(), Provenance::default()).len();
        let contract = DecoderContract::new(sample_size, 1.0, l as f64, 1.0, 1e-12)?;
        Ok(FixedDecoder { grid, keys, contract })
    }
}

impl StableListDecoder for FixedDecoder {
    fn contract(&self) -> &DecoderContract {
        &self.contract
    }

    fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    fn decode(&self, samples: &[Point], _rng_seed: u64) -> Result<CandidateList> {
        check_samples(samples, self.contract.sample_size, self.grid.dim())?;
        Ok(CandidateList::new(self.keys.clone(), Provenance { dataset: None, mode: "fixed".into() }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;

    fn grid() -> ParameterGrid {
        ParameterGrid::new(4.0, 0.1, -1.0, 1.0, 0.2, 1).unwrap()
    }

    #[test]
    fn on_grid_samples_give_a_full_neighborhood() {
        let gr = ParameterGrid::new(2.0, 0.5, -1.0, 1.0, 0.5, 1).unwrap();
        let dec = GaussianDecoder::new(gr.clone(), 1, 4, 0.9, 0.1).unwrap();
        // Median 0.5 and MAD 1/1.4826, so the variance is exactly 1 = e^0.
        let s = 1.0 / MAD_SCALE;
        let samples = vec![vec![0.5 - s], vec![0.5], vec![0.5], vec![0.5 + s], vec![0.5 + 2.0 * s]];
        let list = dec.decode(&samples, 0).unwrap();
        assert_eq!(list.len(), 10);
        assert!(list.contains(&gr.origin_key()));
        assert!(list.contains(&CandidateKey::Gaussian { mean: vec![5], logvar: vec![2] }));
        assert!(list.check(dec.contract()).is_ok());
    }

    #[test]
    fn standard_normal_key_is_listed() {
        let gr = grid();
        let dec = GaussianDecoder::new(gr.clone(), 2, 500, 0.9, 0.1).unwrap();
        let truth = gr.snap_values(&[0.0], &[1.0]);
        let samples = DistributionSpec::gaussian_1d(0.0, 1.0).unwrap().sample(500, 77);
        let list = dec.decode(&samples, 0).unwrap();
        assert!(list.contains(&truth));
        assert!(list.len() <= 26);
    }

    #[test]
    fn uniform_data_still_gets_the_sentinel() {
        let gr = grid();
        let dec = GaussianDecoder::new(gr.clone(), 2, 500, 0.9, 0.1).unwrap();
        let samples = DistributionSpec::uniform(vec![0.0], vec![1.0]).unwrap().sample(500, 3);
        let list = dec.decode(&samples, 0).unwrap();
        assert!(list.contains(&gr.origin_key()));
        assert!(list.check(dec.contract()).is_ok());
    }

    #[test]
    fn too_few_samples() {
        let dec = GaussianDecoder::new(grid(), 1, 10, 0.9, 0.1).unwrap();
        assert_eq!(
            dec.decode(&vec![vec![0.0]; 9], 0),
            Err(DecodeError::TooFewSamples { need: 10, got: 9 })
        );
    }

    #[test]
    fn constant_samples_use_the_variance_floor() {
        let (m, v) = robust_estimate(&vec![vec![1.0, 2.0]; 7], 0.25);
        assert_eq!(m, vec![1.0, 2.0]);
        assert_eq!(v, vec![0.25, 0.25]);
    }

    #[test]
    fn fixed_decoder() {
        let gr = grid();
        let k = gr.snap_values(&[0.0], &[1.0]);
        let dec = FixedDecoder::new(gr, vec![k.clone()], 1).unwrap();
        assert_eq!(dec.decode(&[vec![3.0]], 0).unwrap().keys(), &[k]);
    }
}
