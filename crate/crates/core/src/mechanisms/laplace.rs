//! Laplace and truncated Laplace samplers, both by inverse CDF.

use rand::Rng as _;

use super::{MechanismError, Result};
use crate::seed::{self, Rng};

/// Laplace with scale `Δ/ε` conditioned on `[−R, R]`, where
/// `R = (Δ/ε)·ln(1 + (e^ε − 1)/(2δ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedLaplaceParams {
    sensitivity: f64,
    epsilon: f64,
    delta: f64,
    bound: f64,
}

impl TruncatedLaplaceParams {
    pub fn new(sensitivity: f64, epsilon: f64, delta: f64) -> Result<Self> {
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(MechanismError::InvalidParameter(format!("sensitivity {sensitivity} must be > 0")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(MechanismError::InvalidParameter(format!("epsilon {epsilon} must be > 0")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(MechanismError::InvalidParameter(format!("delta {delta} outside (0, 1)")));
        }
        let bound = sensitivity / epsilon * (epsilon.exp_m1() / (2.0 * delta)).ln_1p();
        Ok(TruncatedLaplaceParams { sensitivity, epsilon, delta, bound })
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn scale(&self) -> f64 {
        self.sensitivity / self.epsilon
    }

    /// The support half-width R.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn density(&self, x: f64) -> f64 {
        if x.abs() > self.bound {
            return 0.0;
        }
        let b = self.scale();
        let norm = -2.0 * b * (-self.bound / b).exp_m1();
        (-x.abs() / b).exp() / norm
    }

    pub fn draw(&self, rng: &mut Rng) -> f64 {
        let b = self.scale();
        let v: f64 = rng.random();
        let magnitude = (-b * (v * (-self.bound / b).exp_m1()).ln_1p()).min(self.bound);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

pub fn sample_tlap(params: &TruncatedLaplaceParams, rng_seed: u64) -> f64 {
    params.draw(&mut seed::rng(rng_seed))
}

pub(crate) fn draw_laplace(scale: f64, rng: &mut Rng) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        if u != -0.5 {
            return -scale * u.signum() * (-2.0 * u.abs()).ln_1p();
        }
    }
}

pub fn sample_laplace(scale: f64, rng_seed: u64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(MechanismError::InvalidParameter(format!("laplace scale {scale} must be > 0")));
    }
    Ok(draw_laplace(scale, &mut seed::rng(rng_seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};

    #[test]
    fn bound_matches_closed_form() {
        let p = TruncatedLaplaceParams::new(1.0, 1.0, 0.05).unwrap();
        assert!((p.bound() - 2.900_477_097_889_385_6).abs() < 1e-12);
        let q = TruncatedLaplaceParams::new(1.0, 0.5, 0.05).unwrap();
        assert!((q.bound() - 4.026_393_186_045_598).abs() < 1e-12);
    }

    #[test]
    fn tail_beyond_r_minus_sensitivity_is_delta() {
        let p = TruncatedLaplaceParams::new(1.0, 0.5, 0.05).unwrap();
        let r = p.bound();
        let tail = integrate(|x| p.density(x), r - 1.0, r, &[], QuadOptions::default()).unwrap();
        assert!((tail.value - 0.05).abs() < 1e-10, "{}", tail.value);
    }

    #[test]
    fn normalized() {
        let p = TruncatedLaplaceParams::new(2.0, 0.3, 1e-3).unwrap();
        let r = p.bound();
        let m = integrate(|x| p.density(x), -r, r, &[0.0], QuadOptions::default()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn draws_respect_support_and_symmetry() {
        let p = TruncatedLaplaceParams::new(1.0, 1.0, 0.05).unwrap();
        let mut rng = seed::rng(4);
        let n = 200_000;
        let mut sum = 0.0;
        let mut below = 0usize;
        for _ in 0..n {
            let y = p.draw(&mut rng);
            assert!(y.abs() <= p.bound());
            sum += y;
            below += usize::from(y < 0.0);
        }
        assert!((sum / n as f64).abs() < 0.02);
        assert!((below as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn laplace_tail() {
        let mut rng = seed::rng(8);
        let n = 200_000;
        let t = 4.0 * 2f64.ln();
        let over = (0..n).filter(|_| draw_laplace(4.0, &mut rng).abs() > t).count();
        assert!((over as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn invalid_inputs() {
        assert!(sample_laplace(0.0, 1).is_err());
        assert!(TruncatedLaplaceParams::new(0.0, 1.0, 0.1).is_err());
        assert!(TruncatedLaplaceParams::new(1.0, 0.0, 0.1).is_err());
        assert!(TruncatedLaplaceParams::new(1.0, 1.0, 1.0).is_err());
    }
}
