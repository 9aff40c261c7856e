//! Closed-form values frozen from `oracles/formulas.py` (50-digit mpmath).

use sld_core::decode::{mixture_sample_size, DecoderContract};
use sld_core::distributions::{tv_distance_1d, DistributionSpec};
use sld_core::mde::mde_sample_size;
use sld_core::mechanisms::{choosing_utility_bound, TruncatedLaplaceParams};
use sld_core::reduction::{derive_params, utility_bound};

fn close(got: f64, want: f64, rel: f64) {
    assert!((got - want).abs() <= rel * want.abs(), "got {got}, want {want}");
}

#[test]
fn standard_normal_density_at_zero() {
    let n = DistributionSpec::gaussian_1d(0.0, 1.0).unwrap();
    close(n.density(&[0.0]).unwrap(), 0.39894228040143268, 1e-14);
}

#[test]
fn tv_of_unit_shift() {
    let a = DistributionSpec::gaussian_1d(0.0, 1.0).unwrap();
    let b = DistributionSpec::gaussian_1d(2.0, 1.0).unwrap();
    close(tv_distance_1d(&a, &b, 1e-9).unwrap(), 0.6826894921370859, 1e-8);
}

#[test]
fn tlap_support() {
    close(TruncatedLaplaceParams::new(1.0, 1.0, 0.05).unwrap().bound(), 2.9004770978893856, 1e-14);
    close(TruncatedLaplaceParams::new(1.0, 0.5, 0.05).unwrap().bound(), 4.0263931860455982, 1e-14);
}

#[test]
fn choosing_slack() {
    let b = choosing_utility_bound(1.0, 0.1, 0.1, 1.0, 1.0);
    close(b, 95.863432753727712, 1e-14);
    assert_eq!(b.ceil(), 96.0);
}

#[test]
fn sample_sizes() {
    assert_eq!(mde_sample_size(10, 0.1, 0.1), 461);
    assert_eq!(mde_sample_size(1, 0.5, 0.5), 3);
    assert_eq!(mixture_sample_size(4, 2, 0.5, 0.1), 106);
    assert_eq!(mixture_sample_size(40, 2, 0.5, 0.2), 372);
}

#[test]
fn step_one_on_a_plain_contract() {
    let c = DecoderContract::new(200, 0.91, 26.0, 3.0, 0.1).unwrap();
    let p = derive_params(0.1, 0.1, 1.0, 1e-6, 3.0, &c).unwrap();
    close(p.alpha_prime, 0.0066666666666666667, 1e-14);
    close(p.epsilon_prime, 0.16637176455910016, 1e-14);
    close(p.delta_prime, 1.6637176455910016e-7, 1e-14);
    close(p.beta_prime, 1.0136622993178563e-8, 1e-12);
    close(p.mde_samples_exact, 487467.16808450505, 1e-12);
    close(p.m1_exact, 487667.16808450505, 1e-12);
    close(p.lists_exact, 184707.97560130103, 1e-12);
}

#[test]
fn epsilon_prime_example() {
    let c = DecoderContract::new(10, 0.91, 2.0, 3.0, 0.1).unwrap();
    let p = derive_params(0.2, 0.1, 1.0, 1e-6, 3.0, &c).unwrap();
    close(p.epsilon_prime, 0.18805871844910735, 1e-14);
}

#[test]
fn bound_is_clamped() {
    assert_eq!(utility_bound(3.0, 0.05, 0.3), 1.0);
    close(utility_bound(3.0, 0.01, 0.3), 0.51, 1e-12);
}
