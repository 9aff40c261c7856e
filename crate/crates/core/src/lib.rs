//! Stable list decoding and its reduction to private agnostic density
//! estimation, for Gaussians and Gaussian mixtures.

pub mod decode;
pub mod distributions;
pub mod harness;
pub mod mde;
pub mod mechanisms;
pub mod quad;
pub mod reduction;
pub mod seed;
