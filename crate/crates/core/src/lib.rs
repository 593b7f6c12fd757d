//! Wavelet-domain image denoising by joint-magnitude hard thresholding.
//!
//! The observed image is paired with quadrature companions (Riesz or
//! hypercomplex), every component is decomposed with the same periodized
//! DWT, and coefficients are kept or killed by the energy of the tuple at
//! each index. The crate also evaluates the exact risk and the noise
//! statistics of the rule, and runs Monte Carlo comparisons.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod grid;
pub mod noise_stats;
pub mod io;
pub mod par;
pub mod quad;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod shrinkage;
pub mod special;
pub mod wavelet;

pub use error::{Error, Result};
pub use grid::{Image, NoiseSpec};
pub use quadrature::{Family, QuadratureSet};
pub use shrinkage::{denoise, DenoiseConfig, DenoiseOutput, LambdaChoice, Method, SigmaChoice};
pub use wavelet::{dwt2, filter_bank, idwt2, FilterPair, Pyramid};
