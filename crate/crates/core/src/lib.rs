//! Patch-based image denoising with classic and probabilistic non-local means.
//!
//! The probabilistic weight of a candidate pixel is the density of the
//! normalized patch difference `D` under the hypothesis that the two clean
//! patches match, evaluated at the observed difference. Because overlapping
//! patches share noise samples, that density depends on the offset between
//! the patches; [`stats`] models it offset by offset.
//!
//! Modules:
//! - [`image`], [`noise`], [`metrics`], [`pgm`]: pixel container, noise
//!   synthesis and estimation, PSNR/SSIM, PGM I/O.
//! - [`special`], [`stats`]: incomplete gamma machinery and the per-offset
//!   distribution of `D`.
//! - [`weighting`], [`denoise`]: weight functions and the denoising engine.
//! - [`validation`]: Monte Carlo checks of the distribution model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod error;
pub mod image;
pub mod metrics;
pub mod noise;
pub mod pgm;
pub mod special;
pub mod stats;
pub mod validation;
pub mod weighting;

pub use denoise::{
    denoise, denoise_with_model, method_noise, patch_difference_d, patch_ssd, Aggregator,
    DenoiseConfig, Rejection, RunStats, SigmaSource,
};
pub use error::{Error, PgmError, Result};
pub use image::{generate_checkerboard, pad_symmetric, Image};
pub use metrics::{psnr, ssim, SsimParams};
pub use noise::{add_gaussian_noise, estimate_noise_sigma, NoiseEstimate, NoiseSpec};
pub use pgm::{load_pgm, save_pgm};
pub use stats::{
    build_distribution_table, center_pixel_weight, DiffDistribution, DistributionTable, Offset,
    PatchGeometry,
};
pub use weighting::{build_weight_model, WeightKind, WeightModel};
