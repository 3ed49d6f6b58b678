//! Sliding-window non-local denoising engine.
//!
//! For every output pixel `l`, each candidate `k` of the search region is
//! weighted by comparing the patches around `l` and `k`; the estimate is the
//! weighted mean or weighted median of the candidates. Offsets are always
//! visited in row-major order so each pixel's reduction is reproducible
//! regardless of how rows are distributed across threads.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{pad_symmetric, Image};
use crate::noise::estimate_noise_sigma;
use crate::stats::{Offset, PatchGeometry};
use crate::weighting::{build_weight_model, WeightKind, WeightModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregator {
    WeightedMean,
    WeightedMedian,
}

/// Early rejection of candidates whose rescaled patch difference is improbable
/// under the perfect-match distribution of their offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Rejection {
    Off,
    /// Reject `D̂/ρ² > quantile(alpha)`.
    Upper {
        alpha: f64,
    },
    /// Reject outside the equal-tail interval of mass `alpha`.
    TwoSided {
        alpha: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SigmaSource {
    Known { sigma: f64 },
    Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub geometry: PatchGeometry,
    pub weight: WeightKind,
    pub aggregator: Aggregator,
    pub rejection: Rejection,
    pub sigma_source: SigmaSource,
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        validate_rejection(self.rejection, self.weight.is_probabilistic())?;
        if let SigmaSource::Known { sigma } = self.sigma_source {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "noise sigma must be positive, got {sigma}"
                )));
            }
        }
        Ok(())
    }
}

fn validate_rejection(rejection: Rejection, probabilistic: bool) -> Result<()> {
    match rejection {
        Rejection::Off => Ok(()),
        Rejection::Upper { alpha } | Rejection::TwoSided { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "rejection significance level must lie in (0, 1), got {alpha}"
                )));
            }
            if !probabilistic {
                return Err(Error::InvalidArgument(
                    "patch rejection requires probabilistic weights".into(),
                ));
            }
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub pixels: u64,
    pub candidates_total: u64,
    pub candidates_rejected: u64,
    pub seconds: f64,
}

/// Sum of squared differences between the patches centered at `l` and `k`
/// (`(row, col)` in the coordinates of `padded`).
pub fn patch_ssd(
    padded: &Image,
    l: (usize, usize),
    k: (usize, usize),
    geometry: &PatchGeometry,
) -> Result<f64> {
    let r = geometry.patch_radius;
    for (row, col) in [l, k] {
        if row < r || col < r || row + r >= padded.height() || col + r >= padded.width() {
            return Err(Error::InvalidArgument(format!(
                "patch of radius {r} at ({row}, {col}) leaves the {}x{} image",
                padded.width(),
                padded.height()
            )));
        }
    }
    Ok(ssd_unchecked(
        padded.pixels(),
        padded.width(),
        l,
        k,
        r,
        f64::INFINITY,
    ))
}

/// Patch SSD that stops early once the running sum exceeds `cut`
/// (checked after each patch row).
#[inline]
fn ssd_unchecked(
    data: &[f64],
    stride: usize,
    l: (usize, usize),
    k: (usize, usize),
    radius: usize,
    cut: f64,
) -> f64 {
    let side = 2 * radius + 1;
    let mut acc = 0.0;
    for j in 0..side {
        let a0 = (l.0 + j - radius) * stride + l.1 - radius;
        let b0 = (k.0 + j - radius) * stride + k.1 - radius;
        let a = &data[a0..a0 + side];
        let b = &data[b0..b0 + side];
        let mut row = 0.0;
        for (x, y) in a.iter().zip(b) {
            let d = x - y;
            row += d * d;
        }
        acc += row;
        if acc > cut {
            return acc;
        }
    }
    acc
}

/// `D = ssd / 2σ²`.
pub fn patch_difference_d(ssd: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain {
            func: "patch_difference_d",
            value: sigma,
        });
    }
    Ok(ssd / (2.0 * sigma * sigma))
}

/// Resolves the noise level, builds the weight model and denoises.
pub fn denoise(noisy: &Image, config: &DenoiseConfig) -> Result<(Image, RunStats)> {
    config.validate()?;
    let sigma_hat = match config.sigma_source {
        SigmaSource::Known { sigma } => sigma,
        SigmaSource::Estimate => estimate_noise_sigma(noisy)?.sigma,
    };
    let model = build_weight_model(config.weight, &config.geometry, sigma_hat)?;
    denoise_with_model(
        noisy,
        &config.geometry,
        &model,
        config.aggregator,
        config.rejection,
    )
}

/// Per-offset data precomputed once per run.
struct OffsetPlan {
    offset: Offset,
    /// Accept `D̂/ρ²` in `[lo, hi]`; everything else gets weight zero.
    lo: f64,
    hi: f64,
    /// SSD above which the candidate is certainly rejected.
    ssd_cut: f64,
}

pub fn denoise_with_model(
    noisy: &Image,
    geometry: &PatchGeometry,
    model: &WeightModel,
    aggregator: Aggregator,
    rejection: Rejection,
) -> Result<(Image, RunStats)> {
    let start = Instant::now();
    validate_rejection(rejection, model.as_probabilistic().is_some())?;
    let pad = geometry.padding();
    if pad >= noisy.width().min(noisy.height()) {
        return Err(Error::ImageTooSmall(format!(
            "a {}x{} image cannot be padded by patch radius + search radius = {pad}",
            noisy.width(),
            noisy.height()
        )));
    }
    let padded = pad_symmetric(noisy, pad)?;

    let plans = geometry
        .offsets()
        .map(|offset| plan_offset(offset, model, rejection))
        .collect::<Result<Vec<_>>>()?;

    let (w, h) = (noisy.width(), noisy.height());
    let mut out = vec![0.0; w * h];
    let row_counts = out
        .par_chunks_mut(w)
        .enumerate()
        .map(|(row, dst)| denoise_row(&padded, geometry, model, aggregator, &plans, row, dst))
        .collect::<Result<Vec<u64>>>()?;

    let pixels = (w * h) as u64;
    let stats = RunStats {
        pixels,
        candidates_total: pixels * plans.len() as u64,
        candidates_rejected: row_counts.iter().sum(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((Image::new(w, h, out)?, stats))
}

fn plan_offset(offset: Offset, model: &WeightModel, rejection: Rejection) -> Result<OffsetPlan> {
    let mut plan = OffsetPlan {
        offset,
        lo: 0.0,
        hi: f64::INFINITY,
        ssd_cut: f64::INFINITY,
    };
    let (Some(m), false) = (model.as_probabilistic(), offset.is_zero()) else {
        return Ok(plan);
    };
    let dist = m.table.get(offset)?;
    match rejection {
        Rejection::Off => {}
        Rejection::Upper { alpha } => plan.hi = dist.quantile(alpha)?,
        Rejection::TwoSided { alpha } => (plan.lo, plan.hi) = dist.critical_interval(alpha)?,
    }
    if plan.hi.is_finite() {
        // D̂/ρ² = ssd / (2σ̂²ρ²); pad the cut so rounding never rejects early
        // something the exact test below would keep.
        let scale = 2.0 * m.sigma_hat * m.sigma_hat * m.rho * m.rho;
        plan.ssd_cut = plan.hi * scale * (1.0 + 1e-9);
    }
    Ok(plan)
}

/// Fills one output row; returns the number of rejected candidates.
fn denoise_row(
    padded: &Image,
    geometry: &PatchGeometry,
    model: &WeightModel,
    aggregator: Aggregator,
    plans: &[OffsetPlan],
    row: usize,
    dst: &mut [f64],
) -> Result<u64> {
    let pad = geometry.padding();
    let radius = geometry.patch_radius;
    let stride = padded.width();
    let data = padded.pixels();
    let center_weight = model.center_weight();
    let prob = model.as_probabilistic();
    let mut rejected = 0u64;
    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(plans.len());

    for (col, out) in dst.iter_mut().enumerate() {
        let l = (row + pad, col + pad);
        let y_l = data[l.0 * stride + l.1];
        let mut total = 0.0;
        let mut moment = 0.0;
        candidates.clear();

        for plan in plans {
            let k = (
                (l.0 as isize + plan.offset.dy as isize) as usize,
                (l.1 as isize + plan.offset.dx as isize) as usize,
            );
            let y_k = data[k.0 * stride + k.1];
            let weight = if plan.offset.is_zero() {
                center_weight
            } else {
                let ssd = ssd_unchecked(data, stride, l, k, radius, plan.ssd_cut);
                match (model, prob) {
                    (WeightModel::ClassicExponential(m), _) => (-ssd / m.h).exp(),
                    (_, Some(m)) => {
                        let arg = m.d_hat(ssd) / (m.rho * m.rho);
                        if arg > plan.hi || arg < plan.lo {
                            rejected += 1;
                            0.0
                        } else {
                            let dist = m
                                .table
                                .by_index(geometry.offset_index(plan.offset))
                                .expect("table covers every non-zero offset");
                            dist.pdf_unchecked(arg)
                        }
                    }
                    _ => unreachable!(),
                }
            };
            if !weight.is_finite() {
                return Err(Error::NonFiniteWeight {
                    weight,
                    row,
                    col,
                    dy: plan.offset.dy,
                    dx: plan.offset.dx,
                });
            }
            total += weight;
            match aggregator {
                Aggregator::WeightedMean => moment += weight * (y_k - y_l),
                Aggregator::WeightedMedian => candidates.push((y_k, weight)),
            }
        }

        *out = match aggregator {
            Aggregator::WeightedMean => y_l + moment / total,
            Aggregator::WeightedMedian => weighted_median(&mut candidates, total),
        };
    }
    Ok(rejected)
}

/// Smallest value whose cumulative weight (ascending by value, ties kept in
/// input order) reaches half of `total`.
pub fn weighted_median(candidates: &mut [(f64, f64)], total: f64) -> f64 {
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * total;
    let mut cum = 0.0;
    for &(value, weight) in candidates.iter() {
        cum += weight;
        if cum >= half {
            return value;
        }
    }
    candidates.last().map_or(f64::NAN, |c| c.0)
}

/// `input - denoised + 128`, for visualizing what a denoiser removed.
pub fn method_noise(input: &Image, denoised: &Image) -> Result<Image> {
    input.zip_map(denoised, |a, b| a - b + 128.0)
}
