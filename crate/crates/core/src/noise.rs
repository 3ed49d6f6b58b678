//! Additive white Gaussian noise synthesis and noise-level estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Pixels per independent generator stream. Fixed so the noise field does not
/// depend on how the work is split across threads.
const NOISE_CHUNK: usize = 4096;

/// Floor returned by [`estimate_noise_sigma`] for images with no residual.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// MAD-to-standard-deviation factor for a normal distribution.
const MAD_SCALE: f64 = 0.6745;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        let spec = Self { sigma, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// `len` i.i.d. N(0, sigma^2) samples. Sample `i` depends only on `(seed, i)`.
pub fn gaussian_field(len: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    out.par_chunks_mut(NOISE_CHUNK)
        .enumerate()
        .for_each(|(chunk, values)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            for v in values {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = sigma * z;
            }
        });
    out
}

/// Returns `clean + n` with `n` drawn i.i.d. from N(0, sigma^2). No clamping.
pub fn add_gaussian_noise(clean: &Image, spec: &NoiseSpec) -> Result<Image> {
    spec.validate()?;
    let noise = gaussian_field(clean.len(), spec.sigma, spec.seed);
    let pixels = clean
        .pixels()
        .iter()
        .zip(noise)
        .map(|(&x, n)| x + n)
        .collect();
    Image::new(clean.width(), clean.height(), pixels)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub sigma: f64,
    /// Set when the residual vanished and `sigma` is the floor value.
    pub degenerate: bool,
}

/// Robust noise standard deviation from the Laplacian-like residual
/// `[1 -2 1; -2 4 -2; 1 -2 1] / 6`, scaled by MAD / 0.6745.
pub fn estimate_noise_sigma(img: &Image) -> Result<NoiseEstimate> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall(format!(
            "noise estimation needs at least 3x3 pixels, got {w}x{h}"
        )));
    }
    const MASK: [[f64; 3]; 3] = [[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]];
    let mut residual = Vec::with_capacity((w - 2) * (h - 2));
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let mut acc = 0.0;
            for (mr, mask_row) in MASK.iter().enumerate() {
                let row = img.row(r + mr - 1);
                for (mc, m) in mask_row.iter().enumerate() {
                    acc += m * row[c + mc - 1];
                }
            }
            residual.push(acc / 6.0);
        }
    }
    let center = median_in_place(&mut residual);
    let mut deviations: Vec<f64> = residual.iter().map(|v| (v - center).abs()).collect();
    let sigma = median_in_place(&mut deviations) / MAD_SCALE;
    if sigma < SIGMA_FLOOR {
        return Ok(NoiseEstimate {
            sigma: SIGMA_FLOOR,
            degenerate: true,
        });
    }
    Ok(NoiseEstimate {
        sigma,
        degenerate: false,
    })
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}
