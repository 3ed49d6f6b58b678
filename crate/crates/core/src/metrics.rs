//! Full-reference quality metrics: PSNR and Gaussian-window SSIM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub const DEFAULT_PEAK: f64 = 255.0;

/// Peak signal-to-noise ratio in dB. Returns `f64::INFINITY` for identical images.
pub fn psnr(reference: &Image, test: &Image, peak: f64) -> Result<f64> {
    reference.same_dims(test)?;
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "PSNR peak must be positive, got {peak}"
        )));
    }
    let mse = mse(reference, test)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.same_dims(b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "SSIM window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.window_sigma > 0.0) || !(self.k1 > 0.0) || !(self.k2 > 0.0) {
            return Err(Error::InvalidArgument(
                "SSIM window_sigma, k1 and k2 must be positive".into(),
            ));
        }
        if !(self.dynamic_range > 0.0) {
            return Err(Error::InvalidArgument(
                "SSIM dynamic range must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn gaussian_taps(&self) -> Vec<f64> {
        let half = (self.window / 2) as f64;
        let two_var = 2.0 * self.window_sigma * self.window_sigma;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let x = i as f64 - half;
                (-x * x / two_var).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Mean SSIM over every window position fully inside the image.
pub fn ssim(reference: &Image, test: &Image, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    reference.same_dims(test)?;
    let (w, h) = (reference.width(), reference.height());
    let win = params.window;
    if w < win || h < win {
        return Err(Error::ImageTooSmall(format!(
            "SSIM window {win} does not fit in a {w}x{h} image"
        )));
    }
    let taps = params.gaussian_taps();
    let (ow, oh) = (w - win + 1, h - win + 1);

    let x = reference.pixels();
    let y = test.pixels();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let filt = |src: &[f64]| filter_valid(src, w, h, &taps);
    let mu_x = filt(x);
    let mu_y = filt(y);
    let e_xx = filt(&xx);
    let e_yy = filt(&yy);
    let e_xy = filt(&xy);

    let (c1, c2) = (params.c1(), params.c2());
    let mut total = 0.0;
    for i in 0..ow * oh {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    Ok(total / (ow * oh) as f64)
}

/// Separable "valid" correlation of a `w x h` buffer with `taps` in both axes.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut horiz = vec![0.0; ow * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let out = &mut horiz[r * ow..(r + 1) * ow];
        for (c, o) in out.iter_mut().enumerate() {
            *o = taps.iter().zip(&row[c..c + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for (t, tap) in taps.iter().enumerate() {
            let src_row = &horiz[(r + t) * ow..(r + t + 1) * ow];
            let dst = &mut out[r * ow..(r + 1) * ow];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += tap * s;
            }
        }
    }
    out
}
