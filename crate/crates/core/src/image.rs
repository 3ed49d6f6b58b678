//! Grayscale image container and synthetic test images.

use crate::error::{Error, Result};

/// A single-channel image of `f64` intensities stored row-major.
///
/// Intensities nominally lie in `[0, 255]` but values outside that range are
/// kept as-is (noisy observations routinely leave it); clamping happens only
/// when an image is written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "pixel buffer holds {} values, expected {width}x{height}={}",
                pixels.len(),
                width * height
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pixel values must be finite, found {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant image. Panics if either dimension is zero or `value` is not finite.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant image")
    }

    /// Builds an image by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels).expect("valid generated image")
    }

    pub(crate) fn from_raw(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }

    pub fn same_dims(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Pixel-wise `f(self, other)`.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.same_dims(other)?;
        let pixels = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Image::new(self.width, self.height, pixels)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Image> {
        Image::new(
            self.width,
            self.height,
            self.pixels.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// Mirror index `i` into `[0, n)` reflecting about the boundary pixel
/// (the edge sample is not repeated). Requires `-n < i < 2n - 1`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    j as usize
}

/// Pads `img` by `radius` pixels on every side using symmetric reflection
/// without edge repetition (`[a, b, c]` padded by 1 becomes `[b, a, b, c, b]`).
pub fn pad_symmetric(img: &Image, radius: usize) -> Result<Image> {
    if radius == 0 {
        return Ok(img.clone());
    }
    if radius >= img.width.min(img.height) {
        return Err(Error::InvalidArgument(format!(
            "padding radius {radius} must be smaller than min(width, height) = {}",
            img.width.min(img.height)
        )));
    }
    let r = radius as isize;
    let w = img.width + 2 * radius;
    let h = img.height + 2 * radius;
    let mut pixels = Vec::with_capacity(w * h);
    for pr in 0..h as isize {
        let src = img.row(reflect(pr - r, img.height));
        for pc in 0..w as isize {
            pixels.push(src[reflect(pc - r, img.width)]);
        }
    }
    Ok(Image::from_raw(w, h, pixels))
}

/// Checkerboard: pixel `(r, c)` is `low` when `r/block + c/block` is even.
pub fn generate_checkerboard(
    width: usize,
    height: usize,
    block: usize,
    low: f64,
    high: f64,
) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(
            "checkerboard dimensions must be positive".into(),
        ));
    }
    if block == 0 {
        return Err(Error::InvalidArgument(
            "block size must be at least 1".into(),
        ));
    }
    if !(0.0..=255.0).contains(&low) || !(0.0..=255.0).contains(&high) || low >= high {
        return Err(Error::InvalidArgument(format!(
            "checkerboard levels must satisfy 0 <= low < high <= 255, got {low}, {high}"
        )));
    }
    Ok(Image::from_fn(width, height, |r, c| {
        if (r / block + c / block).is_multiple_of(2) {
            low
        } else {
            high
        }
    }))
}
