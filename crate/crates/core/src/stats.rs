//! Statistics of the normalized patch difference `D` between two noisy patches
//! whose clean content matches exactly.
//!
//! Each pixel-pair term `(n_a - n_b)^2 / 2σ²` is χ²₁. When the two patches
//! overlap, terms share noise samples and are correlated, so `D` is not χ²
//! with `|P|` degrees of freedom. Its mean is still `|P|` and its variance is
//! `2|P| + |O|`, where `|O|` counts the pixels covered by both patches. `D` is
//! modeled as `γ·χ²_η` with `γ` and `η` matched to those two moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_gamma_unchecked, lower_unchecked, upper_unchecked};

/// Square patch of radius `patch_radius` and square search region of radius `search_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatchGeometry {
    pub patch_radius: usize,
    pub search_radius: usize,
}

impl PatchGeometry {
    pub fn new(patch_radius: usize, search_radius: usize) -> Self {
        Self {
            patch_radius,
            search_radius,
        }
    }

    /// Geometry from odd side lengths, e.g. `(7, 21)`.
    pub fn from_sides(patch_side: usize, search_side: usize) -> Result<Self> {
        for (name, side) in [("patch", patch_side), ("search", search_side)] {
            if side == 0 || side % 2 == 0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} side must be a positive odd integer, got {side}"
                )));
            }
        }
        Ok(Self::new(patch_side / 2, search_side / 2))
    }

    #[inline]
    pub fn patch_side(&self) -> usize {
        2 * self.patch_radius + 1
    }

    /// `|P|`, the number of pixels in a patch.
    #[inline]
    pub fn patch_area(&self) -> usize {
        self.patch_side() * self.patch_side()
    }

    #[inline]
    pub fn search_side(&self) -> usize {
        2 * self.search_radius + 1
    }

    #[inline]
    pub fn search_area(&self) -> usize {
        self.search_side() * self.search_side()
    }

    /// Padding needed so every patch of every candidate stays inside the image.
    #[inline]
    pub fn padding(&self) -> usize {
        self.patch_radius + self.search_radius
    }

    /// All offsets of the search region in row-major order, `(0, 0)` included.
    pub fn offsets(&self) -> impl Iterator<Item = Offset> + '_ {
        let s = self.search_radius as i32;
        (-s..=s).flat_map(move |dy| (-s..=s).map(move |dx| Offset::new(dy, dx)))
    }

    pub fn contains(&self, offset: Offset) -> bool {
        let s = self.search_radius as i32;
        offset.dy.abs() <= s && offset.dx.abs() <= s
    }

    /// Row-major index of `offset` within the search region.
    #[inline]
    pub fn offset_index(&self, offset: Offset) -> usize {
        let s = self.search_radius as i32;
        ((offset.dy + s) as usize) * self.search_side() + (offset.dx + s) as usize
    }
}

/// Displacement `k - l` between a candidate pixel and the target pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Offset {
    pub dy: i32,
    pub dx: i32,
}

impl Offset {
    pub const ZERO: Offset = Offset { dy: 0, dx: 0 };

    pub const fn new(dy: i32, dx: i32) -> Self {
        Self { dy, dx }
    }

    pub fn is_zero(&self) -> bool {
        self.dy == 0 && self.dx == 0
    }
}

impl std::fmt::Display for Offset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.dy, self.dx)
    }
}

/// Number of pixels covered by both the patch at `l` and the patch at `l + offset`.
pub fn overlap_count(offset: Offset, patch_side: usize) -> Result<usize> {
    if patch_side.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "patch side must be odd, got {patch_side}"
        )));
    }
    let p = patch_side as i64;
    let rows = (p - i64::from(offset.dy).abs()).max(0);
    let cols = (p - i64::from(offset.dx).abs()).max(0);
    Ok((rows * cols) as usize)
}

/// `var[D] = 2|P| + |O|` for a non-zero offset.
pub fn variance_of_d(offset: Offset, geometry: &PatchGeometry) -> Result<f64> {
    if offset.is_zero() {
        return Err(Error::InvalidArgument(
            "variance of D is defined for non-zero offsets only".into(),
        ));
    }
    if !geometry.contains(offset) {
        return Err(Error::InvalidArgument(format!(
            "offset {offset} lies outside the search region of radius {}",
            geometry.search_radius
        )));
    }
    let overlap = overlap_count(offset, geometry.patch_side())?;
    Ok((2 * geometry.patch_area() + overlap) as f64)
}

/// Moment-matched scaled χ²: returns `(γ, η)` with `γ = var / 2·mean`, `η = mean / γ`.
pub fn fit_scaled_chi2(mean: f64, variance: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Domain {
            func: "fit_scaled_chi2",
            value: mean,
        });
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::Domain {
            func: "fit_scaled_chi2",
            value: variance,
        });
    }
    let gamma = variance / (2.0 * mean);
    Ok((gamma, mean / gamma))
}

/// Distribution of `D` at one offset, approximated as `γ·χ²_η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffDistribution {
    pub mean: f64,
    pub variance: f64,
    pub gamma: f64,
    pub eta: f64,
    pub overlap: usize,
    /// `-(η/2)·ln 2 - ln Γ(η/2) - ln γ`
    #[serde(skip)]
    log_norm: f64,
}

impl DiffDistribution {
    pub fn from_moments(mean: f64, variance: f64, overlap: usize) -> Result<Self> {
        let (gamma, eta) = fit_scaled_chi2(mean, variance)?;
        let half = 0.5 * eta;
        Ok(Self {
            mean,
            variance,
            gamma,
            eta,
            overlap,
            log_norm: -half * std::f64::consts::LN_2 - ln_gamma_unchecked(half) - gamma.ln(),
        })
    }

    pub fn for_offset(offset: Offset, geometry: &PatchGeometry) -> Result<Self> {
        let variance = variance_of_d(offset, geometry)?;
        let overlap = overlap_count(offset, geometry.patch_side())?;
        Self::from_moments(geometry.patch_area() as f64, variance, overlap)
    }

    /// Plain χ² with `dof` degrees of freedom (`γ = 1`).
    pub fn chi_square(dof: f64) -> Result<Self> {
        Self::from_moments(dof, 2.0 * dof, 0)
    }

    /// Density of `D`, including the `1/γ` change-of-variables factor.
    pub fn pdf(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::Domain {
                func: "pdf_d",
                value: d,
            });
        }
        Ok(self.pdf_unchecked(d))
    }

    #[inline]
    pub(crate) fn pdf_unchecked(&self, d: f64) -> f64 {
        let shape = 0.5 * self.eta - 1.0;
        if d == 0.0 {
            return if shape > 0.0 {
                0.0
            } else if shape == 0.0 {
                self.log_norm.exp()
            } else {
                f64::INFINITY
            };
        }
        if d == f64::INFINITY {
            return 0.0;
        }
        let z = d / self.gamma;
        (shape * z.ln() - 0.5 * z + self.log_norm).exp()
    }

    pub fn cdf(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::Domain {
                func: "cdf_d",
                value: d,
            });
        }
        Ok(lower_unchecked(0.5 * self.eta, 0.5 * d / self.gamma))
    }

    /// Upper tail `Pr(D > d)`, without cancellation for large `d`.
    pub fn sf(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::Domain {
                func: "sf_d",
                value: d,
            });
        }
        Ok(upper_unchecked(0.5 * self.eta, 0.5 * d / self.gamma))
    }

    /// Inverse CDF by bracketed bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain {
                func: "quantile_d",
                value: q,
            });
        }
        let a = 0.5 * self.eta;
        let cdf = |d: f64| lower_unchecked(a, 0.5 * d / self.gamma);
        let mut lo = 0.0;
        let mut hi = self.mean + 20.0 * self.variance.sqrt();
        while cdf(hi) < q {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Equal-tail interval holding probability mass `alpha`; `alpha = 1` gives `(0, ∞)`.
    pub fn critical_interval(&self, alpha: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain {
                func: "critical_interval",
                value: alpha,
            });
        }
        if alpha == 1.0 {
            return Ok((0.0, f64::INFINITY));
        }
        let tail = 0.5 * (1.0 - alpha);
        Ok((self.quantile(tail)?, self.quantile(1.0 - tail)?))
    }

    /// Mode `γ(η - 2)` for `η > 2`, else 0.
    pub fn mode(&self) -> f64 {
        (self.gamma * (self.eta - 2.0)).max(0.0)
    }
}

pub fn pdf_d(d: f64, dist: &DiffDistribution) -> Result<f64> {
    dist.pdf(d)
}

pub fn cdf_d(d: f64, dist: &DiffDistribution) -> Result<f64> {
    dist.cdf(d)
}

pub fn quantile_d(q: f64, dist: &DiffDistribution) -> Result<f64> {
    dist.quantile(q)
}

pub fn critical_interval(alpha: f64, dist: &DiffDistribution) -> Result<(f64, f64)> {
    dist.critical_interval(alpha)
}

/// Self-weight for the probabilistic model: the χ²_{|P|} density at `|P|`.
pub fn center_pixel_weight(geometry: &PatchGeometry) -> f64 {
    let area = geometry.patch_area() as f64;
    DiffDistribution::chi_square(area)
        .expect("patch area is positive")
        .pdf_unchecked(area)
}

/// Per-offset distributions for every non-zero offset of a search region.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    geometry: PatchGeometry,
    entries: Vec<Option<DiffDistribution>>,
}

impl DistributionTable {
    pub fn geometry(&self) -> &PatchGeometry {
        &self.geometry
    }

    pub fn get(&self, offset: Offset) -> Result<&DiffDistribution> {
        if !self.geometry.contains(offset) {
            return Err(Error::UnknownOffset {
                dy: offset.dy,
                dx: offset.dx,
            });
        }
        self.entries[self.geometry.offset_index(offset)]
            .as_ref()
            .ok_or(Error::UnknownOffset {
                dy: offset.dy,
                dx: offset.dx,
            })
    }

    /// Entry by row-major search index; `None` at the center.
    #[inline]
    pub fn by_index(&self, index: usize) -> Option<&DiffDistribution> {
        self.entries[index].as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major iteration over the non-zero offsets.
    pub fn iter(&self) -> impl Iterator<Item = (Offset, &DiffDistribution)> + '_ {
        self.geometry
            .offsets()
            .zip(&self.entries)
            .filter_map(|(o, e)| e.as_ref().map(|d| (o, d)))
    }
}

pub fn build_distribution_table(geometry: &PatchGeometry) -> DistributionTable {
    let entries = geometry
        .offsets()
        .map(|o| {
            (!o.is_zero())
                .then(|| DiffDistribution::for_offset(o, geometry).expect("offset within region"))
        })
        .collect();
    DistributionTable {
        geometry: *geometry,
        entries,
    }
}
