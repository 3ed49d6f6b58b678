//! Monte Carlo checks of the patch-difference distributions.
//!
//! Samples are drawn under the perfect-match hypothesis with unit noise: the
//! clean patches are identical, so `D` only depends on the noise. One noise
//! field is drawn over the union of the two patch footprints, which makes
//! shared pixels enter both patches with the same value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::upper_unchecked;
use crate::stats::{variance_of_d, DiffDistribution, Offset, PatchGeometry};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_GOF_BINS: usize = 50;
pub const MIN_EXPECTED_PER_BIN: f64 = 5.0;
const SAMPLE_BLOCK: usize = 8192;

/// Indices of the two patches inside a compact union-footprint buffer.
#[derive(Clone, Debug)]
struct UnionLayout {
    len: usize,
    at_l: Vec<usize>,
    at_k: Vec<usize>,
}

fn union_layout(offset: Offset, geometry: &PatchGeometry) -> UnionLayout {
    let p = geometry.patch_side() as i32;
    let (dy, dx) = (offset.dy, offset.dx);
    // bounding box of both patches, patch l anchored at (0, 0)
    let (y0, x0) = (dy.min(0), dx.min(0));
    let (bh, bw) = ((p + dy.abs()) as usize, (p + dx.abs()) as usize);
    let mut slot = vec![usize::MAX; bh * bw];
    let mut len = 0;
    let mut claim = |y: i32, x: i32| -> usize {
        let i = (y - y0) as usize * bw + (x - x0) as usize;
        if slot[i] == usize::MAX {
            slot[i] = len;
            len += 1;
        }
        slot[i]
    };
    let mut at_l = Vec::with_capacity((p * p) as usize);
    let mut at_k = Vec::with_capacity((p * p) as usize);
    for j in 0..p {
        for i in 0..p {
            at_l.push(claim(j, i));
        }
    }
    for j in 0..p {
        for i in 0..p {
            at_k.push(claim(j + dy, i + dx));
        }
    }
    UnionLayout { len, at_l, at_k }
}

fn stream_id(block: usize, offset: Offset) -> u64 {
    ((block as u64) << 20) | (((offset.dy + 512) as u64) << 10) | (offset.dx + 512) as u64
}

fn check_offset(offset: Offset) -> Result<()> {
    if offset.is_zero() {
        return Err(Error::InvalidArgument(
            "zero offset compares a patch with itself (D is identically 0)".into(),
        ));
    }
    if offset.dy.abs() >= 512 || offset.dx.abs() >= 512 {
        return Err(Error::InvalidArgument(format!(
            "offset {offset} is too large"
        )));
    }
    Ok(())
}

/// Draws one block of samples, calling `sink` with each sample's per-pixel
/// terms `(n_{l+j} - n_{k+j})² / 2` in patch row-major order.
fn sample_block(
    layout: &UnionLayout,
    offset: Offset,
    seed: u64,
    block: usize,
    count: usize,
    mut sink: impl FnMut(&[f64]),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(block, offset));
    let mut noise = vec![0.0; layout.len];
    let mut terms = vec![0.0; layout.at_l.len()];
    for _ in 0..count {
        for v in noise.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for ((t, &a), &b) in terms.iter_mut().zip(&layout.at_l).zip(&layout.at_k) {
            let d = noise[a] - noise[b];
            *t = 0.5 * d * d;
        }
        sink(&terms);
    }
}

/// Draws fixed-size sample blocks in parallel, reducing each sample with
/// `reduce`, and concatenates the results in block order.
fn sample_parallel(
    offset: Offset,
    geometry: &PatchGeometry,
    n_samples: usize,
    seed: u64,
    per_sample: usize,
    reduce: impl Fn(&[f64], &mut Vec<f64>) + Sync,
) -> Result<Vec<f64>> {
    check_offset(offset)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "n_samples must be at least 1".into(),
        ));
    }
    let layout = union_layout(offset, geometry);
    let n_blocks = n_samples.div_ceil(SAMPLE_BLOCK);
    let blocks: Vec<Vec<f64>> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let count = SAMPLE_BLOCK.min(n_samples - block * SAMPLE_BLOCK);
            let mut out = Vec::with_capacity(count * per_sample);
            sample_block(&layout, offset, seed, block, count, |terms| {
                reduce(terms, &mut out)
            });
            out
        })
        .collect();
    Ok(blocks.concat())
}

/// Monte Carlo samples of `D` at `offset` under the perfect-match hypothesis (σ = 1).
pub fn sample_patch_difference(
    offset: Offset,
    geometry: &PatchGeometry,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    sample_parallel(offset, geometry, n_samples, seed, 1, |terms, out| {
        out.push(terms.iter().sum())
    })
}

/// The same draws as [`sample_patch_difference`], but returning the `|P|`
/// individual pixel terms of each sample (flattened, sample-major).
pub fn sample_difference_terms(
    offset: Offset,
    geometry: &PatchGeometry,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    sample_parallel(
        offset,
        geometry,
        n_samples,
        seed,
        geometry.patch_area(),
        |terms, out| out.extend_from_slice(terms),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofOutcome {
    pub n_samples: usize,
    pub n_bins: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub geometry: PatchGeometry,
    pub offset: Offset,
    pub n_samples: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
}

pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Pearson χ² goodness-of-fit against `dist` with `n_bins` equal-probability bins.
pub fn gof_pvalue(samples: &[f64], dist: &DiffDistribution, n_bins: usize) -> Result<GofOutcome> {
    if n_bins < 5 {
        return Err(Error::InvalidArgument(format!(
            "goodness-of-fit needs at least 5 bins, got {n_bins}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to test".into()));
    }
    let expected = samples.len() as f64 / n_bins as f64;
    if expected < MIN_EXPECTED_PER_BIN {
        return Err(Error::InsufficientSamples {
            samples: samples.len(),
            bins: n_bins,
            expected,
        });
    }
    let edges = (1..n_bins)
        .map(|i| dist.quantile(i as f64 / n_bins as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; n_bins];
    for &s in samples {
        counts[edges.partition_point(|&e| e < s)] += 1;
    }
    let statistic: f64 = counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let dof = (n_bins - 1) as f64;
    let p_value = upper_unchecked(0.5 * dof, 0.5 * statistic);
    let (sample_mean, sample_variance) = mean_variance(samples);
    Ok(GofOutcome {
        n_samples: samples.len(),
        n_bins,
        statistic,
        p_value,
        sample_mean,
        sample_variance,
    })
}

/// Samples `D` at `offset` and tests it against the fitted distribution.
pub fn gof_report(
    offset: Offset,
    geometry: &PatchGeometry,
    n_samples: usize,
    seed: u64,
    n_bins: usize,
) -> Result<GofReport> {
    let expected = n_samples as f64 / n_bins.max(1) as f64;
    if n_bins >= 5 && expected < MIN_EXPECTED_PER_BIN {
        return Err(Error::InsufficientSamples {
            samples: n_samples,
            bins: n_bins,
            expected,
        });
    }
    let dist = DiffDistribution::for_offset(offset, geometry)?;
    let samples = sample_patch_difference(offset, geometry, n_samples, seed)?;
    let g = gof_pvalue(&samples, &dist, n_bins)?;
    Ok(GofReport {
        geometry: *geometry,
        offset,
        n_samples,
        statistic: g.statistic,
        p_value: g.p_value,
        sample_mean: g.sample_mean,
        sample_variance: g.sample_variance,
    })
}

/// The four offsets one pixel from the center, where patch overlap is largest.
pub fn most_correlated_offsets(geometry: &PatchGeometry) -> Result<[Offset; 4]> {
    if geometry.search_radius < 1 {
        return Err(Error::InvalidArgument(
            "search region must contain offsets other than the center".into(),
        ));
    }
    Ok([
        Offset::new(0, 1),
        Offset::new(0, -1),
        Offset::new(1, 0),
        Offset::new(-1, 0),
    ])
}

/// SplitMix64 finalizer applied to `base` combined with each tag.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut z = base;
    for &t in tags {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub patch_sides: Vec<usize>,
    pub search_sides: Vec<usize>,
    /// `cells[i][j]`: averaged p-value for `patch_sides[i]`, `search_sides[j]`.
    pub cells: Vec<Vec<f64>>,
    pub reports: Vec<GofReport>,
}

/// Averaged GOF p-value over the four most-correlated offsets of one geometry.
pub fn averaged_pvalue(
    geometry: &PatchGeometry,
    n_samples: usize,
    seed: u64,
    n_bins: usize,
) -> Result<(f64, Vec<GofReport>)> {
    let reports = most_correlated_offsets(geometry)?
        .iter()
        .map(|&o| gof_report(o, geometry, n_samples, seed, n_bins))
        .collect::<Result<Vec<_>>>()?;
    let avg = reports.iter().map(|r| r.p_value).sum::<f64>() / reports.len() as f64;
    Ok((avg, reports))
}

pub fn table1_run(
    patch_sides: &[usize],
    search_sides: &[usize],
    n_samples: usize,
    seed: u64,
    n_bins: usize,
) -> Result<Table1> {
    let mut cells = Vec::with_capacity(patch_sides.len());
    let mut reports = Vec::new();
    for &p in patch_sides {
        let mut row = Vec::with_capacity(search_sides.len());
        for &s in search_sides {
            let geometry = PatchGeometry::from_sides(p, s)?;
            let cell_seed = derive_seed(seed, &[p as u64, s as u64]);
            let (avg, r) = averaged_pvalue(&geometry, n_samples, cell_seed, n_bins)?;
            row.push(avg);
            reports.extend(r);
        }
        cells.push(row);
    }
    Ok(Table1 {
        patch_sides: patch_sides.to_vec(),
        search_sides: search_sides.to_vec(),
        cells,
        reports,
    })
}

/// `(2s+1) x (2s+1)` grid of `var[D]`; the center cell is `None`.
pub fn variance_map(geometry: &PatchGeometry) -> Vec<Vec<Option<u64>>> {
    let s = geometry.search_radius as i32;
    (-s..=s)
        .map(|dy| {
            (-s..=s)
                .map(|dx| {
                    variance_of_d(Offset::new(dy, dx), geometry)
                        .ok()
                        .map(|v| v as u64)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Empirical density: count / (n · width).
    pub density: Vec<f64>,
    /// Model density at each bin center.
    pub theoretical: Vec<f64>,
}

impl Histogram {
    pub fn max_abs_deviation(&self) -> f64 {
        self.density
            .iter()
            .zip(&self.theoretical)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Equal-width histogram over `[0, quantile(0.9999)]` with the model density overlaid.
pub fn histogram(samples: &[f64], dist: &DiffDistribution, n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 || samples.is_empty() {
        return Err(Error::InvalidArgument(
            "histogram needs samples and at least one bin".into(),
        ));
    }
    let upper = dist.quantile(0.9999)?;
    let width = upper / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &s in samples {
        if (0.0..upper).contains(&s) {
            counts[((s / width) as usize).min(n_bins - 1)] += 1;
        }
    }
    let n = samples.len() as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| i as f64 * width).collect();
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let theoretical = (0..n_bins)
        .map(|i| dist.pdf((i as f64 + 0.5) * width))
        .collect::<Result<Vec<_>>>()?;
    Ok(Histogram {
        edges,
        counts,
        density,
        theoretical,
    })
}
