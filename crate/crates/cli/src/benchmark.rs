use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use pnlm_core::{
    add_gaussian_noise, denoise, generate_checkerboard, load_pgm, psnr, ssim, DenoiseConfig, Image,
    NoiseSpec, Rejection, SigmaSource, SsimParams,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::BenchmarkArgs;
use crate::commands::geometry_from_sides;
use crate::{usage, CliError, CliResult, Method};

fn default_sigmas() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) * 10.0).collect()
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_realizations() -> usize {
    10
}

fn default_patch() -> usize {
    7
}

fn default_search() -> usize {
    21
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub images: Vec<String>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_patch")]
    pub patch_side: usize,
    #[serde(default = "default_search")]
    pub search_side: usize,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            images: Vec::new(),
            sigmas: default_sigmas(),
            methods: default_methods(),
            realizations: default_realizations(),
            base_seed: 0,
            patch_side: default_patch(),
            search_side: default_search(),
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> CliResult {
        if self.images.is_empty() {
            return usage("benchmark needs at least one image");
        }
        if self.sigmas.is_empty() {
            return usage("benchmark needs at least one sigma");
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return usage(format!("sigmas must be positive, got {s}"));
        }
        if self.methods.is_empty() {
            return usage("benchmark needs at least one method");
        }
        if self.realizations == 0 {
            return usage("realizations must be at least 1");
        }
        geometry_from_sides(self.patch_side, self.search_side)?;
        for img in &self.images {
            if img.starts_with("checker:") {
                img.parse::<Checker>().or_else(usage)?;
            }
        }
        Ok(())
    }
}

/// Synthetic checkerboard written as `checker:WxH:block:low:high`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Checker {
    pub width: usize,
    pub height: usize,
    pub block: usize,
    pub low: f64,
    pub high: f64,
}

impl FromStr for Checker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad synthetic image {s:?}; expected checker:WxH:block:low:high");
        let parts: Vec<&str> = s.split(':').collect();
        let [kind, size, block, low, high] = parts[..] else {
            return Err(bad());
        };
        if kind != "checker" {
            return Err(bad());
        }
        let (w, h) = size.split_once('x').ok_or_else(bad)?;
        Ok(Checker {
            width: w.parse().map_err(|_| bad())?,
            height: h.parse().map_err(|_| bad())?,
            block: block.parse().map_err(|_| bad())?,
            low: low.parse().map_err(|_| bad())?,
            high: high.parse().map_err(|_| bad())?,
        })
    }
}

fn load_images(spec: &BenchmarkSpec) -> CliResult<Vec<Image>> {
    let missing: Vec<&str> = spec
        .images
        .iter()
        .filter(|i| !i.starts_with("checker:") && !Path::new(i.as_str()).is_file())
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "missing images: {}",
            missing.join(", ")
        )));
    }
    spec.images
        .iter()
        .map(|i| {
            if i.starts_with("checker:") {
                let c: Checker = i.parse().map_err(|e: String| CliError::Usage(e))?;
                generate_checkerboard(c.width, c.height, c.block, c.low, c.high)
                    .map_err(CliError::from)
            } else {
                load_pgm(i)
                    .with_context(|| format!("loading {i}"))
                    .map_err(CliError::Runtime)
            }
        })
        .collect()
}

/// One denoising run of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub image: String,
    pub sigma: f64,
    pub method: Method,
    pub realization: usize,
    pub seed: u64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub runs: Vec<RunRecord>,
    /// `(image, method, per-sigma means)` in spec order.
    pub psnr: Vec<(String, Method, Vec<f64>)>,
    pub ssim: Vec<(String, Method, Vec<f64>)>,
}

/// Runs every `(image, sigma, method, realization)` tuple; realization `i`
/// uses seed `base_seed + i` for every method so comparisons are paired.
pub fn run_spec(spec: &BenchmarkSpec) -> CliResult<BenchmarkResult> {
    spec.validate()?;
    let images = load_images(spec)?;
    let geometry = geometry_from_sides(spec.patch_side, spec.search_side)?;

    let mut jobs = Vec::new();
    for i in 0..images.len() {
        for &sigma in &spec.sigmas {
            for &method in &spec.methods {
                for r in 0..spec.realizations {
                    jobs.push((i, sigma, method, r));
                }
            }
        }
    }
    let ssim_params = SsimParams::default();
    let runs = jobs
        .par_iter()
        .map(|&(i, sigma, method, r)| -> CliResult<RunRecord> {
            let clean = &images[i];
            let seed = spec.base_seed.wrapping_add(r as u64);
            let noisy = add_gaussian_noise(clean, &NoiseSpec::new(sigma, seed)?)?;
            let config = DenoiseConfig {
                geometry,
                weight: method.weight(1.0, 1.0),
                aggregator: method.aggregator(),
                rejection: Rejection::Off,
                sigma_source: SigmaSource::Known { sigma },
            };
            let (out, _) = denoise(&noisy, &config)?;
            Ok(RunRecord {
                image: spec.images[i].clone(),
                sigma,
                method,
                realization: r,
                seed,
                psnr: psnr(clean, &out, pnlm_core::metrics::DEFAULT_PEAK)?,
                ssim: ssim(clean, &out, &ssim_params)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut psnr_rows = Vec::new();
    let mut ssim_rows = Vec::new();
    let per_cell = spec.realizations;
    for (i, name) in spec.images.iter().enumerate() {
        for (m_idx, &method) in spec.methods.iter().enumerate() {
            let mut p = Vec::new();
            let mut s = Vec::new();
            for s_idx in 0..spec.sigmas.len() {
                let start =
                    ((i * spec.sigmas.len() + s_idx) * spec.methods.len() + m_idx) * per_cell;
                let cell = &runs[start..start + per_cell];
                p.push(cell.iter().map(|r| r.psnr).sum::<f64>() / per_cell as f64);
                s.push(cell.iter().map(|r| r.ssim).sum::<f64>() / per_cell as f64);
            }
            psnr_rows.push((name.clone(), method, p));
            ssim_rows.push((name.clone(), method, s));
        }
    }
    Ok(BenchmarkResult {
        runs,
        psnr: psnr_rows,
        ssim: ssim_rows,
    })
}

fn write_summary(
    rows: &[(String, Method, Vec<f64>)],
    sigmas: &[f64],
    path: &Path,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["image".to_owned(), "method".to_owned()];
    header.extend(sigmas.iter().map(|s| format!("sigma_{s}")));
    w.write_record(&header)?;
    for (image, method, values) in rows {
        let mut rec = vec![image.clone(), method.to_string()];
        rec.extend(values.iter().map(|v| format!("{v:.4}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_raw(runs: &[RunRecord], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "image",
        "sigma",
        "method",
        "realization",
        "seed",
        "psnr",
        "ssim",
    ])?;
    for r in runs {
        w.write_record([
            r.image.clone(),
            r.sigma.to_string(),
            r.method.to_string(),
            r.realization.to_string(),
            r.seed.to_string(),
            r.psnr.to_string(),
            r.ssim.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_outputs(spec: &BenchmarkSpec, result: &BenchmarkResult, out_dir: &Path) -> CliResult {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_summary(
        &result.psnr,
        &spec.sigmas,
        &out_dir.join("benchmark_psnr.csv"),
    )?;
    write_summary(
        &result.ssim,
        &spec.sigmas,
        &out_dir.join("benchmark_ssim.csv"),
    )?;
    write_raw(&result.runs, &out_dir.join("benchmark_runs.csv"))?;
    Ok(())
}

pub fn resolve_spec(args: &BenchmarkArgs) -> CliResult<BenchmarkSpec> {
    let mut spec = match &args.spec {
        Some(path) => read_spec(path)?,
        None => {
            if args.images.is_empty() {
                return usage("benchmark needs --spec or --images");
            }
            BenchmarkSpec::default()
        }
    };
    if !args.images.is_empty() {
        spec.images = args.images.clone();
    }
    if !args.sigmas.is_empty() {
        spec.sigmas = args.sigmas.clone();
    }
    if !args.methods.is_empty() {
        spec.methods = args.methods.clone();
    }
    if let Some(r) = args.realizations {
        spec.realizations = r;
    }
    if let Some(s) = args.base_seed {
        spec.base_seed = s;
    }
    if let Some(p) = args.patch {
        spec.patch_side = p;
    }
    if let Some(s) = args.search {
        spec.search_side = s;
    }
    Ok(spec)
}

fn read_spec(path: &PathBuf) -> CliResult<BenchmarkSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .or_else(|e| usage(format!("invalid benchmark spec {}: {e}", path.display())))
}

pub fn run(args: &BenchmarkArgs) -> CliResult {
    let spec = resolve_spec(args)?;
    let result = run_spec(&spec)?;
    write_outputs(&spec, &result, &args.out_dir)?;
    for (image, method, values) in &result.psnr {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:.2}")).collect();
        println!("{image}  {method:<12} {}", cells.join("  "));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_checker() {
        let c: Checker = "checker:128x96:16:64:192".parse().unwrap();
        assert_eq!(
            c,
            Checker {
                width: 128,
                height: 96,
                block: 16,
                low: 64.0,
                high: 192.0
            }
        );
        assert!("checker:128:16:64:192".parse::<Checker>().is_err());
        assert!("stripes:8x8:2:0:1".parse::<Checker>().is_err());
    }

    #[test]
    fn spec_defaults() {
        let spec: BenchmarkSpec = serde_json::from_str(r#"{"images": ["a.pgm"]}"#).unwrap();
        assert_eq!(
            spec.sigmas,
            [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0]
        );
        assert_eq!(spec.methods, Method::ALL);
        assert_eq!(spec.realizations, 10);
        assert_eq!((spec.patch_side, spec.search_side), (7, 21));
        assert!(serde_json::from_str::<BenchmarkSpec>(r#"{"images": [], "bogus": 1}"#).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
    }

    #[test]
    fn paired_seeds_across_methods() {
        let spec = BenchmarkSpec {
            images: vec!["checker:24x24:6:60:180".into()],
            sigmas: vec![30.0],
            methods: vec![Method::NlmMean, Method::PnlmMean],
            realizations: 2,
            base_seed: 40,
            patch_side: 3,
            search_side: 5,
        };
        let r = run_spec(&spec).unwrap();
        let seeds: Vec<(Method, u64)> = r.runs.iter().map(|x| (x.method, x.seed)).collect();
        assert_eq!(
            seeds,
            [
                (Method::NlmMean, 40),
                (Method::NlmMean, 41),
                (Method::PnlmMean, 40),
                (Method::PnlmMean, 41)
            ]
        );
        let mean = (r.runs[0].psnr + r.runs[1].psnr) / 2.0;
        assert_eq!(r.psnr[0].2[0], mean);
    }
}
