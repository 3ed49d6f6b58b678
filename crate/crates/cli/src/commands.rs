use std::fs;
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum as _;
use pnlm_core::{
    add_gaussian_noise, denoise as run_denoise, load_pgm, method_noise, psnr, save_pgm, ssim,
    DenoiseConfig, Image, NoiseSpec, PatchGeometry, Rejection, SigmaSource, SsimParams,
};
use serde::Serialize;

use crate::args::{AddNoiseArgs, DenoiseArgs, MetricsArgs, RejectArg};
use crate::{usage, CliError, CliResult};

pub(crate) fn read_image(path: &Path) -> CliResult<Image> {
    load_pgm(path).map_err(|e| CliError::Runtime(e.into()))
}

pub(crate) fn write_image(img: &Image, path: &Path) -> CliResult {
    save_pgm(img, path, true).map_err(|e| CliError::Runtime(e.into()))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
    text.push('\n');
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Runtime)
}

#[derive(Debug, Serialize)]
struct NoiseReport {
    sigma: f64,
    seed: u64,
    realized_sigma: f64,
}

pub fn add_noise(args: &AddNoiseArgs) -> CliResult {
    let spec = NoiseSpec::new(args.sigma, args.seed).or_else(|e| usage(e.to_string()))?;
    let clean = read_image(&args.input)?;
    let noisy = add_gaussian_noise(&clean, &spec)?;
    let diff: Vec<f64> = noisy
        .pixels()
        .iter()
        .zip(clean.pixels())
        .map(|(a, b)| a - b)
        .collect();
    let n = diff.len() as f64;
    let mean = diff.iter().sum::<f64>() / n;
    let var = diff.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    write_image(&noisy, &args.out)?;
    let report = NoiseReport {
        sigma: args.sigma,
        seed: args.seed,
        realized_sigma: var.sqrt(),
    };
    println!(
        "{}",
        serde_json::to_string(&report).map_err(anyhow::Error::from)?
    );
    Ok(())
}

pub(crate) fn geometry_from_sides(patch: usize, search: usize) -> CliResult<PatchGeometry> {
    PatchGeometry::from_sides(patch, search).or_else(|e| usage(e.to_string()))
}

pub fn denoise_config(args: &DenoiseArgs) -> CliResult<DenoiseConfig> {
    let geometry = geometry_from_sides(args.patch, args.search)?;
    let rejection = match args.reject {
        RejectArg::Off => Rejection::Off,
        RejectArg::Upper => Rejection::Upper { alpha: args.alpha },
        RejectArg::TwoSided => Rejection::TwoSided { alpha: args.alpha },
    };
    if rejection != Rejection::Off && !args.method.is_probabilistic() {
        return usage(format!(
            "--reject {} needs probabilistic weights; use pnlm-mean or pnlm-median instead of {}",
            args.reject
                .to_possible_value()
                .map(|v| v.get_name().to_owned())
                .unwrap_or_default(),
            args.method
        ));
    }
    let sigma_source = match args.sigma {
        Some(sigma) => SigmaSource::Known { sigma },
        None => SigmaSource::Estimate,
    };
    let config = DenoiseConfig {
        geometry,
        weight: args.method.weight(args.h_factor, args.rho),
        aggregator: args.method.aggregator(),
        rejection,
        sigma_source,
    };
    config.validate().or_else(|e| usage(e.to_string()))?;
    Ok(config)
}

pub fn denoise(args: &DenoiseArgs) -> CliResult {
    let config = denoise_config(args)?;
    let noisy = read_image(&args.input)?;
    let (out, stats) = run_denoise(&noisy, &config)?;
    write_image(&out, &args.out)?;
    if let Some(path) = &args.method_noise_out {
        write_image(&method_noise(&noisy, &out)?, path)?;
    }
    match &args.stats_out {
        Some(path) => write_json(path, &stats)?,
        None => println!(
            "{}",
            serde_json::to_string(&stats).map_err(anyhow::Error::from)?
        ),
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    /// `None` when the images are identical.
    pub psnr: Option<f64>,
    pub ssim: f64,
}

pub fn metrics(args: &MetricsArgs) -> CliResult {
    let reference = read_image(&args.reference)?;
    let test = read_image(&args.test)?;
    let p = psnr(&reference, &test, pnlm_core::metrics::DEFAULT_PEAK)?;
    let report = MetricsReport {
        psnr: p.is_finite().then_some(p),
        ssim: ssim(&reference, &test, &SsimParams::default())?,
    };
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    println!(
        "{}",
        serde_json::to_string(&report).map_err(anyhow::Error::from)?
    );
    Ok(())
}
