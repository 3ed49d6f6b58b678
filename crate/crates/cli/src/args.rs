use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::Method;

#[derive(Debug, Parser)]
#[command(
    name = "pnlm",
    version,
    about = "Probabilistic non-local means denoising"
)]
pub struct Cli {
    /// Report errors on stderr as a JSON object.
    #[arg(long, global = true)]
    pub json_errors: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add seeded white Gaussian noise to a PGM image.
    AddNoise(AddNoiseArgs),
    /// Denoise a PGM image.
    Denoise(DenoiseArgs),
    /// PSNR and SSIM of a test image against a reference.
    Metrics(MetricsArgs),
    /// Monte Carlo check of the patch-difference distributions.
    Validate(ValidateArgs),
    /// PSNR/SSIM sweep over images, noise levels and methods.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct AddNoiseArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RejectArg {
    Off,
    Upper,
    TwoSided,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("noise").required(true).args(["sigma", "estimate_sigma"])))]
pub struct DenoiseArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::PnlmMean)]
    pub method: Method,
    /// Patch side length (odd).
    #[arg(long, default_value_t = 7)]
    pub patch: usize,
    /// Search region side length (odd).
    #[arg(long, default_value_t = 21)]
    pub search: usize,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Estimate the noise level from the input instead of passing --sigma.
    #[arg(long)]
    pub estimate_sigma: bool,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h_factor: f64,
    #[arg(long, value_enum, default_value_t = RejectArg::Off)]
    pub reject: RejectArg,
    #[arg(long, default_value_t = 0.999)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write run statistics as JSON; printed to stdout if omitted.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    #[arg(long)]
    pub method_noise_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7, 9])]
    pub patch_sides: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [7, 11, 15, 21, 29])]
    pub search_sides: Vec<usize>,
    #[arg(long, default_value_t = pnlm_core::validation::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = pnlm_core::validation::DEFAULT_GOF_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also dump histograms of the most-correlated offsets.
    #[arg(long)]
    pub histograms: bool,
    #[arg(long, default_value_t = 100)]
    pub histogram_bins: usize,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// JSON benchmark spec; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// PGM paths or synthetic specs such as `checker:128x128:16:64:192`.
    #[arg(long, value_delimiter = ',')]
    pub images: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub patch: Option<usize>,
    #[arg(long)]
    pub search: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}
