use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pnlm_core::stats::DiffDistribution;
use pnlm_core::validation::{gof_pvalue, sample_patch_difference};
use pnlm_core::{
    add_gaussian_noise, denoise, generate_checkerboard, ssim, Aggregator, DenoiseConfig, NoiseSpec,
    Offset, PatchGeometry, Rejection, SigmaSource, SsimParams, WeightKind,
};

fn bench_denoise(c: &mut Criterion) {
    let clean = generate_checkerboard(64, 64, 16, 64.0, 192.0).unwrap();
    let noisy = add_gaussian_noise(&clean, &NoiseSpec::new(40.0, 0).unwrap()).unwrap();
    let mut group = c.benchmark_group("denoise_64x64_p7_s21");
    group.sample_size(10);
    let cases = [
        (
            "nlm-mean",
            WeightKind::Classic { h_factor: 1.0 },
            Aggregator::WeightedMean,
            Rejection::Off,
        ),
        (
            "pnlm-mean",
            WeightKind::Probabilistic { rho: 1.0 },
            Aggregator::WeightedMean,
            Rejection::Off,
        ),
        (
            "pnlm-mean-upper",
            WeightKind::Probabilistic { rho: 1.0 },
            Aggregator::WeightedMean,
            Rejection::Upper { alpha: 0.999 },
        ),
        (
            "pnlm-median",
            WeightKind::Probabilistic { rho: 1.0 },
            Aggregator::WeightedMedian,
            Rejection::Off,
        ),
    ];
    for (name, weight, aggregator, rejection) in cases {
        let cfg = DenoiseConfig {
            geometry: PatchGeometry::from_sides(7, 21).unwrap(),
            weight,
            aggregator,
            rejection,
            sigma_source: SigmaSource::Known { sigma: 40.0 },
        };
        group.bench_function(name, |b| {
            b.iter(|| denoise(black_box(&noisy), &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_pdf(c: &mut Criterion) {
    let g = PatchGeometry::from_sides(7, 21).unwrap();
    let dist = DiffDistribution::for_offset(Offset::new(0, 1), &g).unwrap();
    let xs: Vec<f64> = (0..1024).map(|i| i as f64 * 0.1).collect();
    c.bench_function("pdf_1024_points", |b| {
        b.iter(|| {
            xs.iter()
                .map(|&x| dist.pdf(black_box(x)).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("quantile_0.999", |b| {
        b.iter(|| dist.quantile(black_box(0.999)).unwrap())
    });
}

fn bench_sampler(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_patch_difference_10k");
    for side in [3usize, 9] {
        let g = PatchGeometry::from_sides(side, 21).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(side), &g, |b, g| {
            b.iter(|| sample_patch_difference(Offset::new(0, 1), g, 10_000, 1).unwrap())
        });
    }
    group.finish();

    let g = PatchGeometry::from_sides(3, 7).unwrap();
    let dist = DiffDistribution::for_offset(Offset::new(0, 1), &g).unwrap();
    let xs = sample_patch_difference(Offset::new(0, 1), &g, 100_000, 1).unwrap();
    c.bench_function("gof_100k_50_bins", |b| {
        b.iter(|| gof_pvalue(black_box(&xs), &dist, 50).unwrap())
    });
}

fn bench_ssim(c: &mut Criterion) {
    let a = generate_checkerboard(256, 256, 16, 64.0, 192.0).unwrap();
    let b_img = add_gaussian_noise(&a, &NoiseSpec::new(20.0, 0).unwrap()).unwrap();
    c.bench_function("ssim_256x256", |b| {
        b.iter(|| ssim(black_box(&a), &b_img, &SsimParams::default()).unwrap())
    });
}

criterion_group!(benches, bench_denoise, bench_pdf, bench_sampler, bench_ssim);
criterion_main!(benches);
