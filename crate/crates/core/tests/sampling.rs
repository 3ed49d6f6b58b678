use pnlm_core::stats::DiffDistribution;
use pnlm_core::validation::{
    gof_pvalue, histogram, mean_variance, sample_difference_terms, sample_patch_difference,
};
use pnlm_core::{Offset, PatchGeometry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};

const N: usize = 100_000;

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (n - 1.0)
}

#[test]
fn disjoint_offset_moments() {
    let g = PatchGeometry::new(1, 5);
    let xs = sample_patch_difference(Offset::new(4, -2), &g, N, 17).unwrap();
    let (mean, var) = mean_variance(&xs);
    assert!((mean - 9.0).abs() < 0.09, "{mean}");
    assert!((var - 18.0).abs() < 0.54, "{var}");
}

#[test]
fn adjacent_offset_variance() {
    let g = PatchGeometry::new(1, 5);
    let xs = sample_patch_difference(Offset::new(1, 0), &g, N, 18).unwrap();
    let (mean, var) = mean_variance(&xs);
    assert!((mean - 9.0).abs() < 0.09, "{mean}");
    assert!((var - 24.0).abs() < 0.72, "{var}");
}

#[test]
fn single_sample_is_reproducible() {
    let g = PatchGeometry::new(2, 4);
    let a = sample_patch_difference(Offset::new(1, 2), &g, 1, 99).unwrap();
    let b = sample_patch_difference(Offset::new(1, 2), &g, 1, 99).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(a, b);
}

#[test]
fn offsets_use_independent_streams() {
    let g = PatchGeometry::new(1, 3);
    let a = sample_patch_difference(Offset::new(0, 1), &g, N, 5).unwrap();
    let b = sample_patch_difference(Offset::new(1, 0), &g, N, 5).unwrap();
    let corr = covariance(&a, &b) / (mean_variance(&a).1 * mean_variance(&b).1).sqrt();
    assert!(corr.abs() < 0.02, "{corr}");
}

#[test]
fn term_covariance_structure() {
    // offset (0, 1): term j shares a pixel with term j' when j = j' + (0, 1)
    let g = PatchGeometry::new(1, 2);
    let p = 3usize;
    let terms = sample_difference_terms(Offset::new(0, 1), &g, N, 23).unwrap();
    let column = |j: usize| -> Vec<f64> { terms.iter().skip(j).step_by(p * p).copied().collect() };
    let cols: Vec<Vec<f64>> = (0..p * p).map(column).collect();
    for a in 0..p * p {
        for b in a..p * p {
            let c = covariance(&cols[a], &cols[b]);
            let (ra, ca) = (a / p, a % p);
            let (rb, cb) = (b / p, b % p);
            let shared = ra == rb && (ca as i32 - cb as i32).abs() == 1;
            if a == b {
                assert!((c - 2.0).abs() < 0.2, "var of term {a}: {c}");
            } else if shared {
                assert!((c - 0.5).abs() < 0.05, "cov {a},{b}: {c}");
            } else {
                assert!(c.abs() < 0.05, "cov {a},{b}: {c}");
            }
        }
    }
}

#[test]
fn histogram_tracks_density() {
    for (r, o) in [
        (1, (0, 1)),
        (1, (1, 1)),
        (1, (0, 2)),
        (2, (1, 0)),
        (2, (2, 3)),
        (3, (0, 1)),
        (3, (7, 0)),
    ] {
        let g = PatchGeometry::new(r, 8);
        let o = Offset::new(o.0, o.1);
        let dist = DiffDistribution::for_offset(o, &g).unwrap();
        let xs = sample_patch_difference(o, &g, N, 31 + r as u64).unwrap();
        let h = histogram(&xs, &dist, 100).unwrap();
        assert_eq!(h.counts.len(), 100);
        assert!(
            h.max_abs_deviation() < 0.01,
            "r={r} {o}: {}",
            h.max_abs_deviation()
        );
    }
}

fn fitted_model_samples(dist: &DiffDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi = ChiSquared::new(dist.eta).unwrap();
    (0..n).map(|_| dist.gamma * chi.sample(&mut rng)).collect()
}

#[test]
fn gof_null_calibration() {
    let g = PatchGeometry::new(1, 3);
    let dist = DiffDistribution::for_offset(Offset::new(0, 1), &g).unwrap();
    let reps = 100;
    let rejected = (0..reps)
        .filter(|&rep| {
            let xs = fitted_model_samples(&dist, N, 1000 + rep);
            gof_pvalue(&xs, &dist, 50).unwrap().p_value < 0.05
        })
        .count();
    let frac = rejected as f64 / reps as f64;
    assert!((frac - 0.05).abs() <= 0.05, "{frac}");
}

#[test]
fn gof_power_against_wrong_variance() {
    let g = PatchGeometry::new(1, 3);
    let heavy = DiffDistribution::for_offset(Offset::new(0, 1), &g).unwrap();
    assert_eq!(heavy.variance, 24.0);
    let chi9 = DiffDistribution::chi_square(9.0).unwrap();
    let xs = fitted_model_samples(&chi9, N, 77);
    let r = gof_pvalue(&xs, &heavy, 50).unwrap();
    assert!(r.p_value < 0.001, "{}", r.p_value);
}
