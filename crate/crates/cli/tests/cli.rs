use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pnlm_core::{generate_checkerboard, load_pgm, save_pgm};

fn pnlm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnlm"))
        .args(args)
        .current_dir(dir)
        .env_remove("PNLM_THREADS")
        .output()
        .expect("spawn pnlm")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let clean = generate_checkerboard(64, 48, 8, 64.0, 192.0).unwrap();
    save_pgm(&clean, dir.path().join("clean.pgm"), true).unwrap();
    dir
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned()
}

#[test]
fn add_noise_reports_sigma_and_repeats() {
    let dir = setup();
    let d = dir.path();
    let a = ok(&pnlm(
        d,
        &[
            "add-noise",
            "clean.pgm",
            "--sigma",
            "20",
            "--seed",
            "7",
            "--out",
            "a.pgm",
        ],
    ));
    ok(&pnlm(
        d,
        &[
            "add-noise",
            "clean.pgm",
            "--sigma",
            "20",
            "--seed",
            "7",
            "--out",
            "b.pgm",
        ],
    ));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let realized = v["realized_sigma"].as_f64().unwrap();
    assert!((realized - 20.0).abs() < 1.0, "{realized}");
    assert_eq!(
        fs::read(d.join("a.pgm")).unwrap(),
        fs::read(d.join("b.pgm")).unwrap()
    );
}

#[test]
fn add_noise_without_sigma_is_usage_error() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &["add-noise", "clean.pgm", "--seed", "7", "--out", "x.pgm"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_runtime_error() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &["denoise", "nope.pgm", "--sigma", "10", "--out", "x.pgm"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.pgm"));
}

#[test]
fn search_side_one_returns_input() {
    let dir = setup();
    let d = dir.path();
    ok(&pnlm(
        d,
        &[
            "add-noise",
            "clean.pgm",
            "--sigma",
            "30",
            "--seed",
            "1",
            "--out",
            "noisy.pgm",
        ],
    ));
    for method in ["nlm-mean", "pnlm-mean", "nlm-median", "pnlm-median"] {
        ok(&pnlm(
            d,
            &[
                "denoise",
                "noisy.pgm",
                "--method",
                method,
                "--sigma",
                "30",
                "--search",
                "1",
                "--out",
                "id.pgm",
            ],
        ));
        assert_eq!(
            fs::read(d.join("noisy.pgm")).unwrap(),
            fs::read(d.join("id.pgm")).unwrap()
        );
    }
}

#[test]
fn denoise_writes_stats_and_method_noise() {
    let dir = setup();
    let d = dir.path();
    ok(&pnlm(
        d,
        &[
            "add-noise",
            "clean.pgm",
            "--sigma",
            "30",
            "--seed",
            "2",
            "--out",
            "noisy.pgm",
        ],
    ));
    ok(&pnlm(
        d,
        &[
            "denoise",
            "noisy.pgm",
            "--sigma",
            "30",
            "--reject",
            "upper",
            "--alpha",
            "0.999",
            "--out",
            "den.pgm",
            "--stats-out",
            "stats.json",
            "--method-noise-out",
            "mn.pgm",
        ],
    ));
    let text = fs::read_to_string(d.join("stats.json")).unwrap();
    let keys: Vec<usize> = [
        "\"pixels\"",
        "\"candidates_total\"",
        "\"candidates_rejected\"",
        "\"seconds\"",
    ]
    .iter()
    .map(|k| text.find(k).unwrap())
    .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]), "{text}");
    let stats: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(stats.as_object().unwrap().len(), 4);
    assert_eq!(stats["pixels"], 64 * 48);
    assert_eq!(stats["candidates_total"], 64 * 48 * 21 * 21);
    assert!(stats["candidates_rejected"].as_u64().unwrap() > 0);
    let den = load_pgm(d.join("den.pgm")).unwrap();
    let mn = load_pgm(d.join("mn.pgm")).unwrap();
    assert_eq!((den.width(), den.height()), (64, 48));
    assert_eq!((mn.width(), mn.height()), (64, 48));
}

#[test]
fn reject_with_classic_weights_is_rejected() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &[
            "denoise",
            "clean.pgm",
            "--method",
            "nlm-median",
            "--sigma",
            "10",
            "--reject",
            "two-sided",
            "--out",
            "x.pgm",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("needs probabilistic weights"),
        "{}",
        stderr(&out)
    );
    assert!(!dir.path().join("x.pgm").exists());
}

#[test]
fn sigma_and_estimate_are_exclusive() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &[
            "denoise",
            "clean.pgm",
            "--sigma",
            "10",
            "--estimate-sigma",
            "--out",
            "x.pgm",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = pnlm(dir.path(), &["denoise", "clean.pgm", "--out", "x.pgm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn even_patch_side_is_usage_error() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &[
            "denoise",
            "clean.pgm",
            "--sigma",
            "10",
            "--patch",
            "4",
            "--out",
            "x.pgm",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_errors() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &[
            "--json-errors",
            "denoise",
            "clean.pgm",
            "--method",
            "nlm-mean",
            "--sigma",
            "10",
            "--reject",
            "upper",
            "--out",
            "x.pgm",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"]["kind"], "usage");
    assert_eq!(v["error"]["code"], 2);

    let out = pnlm(
        dir.path(),
        &["--json-errors", "add-noise", "clean.pgm", "--out", "x.pgm"],
    );
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"]["kind"], "usage");

    let out = pnlm(
        dir.path(),
        &[
            "--json-errors",
            "metrics",
            "--reference",
            "a.pgm",
            "--test",
            "b.pgm",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"]["kind"], "runtime");
}

#[test]
fn bad_thread_count() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_pnlm"))
        .args(["metrics", "--reference", "clean.pgm", "--test", "clean.pgm"])
        .current_dir(dir.path())
        .env("PNLM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_of_identical_images() {
    let dir = setup();
    let s = ok(&pnlm(
        dir.path(),
        &["metrics", "--reference", "clean.pgm", "--test", "clean.pgm"],
    ));
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert!(v["psnr"].is_null());
    assert_eq!(v["ssim"], 1.0);
}

#[test]
fn validate_outputs_and_headers() {
    let dir = setup();
    let d = dir.path();
    ok(&pnlm(
        d,
        &[
            "validate",
            "--patch-sides",
            "3",
            "--search-sides",
            "7",
            "--samples",
            "5000",
            "--seed",
            "1",
            "--out-dir",
            "v",
            "--histograms",
        ],
    ));
    let v = d.join("v");
    assert_eq!(
        first_line(&v.join("variance_map_p3_s7.csv")),
        "dy,dx,variance"
    );
    assert_eq!(
        first_line(&v.join("distribution_p3_s7.csv")),
        "dy,dx,overlap,variance,gamma,eta"
    );
    assert_eq!(
        first_line(&v.join("gof_reports.csv")),
        "patch_side,search_side,dy,dx,n_samples,statistic,p_value,sample_mean,sample_variance"
    );
    assert_eq!(first_line(&v.join("table1.csv")), "patch_side,search_7");
    assert_eq!(
        first_line(&v.join("histogram_p3_dy0_dx1.csv")),
        "bin_lo,bin_hi,count,density,theoretical"
    );

    let map = fs::read_to_string(v.join("variance_map_p3_s7.csv")).unwrap();
    let mut values: Vec<u64> = map
        .lines()
        .skip(1)
        .filter_map(|l| l.rsplit(',').next().unwrap().parse().ok())
        .collect();
    assert_eq!(values.len(), 48);
    assert!(map.lines().any(|l| l == "0,0,"));
    values.sort_unstable();
    values.dedup();
    assert_eq!(values, [18, 19, 20, 21, 22, 24]);

    let gof = fs::read_to_string(v.join("gof_reports.csv")).unwrap();
    assert_eq!(gof.lines().count(), 5);
}

#[test]
fn validate_with_too_few_samples() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &[
            "validate",
            "--patch-sides",
            "3",
            "--search-sides",
            "7",
            "--samples",
            "100",
            "--out-dir",
            "v",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("insufficient samples"));
}

#[test]
fn validate_is_reproducible() {
    let dir = setup();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(&pnlm(
            d,
            &[
                "validate",
                "--patch-sides",
                "3,5",
                "--search-sides",
                "7,11",
                "--samples",
                "3000",
                "--seed",
                "4",
                "--out-dir",
                out,
            ],
        ));
    }
    for f in ["gof_reports.csv", "table1.csv"] {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn benchmark_outputs_are_deterministic() {
    let dir = setup();
    let d = dir.path();
    let args = |out: &'static str| {
        vec![
            "benchmark",
            "--images",
            "checker:48x48:12:64:192,clean.pgm",
            "--sigmas",
            "30,50",
            "--methods",
            "nlm-mean,pnlm-median",
            "--realizations",
            "1",
            "--base-seed",
            "3",
            "--patch",
            "3",
            "--search",
            "7",
            "--out-dir",
            out,
        ]
    };
    ok(&pnlm(d, &args("a")));
    ok(&pnlm(d, &args("b")));
    for f in [
        "benchmark_psnr.csv",
        "benchmark_ssim.csv",
        "benchmark_runs.csv",
    ] {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap()
        );
    }
    let a = d.join("a");
    assert_eq!(
        first_line(&a.join("benchmark_psnr.csv")),
        "image,method,sigma_30,sigma_50"
    );
    assert_eq!(
        first_line(&a.join("benchmark_ssim.csv")),
        "image,method,sigma_30,sigma_50"
    );
    assert_eq!(
        first_line(&a.join("benchmark_runs.csv")),
        "image,sigma,method,realization,seed,psnr,ssim"
    );
    let psnr = fs::read_to_string(a.join("benchmark_psnr.csv")).unwrap();
    let rows: Vec<&str> = psnr.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("checker:48x48:12:64:192,nlm-mean,"));
    assert!(rows[3].starts_with("clean.pgm,pnlm-median,"));
}

#[test]
fn benchmark_from_spec_file() {
    let dir = setup();
    let d = dir.path();
    fs::write(
        d.join("spec.json"),
        r#"{"images": ["clean.pgm"], "sigmas": [25], "methods": ["pnlm-mean"],
            "realizations": 2, "base_seed": 100, "patch_side": 3, "search_side": 5}"#,
    )
    .unwrap();
    ok(&pnlm(
        d,
        &["benchmark", "--spec", "spec.json", "--out-dir", "o"],
    ));
    let runs = fs::read_to_string(d.join("o/benchmark_runs.csv")).unwrap();
    let seeds: Vec<&str> = runs
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap())
        .collect();
    assert_eq!(seeds, ["100", "101"]);
}

#[test]
fn benchmark_lists_missing_images() {
    let dir = setup();
    let out = pnlm(
        dir.path(),
        &[
            "benchmark",
            "--images",
            "gone1.pgm,clean.pgm,gone2.pgm",
            "--sigmas",
            "20",
            "--out-dir",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("gone1.pgm") && err.contains("gone2.pgm"),
        "{err}"
    );
    assert!(!err.contains("clean.pgm"));
}

#[test]
fn benchmark_rejects_bad_specs() {
    let dir = setup();
    for extra in [["--realizations", "0"], ["--images", "checker:12x:4:0:255"]] {
        let mut args = vec!["benchmark", "--images", "clean.pgm", "--out-dir", "o"];
        args.extend(extra);
        assert_eq!(pnlm(dir.path(), &args).status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = setup();
    let d = dir.path();
    ok(&pnlm(
        d,
        &[
            "add-noise",
            "clean.pgm",
            "--sigma",
            "35",
            "--seed",
            "3",
            "--out",
            "noisy.pgm",
        ],
    ));
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_pnlm"))
            .args([
                "denoise",
                "noisy.pgm",
                "--method",
                "pnlm-median",
                "--sigma",
                "35",
            ])
            .args(["--reject", "upper", "--out", &format!("t{threads}.pgm")])
            .current_dir(d)
            .env("PNLM_THREADS", threads)
            .output()
            .unwrap();
        ok(&out);
    }
    assert_eq!(
        fs::read(d.join("t1.pgm")).unwrap(),
        fs::read(d.join("t4.pgm")).unwrap()
    );
}
