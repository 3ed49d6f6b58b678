//! Criterion benchmarks for the denoising kernel and the distribution
//! machinery, plus the acceptance checks.
//!
//! `cargo bench -p pnlm-perf` runs the benchmarks and
//! `cargo test -p pnlm-perf --test acceptance` runs the checks.
