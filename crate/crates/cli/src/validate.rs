use std::fs;
use std::path::Path;

use anyhow::Context;
use pnlm_core::stats::DiffDistribution;
use pnlm_core::validation::{
    derive_seed, histogram, most_correlated_offsets, sample_patch_difference, table1_run,
    variance_map, GofReport, Table1, MIN_EXPECTED_PER_BIN,
};
use pnlm_core::{build_distribution_table, PatchGeometry};

use crate::args::ValidateArgs;
use crate::commands::geometry_from_sides;
use crate::{usage, CliError, CliResult};

const HISTOGRAM_TAG: u64 = 0x4849_5354;

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::Runtime)
}

fn finish(mut w: csv::Writer<fs::File>) -> CliResult {
    w.flush().map_err(CliError::from)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(e.into())
}

pub fn write_variance_map(geometry: &PatchGeometry, path: &Path) -> CliResult {
    let s = geometry.search_radius as i32;
    let mut w = csv_writer(path)?;
    w.write_record(["dy", "dx", "variance"]).map_err(csv_err)?;
    for (i, row) in variance_map(geometry).iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let dy = i as i32 - s;
            let dx = j as i32 - s;
            let v = v.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([dy.to_string(), dx.to_string(), v])
                .map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn write_distribution_table(geometry: &PatchGeometry, path: &Path) -> CliResult {
    let mut w = csv_writer(path)?;
    w.write_record(["dy", "dx", "overlap", "variance", "gamma", "eta"])
        .map_err(csv_err)?;
    for (o, d) in build_distribution_table(geometry).iter() {
        w.write_record([
            o.dy.to_string(),
            o.dx.to_string(),
            d.overlap.to_string(),
            d.variance.to_string(),
            d.gamma.to_string(),
            d.eta.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_gof_reports(reports: &[GofReport], path: &Path) -> CliResult {
    let mut w = csv_writer(path)?;
    w.write_record([
        "patch_side",
        "search_side",
        "dy",
        "dx",
        "n_samples",
        "statistic",
        "p_value",
        "sample_mean",
        "sample_variance",
    ])
    .map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.geometry.patch_side().to_string(),
            r.geometry.search_side().to_string(),
            r.offset.dy.to_string(),
            r.offset.dx.to_string(),
            r.n_samples.to_string(),
            r.statistic.to_string(),
            r.p_value.to_string(),
            r.sample_mean.to_string(),
            r.sample_variance.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_table1(table: &Table1, path: &Path) -> CliResult {
    let mut w = csv_writer(path)?;
    let mut header = vec!["patch_side".to_owned()];
    header.extend(table.search_sides.iter().map(|s| format!("search_{s}")));
    w.write_record(&header).map_err(csv_err)?;
    for (p, row) in table.patch_sides.iter().zip(&table.cells) {
        let mut rec = vec![p.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

fn write_histograms(args: &ValidateArgs, out_dir: &Path) -> CliResult {
    for &p in &args.patch_sides {
        let geometry = geometry_from_sides(p, args.search_sides[0])?;
        for o in most_correlated_offsets(&geometry)? {
            let dist = DiffDistribution::for_offset(o, &geometry)?;
            let seed = derive_seed(args.seed, &[HISTOGRAM_TAG, p as u64]);
            let samples = sample_patch_difference(o, &geometry, args.samples, seed)?;
            let h = histogram(&samples, &dist, args.histogram_bins)?;
            let path = out_dir.join(format!("histogram_p{p}_dy{}_dx{}.csv", o.dy, o.dx));
            let mut w = csv_writer(&path)?;
            w.write_record(["bin_lo", "bin_hi", "count", "density", "theoretical"])
                .map_err(csv_err)?;
            for i in 0..h.counts.len() {
                w.write_record([
                    h.edges[i].to_string(),
                    h.edges[i + 1].to_string(),
                    h.counts[i].to_string(),
                    h.density[i].to_string(),
                    h.theoretical[i].to_string(),
                ])
                .map_err(csv_err)?;
            }
            finish(w)?;
        }
    }
    Ok(())
}

pub fn run(args: &ValidateArgs) -> CliResult {
    if args.patch_sides.is_empty() || args.search_sides.is_empty() {
        return usage("--patch-sides and --search-sides must be nonempty");
    }
    if args.bins < 5 {
        return usage(format!("--bins must be at least 5, got {}", args.bins));
    }
    let expected = args.samples as f64 / args.bins as f64;
    if expected < MIN_EXPECTED_PER_BIN {
        return usage(format!(
            "insufficient samples for a {}-bin goodness-of-fit test: {} samples give {expected} \
             expected per bin, need at least {MIN_EXPECTED_PER_BIN}",
            args.bins, args.samples
        ));
    }
    if args.histograms && args.histogram_bins == 0 {
        return usage("--histogram-bins must be positive");
    }
    let mut geometries = Vec::new();
    for &p in &args.patch_sides {
        for &s in &args.search_sides {
            let g = geometry_from_sides(p, s)?;
            most_correlated_offsets(&g).or_else(|e| usage(e.to_string()))?;
            geometries.push(g);
        }
    }
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    for g in &geometries {
        let (p, s) = (g.patch_side(), g.search_side());
        write_variance_map(g, &args.out_dir.join(format!("variance_map_p{p}_s{s}.csv")))?;
        write_distribution_table(g, &args.out_dir.join(format!("distribution_p{p}_s{s}.csv")))?;
    }

    let table = table1_run(
        &args.patch_sides,
        &args.search_sides,
        args.samples,
        args.seed,
        args.bins,
    )?;
    write_gof_reports(&table.reports, &args.out_dir.join("gof_reports.csv"))?;
    write_table1(&table, &args.out_dir.join("table1.csv"))?;
    if args.histograms {
        write_histograms(args, &args.out_dir)?;
    }

    let mut header = "patch".to_owned();
    for s in &table.search_sides {
        header.push_str(&format!("  s={s:<6}"));
    }
    println!("{header}");
    for (p, row) in table.patch_sides.iter().zip(&table.cells) {
        let mut line = format!("{p:<5}");
        for v in row {
            line.push_str(&format!("  {v:<8.4}"));
        }
        println!("{line}");
    }
    Ok(())
}
