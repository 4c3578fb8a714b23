//! Experiment pipelines behind the CLI subcommands. Each writes its CSVs into
//! the configured output directory and returns a printable summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::nn::noise_sweep;
use crate::perf::{compare, estimate_components, max_clock, network_time, power_report, tile_filter_time};
use crate::report::{self, Table};
use crate::resources::{feasibility, KERNEL_BREAKDOWN};
use crate::seed;
use crate::tensor::{FeatureMap, FilterBank};
use crate::winograd::{conv2d_direct, make_plan, misprinted_f4x3, winograd_conv2d, WinogradPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Every assertion the command makes held.
    pub passed: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn write_tables(dir: &Path, tables: &[(&str, Table)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    tables
        .iter()
        .map(|(name, t)| {
            let path = dir.join(name);
            t.write(&path)?;
            Ok(path)
        })
        .collect()
}

/// One randomized equivalence case.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvCase {
    pub trial: usize,
    pub seed: u64,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub filters: usize,
    pub max_error: f64,
}

fn conv_case(plan: &WinogradPlan, cfg: &Config, trial: usize, case_seed: u64) -> Result<ConvCase> {
    let cc = &cfg.conv_check;
    let mut rng = seed::rng(case_seed);
    let r = plan.r();
    let channels = rng.random_range(1..=cc.max_channels);
    let height = rng.random_range(r..=cc.max_extent.max(r));
    let width = rng.random_range(r..=cc.max_extent.max(r));
    let filters = rng.random_range(1..=cc.max_filters);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let x = FeatureMap::from_vec(channels, height, width, draw(channels * height * width))?;
    let f = FilterBank::from_vec(filters, channels, r, draw(filters * channels * r * r))?;
    let err = winograd_conv2d(&x, &f, plan)?.max_abs_diff(&conv2d_direct(&x, &f)?);
    Ok(ConvCase {
        trial,
        seed: case_seed,
        channels,
        height,
        width,
        filters,
        max_error: if err.is_nan() { f64::INFINITY } else { err },
    })
}

/// Randomized Winograd-vs-direct equivalence for every plan. With
/// `inject_misprinted`, F(4x4, 3x3) uses the mistranscribed matrices.
pub fn cmd_conv_check(cfg: &Config, trials: Option<usize>, inject_misprinted: bool) -> Result<Outcome> {
    let trials = trials.unwrap_or(cfg.conv_check.trials);
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let tol = cfg.conv_check.tolerance;
    let plans = [
        ("F(2x2,3x3)", make_plan(2, 3)?),
        (
            if inject_misprinted { "F(4x4,3x3) misprinted" } else { "F(4x4,3x3)" },
            if inject_misprinted { misprinted_f4x3() } else { make_plan(4, 3)? },
        ),
    ];
    let mut summary_t = Table::new(&["plan", "trials", "max_error", "tolerance", "pass"]);
    let mut failures = Table::new(&["plan", "trial", "seed", "channels", "height", "width", "filters", "max_error"]);
    let mut text = String::new();
    let mut passed = true;
    for (p, (name, plan)) in plans.iter().enumerate() {
        let cases = (0..trials)
            .into_par_iter()
            .map(|t| conv_case(plan, cfg, t, seed::derive(cfg.seed, &[p as u64, t as u64])))
            .collect::<Result<Vec<_>>>()?;
        let worst = cases.iter().map(|c| c.max_error).fold(0.0, f64::max);
        let ok = worst < tol;
        passed &= ok;
        summary_t.push(vec![
            name.to_string(),
            trials.to_string(),
            worst.to_string(),
            tol.to_string(),
            ok.to_string(),
        ]);
        let _ = writeln!(
            text,
            "{name}: max_err = {worst:e} {} {tol:e} over {trials} trials",
            if ok { "<" } else { ">=" }
        );
        let bad: Vec<&ConvCase> = cases.iter().filter(|c| !(c.max_error < tol)).collect();
        if let Some(first) = bad.first() {
            let _ = writeln!(
                text,
                "  {} failing trials; first: trial {} seed {} input {}x{}x{} filters {} error {:e}",
                bad.len(),
                first.trial,
                first.seed,
                first.channels,
                first.height,
                first.width,
                first.filters,
                first.max_error
            );
        }
        for c in bad {
            failures.push(vec![
                name.to_string(),
                c.trial.to_string(),
                c.seed.to_string(),
                c.channels.to_string(),
                c.height.to_string(),
                c.width.to_string(),
                c.filters.to_string(),
                c.max_error.to_string(),
            ]);
        }
    }
    let files = write_tables(
        &cfg.out_path(),
        &[("conv_check.csv", summary_t), ("conv_check_failures.csv", failures)],
    )?;
    Ok(Outcome {
        passed,
        summary: text,
        files,
    })
}

/// Per-layer and total timing plus throughput under every convention.
pub fn cmd_perf(cfg: &Config, clock_hz: Option<f64>) -> Result<Outcome> {
    let mut timing = cfg.timing.clone();
    if let Some(f) = clock_hz {
        timing.clock_hz = f;
    }
    timing.validate_fields()?;
    let layers = cfg.load_layers()?;
    let report = network_time(&layers, &timing)?;

    let mut text = String::new();
    if !timing.clock_within_limit() {
        let _ = writeln!(
            text,
            "warning: clock {} Hz exceeds the slowest-stage limit of {} Hz",
            timing.clock_hz,
            max_clock(&timing)
        );
    }
    let _ = writeln!(
        text,
        "clock {} Hz, T_tile_filter {} s, {} layers, total {} cycles, {} s",
        timing.clock_hz,
        tile_filter_time(timing.clock_hz)?,
        report.layers.len(),
        report.total_cycles,
        report.total_time_s
    );
    for r in &report.throughput {
        let _ = writeln!(
            text,
            "F({m}x{m},{k}x{k}) {}: {} GOP/s per path, {} GOP/s over {} paths",
            r.convention,
            r.gops_per_path,
            r.gops_total,
            timing.parallel_paths,
            m = r.m,
            k = r.r
        );
    }
    let files = write_tables(
        &cfg.out_path(),
        &[
            ("perf_layers.csv", report::timing_table(&report)),
            ("perf_throughput.csv", report::throughput_table(&report)),
        ],
    )?;
    Ok(Outcome {
        passed: true,
        summary: text,
        files,
    })
}

/// Full-system and core-only power and efficiency, plus baseline ratios.
pub fn cmd_power(cfg: &Config, clock_hz: Option<f64>) -> Result<Outcome> {
    let mut timing = cfg.timing.clone();
    if let Some(f) = clock_hz {
        timing.clock_hz = f;
    }
    timing.validate_fields()?;
    let layers = cfg.load_layers()?;
    let report = network_time(&layers, &timing)?;
    let plan = layers[0].plan()?;
    let table = match &cfg.power {
        Some(t) => t.clone(),
        None => estimate_components(&cfg.device, &timing, &plan),
    };
    let power = power_report(&table, &timing, &report, &plan, cfg.convention)?;
    let comparisons = compare(&power, &cfg.baselines)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "throughput {} GOP/s ({} convention)\nfull: {} W, {} GOP/s/W\ncore: {} W, {} GOP/s/W",
        power.throughput_gops,
        power.convention,
        power.total_full_w,
        power.efficiency_full,
        power.total_core_w,
        power.efficiency_core
    );
    for c in &comparisons {
        let _ = writeln!(
            text,
            "vs {}: speed x{}, efficiency x{} (full) x{} (core) [{}]",
            c.baseline.name,
            c.speed_ratio,
            c.efficiency_ratio_full,
            c.efficiency_ratio_core,
            c.baseline.source_note
        );
    }
    let files = write_tables(
        &cfg.out_path(),
        &[
            ("power_components.csv", report::power_components_table(&power)),
            ("power_summary.csv", report::power_summary_table(&power)),
            ("power_baselines.csv", report::comparison_table(&comparisons)),
        ],
    )?;
    Ok(Outcome {
        passed: true,
        summary: text,
        files,
    })
}

/// Train-noise x inference-noise sweep. With `assert_crossover`, passes only
/// if the lowest positive training-noise model beats the noise-free one at
/// the highest inference level.
pub fn cmd_noise_sweep(cfg: &Config, repeats: Option<usize>, assert_crossover: bool) -> Result<Outcome> {
    let mut sweep = cfg.noise.clone();
    if let Some(r) = repeats {
        sweep.repeats = r;
    }
    let data = cfg.load_dataset()?;
    let result = noise_sweep(&data, &sweep, cfg.seed)?;

    let mut text = String::new();
    for t in &result.trained {
        let _ = writeln!(text, "train noise {}: clean test accuracy {}", t.train_noise, t.clean_accuracy);
    }
    for c in &result.cells {
        let _ = writeln!(
            text,
            "  train {} infer {}: {} +/- {}",
            c.train_noise, c.infer_noise, c.eval.mean, c.eval.std
        );
    }
    let mut passed = true;
    if assert_crossover {
        let robust = sweep
            .train_grid
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !sweep.train_grid.contains(&0.0) || !robust.is_finite() {
            return Err(Error::Config(
                "crossover check needs 0 and a positive level in noise.train_grid".into(),
            ));
        }
        passed = result.crossover(0.0, robust) == Some(true);
        let _ = writeln!(
            text,
            "crossover (train {robust} beats train 0 at the highest inference level): {}",
            if passed { "observed" } else { "not observed" }
        );
    }
    let files = write_tables(
        &cfg.out_path(),
        &[
            ("noise_sweep.csv", report::sweep_table(&result)),
            ("noise_summary.csv", report::sweep_summary_table(&result)),
            ("noise_training.csv", report::training_table(&result)),
            ("noise_split.csv", report::split_table(&result)),
        ],
    )?;
    Ok(Outcome {
        passed,
        summary: text,
        files,
    })
}

/// Channel, ring, connection, dynamic-range and memristor-area feasibility.
pub fn cmd_resources(cfg: &Config) -> Result<Outcome> {
    let layers = cfg.load_layers()?;
    let report = feasibility(
        &layers,
        &cfg.device,
        cfg.timing.parallel_paths,
        cfg.resources.cell_edge_m,
        cfg.resources.reference_weight_count,
    )?;

    let mut text = String::from("kernel size breakdown (% of filters): 1x1, 3x3, small 1D, 5x5\n");
    for (name, a, b, c, d) in KERNEL_BREAKDOWN {
        let _ = writeln!(text, "  {name}: {a}, {b}, {c}, {d}");
    }
    let infeasible: Vec<&str> = report
        .layers
        .iter()
        .filter(|l| !l.feasible())
        .map(|l| l.name.as_str())
        .collect();
    if infeasible.is_empty() {
        let _ = writeln!(text, "all {} layers feasible", report.layers.len());
    } else {
        let _ = writeln!(
            text,
            "{} of {} layers infeasible: {}",
            infeasible.len(),
            report.layers.len(),
            infeasible.join(", ")
        );
    }
    for l in report.layers.iter().filter(|l| l.channel_batching > 1) {
        let _ = writeln!(text, "  {}: channel batching x{}", l.name, l.channel_batching);
    }
    let _ = writeln!(
        text,
        "memristor cells {} ({} cm^2 at {} m edge)",
        report.total_memristor_cells, report.total_memristor_area_cm2, cfg.resources.cell_edge_m
    );
    let _ = writeln!(text, "note: {}", report.area_note);

    let dir = cfg.out_path();
    let mut files = write_tables(&dir, &[("resources.csv", report::resources_table(&report))])?;
    let summary_path = dir.join("resources_summary.txt");
    std::fs::write(&summary_path, &text).map_err(|e| Error::io(&summary_path, e))?;
    files.push(summary_path);
    Ok(Outcome {
        passed: true,
        summary: text,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> Config {
        Config {
            out_dir: dir.to_path_buf(),
            ..Config::default()
        }
    }

    #[test]
    fn conv_check_small() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        cfg.conv_check.max_extent = 12;
        let out = cmd_conv_check(&cfg, Some(20), false).unwrap();
        assert!(out.passed, "{}", out.summary);
        let bad = cmd_conv_check(&cfg, Some(20), true).unwrap();
        assert!(!bad.passed);
        assert!(bad.summary.contains("first: trial"));
        assert!(cmd_conv_check(&cfg, Some(0), false).is_err());
    }

    #[test]
    fn perf_clock_override() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_perf(&config(dir.path()), Some(10e9)).unwrap();
        assert!(out.summary.contains("T_tile_filter 0.0000000001 s"), "{}", out.summary);
        assert!(out.summary.contains("warning"));
    }

    #[test]
    fn resources_vgg() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_resources(&config(dir.path())).unwrap();
        assert!(out.summary.contains("conv5_3: channel batching x11"), "{}", out.summary);
        assert!(out.summary.contains("less than 0.25 cm²"));
    }
}
