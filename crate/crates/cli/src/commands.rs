use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anonqcd::exponent::{calibrate_threshold_with_h, compute_h, CalibrationResult};
use anonqcd::model::{generate_batch, ChangeScenario};
use anonqcd::montecarlo::{
    benchmark_step_time, fmt_f64, tradeoff_sweep, write_bench_csv, write_sweep_csv, CachedEfficient, DetectorFactory,
    SweepPlan,
};
use anonqcd::rng::{stream, StreamRole};
use anonqcd::{DetectorKind, NetworkModel};

use crate::config::{ExperimentConfig, Threshold};
use crate::error::CliError;
use crate::plot::{Chart, Series};

pub const TRAJECTORY_HEADER: &str = "t,statistic,nu_hat,stopped";

/// Memo capacity for the efficient test in sweeps.
const GAP_CACHE_CAPACITY: usize = 1 << 20;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn calibrate(model: &NetworkModel, gamma: f64, resolution: f64) -> Result<CalibrationResult, CliError> {
    let a = model
        .alphabet_size()
        .ok_or(anonqcd::Error::UnsupportedKind("calibration requires a discrete model"))?;
    let h = compute_h(model, resolution)?;
    let mut cal = calibrate_threshold_with_h(model.group_sizes(), a, h.h, gamma)?;
    cal.conservative_flag |= h.conservative;
    Ok(cal)
}

/// Threshold for one detector. `auto` uses the calibrated bound for the
/// efficient test and `ln gamma` for the mixture CuSum.
pub fn resolve_threshold(cfg: &ExperimentConfig, kind: DetectorKind) -> Result<f64, CliError> {
    match cfg.threshold {
        None => Err(CliError::Config("missing `threshold`".into())),
        Some(Threshold::Fixed(b)) => Ok(b),
        Some(Threshold::Auto { gamma, resolution }) => match kind {
            DetectorKind::Efficient => Ok(calibrate(&cfg.model, gamma, resolution)?.threshold_b),
            DetectorKind::Mixture => Ok(gamma.ln()),
            other => Err(CliError::Config(format!("no run-length bound for `{other}`; give a numeric threshold"))),
        },
    }
}

// ---------------------------------------------------------------------------
// path
// ---------------------------------------------------------------------------

pub fn cmd_path(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let [kind] = cfg.detectors[..] else {
        return Err(CliError::Config(format!("`path` needs exactly one detector, got {}", cfg.detectors.len())));
    };
    let b = resolve_threshold(cfg, kind)?;
    let scenario = ChangeScenario::new(cfg.change_point, cfg.horizon)?;
    let mut rng = stream(cfg.seed, 0, StreamRole::Samples);
    let mut sched = cfg.schedule.start(&cfg.model)?;
    let mut det = kind.build(&cfg.model, b)?;

    fs::create_dir_all(&cfg.out)?;
    let traj = cfg.out.join("trajectory.csv");
    let mut w = create(&traj)?;
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for t in 1..=scenario.horizon() {
        let batch = generate_batch(&cfg.model, &mut sched, scenario.regime_at(t), &mut rng);
        let stat = det.update(&batch)?;
        let nu = det.change_estimate().map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{t},{},{nu},{}", fmt_f64(stat), u8::from(det.stopped()))?;
        if det.stopped() {
            break;
        }
    }
    w.flush()?;

    let meta = cfg.out.join("path_meta.csv");
    let mut m = create(&meta)?;
    writeln!(m, "key,value")?;
    writeln!(m, "title,{}", cfg.title.replace(',', " "))?;
    writeln!(m, "detector,{kind}")?;
    writeln!(m, "b,{}", fmt_f64(b))?;
    writeln!(m, "change_point,{}", cfg.change_point.map(|c| c.to_string()).unwrap_or_else(|| "none".into()))?;
    m.flush()?;

    let svg = cfg.out.join("path.svg");
    fs::write(&svg, path_svg(&traj, &meta)?)?;
    Ok(vec![traj, meta, svg])
}

/// Statistic against time with the threshold and change point, read back
/// from the path CSV files.
pub fn path_svg(trajectory: &Path, meta: &Path) -> Result<String, CliError> {
    let mut rdr = csv::Reader::from_path(meta)?;
    let mut title = String::new();
    let mut detector = String::new();
    let mut b = f64::NAN;
    let mut change = None;
    for rec in rdr.records() {
        let rec = rec?;
        match (&rec[0], &rec[1]) {
            ("title", v) => title = v.to_string(),
            ("detector", v) => detector = v.to_string(),
            ("b", v) => b = v.parse().unwrap_or(f64::NAN),
            ("change_point", v) => change = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    let mut points = Vec::new();
    let mut stop = None;
    for rec in csv::Reader::from_path(trajectory)?.records() {
        let rec = rec?;
        let t: f64 = rec[0].parse().unwrap_or(f64::NAN);
        // floor -inf statistics for display
        let s: f64 = rec[1].parse().unwrap_or(f64::NAN);
        points.push((t, if s == f64::NEG_INFINITY { 0.0 } else { s }));
        if &rec[3] == "1" {
            stop = Some(t);
        }
    }
    let mut vlines: Vec<(f64, String)> = change.into_iter().map(|c| (c, "change".to_string())).collect();
    vlines.extend(stop.map(|s| (s, "alarm".to_string())));
    let chart = Chart {
        title,
        subtitle: format!("{detector} statistic, b = {b:.3}"),
        x_label: "t".into(),
        y_label: "statistic".into(),
        series: vec![Series { name: detector, points }],
        vlines,
        hlines: if b.is_finite() { vec![(b, "b".into())] } else { Vec::new() },
    };
    Ok(chart.to_svg())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let cached = CachedEfficient::new(GAP_CACHE_CAPACITY);
    let factories: Vec<&dyn DetectorFactory> = cfg
        .detectors
        .iter()
        .map(|k| match k {
            DetectorKind::Efficient => &cached as &dyn DetectorFactory,
            other => other as &dyn DetectorFactory,
        })
        .collect();
    let plan = SweepPlan {
        schedule: cfg.schedule.clone(),
        master_seed: cfg.seed,
        reps: cfg.sweep.reps,
        warl_horizon: cfg.sweep.warl_horizon,
        wadd_horizon: cfg.sweep.wadd_horizon,
    };
    let results = tradeoff_sweep(&cfg.model, &factories, &cfg.sweep.b_grid, &plan)?;
    fs::create_dir_all(&cfg.out)?;
    let csv_path = cfg.out.join("sweep.csv");
    let mut w = create(&csv_path)?;
    write_sweep_csv(&mut w, &results)?;
    w.flush()?;
    let svg = cfg.out.join("sweep.svg");
    fs::write(&svg, sweep_svg(&csv_path, &cfg.title)?)?;
    Ok(vec![csv_path, svg])
}

/// Groups `(x, y)` pairs by the CSV column `key`, keeping first-seen order.
fn series_by(path: &Path, key: usize, point: impl Fn(&csv::StringRecord) -> (f64, f64)) -> Result<Vec<Series>, CliError> {
    let mut out: Vec<Series> = Vec::new();
    for rec in csv::Reader::from_path(path)?.records() {
        let rec = rec?;
        let p = point(&rec);
        match out.iter_mut().find(|s| s.name == rec[key]) {
            Some(s) => s.points.push(p),
            None => out.push(Series { name: rec[key].to_string(), points: vec![p] }),
        }
    }
    Ok(out)
}

/// WADD against log10 WARL, one line per detector.
pub fn sweep_svg(csv_path: &Path, title: &str) -> Result<String, CliError> {
    let num = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
    let series = series_by(csv_path, 0, |r| (num(&r[2]).log10(), num(&r[4])))?;
    let chart = Chart {
        title: title.to_string(),
        subtitle: "WARL axis is log10; censored runs count at the horizon".into(),
        x_label: "log10 WARL".into(),
        y_label: "WADD".into(),
        series,
        ..Chart::default()
    };
    Ok(chart.to_svg())
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

pub fn cmd_calibrate(cfg: &ExperimentConfig) -> Result<(CalibrationResult, Vec<PathBuf>), CliError> {
    let Some(Threshold::Auto { gamma, resolution }) = cfg.threshold else {
        return Err(CliError::Config("`calibrate` needs `threshold = auto` and `threshold.gamma`".into()));
    };
    let cal = calibrate(&cfg.model, gamma, resolution)?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("calibration.csv");
    let mut w = create(&path)?;
    writeln!(w, "gamma,b,h,guaranteed_warl,conservative")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        fmt_f64(gamma),
        fmt_f64(cal.threshold_b),
        fmt_f64(cal.h),
        fmt_f64(cal.guaranteed_warl),
        cal.conservative_flag
    )?;
    w.flush()?;
    Ok((cal, vec![path]))
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

pub fn cmd_bench(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let rows = benchmark_step_time(&cfg.bench.models, &cfg.bench.plan)?;
    fs::create_dir_all(&cfg.out)?;
    let csv_path = cfg.out.join("bench.csv");
    let mut w = create(&csv_path)?;
    write_bench_csv(&mut w, &rows)?;
    w.flush()?;
    let svg = cfg.out.join("bench.svg");
    fs::write(&svg, bench_svg(&csv_path, &cfg.title)?)?;
    Ok(vec![csv_path, svg])
}

/// log10 of the median step time against n, one line per detector.
pub fn bench_svg(csv_path: &Path, title: &str) -> Result<String, CliError> {
    let num = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
    let series = series_by(csv_path, 1, |r| (num(&r[0]), num(&r[2]).log10()))?;
    let chart = Chart {
        title: title.to_string(),
        subtitle: "median wall-clock time of one statistic update".into(),
        x_label: "n".into(),
        y_label: "log10 ns per step".into(),
        series,
        ..Chart::default()
    };
    Ok(chart.to_svg())
}
