//! Monte Carlo estimation of detection delay and false-alarm run length,
//! threshold sweeps, and per-step timing.
//!
//! Every replication draws its samples and labelings from streams derived
//! from `(master_seed, replication)`, so results do not depend on how the
//! replications are scheduled across threads.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::detectors::{DetectorKind, EfficientDetector, GapCache, SequentialDetector};
use crate::error::{Error, Result};
use crate::model::{generate_batch, ChangeScenario, LabelSchedule, NetworkModel, ObservationBatch, Regime};
use crate::rng::{derive_seed, stream, StreamRole};

/// Builds a fresh detector for a threshold.
pub trait DetectorFactory: Sync {
    fn name(&self) -> String;
    fn build(&self, model: &NetworkModel, threshold_b: f64) -> Result<Box<dyn SequentialDetector>>;
}

impl DetectorFactory for DetectorKind {
    fn name(&self) -> String {
        DetectorKind::name(self).to_string()
    }

    fn build(&self, model: &NetworkModel, threshold_b: f64) -> Result<Box<dyn SequentialDetector>> {
        DetectorKind::build(self, model, threshold_b)
    }
}

/// Efficient test sharing one gap memo across all replications.
#[derive(Debug, Clone)]
pub struct CachedEfficient {
    pub cache: GapCache,
}

impl CachedEfficient {
    pub fn new(capacity: usize) -> Self {
        Self { cache: GapCache::new(capacity) }
    }
}

impl DetectorFactory for CachedEfficient {
    fn name(&self) -> String {
        DetectorKind::Efficient.name().to_string()
    }

    fn build(&self, model: &NetworkModel, threshold_b: f64) -> Result<Box<dyn SequentialDetector>> {
        Ok(Box::new(EfficientDetector::new(model, threshold_b)?.with_cache(self.cache.clone())))
    }
}

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub detector: String,
    pub threshold_b: f64,
    pub replication: u64,
    /// Seed of the sample stream of this replication.
    pub seed: u64,
    pub change_point: Option<u64>,
    /// Stop time, or the horizon when censored.
    pub stop_time: u64,
    pub censored: bool,
    /// `(stop - nu)^+` for runs with a change point that stopped.
    pub delay: Option<u64>,
}

/// Shared settings of a batch of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub schedule: LabelSchedule,
    pub master_seed: u64,
    pub reps: usize,
    pub horizon: u64,
}

/// One replication under `scenario`.
pub fn run_replication(
    model: &NetworkModel,
    factory: &dyn DetectorFactory,
    threshold_b: f64,
    scenario: &ChangeScenario,
    schedule: &LabelSchedule,
    master_seed: u64,
    replication: u64,
) -> Result<RunRecord> {
    let seed = derive_seed(master_seed, replication, StreamRole::Samples);
    let mut rng = stream(master_seed, replication, StreamRole::Samples);
    let mut sched = schedule
        .reseeded(derive_seed(master_seed, replication, StreamRole::Schedule))
        .start(model)?;
    let mut det = factory.build(model, threshold_b)?;
    let mut stop = None;
    for t in 1..=scenario.horizon() {
        let batch = generate_batch(model, &mut sched, scenario.regime_at(t), &mut rng);
        det.update(&batch)?;
        if det.stopped() {
            stop = Some(t);
            break;
        }
    }
    let nu = scenario.change_point();
    let delay = match (stop, nu) {
        (Some(s), Some(v)) => Some(s.saturating_sub(v)),
        _ => None,
    };
    Ok(RunRecord {
        detector: factory.name(),
        threshold_b,
        replication,
        seed,
        change_point: nu,
        stop_time: stop.unwrap_or(scenario.horizon()),
        censored: stop.is_none(),
        delay,
    })
}

/// All replications of a plan, ordered by replication index.
pub fn simulate_runs(
    model: &NetworkModel,
    factory: &dyn DetectorFactory,
    threshold_b: f64,
    scenario: &ChangeScenario,
    plan: &RunPlan,
) -> Result<Vec<RunRecord>> {
    (0..plan.reps as u64)
        .into_par_iter()
        .map(|r| run_replication(model, factory, threshold_b, scenario, &plan.schedule, plan.master_seed, r))
        .collect()
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    pub censored: usize,
}

impl Estimate {
    pub fn censored_fraction(&self) -> f64 {
        if self.reps == 0 {
            0.0
        } else {
            self.censored as f64 / self.reps as f64
        }
    }
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Share of censored runs that triggers a warning.
pub const CENSOR_WARN: f64 = 0.01;
/// Share of censored runs that makes a delay estimate an error.
pub const CENSOR_FAIL: f64 = 0.05;

/// Detection delay with the change at the first step, from fresh detector
/// state. Censored runs count as a delay of `horizon - 1`.
pub fn wadd_from_records(records: &[RunRecord]) -> Result<Estimate> {
    if records.is_empty() {
        return Err(Error::NoRuns);
    }
    let censored = records.iter().filter(|r| r.censored).count();
    let frac = censored as f64 / records.len() as f64;
    if frac > CENSOR_FAIL {
        return Err(Error::HorizonTooSmall { censored, reps: records.len() });
    }
    if frac > CENSOR_WARN {
        log::warn!("{censored} of {} delay runs censored; the horizon is short", records.len());
    }
    let delays: Vec<f64> = records
        .iter()
        .map(|r| r.delay.unwrap_or(r.stop_time.saturating_sub(r.change_point.unwrap_or(1))) as f64)
        .collect();
    let (mean, stderr) = mean_stderr(&delays);
    Ok(Estimate { mean, stderr, reps: records.len(), censored })
}

/// Mean run length without a change; censored runs count as the horizon, so
/// the mean is a lower bound whenever anything was censored.
pub fn warl_from_records(records: &[RunRecord]) -> Result<Estimate> {
    if records.is_empty() {
        return Err(Error::NoRuns);
    }
    let censored = records.iter().filter(|r| r.censored).count();
    let lengths: Vec<f64> = records.iter().map(|r| r.stop_time as f64).collect();
    let (mean, stderr) = mean_stderr(&lengths);
    Ok(Estimate { mean, stderr, reps: records.len(), censored })
}

/// Minimum replications for the delay estimator.
pub const MIN_WADD_REPS: usize = 100;

pub fn estimate_wadd(
    model: &NetworkModel,
    factory: &dyn DetectorFactory,
    threshold_b: f64,
    plan: &RunPlan,
) -> Result<Estimate> {
    if plan.reps < MIN_WADD_REPS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_WADD_REPS} replications")));
    }
    let scenario = ChangeScenario::new(Some(1), plan.horizon)?;
    wadd_from_records(&simulate_runs(model, factory, threshold_b, &scenario, plan)?)
}

/// Run-length estimate with the mean of completed runs alongside the
/// censoring-aware lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarlEstimate {
    pub lower_bound: Estimate,
    /// Mean over runs that stopped before the horizon.
    pub completed_mean: Option<f64>,
}

pub fn estimate_warl(
    model: &NetworkModel,
    factory: &dyn DetectorFactory,
    threshold_b: f64,
    plan: &RunPlan,
) -> Result<WarlEstimate> {
    let scenario = ChangeScenario::new(None, plan.horizon)?;
    let records = simulate_runs(model, factory, threshold_b, &scenario, plan)?;
    let lower_bound = warl_from_records(&records)?;
    let done: Vec<f64> = records.iter().filter(|r| !r.censored).map(|r| r.stop_time as f64).collect();
    let completed_mean = (!done.is_empty()).then(|| done.iter().sum::<f64>() / done.len() as f64);
    Ok(WarlEstimate { lower_bound, completed_mean })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub b: f64,
    pub warl: f64,
    pub warl_se: f64,
    pub wadd: f64,
    pub wadd_se: f64,
    pub reps: usize,
    /// Censored runs across both estimators.
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub detector: String,
    pub rows: Vec<SweepRow>,
}

/// Settings of a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub schedule: LabelSchedule,
    pub master_seed: u64,
    pub reps: usize,
    pub warl_horizon: u64,
    pub wadd_horizon: u64,
}

/// WARL and WADD at each threshold, one result per detector.
pub fn tradeoff_sweep(
    model: &NetworkModel,
    detectors: &[&dyn DetectorFactory],
    b_grid: &[f64],
    plan: &SweepPlan,
) -> Result<Vec<SweepResult>> {
    if b_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("threshold grid must be strictly ascending".into()));
    }
    let mut out = Vec::with_capacity(detectors.len());
    for det in detectors {
        let mut rows = Vec::with_capacity(b_grid.len());
        for (i, &b) in b_grid.iter().enumerate() {
            // distinct streams per grid point and estimator
            let seed = derive_seed(plan.master_seed, i as u64, StreamRole::Other(0));
            let warl_plan = RunPlan {
                schedule: plan.schedule.clone(),
                master_seed: seed,
                reps: plan.reps,
                horizon: plan.warl_horizon,
            };
            let wadd_plan = RunPlan {
                master_seed: derive_seed(seed, 0, StreamRole::Other(1)),
                horizon: plan.wadd_horizon,
                ..warl_plan.clone()
            };
            let warl = estimate_warl(model, *det, b, &warl_plan)?.lower_bound;
            let wadd = estimate_wadd(model, *det, b, &wadd_plan)?;
            rows.push(SweepRow {
                b,
                warl: warl.mean,
                warl_se: warl.stderr,
                wadd: wadd.mean,
                wadd_se: wadd.stderr,
                reps: plan.reps,
                censored: warl.censored + wadd.censored,
            });
        }
        out.push(SweepResult { detector: det.name(), rows });
    }
    Ok(out)
}

/// Threshold at which the estimated run length hits `target`, by a secant
/// search on `ln WARL` against `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSearch {
    pub b: f64,
    pub warl: Estimate,
    pub evaluations: usize,
}

/// Replications per evaluation in the coarse phase of the threshold search.
const PILOT_REPS: usize = 200;
/// Log-tolerance of the coarse phase.
const PILOT_LOG_TOLERANCE: f64 = 0.15;

pub fn find_threshold_for_warl(
    model: &NetworkModel,
    factory: &dyn DetectorFactory,
    target: f64,
    initial_b: f64,
    plan: &RunPlan,
    log_tolerance: f64,
    max_evaluations: usize,
) -> Result<ThresholdSearch> {
    if !(target > 1.0) || !(initial_b > 0.0) {
        return Err(Error::InvalidArgument("need target > 1 and a positive starting threshold".into()));
    }
    if plan.reps == 0 || max_evaluations == 0 {
        return Err(Error::InvalidArgument("need at least one replication and one evaluation".into()));
    }
    let mut evaluations = 0;
    let mut b = initial_b;
    // a cheap coarse search first, so far-off thresholds are not paid for
    // at full replication count
    if plan.reps > PILOT_REPS && max_evaluations > 1 {
        let horizon = plan.horizon.min((20.0 * target).ceil() as u64).max(1);
        let pilot = RunPlan { reps: PILOT_REPS, horizon, ..plan.clone() };
        let coarse = secant_search(
            model,
            factory,
            target,
            b,
            &pilot,
            log_tolerance.max(PILOT_LOG_TOLERANCE),
            max_evaluations - 1,
            &mut evaluations,
        )?;
        b = coarse.0;
    }
    let remaining = max_evaluations - evaluations;
    let (b, warl) = secant_search(model, factory, target, b, plan, log_tolerance, remaining, &mut evaluations)?;
    Ok(ThresholdSearch { b, warl, evaluations })
}

/// Secant iteration on `ln WARL(b) = ln target`; returns the best point seen.
#[allow(clippy::too_many_arguments)]
fn secant_search(
    model: &NetworkModel,
    factory: &dyn DetectorFactory,
    target: f64,
    initial_b: f64,
    plan: &RunPlan,
    log_tolerance: f64,
    max_evaluations: usize,
    evaluations: &mut usize,
) -> Result<(f64, Estimate)> {
    let ln_target = target.ln();
    let mut eval = |b: f64| -> Result<Estimate> {
        let p = RunPlan { master_seed: derive_seed(plan.master_seed, *evaluations as u64, StreamRole::Pilot), ..plan.clone() };
        *evaluations += 1;
        Ok(estimate_warl(model, factory, b, &p)?.lower_bound)
    };
    let err = |e: &Estimate| (e.mean.ln() - ln_target).abs();
    let mut b0 = initial_b;
    let mut e0 = eval(b0)?;
    let mut best = (b0, e0);
    if err(&e0) <= log_tolerance || max_evaluations == 1 {
        return Ok(best);
    }
    // first move assumes ln WARL grows about one-for-one with b
    let mut b1 = (b0 + ln_target - e0.mean.ln()).max(0.5 * b0);
    for _ in 1..max_evaluations {
        let e1 = eval(b1)?;
        if err(&e1) < err(&best.1) {
            best = (b1, e1);
        }
        if err(&e1) <= log_tolerance {
            break;
        }
        let slope = (e1.mean.ln() - e0.mean.ln()) / (b1 - b0);
        let step = if slope.is_finite() && slope > 0.05 {
            (ln_target - e1.mean.ln()) / slope
        } else {
            ln_target - e1.mean.ln()
        };
        let next = (b1 + step.clamp(-0.5 * b1.abs().max(1.0), 0.5 * b1.abs().max(1.0) + 2.0)).max(0.5 * b1);
        b0 = b1;
        e0 = e1;
        b1 = next;
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub detector: String,
    pub median_ns: f64,
    pub p90_ns: f64,
}

/// Settings of the step-time benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchPlan {
    pub warmup_steps: usize,
    pub block_steps: usize,
    pub blocks: usize,
    pub seed: u64,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self { warmup_steps: 50, block_steps: 50, blocks: 21, seed: 1 }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn time_detector(det: &mut dyn SequentialDetector, batches: &[ObservationBatch], plan: &BenchPlan) -> Result<(f64, f64)> {
    let (warm, rest) = batches.split_at(plan.warmup_steps);
    for b in warm {
        det.update(b)?;
    }
    let mut per_step = Vec::with_capacity(plan.blocks);
    for block in rest.chunks(plan.block_steps) {
        let start = Instant::now();
        for b in block {
            det.update(b)?;
        }
        per_step.push(start.elapsed().as_nanos() as f64 / block.len() as f64);
    }
    per_step.sort_by(f64::total_cmp);
    Ok((quantile(&per_step, 0.5), quantile(&per_step, 0.9)))
}

/// Median and 90th percentile wall-clock time of one statistic update, for
/// the mixture CuSum and the efficient test on each model, fed a post-change
/// stream.
pub fn benchmark_step_time(models: &[NetworkModel], plan: &BenchPlan) -> Result<Vec<BenchRow>> {
    if plan.blocks == 0 || plan.block_steps == 0 {
        return Err(Error::InvalidArgument("benchmark needs at least one block of one step".into()));
    }
    let mut rows = Vec::new();
    for (i, model) in models.iter().enumerate() {
        if model.alphabet_size().is_none() {
            return Err(Error::UnsupportedKind("benchmarks run on discrete models"));
        }
        let steps = plan.warmup_steps + plan.blocks * plan.block_steps;
        let mut rng = stream(plan.seed, i as u64, StreamRole::Samples);
        let mut sched = LabelSchedule::uniform(derive_seed(plan.seed, i as u64, StreamRole::Schedule)).start(model)?;
        let batches: Vec<ObservationBatch> =
            (0..steps).map(|_| generate_batch(model, &mut sched, Regime::Post, &mut rng)).collect();
        for kind in [DetectorKind::Mixture, DetectorKind::Efficient] {
            let mut det = kind.build(model, f64::INFINITY)?;
            let (median_ns, p90_ns) = time_detector(det.as_mut(), &batches, plan)?;
            rows.push(BenchRow { n: model.n(), detector: kind.name().to_string(), median_ns, p90_ns });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RUNS_HEADER: &str = "detector,b,seed,nu,stop_time,censored,delay";
pub const SWEEP_HEADER: &str = "detector,b,warl,warl_se,wadd,wadd_se,reps,censored";
pub const BENCH_HEADER: &str = "n,detector,median_ns,p90_ns";

pub fn write_runs_csv<W: Write>(mut w: W, records: &[RunRecord]) -> io::Result<()> {
    writeln!(w, "{RUNS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.detector,
            fmt_f64(r.threshold_b),
            r.seed,
            opt(r.change_point),
            r.stop_time,
            r.censored,
            opt(r.delay)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, results: &[SweepResult]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for res in results {
        for r in &res.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                res.detector,
                fmt_f64(r.b),
                fmt_f64(r.warl),
                fmt_f64(r.warl_se),
                fmt_f64(r.wadd),
                fmt_f64(r.wadd_se),
                r.reps,
                r.censored
            )?;
        }
    }
    Ok(())
}

pub fn write_bench_csv<W: Write>(mut w: W, rows: &[BenchRow]) -> io::Result<()> {
    writeln!(w, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.n, r.detector, fmt_f64(r.median_ns), fmt_f64(r.p90_ns))?;
    }
    Ok(())
}
