//! Sequential stopping rules and the one-shot mixture likelihood ratio test.
//!
//! The three CuSum variants share [`CusumState`] and differ only in the
//! per-batch increment. The efficient test tracks a pooled type over an
//! adaptive window and scores it with the exponent gap.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::exponent::GapSolver;
use crate::mixture::{
    bayesian_log_ratio, generalized_log_ratio, type_class_distribution, EmpiricalType, LogLikelihoodRatio,
    MixtureScratch, MAX_TYPE_CLASSES,
};
use crate::model::{NetworkModel, ObservationBatch, Regime};

// ---------------------------------------------------------------------------
// CuSum recursion
// ---------------------------------------------------------------------------

/// State of `W[t] = max(W[t-1], 0) + increment`, stopping once `W >= b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumState {
    pub statistic: f64,
    pub time: u64,
    pub threshold_b: f64,
    pub stopped: bool,
    pub stop_time: Option<u64>,
}

impl CusumState {
    pub fn new(threshold_b: f64) -> Self {
        Self { statistic: 0.0, time: 0, threshold_b, stopped: false, stop_time: None }
    }

    /// Advance one step in place.
    pub fn step(&mut self, increment: LogLikelihoodRatio) -> Result<()> {
        if self.stopped {
            return Err(Error::AlreadyStopped(self.stop_time.unwrap_or(self.time)));
        }
        if increment.value.is_nan() {
            return Err(Error::InvalidArgument("NaN increment".into()));
        }
        // max(-inf, 0) is 0, so a -inf statistic recovers on the next step
        self.statistic = self.statistic.max(0.0) + increment.value;
        self.time += 1;
        if self.statistic >= self.threshold_b {
            self.stopped = true;
            self.stop_time = Some(self.time);
        }
        Ok(())
    }
}

/// One CuSum update returning the new state.
pub fn cusum_step(state: &CusumState, increment: LogLikelihoodRatio) -> Result<CusumState> {
    let mut next = *state;
    next.step(increment)?;
    Ok(next)
}

// ---------------------------------------------------------------------------
// Detector interface
// ---------------------------------------------------------------------------

/// A stopping rule fed one batch per time step.
pub trait SequentialDetector: Send {
    fn kind(&self) -> DetectorKind;
    /// Processes the next batch and returns the updated statistic.
    fn update(&mut self, batch: &ObservationBatch) -> Result<f64>;
    fn statistic(&self) -> f64;
    fn threshold(&self) -> f64;
    fn time(&self) -> u64;
    fn stopped(&self) -> bool;
    fn stop_time(&self) -> Option<u64>;
    /// Current change-point estimate, for rules that keep one.
    fn change_estimate(&self) -> Option<u64> {
        None
    }
    /// Back to the state before the first update, keeping allocations.
    fn reset(&mut self);
}

/// The four stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Mixture,
    Bayesian,
    Generalized,
    Efficient,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] =
        [DetectorKind::Mixture, DetectorKind::Bayesian, DetectorKind::Generalized, DetectorKind::Efficient];

    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Mixture => "mixture",
            DetectorKind::Bayesian => "bayesian",
            DetectorKind::Generalized => "generalized",
            DetectorKind::Efficient => "efficient",
        }
    }

    pub fn build(&self, model: &NetworkModel, threshold_b: f64) -> Result<Box<dyn SequentialDetector>> {
        Ok(match self {
            DetectorKind::Mixture => Box::new(make_mixture_cusum(model, threshold_b)?),
            DetectorKind::Bayesian => Box::new(make_bayesian_cusum(model, threshold_b)?),
            DetectorKind::Generalized => Box::new(make_generalized_cusum(model, threshold_b)?),
            DetectorKind::Efficient => Box::new(EfficientDetector::new(model, threshold_b)?),
        })
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown detector `{s}`")))
    }
}

fn check_threshold(b: f64) -> Result<()> {
    if b > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("threshold {b} must be positive")))
    }
}

fn at_time(time: u64) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtTime { time, source: Box::new(e) }
}

// ---------------------------------------------------------------------------
// CuSum detectors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Increment {
    Mixture(Box<MixtureScratch>),
    Bayesian,
    Generalized,
}

/// CuSum on one of the per-batch log-likelihood ratios.
#[derive(Debug, Clone)]
pub struct CusumDetector {
    model: NetworkModel,
    increment: Increment,
    state: CusumState,
}

impl CusumDetector {
    pub fn state(&self) -> &CusumState {
        &self.state
    }

    /// Per-batch log-likelihood ratio used as the increment.
    pub fn increment(&mut self, batch: &ObservationBatch) -> Result<LogLikelihoodRatio> {
        match &mut self.increment {
            Increment::Mixture(scratch) => scratch.log_ratio(&self.model, batch),
            Increment::Bayesian => bayesian_log_ratio(&self.model, batch),
            Increment::Generalized => generalized_log_ratio(&self.model, batch),
        }
    }
}

/// CuSum driven by the mixture likelihood ratio.
pub fn make_mixture_cusum(model: &NetworkModel, threshold_b: f64) -> Result<CusumDetector> {
    check_threshold(threshold_b)?;
    Ok(CusumDetector {
        model: model.clone(),
        increment: Increment::Mixture(Box::new(MixtureScratch::new(model.group_sizes()))),
        state: CusumState::new(threshold_b),
    })
}

/// CuSum driven by the Bayesian (i.i.d. mixture) ratio.
pub fn make_bayesian_cusum(model: &NetworkModel, threshold_b: f64) -> Result<CusumDetector> {
    check_threshold(threshold_b)?;
    Ok(CusumDetector { model: model.clone(), increment: Increment::Bayesian, state: CusumState::new(threshold_b) })
}

/// CuSum driven by the generalized (maximized over labelings) ratio.
pub fn make_generalized_cusum(model: &NetworkModel, threshold_b: f64) -> Result<CusumDetector> {
    check_threshold(threshold_b)?;
    Ok(CusumDetector { model: model.clone(), increment: Increment::Generalized, state: CusumState::new(threshold_b) })
}

impl SequentialDetector for CusumDetector {
    fn kind(&self) -> DetectorKind {
        match self.increment {
            Increment::Mixture(_) => DetectorKind::Mixture,
            Increment::Bayesian => DetectorKind::Bayesian,
            Increment::Generalized => DetectorKind::Generalized,
        }
    }

    fn update(&mut self, batch: &ObservationBatch) -> Result<f64> {
        if self.state.stopped {
            return Err(Error::AlreadyStopped(self.state.time));
        }
        let t = self.state.time + 1;
        let inc = self.increment(batch).map_err(at_time(t))?;
        self.state.step(inc)?;
        Ok(self.state.statistic)
    }

    fn statistic(&self) -> f64 {
        self.state.statistic
    }

    fn threshold(&self) -> f64 {
        self.state.threshold_b
    }

    fn time(&self) -> u64 {
        self.state.time
    }

    fn stopped(&self) -> bool {
        self.state.stopped
    }

    fn stop_time(&self) -> Option<u64> {
        self.state.stop_time
    }

    fn reset(&mut self) {
        self.state = CusumState::new(self.state.threshold_b);
    }
}

// ---------------------------------------------------------------------------
// Efficient test
// ---------------------------------------------------------------------------

/// Shared memo of exponent gaps keyed by the pooled type reduced by the gcd
/// of its counts. Entries are computed from a cold start, so lookups return
/// exactly what a fresh computation would.
#[derive(Debug, Clone, Default)]
pub struct GapCache {
    inner: Arc<Mutex<HashMap<Vec<u32>, f64>>>,
    capacity: usize,
}

impl GapCache {
    pub fn new(capacity: usize) -> Self {
        Self { inner: Arc::default(), capacity }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &[u32]) -> Option<f64> {
        self.inner.lock().ok()?.get(key).copied()
    }

    fn insert(&self, key: Vec<u32>, value: f64) {
        if let Ok(mut m) = self.inner.lock() {
            if m.len() < self.capacity {
                m.insert(key, value);
            }
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn reduced_key(counts: &[u32]) -> Vec<u32> {
    let g = counts.iter().fold(0, |g, &c| gcd(g, c)).max(1);
    counts.iter().map(|c| c / g).collect()
}

/// Recursion state of the efficient test.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficientState {
    pub nu_hat: u64,
    pub window_counts: EmpiricalType,
    pub t_hat: u64,
    pub statistic: f64,
    pub threshold_b: f64,
    pub time: u64,
    pub stopped: bool,
    pub stop_time: Option<u64>,
}

impl EfficientState {
    pub fn new(alphabet_size: usize, threshold_b: f64) -> Self {
        Self {
            nu_hat: 0,
            window_counts: EmpiricalType::empty(alphabet_size),
            t_hat: 0,
            statistic: 0.0,
            threshold_b,
            time: 0,
            stopped: false,
            stop_time: None,
        }
    }
}

/// The efficient test: `W = t_hat * n * (f_{P_0}(alpha, Pi) - f_{P_1}(alpha, Pi))`
/// on the pooled type `Pi` since the last non-positive statistic.
#[derive(Debug, Clone)]
pub struct EfficientDetector {
    model: NetworkModel,
    state: EfficientState,
    solver: GapSolver,
    cache: Option<GapCache>,
}

impl EfficientDetector {
    pub fn new(model: &NetworkModel, threshold_b: f64) -> Result<Self> {
        check_threshold(threshold_b)?;
        let a = model
            .alphabet_size()
            .ok_or(Error::UnsupportedKind("the efficient test requires a discrete model"))?;
        Ok(Self { model: model.clone(), state: EfficientState::new(a, threshold_b), solver: GapSolver::new(), cache: None })
    }

    /// Share a gap memo with other detectors on the same model.
    pub fn with_cache(mut self, cache: GapCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn state(&self) -> &EfficientState {
        &self.state
    }

    fn gap(&mut self, grew: bool) -> Result<f64> {
        let counts = self.state.window_counts.counts();
        if let Some(cache) = &self.cache {
            let key = reduced_key(counts);
            if let Some(v) = cache.get(&key) {
                return Ok(v);
            }
            let q = self.state.window_counts.normalized();
            let v = GapSolver::cold().solve(&self.model, &q)?.gap();
            cache.insert(key, v);
            return Ok(v);
        }
        if !grew {
            self.solver.reset();
        }
        let q = self.state.window_counts.normalized();
        Ok(self.solver.solve(&self.model, &q)?.gap())
    }

    /// One step of the recursion.
    pub fn step(&mut self, batch: &ObservationBatch) -> Result<()> {
        if self.state.stopped {
            return Err(Error::AlreadyStopped(self.state.stop_time.unwrap_or(self.state.time)));
        }
        let t = self.state.time + 1;
        let symbols = batch
            .symbols()
            .ok_or_else(|| Error::InvalidBatch("the efficient test needs discrete samples".into()))
            .map_err(at_time(t))?;
        if symbols.len() != self.model.n() {
            return Err(at_time(t)(Error::InvalidBatch(format!(
                "batch has {} samples, model has {} sensors",
                symbols.len(),
                self.model.n()
            ))));
        }
        let grew = self.state.statistic > 0.0;
        let mut window = if grew {
            self.state.window_counts.clone()
        } else {
            EmpiricalType::empty(self.state.window_counts.alphabet_size())
        };
        window.add_symbols(symbols).map_err(at_time(t))?;
        let previous = std::mem::replace(&mut self.state.window_counts, window);
        if !grew {
            self.state.nu_hat = t;
        }
        let gap = match self.gap(grew) {
            Ok(g) => g,
            Err(e) => {
                self.state.window_counts = previous;
                return Err(at_time(t)(e));
            }
        };
        self.state.time = t;
        self.state.t_hat = t - self.state.nu_hat + 1;
        let scale = (self.state.t_hat * self.model.n() as u64) as f64;
        self.state.statistic = scale * gap;
        if self.state.statistic >= self.state.threshold_b {
            self.state.stopped = true;
            self.state.stop_time = Some(t);
        }
        Ok(())
    }
}

impl SequentialDetector for EfficientDetector {
    fn kind(&self) -> DetectorKind {
        DetectorKind::Efficient
    }

    fn update(&mut self, batch: &ObservationBatch) -> Result<f64> {
        self.step(batch)?;
        Ok(self.state.statistic)
    }

    fn statistic(&self) -> f64 {
        self.state.statistic
    }

    fn threshold(&self) -> f64 {
        self.state.threshold_b
    }

    fn time(&self) -> u64 {
        self.state.time
    }

    fn stopped(&self) -> bool {
        self.state.stopped
    }

    fn stop_time(&self) -> Option<u64> {
        self.state.stop_time
    }

    fn change_estimate(&self) -> Option<u64> {
        (self.state.time > 0).then_some(self.state.nu_hat)
    }

    fn reset(&mut self) {
        self.state = EfficientState::new(self.state.window_counts.alphabet_size(), self.state.threshold_b);
        self.solver.reset();
    }
}

// ---------------------------------------------------------------------------
// Mixture likelihood ratio test
// ---------------------------------------------------------------------------

/// Log-domain tolerance for declaring `ell = eta`.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Outcome of the randomized mixture likelihood ratio test on one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlrtDecision {
    pub reject_probability: f64,
    pub log_ratio: f64,
    pub threshold_eta: f64,
    pub beta: f64,
}

impl MlrtDecision {
    /// Resolve the randomization with a caller-supplied uniform draw.
    pub fn rejects(&self, uniform: f64) -> bool {
        uniform < self.reject_probability
    }
}

/// Reject with probability 1 above `eta`, `beta` at `eta`, 0 below.
pub fn mlrt_decide(model: &NetworkModel, batch: &ObservationBatch, eta: f64, beta: f64) -> Result<MlrtDecision> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold eta = {eta} must be positive")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("randomization beta = {beta} outside [0, 1]")));
    }
    let ratio = MixtureScratch::new(model.group_sizes()).log_ratio(model, batch)?;
    Ok(decide(ratio.value, eta, beta))
}

fn decide(log_ratio: f64, eta: f64, beta: f64) -> MlrtDecision {
    let ln_eta = eta.ln();
    let reject_probability = if log_ratio > ln_eta + TIE_TOLERANCE {
        1.0
    } else if log_ratio >= ln_eta - TIE_TOLERANCE {
        beta
    } else {
        0.0
    };
    MlrtDecision { reject_probability, log_ratio, threshold_eta: eta, beta }
}

/// Exact false-alarm and miss probabilities `(P_F, P_M)` of the test on a
/// discrete model, summing over every batch type.
pub fn mlrt_error_probabilities(model: &NetworkModel, eta: f64, beta: f64) -> Result<(f64, f64)> {
    let pre = type_class_distribution(model, Regime::Pre, MAX_TYPE_CLASSES)?;
    let post: HashMap<Vec<u32>, f64> = type_class_distribution(model, Regime::Post, MAX_TYPE_CLASSES)?.into_iter().collect();
    let pre_map: HashMap<Vec<u32>, f64> = pre.iter().cloned().collect();
    let mut keys: Vec<&Vec<u32>> = pre_map.keys().chain(post.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut scratch = MixtureScratch::new(model.group_sizes());
    let mut p_false = crate::numeric::CompensatedSum::default();
    let mut p_miss = crate::numeric::CompensatedSum::default();
    for counts in keys {
        let symbols: Vec<usize> = counts.iter().enumerate().flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize)).collect();
        let batch = ObservationBatch::discrete(1, symbols);
        let d = decide(scratch.log_ratio(model, &batch)?.value, eta, beta);
        if let Some(lp) = pre_map.get(counts) {
            p_false.add(lp.exp() * d.reject_probability);
        }
        if let Some(lp) = post.get(counts) {
            p_miss.add(lp.exp() * (1.0 - d.reject_probability));
        }
    }
    Ok((p_false.value(), p_miss.value()))
}
