//! Group laws, network configuration, label schedules and synthetic batches.
//!
//! A network has `K` groups; group `k` holds `n_k` sensors whose samples follow
//! `p_{0,k}` before the change and `p_{1,k}` after it. At every time step the
//! fusion center receives the `n = sum n_k` samples without their labels, so a
//! batch is stored in canonical sorted order. Group indices are 0-based.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Accepted deviation of a mass vector's total from one before renormalizing.
const MASS_SUM_TOLERANCE: f64 = 1e-9;

/// Max-norm distance below which two mixtures are considered equal.
pub const IDENTIFIABILITY_TOLERANCE: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// Probability mass function over the alphabet `0..alphabet_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from masses. Masses must be finite, nonnegative and
    /// sum to one within `1e-9`; they are renormalized so the stored total is one
    /// to rounding.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("mass {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}, not 1")));
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p / total).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        // the last supported symbol closes the cdf exactly
        if let Some(last) = probs.iter().rposition(|&p| p > 0.0) {
            for c in &mut cdf[last..] {
                *c = 1.0;
            }
        }
        Ok(Self { probs, cdf })
    }

    pub fn point_mass(alphabet_size: usize, symbol: usize) -> Result<Self> {
        if symbol >= alphabet_size {
            return Err(Error::InvalidDistribution(format!(
                "symbol {symbol} outside alphabet of size {alphabet_size}"
            )));
        }
        let mut probs = vec![0.0; alphabet_size];
        probs[symbol] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(alphabet_size: usize) -> Result<Self> {
        Self::new(vec![1.0 / alphabet_size as f64; alphabet_size])
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self, symbol: usize) -> f64 {
        self.probs.get(symbol).copied().unwrap_or(0.0)
    }

    /// Natural log of the mass; `-inf` off the support.
    pub fn log_pmf(&self, symbol: usize) -> f64 {
        let p = self.pmf(symbol);
        if p > 0.0 {
            p.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn in_support(&self, symbol: usize) -> bool {
        self.pmf(symbol) > 0.0
    }

    /// Max-norm distance between two mass vectors on the same alphabet.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        // zero-mass symbols share their predecessor's cdf value and are never chosen
        self.cdf.partition_point(|&c| c <= u).min(self.probs.len() - 1)
    }
}

/// Binomial law `B(trials, success_prob)` on `0..=trials`.
pub fn binomial_pmf(trials: i64, success_prob: f64) -> Result<DiscreteDistribution> {
    if trials < 0 {
        return Err(Error::InvalidDistribution(format!("negative trial count {trials}")));
    }
    if !(0.0..=1.0).contains(&success_prob) {
        return Err(Error::InvalidDistribution(format!(
            "success probability {success_prob} outside [0, 1]"
        )));
    }
    let m = trials as usize;
    let q = 1.0 - success_prob;
    let mut coeff = 1.0_f64;
    let mut probs = Vec::with_capacity(m + 1);
    for j in 0..=m {
        if j > 0 {
            coeff = coeff * (m - j + 1) as f64 / j as f64;
        }
        probs.push(coeff * success_prob.powi(j as i32) * q.powi((m - j) as i32));
    }
    DiscreteDistribution::new(probs)
}

/// Normal law `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDistribution {
    mean: f64,
    variance: f64,
}

impl GaussianDistribution {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "gaussian needs finite mean and positive variance, got N({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (d * d / self.variance + (2.0 * std::f64::consts::PI * self.variance).ln())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.variance.sqrt() * z
    }
}

// ---------------------------------------------------------------------------
// Network model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Discrete,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupLaws {
    Discrete {
        alphabet_size: usize,
        pre: Vec<DiscreteDistribution>,
        post: Vec<DiscreteDistribution>,
    },
    Gaussian {
        pre: Vec<GaussianDistribution>,
        post: Vec<GaussianDistribution>,
    },
}

/// Group sizes plus per-group pre/post-change laws.
///
/// The weight of group `k` is the exact fraction `n_k / n`; [`alpha`](Self::alpha)
/// caches it as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    group_sizes: Vec<usize>,
    n: usize,
    alpha: Vec<f64>,
    laws: GroupLaws,
    // K x |X| log-mass tables, discrete models only
    log_pre: Vec<Vec<f64>>,
    log_post: Vec<Vec<f64>>,
}

impl NetworkModel {
    pub fn discrete(
        group_sizes: Vec<usize>,
        pre: Vec<DiscreteDistribution>,
        post: Vec<DiscreteDistribution>,
    ) -> Result<Self> {
        check_sizes(&group_sizes, pre.len(), post.len())?;
        let alphabet_size = pre[0].alphabet_size();
        if pre.iter().chain(&post).any(|d| d.alphabet_size() != alphabet_size) {
            return Err(Error::InvalidModel("all groups must share one alphabet".into()));
        }
        let log_table = |ds: &[DiscreteDistribution]| -> Vec<Vec<f64>> {
            ds.iter()
                .map(|d| (0..alphabet_size).map(|x| d.log_pmf(x)).collect())
                .collect()
        };
        let model = Self {
            n: group_sizes.iter().sum(),
            alpha: alpha_of(&group_sizes),
            log_pre: log_table(&pre),
            log_post: log_table(&post),
            group_sizes,
            laws: GroupLaws::Discrete { alphabet_size, pre, post },
        };
        let d = model
            .mixture_distribution(Regime::Pre)?
            .max_distance(&model.mixture_distribution(Regime::Post)?);
        if d <= IDENTIFIABILITY_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "pre- and post-change mixtures coincide (max distance {d:e})"
            )));
        }
        Ok(model)
    }

    pub fn gaussian(
        group_sizes: Vec<usize>,
        pre: Vec<GaussianDistribution>,
        post: Vec<GaussianDistribution>,
    ) -> Result<Self> {
        check_sizes(&group_sizes, pre.len(), post.len())?;
        let components = |ds: &[GaussianDistribution]| {
            let mut m: BTreeMap<(u64, u64), usize> = BTreeMap::new();
            for (d, &nk) in ds.iter().zip(&group_sizes) {
                *m.entry((d.mean.to_bits(), d.variance.to_bits())).or_default() += nk;
            }
            m
        };
        if components(&pre) == components(&post) {
            return Err(Error::InvalidModel("pre- and post-change mixtures coincide".into()));
        }
        Ok(Self {
            n: group_sizes.iter().sum(),
            alpha: alpha_of(&group_sizes),
            group_sizes,
            laws: GroupLaws::Gaussian { pre, post },
            log_pre: Vec::new(),
            log_post: Vec::new(),
        })
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Total number of sensors.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `alpha_k` as the exact fraction `(n_k, n)`.
    pub fn alpha_fraction(&self, k: usize) -> (usize, usize) {
        (self.group_sizes[k], self.n)
    }

    pub fn kind(&self) -> ModelKind {
        match self.laws {
            GroupLaws::Discrete { .. } => ModelKind::Discrete,
            GroupLaws::Gaussian { .. } => ModelKind::Gaussian,
        }
    }

    pub fn laws(&self) -> &GroupLaws {
        &self.laws
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match self.laws {
            GroupLaws::Discrete { alphabet_size, .. } => Some(alphabet_size),
            GroupLaws::Gaussian { .. } => None,
        }
    }

    pub fn discrete_laws(&self, regime: Regime) -> Result<&[DiscreteDistribution]> {
        match &self.laws {
            GroupLaws::Discrete { pre, post, .. } => Ok(match regime {
                Regime::Pre => pre,
                Regime::Post => post,
            }),
            GroupLaws::Gaussian { .. } => Err(Error::UnsupportedKind(
                "operation requires a discrete model",
            )),
        }
    }

    /// `sum_k alpha_k p_{regime,k}`, weighted by the exact fractions `n_k / n`.
    pub fn mixture_distribution(&self, regime: Regime) -> Result<DiscreteDistribution> {
        let laws = self.discrete_laws(regime)?;
        let size = laws[0].alphabet_size();
        let mut probs = vec![0.0; size];
        for (d, &nk) in laws.iter().zip(&self.group_sizes) {
            for (acc, p) in probs.iter_mut().zip(d.probs()) {
                *acc += nk as f64 * p;
            }
        }
        let total: f64 = probs.iter().sum();
        DiscreteDistribution::new(probs.into_iter().map(|p| p / total).collect())
    }

    /// Fills `out` (row-major `n x K`) with `log p_{regime,k}(x_i)`.
    pub fn log_likelihoods(
        &self,
        regime: Regime,
        batch: &ObservationBatch,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        if batch.len() != self.n {
            return Err(Error::InvalidBatch(format!(
                "batch has {} samples, model has {} sensors",
                batch.len(),
                self.n
            )));
        }
        out.clear();
        match (&self.laws, batch.samples()) {
            (GroupLaws::Discrete { alphabet_size, .. }, Samples::Discrete(xs)) => {
                let table = match regime {
                    Regime::Pre => &self.log_pre,
                    Regime::Post => &self.log_post,
                };
                for &x in xs {
                    if x >= *alphabet_size {
                        return Err(Error::InvalidBatch(format!(
                            "symbol {x} outside alphabet of size {alphabet_size}"
                        )));
                    }
                    out.extend(table.iter().map(|row| row[x]));
                }
            }
            (GroupLaws::Gaussian { pre, post }, Samples::Continuous(xs)) => {
                let laws = match regime {
                    Regime::Pre => pre,
                    Regime::Post => post,
                };
                for &x in xs {
                    if !x.is_finite() {
                        return Err(Error::InvalidBatch(format!("non-finite sample {x}")));
                    }
                    out.extend(laws.iter().map(|d| d.log_pdf(x)));
                }
            }
            _ => {
                return Err(Error::InvalidBatch(
                    "batch kind does not match model kind".into(),
                ))
            }
        }
        Ok(())
    }

    fn sample_group<R: RngCore + ?Sized>(&self, regime: Regime, k: usize, rng: &mut R) -> Sample {
        match &self.laws {
            GroupLaws::Discrete { pre, post, .. } => {
                let d = if regime == Regime::Pre { &pre[k] } else { &post[k] };
                Sample::Symbol(d.sample(rng))
            }
            GroupLaws::Gaussian { pre, post } => {
                let d = if regime == Regime::Pre { &pre[k] } else { &post[k] };
                Sample::Real(d.sample(rng))
            }
        }
    }
}

fn check_sizes(group_sizes: &[usize], pre: usize, post: usize) -> Result<()> {
    if group_sizes.is_empty() {
        return Err(Error::InvalidModel("at least one group is required".into()));
    }
    if group_sizes.contains(&0) {
        return Err(Error::InvalidModel("every group needs at least one sensor".into()));
    }
    if pre != group_sizes.len() || post != group_sizes.len() {
        return Err(Error::InvalidModel(format!(
            "{} groups but {pre} pre-change and {post} post-change laws",
            group_sizes.len()
        )));
    }
    Ok(())
}

fn alpha_of(group_sizes: &[usize]) -> Vec<f64> {
    let n: usize = group_sizes.iter().sum();
    group_sizes.iter().map(|&k| k as f64 / n as f64).collect()
}

// ---------------------------------------------------------------------------
// Labelings and schedules
// ---------------------------------------------------------------------------

/// Assignment of the `n` sample positions to groups respecting the group sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    assignment: Vec<usize>,
}

impl Labeling {
    pub fn new(assignment: Vec<usize>, group_sizes: &[usize]) -> Result<Self> {
        let mut counts = vec![0usize; group_sizes.len()];
        for &g in &assignment {
            if g >= group_sizes.len() {
                return Err(Error::InvalidArgument(format!("label {g} names no group")));
            }
            counts[g] += 1;
        }
        if counts != group_sizes {
            return Err(Error::InvalidArgument(format!(
                "labeling has group counts {counts:?}, expected {group_sizes:?}"
            )));
        }
        Ok(Self { assignment })
    }

    /// Groups in order: `n_1` zeros, then `n_2` ones, and so on.
    pub fn canonical(group_sizes: &[usize]) -> Self {
        let assignment = group_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &nk)| std::iter::repeat_n(k, nk))
            .collect();
        Self { assignment }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchedulePolicy {
    Fixed(Labeling),
    /// Uniform draw from all labelings at every step.
    UniformRandom,
    /// Canonical labeling rotated left by `step` positions per time step.
    CyclicRotation(usize),
}

/// Policy producing the labeling used at each time step.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSchedule {
    pub policy: SchedulePolicy,
    pub rng_seed: u64,
}

impl LabelSchedule {
    pub fn fixed(labeling: Labeling) -> Self {
        Self { policy: SchedulePolicy::Fixed(labeling), rng_seed: 0 }
    }

    pub fn uniform(rng_seed: u64) -> Self {
        Self { policy: SchedulePolicy::UniformRandom, rng_seed }
    }

    pub fn cyclic(step: usize) -> Self {
        Self { policy: SchedulePolicy::CyclicRotation(step), rng_seed: 0 }
    }

    /// Same policy with a different seed for the random policy.
    pub fn reseeded(&self, rng_seed: u64) -> Self {
        Self { policy: self.policy.clone(), rng_seed }
    }

    pub fn start(&self, model: &NetworkModel) -> Result<ScheduleState> {
        use rand::SeedableRng;
        let current = match &self.policy {
            SchedulePolicy::Fixed(l) => {
                Labeling::new(l.assignment.clone(), model.group_sizes())?.assignment
            }
            _ => Labeling::canonical(model.group_sizes()).assignment,
        };
        Ok(ScheduleState {
            policy: self.policy.clone(),
            current,
            rng: SimRng::seed_from_u64(self.rng_seed),
            steps: 0,
        })
    }
}

/// Running schedule; emits one labeling per time step.
#[derive(Debug, Clone)]
pub struct ScheduleState {
    policy: SchedulePolicy,
    current: Vec<usize>,
    rng: SimRng,
    steps: u64,
}

impl ScheduleState {
    /// Labeling for the next time step.
    pub fn advance(&mut self) -> &[usize] {
        match self.policy {
            SchedulePolicy::Fixed(_) => {}
            SchedulePolicy::UniformRandom => self.current.shuffle(&mut self.rng),
            SchedulePolicy::CyclicRotation(step) => {
                if self.steps > 0 && !self.current.is_empty() {
                    let s = step % self.current.len();
                    self.current.rotate_left(s);
                }
            }
        }
        self.steps += 1;
        &self.current
    }

    /// Number of labelings emitted so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Symbol(usize),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Discrete(Vec<usize>),
    Continuous(Vec<f64>),
}

/// The `n` unlabeled samples received at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    time: u64,
    samples: Samples,
}

impl ObservationBatch {
    /// Discrete batch; symbols are stored sorted.
    pub fn discrete(time: u64, mut symbols: Vec<usize>) -> Self {
        symbols.sort_unstable();
        Self { time, samples: Samples::Discrete(symbols) }
    }

    /// Real-valued batch; values are stored sorted.
    pub fn continuous(time: u64, mut values: Vec<f64>) -> Self {
        values.sort_unstable_by(f64::total_cmp);
        Self { time, samples: Samples::Continuous(values) }
    }

    /// Batch in the given order, without canonical sorting.
    pub fn unsorted(time: u64, samples: Samples) -> Self {
        Self { time, samples }
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn len(&self) -> usize {
        match &self.samples {
            Samples::Discrete(v) => v.len(),
            Samples::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbols(&self) -> Option<&[usize]> {
        match &self.samples {
            Samples::Discrete(v) => Some(v),
            Samples::Continuous(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.samples {
            Samples::Continuous(v) => Some(v),
            Samples::Discrete(_) => None,
        }
    }

    /// Same samples reordered by `perm` (a permutation of `0..len`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let samples = match &self.samples {
            Samples::Discrete(v) => Samples::Discrete(perm.iter().map(|&i| v[i]).collect()),
            Samples::Continuous(v) => Samples::Continuous(perm.iter().map(|&i| v[i]).collect()),
        };
        Self { time: self.time, samples }
    }
}

/// Change point `nu` (`None` = no change) and simulation horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChangeScenario {
    change_point: Option<u64>,
    horizon: u64,
}

impl ChangeScenario {
    pub fn new(change_point: Option<u64>, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if change_point == Some(0) {
            return Err(Error::InvalidArgument("change point must be at least 1".into()));
        }
        Ok(Self { change_point, horizon })
    }

    pub fn change_point(&self) -> Option<u64> {
        self.change_point
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn regime_at(&self, t: u64) -> Regime {
        match self.change_point {
            Some(nu) if t >= nu => Regime::Post,
            _ => Regime::Pre,
        }
    }
}

/// Draws one batch: sample `i` comes from `p_{regime, sigma_t(i)}`, then the
/// labels are dropped.
pub fn generate_batch<R: RngCore + ?Sized>(
    model: &NetworkModel,
    schedule: &mut ScheduleState,
    regime: Regime,
    rng: &mut R,
) -> ObservationBatch {
    generate_labeled_batch(model, schedule, regime, rng).0
}

/// Like [`generate_batch`] but also returns the labeling that was used.
pub fn generate_labeled_batch<R: RngCore + ?Sized>(
    model: &NetworkModel,
    schedule: &mut ScheduleState,
    regime: Regime,
    rng: &mut R,
) -> (ObservationBatch, Vec<usize>) {
    let labels = schedule.advance().to_vec();
    let time = schedule.steps();
    let batch = match model.kind() {
        ModelKind::Discrete => {
            let xs = labels
                .iter()
                .map(|&k| match model.sample_group(regime, k, rng) {
                    Sample::Symbol(x) => x,
                    Sample::Real(_) => unreachable!(),
                })
                .collect();
            ObservationBatch::discrete(time, xs)
        }
        ModelKind::Gaussian => {
            let xs = labels
                .iter()
                .map(|&k| match model.sample_group(regime, k, rng) {
                    Sample::Real(x) => x,
                    Sample::Symbol(_) => unreachable!(),
                })
                .collect();
            ObservationBatch::continuous(time, xs)
        }
    };
    (batch, labels)
}

/// Convenience wrapper for [`mixture_distribution`](NetworkModel::mixture_distribution).
pub fn mixture_distribution(model: &NetworkModel, regime: Regime) -> Result<DiscreteDistribution> {
    model.mixture_distribution(regime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamRole};

    fn fig1_model() -> NetworkModel {
        let g = |m, v| GaussianDistribution::new(m, v).unwrap();
        NetworkModel::gaussian(vec![1, 1], vec![g(0.0, 1.0), g(2.0, 1.0)], vec![g(0.5, 1.0), g(1.5, 1.0)])
            .unwrap()
    }

    fn binomial_model(sizes: Vec<usize>) -> NetworkModel {
        let b = |p| binomial_pmf(10, p).unwrap();
        NetworkModel::discrete(sizes, vec![b(0.5), b(0.5)], vec![b(0.3), b(0.7)]).unwrap()
    }

    #[test]
    fn binomial_values() {
        let d = binomial_pmf(2, 0.5).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.5, 0.25]);
        let d = binomial_pmf(10, 0.5).unwrap();
        assert_eq!(d.pmf(5), 0.24609375);
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = binomial_pmf(10, 0.0).unwrap();
        assert_eq!(d.pmf(0), 1.0);
        assert!(d.probs()[1..].iter().all(|&p| p == 0.0));
        assert!(binomial_pmf(-1, 0.5).is_err());
        assert!(binomial_pmf(3, 1.5).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
        let d = DiscreteDistribution::new(vec![0.0, 1.0]).unwrap();
        assert!(!d.in_support(0));
        assert!(d.in_support(1));
        assert_eq!(d.log_pmf(0), f64::NEG_INFINITY);
        assert!(GaussianDistribution::new(0.0, 0.0).is_err());
    }

    #[test]
    fn sampling_skips_zero_mass_symbols() {
        let d = DiscreteDistribution::new(vec![0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        let mut rng = stream(1, 0, StreamRole::Samples);
        for _ in 0..2000 {
            let x = d.sample(&mut rng);
            assert!(x == 1 || x == 3);
        }
    }

    #[test]
    fn point_mass_batch() {
        let pm = DiscreteDistribution::point_mass(4, 2).unwrap();
        let other = DiscreteDistribution::uniform(4).unwrap();
        let model = NetworkModel::discrete(vec![3], vec![pm], vec![other]).unwrap();
        let mut sched = LabelSchedule::uniform(3).start(&model).unwrap();
        let mut rng = stream(1, 0, StreamRole::Samples);
        let batch = generate_batch(&model, &mut sched, Regime::Pre, &mut rng);
        assert_eq!(batch.symbols().unwrap(), &[2, 2, 2]);
        assert_eq!(batch.time(), 1);
    }

    #[test]
    fn fig1_pre_change_mean() {
        let model = fig1_model();
        let mut sched = LabelSchedule::uniform(11).start(&model).unwrap();
        let mut rng = stream(5, 0, StreamRole::Samples);
        let reps = 100_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            let b = generate_batch(&model, &mut sched, Regime::Pre, &mut rng);
            sum += b.values().unwrap().iter().sum::<f64>() / 2.0;
        }
        let mean = sum / reps as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn generation_is_deterministic_under_seed() {
        let model = binomial_model(vec![4, 4]);
        let run = || {
            let mut sched = LabelSchedule::uniform(9).start(&model).unwrap();
            let mut rng = stream(42, 3, StreamRole::Samples);
            (0..20)
                .map(|_| generate_batch(&model, &mut sched, Regime::Post, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mixture_distribution_examples() {
        let a = DiscreteDistribution::new(vec![1.0, 0.0]).unwrap();
        let b = DiscreteDistribution::new(vec![0.0, 1.0]).unwrap();
        let model =
            NetworkModel::discrete(vec![1, 1], vec![a.clone(), b.clone()], vec![a.clone(), a.clone()])
                .unwrap();
        assert_eq!(model.mixture_distribution(Regime::Pre).unwrap().probs(), &[0.5, 0.5]);

        let b = |p| binomial_pmf(10, p).unwrap();
        let model =
            NetworkModel::discrete(vec![1, 1], vec![b(0.5), b(0.5)], vec![b(0.5), b(0.3)]).unwrap();
        let post = model.mixture_distribution(Regime::Post).unwrap();
        let exact = (0.5f64.powi(10) + 0.7f64.powi(10)) / 2.0;
        assert!((post.pmf(0) - exact).abs() < 1e-15, "{} vs {exact}", post.pmf(0));

        let single = NetworkModel::discrete(
            vec![3],
            vec![binomial_pmf(4, 0.2).unwrap()],
            vec![binomial_pmf(4, 0.6).unwrap()],
        )
        .unwrap();
        let mix = single.mixture_distribution(Regime::Pre).unwrap();
        assert!(mix.max_distance(&binomial_pmf(4, 0.2).unwrap()) < 1e-15);

        assert_eq!(
            fig1_model().mixture_distribution(Regime::Pre),
            Err(Error::UnsupportedKind("operation requires a discrete model"))
        );
    }

    #[test]
    fn identifiability_gate() {
        let h = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
        let p = DiscreteDistribution::new(vec![0.3, 0.7]).unwrap();
        let q = DiscreteDistribution::new(vec![0.7, 0.3]).unwrap();
        let err = NetworkModel::discrete(vec![1, 1], vec![h.clone(), h], vec![p, q]);
        assert!(matches!(err, Err(Error::InvalidModel(_))));

        let g = |m| GaussianDistribution::new(m, 1.0).unwrap();
        // swapped components give the same mixture
        let err = NetworkModel::gaussian(vec![1, 1], vec![g(0.0), g(2.0)], vec![g(2.0), g(0.0)]);
        assert!(matches!(err, Err(Error::InvalidModel(_))));
        assert!(NetworkModel::gaussian(vec![1, 2], vec![g(0.0), g(2.0)], vec![g(2.0), g(0.0)]).is_ok());
    }

    #[test]
    fn model_shape_validation() {
        let d = DiscreteDistribution::uniform(3).unwrap();
        let e = DiscreteDistribution::point_mass(3, 0).unwrap();
        assert!(NetworkModel::discrete(vec![0], vec![d.clone()], vec![e.clone()]).is_err());
        assert!(NetworkModel::discrete(vec![1, 1], vec![d.clone()], vec![e.clone()]).is_err());
        let f = DiscreteDistribution::uniform(4).unwrap();
        assert!(NetworkModel::discrete(vec![1], vec![f], vec![e]).is_err());
    }

    #[test]
    fn schedules_respect_group_sizes() {
        let model = binomial_model(vec![3, 5]);
        let sizes = model.group_sizes().to_vec();
        let labeling = Labeling::new(vec![1, 0, 1, 1, 0, 1, 0, 1], &sizes).unwrap();
        for schedule in [
            LabelSchedule::uniform(4),
            LabelSchedule::cyclic(3),
            LabelSchedule::fixed(labeling),
        ] {
            let mut state = schedule.start(&model).unwrap();
            let mut rng = stream(0, 0, StreamRole::Samples);
            for _ in 0..200 {
                let (_, labels) = generate_labeled_batch(&model, &mut state, Regime::Pre, &mut rng);
                let mut counts = vec![0; 2];
                for l in labels {
                    counts[l] += 1;
                }
                assert_eq!(counts, sizes);
            }
        }
        assert!(Labeling::new(vec![0, 0, 1], &[1, 2]).is_err());
        assert!(Labeling::new(vec![0, 2, 1], &[1, 2]).is_err());
    }

    #[test]
    fn cyclic_schedule_rotates() {
        let model = binomial_model(vec![1, 2]);
        let mut state = LabelSchedule::cyclic(1).start(&model).unwrap();
        assert_eq!(state.advance(), &[0, 1, 1]);
        assert_eq!(state.advance(), &[1, 1, 0]);
        assert_eq!(state.advance(), &[1, 0, 1]);
    }

    #[test]
    fn pooled_type_converges_to_mixture() {
        let model = binomial_model(vec![2, 3]);
        let mix = model.mixture_distribution(Regime::Pre).unwrap();
        let mut state = LabelSchedule::cyclic(2).start(&model).unwrap();
        let mut rng = stream(3, 0, StreamRole::Samples);
        let reps = 100_000;
        let mut counts = vec![0u64; 11];
        for _ in 0..reps {
            for &x in generate_batch(&model, &mut state, Regime::Pre, &mut rng).symbols().unwrap() {
                counts[x] += 1;
            }
        }
        let total = (reps * model.n()) as f64;
        for (x, &c) in counts.iter().enumerate() {
            let p = mix.pmf(x);
            let se = (p * (1.0 - p) / total).sqrt();
            assert!((c as f64 / total - p).abs() <= 3.0 * se + 1e-12, "symbol {x}");
        }
    }

    #[test]
    fn fixed_schedules_are_equivariant() {
        // Fixed(sigma) vs Fixed(sigma o pi): pooled counts agree (chi-square)
        let b = |p| binomial_pmf(4, p).unwrap();
        let model = NetworkModel::discrete(vec![2, 2], vec![b(0.2), b(0.7)], vec![b(0.5), b(0.5)]).unwrap();
        let sizes = model.group_sizes().to_vec();
        let pooled = |labels: Vec<usize>, seed| {
            let mut st = LabelSchedule::fixed(Labeling::new(labels, &sizes).unwrap()).start(&model).unwrap();
            let mut rng = stream(seed, 0, StreamRole::Samples);
            let mut counts = [0f64; 5];
            for _ in 0..20_000 {
                for &x in generate_batch(&model, &mut st, Regime::Pre, &mut rng).symbols().unwrap() {
                    counts[x] += 1.0;
                }
            }
            counts
        };
        let a = pooled(vec![0, 0, 1, 1], 10);
        let c = pooled(vec![1, 0, 1, 0], 11);
        // two-sample chi-square with 4 dof; 99.9% quantile is 18.47
        let (na, nc): (f64, f64) = (a.iter().sum(), c.iter().sum());
        let chi2: f64 = a
            .iter()
            .zip(&c)
            .filter(|(x, y)| **x + **y > 0.0)
            .map(|(x, y)| {
                let d = x * (nc / na).sqrt() - y * (na / nc).sqrt();
                d * d / (x + y)
            })
            .sum();
        assert!(chi2 < 18.47, "chi2 = {chi2}");
    }

    #[test]
    fn scenario_validation() {
        assert!(ChangeScenario::new(Some(5), 0).is_err());
        assert!(ChangeScenario::new(Some(0), 10).is_err());
        let s = ChangeScenario::new(Some(5), 10).unwrap();
        assert_eq!(s.regime_at(4), Regime::Pre);
        assert_eq!(s.regime_at(5), Regime::Post);
        let s = ChangeScenario::new(None, 10).unwrap();
        assert_eq!(s.regime_at(1_000_000), Regime::Pre);
    }
}
