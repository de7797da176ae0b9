//! Per-batch likelihood ratios under unknown labels.
//!
//! Three ratios are provided:
//!
//! * the mixture ratio, averaging the joint likelihood over every labeling
//!   that respects the group sizes;
//! * the Bayesian ratio, which pretends each sample is drawn from the
//!   `alpha`-mixture independently;
//! * the generalized ratio, which maximizes over labelings instead.
//!
//! The mixture sum over labelings is evaluated by dynamic programming over
//! count states (how many samples have been assigned to each group so far),
//! which is polynomial in `n` for a fixed number of groups. For discrete
//! models the same ratio can also be written as a ratio of type-class
//! probabilities; [`type_class_log_ratio`] evaluates that form independently.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, NetworkModel, ObservationBatch, Regime, Samples};
use crate::numeric::{ln_factorials, log_add_exp, log_sum_exp};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Natural-log likelihood ratio. Infinite exactly when one hypothesis assigns
/// zero probability to the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihoodRatio {
    pub value: f64,
    pub finite: bool,
}

impl LogLikelihoodRatio {
    pub fn new(value: f64) -> Self {
        Self { value, finite: value.is_finite() }
    }

    /// Ratio from log numerator and log denominator.
    pub fn from_log_parts(numerator: f64, denominator: f64) -> Result<Self> {
        if numerator == f64::NEG_INFINITY && denominator == f64::NEG_INFINITY {
            return Err(Error::InvalidBatch(
                "batch has zero probability under both hypotheses".into(),
            ));
        }
        if numerator.is_nan() || denominator.is_nan() {
            return Err(Error::InvalidBatch("likelihood evaluated to NaN".into()));
        }
        Ok(Self::new(numerator - denominator))
    }
}

/// Count state of the labeling dynamic program: samples assigned per group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector(pub Vec<usize>);

impl CountVector {
    /// Mixed-radix index with digit `k` in `0..=sizes[k]`.
    pub fn encode(&self, sizes: &[usize]) -> usize {
        let mut idx = 0;
        for (c, &s) in self.0.iter().zip(sizes).rev() {
            idx = idx * (s + 1) + c;
        }
        idx
    }

    pub fn decode(mut idx: usize, sizes: &[usize]) -> Self {
        let mut digits = Vec::with_capacity(sizes.len());
        for &s in sizes {
            digits.push(idx % (s + 1));
            idx /= s + 1;
        }
        Self(digits)
    }
}

/// Symbol counts of a sample multiset (its type).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmpiricalType {
    counts: Vec<u32>,
    total: u64,
}

impl EmpiricalType {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        let total = counts.iter().map(|&c| c as u64).sum();
        if total == 0 {
            return Err(Error::InvalidArgument("empirical type with no samples".into()));
        }
        Ok(Self { counts, total })
    }

    pub fn empty(alphabet_size: usize) -> Self {
        Self { counts: vec![0; alphabet_size], total: 0 }
    }

    pub fn from_symbols(symbols: &[usize], alphabet_size: usize) -> Result<Self> {
        let mut t = Self::empty(alphabet_size);
        t.add_symbols(symbols)?;
        Ok(t)
    }

    pub fn add_symbols(&mut self, symbols: &[usize]) -> Result<()> {
        for &x in symbols {
            let slot = self.counts.get_mut(x).ok_or_else(|| {
                Error::InvalidBatch(format!("symbol {x} outside alphabet"))
            })?;
            *slot += 1;
        }
        self.total += symbols.len() as u64;
        Ok(())
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.total = 0;
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Counts divided by the total.
    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

// ---------------------------------------------------------------------------
// Mixture ratio: dynamic program over count states
// ---------------------------------------------------------------------------

/// Reusable table for the labeling-sum dynamic program of one group-size
/// vector. Entry `c` (a mixed-radix encoded [`CountVector`]) holds the
/// weight of all partial labelings of the samples seen so far that put
/// `c_k` of them in group `k`.
#[derive(Debug, Clone)]
pub struct MixtureScratch {
    sizes: Vec<usize>,
    /// predecessor lists by state: `(state - stride_k, k)` for each `c_k > 0`
    pred_start: Vec<usize>,
    preds: Vec<(u32, u8)>,
    values: Vec<f64>,
    weights: Vec<f64>,
    log_lik: Vec<f64>,
}

impl MixtureScratch {
    pub fn new(group_sizes: &[usize]) -> Self {
        let num_states: usize = group_sizes.iter().map(|&s| s + 1).product();
        let mut strides = Vec::with_capacity(group_sizes.len());
        let mut acc = 1;
        for &s in group_sizes {
            strides.push(acc);
            acc *= s + 1;
        }
        let mut pred_start = Vec::with_capacity(num_states + 1);
        let mut preds = Vec::new();
        for idx in 0..num_states {
            pred_start.push(preds.len());
            let c = CountVector::decode(idx, group_sizes);
            for (k, &ck) in c.0.iter().enumerate() {
                if ck > 0 {
                    preds.push(((idx - strides[k]) as u32, k as u8));
                }
            }
        }
        pred_start.push(preds.len());
        Self {
            sizes: group_sizes.to_vec(),
            pred_start,
            preds,
            values: vec![0.0; num_states],
            weights: vec![0.0; group_sizes.len()],
            log_lik: Vec::new(),
        }
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    /// `ln sum_sigma prod_i p_{sigma(i)}(x_i)` from a row-major `n x K` table of
    /// per-sample log-likelihoods.
    ///
    /// Each sample applies `F(c) <- sum_k [c_k > 0] p_k(x) F(c - e_k)` to the
    /// whole table. Sweeping states in decreasing index order lets the update
    /// run in place, since every predecessor has a smaller index. The table
    /// is rescaled by its maximum after each sample and the scale kept in a
    /// log offset.
    pub fn log_labeling_sum(&mut self, log_lik: &[f64]) -> f64 {
        let k = self.sizes.len();
        let n: usize = self.sizes.iter().sum();
        debug_assert_eq!(log_lik.len(), n * k);
        self.values.iter_mut().for_each(|v| *v = 0.0);
        self.values[0] = 1.0;
        let mut offset = 0.0;
        for row in log_lik.chunks_exact(k) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            for (w, &l) in self.weights.iter_mut().zip(row) {
                *w = (l - m).exp();
            }
            offset += m;
            let mut table_max = 0.0_f64;
            for idx in (0..self.values.len()).rev() {
                let mut acc = 0.0;
                for &(p, g) in &self.preds[self.pred_start[idx]..self.pred_start[idx + 1]] {
                    acc += self.weights[g as usize] * self.values[p as usize];
                }
                self.values[idx] = acc;
                table_max = table_max.max(acc);
            }
            if table_max == 0.0 {
                return f64::NEG_INFINITY;
            }
            let inv = 1.0 / table_max;
            self.values.iter_mut().for_each(|v| *v *= inv);
            offset += table_max.ln();
        }
        offset + self.values[self.values.len() - 1].ln()
    }

    /// Mixture log-likelihood ratio of one batch.
    pub fn log_ratio(
        &mut self,
        model: &NetworkModel,
        batch: &ObservationBatch,
    ) -> Result<LogLikelihoodRatio> {
        if model.group_sizes() != self.sizes.as_slice() {
            return Err(Error::InvalidArgument("scratch built for other group sizes".into()));
        }
        let mut table = std::mem::take(&mut self.log_lik);
        model.log_likelihoods(Regime::Post, batch, &mut table)?;
        let num = self.log_labeling_sum(&table);
        model.log_likelihoods(Regime::Pre, batch, &mut table)?;
        let den = self.log_labeling_sum(&table);
        self.log_lik = table;
        LogLikelihoodRatio::from_log_parts(num, den)
    }
}

/// Mixture log-likelihood ratio: log of the labeling-averaged post-change
/// likelihood over the labeling-averaged pre-change likelihood.
pub fn mixture_log_ratio(model: &NetworkModel, batch: &ObservationBatch) -> Result<LogLikelihoodRatio> {
    MixtureScratch::new(model.group_sizes()).log_ratio(model, batch)
}

/// `ln sum_sigma P_{regime,sigma}(batch)` over all labelings.
pub fn log_labeling_sum(model: &NetworkModel, regime: Regime, batch: &ObservationBatch) -> Result<f64> {
    let mut table = Vec::new();
    model.log_likelihoods(regime, batch, &mut table)?;
    Ok(MixtureScratch::new(model.group_sizes()).log_labeling_sum(&table))
}

// ---------------------------------------------------------------------------
// Type-class form
// ---------------------------------------------------------------------------

/// All count vectors over `bounds.len()` symbols with total `total` and entry
/// `x` at most `bounds[x]`, passed to `f` one at a time.
fn for_each_composition(total: usize, bounds: &[u32], f: &mut impl FnMut(&[u32])) {
    fn rec(x: usize, left: usize, bounds: &[u32], suffix_cap: &[usize], cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if x + 1 == bounds.len() {
            if left as u32 <= bounds[x] {
                cur.push(left as u32);
                f(cur);
                cur.pop();
            }
            return;
        }
        let hi = (bounds[x] as usize).min(left);
        // leave enough for the remaining symbols
        let lo = left.saturating_sub(suffix_cap[x + 1]);
        for c in lo..=hi {
            cur.push(c as u32);
            rec(x + 1, left - c, bounds, suffix_cap, cur, f);
            cur.pop();
        }
    }
    if bounds.is_empty() {
        return;
    }
    let mut suffix_cap = vec![0usize; bounds.len() + 1];
    for x in (0..bounds.len()).rev() {
        suffix_cap[x] = suffix_cap[x + 1] + bounds[x] as usize;
    }
    if suffix_cap[0] < total {
        return;
    }
    let mut cur = Vec::with_capacity(bounds.len());
    rec(0, total, bounds, &suffix_cap, &mut cur, f);
}

/// `ln [multinomial(n_k; c) prod_x p(x)^c(x)]`: probability that `n_k` i.i.d.
/// draws from `p` have type `c`.
fn log_type_probability(counts: &[u32], log_p: &[f64], ln_fact: &[f64]) -> f64 {
    let m: u32 = counts.iter().sum();
    let mut acc = ln_fact[m as usize];
    for (&c, &lp) in counts.iter().zip(log_p) {
        if c > 0 {
            if lp == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc += c as f64 * lp - ln_fact[c as usize];
        }
    }
    acc
}

fn log_tables(laws: &[DiscreteDistribution]) -> Vec<Vec<f64>> {
    laws.iter()
        .map(|d| (0..d.alphabet_size()).map(|x| d.log_pmf(x)).collect())
        .collect()
}

/// `ln P_{regime,sigma}(T(counts))` for any labeling `sigma`, summing over the
/// splits of `counts` into per-group types.
pub fn log_type_class_probability(model: &NetworkModel, regime: Regime, counts: &[u32]) -> Result<f64> {
    let laws = model.discrete_laws(regime)?;
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    if total != model.n() as u64 {
        return Err(Error::InvalidArgument(format!(
            "type has {total} samples, model has {} sensors",
            model.n()
        )));
    }
    if counts.len() != laws[0].alphabet_size() {
        return Err(Error::InvalidArgument("type alphabet does not match model".into()));
    }
    let logs = log_tables(laws);
    let ln_fact = ln_factorials(model.n());
    let sizes = model.group_sizes();
    let mut terms = Vec::new();
    let mut remaining = counts.to_vec();
    split_groups(0, sizes, &logs, &ln_fact, &mut remaining, 0.0, &mut terms);
    Ok(log_sum_exp(&terms))
}

fn split_groups(
    k: usize,
    sizes: &[usize],
    logs: &[Vec<f64>],
    ln_fact: &[f64],
    remaining: &mut Vec<u32>,
    acc: f64,
    terms: &mut Vec<f64>,
) {
    if k + 1 == sizes.len() {
        let t = acc + log_type_probability(remaining, &logs[k], ln_fact);
        if t > f64::NEG_INFINITY {
            terms.push(t);
        }
        return;
    }
    let bounds = remaining.clone();
    for_each_composition(sizes[k], &bounds, &mut |c| {
        let lp = log_type_probability(c, &logs[k], ln_fact);
        if lp == f64::NEG_INFINITY {
            return;
        }
        for (r, &ci) in remaining.iter_mut().zip(c) {
            *r -= ci;
        }
        split_groups(k + 1, sizes, logs, ln_fact, remaining, acc + lp, terms);
        for (r, &ci) in remaining.iter_mut().zip(c) {
            *r += ci;
        }
    });
}

/// Mixture log-ratio written as a ratio of type-class probabilities.
pub fn type_class_log_ratio(model: &NetworkModel, etype: &EmpiricalType) -> Result<LogLikelihoodRatio> {
    let num = log_type_class_probability(model, Regime::Post, etype.counts())?;
    let den = log_type_class_probability(model, Regime::Pre, etype.counts())?;
    LogLikelihoodRatio::from_log_parts(num, den)
}

/// Number of types of `m` samples over `alphabet_size` symbols, as `f64`.
fn type_space_size(m: usize, alphabet_size: usize) -> f64 {
    // C(m + |X| - 1, |X| - 1)
    let r = alphabet_size.saturating_sub(1);
    (1..=r).fold(1.0, |acc, i| acc * (m + i) as f64 / i as f64)
}

/// Default cap on the number of types [`type_class_distribution`] will build.
pub const MAX_TYPE_CLASSES: u128 = 10_000_000;

/// Full law of the batch type: every type of `n` samples with
/// `ln P_{regime,sigma}(T(type))`, sorted by count vector.
///
/// Built by convolving the per-group type laws, so the cost is the product of
/// the per-group type-space sizes rather than a per-type split enumeration.
pub fn type_class_distribution(
    model: &NetworkModel,
    regime: Regime,
    max_types: u128,
) -> Result<Vec<(Vec<u32>, f64)>> {
    let laws = model.discrete_laws(regime)?;
    let a = laws[0].alphabet_size();
    let n = model.n();
    let space = type_space_size(n, a);
    if space > max_types as f64 {
        return Err(Error::Capacity { required: space.min(u128::MAX as f64) as u128, limit: max_types });
    }
    let base = (n + 1) as u128;
    if (a as f64) * ((n + 1) as f64).log2() >= 127.0 {
        return Err(Error::Capacity { required: u128::MAX, limit: max_types });
    }
    let decode = |mut key: u128| {
        let mut c = Vec::with_capacity(a);
        for _ in 0..a {
            c.push((key % base) as u32);
            key /= base;
        }
        c
    };
    let logs = log_tables(laws);
    let ln_fact = ln_factorials(n);
    let mut current: Vec<(u128, f64)> = vec![(0, 0.0)];
    let mut strides = Vec::with_capacity(a);
    let mut s = 1u128;
    for _ in 0..a {
        strides.push(s);
        s *= base;
    }
    for (k, &nk) in model.group_sizes().iter().enumerate() {
        let mut group_types: Vec<(u128, f64)> = Vec::new();
        for_each_composition(nk, &vec![nk as u32; a], &mut |c| {
            let lp = log_type_probability(c, &logs[k], &ln_fact);
            if lp > f64::NEG_INFINITY {
                let key: u128 = c.iter().zip(&strides).map(|(&x, &st)| x as u128 * st).sum();
                group_types.push((key, lp));
            }
        });
        let mut next: HashMap<u128, f64> = HashMap::with_capacity(current.len() * 2);
        for &(key, lp) in &current {
            for &(gk, glp) in &group_types {
                let slot = next.entry(key + gk).or_insert(f64::NEG_INFINITY);
                *slot = log_add_exp(*slot, lp + glp);
            }
        }
        current = next.into_iter().collect();
        current.sort_unstable_by_key(|e| e.0);
    }
    Ok(current.into_iter().map(|(key, lp)| (decode(key), lp)).collect())
}

// ---------------------------------------------------------------------------
// Bayesian ratio
// ---------------------------------------------------------------------------

/// Product over samples of the `alpha`-mixture densities, post over pre.
pub fn bayesian_log_ratio(model: &NetworkModel, batch: &ObservationBatch) -> Result<LogLikelihoodRatio> {
    let mut table = Vec::new();
    let num = bayesian_log_likelihood(model, Regime::Post, batch, &mut table)?;
    let den = bayesian_log_likelihood(model, Regime::Pre, batch, &mut table)?;
    LogLikelihoodRatio::from_log_parts(num, den)
}

pub(crate) fn bayesian_log_likelihood(
    model: &NetworkModel,
    regime: Regime,
    batch: &ObservationBatch,
    table: &mut Vec<f64>,
) -> Result<f64> {
    model.log_likelihoods(regime, batch, table)?;
    let k = model.num_groups();
    let log_alpha: Vec<f64> = model.alpha().iter().map(|a| a.ln()).collect();
    let mut total = 0.0;
    let mut row = vec![0.0; k];
    for chunk in table.chunks_exact(k) {
        for ((r, &l), &la) in row.iter_mut().zip(chunk).zip(&log_alpha) {
            *r = l + la;
        }
        total += log_sum_exp(&row);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Generalized ratio: transportation problem
// ---------------------------------------------------------------------------

/// Distinct values of a batch with multiplicities; rows of `log_lik` for one
/// representative of each.
fn distinct_rows(batch: &ObservationBatch) -> (Vec<usize>, Vec<usize>) {
    // returns (representative sample index, multiplicity); the batch need not be sorted
    let mut reps: Vec<usize> = Vec::new();
    let mut mult: Vec<usize> = Vec::new();
    match batch.samples() {
        Samples::Discrete(xs) => {
            let mut seen: HashMap<usize, usize> = HashMap::new();
            for (i, &x) in xs.iter().enumerate() {
                let slot = *seen.entry(x).or_insert_with(|| {
                    reps.push(i);
                    mult.push(0);
                    reps.len() - 1
                });
                mult[slot] += 1;
            }
        }
        Samples::Continuous(xs) => {
            let mut seen: HashMap<u64, usize> = HashMap::new();
            for (i, &x) in xs.iter().enumerate() {
                let slot = *seen.entry(x.to_bits()).or_insert_with(|| {
                    reps.push(i);
                    mult.push(0);
                    reps.len() - 1
                });
                mult[slot] += 1;
            }
        }
    }
    (reps, mult)
}

/// `max_sigma ln P_{regime,sigma}(batch)`.
pub fn max_labeling_log_likelihood(
    model: &NetworkModel,
    regime: Regime,
    batch: &ObservationBatch,
) -> Result<f64> {
    let mut table = Vec::new();
    model.log_likelihoods(regime, batch, &mut table)?;
    let (reps, mult) = distinct_rows(batch);
    let k = model.num_groups();
    let weights: Vec<f64> = reps
        .iter()
        .flat_map(|&i| table[i * k..(i + 1) * k].iter().copied())
        .collect();
    Ok(transport::max_weight(&mult, model.group_sizes(), &weights))
}

/// Maximized post-change likelihood over maximized pre-change likelihood.
pub fn generalized_log_ratio(model: &NetworkModel, batch: &ObservationBatch) -> Result<LogLikelihoodRatio> {
    let num = max_labeling_log_likelihood(model, Regime::Post, batch)?;
    let den = max_labeling_log_likelihood(model, Regime::Pre, batch)?;
    LogLikelihoodRatio::from_log_parts(num, den)
}

mod transport {
    //! Min-cost flow by successive shortest paths (Bellman-Ford), specialized
    //! to a bipartite supply/capacity network.

    struct Edge {
        to: usize,
        cap: usize,
        cost: f64,
    }

    /// Maximum of `sum_{v,k} flow(v,k) * weight[v*K + k]` over integral flows
    /// shipping `supply[v]` from each row and `capacity[k]` into each column.
    /// Entries equal to `-inf` are forbidden arcs; returns `-inf` when no
    /// feasible flow exists. Totals of `supply` and `capacity` must agree.
    pub fn max_weight(supply: &[usize], capacity: &[usize], weight: &[f64]) -> f64 {
        let (v, k) = (supply.len(), capacity.len());
        let source = 0;
        let sink = v + k + 1;
        let nodes = v + k + 2;
        let mut edges: Vec<Edge> = Vec::new();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        let add = |edges: &mut Vec<Edge>, adj: &mut Vec<Vec<usize>>, a: usize, b: usize, cap: usize, cost: f64| {
            adj[a].push(edges.len());
            edges.push(Edge { to: b, cap, cost });
            adj[b].push(edges.len());
            edges.push(Edge { to: a, cap: 0, cost: -cost });
        };
        for (i, &s) in supply.iter().enumerate() {
            add(&mut edges, &mut adj, source, 1 + i, s, 0.0);
            for (g, &c) in capacity.iter().enumerate() {
                let w = weight[i * k + g];
                if w > f64::NEG_INFINITY {
                    add(&mut edges, &mut adj, 1 + i, 1 + v + g, s.min(c), -w);
                }
            }
        }
        for (g, &c) in capacity.iter().enumerate() {
            add(&mut edges, &mut adj, 1 + v + g, sink, c, 0.0);
        }
        let need: usize = supply.iter().sum();
        let mut flow = 0;
        let mut cost = 0.0;
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        while flow < need {
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
            via.iter_mut().for_each(|e| *e = usize::MAX);
            dist[source] = 0.0;
            // Bellman-Ford; residual costs may be negative
            for _ in 0..nodes {
                let mut changed = false;
                for a in 0..nodes {
                    if dist[a] == f64::INFINITY {
                        continue;
                    }
                    for &e in &adj[a] {
                        let ed = &edges[e];
                        let cand = dist[a] + ed.cost;
                        let cur = dist[ed.to];
                        if ed.cap > 0 && (cur == f64::INFINITY || cand < cur - 1e-12 * (1.0 + cur.abs())) {
                            dist[ed.to] = cand;
                            via[ed.to] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[sink] == f64::INFINITY {
                return f64::NEG_INFINITY;
            }
            let mut push = need - flow;
            let mut node = sink;
            while node != source {
                let e = via[node];
                push = push.min(edges[e].cap);
                node = edges[e ^ 1].to;
            }
            node = sink;
            while node != source {
                let e = via[node];
                edges[e].cap -= push;
                edges[e ^ 1].cap += push;
                cost += push as f64 * edges[e].cost;
                node = edges[e ^ 1].to;
            }
            flow += push;
        }
        -cost
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn assignment_picks_the_better_pairing() {
            // 2 rows x 2 columns, unit supplies and capacities
            let w = [1.0, 5.0, 4.0, 1.0];
            assert_eq!(max_weight(&[1, 1], &[1, 1], &w), 9.0);
        }

        #[test]
        fn forbidden_arcs_can_make_it_infeasible() {
            let ninf = f64::NEG_INFINITY;
            let w = [0.0, ninf, 0.0, ninf];
            assert_eq!(max_weight(&[1, 1], &[1, 1], &w), ninf);
            let w = [ninf, 0.0, 0.0, ninf];
            assert_eq!(max_weight(&[1, 1], &[1, 1], &w), 0.0);
        }

        #[test]
        fn capacities_bind() {
            // one row of 3 identical samples, columns with capacity 1 and 2
            let w = [2.0, -1.0];
            assert_eq!(max_weight(&[3], &[1, 2], &w), 0.0);
        }
    }
}
