//! The KL exponent `f_P(alpha, Q)`, the regeneration exponent `h`, threshold
//! calibration for the efficient test, and the exact KL divergence between the
//! labeling-averaged batch laws.
//!
//! `f_P(alpha, Q) = min sum_k alpha_k D(U_k || p_k)` subject to
//! `sum_k alpha_k U_k = Q`. Stationarity gives `U_k(x) ∝ p_k(x) e^{-lambda(x)}`,
//! so the problem is solved in the dual variable `lambda`, one coordinate per
//! symbol in the support of `Q`.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::mixture::type_class_distribution;
use crate::model::{DiscreteDistribution, NetworkModel, Regime};
use crate::numeric::{log_sum_exp, CompensatedSum};

/// Residual tolerance on `sum_k alpha_k U_k - Q` (max-norm).
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Per-iteration objective change tolerance.
pub const OBJECTIVE_TOL: f64 = 1e-11;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;
/// Newton iterations before switching to matrix scaling.
const NEWTON_STALL: usize = 200;

/// Value and minimizer of `f_P(alpha, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSolution {
    /// Nats; `+inf` when no feasible `U` exists.
    pub value: f64,
    /// `U_1..U_K` over the full alphabet. Empty when infeasible.
    pub minimizer: Vec<Vec<f64>>,
    /// `lambda(x)`; `+inf` off the support of `Q`. Empty when infeasible.
    pub dual: Vec<f64>,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub feasible: bool,
}

impl ExponentSolution {
    fn infeasible() -> Self {
        Self {
            value: f64::INFINITY,
            minimizer: Vec::new(),
            dual: Vec::new(),
            constraint_residual: f64::INFINITY,
            iterations: 0,
            feasible: false,
        }
    }
}

/// `f_P(alpha, Q)` from a cold start.
pub fn exponent(p: &[DiscreteDistribution], alpha: &[f64], q: &DiscreteDistribution) -> Result<ExponentSolution> {
    ExponentSolver::new().solve(p, alpha, q.probs())
}

/// Exponent solver that can warm-start from the previous dual.
#[derive(Debug, Clone)]
pub struct ExponentSolver {
    max_iterations: usize,
    warm: Option<Vec<f64>>,
    warm_enabled: bool,
}

impl Default for ExponentSolver {
    fn default() -> Self {
        Self::new()
    }
}

struct Problem {
    alpha: Vec<f64>,
    log_alpha: Vec<f64>,
    /// support of Q
    support: Vec<usize>,
    q: Vec<f64>,
    /// `ln p_k(x)` for x in the support, row per group
    log_p: Vec<Vec<f64>>,
}

struct DualState {
    log_u: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    residual: Vec<f64>,
    objective: f64,
}

impl Problem {
    fn m(&self) -> usize {
        self.support.len()
    }

    fn evaluate(&self, lambda: &[f64]) -> DualState {
        let m = self.m();
        let mut log_u = Vec::with_capacity(self.log_p.len());
        let mut u = Vec::with_capacity(self.log_p.len());
        let mut residual: Vec<f64> = self.q.iter().map(|q| -q).collect();
        let mut objective = CompensatedSum::default();
        let mut row = vec![0.0; m];
        for (k, lp) in self.log_p.iter().enumerate() {
            for j in 0..m {
                row[j] = lp[j] - lambda[j];
            }
            let log_z = log_sum_exp(&row);
            let lu: Vec<f64> = row.iter().map(|r| r - log_z).collect();
            let uk: Vec<f64> = lu.iter().map(|l| l.exp()).collect();
            for j in 0..m {
                residual[j] += self.alpha[k] * uk[j];
            }
            objective.add(-self.alpha[k] * log_z);
            log_u.push(lu);
            u.push(uk);
        }
        for j in 0..m {
            objective.add(-lambda[j] * self.q[j]);
        }
        DualState { log_u, u, residual, objective: objective.value() }
    }

    fn newton_direction(&self, st: &DualState) -> Option<Vec<f64>> {
        let m = self.m();
        let mut h = DMatrix::from_element(m, m, 1.0 / m as f64);
        for (k, uk) in st.u.iter().enumerate() {
            let a = self.alpha[k];
            for i in 0..m {
                h[(i, i)] += a * uk[i];
                for j in 0..m {
                    h[(i, j)] -= a * uk[i] * uk[j];
                }
            }
        }
        let r = DVector::from_column_slice(&st.residual);
        let trace = h.trace();
        let mut ridge = 0.0;
        for _ in 0..8 {
            let mut hr = h.clone();
            for i in 0..m {
                hr[(i, i)] += ridge;
            }
            if let Some(ch) = hr.cholesky() {
                let d = ch.solve(&r);
                if d.iter().all(|v| v.is_finite()) {
                    return Some(d.iter().copied().collect());
                }
            }
            ridge = if ridge == 0.0 { 1e-12 * trace.max(1e-300) } else { ridge * 100.0 };
        }
        None
    }

    /// Feasibility of `sum alpha_k U_k = Q` with `U_k << p_k`: every set of
    /// groups must fit into the mass of `Q` their supports can reach.
    fn feasible(&self) -> bool {
        let k = self.log_p.len();
        if k > 24 {
            // direct check of coverage only; larger K never occurs in practice
            return (0..self.m()).all(|j| self.log_p.iter().any(|lp| lp[j] > f64::NEG_INFINITY));
        }
        for mask in 1u32..(1u32 << k) {
            let mut need = 0.0;
            let mut reach = vec![false; self.m()];
            for g in 0..k {
                if mask & (1 << g) != 0 {
                    need += self.alpha[g];
                    for (j, r) in reach.iter_mut().enumerate() {
                        *r |= self.log_p[g][j] > f64::NEG_INFINITY;
                    }
                }
            }
            let got: f64 = reach.iter().zip(&self.q).filter(|(r, _)| **r).map(|(_, q)| q).sum();
            if need > got + 1e-12 {
                return false;
            }
        }
        true
    }

    /// Matrix scaling of `alpha_k p_k(x)` to row sums `alpha` and column sums `Q`.
    fn sinkhorn(&self, lambda: &mut [f64], max_iterations: usize) -> Result<usize> {
        let (k, m) = (self.log_p.len(), self.m());
        let mut log_b: Vec<f64> = lambda.iter().map(|l| -l).collect();
        let mut log_a = vec![0.0; k];
        let log_q: Vec<f64> = self.q.iter().map(|q| q.ln()).collect();
        let mut buf = vec![0.0; m.max(k)];
        let mut best = f64::INFINITY;
        for it in 1..=max_iterations {
            for g in 0..k {
                for j in 0..m {
                    buf[j] = self.log_p[g][j] + log_b[j];
                }
                log_a[g] = -log_sum_exp(&buf[..m]);
            }
            for j in 0..m {
                for g in 0..k {
                    buf[g] = self.log_alpha[g] + self.log_p[g][j] + log_a[g];
                }
                log_b[j] = log_q[j] - log_sum_exp(&buf[..k]);
            }
            if it % 10 == 0 || it == max_iterations {
                for (l, b) in lambda.iter_mut().zip(&log_b) {
                    *l = -b;
                }
                let st = self.evaluate(lambda);
                let res = max_abs(&st.residual);
                best = best.min(res);
                if res <= RESIDUAL_TOL {
                    return Ok(it);
                }
            }
        }
        Err(Error::NoConvergence { iterations: max_iterations, best_residual: best })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl ExponentSolver {
    pub fn new() -> Self {
        Self { max_iterations: DEFAULT_MAX_ITERATIONS, warm: None, warm_enabled: true }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations.max(1);
        self
    }

    /// Solver that ignores previous solutions.
    pub fn cold() -> Self {
        Self { warm_enabled: false, ..Self::new() }
    }

    /// Forget the stored dual; the next solve starts from `lambda = 0`.
    pub fn reset(&mut self) {
        self.warm = None;
    }

    pub fn solve(&mut self, p: &[DiscreteDistribution], alpha: &[f64], q: &[f64]) -> Result<ExponentSolution> {
        let problem = match setup(p, alpha, q)? {
            Some(pr) => pr,
            None => {
                self.warm = None;
                return Ok(ExponentSolution::infeasible());
            }
        };
        let start: Vec<f64> = match (&self.warm, self.warm_enabled) {
            (Some(w), true) if w.len() == q.len() => problem
                .support
                .iter()
                .map(|&x| if w[x].is_finite() { w[x] } else { 0.0 })
                .collect(),
            _ => vec![0.0; problem.m()],
        };
        let warm = start.iter().any(|&l| l != 0.0);
        let result = match solve_dual(&problem, start, self.max_iterations) {
            Err(Error::NoConvergence { .. }) if warm => {
                solve_dual(&problem, vec![0.0; problem.m()], self.max_iterations)
            }
            other => other,
        };
        let (lambda, iterations) = result?;
        let sol = finish(&problem, p, q.len(), &lambda, iterations);
        if self.warm_enabled {
            self.warm = Some(sol.dual.clone());
        }
        Ok(sol)
    }
}

fn setup(p: &[DiscreteDistribution], alpha: &[f64], q: &[f64]) -> Result<Option<Problem>> {
    if p.is_empty() || p.len() != alpha.len() {
        return Err(Error::InvalidArgument("need one weight per distribution".into()));
    }
    let a = q.len();
    if p.iter().any(|d| d.alphabet_size() != a) {
        return Err(Error::InvalidArgument("distributions and Q use different alphabets".into()));
    }
    if alpha.iter().any(|&w| !(w > 0.0) || !w.is_finite()) || (alpha.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("weights must be positive and sum to one".into()));
    }
    if q.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution("Q is not a probability vector".into()));
    }
    let support: Vec<usize> = (0..a).filter(|&x| q[x] > 0.0).collect();
    let log_p: Vec<Vec<f64>> = p.iter().map(|d| support.iter().map(|&x| d.log_pmf(x)).collect()).collect();
    let problem = Problem {
        alpha: alpha.to_vec(),
        log_alpha: alpha.iter().map(|a| a.ln()).collect(),
        q: support.iter().map(|&x| q[x]).collect(),
        support,
        log_p,
    };
    if problem.log_p.iter().any(|lp| lp.iter().all(|&l| l == f64::NEG_INFINITY)) || !problem.feasible() {
        return Ok(None);
    }
    Ok(Some(problem))
}

fn solve_dual(problem: &Problem, mut lambda: Vec<f64>, max_iterations: usize) -> Result<(Vec<f64>, usize)> {
    let m = problem.m();
    let mut st = problem.evaluate(&lambda);
    let mut last_change = f64::INFINITY;
    let mut trial = vec![0.0; m];
    for it in 0..max_iterations.min(NEWTON_STALL) {
        let res = max_abs(&st.residual);
        if res <= RESIDUAL_TOL && (last_change <= OBJECTIVE_TOL || res <= 1e-15) {
            return Ok((lambda, it));
        }
        let Some(d) = problem.newton_direction(&st) else { break };
        let slope: f64 = d.iter().zip(&st.residual).map(|(a, b)| a * b).sum();
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..m {
                trial[j] = lambda[j] + step * d[j];
            }
            let next = problem.evaluate(&trial);
            let slack = 1e-14 * (1.0 + st.objective.abs());
            if next.objective.is_finite() && next.objective >= st.objective + 1e-4 * step * slope - slack {
                last_change = (next.objective - st.objective).abs();
                lambda.copy_from_slice(&trial);
                st = next;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if res <= RESIDUAL_TOL {
                // rounding floor reached
                return Ok((lambda, it));
            }
            break;
        }
    }
    if max_abs(&st.residual) <= RESIDUAL_TOL && last_change <= OBJECTIVE_TOL {
        return Ok((lambda, NEWTON_STALL));
    }
    log::debug!("dual Newton stalled at residual {:e}; switching to matrix scaling", max_abs(&st.residual));
    let used = NEWTON_STALL.min(max_iterations);
    let budget = max_iterations.saturating_sub(used).max(1);
    let extra = problem.sinkhorn(&mut lambda, budget).map_err(|e| match e {
        Error::NoConvergence { best_residual, .. } => Error::NoConvergence { iterations: max_iterations, best_residual },
        other => other,
    })?;
    Ok((lambda, used + extra))
}

fn finish(problem: &Problem, p: &[DiscreteDistribution], a: usize, lambda: &[f64], iterations: usize) -> ExponentSolution {
    let st = problem.evaluate(lambda);
    let mut value = CompensatedSum::default();
    let mut minimizer = vec![vec![0.0; a]; p.len()];
    for (k, (uk, luk)) in st.u.iter().zip(&st.log_u).enumerate() {
        for (j, &x) in problem.support.iter().enumerate() {
            minimizer[k][x] = uk[j];
            if uk[j] > 0.0 {
                value.add(problem.alpha[k] * uk[j] * (luk[j] - problem.log_p[k][j]));
            }
        }
    }
    let mut dual = vec![f64::INFINITY; a];
    for (j, &x) in problem.support.iter().enumerate() {
        dual[x] = lambda[j];
    }
    ExponentSolution {
        value: value.value().max(0.0),
        minimizer,
        dual,
        constraint_residual: max_abs(&st.residual),
        iterations,
        feasible: true,
    }
}

// ---------------------------------------------------------------------------
// Exponent gap
// ---------------------------------------------------------------------------

/// `f_{P_0}(alpha, Q)` and `f_{P_1}(alpha, Q)` together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapValue {
    pub pre: f64,
    pub post: f64,
}

impl GapValue {
    /// `f_{P_0} - f_{P_1}`; positive values favour the post-change laws.
    pub fn gap(&self) -> f64 {
        match (self.pre.is_finite(), self.post.is_finite()) {
            (true, true) => self.pre - self.post,
            (false, _) => f64::INFINITY,
            (true, false) => f64::NEG_INFINITY,
        }
    }
}

/// Pair of warm-startable solvers for the pre- and post-change exponents.
#[derive(Debug, Clone, Default)]
pub struct GapSolver {
    pre: ExponentSolver,
    post: ExponentSolver,
}

impl GapSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cold() -> Self {
        Self { pre: ExponentSolver::cold(), post: ExponentSolver::cold() }
    }

    pub fn reset(&mut self) {
        self.pre.reset();
        self.post.reset();
    }

    pub fn solve(&mut self, model: &NetworkModel, q: &[f64]) -> Result<GapValue> {
        let pre = self.pre.solve(model.discrete_laws(Regime::Pre)?, model.alpha(), q)?;
        let post = self.post.solve(model.discrete_laws(Regime::Post)?, model.alpha(), q)?;
        if !pre.feasible && !post.feasible {
            return Err(Error::BothInfeasible);
        }
        Ok(GapValue { pre: pre.value, post: post.value })
    }
}

/// `f_{P_0}(alpha, Q) - f_{P_1}(alpha, Q)`.
pub fn exponent_gap(model: &NetworkModel, q: &DiscreteDistribution) -> Result<f64> {
    Ok(GapSolver::cold().solve(model, q.probs())?.gap())
}

// ---------------------------------------------------------------------------
// The regeneration exponent h
// ---------------------------------------------------------------------------

/// Estimate of `h = n * inf { f_{P_0}(alpha, mu) : f_{P_0}(alpha, mu) >= f_{P_1}(alpha, mu) }`.
#[derive(Debug, Clone, PartialEq)]
pub struct HEstimate {
    pub h: f64,
    /// A mixture `mu` on the boundary attaining the estimate (before any
    /// safety factor).
    pub argmin: Vec<f64>,
    /// Set when the estimate came from the boundary search and was shrunk.
    pub conservative: bool,
}

/// Alphabets up to this size use the simplex grid.
pub const GRID_MAX_ALPHABET: usize = 4;
pub const DEFAULT_RESOLUTION: f64 = 0.01;
/// Multiplier applied to the boundary-search estimate.
pub const SAFETY_FACTOR: f64 = 0.5;

struct GapEval<'a> {
    model: &'a NetworkModel,
    solver: GapSolver,
    evaluations: usize,
}

impl<'a> GapEval<'a> {
    fn new(model: &'a NetworkModel) -> Self {
        Self { model, solver: GapSolver::new(), evaluations: 0 }
    }

    fn at(&mut self, mu: &[f64]) -> Result<GapValue> {
        self.evaluations += 1;
        match self.solver.solve(self.model, mu) {
            Err(Error::BothInfeasible) => Ok(GapValue { pre: f64::INFINITY, post: f64::INFINITY }),
            other => other,
        }
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + t * (y - x)).max(0.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Boundary crossing on the segment `[mu0, mu0 + t1 (v - mu0)]` given the gap
/// is negative at `t0` and nonnegative at `t1`; returns the pre-change
/// exponent at the crossing and the crossing point.
fn bisect_crossing(ev: &mut GapEval, mu0: &[f64], v: &[f64], mut t0: f64, mut t1: f64) -> Result<(f64, Vec<f64>)> {
    for _ in 0..48 {
        let mid = 0.5 * (t0 + t1);
        if ev.at(&lerp(mu0, v, mid))?.gap() >= 0.0 {
            t1 = mid;
        } else {
            t0 = mid;
        }
    }
    let point = lerp(mu0, v, t1);
    let f0 = ev.at(&point)?.pre;
    Ok((f0, point))
}

/// First boundary crossing along the segment from `mu0` to `v`, if any.
fn ray_crossing(ev: &mut GapEval, mu0: &[f64], v: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
    const SCAN: usize = 24;
    let mut prev = 0.0;
    for i in 1..=SCAN {
        let t = i as f64 / SCAN as f64;
        if ev.at(&lerp(mu0, v, t))?.gap() >= 0.0 {
            return bisect_crossing(ev, mu0, v, prev, t).map(Some);
        }
        prev = t;
    }
    Ok(None)
}

fn for_each_grid_point(total: usize, parts: usize, f: &mut impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
        if parts == 1 {
            cur.push(left);
            f(cur)?;
            cur.pop();
            return Ok(());
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, parts - 1, cur, f)?;
            cur.pop();
        }
        Ok(())
    }
    rec(total, parts, &mut Vec::with_capacity(parts), f)
}

/// Grid search over the simplex followed by a local refinement and a push to
/// the boundary along the segment from the pre-change mixture.
pub fn compute_h_grid(model: &NetworkModel, resolution: f64) -> Result<HEstimate> {
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::InvalidArgument(format!("grid resolution {resolution} outside (0, 0.5]")));
    }
    let a = model.alphabet_size().ok_or(Error::UnsupportedKind("operation requires a discrete model"))?;
    let mu0 = model.mixture_distribution(Regime::Pre)?.probs().to_vec();
    let mut ev = GapEval::new(model);
    let steps = (1.0 / resolution).round() as usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |ev: &mut GapEval, mu: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| -> Result<()> {
        let g = ev.at(&mu)?;
        if g.gap() >= 0.0 && g.pre.is_finite() && best.as_ref().is_none_or(|b| g.pre < b.0) {
            *best = Some((g.pre, mu));
        }
        Ok(())
    };
    for_each_grid_point(steps, a, &mut |c| {
        let mu: Vec<f64> = c.iter().map(|&x| x as f64 / steps as f64).collect();
        consider(&mut ev, mu, &mut best)
    })?;
    let Some((_, centre)) = best.clone() else {
        return Err(Error::DegenerateModel(format!(
            "no grid point at resolution {resolution} favours the post-change exponent"
        )));
    };
    // local pass at a tenth of the step, last coordinate absorbing the rest
    let fine = resolution / 10.0;
    let span = 10i64;
    let dims = a - 1;
    let mut offsets = vec![-span; dims];
    loop {
        let mut mu = centre.clone();
        let mut ok = true;
        for (d, &o) in offsets.iter().enumerate() {
            mu[d] += o as f64 * fine;
            mu[a - 1] -= o as f64 * fine;
        }
        for v in mu.iter_mut() {
            if *v < -1e-12 {
                ok = false;
            }
            *v = v.max(0.0);
        }
        if ok {
            let s: f64 = mu.iter().sum();
            mu.iter_mut().for_each(|v| *v /= s);
            consider(&mut ev, mu, &mut best)?;
        }
        let mut d = 0;
        while d < dims {
            offsets[d] += 1;
            if offsets[d] <= span {
                break;
            }
            offsets[d] = -span;
            d += 1;
        }
        if d == dims {
            break;
        }
    }
    let (mut f0, mut point) = best.expect("grid minimum exists");
    if ev.at(&mu0)?.gap() < 0.0 {
        let (fb, pb) = bisect_crossing(&mut ev, &mu0, &point.clone(), 0.0, 1.0)?;
        if fb < f0 {
            f0 = fb;
            point = pb;
        }
    }
    Ok(HEstimate { h: model.n() as f64 * f0, argmin: point, conservative: false })
}

fn softmax(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut v: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Boundary search along rays from the pre-change mixture, refined by a
/// pattern search over ray directions. Returns the raw estimate without the
/// safety factor.
pub fn compute_h_boundary(model: &NetworkModel) -> Result<HEstimate> {
    let a = model.alphabet_size().ok_or(Error::UnsupportedKind("operation requires a discrete model"))?;
    let mu0 = model.mixture_distribution(Regime::Pre)?.probs().to_vec();
    let mu1 = model.mixture_distribution(Regime::Post)?.probs().to_vec();
    let mut ev = GapEval::new(model);
    let mut targets: Vec<Vec<f64>> = vec![mu1];
    for x in 0..a {
        let mut e = vec![0.0; a];
        e[x] = 1.0;
        targets.push(e);
    }
    for x in 0..a {
        for y in x + 1..a {
            let mut e = vec![0.0; a];
            e[x] = 0.5;
            e[y] = 0.5;
            targets.push(e);
        }
    }
    let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
    for v in &targets {
        if let Some((f0, _)) = ray_crossing(&mut ev, &mu0, v)? {
            found.push((f0, v.clone()));
        }
    }
    if found.is_empty() {
        return Err(Error::DegenerateModel("no ray from the pre-change mixture reaches the post-change region".into()));
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best_f = f64::INFINITY;
    let mut best_point = Vec::new();
    for (_, v) in found.iter().take(3) {
        let mut theta: Vec<f64> = v.iter().map(|p| (p + 1e-6).ln()).collect();
        let mut current = ray_crossing(&mut ev, &mu0, &softmax(&theta))?;
        let mut step = 1.0;
        let mut budget = 400usize;
        while step > 1e-3 && budget > 0 {
            let mut improved = false;
            for d in 0..a {
                for sign in [1.0, -1.0] {
                    if budget == 0 {
                        break;
                    }
                    budget -= 1;
                    let mut cand = theta.clone();
                    cand[d] += sign * step;
                    if let Some(c) = ray_crossing(&mut ev, &mu0, &softmax(&cand))? {
                        if current.as_ref().is_none_or(|cur| c.0 < cur.0) {
                            current = Some(c);
                            theta = cand;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if let Some((f, p)) = current {
            if f < best_f {
                best_f = f;
                best_point = p;
            }
        }
    }
    log::debug!("boundary search used {} gap evaluations", ev.evaluations);
    Ok(HEstimate { h: model.n() as f64 * best_f, argmin: best_point, conservative: false })
}

/// `h` for the WARL bound of the efficient test. Small alphabets use the
/// grid at `resolution`; larger ones use the boundary search scaled by
/// [`SAFETY_FACTOR`].
pub fn compute_h(model: &NetworkModel, resolution: f64) -> Result<HEstimate> {
    let a = model.alphabet_size().ok_or(Error::UnsupportedKind("operation requires a discrete model"))?;
    let est = if a <= GRID_MAX_ALPHABET {
        compute_h_grid(model, resolution)?
    } else {
        let raw = compute_h_boundary(model)?;
        HEstimate { h: raw.h * SAFETY_FACTOR, conservative: true, ..raw }
    };
    if !(est.h > 0.0) {
        return Err(Error::DegenerateModel(format!("h estimate {} is not positive", est.h)));
    }
    Ok(est)
}

// ---------------------------------------------------------------------------
// Threshold calibration
// ---------------------------------------------------------------------------

/// Number of types of `m` samples over `alphabet_size` symbols.
pub fn type_count(m: u64, alphabet_size: usize) -> BigUint {
    if alphabet_size == 0 {
        return BigUint::from(0u32);
    }
    let r = (alphabet_size - 1) as u64;
    num_integer::binomial(BigUint::from(m + r), BigUint::from(r))
}

fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln C(m + r, r)` in floating point.
fn ln_type_count(m: u64, alphabet_size: usize) -> f64 {
    let r = alphabet_size as u64 - 1;
    (1..=r).map(|i| ((m + i) as f64 / i as f64).ln()).sum()
}

/// `ln[(m+1) prod_k |P_{m n_k}|]` with `m = ceil(b/h)`.
fn ln_denominator(m: u64, group_sizes: &[usize], alphabet_size: usize) -> f64 {
    ((m + 1) as f64).ln() + group_sizes.iter().map(|&nk| ln_type_count(m * nk as u64, alphabet_size)).sum::<f64>()
}

fn ln_denominator_exact(m: u64, group_sizes: &[usize], alphabet_size: usize) -> f64 {
    let mut d = BigUint::from(m + 1);
    for &nk in group_sizes {
        d *= type_count(m * nk as u64, alphabet_size);
    }
    ln_big(&d)
}

/// Natural log of the guaranteed WARL `e^b / ((m+1) prod_k |P_{m n_k}|)` with
/// `m = ceil(b/h)`.
pub fn ln_warl_bound(b: f64, h: f64, group_sizes: &[usize], alphabet_size: usize) -> f64 {
    let m = (b / h).ceil().max(0.0) as u64;
    b - ln_denominator_exact(m, group_sizes, alphabet_size)
}

/// Calibrated threshold for the efficient test.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub threshold_b: f64,
    pub h: f64,
    /// Bound on the WARL actually achieved at `threshold_b`.
    pub guaranteed_warl: f64,
    pub conservative_flag: bool,
}

/// Smallest `b` whose WARL bound reaches `gamma`, for a given `h`.
///
/// With `m = ceil(b/h)` the bound is `e^b / D_m` on `((m-1)h, mh]`, so the
/// smallest admissible `b` in interval `m` is `ln gamma + ln D_m` when that is
/// at most `mh`. Because `ln D_m` is concave in `m`, the intervals that fail
/// form a prefix, and the first success is found by bisection over `m`.
pub fn calibrate_threshold_with_h(
    group_sizes: &[usize],
    alphabet_size: usize,
    h: f64,
    gamma: f64,
) -> Result<CalibrationResult> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("target WARL {gamma} must exceed 1")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("h = {h} must be positive")));
    }
    if alphabet_size < 2 || group_sizes.is_empty() {
        return Err(Error::InvalidArgument("need at least two symbols and one group".into()));
    }
    let ln_gamma = gamma.ln();
    let n: usize = group_sizes.iter().sum();
    let upper = ln_gamma + 200.0 * (1.0 + (n * alphabet_size) as f64).ln();
    let fails = |m: u64| ln_gamma + ln_denominator(m, group_sizes, alphabet_size) > m as f64 * h;
    let m_lo = ((ln_gamma / h).ceil() as u64).max(1);
    let m_max = (upper / h).ceil() as u64 + 1;
    let m = if !fails(m_lo) {
        m_lo
    } else {
        let mut lo = m_lo;
        let mut hi = m_lo.max(1);
        loop {
            hi = hi.saturating_mul(2).min(m_max);
            if !fails(hi) {
                break;
            }
            if hi == m_max {
                return Err(Error::Calibration(format!(
                    "no threshold in [{ln_gamma:.6}, {upper:.6}] reaches WARL {gamma} with h = {h}"
                )));
            }
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if fails(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let ln_d = ln_denominator_exact(m, group_sizes, alphabet_size);
    let mut b = ln_gamma + ln_d;
    // nudge past rounding so the bound holds in floating point
    while b - ln_d < ln_gamma || (b - ln_d).exp() < gamma {
        b = f64::from_bits(b.to_bits() + 1);
    }
    if b > upper {
        return Err(Error::Calibration(format!(
            "threshold {b:.6} lies above the search bracket end {upper:.6}"
        )));
    }
    let ln_bound = ln_warl_bound(b, h, group_sizes, alphabet_size);
    Ok(CalibrationResult { threshold_b: b, h, guaranteed_warl: ln_bound.exp(), conservative_flag: false })
}

/// Calibrated threshold for the efficient test on a discrete model, with `h`
/// from [`compute_h`] at the default resolution.
pub fn calibrate_threshold(model: &NetworkModel, gamma: f64) -> Result<CalibrationResult> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidArgument(format!("target WARL {gamma} must exceed 1")));
    }
    let a = model.alphabet_size().ok_or(Error::UnsupportedKind("operation requires a discrete model"))?;
    let est = compute_h(model, DEFAULT_RESOLUTION)?;
    let mut out = calibrate_threshold_with_h(model.group_sizes(), a, est.h, gamma)?;
    out.conservative_flag = est.conservative;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exact mixture KL
// ---------------------------------------------------------------------------

/// Largest type space `exact_mixture_kl` will enumerate.
pub const MAX_TYPES: u128 = crate::mixture::MAX_TYPE_CLASSES;

/// KL divergence in nats between the labeling-averaged post- and pre-change
/// laws of one batch, summed over batch types.
pub fn exact_mixture_kl(model: &NetworkModel) -> Result<f64> {
    let post = type_class_distribution(model, Regime::Post, MAX_TYPES)?;
    let pre = type_class_distribution(model, Regime::Pre, MAX_TYPES)?;
    let pre: std::collections::HashMap<Vec<u32>, f64> = pre.into_iter().collect();
    let mut acc = CompensatedSum::default();
    for (counts, lp1) in post {
        match pre.get(&counts) {
            Some(&lp0) => acc.add(lp1.exp() * (lp1 - lp0)),
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(acc.value().max(0.0))
}
