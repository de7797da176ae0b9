#![allow(dead_code)]

use std::io::Write;

use anonqcd::model::{binomial_pmf, DiscreteDistribution, GaussianDistribution};
use anonqcd::{NetworkModel, Regime};
use rand::Rng;

/// Two binomial groups of `half` sensors each: `B(10, .5)` before the change,
/// `B(10, .3)` and `B(10, .7)` after.
pub fn binomial_pair(half: usize) -> NetworkModel {
    binomial_split(half, half)
}

pub fn binomial_split(n1: usize, n2: usize) -> NetworkModel {
    let b = |p| binomial_pmf(10, p).unwrap();
    NetworkModel::discrete(vec![n1, n2], vec![b(0.5), b(0.5)], vec![b(0.3), b(0.7)]).unwrap()
}

/// One sensor per group, `N(0,1) -> N(.5,1)` and `N(2,1) -> N(1.5,1)`.
pub fn gaussian_pair() -> NetworkModel {
    let g = |m| GaussianDistribution::new(m, 1.0).unwrap();
    NetworkModel::gaussian(vec![1, 1], vec![g(0.0), g(2.0)], vec![g(0.5), g(1.5)]).unwrap()
}

pub fn random_pmf<R: Rng>(rng: &mut R, size: usize) -> DiscreteDistribution {
    let w: Vec<f64> = (0..size).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    DiscreteDistribution::new(w.iter().map(|v| v / s).collect()).unwrap()
}

/// Random discrete model with the given group sizes and alphabet; redraws
/// until the two mixtures differ.
pub fn random_model<R: Rng>(rng: &mut R, sizes: Vec<usize>, alphabet: usize) -> NetworkModel {
    loop {
        let pre = (0..sizes.len()).map(|_| random_pmf(rng, alphabet)).collect();
        let post = (0..sizes.len()).map(|_| random_pmf(rng, alphabet)).collect();
        if let Ok(m) = NetworkModel::discrete(sizes.clone(), pre, post) {
            return m;
        }
    }
}

/// Writes one line straight to stderr so it shows up under captured output.
pub fn report(line: &str) {
    let mut err = std::io::stderr();
    let _ = err.write_all(format!("{line}\n").as_bytes());
    let _ = err.flush();
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Joint log-likelihood of `symbols` under every distinct assignment of the
/// positions to groups.
pub fn labeling_log_likelihoods(model: &NetworkModel, regime: Regime, symbols: &[usize]) -> Vec<f64> {
    fn walk(i: usize, acc: f64, symbols: &[usize], laws: &[DiscreteDistribution], left: &mut [usize], out: &mut Vec<f64>) {
        if i == symbols.len() {
            out.push(acc);
            return;
        }
        for k in 0..left.len() {
            if left[k] > 0 {
                left[k] -= 1;
                walk(i + 1, acc + laws[k].log_pmf(symbols[i]), symbols, laws, left, out);
                left[k] += 1;
            }
        }
    }
    let laws = model.discrete_laws(regime).unwrap();
    let mut left = model.group_sizes().to_vec();
    let mut out = Vec::new();
    walk(0, 0.0, symbols, laws, &mut left, &mut out);
    out
}
