//! Experiment configuration files.
//!
//! One `key = value` pair per line, keys in dotted sections, `#` starts a
//! comment. Lists are comma separated; per-group distribution lists are
//! separated by `;`. Every key is optional except the model. The full key
//! set is [`KEYS`]; anything else is rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anonqcd::model::{binomial_pmf, DiscreteDistribution, GaussianDistribution, LabelSchedule, Labeling};
use anonqcd::montecarlo::BenchPlan;
use anonqcd::{DetectorKind, NetworkModel};

use crate::error::CliError;

/// Accepted keys.
pub const KEYS: &[&str] = &[
    "title",
    "model.kind",
    "model.groups",
    "model.pre",
    "model.post",
    "schedule",
    "schedule.step",
    "scenario.change_point",
    "scenario.horizon",
    "detectors",
    "threshold",
    "threshold.gamma",
    "threshold.resolution",
    "sweep.b",
    "sweep.reps",
    "sweep.warl_horizon",
    "sweep.wadd_horizon",
    "bench.groups",
    "bench.warmup",
    "bench.block_steps",
    "bench.blocks",
    "seed",
    "out",
    "threads",
];

/// Raw key/value pairs, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Override one key, checking it like a file entry.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`"))))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// Calibrated from the run-length bound for `gamma`.
    Auto { gamma: f64, resolution: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub b_grid: Vec<f64>,
    pub reps: usize,
    pub warl_horizon: u64,
    pub wadd_horizon: u64,
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub models: Vec<NetworkModel>,
    pub plan: BenchPlan,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub title: String,
    pub model: NetworkModel,
    pub schedule: LabelSchedule,
    pub change_point: Option<u64>,
    pub horizon: u64,
    pub detectors: Vec<DetectorKind>,
    /// Absent for sweeps and benchmarks, which use their own grids.
    pub threshold: Option<Threshold>,
    pub sweep: SweepSpec,
    pub bench: BenchSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

enum Law {
    Discrete(DiscreteDistribution),
    Gaussian(GaussianDistribution),
}

fn numbers(s: &str, key: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|_| CliError::Config(format!("`{key}`: `{v}` is not a number"))))
        .collect()
}

fn sizes(s: &str, key: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("`{key}`: `{v}` is not a count"))))
        .collect()
}

/// `binomial(trials, p)`, `normal(mean, variance)` or `pmf(p0, p1, ...)`.
fn law(spec: &str, key: &str) -> Result<Law, CliError> {
    let spec = spec.trim();
    let bad = || CliError::Config(format!("`{key}`: cannot parse distribution `{spec}`"));
    let (name, rest) = spec.split_once('(').ok_or_else(bad)?;
    let args = numbers(rest.strip_suffix(')').ok_or_else(bad)?, key)?;
    let law = match (name.trim(), args.as_slice()) {
        ("binomial", &[t, p]) if t >= 0.0 && t.fract() == 0.0 => Law::Discrete(binomial_pmf(t as i64, p)?),
        ("normal", &[m, v]) => Law::Gaussian(GaussianDistribution::new(m, v)?),
        ("pmf", probs) if !probs.is_empty() => Law::Discrete(DiscreteDistribution::new(probs.to_vec())?),
        _ => return Err(bad()),
    };
    Ok(law)
}

fn laws(raw: &RawConfig, key: &str) -> Result<Vec<Law>, CliError> {
    let v = raw.get(key).ok_or_else(|| CliError::Config(format!("missing `{key}`")))?;
    v.split(';').map(|s| law(s, key)).collect()
}

fn build_model(kind: &str, groups: Vec<usize>, pre: Vec<Law>, post: Vec<Law>) -> Result<NetworkModel, CliError> {
    match kind {
        "discrete" => {
            let take = |ls: Vec<Law>| -> Result<Vec<DiscreteDistribution>, CliError> {
                ls.into_iter()
                    .map(|l| match l {
                        Law::Discrete(d) => Ok(d),
                        Law::Gaussian(_) => Err(CliError::Config("normal law in a discrete model".into())),
                    })
                    .collect()
            };
            Ok(NetworkModel::discrete(groups, take(pre)?, take(post)?)?)
        }
        "gaussian" => {
            let take = |ls: Vec<Law>| -> Result<Vec<GaussianDistribution>, CliError> {
                ls.into_iter()
                    .map(|l| match l {
                        Law::Gaussian(d) => Ok(d),
                        Law::Discrete(_) => Err(CliError::Config("discrete law in a gaussian model".into())),
                    })
                    .collect()
            };
            Ok(NetworkModel::gaussian(groups, take(pre)?, take(post)?)?)
        }
        other => Err(CliError::Config(format!("`model.kind`: unknown kind `{other}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let kind = raw.get("model.kind").unwrap_or("discrete");
        let groups = sizes(raw.get("model.groups").ok_or_else(|| CliError::Config("missing `model.groups`".into()))?, "model.groups")?;
        let model = build_model(kind, groups, laws(raw, "model.pre")?, laws(raw, "model.post")?)?;

        let schedule = match raw.get("schedule").unwrap_or("uniform") {
            "uniform" => LabelSchedule::uniform(0),
            "fixed" => LabelSchedule::fixed(Labeling::canonical(model.group_sizes())),
            "cyclic" => LabelSchedule::cyclic(raw.parsed("schedule.step")?.unwrap_or(1)),
            other => return Err(CliError::Config(format!("`schedule`: unknown policy `{other}`"))),
        };

        let change_point = match raw.get("scenario.change_point") {
            None | Some("none") => None,
            Some(v) => Some(
                v.parse::<u64>()
                    .ok()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| CliError::Config(format!("`scenario.change_point`: `{v}` is not a time >= 1")))?,
            ),
        };
        let horizon: u64 = raw.parsed("scenario.horizon")?.unwrap_or(1000);
        if horizon == 0 {
            return Err(CliError::Config("`scenario.horizon` must be positive".into()));
        }

        let detectors = match raw.get("detectors") {
            None => DetectorKind::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .map(|d| d.trim().parse::<DetectorKind>())
                .collect::<Result<Vec<_>, _>>()?,
        };
        if detectors.is_empty() {
            return Err(CliError::Config("`detectors` is empty".into()));
        }

        let gamma: Option<f64> = raw.parsed("threshold.gamma")?;
        if let Some(g) = gamma {
            if !(g > 1.0) {
                return Err(CliError::Config(format!("`threshold.gamma` = {g} must exceed 1")));
            }
        }
        let resolution: f64 = raw.parsed("threshold.resolution")?.unwrap_or(anonqcd::exponent::DEFAULT_RESOLUTION);
        let threshold = match raw.get("threshold") {
            None => None,
            Some("auto") => Some(Threshold::Auto {
                gamma: gamma.ok_or_else(|| CliError::Config("`threshold = auto` needs `threshold.gamma`".into()))?,
                resolution,
            }),
            Some(v) => {
                let b: f64 = v.parse().map_err(|_| CliError::Config(format!("`threshold`: cannot parse `{v}`")))?;
                if !(b > 0.0) {
                    return Err(CliError::Config(format!("`threshold` = {b} must be positive")));
                }
                Some(Threshold::Fixed(b))
            }
        };

        let b_grid = match raw.get("sweep.b") {
            Some(v) => numbers(v, "sweep.b")?,
            None => vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        };
        if b_grid.is_empty() || b_grid.windows(2).any(|w| !(w[0] < w[1])) || b_grid[0] <= 0.0 {
            return Err(CliError::Config("`sweep.b` must be a positive ascending list".into()));
        }
        let sweep = SweepSpec {
            b_grid,
            reps: raw.parsed("sweep.reps")?.unwrap_or(2000),
            warl_horizon: raw.parsed("sweep.warl_horizon")?.unwrap_or(500_000),
            wadd_horizon: raw.parsed("sweep.wadd_horizon")?.unwrap_or(100_000),
        };
        if sweep.reps < anonqcd::montecarlo::MIN_WADD_REPS {
            return Err(CliError::Config(format!(
                "`sweep.reps` must be at least {}",
                anonqcd::montecarlo::MIN_WADD_REPS
            )));
        }

        let bench_models = match raw.get("bench.groups") {
            None => vec![model.clone()],
            Some(v) => v
                .split(';')
                .map(|g| {
                    build_model(kind, sizes(g, "bench.groups")?, laws(raw, "model.pre")?, laws(raw, "model.post")?)
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let defaults = BenchPlan::default();
        let bench = BenchSpec {
            models: bench_models,
            plan: BenchPlan {
                warmup_steps: raw.parsed("bench.warmup")?.unwrap_or(defaults.warmup_steps),
                block_steps: raw.parsed("bench.block_steps")?.unwrap_or(defaults.block_steps),
                blocks: raw.parsed("bench.blocks")?.unwrap_or(defaults.blocks),
                seed: defaults.seed,
            },
        };
        if bench.plan.block_steps == 0 || bench.plan.blocks == 0 {
            return Err(CliError::Config("benchmark needs at least one block of one step".into()));
        }

        let seed: u64 = raw.parsed("seed")?.unwrap_or(1);
        let threads: Option<usize> = raw.parsed("threads")?;
        if threads == Some(0) {
            return Err(CliError::Config("`threads` must be positive".into()));
        }
        Ok(Self {
            title: raw.get("title").unwrap_or("experiment").to_string(),
            model,
            schedule: schedule.reseeded(seed),
            change_point,
            horizon,
            detectors,
            threshold,
            sweep,
            bench: BenchSpec { plan: BenchPlan { seed, ..bench.plan }, ..bench },
            seed,
            out: PathBuf::from(raw.get("out").unwrap_or("out")),
            threads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "model.groups = 1,1\nmodel.pre = binomial(10,0.5); binomial(10,0.5)\nmodel.post = binomial(10,0.3); binomial(10,0.7)\n";

    #[test]
    fn parses_minimal_config() {
        let raw = RawConfig::parse(&format!("{BASE}threshold = 5 # fixed\n")).unwrap();
        let cfg = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.model.n(), 2);
        assert_eq!(cfg.threshold, Some(Threshold::Fixed(5.0)));
        assert_eq!(cfg.detectors.len(), 4);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(matches!(RawConfig::parse("model.colour = red"), Err(CliError::Config(_))));
        let mut raw = RawConfig::parse(BASE).unwrap();
        assert!(raw.set("sweep.bogus", "1").is_err());
    }

    #[test]
    fn auto_threshold_needs_gamma() {
        let raw = RawConfig::parse(&format!("{BASE}threshold = auto\n")).unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
        let raw = RawConfig::parse(&format!("{BASE}threshold = auto\nthreshold.gamma = 1\n")).unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn rejects_mixed_law_families() {
        let raw = RawConfig::parse(
            "model.kind = gaussian\nmodel.groups = 1,1\nmodel.pre = normal(0,1); binomial(3,0.5)\nmodel.post = normal(1,1); normal(0,1)\nthreshold = 2",
        )
        .unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn rejects_bad_grid() {
        let raw = RawConfig::parse(&format!("{BASE}threshold = 2\nsweep.b = 3, 2\n")).unwrap();
        assert!(ExperimentConfig::from_raw(&raw).is_err());
    }
}
