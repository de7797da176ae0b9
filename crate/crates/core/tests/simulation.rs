mod common;

use anonqcd::model::{binomial_pmf, generate_batch, ChangeScenario, DiscreteDistribution, LabelSchedule, Labeling};
use anonqcd::montecarlo::{
    estimate_wadd, estimate_warl, simulate_runs, tradeoff_sweep, write_runs_csv, RunPlan, SweepPlan,
};
use anonqcd::numeric::kl_divergence;
use anonqcd::rng::{stream, StreamRole};
use anonqcd::{DetectorKind, NetworkModel, Regime};
use common::{binomial_pair, gaussian_pair};

fn plan(seed: u64, reps: usize, horizon: u64) -> RunPlan {
    RunPlan { schedule: LabelSchedule::uniform(0), master_seed: seed, reps, horizon }
}

#[test]
fn records_do_not_depend_on_thread_count() {
    let model = binomial_pair(2);
    let scenario = ChangeScenario::new(Some(20), 2000).unwrap();
    let p = plan(42, 64, 2000);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_runs(&model, &DetectorKind::Efficient, 4.0, &scenario, &p).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_runs_csv(&mut a, &one).unwrap();
    write_runs_csv(&mut b, &simulate_runs(&model, &DetectorKind::Efficient, 4.0, &scenario, &p).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stderr_halves_when_reps_quadruple() {
    let model = binomial_pair(1);
    let small = estimate_warl(&model, &DetectorKind::Mixture, 2.5, &plan(7, 500, 100_000)).unwrap().lower_bound;
    let large = estimate_warl(&model, &DetectorKind::Mixture, 2.5, &plan(8, 2000, 100_000)).unwrap().lower_bound;
    let ratio = small.stderr / large.stderr;
    assert!((ratio - 2.0).abs() <= 0.3 * 2.0, "ratio {ratio}");
}

#[test]
fn fixed_and_random_schedules_agree() {
    let model = binomial_pair(2);
    let kind = DetectorKind::Bayesian;
    let fixed = RunPlan {
        schedule: LabelSchedule::fixed(Labeling::canonical(model.group_sizes())),
        ..plan(9, 1000, 100_000)
    };
    let a = estimate_warl(&model, &kind, 3.0, &fixed).unwrap().lower_bound;
    let b = estimate_warl(&model, &kind, 3.0, &plan(10, 1000, 100_000)).unwrap().lower_bound;
    let pooled = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() <= 3.0 * pooled, "{} vs {}", a.mean, b.mean);
}

#[test]
fn sweep_is_monotone_in_the_threshold() {
    let model = binomial_pair(1);
    let sweep_plan = SweepPlan {
        schedule: LabelSchedule::uniform(0),
        master_seed: 11,
        reps: 400,
        warl_horizon: 100_000,
        wadd_horizon: 10_000,
    };
    let kinds = [DetectorKind::Mixture, DetectorKind::Efficient];
    let dets: Vec<&dyn anonqcd::montecarlo::DetectorFactory> = kinds.iter().map(|k| k as _).collect();
    let results = tradeoff_sweep(&model, &dets, &[1.0, 2.0, 3.0, 4.0], &sweep_plan).unwrap();
    assert_eq!(results.len(), 2);
    for r in &results {
        for w in r.rows.windows(2) {
            let se_l = (w[0].warl_se.powi(2) + w[1].warl_se.powi(2)).sqrt();
            let se_d = (w[0].wadd_se.powi(2) + w[1].wadd_se.powi(2)).sqrt();
            assert!(w[1].warl >= w[0].warl - se_l, "{}: {:?}", r.detector, r.rows);
            assert!(w[1].wadd >= w[0].wadd - se_d, "{}: {:?}", r.detector, r.rows);
        }
    }
    assert!(tradeoff_sweep(&model, &[], &[1.0], &sweep_plan).unwrap().is_empty());
}

#[test]
fn single_group_delay_matches_the_kl_rate() {
    let p0 = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
    let p1 = DiscreteDistribution::new(vec![0.6, 0.4]).unwrap();
    let d = kl_divergence(p1.probs(), p0.probs());
    let model = NetworkModel::discrete(vec![1], vec![p0], vec![p1]).unwrap();
    let b = 8.0;
    let wadd = estimate_wadd(&model, &DetectorKind::Mixture, b, &plan(12, 500, 100_000)).unwrap();
    let expected = b / d;
    assert!((wadd.mean - expected).abs() <= 0.15 * expected, "{} vs {expected}", wadd.mean);
}

#[test]
fn gaussian_path_rises_after_the_change() {
    let model = gaussian_pair();
    let scenario = ChangeScenario::new(Some(500), 2000).unwrap();
    let mut rng = stream(1, 0, StreamRole::Samples);
    let mut sched = LabelSchedule::uniform(1).start(&model).unwrap();
    let mut det = DetectorKind::Mixture.build(&model, 5.0).unwrap();
    let mut before = Vec::new();
    while !det.stopped() {
        let t = det.time() + 1;
        let w = det.update(&generate_batch(&model, &mut sched, scenario.regime_at(t), &mut rng)).unwrap();
        if t < 500 {
            before.push(w);
        }
        assert!(t < 2000, "no alarm by the horizon");
    }
    let mean_before = before.iter().sum::<f64>() / before.len() as f64;
    assert!(mean_before < 2.0, "pre-change level {mean_before}");
    assert!(det.stop_time().unwrap() > 500);
}

#[test]
fn binomial_laws_are_normalized() {
    for p in [0.25, 0.3, 0.5, 0.7] {
        let d = binomial_pmf(10, p).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = d.probs().iter().enumerate().map(|(k, q)| k as f64 * q).sum();
        assert!((mean - 10.0 * p).abs() < 1e-12);
    }
    assert!(binomial_pair(1).mixture_distribution(Regime::Pre).is_ok());
}
