mod common;

use anonqcd::detectors::EfficientDetector;
use anonqcd::exponent::GapSolver;
use anonqcd::mixture::mixture_log_ratio;
use anonqcd::model::{generate_batch, LabelSchedule, Samples};
use anonqcd::rng::{stream, StreamRole};
use anonqcd::{DetectorKind, Error, NetworkModel, ObservationBatch, Regime};
use common::binomial_pair;
use proptest::prelude::*;

/// `len` batches, switching to post-change laws after `change` steps.
fn path(model: &NetworkModel, seed: u64, len: usize, change: usize) -> Vec<ObservationBatch> {
    let mut rng = stream(seed, 0, StreamRole::Samples);
    let mut sched = LabelSchedule::uniform(seed).start(model).unwrap();
    (0..len)
        .map(|t| generate_batch(model, &mut sched, if t < change { Regime::Pre } else { Regime::Post }, &mut rng))
        .collect()
}

fn stop_time(model: &NetworkModel, kind: DetectorKind, b: f64, batches: &[ObservationBatch]) -> Option<u64> {
    let mut det = kind.build(model, b).unwrap();
    for batch in batches {
        det.update(batch).unwrap();
        if det.stopped() {
            return det.stop_time();
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mixture_cusum_is_max_of_partial_sums(seed in any::<u64>(), change in 0usize..40) {
        let model = binomial_pair(2);
        let batches = path(&model, seed, 40, change);
        let incs: Vec<f64> = batches.iter().map(|b| mixture_log_ratio(&model, b).unwrap().value).collect();
        let mut det = DetectorKind::Mixture.build(&model, f64::INFINITY).unwrap();
        for (t, batch) in batches.iter().enumerate() {
            let w = det.update(batch).unwrap();
            let brute = (0..=t).map(|j| incs[j..=t].iter().sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((w - brute).abs() < 1e-9);
        }
    }

    #[test]
    fn stop_time_grows_with_the_threshold(seed in any::<u64>(), b in 0.5f64..6.0, db in 0.0f64..3.0) {
        let model = binomial_pair(1);
        let batches = path(&model, seed, 300, 100);
        for kind in DetectorKind::ALL {
            let lo = stop_time(&model, kind, b, &batches).unwrap_or(u64::MAX);
            let hi = stop_time(&model, kind, b + db, &batches).unwrap_or(u64::MAX);
            prop_assert!(lo <= hi, "{kind}: {lo} > {hi}");
        }
    }

    #[test]
    fn efficient_window_invariants(seed in any::<u64>(), change in 0usize..30) {
        let model = binomial_pair(1);
        let n = model.n() as u64;
        let mut det = EfficientDetector::new(&model, f64::INFINITY).unwrap();
        let mut prev = 0.0;
        for (i, batch) in path(&model, seed, 30, change).iter().enumerate() {
            det.step(batch).unwrap();
            let s = det.state();
            let t = i as u64 + 1;
            if prev <= 0.0 {
                prop_assert_eq!(s.nu_hat, t);
            }
            prop_assert_eq!(s.t_hat, t - s.nu_hat + 1);
            prop_assert_eq!(s.window_counts.total(), s.t_hat * n);
            let gap = GapSolver::cold().solve(&model, &s.window_counts.normalized()).unwrap().gap();
            prop_assert!((s.statistic - (s.t_hat * n) as f64 * gap).abs() < 1e-8 * s.statistic.abs().max(1.0));
            prev = s.statistic;
        }
    }

    #[test]
    fn statistics_ignore_order_within_batches(seed in any::<u64>()) {
        let model = binomial_pair(2);
        for kind in DetectorKind::ALL {
            let mut a = kind.build(&model, f64::INFINITY).unwrap();
            let mut b = kind.build(&model, f64::INFINITY).unwrap();
            for batch in path(&model, seed, 20, 10) {
                let mut xs = batch.symbols().unwrap().to_vec();
                xs.reverse();
                xs.rotate_left(1);
                let u = a.update(&batch).unwrap();
                let v = b.update(&ObservationBatch::unsorted(batch.time(), Samples::Discrete(xs))).unwrap();
                prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(1.0));
            }
        }
    }
}

#[test]
fn stopped_detectors_refuse_updates() {
    let model = binomial_pair(1);
    let batches = path(&model, 3, 400, 0);
    for kind in DetectorKind::ALL {
        let mut det = kind.build(&model, 2.0).unwrap();
        let mut i = 0;
        while !det.stopped() {
            det.update(&batches[i]).unwrap();
            i += 1;
        }
        let (w, t) = (det.statistic(), det.time());
        assert!(matches!(det.update(&batches[i]), Err(Error::AlreadyStopped(s)) if s == t));
        assert_eq!((det.statistic(), det.time()), (w, t));
        det.reset();
        assert!(!det.stopped() && det.time() == 0);
    }
}
