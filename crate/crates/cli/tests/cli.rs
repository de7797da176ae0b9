use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_anonqcd");

const BINOMIAL: &str = "model.groups = 1,1
model.pre = binomial(10,0.5); binomial(10,0.5)
model.post = binomial(10,0.3); binomial(10,0.7)
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.conf");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of `trajectory.csv` as `(t, statistic, stopped)`.
fn trajectory(dir: &Path) -> Vec<(u64, f64, bool)> {
    let text = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,statistic,nu_hat,stopped"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[3] == "1")
        })
        .collect()
}

#[test]
fn presets_list_names_every_preset() {
    let o = run(&["presets", "list"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    for name in ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"] {
        assert!(out.lines().any(|l| l.split_whitespace().next() == Some(name)), "missing {name}");
    }
}

#[test]
fn fig1_path_crosses_after_the_change() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig1");
    let o = run(&["path", "--preset", "fig1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = trajectory(&out);
    assert!(rows.iter().filter(|r| r.0 < 500).all(|r| r.1 < 5.0 && !r.2));
    let last = rows.last().unwrap();
    assert!(last.2 && last.0 > 500 && last.1 >= 5.0);
    let svg = fs::read_to_string(out.join("path.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn path_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = run(&["path", "--preset", "fig6", "--seed", "11", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());
}

#[test]
fn no_change_with_large_threshold_never_stops() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{BINOMIAL}detectors = mixture\nthreshold = 60\nscenario.change_point = none\nscenario.horizon = 400\n"),
    );
    let out = tmp.path().join("p");
    let o = run(&["path", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = trajectory(&out);
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| !r.2));
}

#[test]
fn single_threshold_sweep_gives_one_row_per_detector() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{BINOMIAL}detectors = mixture, efficient\nsweep.b = 2\nsweep.warl_horizon = 20000\nsweep.wadd_horizon = 2000\n"),
    );
    let out = tmp.path().join("s");
    let o = run(&["sweep", "--config", &cfg, "--reps", "100", "--threads", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "detector,b,warl,warl_se,wadd,wadd_se,reps,censored");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("mixture,") && lines[2].starts_with("efficient,"));
    assert!(fs::read_to_string(out.join("sweep.svg")).unwrap().contains("<circle"));
}

#[test]
fn calibrate_fig6_meets_the_target() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["calibrate", "--preset", "fig6", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("calibration.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let b: f64 = row[1].parse().unwrap();
    let warl: f64 = row[3].parse().unwrap();
    assert!(b.is_finite() && b > 0.0);
    assert!(warl >= 1e3);
}

#[test]
fn calibrate_rejects_small_gamma_and_gaussian_models() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{BINOMIAL}threshold = auto\nthreshold.gamma = 1\n"));
    let o = run(&["calibrate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[config]"));

    let cfg = write_config(
        tmp.path(),
        "model.kind = gaussian\nmodel.groups = 1,1\nmodel.pre = normal(0,1); normal(2,1)\nmodel.post = normal(0.5,1); normal(1.5,1)\nthreshold = auto\nthreshold.gamma = 100\n",
    );
    let o = run(&["calibrate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unsupported model kind"), "{}", stderr(&o));
}

#[test]
fn bench_single_size_creates_missing_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{BINOMIAL}bench.blocks = 3\nbench.block_steps = 10\nbench.warmup = 5\n"));
    let out = tmp.path().join("deep").join("er");
    let o = run(&["bench", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(out.join("bench.svg").exists());
}

#[test]
fn unknown_keys_and_missing_config_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{BINOMIAL}sweep.colour = blue\n"));
    let o = run(&["sweep", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown key"));

    let o = run(&["path"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[usage]"));

    let o = run(&["path", "--preset", "nope"]);
    assert!(!o.status.success());
}
