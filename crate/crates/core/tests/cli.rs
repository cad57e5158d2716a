use std::path::Path;
use std::process::Command;

use ssalt::config::RunConfig;
use ssalt::fixtures::solar_lighting_design;
use ssalt::io::read_dataset_csv;

fn ssalt(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ssalt")).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fit_prints_fixture_estimates() {
    let (ok, stdout, _) = ssalt(&["fit"]);
    assert!(ok);
    for v in ["4.50633", "-4.71300", "0.769238", "2.04099", "-1.22772", "1.53199"] {
        assert!(stdout.contains(v), "{v} missing from\n{stdout}");
    }
}

#[test]
fn bad_rows_are_reported_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    let (ok, _, err) = ssalt(&["fit", "--data", &empty]);
    assert!(!ok && err.contains("line 1"), "{err}");
    let bad = write(dir.path(), "bad.csv", "time,cause\n1.0,1\n2.0,3\n");
    let (ok, _, err) = ssalt(&["fit", "--data", &bad]);
    assert!(!ok && err.contains("line 3"), "{err}");
}

#[test]
fn config_rejection_names_module() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[sampler]\ntarget_accept = 1.5\n");
    let (ok, _, err) = ssalt(&["diagnose", "--config", &cfg]);
    assert!(!ok && err.contains("mcmc") && err.contains("target_accept"), "{err}");
    let cfg = write(dir.path(), "d.toml", "[planning]\ntau_range = [0.05, 7.0]\n");
    let (ok, _, err) = ssalt(&["plan1d", "--config", &cfg]);
    assert!(!ok && err.contains("design-criteria"), "{err}");
}

#[test]
fn simulate_then_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let (ok, _, err) = ssalt(&["simulate", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(ok, "{err}");
    let design = RunConfig::default().design().unwrap();
    let data = read_dataset_csv(&out.join("data.csv"), design).unwrap();
    let (again, _) = ssalt::cli::cmd_simulate(
        &RunConfig {
            seed: 4,
            ..Default::default()
        },
        None,
    )
    .unwrap();
    assert_eq!(data, again);
    assert_eq!(design, solar_lighting_design());
}

#[test]
fn diagnose_output_does_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[sampler]\niter_warmup = 150\niter_sampling = 100\n[diagnose]\nmax_lag = 5\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let (ok1, s1, _) = ssalt(&["diagnose", "--config", &cfg, "--threads", "1", "--out", a.to_str().unwrap()]);
    let (ok2, s2, _) = ssalt(&["diagnose", "--config", &cfg, "--threads", "3", "--out", b.to_str().unwrap()]);
    assert!(ok1 && ok2);
    assert_eq!(s1, s2);
    for f in ["draws.csv", "acf.csv", "posterior_summary.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let acf = std::fs::read_to_string(a.join("acf.csv")).unwrap();
    // 23 quantities x 3 chains x 5 lags
    assert_eq!(acf.lines().count(), 1 + 23 * 3 * 5);
}

#[test]
fn raw_grid_mode_finds_injected_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1,tau,c1_raw,c2_raw\n");
    for k in 0..9 {
        let t = 0.05 + k as f64 * 5.9 / 8.0;
        csv.push_str(&format!("0.5,{t},{},{}\n", (t - 2.5).powi(2), (t - 4.0).powi(2)));
    }
    let raw = write(dir.path(), "raw.csv", &csv);
    let out = dir.path().join("plan");
    let (ok, stdout, err) = ssalt(&["plan1d", "--raw", &raw, "--out", out.to_str().unwrap()]);
    assert!(ok, "{err}");
    assert!(stdout.contains("C1") && stdout.contains("C2"));
    let optima = std::fs::read_to_string(out.join("optima.csv")).unwrap();
    let taus: Vec<f64> = optima.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!((taus[0] - 2.5).abs() < 5.9 / 499.0 + 1e-12, "{taus:?}");
    assert!((taus[1] - 4.0).abs() < 5.9 / 499.0 + 1e-12, "{taus:?}");
    assert!(out.join("smoothed_raw.csv").exists());
}

#[test]
fn elicited_prior_loads_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("el");
    let cfg = write(dir.path(), "c.toml", "[elicit]\nn_reps = 50\n");
    let (ok, _, err) = ssalt(&["elicit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(ok, "{err}");
    for f in ["prior_I.toml", "prior_II.toml", "prior_III.toml", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let loaded = RunConfig::load(&out.join("prior_II.toml")).unwrap();
    assert!(loaded.prior.gamma.is_some());
}
