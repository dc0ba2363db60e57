use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfs")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

const FLAT: &str = r#"
seed = 3

[target]
dim = 2
kind = "standard-normal"

[sampler]
steps = 10
particles = 10000
"#;

const MIXTURE: &str = r#"
seed = 5

[target]
dim = 1
kind = "mixture"
weights = [0.5, 0.5]
means = [[-2.0], [2.0]]

[sampler]
steps = 20
particles = 500
mc_size = 10000

[drift_check]
points = 9
times = [0.0, 0.5, 0.99]
replications = 16
"#;

fn error_body(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str::<serde_json::Value>(line).expect("error is JSON")["error"].clone()
}

#[test]
fn sample_flat_target_passes_moment_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT);
    let out = dir.path().join("out");
    let res = sfs(&["sample", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("samples.csv")).unwrap();
    // two comment lines and a header
    assert_eq!(csv.lines().count(), 10_000 + 3);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("samples.json")).unwrap()).unwrap();
    let n = 10_000f64;
    for c in sidecar["metrics"]["moment_errors"]["coordinates"].as_array().unwrap() {
        assert!(c["mean_error"].as_f64().unwrap().abs() < 4.0 / n.sqrt());
        assert!(c["variance_error"].as_f64().unwrap().abs() < 4.0 * (2.0 / n).sqrt());
    }
    assert!(sidecar["timings"]["wallclock_seconds"].as_f64().is_some());
}

#[test]
fn resolved_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT);
    let first = dir.path().join("a");
    let res = sfs(&[
        "sample", "--config", &cfg, "--seed", "99", "--steps", "4", "--particles", "300", "--out",
        first.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let resolved = first.join("resolved.toml");
    let text = fs::read_to_string(&resolved).unwrap();
    assert!(text.contains("seed = 99") && text.contains("steps = 4"));
    let second = dir.path().join("b");
    assert!(sfs(&["sample", "--config", resolved.to_str().unwrap(), "--out", second.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(first.join("samples.csv")).unwrap(), fs::read(second.join("samples.csv")).unwrap());
}

#[test]
fn drift_check_agrees_with_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MIXTURE);
    let out = dir.path().join("dc");
    let res = sfs(&["drift-check", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("drift_check.json")).unwrap()).unwrap();
    for r in report["reports"].as_array().unwrap() {
        assert!(r["within_4_se"].as_bool().unwrap(), "{r}");
        let (mean, se) = (r["mean_error"].as_f64().unwrap(), r["mean_error_se"].as_f64().unwrap());
        assert!(mean.abs() <= 4.0 * se, "mean error {mean} vs se {se}");
    }
    assert!(out.join("drift_check.csv").exists());
}

#[test]
fn missing_config_names_the_path() {
    let res = sfs(&["sample", "--config", "/nonexistent/run.toml"]);
    assert_eq!(res.status.code(), Some(4));
    let err = error_body(&res);
    assert_eq!(err["kind"], "io");
    assert_eq!(err["path"], "/nonexistent/run.toml");
}

#[test]
fn error_kinds_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let parse = write_config(dir.path(), "seed = \n");
    let res = sfs(&["sample", "--config", &parse, "--out", out]);
    assert_eq!((res.status.code(), error_body(&res)["kind"].clone()), (Some(3), "config-parse".into()));

    let no_seed = write_config(dir.path(), "[target]\ndim = 1\nkind = \"standard-normal\"\n");
    assert_eq!(sfs(&["sample", "--config", &no_seed, "--out", out]).status.code(), Some(3));

    let unknown = write_config(
        dir.path(),
        &format!("{FLAT}\n[experiment]\ntarget = \"banana\"\naxis = \"steps\"\nvalues = [1, 2, 3]\n"),
    );
    let res = sfs(&["sweep", "--config", &unknown, "--out", out]);
    assert_eq!((res.status.code(), error_body(&res)["kind"].clone()), (Some(5), "unknown-target".into()));

    let cfg = write_config(dir.path(), FLAT);
    let res = sfs(&["sample", "--config", &cfg, "--steps", "0", "--out", out]);
    assert_eq!((res.status.code(), error_body(&res)["kind"].clone()), (Some(6), "invalid".into()));

    // exact drift needs a mixture
    let bump = write_config(dir.path(), "seed = 1\n[target]\ndim = 1\nkind = \"bump\"\nradius = 2.0\n[sampler]\ndrift = \"exact\"\n");
    let res = sfs(&["sample", "--config", &bump, "--out", out]);
    assert_eq!((res.status.code(), error_body(&res)["kind"].clone()), (Some(7), "unsupported".into()));

    // the bare bump has f = 0 outside its ball; a single inner sample rarely lands inside it
    let singular = write_config(
        dir.path(),
        "seed = 1\n[target]\ndim = 1\nkind = \"bump\"\nradius = 0.05\n[sampler]\nsteps = 2\nparticles = 50\ndrift = \"mc-grad\"\nmc_size = 1\n",
    );
    let res = sfs(&["sample", "--config", &singular, "--out", out]);
    let err = error_body(&res);
    assert_eq!((res.status.code(), err["kind"].clone()), (Some(8), "drift-singularity".into()));
    assert!(err["particle"].is_u64() && err["step"].is_u64());

    let res = sfs(&["sample", "--config", &cfg, "--eps-rule", "cubic"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn sweep_writes_results_directory_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{MIXTURE}\n[experiment]\naxis = \"steps\"\nvalues = [5, 10, 20]\nreplications = 3\n"
    )
    .replace("mc_size = 10000", "mc_size = 20");
    let cfg = write_config(dir.path(), &body);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = sfs(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for f in ["plan.json", "cells.csv", "summary.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read(a.join("cells.csv")).unwrap(), fs::read(b.join("cells.csv")).unwrap());
    let csv = fs::read_to_string(a.join("cells.csv")).unwrap();
    assert!(csv.starts_with("steps,w2,w2_se,noise_floor"));
    assert_eq!(csv.lines().count(), 4);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert!(summary["trend"]["noise_floors"].as_array().unwrap().len() == 3);
}

#[test]
fn compare_and_regularity_run() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{FLAT}\n[experiment]\naxis = \"steps\"\nvalues = [10, 10, 10]\nreplications = 3\n[experiment.ula]\nstep = 0.05\nburn_in = 5\niterations = 5\n"
    )
    .replace("particles = 10000", "particles = 400");
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("cmp");
    let res = sfs(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("cells.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("ula_w2"));

    // mismatched Langevin budget is a validation error
    let bad = write_config(dir.path(), &body.replace("iterations = 5", "iterations = 6"));
    let res = sfs(&["compare", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(6));

    let reg = dir.path().join("reg");
    let gauss = write_config(dir.path(), "seed = 2\n[target]\ndim = 1\nkind = \"gaussian\"\nmean = [2.0]\n");
    assert!(sfs(&["regularity", "--config", &gauss, "--out", reg.to_str().unwrap()]).status.success());
    let est: serde_json::Value = serde_json::from_str(&fs::read_to_string(reg.join("regularity.json")).unwrap()).unwrap();
    assert!((est["estimate"]["b_sup_hat"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(est["estimate"]["c1_hat"].as_f64().unwrap(), 0.0);
}
