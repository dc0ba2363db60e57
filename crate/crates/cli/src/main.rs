use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sfs_core::config::{builtin_target, RunConfig};
use sfs_core::drift::{estimate_regularity, DriftMode, ProbeGrid};
use sfs_core::harness::{
    compare_samplers, drift_check, write_comparison, write_experiment, run_experiment, ExperimentPlan,
};
use sfs_core::io::{ensure_dir, write_batch_csv, write_json, write_text};
use sfs_core::metrics::compare_to_ground_truth;
use sfs_core::sampler::EpsSchedule;
use sfs_core::{sfs_run, SfsError};

#[derive(Parser)]
#[command(name = "sfs", version, about = "Schrödinger–Föllmer sampler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw terminal samples; writes samples.csv and samples.json.
    Sample(Common),
    /// Compare both Monte-Carlo drift estimators with the closed form on a grid.
    DriftCheck(Common),
    /// Run the `[experiment]` sweep; writes plan.json, cells.csv, summary.json.
    Sweep(Common),
    /// SFS against unadjusted Langevin at matched budget.
    Compare(Common),
    /// Empirical drift growth and continuity constants on a probe grid.
    Regularity(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; replaces the one in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Euler–Maruyama steps K.
    #[arg(long)]
    steps: Option<usize>,
    /// Inner Monte-Carlo sample size m.
    #[arg(long)]
    mc_size: Option<usize>,
    /// Number of particles n.
    #[arg(long)]
    particles: Option<usize>,
    /// none | fixed:<v> | log | power
    #[arg(long, value_parser = parse_eps_rule)]
    eps_rule: Option<EpsSchedule>,
    /// Output directory.
    #[arg(long, default_value = "sfs-out")]
    out: PathBuf,
}

fn parse_eps_rule(s: &str) -> Result<EpsSchedule, String> {
    s.parse::<EpsSchedule>().map_err(|e| e.to_string())
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, SfsError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(k) = self.steps {
            cfg.sampler.steps = k;
        }
        if let Some(m) = self.mc_size {
            cfg.sampler.mc_size = m;
        }
        if let Some(n) = self.particles {
            cfg.sampler.particles = n;
        }
        if let Some(rule) = &self.eps_rule {
            cfg.sampler.eps_rule = rule.to_string();
        }
        Ok(cfg)
    }
}

/// Process exit code per error kind; 2 is left to argument parsing.
fn exit_code(e: &SfsError) -> u8 {
    match e {
        SfsError::ConfigParse { .. } => 3,
        SfsError::Io { .. } => 4,
        SfsError::UnknownTarget(_) => 5,
        SfsError::Invalid(_) | SfsError::Domain(_) => 6,
        SfsError::Unsupported(_) => 7,
        SfsError::DriftSingularity { .. } | SfsError::NonFinite { .. } => 8,
        SfsError::Budget { .. } => 9,
        SfsError::Serialize(_) => 10,
    }
}

fn error_json(e: &SfsError) -> serde_json::Value {
    let mut body = json!({ "kind": e.kind(), "message": e.to_string(), "exit_code": exit_code(e) });
    match e {
        SfsError::Io { path, .. } | SfsError::ConfigParse { path, .. } => {
            body["path"] = json!(path.display().to_string());
        }
        SfsError::DriftSingularity { t, x, particle, step, .. } => {
            body["t"] = json!(t);
            body["x"] = json!(x);
            body["particle"] = json!(particle);
            body["step"] = json!(step);
        }
        SfsError::NonFinite { particle, step, state } => {
            body["particle"] = json!(particle);
            body["step"] = json!(step);
            body["state"] = json!(state.iter().map(|v| v.to_string()).collect::<Vec<_>>());
        }
        _ => {}
    }
    json!({ "error": body })
}

fn write_resolved(out: &Path, cfg: &RunConfig) -> Result<(), SfsError> {
    ensure_dir(out)?;
    write_text(&out.join("resolved.toml"), &cfg.to_toml_string()?)
}

fn sample(args: &Common) -> Result<serde_json::Value, SfsError> {
    let cfg = args.resolve()?;
    let target = cfg.target.build()?;
    let sampler = cfg.sampler.to_sampler_config(&target, cfg.seed)?;
    write_resolved(&args.out, &cfg)?;
    let batch = sfs_run(&sampler, &target)?;
    let reference = sampler.effective_target(&target)?;
    let metrics = match reference.ground_truth() {
        Some(_) => Some(compare_to_ground_truth(&batch.samples, &reference, cfg.seed ^ 0x5f5f, 32)?),
        None => None,
    };
    let csv = args.out.join("samples.csv");
    write_batch_csv(&csv, &batch)?;
    let sidecar = json!({
        "config": cfg,
        "sampler": sampler,
        "config_digest": batch.config_digest,
        "seed": batch.seed,
        "n": batch.samples.len(),
        "dim": batch.samples.dim(),
        "timings": { "wallclock_seconds": batch.wallclock },
        "second_moments": batch.trajectories.as_ref().map(|t| t.second_moments()),
        "metrics": metrics,
    });
    write_json(&args.out.join("samples.json"), &sidecar)?;
    Ok(json!({ "samples": csv.display().to_string(), "n": batch.samples.len(), "wallclock_seconds": batch.wallclock }))
}

fn drift_check_cmd(args: &Common) -> Result<serde_json::Value, SfsError> {
    let cfg = args.resolve()?;
    let target = cfg.target.build()?;
    let grid = cfg.drift_check.clone().unwrap_or_default();
    write_resolved(&args.out, &cfg)?;
    let m = cfg.sampler.mc_size;
    let mut reports = Vec::new();
    let mut csv = String::from("estimator,x,t,exact,estimate,se,z\n");
    for mode in [DriftMode::McGrad { m }, DriftMode::McStein { m }] {
        let report = drift_check(&target, mode, &grid, cfg.seed)?;
        for r in &report.rows {
            csv.push_str(&format!("{},{},{},{},{},{},{}\n", report.mode, r.x, r.t, r.exact, r.estimate, r.se, r.z));
        }
        reports.push(report);
    }
    write_text(&args.out.join("drift_check.csv"), &csv)?;
    let summary: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "mode": r.mode,
                "rms": r.rms,
                "mse": r.mse,
                "mean_error": r.mean_error,
                "mean_error_se": r.mean_error_se,
                "max_abs_z": r.max_abs_z,
                "within_4_se": r.within_4_se,
            })
        })
        .collect();
    write_json(&args.out.join("drift_check.json"), &json!({ "grid": grid, "seed": cfg.seed, "reports": reports }))?;
    Ok(json!({ "drift_check": summary }))
}

fn plan_from(cfg: &RunConfig) -> Result<ExperimentPlan, SfsError> {
    let exp = cfg
        .experiment
        .as_ref()
        .ok_or_else(|| SfsError::invalid("this subcommand needs an [experiment] section"))?;
    let target_ref = exp.target_ref(&cfg.target);
    let probe = match &exp.target {
        Some(name) => builtin_target(name, cfg.target.dim)?.build()?,
        None => cfg.target.build()?,
    };
    let mut plan = ExperimentPlan::new(target_ref, exp.sweep_axis()?, exp.replications, cfg.sampler.to_sampler_config(&probe, cfg.seed)?);
    plan.n_proj = exp.n_proj;
    plan.ula = exp.ula;
    if let Some(grid) = &cfg.drift_check {
        plan.drift_grid = grid.clone();
    }
    Ok(plan)
}

fn sweep(args: &Common) -> Result<serde_json::Value, SfsError> {
    let cfg = args.resolve()?;
    let plan = plan_from(&cfg)?;
    write_resolved(&args.out, &cfg)?;
    let results = run_experiment(&plan)?;
    write_experiment(&args.out, &plan, &results)?;
    Ok(serde_json::to_value(&results.summary).map_err(|e| SfsError::Serialize(e.to_string()))?)
}

fn compare(args: &Common) -> Result<serde_json::Value, SfsError> {
    let cfg = args.resolve()?;
    let plan = plan_from(&cfg)?;
    write_resolved(&args.out, &cfg)?;
    let rows = compare_samplers(&plan)?;
    write_comparison(&args.out, &plan, &rows)?;
    Ok(json!({ "cells": rows.len(), "failed": rows.iter().filter(|r| r.error.is_some()).count() }))
}

fn regularity(args: &Common) -> Result<serde_json::Value, SfsError> {
    let cfg = args.resolve()?;
    let target = cfg.target.build()?;
    let grid: ProbeGrid = cfg.regularity.clone().unwrap_or_default();
    write_resolved(&args.out, &cfg)?;
    let est = estimate_regularity(&target, &grid, cfg.seed)?;
    let declared = target.regularity().map(|r| {
        json!({
            "gamma": r.gamma,
            "xi": r.xi,
            "drift_bound": r.drift_bound(),
            "b_sup_within_bound": est.b_sup_hat <= r.drift_bound(),
        })
    });
    let report = json!({ "estimate": est, "declared": declared });
    write_json(&args.out.join("regularity.json"), &report)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(a) => sample(a),
        Command::DriftCheck(a) => drift_check_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Regularity(a) => regularity(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
