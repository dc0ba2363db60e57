//! Experiment orchestration: parameter sweeps with replication, drift
//! estimator checks against the closed form, and SFS-vs-Langevin comparisons.
//!
//! Every accuracy number is reported next to a noise floor: the W2 distance
//! between two independent ground-truth batches of the same size. Results
//! directories contain `plan.json`, `cells.csv` and `summary.json`; the CSV
//! holds no timings so that a rerun with the same seed is byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::batch::Samples;
use crate::config::{builtin_target, DriftCheckSection, TargetConfig};
use crate::drift::{drift_exact, DriftEvaluator, DriftMode};
use crate::error::{Result, SfsError};
use crate::math::{mean, standard_error};
use crate::metrics::{fit_named_rate, moment_report, sliced_w2, wasserstein2_1d, RateFit};
use crate::rng::child_seed;
use crate::sampler::{sfs_run, ula_run, EpsSchedule, SamplerConfig};
use crate::target::TargetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum SweepAxis {
    StepSize(Vec<usize>),
    McSize(Vec<usize>),
    Dimension(Vec<usize>),
    Epsilon(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::StepSize(_) => "steps",
            SweepAxis::McSize(_) => "mc_size",
            SweepAxis::Dimension(_) => "dimension",
            SweepAxis::Epsilon(_) => "epsilon",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::StepSize(v) | SweepAxis::McSize(v) | SweepAxis::Dimension(v) => {
                v.iter().map(|&x| x as f64).collect()
            }
            SweepAxis::Epsilon(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRef {
    Builtin(String),
    Config(TargetConfig),
}

impl TargetRef {
    pub fn resolve(&self, dim: Option<usize>) -> Result<TargetSpec> {
        match self {
            TargetRef::Builtin(name) => builtin_target(name, dim.unwrap_or(1))?.build(),
            TargetRef::Config(cfg) => match dim {
                Some(d) if d != cfg.dim => Err(SfsError::invalid(
                    "the dimension axis needs a builtin target (config targets have a fixed dimension)",
                )),
                _ => cfg.build(),
            },
        }
    }
}

/// Langevin settings for comparisons. `burn_in + iterations` is the number of
/// gradient evaluations per chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlaSettings {
    pub step: f64,
    pub burn_in: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub target: TargetRef,
    pub axis: SweepAxis,
    pub replications: usize,
    pub base: SamplerConfig,
    #[serde(default = "default_proj")]
    pub n_proj: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ula: Option<UlaSettings>,
    #[serde(default)]
    pub drift_grid: DriftCheckSection,
}

fn default_proj() -> usize {
    32
}

impl ExperimentPlan {
    pub fn new(target: TargetRef, axis: SweepAxis, replications: usize, base: SamplerConfig) -> Self {
        Self { target, axis, replications, base, n_proj: default_proj(), ula: None, drift_grid: Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let cells = self.axis.values();
        if cells.len() < 3 {
            return Err(SfsError::invalid(format!(
                "a sweep needs >= 3 cells for rate fitting, got {}",
                cells.len()
            )));
        }
        if self.replications < 3 {
            return Err(SfsError::invalid(format!("a sweep needs >= 3 replications, got {}", self.replications)));
        }
        if self.n_proj == 0 {
            return Err(SfsError::invalid("n_proj must be >= 1"));
        }
        if let SweepAxis::Epsilon(v) = &self.axis {
            if v.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                return Err(SfsError::invalid("epsilon cells must lie in (0, 1)"));
            }
        }
        if !matches!(self.axis, SweepAxis::Dimension(_)) {
            self.target.resolve(None)?;
        }
        for i in 0..cells.len() {
            self.cell_config(i)?.validate()?;
        }
        Ok(())
    }

    fn cell_config(&self, i: usize) -> Result<SamplerConfig> {
        let mut cfg = self.base.clone();
        match &self.axis {
            SweepAxis::StepSize(v) => cfg.steps = v[i],
            SweepAxis::McSize(v) => {
                cfg.drift = match cfg.drift {
                    DriftMode::McStein { .. } => DriftMode::McStein { m: v[i] },
                    _ => DriftMode::McGrad { m: v[i] },
                }
            }
            SweepAxis::Dimension(_) => {}
            SweepAxis::Epsilon(v) => cfg.eps_schedule = EpsSchedule::Fixed(v[i]),
        }
        Ok(cfg)
    }

    fn cell_target(&self, i: usize) -> Result<TargetSpec> {
        match &self.axis {
            SweepAxis::Dimension(v) => self.target.resolve(Some(v[i])),
            _ => self.target.resolve(None),
        }
    }
}

/// W2 between two equal batches: exact in 1-D, sliced otherwise.
pub fn w2_distance(a: &Samples, b: &Samples, n_proj: usize, seed: u64) -> Result<f64> {
    if a.dim() == 1 {
        wasserstein2_1d(a.data(), b.data())
    } else {
        Ok(sliced_w2(a, b, n_proj, seed)?.value)
    }
}

/// One replication: W2 to a fresh ground-truth batch and the matching noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W2Measurement {
    pub w2: f64,
    pub noise_floor: f64,
}

/// Compares `samples` with ground truth drawn from `reference_target`
/// (the unregularized target for ε runs).
pub fn measure_w2(samples: &Samples, reference_target: &TargetSpec, seed: u64, n_proj: usize) -> Result<W2Measurement> {
    let n = samples.len();
    let p = reference_target.dim();
    let a = Samples::new(n, p, reference_target.sample_ground_truth_raw(n, child_seed(seed, 101))?)?;
    let b = Samples::new(n, p, reference_target.sample_ground_truth_raw(n, child_seed(seed, 202))?)?;
    let proj_seed = child_seed(seed, 303);
    Ok(W2Measurement { w2: w2_distance(samples, &a, n_proj, proj_seed)?, noise_floor: w2_distance(&a, &b, n_proj, proj_seed)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub parameter: f64,
    pub w2_mean: f64,
    pub w2_se: f64,
    pub noise_floor: f64,
    pub noise_floor_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub rule: String,
    pub passed: bool,
    pub noise_floors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub axis: String,
    pub cells: usize,
    pub completed: usize,
    pub partial: bool,
    pub rate_fits: Vec<RateFit>,
    pub trend: Option<TrendVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub cells: Vec<CellResult>,
    pub summary: ExperimentSummary,
}

/// `mean[i+1] <= mean[i] + k·sqrt(se[i]² + se[i+1]²)` for consecutive cells.
pub fn non_increasing_within(points: &[(f64, f64)], k: f64) -> bool {
    points.windows(2).all(|w| w[1].0 <= w[0].0 + k * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt())
}

fn run_cell(plan: &ExperimentPlan, i: usize) -> Result<CellResult> {
    let cfg = plan.cell_config(i)?;
    let target = plan.cell_target(i)?;
    let reference = target.unregularized();
    let mut w2 = Vec::with_capacity(plan.replications);
    let mut floors = Vec::with_capacity(plan.replications);
    for r in 0..plan.replications {
        let mut rc = cfg.clone();
        rc.seed = child_seed(cfg.seed, r as u64);
        let batch = sfs_run(&rc, &target)?;
        let m = measure_w2(&batch.samples, &reference, rc.seed, plan.n_proj)?;
        w2.push(m.w2);
        floors.push(m.noise_floor);
    }
    let drift_mse = match (&plan.axis, cfg.drift) {
        (SweepAxis::McSize(_), mode @ (DriftMode::McGrad { .. } | DriftMode::McStein { .. }))
            if target.mixture_params().is_some() =>
        {
            Some(drift_check(&target, mode, &plan.drift_grid, cfg.seed)?.mse)
        }
        _ => None,
    };
    Ok(CellResult {
        parameter: plan.axis.values()[i],
        w2_mean: mean(&w2),
        w2_se: standard_error(&w2).unwrap_or(0.0),
        noise_floor: mean(&floors),
        noise_floor_se: standard_error(&floors).unwrap_or(0.0),
        drift_mse,
        error: None,
    })
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResults> {
    plan.validate()?;
    let values = plan.axis.values();
    let cells: Vec<CellResult> = crate::par::map_range(values.len(), |i| {
        run_cell(plan, i).unwrap_or_else(|e| CellResult {
            parameter: values[i],
            w2_mean: f64::NAN,
            w2_se: f64::NAN,
            noise_floor: f64::NAN,
            noise_floor_se: f64::NAN,
            drift_mse: None,
            error: Some(e.to_string()),
        })
    });
    let ok: Vec<&CellResult> = cells.iter().filter(|c| c.error.is_none()).collect();
    let mut rate_fits = Vec::new();
    if ok.len() >= 3 {
        let pts: Vec<(f64, f64)> = ok.iter().map(|c| (c.parameter, c.w2_mean)).collect();
        if let Ok(f) = fit_named_rate(&format!("w2 vs {}", plan.axis.name()), &pts) {
            rate_fits.push(f);
        }
        let mse: Vec<(f64, f64)> = ok.iter().filter_map(|c| c.drift_mse.map(|m| (c.parameter, m))).collect();
        if mse.len() >= 3 {
            if let Ok(f) = fit_named_rate("drift squared error vs mc_size", &mse) {
                rate_fits.push(f);
            }
        }
    }
    let trend = match plan.axis {
        SweepAxis::StepSize(_) | SweepAxis::McSize(_) if ok.len() == cells.len() => Some(TrendVerdict {
            rule: format!("w2 non-increasing in {} within 2 SE", plan.axis.name()),
            passed: non_increasing_within(&cells.iter().map(|c| (c.w2_mean, c.w2_se)).collect::<Vec<_>>(), 2.0),
            noise_floors: cells.iter().map(|c| c.noise_floor).collect(),
        }),
        _ => None,
    };
    let summary = ExperimentSummary {
        axis: plan.axis.name().to_string(),
        cells: cells.len(),
        completed: ok.len(),
        partial: ok.len() < cells.len(),
        rate_fits,
        trend,
    };
    Ok(ExperimentResults { cells, summary })
}

pub fn experiment_csv(results: &ExperimentResults, axis: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| SfsError::Serialize(e.to_string());
    w.write_record([axis, "w2", "w2_se", "noise_floor", "noise_floor_se", "drift_mse", "error"]).map_err(err)?;
    for c in &results.cells {
        w.write_record([
            c.parameter.to_string(),
            c.w2_mean.to_string(),
            c.w2_se.to_string(),
            c.noise_floor.to_string(),
            c.noise_floor_se.to_string(),
            c.drift_mse.map(|v| v.to_string()).unwrap_or_default(),
            c.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| SfsError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SfsError::Serialize(e.to_string()))
}

/// Writes `plan.json`, `cells.csv` and `summary.json` into `dir`.
pub fn write_experiment(dir: &Path, plan: &ExperimentPlan, results: &ExperimentResults) -> Result<()> {
    crate::io::ensure_dir(dir)?;
    crate::io::write_json(&dir.join("plan.json"), plan)?;
    crate::io::write_text(&dir.join("cells.csv"), &experiment_csv(results, plan.axis.name())?)?;
    crate::io::write_json(&dir.join("summary.json"), &results.summary)
}

/// Per-node drift comparison against the closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCheckRow {
    pub x: f64,
    pub t: f64,
    pub exact: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCheckReport {
    pub mode: String,
    pub replications: usize,
    /// Mean of `‖b̃ − b‖²` over nodes and replications.
    pub mse: f64,
    pub rms: f64,
    /// Average signed error over nodes and replications, with its SE.
    pub mean_error: f64,
    pub mean_error_se: f64,
    pub max_abs_z: f64,
    pub within_4_se: bool,
    pub rows: Vec<DriftCheckRow>,
}

/// Runs `replications` independent estimates at every node `(x·e₁, t)` of the
/// grid and compares their mean with the exact drift. The SE at a node is the
/// spread of the replicate estimates divided by `√replications`. Only the
/// first coordinate is compared.
pub fn drift_check(target: &TargetSpec, mode: DriftMode, grid: &DriftCheckSection, seed: u64) -> Result<DriftCheckReport> {
    if grid.points < 1 || grid.times.is_empty() || grid.replications < 2 {
        return Err(SfsError::invalid("drift check needs >= 1 point, >= 1 time and >= 2 replications"));
    }
    let ev = DriftEvaluator::new(target, mode, seed)?;
    let p = target.dim();
    let h = if grid.points > 1 { (grid.hi - grid.lo) / (grid.points - 1) as f64 } else { 0.0 };
    let nodes: Vec<(f64, f64)> = grid
        .times
        .iter()
        .flat_map(|&t| (0..grid.points).map(move |i| (grid.lo + i as f64 * h, t)))
        .collect();
    let reps = grid.replications;
    let per_node: Vec<Result<(DriftCheckRow, Vec<f64>)>> = crate::par::map_range(nodes.len(), |k| {
        let (xv, t) = nodes[k];
        let mut x = vec![0.0; p];
        x[0] = xv;
        let exact = drift_exact(target, &x, t)?;
        let mut first = Vec::with_capacity(reps);
        let mut sq = Vec::with_capacity(reps);
        for r in 0..reps {
            let b = ev.eval(&x, t, k as u64, r as u64)?;
            first.push(b[0]);
            sq.push(crate::math::dist_sq(&b, &exact));
        }
        let est = mean(&first);
        let se = standard_error(&first).unwrap_or(0.0);
        let z = if se > 0.0 { (est - exact[0]) / se } else if est == exact[0] { 0.0 } else { f64::INFINITY };
        let errors: Vec<f64> = first.iter().map(|b| b - exact[0]).chain(sq).collect();
        Ok((DriftCheckRow { x: xv, t, exact: exact[0], estimate: est, se, z }, errors))
    });
    let mut rows = Vec::with_capacity(nodes.len());
    let mut signed = Vec::new();
    let mut squared = Vec::new();
    for item in per_node {
        let (row, errors) = item?;
        signed.extend_from_slice(&errors[..reps]);
        squared.extend_from_slice(&errors[reps..]);
        rows.push(row);
    }
    let mse = mean(&squared);
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(DriftCheckReport {
        mode: mode.label(),
        replications: reps,
        mse,
        rms: mse.sqrt(),
        mean_error: mean(&signed),
        mean_error_se: standard_error(&signed).unwrap_or(0.0),
        max_abs_z,
        within_4_se: max_abs_z <= 4.0,
        rows,
    })
}

/// Squared drift error for each inner sample size, with the log-log fit.
pub fn drift_error_sweep(
    target: &TargetSpec,
    stein: bool,
    sizes: &[usize],
    grid: &DriftCheckSection,
    seed: u64,
) -> Result<(Vec<(f64, f64)>, RateFit)> {
    let mut pts = Vec::with_capacity(sizes.len());
    for &m in sizes {
        let mode = if stein { DriftMode::McStein { m } } else { DriftMode::McGrad { m } };
        pts.push((m as f64, drift_check(target, mode, grid, seed)?.mse));
    }
    let name = if stein { "stein squared error vs m" } else { "grad squared error vs m" };
    let fit = fit_named_rate(name, &pts)?;
    Ok((pts, fit))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub parameter: f64,
    pub budget_per_particle: usize,
    pub sfs_w2: f64,
    pub sfs_w2_se: f64,
    pub ula_w2: f64,
    pub ula_w2_se: f64,
    pub noise_floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sfs_mode_imbalance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ula_mode_imbalance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sfs_moment_max_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ula_moment_max_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Largest gap between a mixture weight and the fraction of samples whose
/// nearest component mean is that component's.
pub fn mode_imbalance(samples: &Samples, target: &TargetSpec) -> Option<f64> {
    let mix = target.mixture_params()?;
    if mix.weights().len() < 2 {
        return None;
    }
    let mut counts = vec![0usize; mix.weights().len()];
    for row in samples.rows() {
        let nearest = mix
            .means()
            .iter()
            .enumerate()
            .map(|(i, m)| (i, crate::math::dist_sq(row, m)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        counts[nearest] += 1;
    }
    let n = samples.len() as f64;
    Some(counts.iter().zip(mix.weights()).map(|(&c, w)| (c as f64 / n - w).abs()).fold(0.0, f64::max))
}

/// Target evaluations per particle charged to SFS: `K·m` (`K` for exact drift).
pub fn sfs_budget(cfg: &SamplerConfig) -> usize {
    cfg.steps * cfg.drift.mc_size().unwrap_or(1)
}

pub fn compare_samplers(plan: &ExperimentPlan) -> Result<Vec<ComparisonRow>> {
    plan.validate()?;
    let ula = plan.ula.ok_or_else(|| SfsError::invalid("comparison plans need [experiment.ula] settings"))?;
    let values = plan.axis.values();
    for i in 0..values.len() {
        let budget = sfs_budget(&plan.cell_config(i)?);
        if ula.burn_in + ula.iterations != budget {
            return Err(SfsError::invalid(format!(
                "budget mismatch in cell {}: SFS uses {budget} evaluations per particle, ULA burn_in + iterations = {}",
                values[i],
                ula.burn_in + ula.iterations
            )));
        }
    }
    let rows = crate::par::map_range(values.len(), |i| {
        compare_cell(plan, ula, i).unwrap_or_else(|e| ComparisonRow {
            parameter: values[i],
            budget_per_particle: 0,
            sfs_w2: f64::NAN,
            sfs_w2_se: f64::NAN,
            ula_w2: f64::NAN,
            ula_w2_se: f64::NAN,
            noise_floor: f64::NAN,
            sfs_mode_imbalance: None,
            ula_mode_imbalance: None,
            sfs_moment_max_z: None,
            ula_moment_max_z: None,
            error: Some(e.to_string()),
        })
    });
    Ok(rows)
}

fn compare_cell(plan: &ExperimentPlan, ula: UlaSettings, i: usize) -> Result<ComparisonRow> {
    let cfg = plan.cell_config(i)?;
    let target = plan.cell_target(i)?;
    let reference = target.unregularized();
    let (mut sw, mut uw, mut floors) = (Vec::new(), Vec::new(), Vec::new());
    let (mut s_imb, mut u_imb, mut s_z, mut u_z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in 0..plan.replications {
        let mut rc = cfg.clone();
        rc.seed = child_seed(cfg.seed, r as u64);
        let sfs = sfs_run(&rc, &target)?;
        let mut uc = rc.clone();
        uc.steps = ula.iterations;
        let lang = ula_run(&uc, &target, ula.step, ula.burn_in)?;
        let ms = measure_w2(&sfs.samples, &reference, rc.seed, plan.n_proj)?;
        let mu = measure_w2(&lang.samples, &reference, rc.seed, plan.n_proj)?;
        sw.push(ms.w2);
        uw.push(mu.w2);
        floors.push(ms.noise_floor);
        s_imb.extend(mode_imbalance(&sfs.samples, &reference));
        u_imb.extend(mode_imbalance(&lang.samples, &reference));
        s_z.extend(moment_report(&sfs.samples, &reference).ok().and_then(|m| m.max_z()));
        u_z.extend(moment_report(&lang.samples, &reference).ok().and_then(|m| m.max_z()));
    }
    let avg = |v: &[f64]| (!v.is_empty()).then(|| mean(v));
    Ok(ComparisonRow {
        parameter: plan.axis.values()[i],
        budget_per_particle: sfs_budget(&cfg),
        sfs_w2: mean(&sw),
        sfs_w2_se: standard_error(&sw).unwrap_or(0.0),
        ula_w2: mean(&uw),
        ula_w2_se: standard_error(&uw).unwrap_or(0.0),
        noise_floor: mean(&floors),
        sfs_mode_imbalance: avg(&s_imb),
        ula_mode_imbalance: avg(&u_imb),
        sfs_moment_max_z: avg(&s_z),
        ula_moment_max_z: avg(&u_z),
        error: None,
    })
}

pub fn comparison_csv(rows: &[ComparisonRow], axis: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| SfsError::Serialize(e.to_string());
    w.write_record([
        axis,
        "budget_per_particle",
        "sfs_w2",
        "sfs_w2_se",
        "ula_w2",
        "ula_w2_se",
        "noise_floor",
        "sfs_mode_imbalance",
        "ula_mode_imbalance",
        "error",
    ])
    .map_err(err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.parameter.to_string(),
            r.budget_per_particle.to_string(),
            r.sfs_w2.to_string(),
            r.sfs_w2_se.to_string(),
            r.ula_w2.to_string(),
            r.ula_w2_se.to_string(),
            r.noise_floor.to_string(),
            opt(r.sfs_mode_imbalance),
            opt(r.ula_mode_imbalance),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| SfsError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SfsError::Serialize(e.to_string()))
}

pub fn write_comparison(dir: &Path, plan: &ExperimentPlan, rows: &[ComparisonRow]) -> Result<()> {
    crate::io::ensure_dir(dir)?;
    crate::io::write_json(&dir.join("plan.json"), plan)?;
    crate::io::write_text(&dir.join("cells.csv"), &comparison_csv(rows, plan.axis.name())?)?;
    let summary = serde_json::json!({
        "axis": plan.axis.name(),
        "cells": rows.len(),
        "completed": rows.iter().filter(|r| r.error.is_none()).count(),
        "partial": rows.iter().any(|r| r.error.is_some()),
        "rows": rows,
        "note": "descriptive comparison at matched target-evaluation budget; no ranking is asserted",
    });
    crate::io::write_json(&dir.join("summary.json"), &summary)
}
