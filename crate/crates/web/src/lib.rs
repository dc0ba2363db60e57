//! Browser bindings for the 1-D demo page in `www/`.
//!
//! Targets are the builtin names (`standard-normal`, `gaussian`, `mixture`,
//! `mixture-wide`, `bump`); drift modes are `exact`, `mc-grad` and `mc-stein`.
//! Everything returns flat `Float64Array`s so the page needs no glue beyond
//! the generated module.

use wasm_bindgen::prelude::wasm_bindgen;

use sfs_core::config::builtin_target;
use sfs_core::drift::{drift_exact, DriftEvaluator};
use sfs_core::{sfs_run, sfs_trajectory, DriftMode, SamplerConfig, TargetSpec};

const MAX_WORK: u64 = 2_000_000_000;

fn target(name: &str) -> Result<TargetSpec, String> {
    builtin_target(name, 1).and_then(|c| c.build()).map_err(|e| e.to_string())
}

fn drift_mode(name: &str, m: usize) -> Result<DriftMode, String> {
    match name {
        "exact" => Ok(DriftMode::Exact),
        "mc-grad" => Ok(DriftMode::McGrad { m }),
        "mc-stein" => Ok(DriftMode::McStein { m }),
        other => Err(format!("unknown drift mode `{other}`")),
    }
}

fn config(drift: DriftMode, steps: usize, particles: usize, seed: u32) -> Result<SamplerConfig, String> {
    let work = (steps as u64) * (particles as u64) * drift.mc_size().unwrap_or(1) as u64;
    if work > MAX_WORK {
        return Err(format!("n·K·m = {work} is too much work for the page (limit {MAX_WORK})"));
    }
    Ok(SamplerConfig::new(steps, particles, drift, seed as u64))
}

/// Terminal samples of the sampler on a builtin 1-D target.
#[wasm_bindgen]
pub fn sample(
    target_name: &str,
    drift: &str,
    steps: usize,
    particles: usize,
    mc_size: usize,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let t = target(target_name)?;
    let cfg = config(drift_mode(drift, mc_size)?, steps, particles, seed)?;
    sfs_run(&cfg, &t).map(|b| b.samples.data().to_vec()).map_err(|e| e.to_string())
}

/// Target density on `points` equally spaced nodes of `[lo, hi]`.
#[wasm_bindgen]
pub fn density(target_name: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    let t = target(target_name)?;
    let h = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    (0..points)
        .map(|i| {
            let x = lo + i as f64 * h;
            let lf = t.eval_log_f(&[x]).map_err(|e| e.to_string())?.value;
            Ok((lf - 0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect()
}

/// Drift at time `t` on `points` nodes of `[lo, hi]`, as rows
/// `(x, exact, mc-grad, mc-stein)`. The exact column is NaN for targets
/// without a closed form.
#[wasm_bindgen]
pub fn drift_curve(target_name: &str, t: f64, m: usize, seed: u32, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    let tg = target(target_name)?;
    let grad = DriftEvaluator::new(&tg, DriftMode::McGrad { m }, seed as u64).map_err(|e| e.to_string())?;
    let stein = DriftEvaluator::new(&tg, DriftMode::McStein { m }, seed as u64).map_err(|e| e.to_string())?;
    let h = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(points * 4);
    for i in 0..points {
        let x = [lo + i as f64 * h];
        let exact = if tg.mixture_params().is_some() {
            drift_exact(&tg, &x, t).map_err(|e| e.to_string())?[0]
        } else {
            f64::NAN
        };
        let g = grad.eval(&x, t, 0, i as u64).map(|b| b[0]).unwrap_or(f64::NAN);
        let s = stein.eval(&x, t, 0, i as u64).map(|b| b[0]).unwrap_or(f64::NAN);
        out.extend_from_slice(&[x[0], exact, g, s]);
    }
    Ok(out)
}

/// `paths` sample paths `Ỹ_{t_0..t_K}`, row-major with `K + 1` states each.
#[wasm_bindgen]
pub fn trajectories(target_name: &str, drift: &str, steps: usize, paths: usize, mc_size: usize, seed: u32) -> Result<Vec<f64>, String> {
    let t = target(target_name)?;
    let cfg = config(drift_mode(drift, mc_size)?, steps, paths, seed)?;
    let batch = sfs_trajectory(&cfg, &t).map_err(|e| e.to_string())?;
    Ok(batch.trajectories.map(|tr| tr.data).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_is_deterministic_and_sized() {
        let a = sample("mixture", "exact", 50, 400, 1, 9).unwrap();
        assert_eq!(a.len(), 400);
        assert_eq!(a, sample("mixture", "exact", 50, 400, 1, 9).unwrap());
        assert!(sample("nope", "exact", 10, 10, 1, 1).is_err());
        assert!(sample("bump", "exact", 10, 10, 1, 1).is_err());
        assert!(sample("mixture", "mc-grad", 1000, 100_000, 100, 1).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for name in ["mixture", "mixture-wide", "bump", "gaussian"] {
            let d = density(name, -10.0, 10.0, 4001).unwrap();
            let h = 20.0 / 4000.0;
            let mass: f64 = d.iter().sum::<f64>() * h;
            assert!((mass - 1.0).abs() < 1e-6, "{name}: {mass}");
        }
    }

    #[test]
    fn drift_curve_rows() {
        let rows = drift_curve("mixture", 0.5, 2000, 3, -3.0, 3.0, 7).unwrap();
        assert_eq!(rows.len(), 28);
        // odd symmetry of the exact drift at x = 0
        assert_eq!(rows[3 * 4 + 1], 0.0);
        for r in rows.chunks(4) {
            assert!((r[2] - r[1]).abs() < 0.2 && (r[3] - r[1]).abs() < 0.3, "{r:?}");
        }
        let bump = drift_curve("bump", 0.5, 100, 3, -1.0, 1.0, 3).unwrap();
        assert!(bump[1].is_nan());
    }

    #[test]
    fn trajectories_start_at_origin() {
        let tr = trajectories("gaussian", "exact", 8, 5, 1, 2).unwrap();
        assert_eq!(tr.len(), 5 * 9);
        assert!(tr.chunks(9).all(|p| p[0] == 0.0));
    }
}
