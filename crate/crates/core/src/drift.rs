//! The Schrödinger–Föllmer drift `b(x, t) = ∇log Q_{1−t} f(x)`.
//!
//! Three evaluators are provided:
//!
//! * [`DriftMode::Exact`]: closed form for identity-covariance Gaussian
//!   mixtures, `b = Σ w_i m_i e^{m_iᵀx − t‖m_i‖²/2} / Σ w_i e^{m_iᵀx − t‖m_i‖²/2}`.
//! * [`DriftMode::McGrad`]: the ratio of `m`-sample means of `∇f` and `f`
//!   evaluated at `x + √(1−t) Z_j`.
//! * [`DriftMode::McStein`]: the gradient-free form, `Σ Z_j f(·) / (Σ f(·) √(1−t))`.
//!
//! Both Monte-Carlo forms draw a single batch `Z_1..Z_m` per call and feed it
//! to numerator and denominator. The batch comes from the counter-based
//! stream `(seed, DriftBatch, particle, step)`, so the gradient and Stein
//! forms see identical `Z` for identical indices. Ratios are formed from
//! weights `exp(log f_j − max_j log f_j)`, i.e. a log-sum-exp normalization;
//! any constant factor on `f` cancels before it can touch the arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfsError};
use crate::math::{dist_sq, norm, norm_sq};
use crate::rng::{fill_normal, stream, StreamRole};
use crate::target::TargetSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DriftMode {
    Exact,
    McGrad { m: usize },
    McStein { m: usize },
}

impl DriftMode {
    pub fn mc_size(&self) -> Option<usize> {
        match self {
            DriftMode::Exact => None,
            DriftMode::McGrad { m } | DriftMode::McStein { m } => Some(*m),
        }
    }

    /// Gradient form when `∇f` is available, Stein form otherwise.
    pub fn default_for(target: &TargetSpec, m: usize) -> Self {
        if target.has_gradient() {
            DriftMode::McGrad { m }
        } else {
            DriftMode::McStein { m }
        }
    }

    pub fn label(&self) -> String {
        match self {
            DriftMode::Exact => "exact".into(),
            DriftMode::McGrad { m } => format!("mc-grad(m={m})"),
            DriftMode::McStein { m } => format!("mc-stein(m={m})"),
        }
    }
}

/// Identifier of the stream-derivation rule used for inner batches.
pub const STREAM_POLICY: &str = "chacha8-key(seed, role=drift-batch, particle, step)";

#[derive(Debug, Clone, Copy)]
pub struct DriftEvaluator<'a> {
    mode: DriftMode,
    target: &'a TargetSpec,
    seed: u64,
}

/// Reusable buffers for Monte-Carlo drift evaluation.
#[derive(Debug, Default, Clone)]
pub struct DriftScratch {
    z: Vec<f64>,
    y: Vec<f64>,
    grad: Vec<f64>,
    log_f: Vec<f64>,
    grads: Vec<f64>,
}

impl<'a> DriftEvaluator<'a> {
    pub fn new(target: &'a TargetSpec, mode: DriftMode, seed: u64) -> Result<Self> {
        match mode {
            DriftMode::Exact => {
                if target.mixture_params().is_none() {
                    return Err(SfsError::unsupported(
                        "exact drift needs a Gaussian-mixture target; use an MC drift mode",
                    ));
                }
            }
            DriftMode::McGrad { m } | DriftMode::McStein { m } => {
                if m == 0 {
                    return Err(SfsError::invalid("MC drift needs m >= 1 inner samples"));
                }
            }
        }
        Ok(Self { mode, target, seed })
    }

    pub fn mode(&self) -> DriftMode {
        self.mode
    }

    pub fn target(&self) -> &TargetSpec {
        self.target
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_policy(&self) -> &'static str {
        STREAM_POLICY
    }

    /// Evaluates the configured drift into `out`.
    pub fn eval_into(
        &self,
        x: &[f64],
        t: f64,
        step_index: u64,
        particle_index: u64,
        scratch: &mut DriftScratch,
        out: &mut [f64],
    ) -> Result<()> {
        match self.mode {
            DriftMode::Exact => {
                check_time(t, true)?;
                exact_into(self.target, x, t, out)
            }
            DriftMode::McGrad { m } => {
                check_time(t, true)?;
                self.mc_into(x, t, m, step_index, particle_index, false, scratch, out)
            }
            DriftMode::McStein { m } => {
                check_time(t, false)?;
                self.mc_into(x, t, m, step_index, particle_index, true, scratch, out)
            }
        }
    }

    pub fn eval(&self, x: &[f64], t: f64, step_index: u64, particle_index: u64) -> Result<Vec<f64>> {
        check_input(self.target, x)?;
        let mut out = vec![0.0; x.len()];
        let mut scratch = DriftScratch::default();
        self.eval_into(x, t, step_index, particle_index, &mut scratch, &mut out)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn mc_into(
        &self,
        x: &[f64],
        t: f64,
        m: usize,
        step_index: u64,
        particle_index: u64,
        stein: bool,
        scratch: &mut DriftScratch,
        out: &mut [f64],
    ) -> Result<()> {
        let p = x.len();
        let scale = (1.0 - t).sqrt();
        scratch.z.resize(m * p, 0.0);
        scratch.y.resize(p, 0.0);
        scratch.grad.resize(p, 0.0);
        scratch.log_f.resize(m, 0.0);
        if !stein {
            scratch.grads.resize(m * p, 0.0);
        }

        let mut rng = stream(self.seed, StreamRole::DriftBatch, particle_index, step_index);
        fill_normal(&mut rng, &mut scratch.z);

        let mut max = f64::NEG_INFINITY;
        for j in 0..m {
            let z = &scratch.z[j * p..(j + 1) * p];
            for ((y, xc), zc) in scratch.y.iter_mut().zip(x).zip(z) {
                *y = xc + scale * zc;
            }
            let lf = if stein {
                self.target.log_f_shape(&scratch.y)
            } else {
                let g = &mut scratch.grads[j * p..(j + 1) * p];
                self.target.log_f_shape_grad(&scratch.y, g)
            };
            if lf.is_nan() {
                return Err(singularity(x, t, "log f evaluated to NaN on the inner batch"));
            }
            scratch.log_f[j] = lf;
            max = max.max(lf);
        }
        if max == f64::NEG_INFINITY {
            return Err(singularity(x, t, &format!("f vanished on all {m} inner samples")));
        }
        if max == f64::INFINITY {
            return Err(singularity(x, t, "f overflowed on the inner batch"));
        }

        out.iter_mut().for_each(|v| *v = 0.0);
        let mut denom = 0.0;
        for j in 0..m {
            let w = (scratch.log_f[j] - max).exp();
            if w == 0.0 {
                continue;
            }
            denom += w;
            let v = if stein { &scratch.z[j * p..(j + 1) * p] } else { &scratch.grads[j * p..(j + 1) * p] };
            for (o, vc) in out.iter_mut().zip(v) {
                *o += w * vc;
            }
        }
        if !(denom > 0.0) {
            return Err(singularity(x, t, "nonpositive denominator"));
        }
        let div = if stein { denom * scale } else { denom };
        out.iter_mut().for_each(|v| *v /= div);
        Ok(())
    }
}

fn singularity(x: &[f64], t: f64, detail: &str) -> SfsError {
    SfsError::DriftSingularity { t, x: x.to_vec(), detail: detail.to_string(), particle: None, step: None }
}

fn check_time(t: f64, allow_one: bool) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SfsError::domain(format!("time must lie in [0, 1], got {t}")));
    }
    if !allow_one && t == 1.0 {
        return Err(SfsError::domain("the Stein-form drift divides by sqrt(1 - t) and is undefined at t = 1"));
    }
    Ok(())
}

fn check_input(target: &TargetSpec, x: &[f64]) -> Result<()> {
    if x.len() != target.dim() {
        return Err(SfsError::domain(format!("point has length {}, expected {}", x.len(), target.dim())));
    }
    if !crate::math::all_finite(x) {
        return Err(SfsError::domain("point has non-finite coordinates"));
    }
    Ok(())
}

fn exact_into(target: &TargetSpec, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
    let mixture = target
        .mixture_params()
        .ok_or_else(|| SfsError::unsupported("exact drift needs a Gaussian-mixture target"))?;
    mixture.log_tilted(x, t, Some(out));
    Ok(())
}

/// Closed-form drift for Gaussian-mixture targets.
pub fn drift_exact(target: &TargetSpec, x: &[f64], t: f64) -> Result<Vec<f64>> {
    check_input(target, x)?;
    check_time(t, true)?;
    let mut out = vec![0.0; x.len()];
    exact_into(target, x, t, &mut out)?;
    Ok(out)
}

/// Gradient-form Monte-Carlo drift.
pub fn drift_mc_grad(
    ev: &DriftEvaluator<'_>,
    x: &[f64],
    t: f64,
    step_index: u64,
    particle_index: u64,
) -> Result<Vec<f64>> {
    if !matches!(ev.mode, DriftMode::McGrad { .. }) {
        return Err(SfsError::invalid(format!("evaluator is in {} mode, not mc-grad", ev.mode.label())));
    }
    ev.eval(x, t, step_index, particle_index)
}

/// Stein-form (gradient-free) Monte-Carlo drift. `t` must be strictly below 1.
pub fn drift_mc_stein(
    ev: &DriftEvaluator<'_>,
    x: &[f64],
    t: f64,
    step_index: u64,
    particle_index: u64,
) -> Result<Vec<f64>> {
    if !matches!(ev.mode, DriftMode::McStein { .. }) {
        return Err(SfsError::invalid(format!("evaluator is in {} mode, not mc-stein", ev.mode.label())));
    }
    ev.eval(x, t, step_index, particle_index)
}

/// `log` of the `m`-sample estimate of `Q_t f(x) = E f(x + √t Z)`.
pub fn log_heat_semigroup_mc(target: &TargetSpec, x: &[f64], t: f64, m: usize, seed: u64) -> Result<f64> {
    check_input(target, x)?;
    check_time(t, true)?;
    if m == 0 {
        return Err(SfsError::invalid("heat semigroup estimate needs m >= 1"));
    }
    let p = x.len();
    let scale = t.sqrt();
    let mut rng = stream(seed, StreamRole::DriftBatch, u64::MAX, 0);
    let mut z = vec![0.0; p];
    let mut y = vec![0.0; p];
    let mut values = Vec::with_capacity(m);
    for _ in 0..m {
        fill_normal(&mut rng, &mut z);
        for ((yc, xc), zc) in y.iter_mut().zip(x).zip(&z) {
            *yc = xc + scale * zc;
        }
        values.push(target.log_f_shape(&y));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(target.log_scale() + max + (sum / m as f64).ln())
}

/// `m`-sample estimate of `Q_t f(x)`. For relative targets the value carries the
/// same unknown factor as `f`.
pub fn heat_semigroup_mc(target: &TargetSpec, x: &[f64], t: f64, m: usize, seed: u64) -> Result<f64> {
    Ok(log_heat_semigroup_mc(target, x, t, m, seed)?.exp())
}

/// Probe grid for regularity estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub lo: f64,
    pub hi: f64,
    pub points_per_axis: usize,
    pub times: Vec<f64>,
    /// Number of random lines through the origin used when `p > 2`.
    pub directions: usize,
    /// Inner sample size when the target has no closed-form drift.
    pub mc_size: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            lo: -5.0,
            hi: 5.0,
            points_per_axis: 21,
            times: vec![0.0, 0.25, 0.5, 0.75, 0.95],
            directions: 16,
            mc_size: 10_000,
        }
    }
}

const MAX_GRID_NODES: usize = 6000;

impl ProbeGrid {
    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || self.points_per_axis < 2 || self.times.is_empty() {
            return Err(SfsError::invalid("probe grid needs lo < hi, >= 2 points per axis and >= 1 time"));
        }
        if self.times.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(SfsError::invalid("probe times must lie in [0, 1)"));
        }
        Ok(())
    }

    fn axis(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.points_per_axis - 1) as f64;
        (0..self.points_per_axis).map(|i| self.lo + i as f64 * h).collect()
    }

    /// Spatial probe points: a tensor grid for `p <= 2`, otherwise points along
    /// random lines through the origin clipped to the cube.
    pub fn points(&self, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let axis = self.axis();
        match dim {
            1 => axis.iter().map(|&a| vec![a]).collect(),
            2 => axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
            _ => {
                let radius = self.lo.abs().min(self.hi.abs());
                let mut out = Vec::new();
                for d in 0..self.directions {
                    let mut rng = stream(seed, StreamRole::Regularity, d as u64, 0);
                    let mut u = vec![0.0; dim];
                    fill_normal(&mut rng, &mut u);
                    let n = norm(&u);
                    let inf = u.iter().fold(0.0f64, |a, v| a.max(v.abs())) / n;
                    for &a in &axis {
                        let r = a / self.hi.max(-self.lo) * radius / inf;
                        out.push(u.iter().map(|v| v / n * r).collect());
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub grid: ProbeGrid,
    pub dim: usize,
    pub nodes: usize,
    pub pairs: usize,
    pub drift_source: String,
    pub seed: u64,
}

/// Empirical growth and continuity constants of the drift on a probe grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRegularityEstimate {
    /// `max ‖b‖² / (1 + ‖x‖²)`
    pub c0_hat: f64,
    /// `max ‖b(x,t) − b(y,s)‖ / (‖x − y‖ + |t − s|^{1/2})`
    pub c1_hat: f64,
    pub b_sup_hat: f64,
    pub grid_meta: GridMeta,
}

pub fn estimate_regularity(target: &TargetSpec, grid: &ProbeGrid, seed: u64) -> Result<DriftRegularityEstimate> {
    grid.validate()?;
    let dim = target.dim();
    let points = grid.points(dim, seed);
    let nodes: Vec<(&Vec<f64>, f64)> =
        grid.times.iter().flat_map(|&t| points.iter().map(move |x| (x, t))).collect();
    if nodes.len() > MAX_GRID_NODES {
        return Err(SfsError::invalid(format!(
            "probe grid has {} nodes, limit is {MAX_GRID_NODES}",
            nodes.len()
        )));
    }

    let mode = if target.mixture_params().is_some() {
        DriftMode::Exact
    } else {
        DriftMode::default_for(target, grid.mc_size)
    };
    let ev = DriftEvaluator::new(target, mode, seed)?;
    let drifts: Vec<Result<Vec<f64>>> =
        crate::par::map_range(nodes.len(), |i| ev.eval(nodes[i].0, nodes[i].1, 0, i as u64));
    let drifts = drifts.into_iter().collect::<Result<Vec<_>>>()?;

    let mut c0: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for ((x, _), b) in nodes.iter().zip(&drifts) {
        let b2 = norm_sq(b);
        c0 = c0.max(b2 / (1.0 + norm_sq(x)));
        sup = sup.max(b2.sqrt());
    }
    let per_row: Vec<f64> = crate::par::map_range(nodes.len(), |i| {
        let (xi, ti) = nodes[i];
        let mut best: f64 = 0.0;
        for j in (i + 1)..nodes.len() {
            let (xj, tj) = nodes[j];
            let den = dist_sq(xi, xj).sqrt() + (ti - tj).abs().sqrt();
            if den > 0.0 {
                best = best.max(dist_sq(&drifts[i], &drifts[j]).sqrt() / den);
            }
        }
        best
    });
    let c1 = per_row.into_iter().fold(0.0, f64::max);
    let n = nodes.len();
    Ok(DriftRegularityEstimate {
        c0_hat: c0,
        c1_hat: c1,
        b_sup_hat: sup,
        grid_meta: GridMeta {
            grid: grid.clone(),
            dim,
            nodes: n,
            pairs: n * (n - 1) / 2,
            drift_source: mode.label(),
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::GaussianMixture;

    fn pair() -> TargetSpec {
        TargetSpec::mixture(GaussianMixture::symmetric_pair(1, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn exact_drift_single_component_is_constant() {
        let t = TargetSpec::gaussian(vec![1.5, -0.5]).unwrap();
        for (x, s) in [([0.0, 0.0], 0.0), ([3.0, -8.0], 0.4), ([-1.0, 2.0], 1.0)] {
            assert_eq!(drift_exact(&t, &x, s).unwrap(), vec![1.5, -0.5]);
        }
    }

    #[test]
    fn exact_drift_symmetric_pair() {
        let t = pair();
        for s in [0.0, 0.3, 0.99, 1.0] {
            assert_eq!(drift_exact(&t, &[0.0], s).unwrap()[0], 0.0);
        }
        let b = drift_exact(&t, &[5.0], 0.0).unwrap()[0];
        assert!((b - 2.0 * 10f64.tanh()).abs() < 1e-14);
        assert!((b - 2.0).abs() < 1e-8);
    }

    #[test]
    fn exact_drift_requires_mixture() {
        let t = TargetSpec::bump(1, 2.0).unwrap();
        assert!(matches!(drift_exact(&t, &[0.0], 0.5), Err(SfsError::Unsupported(_))));
        assert!(DriftEvaluator::new(&t, DriftMode::Exact, 1).is_err());
        assert!(DriftEvaluator::new(&t, DriftMode::McGrad { m: 0 }, 1).is_err());
    }

    #[test]
    fn mc_grad_zero_for_flat_and_exact_for_gaussian() {
        let flat = TargetSpec::standard_normal(2).unwrap();
        let ev = DriftEvaluator::new(&flat, DriftMode::McGrad { m: 17 }, 3).unwrap();
        assert_eq!(drift_mc_grad(&ev, &[1.0, -2.0], 0.3, 0, 0).unwrap(), vec![0.0, 0.0]);

        let g = TargetSpec::gaussian(vec![2.0]).unwrap();
        for m in [1, 5, 1000] {
            let ev = DriftEvaluator::new(&g, DriftMode::McGrad { m }, 9).unwrap();
            for (x, t) in [(0.0, 0.0), (4.0, 0.5), (-3.0, 0.9)] {
                let b = drift_mc_grad(&ev, &[x], t, 2, 5).unwrap()[0];
                assert!((b - 2.0).abs() < 1e-12, "m={m} x={x}: {b}");
            }
        }
    }

    #[test]
    fn stein_flat_target_is_a_gaussian_mean() {
        let flat = TargetSpec::standard_normal(1).unwrap();
        let m = 10_000;
        let ev = DriftEvaluator::new(&flat, DriftMode::McStein { m }, 11).unwrap();
        let b = drift_mc_stein(&ev, &[0.0], 0.0, 0, 0).unwrap()[0];
        assert!(b.abs() < 4.0 / (m as f64).sqrt());
    }

    #[test]
    fn stein_rejects_t_one_and_mode_mismatch() {
        let t = pair();
        let ev = DriftEvaluator::new(&t, DriftMode::McStein { m: 10 }, 1).unwrap();
        assert!(matches!(drift_mc_stein(&ev, &[0.0], 1.0, 0, 0), Err(SfsError::Domain(_))));
        assert!(drift_mc_grad(&ev, &[0.0], 0.5, 0, 0).is_err());
        assert!(matches!(drift_mc_stein(&ev, &[0.0], 1.5, 0, 0), Err(SfsError::Domain(_))));
    }

    #[test]
    fn grad_and_stein_share_the_inner_batch() {
        // with f ≡ 1 the Stein form returns mean(Z) / sqrt(1 - t); the stream is
        // the one keyed by (seed, drift-batch, particle, step)
        let flat = TargetSpec::standard_normal(1).unwrap();
        let ev = DriftEvaluator::new(&flat, DriftMode::McStein { m: 8 }, 5).unwrap();
        let b = drift_mc_stein(&ev, &[0.0], 0.75, 3, 4).unwrap()[0];
        let mut z = vec![0.0; 8];
        fill_normal(&mut stream(5, StreamRole::DriftBatch, 4, 3), &mut z);
        let expect = z.iter().sum::<f64>() / 8.0 / 0.5;
        assert!((b - expect).abs() < 1e-14);
    }

    #[test]
    fn vanishing_f_is_a_singularity() {
        let bump = TargetSpec::bump(1, 0.5).unwrap();
        let ev = DriftEvaluator::new(&bump, DriftMode::McGrad { m: 4 }, 1).unwrap();
        // inner points are x + sqrt(1 - t) Z with t ~ 1: all far outside the support
        let err = drift_mc_grad(&ev, &[50.0], 0.999_999, 0, 0).unwrap_err();
        assert!(matches!(err, SfsError::DriftSingularity { .. }));
    }

    #[test]
    fn heat_semigroup_constant_and_t_zero() {
        let flat = TargetSpec::standard_normal(2).unwrap();
        assert_eq!(heat_semigroup_mc(&flat, &[3.0, 1.0], 0.7, 13, 1).unwrap(), 1.0);
        let t = pair();
        let x = [0.8];
        let f = t.eval_f(&x).unwrap();
        for m in [1, 7, 100] {
            assert_eq!(heat_semigroup_mc(&t, &x, 0.0, m, 3).unwrap(), f);
        }
    }

    #[test]
    fn regularity_of_trivial_targets() {
        let grid = ProbeGrid::default();
        let flat = estimate_regularity(&TargetSpec::standard_normal(1).unwrap(), &grid, 1).unwrap();
        assert_eq!((flat.c0_hat, flat.c1_hat, flat.b_sup_hat), (0.0, 0.0, 0.0));
        let g = estimate_regularity(&TargetSpec::gaussian(vec![2.0]).unwrap(), &grid, 1).unwrap();
        assert_eq!(g.b_sup_hat, 2.0);
        assert_eq!(g.c1_hat, 0.0);
        assert_eq!(g.c0_hat, 4.0);
    }

    #[test]
    fn probe_points_stay_in_cube() {
        let grid = ProbeGrid::default();
        let pts = grid.points(5, 3);
        assert_eq!(pts.len(), grid.directions * grid.points_per_axis);
        for p in pts {
            assert!(p.iter().all(|v| v.abs() <= 5.0 + 1e-12));
        }
    }
}
