//! Target distributions expressed through their density ratio `f = dμ/dG`
//! against the standard Gaussian `G = N(0, I_p)`.
//!
//! Everything is carried in log space. A target is either given by a closed
//! form log-ratio (absolute `f`) or by a potential `V` with
//! `log f(x) = -V(x) + ‖x‖²/2 + const`, where the constant is unknown. The
//! latter is flagged as *relative*: the drift only ever needs `f` up to a
//! positive factor, so relative targets still sample correctly, but operations
//! that need the absolute value (regularization) refuse them.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SfsError};
use crate::math::{dot, logaddexp, norm_sq};
use crate::rng::{fill_normal, stream, StreamRole};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Exponent of the bump profile `(1 - ‖x‖²/r²)^3`; 3 keeps `f` and `∇f` Lipschitz.
pub const BUMP_POWER: i32 = 3;

/// Equal-covariance (identity) Gaussian mixture `Σ w_i N(m_i, I)`.
///
/// Its density ratio is `f(x) = Σ w_i exp(m_iᵀx − ‖m_i‖²/2)`, which is what
/// makes the drift available in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() {
            return Err(SfsError::invalid(format!(
                "mixture needs matching non-empty weights and means (got {} and {})",
                weights.len(),
                means.len()
            )));
        }
        let dim = means[0].len();
        if dim == 0 || means.iter().any(|m| m.len() != dim) {
            return Err(SfsError::invalid("mixture means must share a positive dimension"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SfsError::invalid("mixture weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SfsError::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SfsError::invalid("mixture means must be finite"));
        }
        Ok(Self { weights, means })
    }

    pub fn single(mean: Vec<f64>) -> Result<Self> {
        Self::new(vec![1.0], vec![mean])
    }

    /// Two equal-weight components at `±offset·e₁`.
    pub fn symmetric_pair(dim: usize, offset: f64) -> Result<Self> {
        let mut lo = vec![0.0; dim];
        let mut hi = vec![0.0; dim];
        if dim > 0 {
            lo[0] = -offset;
            hi[0] = offset;
        }
        Self::new(vec![0.5, 0.5], vec![lo, hi])
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// `log Σ w_i exp(m_iᵀx − t‖m_i‖²/2)` with softmax-weighted means written
    /// to `grad`. With `t = 1` this is `log f` and `∇log f`; with general `t`
    /// it is `log Q_{1−t} f` and the drift.
    pub(crate) fn log_tilted(&self, x: &[f64], t: f64, grad: Option<&mut [f64]>) -> f64 {
        let exponent = |i: usize| {
            let m = &self.means[i];
            self.weights[i].ln() + dot(m, x) - 0.5 * t * norm_sq(m)
        };
        let max = (0..self.weights.len())
            .map(exponent)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        match grad {
            Some(g) => {
                g.iter_mut().for_each(|v| *v = 0.0);
                for (i, m) in self.means.iter().enumerate() {
                    let w = (exponent(i) - max).exp();
                    total += w;
                    for (gc, mc) in g.iter_mut().zip(m) {
                        *gc += w * mc;
                    }
                }
                g.iter_mut().for_each(|v| *v /= total);
            }
            None => {
                for i in 0..self.weights.len() {
                    total += (exponent(i) - max).exp();
                }
            }
        }
        max + total.ln()
    }

    /// `(1 − ε)·self + ε·N(0, I)`.
    pub fn regularized(&self, eps: f64) -> Self {
        let mut weights: Vec<f64> = self.weights.iter().map(|w| (1.0 - eps) * w).collect();
        let mut means = self.means.clone();
        weights.push(eps);
        means.push(vec![0.0; self.dim()]);
        Self { weights, means }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (w, m) in self.weights.iter().zip(&self.means) {
            for (o, v) in out.iter_mut().zip(m) {
                *o += w * v;
            }
        }
        out
    }

    /// Per-coordinate variance: `1 + Σ w_i m_ic² − (Σ w_i m_ic)²`.
    pub fn coordinate_variance(&self) -> Vec<f64> {
        let mean = self.mean();
        (0..self.dim())
            .map(|c| {
                let second: f64 = self.weights.iter().zip(&self.means).map(|(w, m)| w * m[c] * m[c]).sum();
                1.0 + second - mean[c] * mean[c]
            })
            .collect()
    }

    pub(crate) fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        fill_normal(rng, out);
        for (o, m) in out.iter_mut().zip(&self.means[pick]) {
            *o += m;
        }
    }
}

/// Compactly supported density `μ(x) ∝ (1 − ‖x‖²/r²)^3` on the ball of radius `r`.
///
/// `f = dμ/dG` vanishes outside the ball, so it violates the positive lower
/// bound the plain sampler needs; it is the test case for ε-regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub radius: f64,
}

impl Bump {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SfsError::invalid(format!("bump radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    /// log of `∫ (1 − ‖x‖²/r²)^k dx = r^p π^{p/2} Γ(k+1) / Γ(k+1+p/2)`.
    fn log_normalizer(&self, dim: usize) -> f64 {
        let p = dim as f64;
        let k = BUMP_POWER as f64;
        p * self.radius.ln() + 0.5 * p * std::f64::consts::PI.ln() + ln_gamma_half(k + 1.0)
            - ln_gamma_half(k + 1.0 + 0.5 * p)
    }

    /// `log((1 − ‖x‖²/r²)^k)` inside the ball, `-inf` outside.
    fn log_profile(&self, x: &[f64]) -> f64 {
        let u = 1.0 - norm_sq(x) / (self.radius * self.radius);
        if u <= 0.0 {
            f64::NEG_INFINITY
        } else {
            BUMP_POWER as f64 * u.ln()
        }
    }

    /// Gradient of the log profile; zero outside the ball.
    fn grad_log_profile(&self, x: &[f64], out: &mut [f64]) {
        let r2 = self.radius * self.radius;
        let gap = r2 - norm_sq(x);
        if gap <= 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let scale = -2.0 * BUMP_POWER as f64 / gap;
        for (o, v) in out.iter_mut().zip(x) {
            *o = scale * v;
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_profile(x) - self.log_normalizer(x.len())
    }

    /// `log μ + (p/2) log 2π` without the profile term.
    fn ratio_offset(&self, dim: usize) -> f64 {
        0.5 * dim as f64 * LN_2PI - self.log_normalizer(dim)
    }

    fn log_ratio(&self, x: &[f64], offset: f64) -> f64 {
        let lp = self.log_profile(x);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + offset + 0.5 * norm_sq(x)
    }

    pub fn coordinate_variance(&self, dim: usize) -> f64 {
        self.radius * self.radius / (dim as f64 + 2.0 * BUMP_POWER as f64 + 2.0)
    }

    pub(crate) fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let p = out.len() as f64;
        loop {
            // uniform point in the ball, then accept with the profile
            fill_normal(rng, out);
            let n = norm_sq(out).sqrt();
            let radius = self.radius * rng.random::<f64>().powf(1.0 / p);
            if n == 0.0 {
                continue;
            }
            out.iter_mut().for_each(|v| *v *= radius / n);
            let accept = (1.0 - radius * radius / (self.radius * self.radius)).powi(BUMP_POWER);
            if rng.random::<f64>() < accept {
                return;
            }
        }
    }
}

/// `ln Γ(x)` for `x` a positive multiple of 1/2.
fn ln_gamma_half(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    debug_assert!(twice > 0 && (2.0 * x - twice as f64).abs() < 1e-12);
    let (mut z, mut acc) = if twice % 2 == 0 {
        (1.0, 0.0)
    } else {
        (0.5, 0.5 * std::f64::consts::PI.ln())
    };
    while z + 0.5 < x {
        acc += z.ln();
        z += 1.0;
    }
    acc
}

/// User-supplied closed-form log density ratio.
pub trait LogDensityRatio: Send + Sync + fmt::Debug {
    fn log_f(&self, x: &[f64]) -> f64;
    fn grad_log_f(&self, x: &[f64], out: &mut [f64]);
}

/// User-supplied potential `V` (target density `∝ exp(−V)`).
pub trait Potential: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub enum RatioModel {
    /// `f ≡ 1`: the target is `G` itself.
    Constant,
    Gaussian { mean: Vec<f64> },
    Mixture(GaussianMixture),
    Bump(Bump),
    Custom(Arc<dyn LogDensityRatio>),
}

#[derive(Debug, Clone)]
pub enum PotentialModel {
    /// `V(x) = ‖x − m‖²/2`
    Gaussian { mean: Vec<f64> },
    /// `V(x) = −log Σ w_i exp(−‖x − m_i‖²/2)`
    Mixture(GaussianMixture),
    /// `V(x) = −3 log(1 − ‖x‖²/r²)`, `+∞` outside the ball
    Bump(Bump),
    Custom(Arc<dyn Potential>),
}

#[derive(Debug, Clone)]
pub enum Form {
    DensityRatio(RatioModel),
    Potential(PotentialModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRegularity {
    pub gamma: f64,
    pub xi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
}

impl TargetRegularity {
    pub fn new(gamma: f64, xi: f64, zeta: Option<f64>) -> Result<Self> {
        let r = Self { gamma, xi, zeta };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(SfsError::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(SfsError::invalid(format!("xi must be positive, got {}", self.xi)));
        }
        if let Some(z) = self.zeta {
            if !(z >= self.xi) {
                return Err(SfsError::invalid(format!("zeta ({z}) must be at least xi ({})", self.xi)));
            }
        }
        Ok(())
    }

    /// Uniform bound `γ/ξ` on the drift norm.
    pub fn drift_bound(&self) -> f64 {
        self.gamma / self.xi
    }

    /// Bound `6γ²/ξ² + 3p` on the second moment of every sampler iterate.
    pub fn second_moment_bound(&self, dim: usize) -> f64 {
        6.0 * self.drift_bound().powi(2) + 3.0 * dim as f64
    }
}

/// Exact sampler for targets whose law is known.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Mixture(GaussianMixture),
    /// `(1 − ε)·bump + ε·G`; `eps = 0` is the plain bump.
    Bump { bump: Bump, eps: f64 },
}

impl GroundTruth {
    pub(crate) fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            GroundTruth::Mixture(m) => m.sample_into(rng, out),
            GroundTruth::Bump { bump, eps } => {
                if *eps > 0.0 && rng.random::<f64>() < *eps {
                    fill_normal(rng, out);
                } else {
                    bump.sample_into(rng, out);
                }
            }
        }
    }

    pub fn mean(&self, dim: usize) -> Vec<f64> {
        match self {
            GroundTruth::Mixture(m) => m.mean(),
            GroundTruth::Bump { .. } => vec![0.0; dim],
        }
    }

    pub fn coordinate_variance(&self, dim: usize) -> Vec<f64> {
        match self {
            GroundTruth::Mixture(m) => m.coordinate_variance(),
            GroundTruth::Bump { bump, eps } => {
                vec![(1.0 - eps) * bump.coordinate_variance(dim) + eps; dim]
            }
        }
    }
}

/// `log f(x)` together with whether it is known only up to an additive constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRatio {
    pub value: f64,
    pub relative: bool,
}

#[derive(Debug, Clone)]
pub struct TargetSpec {
    dim: usize,
    form: Form,
    /// Additive constant on `log f`; nonzero only after [`TargetSpec::scaled`].
    log_scale: f64,
    /// ε of `f_ε = (1 − ε) f + ε`, if regularized.
    eps: Option<f64>,
    mixture: Option<GaussianMixture>,
    regularity: Option<TargetRegularity>,
    ground_truth: Option<GroundTruth>,
    /// Dimension-dependent constant of the bump ratio, cached off the hot path.
    bump_offset: f64,
    /// `(log(1 − ε), log ε)` when regularized.
    eps_logs: (f64, f64),
}

impl TargetSpec {
    pub fn new(dim: usize, form: Form) -> Result<Self> {
        if dim == 0 {
            return Err(SfsError::invalid("target dimension must be at least 1"));
        }
        let check = |m: &[f64]| -> Result<()> {
            if m.len() != dim {
                return Err(SfsError::invalid(format!("mean has length {}, expected {dim}", m.len())));
            }
            Ok(())
        };
        let (mixture, ground_truth) = match &form {
            Form::DensityRatio(RatioModel::Constant) => {
                let g = GaussianMixture::single(vec![0.0; dim])?;
                (Some(g.clone()), Some(GroundTruth::Mixture(g)))
            }
            Form::DensityRatio(RatioModel::Gaussian { mean })
            | Form::Potential(PotentialModel::Gaussian { mean }) => {
                check(mean)?;
                let g = GaussianMixture::single(mean.clone())?;
                (Some(g.clone()), Some(GroundTruth::Mixture(g)))
            }
            Form::DensityRatio(RatioModel::Mixture(m)) | Form::Potential(PotentialModel::Mixture(m)) => {
                check(&m.means[0])?;
                (Some(m.clone()), Some(GroundTruth::Mixture(m.clone())))
            }
            Form::DensityRatio(RatioModel::Bump(b)) | Form::Potential(PotentialModel::Bump(b)) => {
                (None, Some(GroundTruth::Bump { bump: b.clone(), eps: 0.0 }))
            }
            Form::DensityRatio(RatioModel::Custom(_)) | Form::Potential(PotentialModel::Custom(_)) => {
                (None, None)
            }
        };
        let bump_offset = match &form {
            Form::DensityRatio(RatioModel::Bump(b)) => b.ratio_offset(dim),
            _ => 0.0,
        };
        Ok(Self { dim, form, log_scale: 0.0, eps: None, mixture, regularity: None, ground_truth, bump_offset, eps_logs: (0.0, 0.0) })
    }

    pub fn standard_normal(dim: usize) -> Result<Self> {
        Self::new(dim, Form::DensityRatio(RatioModel::Constant))
    }

    pub fn gaussian(mean: Vec<f64>) -> Result<Self> {
        Self::new(mean.len(), Form::DensityRatio(RatioModel::Gaussian { mean }))
    }

    pub fn mixture(mixture: GaussianMixture) -> Result<Self> {
        Self::new(mixture.dim(), Form::DensityRatio(RatioModel::Mixture(mixture)))
    }

    pub fn bump(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, Form::DensityRatio(RatioModel::Bump(Bump::new(radius)?)))
    }

    pub fn with_regularity(mut self, regularity: TargetRegularity) -> Result<Self> {
        regularity.validate()?;
        self.regularity = Some(regularity);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    pub fn mixture_params(&self) -> Option<&GaussianMixture> {
        self.mixture.as_ref()
    }

    pub fn regularity(&self) -> Option<&TargetRegularity> {
        self.regularity.as_ref()
    }

    pub fn ground_truth(&self) -> Option<&GroundTruth> {
        self.ground_truth.as_ref()
    }

    pub fn has_gradient(&self) -> bool {
        true
    }

    /// True when `f` is only known up to a positive factor.
    pub fn is_relative(&self) -> bool {
        matches!(self.form, Form::Potential(_)) || self.log_scale != 0.0
    }

    /// The same target with `f` multiplied by `c > 0`; the drift is unchanged.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(SfsError::domain(format!("scale factor must be positive, got {c}")));
        }
        let mut out = self.clone();
        out.log_scale += c.ln();
        Ok(out)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(SfsError::domain(format!("point has length {}, expected {}", x.len(), self.dim)));
        }
        if !crate::math::all_finite(x) {
            return Err(SfsError::domain("point has non-finite coordinates"));
        }
        Ok(())
    }

    pub fn eval_log_f(&self, x: &[f64]) -> Result<LogRatio> {
        self.check_point(x)?;
        Ok(LogRatio { value: self.log_scale + self.log_f_shape(x), relative: self.is_relative() })
    }

    pub fn eval_grad_log_f(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut g = vec![0.0; self.dim];
        self.log_f_shape_grad(x, &mut g);
        Ok(g)
    }

    /// `f(x)`; errors for relative targets whose absolute value is unknown.
    pub fn eval_f(&self, x: &[f64]) -> Result<f64> {
        if self.is_relative() {
            return Err(SfsError::unsupported("absolute f is not available for a relative target"));
        }
        Ok(self.eval_log_f(x)?.value.exp())
    }

    /// `log f` without the scale constant. Constant factors cancel in the drift,
    /// so the estimators work with this shape only.
    pub(crate) fn log_f_shape(&self, x: &[f64]) -> f64 {
        let base = self.base_log_f(x, None);
        match self.eps {
            None => base,
            Some(_) => logaddexp(self.eps_logs.0 + base, self.eps_logs.1),
        }
    }

    /// `log f` (shape) with `∇log f` written to `grad`. Where `f = 0` the
    /// gradient is reported as zero so that `f·∇log f` stays well defined.
    pub(crate) fn log_f_shape_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let base = self.base_log_f(x, Some(grad));
        let value = match self.eps {
            None => base,
            Some(_) => {
                let reg = logaddexp(self.eps_logs.0 + base, self.eps_logs.1);
                let factor = (self.eps_logs.0 + base - reg).exp();
                grad.iter_mut().for_each(|g| *g *= factor);
                reg
            }
        };
        if value == f64::NEG_INFINITY {
            grad.iter_mut().for_each(|g| *g = 0.0);
        }
        value
    }

    fn base_log_f(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match &self.form {
            Form::DensityRatio(model) => match model {
                RatioModel::Constant => {
                    if let Some(g) = grad {
                        g.iter_mut().for_each(|v| *v = 0.0);
                    }
                    0.0
                }
                RatioModel::Gaussian { mean } => {
                    if let Some(g) = grad {
                        g.copy_from_slice(mean);
                    }
                    dot(mean, x) - 0.5 * norm_sq(mean)
                }
                RatioModel::Mixture(m) => m.log_tilted(x, 1.0, grad),
                RatioModel::Bump(b) => {
                    if let Some(g) = grad {
                        b.grad_log_profile(x, g);
                        for (gc, xc) in g.iter_mut().zip(x) {
                            *gc += xc;
                        }
                    }
                    b.log_ratio(x, self.bump_offset)
                }
                RatioModel::Custom(c) => {
                    if let Some(g) = grad {
                        c.grad_log_f(x, g);
                    }
                    c.log_f(x)
                }
            },
            Form::Potential(model) => {
                let v = potential_value(model, x);
                if let Some(g) = grad {
                    potential_gradient(model, x, g);
                    // ∇log f = −∇V + x
                    for (gc, xc) in g.iter_mut().zip(x) {
                        *gc = -*gc + xc;
                    }
                }
                if v == f64::INFINITY {
                    f64::NEG_INFINITY
                } else {
                    -v + 0.5 * norm_sq(x)
                }
            }
        }
    }

    /// `f_ε = (1 − ε) f + ε`, the density ratio of `(1 − ε)μ + εG`.
    pub fn regularize(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SfsError::domain(format!("regularization eps must lie in (0, 1), got {eps}")));
        }
        if self.is_relative() {
            return Err(SfsError::unsupported(
                "regularization needs an absolute density ratio; this target is known only up to a constant",
            ));
        }
        let mut out = self.clone();
        // (1 − ε₂)((1 − ε₁) f + ε₁) + ε₂ = (1 − ε) f + ε with 1 − ε = (1 − ε₁)(1 − ε₂)
        let combined = match self.eps {
            None => eps,
            Some(prev) => 1.0 - (1.0 - prev) * (1.0 - eps),
        };
        out.eps = Some(combined);
        out.eps_logs = ((1.0 - combined).ln(), combined.ln());
        out.mixture = self.mixture.as_ref().map(|m| m.regularized(eps));
        out.ground_truth = self.ground_truth.as_ref().map(|g| match g {
            GroundTruth::Mixture(m) => GroundTruth::Mixture(m.regularized(eps)),
            GroundTruth::Bump { bump, .. } => GroundTruth::Bump { bump: bump.clone(), eps: combined },
        });
        out.regularity = self.regularity.map(|r| TargetRegularity {
            gamma: (1.0 - eps) * r.gamma,
            xi: (1.0 - eps) * r.xi + eps,
            zeta: r.zeta.map(|z| (1.0 - eps) * z + eps),
        });
        Ok(out)
    }

    /// The target with the regularization undone (the law the regularized
    /// sampler is ultimately compared against).
    pub fn unregularized(&self) -> Self {
        if self.eps.is_none() {
            return self.clone();
        }
        // rebuild from the form; constructors are infallible for an existing spec
        let mut base = Self::new(self.dim, self.form.clone()).expect("existing spec is valid");
        base.log_scale = self.log_scale;
        base
    }

    /// `n` i.i.d. draws from `μ`, one counter-based stream per draw.
    pub fn sample_ground_truth_raw(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let gt = self.ground_truth.as_ref().ok_or_else(|| {
            SfsError::unsupported("target declares no ground-truth sampler")
        })?;
        let p = self.dim;
        let mut data = vec![0.0; n * p];
        crate::par::for_each_chunk(&mut data, p, |i, row| {
            let mut rng = stream(seed, StreamRole::GroundTruth, i as u64, 0);
            gt.sample_into(&mut rng, row);
        });
        Ok(data)
    }

    /// As [`Self::sample_ground_truth_raw`], packaged with provenance.
    pub fn sample_ground_truth(&self, n: usize, seed: u64) -> Result<crate::batch::SampleBatch> {
        let data = self.sample_ground_truth_raw(n, seed)?;
        Ok(crate::batch::SampleBatch {
            samples: crate::batch::Samples::new(n, self.dim, data)?,
            config_digest: crate::config::ground_truth_digest(self, n, seed),
            seed,
            wallclock: 0.0,
            trajectories: None,
        })
    }

    /// Checks that the closed-form mixture and the evaluated `log f` agree.
    pub fn mixture_agreement(&self, probes: &[Vec<f64>]) -> Option<f64> {
        let m = self.mixture.as_ref()?;
        let mut worst: f64 = 0.0;
        for x in probes {
            let direct = self.log_f_shape(x);
            let closed = m.log_tilted(x, 1.0, None);
            let gap = match &self.form {
                // potential forms only agree up to their additive constant
                Form::Potential(_) => 0.0,
                _ => (direct - closed).abs(),
            };
            worst = worst.max(gap);
        }
        Some(worst)
    }
}

fn potential_value(model: &PotentialModel, x: &[f64]) -> f64 {
    match model {
        PotentialModel::Gaussian { mean } => 0.5 * crate::math::dist_sq(x, mean),
        PotentialModel::Mixture(m) => {
            let terms: Vec<f64> = m
                .weights
                .iter()
                .zip(&m.means)
                .map(|(w, mu)| w.ln() - 0.5 * crate::math::dist_sq(x, mu))
                .collect();
            -crate::math::logsumexp(&terms)
        }
        PotentialModel::Bump(b) => {
            let lp = b.log_profile(x);
            if lp == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                -lp
            }
        }
        PotentialModel::Custom(c) => c.value(x),
    }
}

fn potential_gradient(model: &PotentialModel, x: &[f64], out: &mut [f64]) {
    match model {
        PotentialModel::Gaussian { mean } => {
            for ((o, xc), mc) in out.iter_mut().zip(x).zip(mean) {
                *o = xc - mc;
            }
        }
        PotentialModel::Mixture(m) => {
            // ∇V = x − Σ r_i m_i with responsibilities r_i
            let terms: Vec<f64> = m
                .weights
                .iter()
                .zip(&m.means)
                .map(|(w, mu)| w.ln() - 0.5 * crate::math::dist_sq(x, mu))
                .collect();
            let lse = crate::math::logsumexp(&terms);
            out.copy_from_slice(x);
            for (t, mu) in terms.iter().zip(&m.means) {
                let r = (t - lse).exp();
                for (o, mc) in out.iter_mut().zip(mu) {
                    *o -= r * mc;
                }
            }
        }
        PotentialModel::Bump(b) => {
            b.grad_log_profile(x, out);
            out.iter_mut().for_each(|v| *v = -*v);
        }
        PotentialModel::Custom(c) => c.gradient(x, out),
    }
}
