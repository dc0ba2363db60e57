//! Euler–Maruyama discretization of the Schrödinger–Föllmer diffusion.
//!
//! Each particle starts at `Y_0 = 0` and takes `K` steps of size `s = 1/K`:
//! `Y_{k+1} = Y_k + s·b̂(Y_k, t_k) + √s·ε_{k+1}` with `t_k = k·s`. The drift is
//! evaluated at the left endpoint only, so the last evaluation happens at
//! `t = 1 − s` and the Stein-form divisor `√(1 − t)` stays positive.
//!
//! Increments for `(particle i, step k)` come from the stream
//! `(seed, Increment, i, k)`, inner drift batches from `(seed, DriftBatch, i, k)`.

use serde::{Deserialize, Serialize};

use crate::batch::{SampleBatch, Samples, Stopwatch, Trajectories};
use crate::drift::{DriftEvaluator, DriftMode, DriftScratch};
use crate::error::{Result, SfsError};
use crate::rng::{fill_normal, stream, StreamRole};
use crate::target::TargetSpec;

/// Default cap on recorded trajectory storage (256 MiB).
pub const DEFAULT_TRAJECTORY_BUDGET: u64 = 256 << 20;

/// How the regularization level ε is chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", content = "eps", rename_all = "kebab-case")]
pub enum EpsSchedule {
    #[default]
    None,
    Fixed(f64),
    /// `ε = (log m)^{-1/5}`
    LogRule,
    /// `ε = m^{-1/5}`
    PowerRule,
}

impl EpsSchedule {
    /// Binds ε once for the whole run.
    pub fn resolve(&self, m: Option<usize>) -> Result<Option<f64>> {
        let need_m = || {
            m.ok_or_else(|| SfsError::invalid("log/power eps rules need an MC drift mode (they are functions of m)"))
        };
        let eps = match *self {
            EpsSchedule::None => return Ok(None),
            EpsSchedule::Fixed(e) => e,
            EpsSchedule::LogRule => (need_m()? as f64).ln().powf(-0.2),
            EpsSchedule::PowerRule => (need_m()? as f64).powf(-0.2),
        };
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SfsError::invalid(format!("eps schedule {self} gives eps = {eps}, outside (0, 1)")));
        }
        Ok(Some(eps))
    }
}

impl std::fmt::Display for EpsSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EpsSchedule::None => write!(f, "none"),
            EpsSchedule::Fixed(e) => write!(f, "fixed:{e}"),
            EpsSchedule::LogRule => write!(f, "log"),
            EpsSchedule::PowerRule => write!(f, "power"),
        }
    }
}

impl std::str::FromStr for EpsSchedule {
    type Err = SfsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(EpsSchedule::None),
            "log" => Ok(EpsSchedule::LogRule),
            "power" => Ok(EpsSchedule::PowerRule),
            _ => match s.strip_prefix("fixed:") {
                Some(v) => v
                    .parse::<f64>()
                    .map(EpsSchedule::Fixed)
                    .map_err(|_| SfsError::invalid(format!("bad eps value in `{s}`"))),
                None => Err(SfsError::invalid(format!("unknown eps rule `{s}` (none, fixed:<v>, log, power)"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of Euler–Maruyama steps `K`; the step size is `1/K`.
    pub steps: usize,
    pub particles: usize,
    pub drift: DriftMode,
    #[serde(default)]
    pub eps_schedule: EpsSchedule,
    pub seed: u64,
    #[serde(default)]
    pub record_trajectory: bool,
    #[serde(default = "default_budget")]
    pub trajectory_budget_bytes: u64,
}

fn default_budget() -> u64 {
    DEFAULT_TRAJECTORY_BUDGET
}

impl SamplerConfig {
    pub fn new(steps: usize, particles: usize, drift: DriftMode, seed: u64) -> Self {
        Self {
            steps,
            particles,
            drift,
            eps_schedule: EpsSchedule::None,
            seed,
            record_trajectory: false,
            trajectory_budget_bytes: DEFAULT_TRAJECTORY_BUDGET,
        }
    }

    pub fn with_eps(mut self, schedule: EpsSchedule) -> Self {
        self.eps_schedule = schedule;
        self
    }

    pub fn step_size(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(SfsError::invalid("steps K must be >= 1"));
        }
        if self.particles == 0 {
            return Err(SfsError::invalid("particles n must be >= 1"));
        }
        if let Some(0) = self.drift.mc_size() {
            return Err(SfsError::invalid("MC drift needs m >= 1"));
        }
        self.eps_schedule.resolve(self.drift.mc_size())?;
        Ok(())
    }

    /// Target the chain actually follows: regularized when a schedule is set.
    pub fn effective_target(&self, target: &TargetSpec) -> Result<TargetSpec> {
        match self.eps_schedule.resolve(self.drift.mc_size())? {
            None => Ok(target.clone()),
            Some(eps) => target.regularize(eps),
        }
    }
}

/// Terminal samples of the SFS chain.
pub fn sfs_run(config: &SamplerConfig, target: &TargetSpec) -> Result<SampleBatch> {
    run(config, target, config.record_trajectory)
}

/// As [`sfs_run`] but always records `Ỹ_{t_0..t_K}`.
pub fn sfs_trajectory(config: &SamplerConfig, target: &TargetSpec) -> Result<SampleBatch> {
    run(config, target, true)
}

struct ParticleOutput {
    terminal: Vec<f64>,
    path: Vec<f64>,
}

fn run(config: &SamplerConfig, target: &TargetSpec, record: bool) -> Result<SampleBatch> {
    config.validate()?;
    let clock = Stopwatch::start();
    let p = target.dim();
    let k_steps = config.steps;
    if record {
        let needed = (config.particles as u64)
            .saturating_mul(k_steps as u64 + 1)
            .saturating_mul(p as u64)
            .saturating_mul(8);
        if needed > config.trajectory_budget_bytes {
            return Err(SfsError::Budget { needed, budget: config.trajectory_budget_bytes });
        }
    }
    let effective = config.effective_target(target)?;
    let ev = DriftEvaluator::new(&effective, config.drift, config.seed)?;
    let s = config.step_size();
    let sqrt_s = s.sqrt();

    let outputs: Vec<Result<ParticleOutput>> = crate::par::map_range(config.particles, |i| {
        let particle = i as u64;
        let mut y = vec![0.0; p];
        let mut b = vec![0.0; p];
        let mut noise = vec![0.0; p];
        let mut scratch = DriftScratch::default();
        let mut path = if record { Vec::with_capacity((k_steps + 1) * p) } else { Vec::new() };
        if record {
            path.extend_from_slice(&y);
        }
        for k in 0..k_steps {
            let step = k as u64;
            let t = k as f64 * s;
            ev.eval_into(&y, t, step, particle, &mut scratch, &mut b)
                .map_err(|e| e.at(particle, step))?;
            fill_normal(&mut stream(config.seed, StreamRole::Increment, particle, step), &mut noise);
            for ((yc, bc), nc) in y.iter_mut().zip(&b).zip(&noise) {
                *yc += s * bc + sqrt_s * nc;
            }
            if !crate::math::all_finite(&y) {
                return Err(SfsError::NonFinite { particle, step, state: y });
            }
            if record {
                path.extend_from_slice(&y);
            }
        }
        Ok(ParticleOutput { terminal: y, path })
    });

    let mut data = Vec::with_capacity(config.particles * p);
    let mut traj = Vec::new();
    for out in outputs {
        let out = out?;
        data.extend_from_slice(&out.terminal);
        traj.extend_from_slice(&out.path);
    }
    let samples = Samples::new(config.particles, p, data)?;
    Ok(SampleBatch {
        samples,
        config_digest: crate::config::run_digest(config, target),
        seed: config.seed,
        wallclock: clock.seconds(),
        trajectories: record.then(|| Trajectories { n: config.particles, len: k_steps + 1, dim: p, data: traj }),
    })
}

/// Unadjusted Langevin baseline: `n = config.particles` chains started at 0,
/// each run for `burn_in + config.steps` iterations of
/// `x ← x + h·∇log π(x) + √(2h)·ξ`; the terminal states are returned.
///
/// `∇log π = ∇log f − x`, which for potential-form targets is `−∇V`.
pub fn ula_run(config: &SamplerConfig, target: &TargetSpec, step: f64, burn_in: usize) -> Result<SampleBatch> {
    if config.particles == 0 {
        return Err(SfsError::invalid("particles n must be >= 1"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(SfsError::invalid(format!("Langevin step must be positive, got {step}")));
    }
    let clock = Stopwatch::start();
    let effective = config.effective_target(target)?;
    let p = target.dim();
    let total = burn_in + config.steps;
    let noise_scale = (2.0 * step).sqrt();

    let outputs: Vec<Result<Vec<f64>>> = crate::par::map_range(config.particles, |i| {
        let particle = i as u64;
        let mut x = vec![0.0; p];
        let mut g = vec![0.0; p];
        let mut noise = vec![0.0; p];
        for k in 0..total {
            effective.log_f_shape_grad(&x, &mut g);
            fill_normal(&mut stream(config.seed, StreamRole::Langevin, particle, k as u64), &mut noise);
            for ((xc, gc), nc) in x.iter_mut().zip(&g).zip(&noise) {
                *xc += step * (gc - *xc) + noise_scale * nc;
            }
            if !crate::math::all_finite(&x) {
                return Err(SfsError::NonFinite { particle, step: k as u64, state: x });
            }
        }
        Ok(x)
    });
    let mut data = Vec::with_capacity(config.particles * p);
    for out in outputs {
        data.extend(out?);
    }
    Ok(SampleBatch {
        samples: Samples::new(config.particles, p, data)?,
        config_digest: crate::config::ula_digest(config, target, step, burn_in),
        seed: config.seed,
        wallclock: clock.seconds(),
        trajectories: None,
    })
}
