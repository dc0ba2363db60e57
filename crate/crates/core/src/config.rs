//! TOML run configuration.
//!
//! ```toml
//! seed = 7                      # required; there is no clock-based default
//!
//! [target]
//! dim = 1
//! kind = "mixture"              # standard-normal | gaussian | mixture | bump
//! form = "density-ratio"        # or "potential" (f known only up to a constant)
//! weights = [0.5, 0.5]
//! means = [[-2.0], [2.0]]
//! # mean = [2.0]                # kind = "gaussian"
//! # radius = 2.0                # kind = "bump"
//! # log_scale = 0.0             # multiplies f by exp(log_scale)
//! # eps = 0.1                   # pre-regularize: f_eps = (1 - eps) f + eps
//!
//! [target.regularity]           # optional declared constants
//! gamma = 1.0
//! xi = 0.1
//!
//! [sampler]
//! steps = 100                   # K
//! particles = 10000             # n
//! drift = "exact"               # exact | mc-grad | mc-stein | auto
//! mc_size = 100                 # m
//! eps_rule = "none"             # none | fixed:<v> | log | power
//! ```
//!
//! Optional `[drift_check]`, `[regularity]` and `[experiment]` sections drive
//! the matching CLI subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drift::{DriftMode, ProbeGrid};
use crate::error::{Result, SfsError};
use crate::harness::{SweepAxis, TargetRef, UlaSettings};
use crate::sampler::{EpsSchedule, SamplerConfig, DEFAULT_TRAJECTORY_BUDGET};
use crate::target::{
    Bump, Form, GaussianMixture, PotentialModel, RatioModel, TargetRegularity, TargetSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    StandardNormal,
    Gaussian,
    Mixture,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    #[default]
    DensityRatio,
    Potential,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn is_default_form(v: &FormKind) -> bool {
    *v == FormKind::DensityRatio
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub dim: usize,
    pub kind: TargetKind,
    #[serde(default, skip_serializing_if = "is_default_form")]
    pub form: FormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub log_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<TargetRegularity>,
}

impl TargetConfig {
    pub fn new(dim: usize, kind: TargetKind) -> Self {
        Self {
            dim,
            kind,
            form: FormKind::DensityRatio,
            mean: None,
            weights: None,
            means: None,
            radius: None,
            log_scale: 0.0,
            eps: None,
            regularity: None,
        }
    }

    pub fn build(&self) -> Result<TargetSpec> {
        let missing = |field: &str| SfsError::invalid(format!("target kind {:?} needs `{field}`", self.kind));
        let form = match (self.kind, self.form) {
            (TargetKind::StandardNormal, FormKind::DensityRatio) => Form::DensityRatio(RatioModel::Constant),
            (TargetKind::StandardNormal, FormKind::Potential) => {
                Form::Potential(PotentialModel::Gaussian { mean: vec![0.0; self.dim] })
            }
            (TargetKind::Gaussian, form) => {
                let mean = self.mean.clone().ok_or_else(|| missing("mean"))?;
                match form {
                    FormKind::DensityRatio => Form::DensityRatio(RatioModel::Gaussian { mean }),
                    FormKind::Potential => Form::Potential(PotentialModel::Gaussian { mean }),
                }
            }
            (TargetKind::Mixture, form) => {
                let m = GaussianMixture::new(
                    self.weights.clone().ok_or_else(|| missing("weights"))?,
                    self.means.clone().ok_or_else(|| missing("means"))?,
                )?;
                match form {
                    FormKind::DensityRatio => Form::DensityRatio(RatioModel::Mixture(m)),
                    FormKind::Potential => Form::Potential(PotentialModel::Mixture(m)),
                }
            }
            (TargetKind::Bump, form) => {
                let b = Bump::new(self.radius.ok_or_else(|| missing("radius"))?)?;
                match form {
                    FormKind::DensityRatio => Form::DensityRatio(RatioModel::Bump(b)),
                    FormKind::Potential => Form::Potential(PotentialModel::Bump(b)),
                }
            }
        };
        let mut spec = TargetSpec::new(self.dim, form)?;
        if let Some(eps) = self.eps {
            spec = spec.regularize(eps)?;
        }
        if self.log_scale != 0.0 {
            if !self.log_scale.is_finite() {
                return Err(SfsError::invalid("log_scale must be finite"));
            }
            spec = spec.scaled(self.log_scale.exp())?;
        }
        if let Some(r) = self.regularity {
            spec = spec.with_regularity(r)?;
        }
        Ok(spec)
    }

    /// Declarative description of `spec`; `None` for user-supplied closures.
    pub fn from_spec(spec: &TargetSpec) -> Option<Self> {
        let dim = spec.dim();
        let mut cfg = match spec.form() {
            Form::DensityRatio(RatioModel::Constant) => Self::new(dim, TargetKind::StandardNormal),
            Form::DensityRatio(RatioModel::Gaussian { mean }) | Form::Potential(PotentialModel::Gaussian { mean }) => {
                let mut c = Self::new(dim, TargetKind::Gaussian);
                c.mean = Some(mean.clone());
                c
            }
            Form::DensityRatio(RatioModel::Mixture(m)) | Form::Potential(PotentialModel::Mixture(m)) => {
                let mut c = Self::new(dim, TargetKind::Mixture);
                c.weights = Some(m.weights().to_vec());
                c.means = Some(m.means().to_vec());
                c
            }
            Form::DensityRatio(RatioModel::Bump(b)) | Form::Potential(PotentialModel::Bump(b)) => {
                let mut c = Self::new(dim, TargetKind::Bump);
                c.radius = Some(b.radius);
                c
            }
            Form::DensityRatio(RatioModel::Custom(_)) | Form::Potential(PotentialModel::Custom(_)) => return None,
        };
        if matches!(spec.form(), Form::Potential(_)) {
            cfg.form = FormKind::Potential;
        }
        cfg.log_scale = spec.log_scale();
        cfg.eps = spec.eps();
        cfg.regularity = spec.regularity().copied();
        Some(cfg)
    }
}

/// Named targets available to sweeps (the dimension axis rebuilds them per `p`).
pub fn builtin_target(name: &str, dim: usize) -> Result<TargetConfig> {
    let axis = |v: f64| {
        let mut m = vec![0.0; dim];
        m[0] = v;
        m
    };
    if dim == 0 {
        return Err(SfsError::invalid("dimension must be >= 1"));
    }
    let mut cfg = match name {
        "standard-normal" => TargetConfig::new(dim, TargetKind::StandardNormal),
        "gaussian" => {
            let mut c = TargetConfig::new(dim, TargetKind::Gaussian);
            c.mean = Some(axis(2.0));
            c
        }
        "mixture" | "mixture-wide" => {
            let d = if name == "mixture" { 2.0 } else { 4.0 };
            let mut c = TargetConfig::new(dim, TargetKind::Mixture);
            c.weights = Some(vec![0.5, 0.5]);
            c.means = Some(vec![axis(-d), axis(d)]);
            c
        }
        "bump" => {
            let mut c = TargetConfig::new(dim, TargetKind::Bump);
            c.radius = Some(2.0);
            c
        }
        other => return Err(SfsError::UnknownTarget(other.to_string())),
    };
    cfg.dim = dim;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftChoice {
    Exact,
    McGrad,
    McStein,
    /// Exact when the target is a mixture, otherwise the gradient form.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_drift")]
    pub drift: DriftChoice,
    #[serde(default = "default_mc_size")]
    pub mc_size: usize,
    #[serde(default = "default_eps_rule")]
    pub eps_rule: String,
    #[serde(default)]
    pub record_trajectory: bool,
    #[serde(default = "default_budget")]
    pub trajectory_budget_bytes: u64,
}

fn default_steps() -> usize {
    100
}
fn default_particles() -> usize {
    10_000
}
fn default_drift() -> DriftChoice {
    DriftChoice::Auto
}
fn default_mc_size() -> usize {
    100
}
fn default_eps_rule() -> String {
    "none".into()
}
fn default_budget() -> u64 {
    DEFAULT_TRAJECTORY_BUDGET
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            particles: default_particles(),
            drift: default_drift(),
            mc_size: default_mc_size(),
            eps_rule: default_eps_rule(),
            record_trajectory: false,
            trajectory_budget_bytes: default_budget(),
        }
    }
}

impl SamplerSection {
    pub fn drift_mode(&self, target: &TargetSpec) -> DriftMode {
        let m = self.mc_size;
        match self.drift {
            DriftChoice::Exact => DriftMode::Exact,
            DriftChoice::McGrad => DriftMode::McGrad { m },
            DriftChoice::McStein => DriftMode::McStein { m },
            DriftChoice::Auto => {
                let regularized = !matches!(self.eps_rule.as_str(), "none");
                if target.mixture_params().is_some() && !regularized {
                    DriftMode::Exact
                } else {
                    DriftMode::default_for(target, m)
                }
            }
        }
    }

    pub fn to_sampler_config(&self, target: &TargetSpec, seed: u64) -> Result<SamplerConfig> {
        let cfg = SamplerConfig {
            steps: self.steps,
            particles: self.particles,
            drift: self.drift_mode(target),
            eps_schedule: self.eps_rule.parse::<EpsSchedule>()?,
            seed,
            record_trajectory: self.record_trajectory,
            trajectory_budget_bytes: self.trajectory_budget_bytes,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftCheckSection {
    #[serde(default = "default_check_lo")]
    pub lo: f64,
    #[serde(default = "default_check_hi")]
    pub hi: f64,
    #[serde(default = "default_check_points")]
    pub points: usize,
    #[serde(default = "default_check_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_check_reps")]
    pub replications: usize,
}

fn default_check_lo() -> f64 {
    -4.0
}
fn default_check_hi() -> f64 {
    4.0
}
fn default_check_points() -> usize {
    25
}
fn default_check_times() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 0.99]
}
fn default_check_reps() -> usize {
    32
}

impl Default for DriftCheckSection {
    fn default() -> Self {
        Self {
            lo: default_check_lo(),
            hi: default_check_hi(),
            points: default_check_points(),
            times: default_check_times(),
            replications: default_check_reps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Builtin target name; when absent the `[target]` section is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub axis: String,
    pub values: Vec<f64>,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default = "default_proj")]
    pub n_proj: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ula: Option<UlaSettings>,
}

fn default_reps() -> usize {
    3
}
fn default_proj() -> usize {
    32
}

impl ExperimentSection {
    pub fn sweep_axis(&self) -> Result<SweepAxis> {
        let ints = || -> Result<Vec<usize>> {
            self.values
                .iter()
                .map(|v| {
                    if *v >= 1.0 && v.fract() == 0.0 {
                        Ok(*v as usize)
                    } else {
                        Err(SfsError::invalid(format!("axis `{}` needs positive integers, got {v}", self.axis)))
                    }
                })
                .collect()
        };
        Ok(match self.axis.as_str() {
            "steps" => SweepAxis::StepSize(ints()?),
            "mc-size" => SweepAxis::McSize(ints()?),
            "dimension" => SweepAxis::Dimension(ints()?),
            "epsilon" => SweepAxis::Epsilon(self.values.clone()),
            other => return Err(SfsError::invalid(format!("unknown sweep axis `{other}`"))),
        })
    }

    pub fn target_ref(&self, fallback: &TargetConfig) -> TargetRef {
        match &self.target {
            Some(name) => TargetRef::Builtin(name.clone()),
            None => TargetRef::Config(fallback.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub target: TargetConfig,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_check: Option<DriftCheckSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<ProbeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SfsError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|message| SfsError::ConfigParse { path: path.to_path_buf(), message })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SfsError::Serialize(e.to_string()))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn target_descriptor(target: &TargetSpec) -> serde_json::Value {
    match TargetConfig::from_spec(target) {
        Some(cfg) => serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
        None => serde_json::json!({ "custom": true, "dim": target.dim() }),
    }
}

/// SHA-256 over the canonical JSON of sampler config and target.
pub fn run_digest(config: &SamplerConfig, target: &TargetSpec) -> String {
    let doc = serde_json::json!({ "sampler": config, "target": target_descriptor(target) });
    sha256_hex(doc.to_string().as_bytes())
}

pub fn ula_digest(config: &SamplerConfig, target: &TargetSpec, step: f64, burn_in: usize) -> String {
    let doc = serde_json::json!({
        "langevin": { "step": step, "burn_in": burn_in },
        "sampler": config,
        "target": target_descriptor(target),
    });
    sha256_hex(doc.to_string().as_bytes())
}

pub fn ground_truth_digest(target: &TargetSpec, n: usize, seed: u64) -> String {
    let doc = serde_json::json!({ "ground_truth": { "n": n, "seed": seed }, "target": target_descriptor(target) });
    sha256_hex(doc.to_string().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 7

[target]
dim = 1
kind = "mixture"
weights = [0.5, 0.5]
means = [[-2.0], [2.0]]

[target.regularity]
gamma = 3.0
xi = 0.1

[sampler]
steps = 50
particles = 100
drift = "mc-stein"
mc_size = 64
eps_rule = "fixed:0.2"
"#;

    #[test]
    fn parses_example() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.seed, 7);
        let target = cfg.target.build().unwrap();
        let sampler = cfg.sampler.to_sampler_config(&target, cfg.seed).unwrap();
        assert_eq!(sampler.drift, DriftMode::McStein { m: 64 });
        assert_eq!(sampler.eps_schedule, EpsSchedule::Fixed(0.2));
        assert_eq!(target.regularity().unwrap().xi, 0.1);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = EXAMPLE.replace("seed = 7", "");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = EXAMPLE.replace("steps = 50", "stepz = 50");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn missing_kind_fields_are_reported() {
        let cfg = TargetConfig::new(1, TargetKind::Gaussian);
        assert!(cfg.build().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn builtin_names() {
        for name in ["standard-normal", "gaussian", "mixture", "mixture-wide", "bump"] {
            for dim in [1, 3] {
                let t = builtin_target(name, dim).unwrap().build().unwrap();
                assert_eq!(t.dim(), dim);
            }
        }
        assert!(matches!(builtin_target("banana", 1), Err(SfsError::UnknownTarget(_))));
    }

    #[test]
    fn digest_tracks_config() {
        let t = TargetSpec::standard_normal(1).unwrap();
        let a = SamplerConfig::new(10, 5, DriftMode::Exact, 1);
        let mut b = a.clone();
        assert_eq!(run_digest(&a, &t), run_digest(&b, &t));
        b.seed = 2;
        assert_ne!(run_digest(&a, &t), run_digest(&b, &t));
        assert_eq!(run_digest(&a, &t).len(), 64);
    }
}
