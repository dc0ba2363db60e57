//! Schrödinger–Föllmer sampling: an Euler–Maruyama discretization of the
//! diffusion on `[0, 1]` that carries a point mass at the origin to a target
//! `μ`, with drift `∇log Q_{1−t} f` for the density ratio `f = dμ/dN(0, I)`.
//!
//! The drift is available in closed form for Gaussian mixtures and otherwise
//! estimated by Monte Carlo from `f` and `∇f` (gradient estimator) or from
//! `f` alone (Stein estimator).

pub mod batch;
pub mod config;
pub mod drift;
pub mod error;
pub mod harness;
pub mod io;
pub mod math;
pub mod metrics;
mod par;
pub mod rng;
pub mod sampler;
pub mod target;

pub use batch::{SampleBatch, Samples, Trajectories};
pub use config::RunConfig;
pub use drift::{drift_exact, drift_mc_grad, drift_mc_stein, DriftEvaluator, DriftMode};
pub use error::{Result, SfsError};
pub use sampler::{sfs_run, sfs_trajectory, ula_run, EpsSchedule, SamplerConfig};
pub use target::{GaussianMixture, TargetSpec};
