use serde::{Deserialize, Serialize};

use crate::error::{Result, SfsError};
use crate::math::norm_sq;

/// Row-major `n × p` sample matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(SfsError::domain("samples need dimension >= 1"));
        }
        if data.len() != n * dim {
            return Err(SfsError::domain(format!("expected {} values for {n} x {dim}, got {}", n * dim, data.len())));
        }
        Ok(Self { n, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(SfsError::domain("ragged sample rows"));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    /// One-dimensional samples.
    pub fn from_column(values: Vec<f64>) -> Self {
        Self { n: values.len(), dim: 1, data: values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    /// Projection onto direction `u`.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        self.rows().map(|r| crate::math::dot(r, u)).collect()
    }

    pub fn all_finite(&self) -> bool {
        crate::math::all_finite(&self.data)
    }

    /// A copy shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> Self {
        let mut data = self.data.clone();
        for row in data.chunks_mut(self.dim) {
            for (x, d) in row.iter_mut().zip(v) {
                *x += d;
            }
        }
        Self { n: self.n, dim: self.dim, data }
    }
}

/// Recorded states `Ỹ_{t_0}, …, Ỹ_{t_K}` for every particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub n: usize,
    /// Number of recorded states per particle, `K + 1`.
    pub len: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Trajectories {
    pub fn state(&self, particle: usize, k: usize) -> &[f64] {
        let start = (particle * self.len + k) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Empirical `E‖Ỹ_{t_k}‖²` per step with its CLT standard error.
    pub fn second_moments(&self) -> Vec<(f64, f64)> {
        (0..self.len)
            .map(|k| {
                let v: Vec<f64> = (0..self.n).map(|i| norm_sq(self.state(i, k))).collect();
                let mean = crate::math::mean(&v);
                let se = crate::math::standard_error(&v).unwrap_or(0.0);
                (mean, se)
            })
            .collect()
    }
}

/// Terminal samples of a run together with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub samples: Samples,
    pub config_digest: String,
    pub seed: u64,
    pub wallclock: f64,
    pub trajectories: Option<Trajectories>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}
