//! Wasserstein-2 distances between empirical measures, moment diagnostics
//! and log-log rate fits.
//!
//! All distance estimators take equal-size batches; resampling, if needed, is
//! the caller's business.

use serde::{Deserialize, Serialize};

use crate::batch::Samples;
use crate::error::{Result, SfsError};
use crate::math::{dist_sq, mean};
use crate::rng::{fill_normal, stream, StreamRole};
use crate::target::TargetSpec;

/// Largest `n` accepted by [`exact_w2_assignment`].
pub const ASSIGNMENT_LIMIT: usize = 512;

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_unstable_by(f64::total_cmp);
    out
}

/// Exact W2 between two equal-size 1-D empirical measures (quantile coupling).
pub fn wasserstein2_1d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(SfsError::domain(format!("batch sizes differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.is_empty() {
        return Err(SfsError::domain("empty batches"));
    }
    if !crate::math::all_finite(xs) || !crate::math::all_finite(ys) {
        return Err(SfsError::domain("non-finite sample values"));
    }
    let (a, b) = (sorted(xs), sorted(ys));
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((total / xs.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicedW2 {
    pub value: f64,
    pub se: f64,
    pub n_proj: usize,
}

/// Mean over `n_proj` random unit directions of the 1-D W2 of the projections.
///
/// For `p = 1` every direction is `±1` and the 1-D distance is sign-invariant,
/// so the exact 1-D value is returned with zero spread.
pub fn sliced_w2(xs: &Samples, ys: &Samples, n_proj: usize, seed: u64) -> Result<SlicedW2> {
    if xs.len() != ys.len() || xs.dim() != ys.dim() {
        return Err(SfsError::domain("sliced W2 needs batches of equal size and dimension"));
    }
    if n_proj == 0 {
        return Err(SfsError::domain("n_proj must be >= 1"));
    }
    let p = xs.dim();
    if p == 1 {
        let value = wasserstein2_1d(xs.data(), ys.data())?;
        return Ok(SlicedW2 { value, se: 0.0, n_proj });
    }
    let per_direction: Vec<Result<f64>> = crate::par::map_range(n_proj, |d| {
        let mut u = vec![0.0; p];
        let mut rng = stream(seed, StreamRole::Projection, d as u64, 0);
        loop {
            fill_normal(&mut rng, &mut u);
            let n = crate::math::norm(&u);
            if n > 0.0 {
                u.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
        wasserstein2_1d(&xs.project(&u), &ys.project(&u))
    });
    let values = per_direction.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SlicedW2 {
        value: mean(&values),
        se: crate::math::standard_error(&values).unwrap_or(0.0),
        n_proj,
    })
}

/// Minimum-cost perfect matching on a dense `n × n` cost matrix (row-major).
///
/// Shortest-augmenting-path Hungarian method with dual potentials, `O(n³)`.
/// Returns `assignment[row] = column`.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    const NONE: usize = usize::MAX;
    // 1-based columns; column 0 is the virtual root of each augmentation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![NONE; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 0..n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 * n + (j - 1)] - u[i0 + 1] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j] + 1] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == NONE {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j]] = j - 1;
    }
    assignment
}

/// Exact W2 between two equal-size empirical measures in any dimension.
pub fn exact_w2_assignment(xs: &Samples, ys: &Samples) -> Result<f64> {
    if xs.len() != ys.len() || xs.dim() != ys.dim() {
        return Err(SfsError::domain("exact W2 needs batches of equal size and dimension"));
    }
    let n = xs.len();
    if n == 0 {
        return Err(SfsError::domain("empty batches"));
    }
    if n > ASSIGNMENT_LIMIT {
        return Err(SfsError::unsupported(format!(
            "exact assignment is limited to n <= {ASSIGNMENT_LIMIT} (got {n}); use sliced_w2"
        )));
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = dist_sq(xs.row(i), ys.row(j));
        }
    }
    let assignment = min_cost_assignment(&cost, n);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok((total / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMoments {
    pub mean_error: f64,
    /// `None` when `n < 2`.
    pub mean_se: Option<f64>,
    pub variance_error: f64,
    pub variance_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: usize,
    pub reference: String,
    pub coordinates: Vec<CoordinateMoments>,
}

impl MomentReport {
    /// Largest `|error| / SE` over means and variances; `None` if any SE is undefined.
    pub fn max_z(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for c in &self.coordinates {
            worst = worst.max(c.mean_error.abs() / c.mean_se?);
            worst = worst.max(c.variance_error.abs() / c.variance_se?);
        }
        Some(worst)
    }
}

fn moments_against(samples: &Samples, means: &[f64], vars: &[f64], reference: &str) -> MomentReport {
    let n = samples.len();
    let coordinates = (0..samples.dim())
        .map(|c| {
            let col = samples.column(c);
            let m = mean(&col);
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            let m4 = col.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n as f64;
            let defined = n >= 2;
            CoordinateMoments {
                mean_error: m - means[c],
                mean_se: defined.then(|| (var / n as f64).sqrt()),
                variance_error: var - vars[c],
                variance_se: defined.then(|| ((m4 - var * var).max(0.0) / n as f64).sqrt()),
            }
        })
        .collect();
    MomentReport { n, reference: reference.to_string(), coordinates }
}

/// Mean/variance discrepancies against the target's analytic moments.
pub fn moment_report(samples: &Samples, target: &TargetSpec) -> Result<MomentReport> {
    let gt = target
        .ground_truth()
        .ok_or_else(|| SfsError::unsupported("target has no analytic moments; use moment_report_vs_batch"))?;
    if samples.dim() != target.dim() {
        return Err(SfsError::domain("sample dimension does not match target"));
    }
    let p = target.dim();
    Ok(moments_against(samples, &gt.mean(p), &gt.coordinate_variance(p), "analytic"))
}

/// Mean/variance discrepancies against a ground-truth batch.
pub fn moment_report_vs_batch(samples: &Samples, reference: &Samples) -> Result<MomentReport> {
    if samples.dim() != reference.dim() {
        return Err(SfsError::domain("sample dimension does not match reference"));
    }
    let n = reference.len() as f64;
    let means: Vec<f64> = (0..reference.dim()).map(|c| mean(&reference.column(c))).collect();
    let vars: Vec<f64> = (0..reference.dim())
        .map(|c| {
            let col = reference.column(c);
            col.iter().map(|v| (v - means[c]).powi(2)).sum::<f64>() / n
        })
        .collect();
    Ok(moments_against(samples, &means, &vars, "batch"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub parameter: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(log parameter, log error)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    fit_named_rate("parameter", points)
}

pub fn fit_named_rate(name: &str, points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(SfsError::domain(format!("rate fit needs >= 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(SfsError::domain("rate fit needs positive finite parameters and errors"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(SfsError::domain("rate fit needs at least two distinct parameter values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { parameter: name.to_string(), slope, intercept, r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Accuracy summary of one sampler output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2_1d: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sliced_w2: Option<SlicedW2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_w2_small: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_errors: Option<MomentReport>,
    pub rate_fits: Vec<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<f64>,
}

/// W2 from `samples` to a ground-truth batch plus the noise floor measured
/// between two independent ground-truth batches of the same size.
pub fn compare_to_ground_truth(
    samples: &Samples,
    target: &TargetSpec,
    seed: u64,
    n_proj: usize,
) -> Result<MetricReport> {
    let n = samples.len();
    let reference = Samples::new(n, target.dim(), target.sample_ground_truth_raw(n, seed)?)?;
    let twin = Samples::new(n, target.dim(), target.sample_ground_truth_raw(n, crate::rng::child_seed(seed, 1))?)?;
    let mut report = MetricReport::default();
    if target.dim() == 1 {
        let w = wasserstein2_1d(samples.data(), reference.data())?;
        report.w2_1d = Some(Estimate { value: w, se: 0.0 });
        report.noise_floor = Some(wasserstein2_1d(twin.data(), reference.data())?);
    } else {
        report.sliced_w2 = Some(sliced_w2(samples, &reference, n_proj, seed)?);
        report.noise_floor = Some(sliced_w2(&twin, &reference, n_proj, seed)?.value);
    }
    if n <= 256 {
        report.exact_w2_small = Some(exact_w2_assignment(samples, &reference)?);
    }
    report.moment_errors = moment_report(samples, target).ok();
    Ok(report)
}
