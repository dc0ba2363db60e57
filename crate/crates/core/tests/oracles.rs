use sfs_core::config::{builtin_target, DriftCheckSection};
use sfs_core::drift::{drift_mc_grad, drift_mc_stein, heat_semigroup_mc, log_heat_semigroup_mc};
use sfs_core::harness::{compare_samplers, run_experiment, ExperimentPlan, SweepAxis, TargetRef, UlaSettings};
use sfs_core::math::{mean, standard_error};
use sfs_core::metrics::{exact_w2_assignment, moment_report, sliced_w2};
use sfs_core::{
    drift_exact, sfs_trajectory, ula_run, DriftEvaluator, DriftMode, GaussianMixture, SamplerConfig, Samples, TargetSpec,
};

/// `Q_s f(x) = ∫ f(x + √s z) φ(z) dz` by the trapezoid rule on `[−12, 12]`,
/// with `f` the 1-D mixture ratio written out directly.
fn quad_heat(weights: &[f64], means: &[f64], x: f64, s: f64) -> f64 {
    let f = |y: f64| weights.iter().zip(means).map(|(w, m)| w * (m * y - 0.5 * m * m).exp()).sum::<f64>();
    let n = 24_000;
    let h = 24.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let z = -12.0 + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * f(x + s.sqrt() * z) * (-0.5 * z * z).exp();
    }
    acc * h / (2.0 * std::f64::consts::PI).sqrt()
}

#[test]
fn exact_drift_matches_quadrature() {
    let cases: [(&[f64], &[f64]); 3] = [(&[0.5, 0.5], &[-2.0, 2.0]), (&[0.3, 0.7], &[-1.0, 2.5]), (&[0.2, 0.5, 0.3], &[-3.0, 0.5, 1.5])];
    for (w, m) in cases {
        let target =
            TargetSpec::mixture(GaussianMixture::new(w.to_vec(), m.iter().map(|v| vec![*v]).collect()).unwrap()).unwrap();
        for x in [-3.0, -1.2, 0.0, 0.7, 2.5] {
            for t in [0.0, 0.3, 0.6, 0.9] {
                let h = 1e-4;
                let s = 1.0 - t;
                let fd = (quad_heat(w, m, x + h, s).ln() - quad_heat(w, m, x - h, s).ln()) / (2.0 * h);
                let b = drift_exact(&target, &[x], t).unwrap()[0];
                assert!((b - fd).abs() < 1e-6, "w={w:?} m={m:?} x={x} t={t}: {b} vs {fd}");
            }
        }
    }
}

#[test]
fn exact_drift_far_from_origin() {
    let pair = TargetSpec::mixture(GaussianMixture::symmetric_pair(1, 2.0).unwrap()).unwrap();
    let b = drift_exact(&pair, &[5.0], 0.0).unwrap()[0];
    assert!((b - 2.0).abs() < 1e-8);
    // log-sum-exp keeps the ratio finite where e^{m·x} overflows
    let far = drift_exact(&pair, &[400.0], 0.0).unwrap()[0];
    assert_eq!(far, 2.0);
}

#[test]
fn heat_semigroup_gaussian_mgf() {
    // f(x) = e^{x − 1/2} for N(1, 1): Q_1 f(0) = 1, and f(Z) has variance e − 1
    let t = TargetSpec::gaussian(vec![1.0]).unwrap();
    assert!((quad_heat(&[1.0], &[1.0], 0.0, 1.0) - 1.0).abs() < 1e-12);
    let m = 10_000;
    let q = heat_semigroup_mc(&t, &[0.0], 1.0, m, 17).unwrap();
    let se = ((std::f64::consts::E - 1.0) / m as f64).sqrt();
    assert!((q - 1.0).abs() < 4.0 * se, "{q}");
    assert_eq!(log_heat_semigroup_mc(&t, &[0.3], 0.0, 5, 1).unwrap(), t.eval_log_f(&[0.3]).unwrap().value);
}

/// Replicate estimates through distinct particle indices.
fn replicates(ev: &DriftEvaluator, x: f64, t: f64, stein: bool) -> (f64, f64) {
    let v: Vec<f64> = (0..32)
        .map(|r| {
            if stein {
                drift_mc_stein(ev, &[x], t, 0, r).unwrap()[0]
            } else {
                drift_mc_grad(ev, &[x], t, 0, r).unwrap()[0]
            }
        })
        .collect();
    (mean(&v), standard_error(&v).unwrap())
}

#[test]
fn mc_estimators_agree_with_exact_drift() {
    let pair = TargetSpec::mixture(GaussianMixture::symmetric_pair(1, 2.0).unwrap()).unwrap();
    let exact = drift_exact(&pair, &[1.0], 0.5).unwrap()[0];
    let grad = DriftEvaluator::new(&pair, DriftMode::McGrad { m: 10_000 }, 3).unwrap();
    let stein = DriftEvaluator::new(&pair, DriftMode::McStein { m: 10_000 }, 3).unwrap();
    for (ev, is_stein) in [(&grad, false), (&stein, true)] {
        let (b, se) = replicates(ev, 1.0, 0.5, is_stein);
        assert!((b - exact).abs() <= 4.0 * se, "stein={is_stein}: {b} vs {exact} (se {se})");
    }
    let shifted = TargetSpec::gaussian(vec![2.0]).unwrap();
    let ev = DriftEvaluator::new(&shifted, DriftMode::McStein { m: 10_000 }, 4).unwrap();
    let (b, se) = replicates(&ev, 0.0, 0.0, true);
    assert!((b - 2.0).abs() <= 4.0 * se, "{b} (se {se})");
}

#[test]
fn ground_truth_moments() {
    let n = 100_000;
    let flat = TargetSpec::standard_normal(3).unwrap();
    let s = flat.sample_ground_truth(n, 5).unwrap();
    for c in 0..3 {
        assert!(mean(&s.samples.column(c)).abs() < 4.0 / (n as f64).sqrt());
    }
    let pair = TargetSpec::mixture(GaussianMixture::symmetric_pair(1, 2.0).unwrap()).unwrap();
    let s = pair.sample_ground_truth(n, 6).unwrap().samples;
    let col = s.column(0);
    let sd = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
    assert!(mean(&col).abs() < 4.0 * sd.sqrt() / (n as f64).sqrt());
    // E X² = 1 + 4; Var X² = E X⁴ − 25 = (3 + 6·4 + 16) − 25 = 18
    assert!((sd - 5.0).abs() < 4.0 * (18.0 / n as f64).sqrt(), "{sd}");
    let report = moment_report(&s, &pair).unwrap();
    assert!(report.max_z().unwrap() < 4.0);
    assert!(report.coordinates[0].variance_error.abs() < 4.0 * report.coordinates[0].variance_se.unwrap());
}

#[test]
fn regularized_mixture_value_at_origin() {
    let pair = TargetSpec::mixture(GaussianMixture::symmetric_pair(1, 2.0).unwrap()).unwrap();
    let f0 = pair.eval_f(&[0.0]).unwrap();
    assert!((f0 - (-2f64).exp()).abs() < 1e-15);
    let fe = pair.regularize(0.1).unwrap().eval_f(&[0.0]).unwrap();
    assert!((fe - 0.22180).abs() < 5e-6, "{fe}");
}

#[test]
fn constant_drift_increments() {
    let n = 100_000;
    let cfg = SamplerConfig::new(4, n, DriftMode::Exact, 8);
    let batch = sfs_trajectory(&cfg, &TargetSpec::gaussian(vec![2.0]).unwrap()).unwrap();
    let tr = batch.trajectories.unwrap();
    for k in 0..4 {
        let inc: Vec<f64> = (0..n).map(|i| tr.state(i, k + 1)[0] - tr.state(i, k)[0]).collect();
        // each increment is N(s·2, s) with s = 1/4
        assert!((mean(&inc) - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "step {k}");
    }
}

#[test]
fn langevin_stationary_means() {
    let cfg = SamplerConfig::new(0, 10_000, DriftMode::Exact, 9);
    for (target, mu) in [(TargetSpec::standard_normal(1).unwrap(), 0.0), (TargetSpec::gaussian(vec![2.0]).unwrap(), 2.0)] {
        let b = ula_run(&cfg, &target, 0.01, 1_000).unwrap();
        let col = b.samples.column(0);
        assert!((mean(&col) - mu).abs() < 4.0 * standard_error(&col).unwrap(), "{mu}");
    }
}

#[test]
fn sliced_w2_between_shifted_gaussians() {
    let n = 10_000;
    let a = TargetSpec::standard_normal(2).unwrap();
    let b = TargetSpec::gaussian(vec![1.0, 0.0]).unwrap();
    let xs = Samples::new(n, 2, a.sample_ground_truth_raw(n, 1).unwrap()).unwrap();
    let ys = Samples::new(n, 2, b.sample_ground_truth_raw(n, 2).unwrap()).unwrap();
    let s1 = sliced_w2(&xs, &ys, 64, 10).unwrap();
    let s2 = sliced_w2(&xs, &ys, 64, 11).unwrap();
    assert!(s1.value > 0.0);
    assert!((s1.value - s2.value).abs() < 3.0 * (s1.se * s1.se + s2.se * s2.se).sqrt());
    // subsample oracle
    let sub = |s: &Samples| Samples::from_rows(&s.rows().take(256).map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
    let (xs, ys) = (sub(&xs), sub(&ys));
    assert!(sliced_w2(&xs, &ys, 64, 10).unwrap().value <= exact_w2_assignment(&xs, &ys).unwrap());
}

#[test]
fn mc_size_sweep_rates() {
    let mut base = SamplerConfig::new(20, 4_000, DriftMode::McGrad { m: 10 }, 12);
    base.record_trajectory = false;
    let mut plan =
        ExperimentPlan::new(TargetRef::Builtin("mixture".into()), SweepAxis::McSize(vec![10, 100, 1_000]), 3, base);
    plan.drift_grid = DriftCheckSection { replications: 16, ..Default::default() };
    let res = run_experiment(&plan).unwrap();
    assert!(!res.summary.partial);
    assert!(res.summary.trend.as_ref().unwrap().passed, "{:?}", res.cells);
    let fit = res.summary.rate_fits.iter().find(|f| f.parameter.starts_with("drift")).unwrap();
    assert!((fit.slope + 1.0).abs() <= 0.3, "slope {}", fit.slope);
}

#[test]
fn comparison_table() {
    // f ≡ 1: both samplers land on N(0, 1)
    let base = SamplerConfig::new(50, 5_000, DriftMode::Exact, 13);
    let mut plan = ExperimentPlan::new(
        TargetRef::Builtin("standard-normal".into()),
        SweepAxis::StepSize(vec![50, 50, 50]),
        3,
        base.clone(),
    );
    plan.ula = Some(UlaSettings { step: 0.05, burn_in: 25, iterations: 25 });
    for row in compare_samplers(&plan).unwrap() {
        assert!(row.sfs_moment_max_z.unwrap() < 4.0 && row.ula_moment_max_z.unwrap() < 4.0, "{row:?}");
    }
    // separated modes: descriptive only
    let wide = builtin_target("mixture-wide", 1).unwrap();
    let mut plan = ExperimentPlan::new(TargetRef::Config(wide), SweepAxis::StepSize(vec![50, 50, 50]), 3, base);
    plan.ula = Some(UlaSettings { step: 0.05, burn_in: 25, iterations: 25 });
    for row in compare_samplers(&plan).unwrap() {
        assert!(row.sfs_w2.is_finite() && row.ula_w2.is_finite() && row.sfs_w2_se >= 0.0 && row.ula_w2_se >= 0.0);
        assert!(row.sfs_mode_imbalance.is_some() && row.ula_mode_imbalance.is_some());
    }
}
