use std::f64::consts::PI;

use bcaplab::experiments::{
    run_c_theta, run_identity_suite, run_range_capacity, run_spine_fraction, CThetaConfig, Cell, ExperimentReport, IdentityConfig,
    RangeCapacityConfig, SpineFractionConfig,
};

fn value(report: &ExperimentReport, quantity: &str) -> f64 {
    let t = &report.tables[0];
    let row = t.rows.iter().find(|r| matches!(&r[0], Cell::Text(s) if s == quantity)).unwrap();
    row[1].as_f64().unwrap()
}

#[test]
fn c_theta_closed_forms() {
    // Binary offspring has σ² = 1. For simple walks M = I/d, so
    // c_g = Γ(d/2 - 1) d^{d/2} / (2π^{d/2}).
    let r5 = run_c_theta(&CThetaConfig::default()).unwrap();
    assert!(r5.failures.is_empty());
    assert!((value(&r5, "c_theta") - 8.0 * PI * PI / 5f64.powf(2.5)).abs() < 1e-12);
    let r6 = run_c_theta(&CThetaConfig { theta: "srw(6)".into(), ..CThetaConfig::default() }).unwrap();
    assert!((value(&r6, "c_theta") - PI.powi(3) / 54.0).abs() < 1e-12);
    assert!((value(&r6, "d6_range_constant") - 2.0 * PI.powi(3) / 27.0).abs() < 1e-12);
    assert_eq!(r6.notes.len(), 1);
    // Geometric(1/2) has σ² = 2 up to the truncated tail.
    let geo = run_c_theta(&CThetaConfig { mu: "geometric(0.5)".into(), ..CThetaConfig::default() }).unwrap();
    assert!((value(&geo, "c_theta") - 8.0 * PI * PI / (2.0 * 5f64.powf(2.5))).abs() < 1e-9);
}

#[test]
fn identity_suite_is_clean() {
    let report = run_identity_suite(&IdentityConfig { translation_samples: 500, ..IdentityConfig::default() }).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert!(report.tables[0].rows.len() > 10);
}

#[test]
fn spine_fraction_tail_shrinks() {
    let cfg = SpineFractionConfig { n_grid: vec![10, 100], r_grid: vec![0.3], samples: 4000, ..SpineFractionConfig::default() };
    let f = run_spine_fraction(&cfg).unwrap().tables[0].column("frequency");
    assert!(f[1] < f[0], "{f:?}");
}

#[test]
fn range_capacity_tables() {
    let cfg = RangeCapacityConfig { n_grid: vec![50, 200], walks_per_n: 5, trials: 200, ..RangeCapacityConfig::for_dimension(7) };
    let report = run_range_capacity(&cfg).unwrap();
    let main = &report.tables[0];
    let walks = &report.tables[1];
    assert_eq!(main.rows.len(), 2);
    assert_eq!(walks.rows.len(), 10);
    let (q25, med, q75) = (main.column("q25"), main.column("median"), main.column("q75"));
    for i in 0..2 {
        assert!(q25[i] <= med[i] && med[i] <= q75[i]);
    }
    assert!(walks.column("statistic").iter().all(|&s| s > 0.0 && s.is_finite()));
    assert!(main.column("ratio").iter().all(|r| r.is_nan()));
}
