use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Table};
use crate::brw::{translation_check, WindowFunctional};
use crate::distributions::{parse_offspring, parse_step};
use crate::error::Result;
use crate::rng::StreamKey;
use crate::trees::{dwass_enumerated, kesten_prefix_discrepancy};

/// Tolerance of the exact (enumerated) identities.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityConfig {
    pub seed: u64,
    pub mu: String,
    pub theta: String,
    pub dwass_max_n: usize,
    pub phi_max_m: usize,
    pub translation_shift: usize,
    pub translation_window: usize,
    pub translation_samples: usize,
    /// Significance level of the translation check.
    pub alpha: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            seed: 1,
            mu: "binary".into(),
            theta: "srw(5)".into(),
            dwass_max_n: 9,
            phi_max_m: 8,
            translation_shift: 64,
            translation_window: 16,
            translation_samples: 2000,
            alpha: 0.01,
        }
    }
}

/// Exact size and prefix identities by enumeration, plus the Monte Carlo
/// translation-invariance check. Exact identities off by more than 1e-12 are
/// hard failures; a small translation p-value is reported but not fatal.
pub fn run_identity_suite(cfg: &IdentityConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mu = parse_offspring(&cfg.mu)?;
    let theta = parse_step(&cfg.theta)?;
    let mut report = ExperimentReport::new("identities", cfg.seed, cfg);
    let mut t = Table::new(
        "main",
        &[
            ("check", "identity name"),
            ("m", "tree size"),
            ("k", "prefix length or window (0 if unused)"),
            ("lhs", "enumerated side, or KS statistic"),
            ("rhs", "closed-form side, or p-value"),
            ("error", "absolute discrepancy (NaN for statistical checks)"),
            ("samples", "Monte Carlo samples (0 for exact checks)"),
            ("pass", "within tolerance"),
        ],
    );

    for n in 1..=cfg.dwass_max_n {
        let (lhs, rhs) = dwass_enumerated(&mu, n)?;
        let err = (lhs - rhs).abs();
        let pass = err <= EXACT_TOL;
        if !pass {
            report.failures.push(format!("Dwass identity off by {err:e} at n = {n}"));
        }
        t.push(vec!["dwass".into(), n.into(), 0usize.into(), lhs.into(), rhs.into(), err.into(), 0usize.into(), pass.into()]);
    }

    for m in 2..=cfg.phi_max_m {
        if mu.size_probability(m) <= 0.0 {
            continue;
        }
        for k in 1..=m / 2 {
            let err = kesten_prefix_discrepancy(&mu, m, k)?;
            let pass = err <= EXACT_TOL;
            if !pass {
                report.failures.push(format!("prefix identity off by {err:e} at (m, k) = ({m}, {k})"));
            }
            t.push(vec![
                "phi_prefix".into(),
                m.into(),
                k.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                err.into(),
                0usize.into(),
                pass.into(),
            ]);
        }
    }

    let key = StreamKey::new(cfg.seed, "identities").child("translation");
    for (name, f) in [
        ("translation_endpoint", WindowFunctional::EndpointFirstCoordinate),
        ("translation_range", WindowFunctional::RangeSize),
    ] {
        let r = translation_check(
            &theta,
            &mu,
            cfg.translation_shift,
            cfg.translation_window,
            f,
            cfg.translation_samples,
            &key.child(name),
        );
        let pass = r.p_value > cfg.alpha;
        if !pass {
            report.notes.push(format!("{name}: p = {:.4} below {}", r.p_value, cfg.alpha));
        }
        t.push(vec![
            name.into(),
            cfg.translation_shift.into(),
            cfg.translation_window.into(),
            r.statistic.into(),
            r.p_value.into(),
            f64::NAN.into(),
            cfg.translation_samples.into(),
            pass.into(),
        ]);
    }

    report.tables.push(t);
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}
