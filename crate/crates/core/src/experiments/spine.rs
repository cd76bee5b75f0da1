use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Table};
use crate::capacity::par_collect;
use crate::distributions::parse_offspring;
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::stats::{bernoulli_stderr, pooled_stderr};
use crate::trees::{sample_hat_t_minus, SpineSplit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpineFractionConfig {
    pub seed: u64,
    pub mu: String,
    pub n_grid: Vec<usize>,
    /// Thresholds r in #(spine vertices among the first n + 1) > r·n.
    pub r_grid: Vec<f64>,
    pub samples: usize,
}

impl Default for SpineFractionConfig {
    fn default() -> Self {
        SpineFractionConfig {
            seed: 1,
            mu: "binary".into(),
            n_grid: vec![10, 25, 50, 100, 200],
            r_grid: vec![0.5, 0.9],
            samples: 10_000,
        }
    }
}

/// Empirical P(#(ĥT_-[0,n] ∩ X) > r·n) over a grid of n and r.
pub fn run_spine_fraction(cfg: &SpineFractionConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mu = parse_offspring(&cfg.mu)?;
    if cfg.samples == 0 || cfg.n_grid.is_empty() || cfg.n_grid.contains(&0) {
        return Err(Error::validation("spine fraction needs samples > 0 and n ≥ 1"));
    }
    if let Some(r) = cfg.r_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::validation(format!("threshold fraction {r} outside [0, 1]")));
    }
    let split = SpineSplit::new(&mu);
    let key = StreamKey::new(cfg.seed, "spine-fraction");
    let mut report = ExperimentReport::new("spine-fraction", cfg.seed, cfg);
    let mut t = Table::new(
        "main",
        &[
            ("n", "prefix length; vertices 0..=n are read"),
            ("r", "threshold fraction"),
            ("samples", "independent prefixes"),
            ("exceed", "prefixes with more than r·n spine vertices"),
            ("frequency", "exceed / samples"),
            ("stderr", "binomial standard error (3/samples when exceed is 0)"),
        ],
    );
    for &n in &cfg.n_grid {
        let k = key.child_indexed("n", n as u64);
        let counts = par_collect(cfg.samples, |s| {
            let mut rng = k.stream(s as u64);
            sample_hat_t_minus(&mu, &split, n, &mut rng).spine_count_upto(n)
        });
        for &r in &cfg.r_grid {
            let exceed = counts.iter().filter(|&&c| c as f64 > r * n as f64).count() as u64;
            let samples = cfg.samples as u64;
            t.push(vec![
                n.into(),
                r.into(),
                samples.into(),
                exceed.into(),
                (exceed as f64 / samples as f64).into(),
                bernoulli_stderr(exceed, samples).into(),
            ]);
        }
    }
    // Monotone trend in n at each r, allowing two pooled standard errors.
    let (ni, ri, fi, si) = (0, 1, 4, 5);
    for &r in &cfg.r_grid {
        let rows: Vec<_> = t.rows.iter().filter(|row| row[ri].as_f64() == Some(r)).collect();
        for w in rows.windows(2) {
            let (f0, f1) = (w[0][fi].as_f64().unwrap(), w[1][fi].as_f64().unwrap());
            let se = pooled_stderr(w[0][si].as_f64().unwrap(), w[1][si].as_f64().unwrap());
            if f1 > f0 + 2.0 * se {
                report.notes.push(format!(
                    "frequency rises from n = {} to n = {} at r = {r}: {f0} -> {f1}",
                    w[0][ni].as_f64().unwrap(),
                    w[1][ni].as_f64().unwrap()
                ));
            }
        }
    }
    report.tables.push(t);
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}
