use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::constants::d6_range_constant;
use super::{ExperimentReport, Table};
use crate::capacity::{bcap_escape, par_collect, EscapeParams};
use crate::distributions::{parse_offspring, parse_step, StepDist};
use crate::error::{Error, Result};
use crate::lattice::LatticeSet;
use crate::point::{self, Point, ORIGIN};
use crate::rng::{SimRng, StreamKey};
use crate::stats::{median, quantile, Moments};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeCapacityConfig {
    pub seed: u64,
    pub d: usize,
    pub mu: String,
    pub theta: String,
    /// Step law of the walk ξ whose range is measured.
    pub xi: String,
    pub n_grid: Vec<usize>,
    pub walks_per_n: usize,
    /// Escape trials per walk.
    pub trials: u64,
    pub budget: usize,
    pub levels: usize,
    /// Innermost guard radius is `guard · n^guard_power`.
    pub guard: f64,
    pub guard_power: f64,
    pub fit_levels: Option<usize>,
    pub batches: usize,
}

impl RangeCapacityConfig {
    /// Desk-scale defaults. In d = 5 and 6 the guard grows like √n so the
    /// relative guard bias is the same at every n; from d = 7 on the guard
    /// correction decays like s^{4-d} and a fixed radius suffices.
    pub fn for_dimension(d: usize) -> Self {
        let (guard, guard_power, trials) = match d {
            5 => (0.25, 0.5, 20_000),
            6 => (0.25, 0.5, 2_500),
            _ => (3.0, 0.0, 1_000),
        };
        RangeCapacityConfig {
            seed: 1,
            d,
            mu: "binary".into(),
            theta: format!("srw({d})"),
            xi: format!("srw({d})"),
            n_grid: vec![250, 1000, 4000],
            walks_per_n: 100,
            trials,
            budget: 100_000_000,
            levels: 2,
            guard,
            guard_power,
            fit_levels: None,
            batches: 8,
        }
    }

    pub fn escape_params(&self, n: usize) -> EscapeParams {
        EscapeParams {
            trials: self.trials,
            budget: self.budget,
            levels: self.levels,
            base_radius: Some((self.guard * (n as f64).powf(self.guard_power)).max((self.d as f64).sqrt())),
            batches: self.batches,
            exponent: None,
            fit_levels: self.fit_levels,
            ..EscapeParams::default()
        }
    }
}

impl Default for RangeCapacityConfig {
    fn default() -> Self {
        Self::for_dimension(5)
    }
}

/// Normalizing sequence of Bcap(ξ[0,n]): √n in d = 5, n/log n in d = 6, n
/// from d = 7 on.
pub fn normalization(d: usize, n: usize) -> f64 {
    let nf = n as f64;
    match d {
        5 => nf.sqrt(),
        6 => nf / nf.ln(),
        _ => nf,
    }
}

/// Range ξ[0,n] of an n-step walk from the origin.
pub fn walk_range(xi: &StepDist, n: usize, rng: &mut SimRng) -> LatticeSet {
    let mut p: Point = ORIGIN;
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(p);
    for _ in 0..n {
        p = point::add(&p, xi.sample(rng));
        pts.push(p);
    }
    LatticeSet::new(xi.dim(), pts)
}

/// Bcap(ξ[0,n]) for independent walks at each n, normalized by
/// [`normalization`]. Per-walk values go to the `walks` table.
pub fn run_range_capacity(cfg: &RangeCapacityConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    if cfg.d < 5 {
        return Err(Error::validation(format!("range capacity needs d ≥ 5, got {}", cfg.d)));
    }
    if cfg.walks_per_n == 0 || cfg.n_grid.is_empty() || cfg.n_grid.contains(&0) {
        return Err(Error::validation("range capacity needs walks_per_n > 0 and n ≥ 1"));
    }
    let mu = parse_offspring(&cfg.mu)?;
    let theta = parse_step(&cfg.theta)?;
    let xi = parse_step(&cfg.xi)?;
    for (name, law) in [("theta", &theta), ("xi", &xi)] {
        if law.dim() != cfg.d {
            return Err(Error::validation(format!("{name} lives in Z^{}, expected Z^{}", law.dim(), cfg.d)));
        }
    }
    let key = StreamKey::new(cfg.seed, "range-capacity");
    let reference = (cfg.d == 6).then(|| d6_range_constant(mu.sigma2()));

    let mut report = ExperimentReport::new("range-capacity", cfg.seed, cfg);
    let mut main = Table::new(
        "main",
        &[
            ("n", "walk length"),
            ("walks", "independent walks"),
            ("normalization", "sqrt(n) in d=5, n/log(n) in d=6, n in d>=7"),
            ("median", "median of Bcap/normalization over walks"),
            ("mean", "mean of Bcap/normalization"),
            ("stderr", "standard error of the mean over walks"),
            ("q25", "lower quartile"),
            ("q75", "upper quartile"),
            ("iqr", "interquartile range"),
            ("mc_stderr", "root mean square of the per-walk Monte Carlo stderr, normalized"),
            ("truncated_fraction", "mean truncated fraction of escape trials"),
            ("reference", "limit constant where known (d=6 simple walks), else NaN"),
            ("ratio", "median / reference"),
        ],
    );
    let mut walks = Table::new(
        "walks",
        &[
            ("n", "walk length"),
            ("walk", "walk index"),
            ("points", "number of distinct sites of the walk"),
            ("bcap", "escape estimate of Bcap"),
            ("stderr", "Monte Carlo standard error of bcap"),
            ("statistic", "bcap / normalization"),
            ("truncated_fraction", "truncated fraction of the estimate"),
        ],
    );
    for &n in &cfg.n_grid {
        let params = cfg.escape_params(n);
        let nk = key.child_indexed("n", n as u64);
        let results = par_collect(cfg.walks_per_n, |w| -> Result<_> {
            let mut rng = nk.child("xi").stream(w as u64);
            let k = walk_range(&xi, n, &mut rng);
            let est = bcap_escape(&k, &mu, &theta, &params, &nk.child_indexed("walk", w as u64))?;
            Ok((k.len(), est))
        });
        let norm = normalization(cfg.d, n);
        let mut stats = Vec::with_capacity(cfg.walks_per_n);
        let mut se2 = 0.0;
        let mut trunc = 0.0;
        for (w, r) in results.into_iter().enumerate() {
            let (points, est) = r?;
            let s = est.value / norm;
            stats.push(s);
            se2 += (est.stderr / norm).powi(2);
            trunc += est.truncated_fraction;
            walks.push(vec![
                n.into(),
                w.into(),
                points.into(),
                est.value.into(),
                est.stderr.into(),
                s.into(),
                est.truncated_fraction.into(),
            ]);
        }
        let m = Moments::from_slice(&stats);
        let nw = stats.len() as f64;
        let med = median(&stats);
        let (q25, q75) = (quantile(&stats, 0.25), quantile(&stats, 0.75));
        let refv = reference.unwrap_or(f64::NAN);
        main.push(vec![
            n.into(),
            stats.len().into(),
            norm.into(),
            med.into(),
            m.mean.into(),
            m.stderr().into(),
            q25.into(),
            q75.into(),
            (q75 - q25).into(),
            (se2 / nw).sqrt().into(),
            (trunc / nw).into(),
            refv.into(),
            (med / refv).into(),
        ]);
    }
    report.notes.push(
        "acceptance bands for these statistics are desk-scale choices; no finite-n error rates are known".into(),
    );
    report.tables.push(main);
    report.tables.push(walks);
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}
