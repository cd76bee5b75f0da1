use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::range::walk_range;
use super::{ExperimentReport, Table};
use crate::capacity::par_collect;
use crate::distributions::{parse_offspring, parse_step, OffspringDist, StepDist};
use crate::error::{Error, Result};
use crate::lattice::LatticeSet;
use crate::point::{self, Point, ORIGIN};
use crate::rng::{SimRng, StreamKey};
use crate::stats::{bernoulli_stderr, pooled_stderr};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionConfig {
    pub seed: u64,
    pub mu: String,
    pub theta: String,
    pub xi: String,
    /// Direction point x; the tree starts at ⌊√n·x⌋.
    pub x: Vec<f64>,
    pub eta: f64,
    pub eps_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    /// Tree vertex budget per trial; `None` uses n².
    pub budget: Option<usize>,
}

impl Default for IntersectionConfig {
    fn default() -> Self {
        IntersectionConfig {
            seed: 1,
            mu: "binary".into(),
            theta: "srw(5)".into(),
            xi: "srw(5)".into(),
            x: vec![1.0, 0.0, 0.0, 0.0, 0.0],
            eta: 0.9,
            eps_grid: vec![0.05, 0.1, 0.2, 0.4],
            n_grid: vec![1000, 4000],
            trials: 40_000,
            budget: None,
        }
    }
}

/// What one trial saw: whether ξ stayed in the η-ball, whether the tree
/// range hit ξ, and how close it came otherwise.
#[derive(Clone, Copy, Debug)]
struct Trial {
    contained: bool,
    hit: bool,
    truncated: bool,
    /// Distance from the range to ξ, exact when at most the largest ε√n.
    closest: f64,
}

/// Runs a Galton–Watson tree walk from `x` vertex by vertex, stopping on the
/// first visit to ξ. Distances are bounded below along each ancestral line
/// by the parent's bound minus the longest step; the exact distance is only
/// computed when that bound drops to the current threshold.
fn tree_trial(
    xi_range: &LatticeSet,
    x: &Point,
    mu: &OffspringDist,
    theta: &StepDist,
    horizon: f64,
    budget: usize,
    rng: &mut SimRng,
) -> (bool, bool, f64) {
    let step = theta.max_step_len();
    let mut closest = f64::INFINITY;
    let visit = |p: &Point, bound: f64, closest: &mut f64| -> Option<f64> {
        if bound > horizon.min(*closest) {
            return Some(bound);
        }
        let dist = xi_range.min_dist(p).expect("walk range is nonempty");
        *closest = closest.min(dist);
        (dist > 0.0).then_some(dist)
    };
    let Some(root_bound) = visit(x, 0.0, &mut closest) else {
        return (true, false, 0.0);
    };
    // Frames: (position, distance bound, children still to visit).
    let mut stack: Vec<(Point, f64, u32)> = vec![(*x, root_bound, mu.sample(rng))];
    let mut count = 1usize;
    while let Some(top) = stack.last_mut() {
        if top.2 == 0 {
            stack.pop();
            continue;
        }
        top.2 -= 1;
        if count >= budget {
            return (false, true, closest);
        }
        count += 1;
        let p = point::add(&top.0, theta.sample(rng));
        let bound = top.1 - step;
        let Some(b) = visit(&p, bound, &mut closest) else {
            return (true, false, 0.0);
        };
        stack.push((p, b, mu.sample(rng)));
    }
    (false, false, closest)
}

/// Monte Carlo estimate of n·I(ε, n): the tree walk from ⌊√n·x⌋ comes within
/// ε√n of ξ[0,n] without touching it, with ξ[0,n] ⊂ B(0, η|x_n|). The same
/// trials also give the statistic without the containment condition.
pub fn run_intersection(cfg: &IntersectionConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mu = parse_offspring(&cfg.mu)?;
    let theta = parse_step(&cfg.theta)?;
    let xi = parse_step(&cfg.xi)?;
    theta.require_symmetric()?;
    let d = theta.dim();
    if xi.dim() != d || cfg.x.len() != d {
        return Err(Error::validation("theta, xi and x must share the dimension"));
    }
    if cfg.x.iter().all(|&c| c == 0.0) {
        return Err(Error::validation("direction point x must be nonzero"));
    }
    if !(cfg.eta > 0.0 && cfg.eta < 1.0) {
        return Err(Error::validation(format!("eta = {} outside (0, 1)", cfg.eta)));
    }
    if cfg.eps_grid.is_empty() || cfg.eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::validation("eps grid must be nonempty and positive"));
    }
    if cfg.trials == 0 || cfg.n_grid.is_empty() || cfg.n_grid.contains(&0) {
        return Err(Error::validation("intersection needs trials > 0 and n ≥ 1"));
    }
    let eps_max = cfg.eps_grid.iter().copied().fold(0.0, f64::max);
    let key = StreamKey::new(cfg.seed, "intersection");
    let mut report = ExperimentReport::new("intersection", cfg.seed, cfg);
    let mut t = Table::new(
        "main",
        &[
            ("n", "walk length"),
            ("eps", "neighborhood radius in units of sqrt(n)"),
            ("trials", "independent (walk, tree) pairs"),
            ("events", "trials in the event, with the containment condition"),
            ("n_i", "n times the event frequency"),
            ("stderr", "binomial standard error of n_i (rule of three at zero)"),
            ("events_unfiltered", "trials in the event without the containment condition"),
            ("n_i_unfiltered", "n times the unfiltered frequency"),
            ("stderr_unfiltered", "binomial standard error of n_i_unfiltered"),
            ("contained_fraction", "fraction of walks inside B(0, eta|x_n|)"),
            ("truncated_fraction", "fraction of trees cut at the vertex budget"),
        ],
    );
    for &n in &cfg.n_grid {
        let sq = (n as f64).sqrt();
        let mut xn: Point = ORIGIN;
        for i in 0..d {
            xn[i] = (sq * cfg.x[i]).floor() as i32;
        }
        let radius = cfg.eta * point::norm2(&xn);
        let budget = cfg.budget.unwrap_or(n.saturating_mul(n));
        let horizon = eps_max * sq;
        let nk = key.child_indexed("n", n as u64);
        let trials = par_collect(cfg.trials, |i| {
            let mut rng = nk.stream(i as u64);
            let range = walk_range(&xi, n, &mut rng);
            let contained = range.points().iter().all(|p| point::norm2(p) <= radius);
            let (hit, truncated, closest) = tree_trial(&range, &xn, &mu, &theta, horizon, budget, &mut rng);
            Trial { contained, hit, truncated, closest }
        });
        let nt = cfg.trials as u64;
        let contained = trials.iter().filter(|r| r.contained).count() as f64 / nt as f64;
        let truncated = trials.iter().filter(|r| r.truncated).count() as f64 / nt as f64;
        for &eps in &cfg.eps_grid {
            let reach = eps * sq;
            let event = |r: &&Trial| !r.hit && !r.truncated && r.closest <= reach;
            let unfiltered = trials.iter().filter(event).count() as u64;
            let filtered = trials.iter().filter(event).filter(|r| r.contained).count() as u64;
            let nf = n as f64;
            t.push(vec![
                n.into(),
                eps.into(),
                nt.into(),
                filtered.into(),
                (nf * filtered as f64 / nt as f64).into(),
                (nf * bernoulli_stderr(filtered, nt)).into(),
                unfiltered.into(),
                (nf * unfiltered as f64 / nt as f64).into(),
                (nf * bernoulli_stderr(unfiltered, nt)).into(),
                contained.into(),
                truncated.into(),
            ]);
        }
    }
    for note in trend_notes(&t) {
        report.notes.push(note);
    }
    report.tables.push(t);
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Flags, per n, any ε step where the filtered statistic drops by more than
/// two pooled standard errors as ε grows.
fn trend_notes(t: &Table) -> Vec<String> {
    let (n, eps, v, se) = (t.column("n"), t.column("eps"), t.column("n_i"), t.column("stderr"));
    let mut notes = Vec::new();
    for i in 1..n.len() {
        if n[i] == n[i - 1] && eps[i] > eps[i - 1] && v[i] + 2.0 * pooled_stderr(se[i], se[i - 1]) < v[i - 1] {
            notes.push(format!("n = {}: n·I drops from {} to {} between eps {} and {}", n[i], v[i - 1], v[i], eps[i - 1], eps[i]));
        }
    }
    notes
}
