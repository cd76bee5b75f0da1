//! Branching capacity Bcap(K) = lim_{x→∞} P_x(R_c ∩ K ≠ ∅) / g(x).
//!
//! Two estimators: the definitional one, launching critical branching walks
//! from far points, and an escape form that starts the depth-first reading
//! of the invariant tree at boundary points of K,
//!
//!   Bcap(K) = Σ_{a ∈ K} P_a(ĥV_-(i) ∉ K for all i ≥ 1),
//!
//! which follows from decomposing the hitting event at the first visited
//! point of K in depth-first order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rustc_hash::FxHashMap;
use serde_json::json;

use super::{extrapolate_batches, par_collect, CapacityEstimate, ScaleValue};
use crate::distributions::{OffspringDist, Pmf, StepDist};
use crate::error::{Error, Result};
use crate::lattice::{GreenTable, LatticeSet};
use crate::point::{self, Point, MAX_DIM, ORIGIN};
use crate::rng::{SimRng, StreamKey};
use crate::stats::Moments;

/// Parameters of the far-point hitting estimator.
#[derive(Clone, Debug)]
pub struct HittingParams {
    pub far_distances: Vec<f64>,
    /// Random directions per distance, on top of the 2d axis directions.
    pub random_directions: usize,
    pub trials_per_direction: u64,
    /// Vertex budget per tree.
    pub budget: usize,
    /// Particles farther than `guard_factor · |x|` from K are killed.
    pub guard_factor: f64,
    pub batches: usize,
    /// Exponent p of the finite-distance correction b·ρ^{-p}.
    pub exponent: f64,
    /// Warn when the truncated fraction exceeds this.
    pub truncation_cap: f64,
}

impl Default for HittingParams {
    fn default() -> Self {
        HittingParams {
            far_distances: vec![8.0, 12.0, 16.0],
            random_directions: 8,
            trials_per_direction: 20_000,
            budget: 100_000_000,
            guard_factor: 8.0,
            batches: 16,
            exponent: 1.0,
            truncation_cap: 0.01,
        }
    }
}

/// Parameters of the escape estimator.
#[derive(Clone, Debug)]
pub struct EscapeParams {
    pub trials: u64,
    /// Vertex budget per trial.
    pub budget: usize,
    /// Number of nested guard regions.
    pub levels: usize,
    /// Radius s₀ of the innermost guard region; `None` uses a quarter of the
    /// diameter of K, at least √d.
    pub base_radius: Option<f64>,
    pub batches: usize,
    /// Exponent p of the guard correction b·ρ^{-p}; `None` uses d - 4.
    pub exponent: Option<f64>,
    /// Number of outermost levels entering the extrapolation; `None` uses all.
    pub fit_levels: Option<usize>,
    /// Copies made of a trial each time it clears a level.
    pub split: usize,
    pub truncation_cap: f64,
}

impl Default for EscapeParams {
    fn default() -> Self {
        EscapeParams {
            trials: 100_000,
            budget: 100_000_000,
            levels: 3,
            base_radius: None,
            batches: 16,
            exponent: None,
            fit_levels: None,
            split: 1,
            truncation_cap: 0.01,
        }
    }
}

fn describe(k: &LatticeSet) -> String {
    let c = k.centroid();
    let parts: Vec<String> = c[..k.dim()].iter().map(|v| format!("{v:.2}")).collect();
    format!("{} points in Z^{}, centroid ({})", k.len(), k.dim(), parts.join(","))
}

fn check_inputs(k: &LatticeSet, mu: &OffspringDist, theta: &StepDist) -> Result<()> {
    let _ = mu;
    if k.is_empty() {
        return Err(Error::validation("capacity of the empty set"));
    }
    if k.dim() != theta.dim() {
        return Err(Error::validation(format!("set has dimension {} but θ has {}", k.dim(), theta.dim())));
    }
    if theta.dim() < 5 {
        return Err(Error::validation(format!("branching capacity needs d ≥ 5, got {}", theta.dim())));
    }
    theta.require_symmetric()
}

enum Outcome {
    Hit,
    Miss,
    Truncated,
}

/// Critical branching walk from `x`, killed outside the guard ball, run until
/// it visits K or dies out.
#[allow(clippy::too_many_arguments)]
fn brw_hits(
    x: &Point,
    k: &LatticeSet,
    mu: &OffspringDist,
    theta: &StepDist,
    center: &Point,
    guard_r2: i64,
    budget: usize,
    rng: &mut SimRng,
    stack: &mut Vec<(Point, u32)>,
) -> Outcome {
    if k.contains(x) {
        return Outcome::Hit;
    }
    stack.clear();
    let c = mu.sample(rng);
    if c > 0 {
        stack.push((*x, c));
    }
    let mut count = 1usize;
    while let Some(top) = stack.last_mut() {
        if top.1 == 0 {
            stack.pop();
            continue;
        }
        top.1 -= 1;
        let pos = point::add(&top.0, theta.sample(rng));
        count += 1;
        if count > budget {
            return Outcome::Truncated;
        }
        if k.contains(&pos) {
            return Outcome::Hit;
        }
        if point::dist_sq(&pos, center) > guard_r2 {
            continue;
        }
        let c = mu.sample(rng);
        if c > 0 {
            stack.push((pos, c));
        }
    }
    Outcome::Miss
}

pub(crate) fn nearest_lattice_point(c: &[f64; MAX_DIM], d: usize) -> Point {
    let mut p = ORIGIN;
    for i in 0..d {
        p[i] = c[i].round() as i32;
    }
    p
}

/// Far-point directions: ±e_i followed by `extra` random unit vectors.
pub(crate) fn directions(d: usize, extra: usize, key: &StreamKey, which: usize) -> Vec<[f64; MAX_DIM]> {
    let mut out = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut u = [0.0; MAX_DIM];
            u[i] = s;
            out.push(u);
        }
    }
    let mut rng = key.child("directions").stream(which as u64);
    for _ in 0..extra {
        let mut u = [0.0; MAX_DIM];
        let mut n2 = 0.0f64;
        for v in u.iter_mut().take(d) {
            *v = StandardNormal.sample(&mut rng);
            n2 += *v * *v;
        }
        for v in u.iter_mut().take(d) {
            *v /= n2.sqrt();
        }
        out.push(u);
    }
    out
}

/// Definitional estimator: P_x(R_c ∩ K ≠ ∅)/g(x) averaged over directions,
/// extrapolated in |x|.
pub fn bcap_hitting(
    k: &LatticeSet,
    mu: &OffspringDist,
    theta: &StepDist,
    green: &GreenTable,
    params: &HittingParams,
    key: &StreamKey,
) -> Result<CapacityEstimate> {
    check_inputs(k, mu, theta)?;
    if green.dim() != theta.dim() {
        return Err(Error::validation("Green table dimension differs from θ"));
    }
    if params.far_distances.is_empty() || params.batches == 0 || params.trials_per_direction == 0 {
        return Err(Error::validation("need far distances, batches and trials"));
    }
    if params.guard_factor <= 1.0 {
        return Err(Error::validation("guard factor must exceed 1"));
    }
    let d = theta.dim();
    let cen = k.centroid();
    let center = nearest_lattice_point(&cen, d);
    let enclosing = k.radius_about(&cen);
    let mut warnings = Vec::new();
    for &rho in &params.far_distances {
        if rho <= enclosing + 1.0 {
            return Err(Error::validation(format!(
                "far distance {rho} must exceed the enclosing radius {enclosing:.2} of K"
            )));
        }
        if rho < 2.0 * enclosing {
            warnings.push(format!("far distance {rho} is below twice the enclosing radius {enclosing:.2}"));
        }
    }
    let dirs: Vec<Vec<[f64; MAX_DIM]>> = (0..params.far_distances.len())
        .map(|i| directions(d, params.random_directions, key, i))
        .collect();
    let ndir = dirs[0].len();
    let nb = params.batches;
    let per_task = params.trials_per_direction.div_ceil(nb as u64);
    let tasks = params.far_distances.len() * ndir * nb;
    let trial_key = key.child("hitting");
    let results = par_collect(tasks, |t| {
        let dir = (t / nb) % ndir;
        let di = t / (nb * ndir);
        let rho = params.far_distances[di];
        let u = &dirs[di][dir];
        let mut x = center;
        for i in 0..d {
            x[i] += (rho * u[i]).round() as i32;
        }
        let guard = params.guard_factor * rho;
        let guard_r2 = (guard * guard) as i64;
        let mut rng = trial_key.stream(t as u64);
        let mut stack = Vec::new();
        let (mut hits, mut truncated) = (0u64, 0u64);
        for _ in 0..per_task {
            match brw_hits(&x, k, mu, theta, &center, guard_r2, params.budget, &mut rng, &mut stack) {
                Outcome::Hit => hits += 1,
                Outcome::Truncated => truncated += 1,
                Outcome::Miss => {}
            }
        }
        let g = green.eval(&point::sub(&x, &center));
        (hits, truncated, g)
    });
    let ns = params.far_distances.len();
    let mut per_batch = vec![vec![0.0; ns]; nb];
    let mut scale_moments = vec![Moments::default(); ns];
    let mut total_trunc = 0u64;
    let mut total_hits = 0u64;
    for (t, &(hits, trunc, g)) in results.iter().enumerate() {
        let b = t % nb;
        let di = t / (nb * ndir);
        per_batch[b][di] += hits as f64 / (per_task as f64 * g) / ndir as f64;
        total_trunc += trunc;
        total_hits += hits;
    }
    for row in &per_batch {
        for (di, v) in row.iter().enumerate() {
            scale_moments[di].push(*v);
        }
    }
    let samples = tasks as u64 * per_task;
    let truncated_fraction = total_trunc as f64 / samples as f64;
    if truncated_fraction > params.truncation_cap {
        warnings.push(format!("truncated fraction {truncated_fraction:.4} exceeds {}", params.truncation_cap));
    }
    if total_hits == 0 {
        warnings.push("no hits recorded; value 0 with Bernoulli-bound stderr".into());
    }
    let (value, mut stderr, batches) = extrapolate_batches(&params.far_distances, &per_batch, params.exponent);
    if total_hits == 0 {
        let g_min = params
            .far_distances
            .iter()
            .map(|r| green.eval(&point::from_slice(&[r.round() as i32])))
            .fold(f64::INFINITY, f64::min);
        stderr = 3.0 / (samples as f64 * g_min);
    }
    let scales = params
        .far_distances
        .iter()
        .zip(&scale_moments)
        .map(|(&s, m)| ScaleValue { scale: s, value: m.mean, stderr: m.stderr() })
        .collect();
    let mut p = BTreeMap::new();
    p.insert("far_distances".into(), json!(params.far_distances));
    p.insert("directions".into(), json!(ndir));
    p.insert("trials_per_direction".into(), json!(per_task * nb as u64));
    p.insert("budget".into(), json!(params.budget));
    p.insert("guard_factor".into(), json!(params.guard_factor));
    p.insert("batches".into(), json!(nb));
    p.insert("exponent".into(), json!(params.exponent));
    p.insert("hits".into(), json!(total_hits));
    Ok(CapacityEstimate {
        method: "bcap-hitting".into(),
        set: describe(k),
        value,
        stderr,
        samples,
        params: p,
        truncated_fraction,
        batches,
        scales,
        warnings,
    })
}

/// Nested guard regions around K. Level ℓ uses origin-aligned cubes of side
/// c_ℓ = c₀·2^ℓ (powers of two) and contains the points whose cube lies within
/// Euclidean distance m (in cube units) of a cube meeting K, so its radius is
/// s_ℓ = m·c_ℓ up to one cube diagonal. Halving the resolution moves cube
/// indices by at most √d/2 in norm, so m ≥ √d keeps the levels nested.
///
/// Membership of a cube is decided on first use and memoized in a
/// [`RegionCache`].
#[derive(Clone, Debug)]
pub struct EscapeRegions {
    d: usize,
    m: f64,
    shifts: Vec<u32>,
    /// Cubes meeting K, one set per level, in cube coordinates.
    coarse: Vec<LatticeSet>,
}

/// Memoized cube membership for one worker.
#[derive(Clone, Debug, Default)]
pub struct RegionCache {
    maps: Vec<FxHashMap<u128, bool>>,
}

#[inline]
fn pack_cell(d: usize, p: &Point, shift: u32) -> Option<u128> {
    let mut key = 0u128;
    for &c in &p[..d] {
        let v = c >> shift;
        if !(i16::MIN as i32..=i16::MAX as i32).contains(&v) {
            return None;
        }
        key = (key << 16) | (v as i16 as u16 as u128);
    }
    Some(key)
}

impl EscapeRegions {
    /// Regions of radii ≈ s₀·2^ℓ. The cube side c₀ is the largest power of two
    /// leaving at least 2√d cubes per radius (at least 1); s₀ ≥ √d is required.
    pub fn new(k: &LatticeSet, base_radius: f64, levels: usize) -> Result<Self> {
        let d = k.dim();
        let root_d = (d as f64).sqrt();
        if levels == 0 {
            return Err(Error::validation("need at least one guard level"));
        }
        if !(base_radius >= root_d) {
            return Err(Error::validation(format!("guard radius {base_radius} below √d = {root_d:.3}")));
        }
        let mut shift0 = 0u32;
        while base_radius / 2f64.powi(shift0 as i32 + 1) >= 2.0 * root_d {
            shift0 += 1;
        }
        let m = base_radius / 2f64.powi(shift0 as i32);
        let shifts: Vec<u32> = (0..levels as u32).map(|l| shift0 + l).collect();
        let coarse = shifts
            .iter()
            .map(|&sh| {
                LatticeSet::new(
                    d,
                    k.points().iter().map(|p| {
                        let mut q = ORIGIN;
                        for i in 0..d {
                            q[i] = p[i] >> sh;
                        }
                        q
                    }),
                )
            })
            .collect();
        Ok(EscapeRegions { d, m, shifts, coarse })
    }

    pub fn levels(&self) -> usize {
        self.shifts.len()
    }

    /// Nominal radius s_ℓ = m·c_ℓ of each level.
    pub fn radii(&self) -> Vec<f64> {
        self.shifts.iter().map(|&sh| self.m * 2f64.powi(sh as i32)).collect()
    }

    pub fn cache(&self) -> RegionCache {
        RegionCache { maps: vec![FxHashMap::default(); self.levels()] }
    }

    fn in_region(&self, level: usize, p: &Point, cache: &mut RegionCache) -> bool {
        let shift = self.shifts[level];
        let Some(key) = pack_cell(self.d, p, shift) else {
            return false;
        };
        if let Some(&b) = cache.maps[level].get(&key) {
            return b;
        }
        let mut q = ORIGIN;
        for i in 0..self.d {
            q[i] = p[i] >> shift;
        }
        let coarse = &self.coarse[level];
        let b = coarse.contains(&q) || coarse.within(&q, self.m);
        cache.maps[level].insert(key, b);
        b
    }

    /// Smallest level ≥ `start` whose region contains `p`; `levels()` if none.
    #[inline]
    pub fn level_from(&self, p: &Point, start: usize, cache: &mut RegionCache) -> usize {
        (start..self.levels()).find(|&l| self.in_region(l, p, cache)).unwrap_or(self.levels())
    }
}

/// Work items of an escape trial. `Spine` is a spine vertex whose left bush
/// and successor are not yet drawn; `Vertex` is a bush vertex whose offspring
/// are not yet drawn.
#[derive(Clone, Copy)]
enum Pending {
    Spine(Point),
    Vertex(Point),
}

enum LevelOutcome {
    Clear,
    Hit,
    Truncated,
}

/// Shared inputs of the escape trials.
struct EscapeContext<'a> {
    k: &'a LatticeSet,
    regions: &'a EscapeRegions,
    mu: &'a OffspringDist,
    left_law: &'a Pmf,
    theta: &'a StepDist,
    budget: usize,
    split: usize,
}

/// Per-worker state reused across trials.
struct EscapeWorker {
    cache: RegionCache,
    stack: Vec<(Point, u32)>,
    count: usize,
}

impl EscapeContext<'_> {
    /// Explore every pending vertex of requirement `level`, deferring
    /// descendants that need a larger region.
    fn run_level(
        &self,
        level: usize,
        pending: &mut [Vec<Pending>],
        w: &mut EscapeWorker,
        rng: &mut SimRng,
    ) -> LevelOutcome {
        let levels = pending.len();
        while let Some(item) = pending[level].pop() {
            let pos = match item {
                Pending::Spine(pos) | Pending::Vertex(pos) => pos,
            };
            if self.k.contains(&pos) {
                return LevelOutcome::Hit;
            }
            let children = match item {
                Pending::Spine(_) => {
                    let next = point::add(&pos, self.theta.sample(rng));
                    w.count += 1;
                    let r = self.regions.level_from(&next, level, &mut w.cache);
                    if r < levels {
                        pending[r].push(Pending::Spine(next));
                    }
                    self.left_law.sample(rng) as u32
                }
                Pending::Vertex(_) => self.mu.sample(rng),
            };
            if children == 0 {
                continue;
            }
            w.stack.clear();
            w.stack.push((pos, children));
            while let Some(top) = w.stack.last_mut() {
                if top.1 == 0 {
                    w.stack.pop();
                    continue;
                }
                top.1 -= 1;
                let child = point::add(&top.0, self.theta.sample(rng));
                w.count += 1;
                if w.count > self.budget {
                    return LevelOutcome::Truncated;
                }
                let r = self.regions.level_from(&child, level, &mut w.cache);
                if r > level {
                    if r < levels {
                        pending[r].push(Pending::Vertex(child));
                    }
                    continue;
                }
                if self.k.contains(&child) {
                    return LevelOutcome::Hit;
                }
                let c = self.mu.sample(rng);
                if c > 0 {
                    w.stack.push((child, c));
                }
            }
        }
        LevelOutcome::Clear
    }

    /// Continue a trial from `level` with weight `weight`, adding to
    /// `escapes[l]` the weight of "no return at requirement ≤ l".
    ///
    /// Whether K is visited at requirement ≤ ℓ does not depend on the order in
    /// which the tree is explored, so levels are explored innermost first and
    /// exploration stops at the first visit to K. Once a level is clear, what
    /// happens next depends only on the pending vertices, so the state is
    /// copied `split` times and each copy continues independently with a
    /// share of the weight (multilevel splitting; unbiased).
    #[allow(clippy::too_many_arguments)]
    fn explore(
        &self,
        mut level: usize,
        weight: f64,
        pending: &mut Vec<Vec<Pending>>,
        w: &mut EscapeWorker,
        rng: &mut SimRng,
        escapes: &mut [f64],
        truncated: &mut f64,
    ) {
        let levels = pending.len();
        while level < levels {
            match self.run_level(level, pending, w, rng) {
                LevelOutcome::Hit => return,
                LevelOutcome::Truncated => {
                    // Undecided trials count as returns, so escape
                    // frequencies are lower bounds.
                    *truncated += weight;
                    return;
                }
                LevelOutcome::Clear => escapes[level] += weight,
            }
            level += 1;
            if self.split > 1 && level < levels {
                let share = weight / self.split as f64;
                for _ in 0..self.split {
                    let mut copy = pending.clone();
                    let mut child_rng = SimRng::from_rng(&mut *rng);
                    self.explore(level, share, &mut copy, w, &mut child_rng, escapes, truncated);
                }
                return;
            }
        }
    }

    fn trial(&self, a: &Point, w: &mut EscapeWorker, rng: &mut SimRng, escapes: &mut [f64], truncated: &mut f64) {
        let levels = self.regions.levels();
        let mut pending = vec![Vec::new(); levels];
        // The root carries no left bush; its successor is the first spine vertex.
        let first = point::add(a, self.theta.sample(rng));
        let r = self.regions.level_from(&first, 0, &mut w.cache);
        if r < levels {
            pending[r].push(Pending::Spine(first));
        }
        w.count = 2;
        // A first step outside every region escapes at every level.
        let start = r.min(levels);
        for e in escapes.iter_mut().take(start) {
            *e += 1.0;
        }
        self.explore(start, 1.0, &mut pending, w, rng, escapes, truncated);
    }
}

/// Escape estimator: |∂K| times the probability that the walk indexed by the
/// depth-first reading of the invariant tree, started at a uniform boundary
/// point of K, never returns to K. Only boundary points can escape, so
/// sampling starts from ∂K. Guards are the nested regions of
/// [`EscapeRegions`]; values per level are extrapolated in the cell side.
pub fn bcap_escape(
    k: &LatticeSet,
    mu: &OffspringDist,
    theta: &StepDist,
    params: &EscapeParams,
    key: &StreamKey,
) -> Result<CapacityEstimate> {
    check_inputs(k, mu, theta)?;
    if params.batches == 0 || params.trials == 0 {
        return Err(Error::validation("need trials and batches"));
    }
    let d = theta.dim();
    let boundary = k.boundary(theta.steps());
    let base_radius = params.base_radius.unwrap_or_else(|| (k.diameter() / 4.0).max((k.dim() as f64).sqrt()));
    let regions = EscapeRegions::new(k, base_radius, params.levels)?;
    let left_law = mu.adjoint()?;
    let exponent = params.exponent.unwrap_or(d as f64 - 4.0);
    let nb = params.batches;
    let per_task = params.trials.div_ceil(nb as u64);
    let trial_key = key.child("escape");
    let levels = regions.levels();
    let ctx = EscapeContext {
        k,
        regions: &regions,
        mu,
        left_law: &left_law,
        theta,
        budget: params.budget,
        split: params.split.max(1),
    };
    let results = par_collect(nb, |b| {
        let mut rng = trial_key.stream(b as u64);
        let mut worker = EscapeWorker { cache: regions.cache(), stack: Vec::new(), count: 0 };
        let mut escapes = vec![0.0; levels];
        let mut truncated = 0.0;
        for _ in 0..per_task {
            let a = boundary[rng.random_range(0..boundary.len())];
            ctx.trial(&a, &mut worker, &mut rng, &mut escapes, &mut truncated);
        }
        (escapes, truncated)
    });
    let nbd = boundary.len() as f64;
    let sides = regions.radii();
    let mut per_batch = Vec::with_capacity(nb);
    let mut scale_moments = vec![Moments::default(); levels];
    let mut total_trunc = 0.0;
    for (escapes, trunc) in &results {
        let row: Vec<f64> = escapes.iter().map(|&e| nbd * e / per_task as f64).collect();
        for (l, v) in row.iter().enumerate() {
            scale_moments[l].push(*v);
        }
        per_batch.push(row);
        total_trunc += trunc;
    }
    let samples = per_task * nb as u64;
    let truncated_fraction = total_trunc / samples as f64;
    let mut warnings = Vec::new();
    if truncated_fraction > params.truncation_cap {
        warnings.push(format!("truncated fraction {truncated_fraction:.4} exceeds {}", params.truncation_cap));
    }
    let total_escapes: f64 = results.iter().map(|(e, _)| e[levels - 1]).sum();
    let fit_from = levels - params.fit_levels.unwrap_or(levels).clamp(1, levels);
    let fit_rows: Vec<Vec<f64>> = per_batch.iter().map(|row| row[fit_from..].to_vec()).collect();
    let (value, mut stderr, batches) = extrapolate_batches(&sides[fit_from..], &fit_rows, exponent);
    if total_escapes == 0.0 {
        warnings.push("no escapes recorded; value 0 with Bernoulli-bound stderr".into());
        stderr = nbd * 3.0 / samples as f64;
    }
    let scales = sides
        .iter()
        .zip(&scale_moments)
        .map(|(&s, m)| ScaleValue { scale: s, value: m.mean, stderr: m.stderr() })
        .collect();
    let mut p = BTreeMap::new();
    p.insert("trials".into(), json!(samples));
    p.insert("budget".into(), json!(params.budget));
    p.insert("levels".into(), json!(levels));
    p.insert("guard_radii".into(), json!(sides));
    p.insert("batches".into(), json!(nb));
    p.insert("exponent".into(), json!(exponent));
    p.insert("fit_levels".into(), json!(levels - fit_from));
    p.insert("split".into(), json!(params.split));
    p.insert("boundary_points".into(), json!(boundary.len()));
    Ok(CapacityEstimate {
        method: "bcap-escape".into(),
        set: describe(k),
        value,
        stderr,
        samples,
        params: p,
        truncated_fraction,
        batches,
        scales,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_are_nested() {
        let k = LatticeSet::ball(5, &ORIGIN, 3.0);
        let r = EscapeRegions::new(&k, 4.0, 4).unwrap();
        assert_eq!(r.radii(), vec![4.0, 8.0, 16.0, 32.0]);
        assert!(EscapeRegions::new(&k, 2.0, 2).is_err());
        let mut cache = r.cache();
        for p in k.points() {
            assert_eq!(r.level_from(p, 0, &mut cache), 0);
        }
        assert_eq!(r.level_from(&point::from_slice(&[1000, 0, 0, 0, 0]), 0, &mut cache), 4);
        // Unit cubes at the first level: the exact distance threshold.
        assert_eq!(r.level_from(&point::from_slice(&[7, 0, 0, 0, 0]), 0, &mut cache), 0);
        assert_eq!(r.level_from(&point::from_slice(&[8, 0, 0, 0, 0]), 0, &mut cache), 1);
        let mut rng = crate::rng::seeded(5, "regions");
        let slack = 5f64.sqrt();
        for _ in 0..3000 {
            let p = point::from_slice(&(0..5).map(|_| rng.random_range(-45..=45)).collect::<Vec<_>>());
            let dist = k.min_dist(&p).unwrap();
            let l = r.level_from(&p, 0, &mut cache);
            for (m, s) in r.radii().into_iter().enumerate() {
                let inside = m >= l;
                assert_eq!(r.level_from(&p, m, &mut cache), if inside { m } else { l });
                let c = s / 4.0;
                if dist <= s - slack * c {
                    assert!(inside, "{p:?} at distance {dist} outside level {m}");
                }
                if dist > s + slack * c {
                    assert!(!inside, "{p:?} at distance {dist} inside level {m}");
                }
            }
        }
    }

    #[test]
    fn pack_cell_range() {
        let p = point::from_slice(&[-1, 2, 40_000]);
        assert!(pack_cell(3, &p, 0).is_none());
        assert!(pack_cell(3, &p, 2).is_some());
        assert_ne!(pack_cell(2, &p, 0), pack_cell(2, &point::from_slice(&[2, -1]), 0));
    }
}
