use std::collections::BTreeMap;

use serde_json::json;

use super::branching::{directions, nearest_lattice_point};
use super::{extrapolate_batches, par_collect, CapacityEstimate, ScaleValue};
use crate::distributions::StepDist;
use crate::error::{Error, Result};
use crate::lattice::LatticeSet;
use crate::point;
use crate::rng::StreamKey;
use crate::stats::Moments;

/// Parameters of the discrete Newtonian capacity estimator.
#[derive(Clone, Debug)]
pub struct NewtonianParams {
    pub far_distances: Vec<f64>,
    pub random_directions: usize,
    pub trials_per_direction: u64,
    /// Walks farther than `guard_factor · |x|` from K count as misses.
    pub guard_factor: f64,
    /// Step cap per walk; walks reaching it count as truncated misses.
    pub max_steps: u64,
    pub batches: usize,
}

impl Default for NewtonianParams {
    fn default() -> Self {
        NewtonianParams {
            far_distances: vec![8.0, 12.0, 16.0],
            random_directions: 8,
            trials_per_direction: 20_000,
            guard_factor: 8.0,
            max_steps: 10_000_000,
            batches: 16,
        }
    }
}

/// Cap(K) = lim |x|^{d-2} P_x(S hits K), estimated at each far distance
/// from direction-averaged hitting frequencies and extrapolated linearly in 1/ρ.
pub fn newtonian_cap(
    k: &LatticeSet,
    theta: &StepDist,
    params: &NewtonianParams,
    key: &StreamKey,
) -> Result<CapacityEstimate> {
    if k.is_empty() {
        return Err(Error::validation("capacity of the empty set"));
    }
    let d = theta.dim();
    if d < 3 || k.dim() != d {
        return Err(Error::validation(format!("need d ≥ 3 and matching dimensions, got {d} and {}", k.dim())));
    }
    theta.require_symmetric()?;
    if params.far_distances.is_empty() || params.batches == 0 || params.trials_per_direction == 0 {
        return Err(Error::validation("need far distances, batches and trials"));
    }
    let cen = k.centroid();
    let center = nearest_lattice_point(&cen, d);
    let enclosing = k.radius_about(&cen);
    let diam = k.diameter();
    for &rho in &params.far_distances {
        if rho < 2.0 * diam || rho <= enclosing + 1.0 {
            return Err(Error::validation(format!(
                "far distance {rho} must be at least twice the diameter {diam:.2} and beyond the enclosing radius"
            )));
        }
    }
    let dirs: Vec<_> = (0..params.far_distances.len())
        .map(|i| directions(d, params.random_directions, key, i))
        .collect();
    let ndir = dirs[0].len();
    let nb = params.batches;
    let per_task = params.trials_per_direction.div_ceil(nb as u64);
    let tasks = params.far_distances.len() * ndir * nb;
    let walk_key = key.child("newtonian");
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
        let mut rng = walk_key.stream(t as u64);
        let (mut hits, mut truncated) = (0u64, 0u64);
        for _ in 0..per_task {
            let mut pos = x;
            let mut steps = 0u64;
            loop {
                if k.contains(&pos) {
                    hits += 1;
                    break;
                }
                if point::dist_sq(&pos, &center) > guard_r2 {
                    break;
                }
                if steps == params.max_steps {
                    truncated += 1;
                    break;
                }
                pos = point::add(&pos, theta.sample(&mut rng));
                steps += 1;
            }
        }
        let r = point::norm2(&point::sub(&x, &center));
        (hits, truncated, r.powi(d as i32 - 2))
    });
    let ns = params.far_distances.len();
    let mut per_batch = vec![vec![0.0; ns]; nb];
    let (mut total_hits, mut total_trunc) = (0u64, 0u64);
    for (t, &(hits, trunc, scale)) in results.iter().enumerate() {
        let b = t % nb;
        let di = t / (nb * ndir);
        per_batch[b][di] += hits as f64 / per_task as f64 * scale / ndir as f64;
        total_hits += hits;
        total_trunc += trunc;
    }
    let mut scale_moments = vec![Moments::default(); ns];
    for row in &per_batch {
        for (di, v) in row.iter().enumerate() {
            scale_moments[di].push(*v);
        }
    }
    let samples = tasks as u64 * per_task;
    let mut warnings = Vec::new();
    let (value, mut stderr, batches) = extrapolate_batches(&params.far_distances, &per_batch, 1.0);
    if total_hits == 0 {
        warnings.push("no hits recorded; value 0 with Bernoulli-bound stderr".into());
        let rho_max = params.far_distances.iter().cloned().fold(0.0, f64::max);
        stderr = 3.0 / samples as f64 * rho_max.powi(d as i32 - 2);
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
    p.insert("guard_factor".into(), json!(params.guard_factor));
    p.insert("batches".into(), json!(nb));
    p.insert("hits".into(), json!(total_hits));
    Ok(CapacityEstimate {
        method: "newtonian".into(),
        set: format!("{} points in Z^{}", k.len(), d),
        value,
        stderr,
        samples,
        params: p,
        truncated_fraction: total_trunc as f64 / samples as f64,
        batches,
        scales,
        warnings,
    })
}
