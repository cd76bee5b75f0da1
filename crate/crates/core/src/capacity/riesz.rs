//! Riesz capacity Cap_γ(A) = (inf_ν ∬ |x-y|^{-γ} ν(dx) ν(dy))^{-1} of a point
//! cloud, by away-step Frank–Wolfe over the probability simplex.
//!
//! Point masses have infinite γ-energy, so each point carries a self-energy
//! κ·h^{-γ} standing for the mass spread over a cell of size h (the pitch).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RieszParams {
    pub gamma: f64,
    /// Stop when the relative duality gap falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Discretization pitch h; `None` uses the mean nearest-neighbour distance.
    pub pitch: Option<f64>,
    /// Self-energy constant κ; `None` uses [`default_diagonal_kappa`].
    pub kappa: Option<f64>,
}

impl RieszParams {
    pub fn new(gamma: f64) -> Self {
        RieszParams { gamma, tol: 1e-8, max_iters: 200_000, pitch: None, kappa: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RieszSolution {
    pub gamma: f64,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Minimal energy including the self-energy term.
    pub energy: f64,
    /// Off-diagonal part of the energy at the minimizer.
    pub interaction_energy: f64,
    /// 1 / energy.
    pub capacity: f64,
    /// (max gradient on the support - min gradient) / (2·energy).
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub pitch: f64,
    pub kappa: f64,
    pub energy_history: Vec<f64>,
}

/// Self-energy constant 2^γ/(2-γ) for γ < 2; 1 otherwise.
pub fn default_diagonal_kappa(gamma: f64) -> f64 {
    if gamma < 2.0 {
        2f64.powf(gamma) / (2.0 - gamma)
    } else {
        1.0
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean_nearest_neighbour(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut best = f64::INFINITY;
        for j in 0..n {
            if i != j {
                best = best.min(dist(&points[i], &points[j]));
            }
        }
        total += best;
    }
    total / n as f64
}

/// Minimize the discretized γ-energy over probability weights on `points`.
pub fn riesz_cap(points: &[Vec<f64>], params: &RieszParams) -> Result<RieszSolution> {
    let n = points.len();
    if n < 2 {
        return Err(Error::validation("Riesz capacity needs at least two points"));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::validation("points of mixed dimension"));
    }
    let gamma = params.gamma;
    if !(gamma > 0.0 && gamma < d as f64) {
        return Err(Error::validation(format!("need 0 < γ < d = {d}, got {gamma}")));
    }
    let pitch = match params.pitch {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::validation(format!("pitch must be positive, got {h}"))),
        None => mean_nearest_neighbour(points),
    };
    let kappa = params.kappa.unwrap_or_else(|| default_diagonal_kappa(gamma));
    let diag = kappa * pitch.powf(-gamma);

    let mut kern = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        kern[(i, i)] = diag;
        for j in 0..i {
            let r = dist(&points[i], &points[j]);
            if r == 0.0 {
                return Err(Error::validation(format!("points {j} and {i} coincide")));
            }
            let v = r.powf(-gamma);
            kern[(i, j)] = v;
            kern[(j, i)] = v;
        }
    }
    if kern.clone().cholesky().is_none() {
        return Err(Error::numerical(format!(
            "kernel is not positive definite with self-energy κ = {kappa}; try a larger κ"
        )));
    }

    // State: weights w, u = K w, energy = wᵀu.
    let mut w = vec![1.0 / n as f64; n];
    let mut u: Vec<f64> = (0..n).map(|i| kern.row(i).iter().sum::<f64>() / n as f64).collect();
    let mut energy = dot(&w, &u);
    let mut history = vec![energy];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        // The gradient is 2u; work with u.
        let (mut s, mut a) = (0usize, usize::MAX);
        for i in 0..n {
            if u[i] < u[s] {
                s = i;
            }
            if w[i] > 0.0 && (a == usize::MAX || u[i] > u[a]) {
                a = i;
            }
        }
        gap = (u[a] - u[s]) / energy;
        if gap < params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let fw_gain = energy - u[s];
        let away_gain = u[a] - energy;
        // Direction D, its slope uᵀD, curvature DᵀKD and maximal step.
        let (toward, slope, curv, max_step) = if fw_gain >= away_gain {
            (true, u[s] - energy, kern[(s, s)] - 2.0 * u[s] + energy, 1.0)
        } else {
            let wa = w[a];
            let max_step = if wa < 1.0 { wa / (1.0 - wa) } else { f64::INFINITY };
            (false, energy - u[a], energy - 2.0 * u[a] + kern[(a, a)], max_step)
        };
        if slope >= 0.0 || curv <= 0.0 {
            break;
        }
        let step = (-slope / curv).min(max_step);
        let new_energy = energy + 2.0 * step * slope + step * step * curv;
        if !(new_energy <= energy) {
            // Rounding has taken over.
            break;
        }
        if toward {
            for i in 0..n {
                w[i] *= 1.0 - step;
                u[i] = (1.0 - step) * u[i] + step * kern[(i, s)];
            }
            w[s] += step;
        } else {
            for i in 0..n {
                w[i] *= 1.0 + step;
                u[i] = (1.0 + step) * u[i] - step * kern[(i, a)];
            }
            w[a] -= step;
            if step == max_step {
                w[a] = 0.0;
            }
        }
        for v in w.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        energy = new_energy;
        history.push(energy);
        // Refresh the running quantities now and then to stop drift.
        if iterations % 1000 == 0 {
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            for i in 0..n {
                u[i] = kern.row(i).iter().zip(&w).map(|(k, x)| k * x).sum();
            }
            energy = energy.min(dot(&w, &u));
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    let diag_part: f64 = w.iter().map(|x| x * x * diag).sum();
    Ok(RieszSolution {
        gamma,
        points: points.to_vec(),
        weights: w,
        energy,
        interaction_energy: energy - diag_part,
        capacity: 1.0 / energy,
        gap,
        iterations,
        converged,
        pitch,
        kappa,
        energy_history: history,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cap_{d-4} of a point cloud: comparable to the Brownian snake capacity up to
/// unknown constants, and only that.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnakeSurrogate {
    pub d: usize,
    pub gamma: f64,
    pub cap: f64,
    pub label: String,
    pub solution: RieszSolution,
}

pub fn bscap_surrogate(points: &[Vec<f64>], d: usize, params: &RieszParams) -> Result<SnakeSurrogate> {
    if d < 5 {
        return Err(Error::validation(format!("the snake capacity surrogate needs d ≥ 5, got {d}")));
    }
    let gamma = d as f64 - 4.0;
    let p = RieszParams { gamma, ..params.clone() };
    let solution = riesz_cap(points, &p)?;
    Ok(SnakeSurrogate {
        d,
        gamma,
        cap: solution.capacity,
        label: format!("Cap_{gamma} surrogate; comparable to the Brownian snake capacity up to constants"),
        solution,
    })
}

/// Brownian path on [0, 1] in R^d sampled at `steps + 1` equally spaced times.
pub fn brownian_path<R: Rng + ?Sized>(d: usize, steps: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, (1.0 / steps as f64).sqrt()).expect("valid normal");
    let mut path = vec![vec![0.0; d]];
    for _ in 0..steps {
        let last = path.last().expect("nonempty");
        let next: Vec<f64> = last.iter().map(|x| x + normal.sample(rng)).collect();
        path.push(next);
    }
    path
}

/// Halve the time step of a Brownian path on [0, 1] by inserting Brownian
/// bridge midpoints.
pub fn refine_path<R: Rng + ?Sized>(path: &[Vec<f64>], rng: &mut R) -> Vec<Vec<f64>> {
    let steps = path.len() - 1;
    let normal = Normal::new(0.0, (0.25 / steps as f64).sqrt()).expect("valid normal");
    let mut out = Vec::with_capacity(2 * steps + 1);
    for w in path.windows(2) {
        out.push(w[0].clone());
        out.push(w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b) + normal.sample(rng)).collect());
    }
    out.push(path[steps].clone());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn two_points_split_evenly() {
        let r: f64 = 3.0;
        let pts = vec![vec![0.0, 0.0, 0.0], vec![r, 0.0, 0.0]];
        let sol = riesz_cap(&pts, &RieszParams { pitch: Some(1.0), ..RieszParams::new(1.0) }).unwrap();
        assert!((sol.weights[0] - 0.5).abs() < 1e-12);
        assert!((sol.interaction_energy - 0.5 / r).abs() < 1e-12);
    }

    #[test]
    fn refinement_doubles_resolution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let p = brownian_path(3, 10, &mut rng);
        let q = refine_path(&p, &mut rng);
        assert_eq!(q.len(), 21);
        assert_eq!(q[4], p[2]);
    }
}
