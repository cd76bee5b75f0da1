use std::f64::consts::PI;

use rand::Rng;
use rustc_hash::FxHashMap;
use statrs::function::gamma::gamma;

use super::norm::ThetaNorm;
use crate::distributions::{canonical, orbit_size, StepDist};
use crate::error::{Error, Result};
use crate::point::{self, Point, MAX_DIM, ORIGIN};

/// Boundary data used on the outer layer of the solve box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenBoundary {
    /// g = 0 outside the box (killed walk).
    Absorbing,
    /// g = c_g |x|_θ^{2-d} outside the box.
    FarField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMethod {
    LinearSolve(GreenBoundary),
    MonteCarlo,
}

/// c_g = Γ((d-2)/2) / (2 π^{d/2} √det M).
pub fn green_asymptotic_constant(d: usize, det_m: f64) -> f64 {
    let df = d as f64;
    gamma((df - 2.0) / 2.0) / (2.0 * PI.powf(df / 2.0) * det_m.sqrt())
}

enum Layout {
    /// Values indexed by the canonical (sorted absolute value) representative.
    Reduced(FxHashMap<[u8; MAX_DIM], u32>),
    /// Row-major values over the full box.
    Full,
}

/// Green function values on the box [-R, R]^d.
pub struct GreenTable {
    d: usize,
    radius: i32,
    method: GreenMethod,
    values: Vec<f64>,
    layout: Layout,
    residual: f64,
    iterations: usize,
    c_g: f64,
    norm: ThetaNorm,
}

impl GreenTable {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> i32 {
        self.radius
    }

    pub fn method(&self) -> GreenMethod {
        self.method
    }

    /// Max-norm residual of (I - P)g = δ₀ over the box.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn c_g(&self) -> f64 {
        self.c_g
    }

    pub fn norm(&self) -> &ThetaNorm {
        &self.norm
    }

    /// Asymptotic form c_g |x|_θ^{2-d}.
    pub fn asymptotic(&self, x: &Point) -> f64 {
        self.c_g * self.norm.norm(x).powf(2.0 - self.d as f64)
    }

    /// Table value inside the box.
    pub fn get(&self, x: &Point) -> Option<f64> {
        if x[..self.d].iter().any(|&c| c.abs() > self.radius) {
            return None;
        }
        match &self.layout {
            Layout::Reduced(index) => index.get(&canonical_key(&x[..self.d])).map(|&i| self.values[i as usize]),
            Layout::Full => Some(self.values[full_index(self.d, self.radius, x)]),
        }
    }

    /// Table value inside the box, asymptotic form outside.
    pub fn eval(&self, x: &Point) -> f64 {
        match self.get(x) {
            Some(v) => v,
            None => self.asymptotic(x),
        }
    }
}

fn canonical_key(x: &[i32]) -> [u8; MAX_DIM] {
    let c = canonical(x);
    let mut k = [0u8; MAX_DIM];
    for (i, v) in c.iter().enumerate() {
        k[i] = *v as u8;
    }
    k
}

fn full_index(d: usize, r: i32, x: &Point) -> usize {
    let side = (2 * r + 1) as usize;
    let mut idx = 0usize;
    for &c in &x[..d] {
        idx = idx * side + (c + r) as usize;
    }
    idx
}

/// Solve (I - P) g = δ₀ on [-R, R]^d by conjugate gradients.
///
/// For step laws invariant under coordinate permutations and sign changes the
/// unknowns are reduced to one value per orbit, which makes R = 32 in d = 5
/// affordable; otherwise the full box is solved.
pub fn green_solve(theta: &StepDist, radius: i32, boundary: GreenBoundary) -> Result<GreenTable> {
    let d = theta.dim();
    if d < 3 {
        return Err(Error::validation(format!("Green function needs a transient walk (d ≥ 3), got d = {d}")));
    }
    if radius < 5 {
        return Err(Error::validation(format!("box radius {radius} below 5")));
    }
    theta.require_symmetric()?;
    let norm = ThetaNorm::new(theta.covariance(), d)?;
    let c_g = green_asymptotic_constant(d, norm.det());
    let far = |y: &Point| match boundary {
        GreenBoundary::Absorbing => 0.0,
        GreenBoundary::FarField => c_g * norm.norm(y).powf(2.0 - d as f64),
    };
    let reduced = theta.is_hyperoctahedral() && radius <= 255;

    // Assemble: points, orbit weights, neighbor lists (index or boundary), right-hand side.
    let mut pts: Vec<Point> = Vec::new();
    let mut index: FxHashMap<[u8; MAX_DIM], u32> = FxHashMap::default();
    if reduced {
        let mut cur = vec![0i32; d];
        fn rec(d: usize, i: usize, lo: i32, r: i32, cur: &mut Vec<i32>, out: &mut Vec<Point>) {
            if i == d {
                out.push(point::from_slice(cur));
                return;
            }
            for v in lo..=r {
                cur[i] = v;
                rec(d, i + 1, v, r, cur, out);
            }
        }
        rec(d, 0, 0, radius, &mut cur, &mut pts);
        for (i, p) in pts.iter().enumerate() {
            index.insert(canonical_key(&p[..d]), i as u32);
        }
    } else {
        let side = (2 * radius + 1) as u64;
        let total = side.pow(d as u32);
        if total > 30_000_000 {
            return Err(Error::Budget(format!(
                "full-box Green solve needs {total} unknowns; use a smaller radius or a symmetric step law"
            )));
        }
        for idx in 0..total {
            let mut p = ORIGIN;
            let mut r = idx;
            for i in (0..d).rev() {
                p[i] = (r % side) as i32 - radius;
                r /= side;
            }
            pts.push(p);
        }
    }
    let n = pts.len();
    let k = theta.steps().len();
    let neighbor_entries = n as u128 * k as u128;
    if neighbor_entries > 400_000_000 {
        return Err(Error::Budget(format!("Green solve neighbor table of {neighbor_entries} entries is too large")));
    }
    let weights: Vec<f64> = if reduced {
        pts.iter().map(|p| orbit_size(&canonical(&p[..d])) as f64).collect()
    } else {
        vec![1.0; n]
    };
    const OUTSIDE: u32 = u32::MAX;
    let mut nbr = vec![OUTSIDE; n * k];
    let mut rhs = vec![0.0; n];
    for (i, p) in pts.iter().enumerate() {
        if p[..d].iter().all(|&c| c == 0) {
            rhs[i] += 1.0;
        }
        for (j, (z, &q)) in theta.steps().iter().zip(theta.probs()).enumerate() {
            let y = point::add(p, z);
            if y[..d].iter().any(|&c| c.abs() > radius) {
                rhs[i] += q * far(&y);
            } else {
                nbr[i * k + j] = if reduced {
                    index[&canonical_key(&y[..d])]
                } else {
                    full_index(d, radius, &y) as u32
                };
            }
        }
    }
    let probs = theta.probs().to_vec();
    // A u = (I - P) u restricted to the box.
    let apply = |u: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let row = &nbr[i * k..(i + 1) * k];
            let mut s = 0.0;
            for (j, &t) in row.iter().enumerate() {
                if t != OUTSIDE {
                    s += probs[j] * u[t as usize];
                }
            }
            out[i] = u[i] - s;
        }
    };

    // Conjugate gradients on W A u = W b, which is symmetric positive definite.
    let mut u = vec![0.0; n];
    let mut r: Vec<f64> = rhs.iter().zip(&weights).map(|(b, w)| b * w).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let b_norm = rr.sqrt().max(1e-300);
    let max_iter = 20_000;
    let mut iterations = 0;
    while iterations < max_iter && rr.sqrt() > 1e-13 * b_norm {
        apply(&p, &mut ap);
        for (a, w) in ap.iter_mut().zip(&weights) {
            *a *= w;
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::numerical("Green operator lost positive definiteness"));
        }
        let alpha = rr / pap;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    let mut check = vec![0.0; n];
    apply(&u, &mut check);
    let residual = check.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(Error::numerical(format!(
            "Green solve did not converge: residual {residual:.3e} after {iterations} iterations"
        )));
    }
    Ok(GreenTable {
        d,
        radius,
        method: GreenMethod::LinearSolve(boundary),
        values: u,
        layout: if reduced { Layout::Reduced(index) } else { Layout::Full },
        residual,
        iterations,
        c_g,
        norm,
    })
}

/// Monte Carlo estimate of g(0) = 1 / P(no return): returns (g(0), stderr,
/// return probability). Walks are cut after `max_steps`; returns after the cut
/// are missed, which biases g(0) down by at most the tail of the return-time law.
pub fn green_mc_origin<R: Rng + ?Sized>(theta: &StepDist, walks: u64, max_steps: usize, rng: &mut R) -> (f64, f64, f64) {
    let mut returns = 0u64;
    for _ in 0..walks {
        let mut x = ORIGIN;
        for _ in 0..max_steps {
            x = point::add(&x, theta.sample(rng));
            if x == ORIGIN {
                returns += 1;
                break;
            }
        }
    }
    let p = returns as f64 / walks as f64;
    let se_p = (p * (1.0 - p) / walks as f64).sqrt();
    let g0 = 1.0 / (1.0 - p);
    (g0, se_p * g0 * g0, p)
}
