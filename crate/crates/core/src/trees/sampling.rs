use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::planar::PlanarTree;
use crate::distributions::{OffspringDist, Pmf};
use crate::error::Result;

/// Above this size, size-conditioned bridges are built by multinomial count
/// placement rather than by rejection from free walks.
pub const REJECTION_LIMIT: usize = 10_000;

/// A partially generated tree whose vertex budget ran out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truncated {
    /// Child counts of the materialized depth-first prefix.
    pub partial: Vec<u32>,
    /// Vertices generated before the sampler stopped.
    pub consumed: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GwSample {
    Complete(PlanarTree),
    Truncated(Truncated),
}

impl GwSample {
    pub fn is_truncated(&self) -> bool {
        matches!(self, GwSample::Truncated(_))
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            GwSample::Complete(t) => t.len(),
            GwSample::Truncated(t) => t.consumed,
        }
    }

    pub fn tree(&self) -> Option<&PlanarTree> {
        match self {
            GwSample::Complete(t) => Some(t),
            GwSample::Truncated(_) => None,
        }
    }

    /// Child counts of the generated prefix (the whole tree when complete).
    pub fn child_counts(&self) -> &[u32] {
        match self {
            GwSample::Complete(t) => t.child_counts(),
            GwSample::Truncated(t) => &t.partial,
        }
    }
}

fn grow<R: Rng + ?Sized>(
    root_law: Option<&Pmf>,
    mu: &OffspringDist,
    rng: &mut R,
    max_vertices: usize,
) -> GwSample {
    assert!(max_vertices >= 1);
    let mut counts = Vec::new();
    let mut open: i64 = 1;
    while open > 0 {
        if counts.len() == max_vertices {
            let consumed = counts.len();
            return GwSample::Truncated(Truncated { partial: counts, consumed });
        }
        let c = match (counts.is_empty(), root_law) {
            (true, Some(law)) => law.sample(rng) as u32,
            _ => mu.sample(rng),
        };
        counts.push(c);
        open += c as i64 - 1;
    }
    GwSample::Complete(PlanarTree::from_child_counts_unchecked(counts))
}

/// Unconditioned critical Galton–Watson tree, generated in depth-first order.
pub fn sample_gw<R: Rng + ?Sized>(mu: &OffspringDist, rng: &mut R, max_vertices: usize) -> GwSample {
    grow(None, mu, rng, max_vertices)
}

/// Adjoint tree: the root uses the tail tilt μ̃, all other vertices μ.
pub fn sample_adjoint<R: Rng + ?Sized>(
    mu: &OffspringDist,
    adjoint: &Pmf,
    rng: &mut R,
    max_vertices: usize,
) -> GwSample {
    grow(Some(adjoint), mu, rng, max_vertices)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BridgeMethod {
    Auto,
    Rejection,
    Multinomial,
}

/// Exact sample of a Galton–Watson tree conditioned to have `n` vertices.
pub fn sample_gw_conditioned<R: Rng + ?Sized>(mu: &OffspringDist, n: usize, rng: &mut R) -> Result<PlanarTree> {
    sample_gw_conditioned_with(mu, n, rng, BridgeMethod::Auto)
}

pub fn sample_gw_conditioned_with<R: Rng + ?Sized>(
    mu: &OffspringDist,
    n: usize,
    rng: &mut R,
    method: BridgeMethod,
) -> Result<PlanarTree> {
    mu.check_size_reachable(n)?;
    if n == 1 {
        return Ok(PlanarTree::single());
    }
    let use_rejection = match method {
        BridgeMethod::Auto => n <= REJECTION_LIMIT,
        BridgeMethod::Rejection => true,
        BridgeMethod::Multinomial => false,
    };
    let bridge = if use_rejection { rejection_bridge(mu, n, rng) } else { multinomial_bridge(mu, n, rng) };
    Ok(PlanarTree::from_child_counts_unchecked(vervaat(bridge)))
}

/// i.i.d. μ-samples conditioned on summing to n-1, by plain rejection.
fn rejection_bridge<R: Rng + ?Sized>(mu: &OffspringDist, n: usize, rng: &mut R) -> Vec<u32> {
    let target = (n - 1) as u64;
    let mut counts = Vec::with_capacity(n);
    'attempt: loop {
        counts.clear();
        let mut sum = 0u64;
        for _ in 0..n {
            let c = mu.sample(rng);
            sum += c as u64;
            if sum > target {
                continue 'attempt;
            }
            counts.push(c);
        }
        if sum == target {
            return counts;
        }
    }
}

/// Draw the multiset of offspring counts as a multinomial conditioned on the
/// total, then place it by a uniform shuffle. Exchangeability of the
/// conditioned i.i.d. sequence makes this exact.
fn multinomial_bridge<R: Rng + ?Sized>(mu: &OffspringDist, n: usize, rng: &mut R) -> Vec<u32> {
    let probs = mu.law().probs();
    let target = (n - 1) as u64;
    let mut tally = vec![0u64; probs.len()];
    loop {
        let mut left = n as u64;
        let mut mass: f64 = probs.iter().sum();
        let mut weighted = 0u64;
        for (k, &p) in probs.iter().enumerate() {
            if left == 0 || p == 0.0 {
                tally[k] = 0;
                continue;
            }
            let q = (p / mass).min(1.0);
            let draw = if k + 1 == probs.len() || q >= 1.0 {
                left
            } else {
                Binomial::new(left, q).expect("valid binomial").sample(rng)
            };
            tally[k] = draw;
            left -= draw;
            mass -= p;
            weighted += k as u64 * draw;
        }
        if left == 0 && weighted == target {
            break;
        }
    }
    let mut counts = Vec::with_capacity(n);
    for (k, &t) in tally.iter().enumerate() {
        counts.extend(std::iter::repeat_n(k as u32, t as usize));
    }
    counts.shuffle(rng);
    counts
}

/// Cycle lemma: rotate a bridge ending at -1 to start just after its first
/// minimum, which yields the unique excursion in its cyclic class.
fn vervaat(counts: Vec<u32>) -> Vec<u32> {
    let mut s = 0i64;
    let mut best = i64::MAX;
    let mut at = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        s += c as i64 - 1;
        if s < best {
            best = s;
            at = i + 1;
        }
    }
    let mut out = Vec::with_capacity(counts.len());
    out.extend_from_slice(&counts[at % counts.len()..]);
    out.extend_from_slice(&counts[..at % counts.len()]);
    out
}
