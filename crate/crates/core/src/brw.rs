//! Tree-indexed random walks: one lattice position per tree vertex, with
//! i.i.d. θ-displacements along edges.

use std::io::{Read, Write};

use rand::Rng;

use crate::distributions::{OffspringDist, StepDist};
use crate::error::{Error, Result};
use crate::lattice::LatticeSet;
use crate::point::{self, Point, MAX_DIM, ORIGIN};
use crate::rng::StreamKey;
use crate::stats::{ks_two_sample, TestResult};
use crate::trees::{sample_t_plus, GwSample, HatTMinus, PlanarTree, SpineSplit, TPlus, Truncated, VertexKind};

/// The tree object a walk is indexed by.
#[derive(Clone, Debug, PartialEq)]
pub enum WalkTree {
    Tree(PlanarTree),
    Truncated(Truncated),
    HatTMinus(HatTMinus),
    TPlus(TPlus),
}

impl WalkTree {
    pub fn is_truncated(&self) -> bool {
        matches!(self, WalkTree::Truncated(_))
    }

    fn text(&self) -> String {
        match self {
            WalkTree::Tree(t) => t.serialize(),
            WalkTree::Truncated(t) => {
                let parts: Vec<String> = t.partial.iter().map(|c| c.to_string()).collect();
                format!("{};{};truncated", t.partial.len(), parts.join(","))
            }
            WalkTree::HatTMinus(h) => h.serialize(),
            WalkTree::TPlus(_) => String::from("tplus"),
        }
    }
}

/// A realized branching random walk.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeWalk {
    pub d: usize,
    pub origin: Point,
    pub tree: WalkTree,
    /// Positions in the depth-first order of the tree.
    pub positions: Vec<Point>,
    /// Parent of each vertex (`usize::MAX` for roots of the realized structure).
    pub parents: Vec<usize>,
}

impl TreeWalk {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.tree.is_truncated()
    }

    /// Set of distinct visited sites.
    pub fn range(&self) -> LatticeSet {
        LatticeSet::new(self.d, self.positions.iter().copied())
    }

    /// Displacement along every edge whose parent is materialized.
    pub fn edge_increments(&self) -> Vec<Point> {
        self.parents
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != usize::MAX)
            .map(|(v, &p)| point::sub(&self.positions[v], &self.positions[p]))
            .collect()
    }

    /// Tree text, a newline, then d, count and the positions as little-endian i32.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let text = self.tree.text();
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.write_all(&(self.d as u32).to_le_bytes())?;
        w.write_all(&(self.positions.len() as u32).to_le_bytes())?;
        for p in &self.positions {
            for c in &p[..self.d] {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads the tree text and the position array back.
    pub fn read_binary<R: Read>(mut r: R) -> Result<(String, usize, Vec<Point>)> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::validation("walk file lacks the tree header line"))?;
        let text = String::from_utf8(bytes[..nl].to_vec()).map_err(|_| Error::validation("tree header is not UTF-8"))?;
        let mut rest = &bytes[nl + 1..];
        let mut word = [0u8; 4];
        rest.read_exact(&mut word)?;
        let d = u32::from_le_bytes(word) as usize;
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::validation(format!("stored dimension {d} unsupported")));
        }
        rest.read_exact(&mut word)?;
        let count = u32::from_le_bytes(word) as usize;
        let mut positions = Vec::with_capacity(count);
        for _ in 0..count {
            let mut p = ORIGIN;
            for c in p.iter_mut().take(d) {
                rest.read_exact(&mut word)?;
                *c = i32::from_le_bytes(word);
            }
            positions.push(p);
        }
        Ok((text, d, positions))
    }
}

fn dfs_parents(counts: &[u32]) -> Vec<usize> {
    let mut parents = vec![usize::MAX; counts.len()];
    let mut stack: Vec<(usize, u32)> = Vec::new();
    for v in 0..counts.len() {
        while stack.last().is_some_and(|t| t.1 == 0) {
            stack.pop();
        }
        if let Some(top) = stack.last_mut() {
            parents[v] = top.0;
            top.1 -= 1;
        }
        if counts[v] > 0 {
            stack.push((v, counts[v]));
        }
    }
    parents
}

fn realize_from_parents<R: Rng + ?Sized>(parents: &[usize], theta: &StepDist, x: &Point, rng: &mut R) -> Vec<Point> {
    let mut pos = Vec::with_capacity(parents.len());
    for &p in parents {
        if p == usize::MAX {
            pos.push(*x);
        } else {
            let step = theta.sample(rng);
            pos.push(point::add(&pos[p], step));
        }
    }
    pos
}

/// Realize a complete tree from `x`.
pub fn realize<R: Rng + ?Sized>(tree: &PlanarTree, theta: &StepDist, x: &Point, rng: &mut R) -> TreeWalk {
    let parents = dfs_parents(tree.child_counts());
    let positions = realize_from_parents(&parents, theta, x, rng);
    TreeWalk { d: theta.dim(), origin: *x, tree: WalkTree::Tree(tree.clone()), positions, parents }
}

/// Realize a sampler output; truncated trees get positions for their
/// materialized prefix only.
pub fn realize_sample<R: Rng + ?Sized>(sample: &GwSample, theta: &StepDist, x: &Point, rng: &mut R) -> TreeWalk {
    match sample {
        GwSample::Complete(t) => realize(t, theta, x, rng),
        GwSample::Truncated(t) => {
            let parents = dfs_parents(&t.partial);
            let positions = realize_from_parents(&parents, theta, x, rng);
            TreeWalk { d: theta.dim(), origin: *x, tree: WalkTree::Truncated(t.clone()), positions, parents }
        }
    }
}

/// Realize a prefix of the depth-first reading of the invariant tree's
/// nonpositive half; every edge, spine edges included, carries a θ-step.
pub fn realize_hat<R: Rng + ?Sized>(hat: &HatTMinus, theta: &StepDist, x: &Point, rng: &mut R) -> TreeWalk {
    let parents = hat.parents().to_vec();
    let positions = realize_from_parents(&parents, theta, x, rng);
    TreeWalk { d: theta.dim(), origin: *x, tree: WalkTree::HatTMinus(hat.clone()), positions, parents }
}

/// Realize a T_+ prefix. Spine vertices ∅_1, ∅_2, … are not part of T_+
/// but their positions (a θ-walk from x) anchor the right trees.
pub fn realize_t_plus<R: Rng + ?Sized>(t: &TPlus, theta: &StepDist, x: &Point, rng: &mut R) -> TreeWalk {
    let mut positions: Vec<Point> = Vec::with_capacity(t.len());
    let mut parents = Vec::with_capacity(t.len());
    let mut spine = *x;
    let mut spine_index = 0u32;
    for v in 0..t.len() {
        let b = t.blocks()[v];
        while spine_index < b {
            spine = point::add(&spine, theta.sample(rng));
            spine_index += 1;
        }
        if v == 0 {
            positions.push(*x);
            parents.push(usize::MAX);
            continue;
        }
        let base = match t.parents()[v] {
            Some(p) => {
                parents.push(p);
                positions[p]
            }
            None => {
                parents.push(usize::MAX);
                spine
            }
        };
        positions.push(point::add(&base, theta.sample(rng)));
    }
    TreeWalk { d: theta.dim(), origin: *x, tree: WalkTree::TPlus(t.clone()), positions, parents }
}

/// Spine and bush parts of a realized prefix of the depth-first reading.
#[derive(Clone, Debug)]
pub struct SpineDecomposition {
    pub spine: Vec<Point>,
    /// Bush positions in depth-first order, starting with the root.
    pub bush: Vec<Point>,
    pub spine_range: LatticeSet,
    pub bush_range: LatticeSet,
}

pub fn spine_decompose(walk: &TreeWalk) -> Result<SpineDecomposition> {
    let WalkTree::HatTMinus(hat) = &walk.tree else {
        return Err(Error::validation("spine decomposition needs a decorated prefix walk"));
    };
    let mut spine = Vec::new();
    let mut bush = vec![walk.positions[0]];
    for (v, kind) in hat.kinds().iter().enumerate() {
        match kind {
            VertexKind::Spine => spine.push(walk.positions[v]),
            VertexKind::Bush => bush.push(walk.positions[v]),
        }
    }
    let spine_range = LatticeSet::new(walk.d, spine.iter().copied());
    let bush_range = LatticeSet::new(walk.d, bush.iter().copied());
    Ok(SpineDecomposition { spine, bush, spine_range, bush_range })
}

/// max_{0≤k≤1/η} max_{0≤i≤ηn} |V(i + kηn) - V(kηn)| over the first n+1 positions,
/// with the per-block maxima.
#[derive(Clone, Debug)]
pub struct IncrementStat {
    pub value: f64,
    pub block_starts: Vec<usize>,
    pub block_maxima: Vec<f64>,
}

pub fn increment_stat(positions: &[Point], eta: f64, n: usize) -> Result<IncrementStat> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::validation(format!("window fraction {eta} outside (0,1]")));
    }
    if positions.len() < n + 1 {
        return Err(Error::validation(format!("need {} positions, have {}", n + 1, positions.len())));
    }
    let width = ((eta * n as f64).floor() as usize).max(1);
    let blocks = (1.0 / eta).floor() as usize;
    let mut starts = Vec::new();
    let mut maxima = Vec::new();
    for k in 0..=blocks {
        let start = k * width;
        if start > n {
            break;
        }
        let end = (start + width).min(n);
        let base = positions[start];
        let m = positions[start..=end]
            .iter()
            .map(|p| point::norm2(&point::sub(p, &base)))
            .fold(0.0, f64::max);
        starts.push(start);
        maxima.push(m);
    }
    let value = maxima.iter().copied().fold(0.0, f64::max);
    Ok(IncrementStat { value, block_starts: starts, block_maxima: maxima })
}

/// Scalar functionals of a window (V(n+i) - V(n))_{0≤i≤i_max}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowFunctional {
    /// First coordinate of the last displacement.
    EndpointFirstCoordinate,
    /// Number of distinct sites in the window.
    RangeSize,
}

fn window_value(positions: &[Point], start: usize, i_max: usize, f: WindowFunctional, d: usize) -> f64 {
    let base = positions[start];
    match f {
        WindowFunctional::EndpointFirstCoordinate => (positions[start + i_max][0] - base[0]) as f64,
        WindowFunctional::RangeSize => {
            LatticeSet::new(d, positions[start..=start + i_max].iter().map(|p| point::sub(p, &base))).len() as f64
        }
    }
}

/// Two-sample KS comparison of a window functional read at shift `n` versus
/// shift 0 along independent realizations of V_+.
pub fn translation_check(
    theta: &StepDist,
    mu: &OffspringDist,
    n: usize,
    i_max: usize,
    functional: WindowFunctional,
    samples: usize,
    key: &StreamKey,
) -> TestResult {
    let split = SpineSplit::new(mu);
    let mut at_zero = Vec::with_capacity(samples);
    let mut shifted = Vec::with_capacity(samples);
    for s in 0..samples {
        for (which, out) in [(0u64, &mut at_zero), (1u64, &mut shifted)] {
            let mut rng = key.stream(2 * s as u64 + which);
            let start = if which == 0 { 0 } else { n };
            let t = sample_t_plus(mu, &split, start + i_max, &mut rng);
            let w = realize_t_plus(&t, theta, &ORIGIN, &mut rng);
            out.push(window_value(&w.positions, start, i_max, functional, theta.dim()));
        }
    }
    ks_two_sample(&at_zero, &shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::trees::sample_hat_t_minus;

    #[test]
    fn single_vertex_walk() {
        let s = StepDist::srw(3, 0.0).unwrap();
        let x = point::from_slice(&[1, 2, 3]);
        let w = realize(&PlanarTree::single(), &s, &x, &mut seeded(1, "w"));
        assert_eq!(w.positions, vec![x]);
        assert_eq!(w.range().points(), &[x]);
    }

    #[test]
    fn positions_follow_parents() {
        let mu = OffspringDist::binary();
        let s = StepDist::srw(5, 0.0).unwrap();
        let mut rng = seeded(2, "p");
        let t = crate::trees::sample_gw_conditioned(&mu, 201, &mut rng).unwrap();
        let w = realize(&t, &s, &ORIGIN, &mut rng);
        for z in w.edge_increments() {
            assert!(s.prob(&z) > 0.0);
        }
        assert_eq!(w.positions[0], ORIGIN);
        assert!(w.range().len() <= w.len());
    }

    #[test]
    fn decomposition_of_root_prefix() {
        let mu = OffspringDist::binary();
        let split = SpineSplit::new(&mu);
        let s = StepDist::srw(5, 0.0).unwrap();
        let mut rng = seeded(3, "dec");
        let h = sample_hat_t_minus(&mu, &split, 0, &mut rng);
        let w = realize_hat(&h, &s, &ORIGIN, &mut rng);
        let dec = spine_decompose(&w).unwrap();
        assert_eq!(dec.spine, vec![ORIGIN]);
        assert_eq!(dec.bush, vec![ORIGIN]);
        let h = sample_hat_t_minus(&mu, &split, 500, &mut rng);
        let w = realize_hat(&h, &s, &ORIGIN, &mut rng);
        let dec = spine_decompose(&w).unwrap();
        assert_eq!(dec.spine_range.union(&dec.bush_range), w.range());
        assert_eq!(dec.spine.len() + dec.bush.len(), w.len() + 1);
    }

    #[test]
    fn increment_stat_single_block() {
        let pos: Vec<Point> = (0..11).map(|i| point::from_slice(&[i % 4, 0])).collect();
        let st = increment_stat(&pos, 1.0, 10).unwrap();
        assert_eq!(st.value, 3.0);
        let half = increment_stat(&pos, 0.5, 10).unwrap();
        assert_eq!(half.block_starts, vec![0, 5, 10]);
    }

    #[test]
    fn binary_round_trip() {
        let s = StepDist::srw(2, 0.0).unwrap();
        let t = PlanarTree::from_child_counts(vec![2, 0, 1, 0]).unwrap();
        let w = realize(&t, &s, &ORIGIN, &mut seeded(4, "bin"));
        let mut buf = Vec::new();
        w.write_binary(&mut buf).unwrap();
        let (text, d, pos) = TreeWalk::read_binary(&buf[..]).unwrap();
        assert_eq!(text, t.serialize());
        assert_eq!(d, 2);
        assert_eq!(pos, w.positions);
    }
}
