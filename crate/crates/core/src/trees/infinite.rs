use rand::Rng;

use crate::distributions::{AliasTable, OffspringDist};
use crate::error::{Error, Result};

/// Spine (`X`) or bush (`Y`) vertex of the depth-first reading of the
/// nonpositive half of the invariant tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Spine,
    Bush,
}

impl VertexKind {
    pub fn label(self) -> char {
        match self {
            VertexKind::Spine => 'X',
            VertexKind::Bush => 'Y',
        }
    }
}

/// Sampler for the left/right child split at spine vertices, P(i,j) = μ(i+j+1).
#[derive(Clone, Debug)]
pub struct SpineSplit {
    pairs: Vec<(u32, u32)>,
    table: AliasTable,
}

impl SpineSplit {
    pub fn new(mu: &OffspringDist) -> Self {
        let (pairs, weights) = mu.spine_split();
        let table = AliasTable::new(&weights).expect("critical law has positive mass above 0");
        SpineSplit { pairs, table }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        self.pairs[self.table.sample(rng)]
    }
}

/// Prefix of the depth-first reading of the nonpositive half of the
/// invariant tree. The spine vertex ∅_{n+1} is the last child of ∅_n, after
/// the `i` roots of the left bush at ∅_n; ∅_0 has an empty left bush.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HatTMinus {
    kinds: Vec<VertexKind>,
    parents: Vec<usize>,
    /// Children of each materialized vertex in the depth-first reading
    /// (for a spine vertex: its left-bush roots plus the next spine vertex).
    child_counts: Vec<u32>,
    /// Right-split counts j of each materialized spine vertex, in spine order.
    right_counts: Vec<u32>,
}

impl HatTMinus {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kinds(&self) -> &[VertexKind] {
        &self.kinds
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn child_counts(&self) -> &[u32] {
        &self.child_counts
    }

    pub fn right_counts(&self) -> &[u32] {
        &self.right_counts
    }

    pub fn spine_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == VertexKind::Spine).count()
    }

    /// Number of spine vertices among the first `upto + 1` vertices.
    pub fn spine_count_upto(&self, upto: usize) -> usize {
        self.kinds[..=upto.min(self.len() - 1)]
            .iter()
            .filter(|k| **k == VertexKind::Spine)
            .count()
    }

    pub fn labels(&self) -> String {
        self.kinds.iter().map(|k| k.label()).collect()
    }

    /// Text form `n;c0,...;XY...`.
    pub fn serialize(&self) -> String {
        let parts: Vec<String> = self.child_counts.iter().map(|c| c.to_string()).collect();
        format!("{};{};{}", self.len(), parts.join(","), self.labels())
    }

    /// Rebuilds a prefix from its text form. Right-split counts are not part
    /// of the text form and come back empty.
    pub fn parse(s: &str) -> Result<Self> {
        let mut fields = s.trim().split(';');
        let n: usize = fields
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| Error::validation("decorated prefix needs a vertex count"))?;
        let counts = fields
            .next()
            .ok_or_else(|| Error::validation("decorated prefix needs child counts"))?
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| Error::validation(format!("bad child count '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        let labels = fields.next().ok_or_else(|| Error::validation("decorated prefix needs X/Y labels"))?;
        let kinds = labels
            .trim()
            .chars()
            .map(|c| match c {
                'X' => Ok(VertexKind::Spine),
                'Y' => Ok(VertexKind::Bush),
                other => Err(Error::validation(format!("bad label '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if counts.len() != n || kinds.len() != n {
            return Err(Error::validation("decorated prefix fields disagree on the vertex count"));
        }
        let parents = rebuild_parents(&kinds, &counts)?;
        Ok(HatTMinus { kinds, parents, child_counts: counts, right_counts: Vec::new() })
    }
}

fn rebuild_parents(kinds: &[VertexKind], counts: &[u32]) -> Result<Vec<usize>> {
    let mut parents = vec![usize::MAX; kinds.len()];
    let mut stack: Vec<(usize, u32)> = Vec::new();
    let mut last_spine: Option<usize> = None;
    for v in 0..kinds.len() {
        match kinds[v] {
            VertexKind::Spine => {
                if let Some(s) = last_spine {
                    parents[v] = s;
                }
                // Left-bush roots are the first count-1 children; the last is the next spine vertex.
                stack.clear();
                if counts[v] > 1 {
                    stack.push((v, counts[v] - 1));
                }
                last_spine = Some(v);
            }
            VertexKind::Bush => {
                while stack.last().is_some_and(|t| t.1 == 0) {
                    stack.pop();
                }
                let top = stack
                    .last_mut()
                    .ok_or_else(|| Error::validation(format!("bush vertex {v} has no open parent slot")))?;
                parents[v] = top.0;
                top.1 -= 1;
                if counts[v] > 0 {
                    stack.push((v, counts[v]));
                }
            }
        }
    }
    Ok(parents)
}

/// First `m + 1` vertices of the depth-first reading, labelled spine or bush.
pub fn sample_hat_t_minus<R: Rng + ?Sized>(mu: &OffspringDist, split: &SpineSplit, m: usize, rng: &mut R) -> HatTMinus {
    let total = m + 1;
    let mut kinds = Vec::with_capacity(total);
    let mut parents = Vec::with_capacity(total);
    let mut child_counts = Vec::with_capacity(total);
    let mut right_counts = Vec::new();
    // Open bush slots: (vertex, children not yet visited).
    let mut stack: Vec<(usize, u32)> = Vec::new();
    let mut last_spine = usize::MAX;
    while kinds.len() < total {
        let v = kinds.len();
        while stack.last().is_some_and(|t| t.1 == 0) {
            stack.pop();
        }
        if let Some(top) = stack.last_mut() {
            top.1 -= 1;
            parents.push(top.0);
            kinds.push(VertexKind::Bush);
            let c = mu.sample(rng);
            child_counts.push(c);
            if c > 0 {
                stack.push((v, c));
            }
        } else {
            parents.push(last_spine);
            kinds.push(VertexKind::Spine);
            let (left, right) = if v == 0 { (0, 0) } else { split.sample(rng) };
            right_counts.push(right);
            child_counts.push(left + 1);
            if left > 0 {
                stack.push((v, left));
            }
            last_spine = v;
        }
    }
    HatTMinus { kinds, parents, child_counts, right_counts }
}

/// Prefix of the nonnegative-label part of the invariant tree: ∅, then the
/// right tree at ∅ (a Galton–Watson tree rooted at ∅), then the right
/// children of ∅_1 with their subtrees, then those of ∅_2, and so on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TPlus {
    /// Index of the spine vertex ∅_a whose right tree contains the vertex.
    blocks: Vec<u32>,
    /// Parent within the prefix; `None` when the parent is the spine vertex
    /// itself (or for ∅).
    parents: Vec<Option<usize>>,
    depths: Vec<u32>,
}

impl TPlus {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[u32] {
        &self.blocks
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    /// Distance to the spine vertex of the vertex's block.
    pub fn depths(&self) -> &[u32] {
        &self.depths
    }

    /// Number of spine vertices ∅_1, ∅_2, … whose right trees were opened.
    pub fn spine_len(&self) -> u32 {
        self.blocks.last().copied().unwrap_or(0)
    }

    /// Graph distance in the invariant tree between the i-th and j-th vertices.
    pub fn graph_distance(&self, i: usize, j: usize) -> u64 {
        let (bi, bj) = (self.blocks[i], self.blocks[j]);
        if bi != bj {
            return self.depths[i] as u64 + self.depths[j] as u64 + bi.abs_diff(bj) as u64;
        }
        let (mut u, mut v) = (Some(i), Some(j));
        let (mut du, mut dv) = (self.depths[i], self.depths[j]);
        let mut dist = 0u64;
        while du > dv {
            u = self.parents[u.unwrap()];
            du -= 1;
            dist += 1;
        }
        while dv > du {
            v = self.parents[v.unwrap()];
            dv -= 1;
            dist += 1;
        }
        while u != v {
            match (u, v) {
                (Some(a), Some(b)) => {
                    u = self.parents[a];
                    v = self.parents[b];
                    dist += 2;
                }
                // Both reached the block's spine vertex.
                _ => break,
            }
        }
        dist
    }
}

pub fn sample_t_plus<R: Rng + ?Sized>(mu: &OffspringDist, split: &SpineSplit, n: usize, rng: &mut R) -> TPlus {
    let total = n + 1;
    let mut blocks = Vec::with_capacity(total);
    let mut parents = Vec::with_capacity(total);
    let mut depths: Vec<u32> = Vec::with_capacity(total);
    blocks.push(0);
    parents.push(None);
    depths.push(0);
    let mut stack: Vec<(Option<usize>, u32, u32)> = Vec::new();
    let c0 = mu.sample(rng);
    if c0 > 0 {
        stack.push((Some(0), 0, c0));
    }
    let mut block = 0u32;
    while blocks.len() < total {
        while stack.last().is_some_and(|t| t.2 == 0) {
            stack.pop();
        }
        let Some(top) = stack.last_mut() else {
            block += 1;
            let (_, right) = split.sample(rng);
            if right > 0 {
                stack.push((None, 0, right));
            }
            continue;
        };
        top.2 -= 1;
        let (parent, pdepth) = (top.0, top.1);
        let v = blocks.len();
        blocks.push(block);
        parents.push(parent);
        depths.push(pdepth + 1);
        let c = mu.sample(rng);
        if c > 0 {
            stack.push((Some(v), pdepth + 1, c));
        }
    }
    TPlus { blocks, parents, depths }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn first_two_vertices_are_spine() {
        let mu = OffspringDist::binary();
        let split = SpineSplit::new(&mu);
        let mut rng = seeded(1, "hat");
        for _ in 0..50 {
            let h = sample_hat_t_minus(&mu, &split, 20, &mut rng);
            assert_eq!(h.len(), 21);
            assert_eq!(h.kinds()[0], VertexKind::Spine);
            assert_eq!(h.kinds()[1], VertexKind::Spine);
            assert_eq!(h.parents()[1], 0);
            assert_eq!(h.child_counts()[0], 1);
            let back = HatTMinus::parse(&h.serialize()).unwrap();
            assert_eq!(back.parents(), h.parents());
            assert_eq!(back.kinds(), h.kinds());
        }
    }

    #[test]
    fn binary_split_has_one_grafted_child() {
        let mu = OffspringDist::binary();
        let split = SpineSplit::new(&mu);
        let mut rng = seeded(2, "split");
        let mut left = 0;
        let n = 20_000;
        for _ in 0..n {
            let (i, j) = split.sample(&mut rng);
            assert_eq!(i + j, 1);
            left += i;
        }
        let f = left as f64 / n as f64;
        assert!((f - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn t_plus_distances() {
        let mu = OffspringDist::geometric(0.5).unwrap();
        let split = SpineSplit::new(&mu);
        let mut rng = seeded(3, "tplus");
        let t = sample_t_plus(&mu, &split, 300, &mut rng);
        assert_eq!(t.len(), 301);
        assert_eq!(t.graph_distance(0, 0), 0);
        for i in 0..t.len() {
            if let Some(p) = t.parents()[i] {
                assert_eq!(t.graph_distance(i, p), 1);
                assert_eq!(t.blocks()[i], t.blocks()[p]);
            }
            assert_eq!(t.graph_distance(0, i), t.depths()[i] as u64 + t.blocks()[i] as u64);
        }
        for (i, j) in [(3usize, 100usize), (50, 250), (10, 11)] {
            assert_eq!(t.graph_distance(i, j), t.graph_distance(j, i));
        }
    }
}
