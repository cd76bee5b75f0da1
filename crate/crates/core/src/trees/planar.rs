use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A rooted plane tree stored as the child counts of its vertices in
/// depth-first order. The Lukasiewicz walk is the partial sums of `c_i - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlanarTree {
    child_counts: Vec<u32>,
}

impl PlanarTree {
    pub fn from_child_counts(child_counts: Vec<u32>) -> Result<Self> {
        validate_excursion(&child_counts)?;
        Ok(PlanarTree { child_counts })
    }

    pub(crate) fn from_child_counts_unchecked(child_counts: Vec<u32>) -> Self {
        debug_assert!(validate_excursion(&child_counts).is_ok());
        PlanarTree { child_counts }
    }

    pub fn single() -> Self {
        PlanarTree { child_counts: vec![0] }
    }

    /// A path with `n` vertices.
    pub fn path(n: usize) -> Self {
        assert!(n >= 1);
        let mut c = vec![1; n];
        c[n - 1] = 0;
        PlanarTree { child_counts: c }
    }

    pub fn len(&self) -> usize {
        self.child_counts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn child_counts(&self) -> &[u32] {
        &self.child_counts
    }

    pub fn into_child_counts(self) -> Vec<u32> {
        self.child_counts
    }

    /// Lukasiewicz path `Y_0 = 0, Y_{k+1} = Y_k + c_k - 1`; ends at -1.
    pub fn encode(&self) -> Vec<i64> {
        let mut path = Vec::with_capacity(self.len() + 1);
        let mut y = 0i64;
        path.push(y);
        for &c in &self.child_counts {
            y += c as i64 - 1;
            path.push(y);
        }
        path
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(path: &[i64]) -> Result<Self> {
        if path.len() < 2 || path[0] != 0 {
            return Err(Error::validation("Lukasiewicz path must start at 0 and have at least one step"));
        }
        let mut counts = Vec::with_capacity(path.len() - 1);
        for w in path.windows(2) {
            let step = w[1] - w[0];
            if step < -1 {
                return Err(Error::validation(format!("Lukasiewicz step {step} below -1")));
            }
            counts.push((step + 1) as u32);
        }
        Self::from_child_counts(counts)
    }

    /// Parent index of every vertex (`usize::MAX` for the root).
    pub fn parents(&self) -> Vec<usize> {
        let n = self.len();
        let mut parents = vec![usize::MAX; n];
        let mut stack: Vec<(usize, u32)> = Vec::new();
        for v in 0..n {
            while let Some(top) = stack.last() {
                if top.1 == 0 {
                    stack.pop();
                } else {
                    break;
                }
            }
            if let Some(top) = stack.last_mut() {
                parents[v] = top.0;
                top.1 -= 1;
            }
            if self.child_counts[v] > 0 {
                stack.push((v, self.child_counts[v]));
            }
        }
        parents
    }

    pub fn depths(&self) -> Vec<u32> {
        let parents = self.parents();
        let mut depth = vec![0u32; self.len()];
        for v in 1..self.len() {
            depth[v] = depth[parents[v]] + 1;
        }
        depth
    }

    pub fn height(&self) -> u32 {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Children lists in left-to-right order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let parents = self.parents();
        let mut ch = vec![Vec::new(); self.len()];
        for v in 1..self.len() {
            ch[parents[v]].push(v);
        }
        ch
    }

    /// Permutation `σ` with `σ(i)` = depth-first index of the i-th vertex in
    /// the reversed depth-first order (children visited right to left).
    pub fn reversed_dfs(&self) -> Vec<usize> {
        let ch = self.children();
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            order.push(v);
            // Pushing left-to-right pops the rightmost child first.
            stack.extend(ch[v].iter().copied());
        }
        order
    }

    /// The mirror image: every vertex's children listed in reverse order.
    /// Its depth-first order is the reversed depth-first order of `self`.
    pub fn mirror(&self) -> PlanarTree {
        let counts = self.reversed_dfs().into_iter().map(|v| self.child_counts[v]).collect();
        PlanarTree { child_counts: counts }
    }

    /// Text form `n;c0,c1,...`.
    pub fn serialize(&self) -> String {
        let parts: Vec<String> = self.child_counts.iter().map(|c| c.to_string()).collect();
        format!("{};{}", self.len(), parts.join(","))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (n, body) = s
            .trim()
            .split_once(';')
            .ok_or_else(|| Error::validation("tree text must look like 'n;c0,c1,...'"))?;
        let n: usize = n.trim().parse().map_err(|_| Error::validation(format!("bad vertex count '{n}'")))?;
        // An optional third field carries X/Y labels; callers that need it use `split`.
        let body = body.split(';').next().unwrap_or("");
        let counts = body
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| Error::validation(format!("bad child count '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        if counts.len() != n {
            return Err(Error::validation(format!("declared {n} vertices but found {}", counts.len())));
        }
        Self::from_child_counts(counts)
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl FromStr for PlanarTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn validate_excursion(c: &[u32]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::validation("a tree has at least one vertex"));
    }
    let mut s = 0i64;
    for (k, &ci) in c.iter().enumerate() {
        s += ci as i64 - 1;
        if s < 0 && k + 1 < c.len() {
            return Err(Error::validation(format!("child counts close the tree early at vertex {k}")));
        }
    }
    if s != -1 {
        return Err(Error::validation(format!("child counts leave {} open slots", s + 1)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_small() {
        let t = PlanarTree::from_child_counts(vec![2, 1, 0, 0]).unwrap();
        assert_eq!(t.encode(), vec![0, 1, 1, 0, -1]);
        assert_eq!(PlanarTree::decode(&t.encode()).unwrap(), t);
        assert!(PlanarTree::from_child_counts(vec![0, 0]).is_err());
        assert!(PlanarTree::from_child_counts(vec![1]).is_err());
    }

    #[test]
    fn parents_and_depths() {
        let t = PlanarTree::from_child_counts(vec![2, 1, 0, 0]).unwrap();
        assert_eq!(t.parents(), vec![usize::MAX, 0, 1, 0]);
        assert_eq!(t.depths(), vec![0, 1, 2, 1]);
        assert_eq!(t.height(), 2);
    }

    #[test]
    fn reversed_orders() {
        assert_eq!(PlanarTree::single().reversed_dfs(), vec![0]);
        assert_eq!(PlanarTree::path(3).reversed_dfs(), vec![0, 1, 2]);
        let cherry = PlanarTree::from_child_counts(vec![2, 0, 0]).unwrap();
        assert_eq!(cherry.reversed_dfs(), vec![0, 2, 1]);
        let t = PlanarTree::from_child_counts(vec![2, 1, 0, 0]).unwrap();
        assert_eq!(t.reversed_dfs(), vec![0, 3, 1, 2]);
        assert_eq!(t.mirror().child_counts(), &[2, 0, 1, 0]);
        assert_eq!(t.mirror().mirror(), t);
    }

    #[test]
    fn text_round_trip() {
        let t = PlanarTree::from_child_counts(vec![3, 0, 1, 0, 0]).unwrap();
        let s = t.serialize();
        assert_eq!(s, "5;3,0,1,0,0");
        assert_eq!(s.parse::<PlanarTree>().unwrap(), t);
        assert_eq!(PlanarTree::parse("3;2,0,0;XYY").unwrap().len(), 3);
        assert!(PlanarTree::parse("4;2,0,0").is_err());
    }
}
