//! Exact (enumeration-based) checks of the size and prefix identities that
//! relate conditioned trees to Lukasiewicz walks.

use std::collections::HashMap;

use crate::distributions::{OffspringDist, Pmf};
use crate::error::{Error, Result};

const ENUMERATION_CAP: f64 = 2e7;

/// Law of Y_n, the n-step Lukasiewicz walk.
pub fn exact_walk_law(mu: &OffspringDist, n: usize) -> Pmf {
    mu.lukasiewicz_step().convolution_power(n)
}

/// Φ_{m,k}(ℓ) = m·P(Y_{m-k} = -(ℓ+1)) / ((m-k)·P(Y_m = -1)).
pub fn phi_weight(mu: &OffspringDist, m: usize, k: usize, ell: i64) -> Result<f64> {
    if k >= m {
        return Err(Error::validation(format!("prefix length {k} must be below the tree size {m}")));
    }
    let denom = exact_walk_law(mu, m).prob(-1);
    if denom <= 0.0 {
        return Err(Error::numerical(format!(
            "P(Y_{m} = -1) = 0: size {m} is unreachable (period {})",
            mu.period()
        )));
    }
    let num = exact_walk_law(mu, m - k).prob(-(ell + 1));
    Ok(m as f64 * num / ((m - k) as f64 * denom))
}

fn support(mu: &OffspringDist) -> Result<Vec<u32>> {
    if mu.is_truncated() {
        return Err(Error::validation("exhaustive identities need a finitely supported offspring law"));
    }
    Ok(mu.law().iter().filter(|&(_, p)| p > 0.0).map(|(k, _)| k as u32).collect())
}

/// Calls `f` on every sequence of length `len` over `alphabet`.
fn for_each_word(alphabet: &[u32], len: usize, mut f: impl FnMut(&[u32])) -> Result<()> {
    if (alphabet.len() as f64).powi(len as i32) > ENUMERATION_CAP {
        return Err(Error::validation(format!(
            "enumeration of {}^{len} words exceeds the cap",
            alphabet.len()
        )));
    }
    let mut idx = vec![0usize; len];
    let mut word: Vec<u32> = vec![alphabet[0]; len];
    loop {
        f(&word);
        let mut pos = 0;
        loop {
            if pos == len {
                return Ok(());
            }
            idx[pos] += 1;
            if idx[pos] < alphabet.len() {
                word[pos] = alphabet[idx[pos]];
                break;
            }
            idx[pos] = 0;
            word[pos] = alphabet[0];
            pos += 1;
        }
    }
}

fn is_excursion(c: &[u32]) -> bool {
    let mut s = 0i64;
    for (i, &ci) in c.iter().enumerate() {
        s += ci as i64 - 1;
        if s < 0 && i + 1 < c.len() {
            return false;
        }
    }
    s == -1
}

fn weight(mu: &OffspringDist, c: &[u32]) -> f64 {
    c.iter().map(|&ci| mu.pmf(ci as usize)).product()
}

/// P(#T = n) by summing the weights of all n-vertex trees, next to P(Y_n = -1)/n.
pub fn dwass_enumerated(mu: &OffspringDist, n: usize) -> Result<(f64, f64)> {
    let sup = support(mu)?;
    let mut total = 0.0;
    for_each_word(&sup, n, |c| {
        if is_excursion(c) {
            total += weight(mu, c);
        }
    })?;
    Ok((total, exact_walk_law(mu, n).prob(-1) / n as f64))
}

fn conditioned_prefix_law<K: std::hash::Hash + Eq>(
    mu: &OffspringDist,
    m: usize,
    key: impl Fn(&[u32]) -> K,
) -> Result<HashMap<K, f64>> {
    let sup = support(mu)?;
    let mut law: HashMap<K, f64> = HashMap::new();
    let mut z = 0.0;
    for_each_word(&sup, m, |c| {
        if is_excursion(c) {
            let w = weight(mu, c);
            z += w;
            *law.entry(key(c)).or_insert(0.0) += w;
        }
    })?;
    if z == 0.0 {
        return Err(Error::numerical(format!("no tree of size {m} (period {})", mu.period())));
    }
    for v in law.values_mut() {
        *v /= z;
    }
    Ok(law)
}

fn max_gap<K: std::hash::Hash + Eq>(a: &HashMap<K, f64>, b: &HashMap<K, f64>) -> f64 {
    let mut gap: f64 = 0.0;
    for (k, v) in a {
        gap = gap.max((v - b.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, v) in b {
        if !a.contains_key(k) {
            gap = gap.max(v.abs());
        }
    }
    gap
}

/// Largest absolute difference, over prefixes `(c_0..c_{k-1})`, between the
/// law of the first k child counts of a tree conditioned to have m vertices
/// and the size-biased walk form
/// `Π μ(c_i) · (Y_k + 1) · 1{Y_j ≥ 0, j ≤ k} · Φ_{m,k}(Y_k)`.
pub fn kesten_prefix_discrepancy(mu: &OffspringDist, m: usize, k: usize) -> Result<f64> {
    if k == 0 || k >= m {
        return Err(Error::validation("need 1 ≤ k < m"));
    }
    let lhs = conditioned_prefix_law(mu, m, |c| c[..k].to_vec())?;
    let sup = support(mu)?;
    let mut rhs: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut failure = None;
    for_each_word(&sup, k, |c| {
        let mut y = 0i64;
        for &ci in c {
            y += ci as i64 - 1;
            if y < 0 {
                return;
            }
        }
        match phi_weight(mu, m, k, y) {
            Ok(phi) => {
                let w = weight(mu, c) * (y + 1) as f64 * phi;
                if w != 0.0 {
                    rhs.insert(c.to_vec(), w);
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(max_gap(&lhs, &rhs))
}

fn canonical_rooted(adj: &[Vec<usize>], v: usize, parent: usize) -> String {
    let mut parts: Vec<String> = adj[v]
        .iter()
        .filter(|&&u| u != parent)
        .map(|&u| canonical_rooted(adj, u, v))
        .collect();
    parts.sort();
    format!("({})", parts.concat())
}

fn canonical_free(edges: &[(usize, usize)], n: usize) -> String {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n).map(|r| canonical_rooted(&adj, r, usize::MAX)).min().unwrap()
}

fn prefix_edges(c: &[u32], k: usize) -> Vec<(usize, usize)> {
    let mut stack: Vec<(usize, u32)> = vec![(0, c[0])];
    let mut edges = Vec::new();
    for v in 1..=k {
        while stack.last().is_some_and(|t| t.1 == 0) {
            stack.pop();
        }
        let top = stack.last_mut().expect("prefix of a valid tree");
        top.1 -= 1;
        edges.push((top.0, v));
        stack.push((v, c[v]));
    }
    edges
}

/// Diagnostic: the same comparison done on unlabelled tree shapes using the
/// depth-first reading of the invariant tree and its own Lukasiewicz values
/// (μ̃ counts at spine vertices). This reading does not satisfy the identity
/// beyond k = 0; the returned gap quantifies by how much.
pub fn literal_prefix_discrepancy(mu: &OffspringDist, m: usize, k: usize) -> Result<f64> {
    if k >= m {
        return Err(Error::validation("need k < m"));
    }
    let lhs = conditioned_prefix_law(mu, m, |c| canonical_free(&prefix_edges(c, k), k + 1))?;
    let tilt = mu.adjoint()?;
    let mut rhs: HashMap<String, f64> = HashMap::new();
    struct Frame {
        edges: Vec<(usize, usize)>,
        stack: Vec<(usize, u32)>,
        spine_last: usize,
        ell: i64,
        p: f64,
    }
    let mut work = vec![Frame { edges: Vec::new(), stack: Vec::new(), spine_last: 0, ell: -1, p: 1.0 }];
    let max_c = mu.max_support() as u32;
    while let Some(f) = work.pop() {
        let v = f.edges.len() + 1;
        if v == k + 1 || k == 0 {
            let phi = phi_weight(mu, m, k, if k == 0 { 0 } else { f.ell })?;
            *rhs.entry(canonical_free(&f.edges, k + 1)).or_insert(0.0) += f.p * phi;
            continue;
        }
        let mut stack = f.stack.clone();
        while stack.last().is_some_and(|t| t.1 == 0) {
            stack.pop();
        }
        let (parent, spine) = match stack.last_mut() {
            Some(top) => {
                top.1 -= 1;
                (top.0, false)
            }
            None => (f.spine_last, true),
        };
        let mut edges = f.edges.clone();
        edges.push((parent, v));
        if v == k {
            work.push(Frame { edges, stack, spine_last: f.spine_last, ell: f.ell, p: f.p });
            continue;
        }
        for c in 0..=max_c {
            let q = if spine { tilt.prob(c as i64) } else { mu.pmf(c as usize) };
            if q == 0.0 {
                continue;
            }
            let mut st = stack.clone();
            st.push((v, c));
            work.push(Frame {
                edges: edges.clone(),
                stack: st,
                spine_last: if spine { v } else { f.spine_last },
                ell: f.ell + c as i64 - 1,
                p: f.p * q,
            });
        }
    }
    Ok(max_gap(&lhs, &rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_at_root_is_one() {
        let mu = OffspringDist::binary();
        for m in [3usize, 5, 7] {
            assert!((phi_weight(&mu, m, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn phi_parity_error() {
        let mu = OffspringDist::binary();
        let e = phi_weight(&mu, 4, 2, 0).unwrap_err();
        assert!(e.to_string().contains("period 2"), "{e}");
    }

    #[test]
    fn dwass_binary_three() {
        let (a, b) = dwass_enumerated(&OffspringDist::binary(), 3).unwrap();
        assert!((a - 0.125).abs() < 1e-15);
        assert!((b - 0.125).abs() < 1e-15);
    }

    #[test]
    fn word_enumeration_counts() {
        let mut n = 0;
        for_each_word(&[0, 2], 5, |_| n += 1).unwrap();
        assert_eq!(n, 32);
    }

    #[test]
    fn kesten_form_small_case() {
        let mu = OffspringDist::binary();
        assert!(kesten_prefix_discrepancy(&mu, 5, 2).unwrap() < 1e-12);
    }

    #[test]
    fn literal_form_matches_at_k_zero_only() {
        let mu = OffspringDist::binary();
        assert!(literal_prefix_discrepancy(&mu, 5, 0).unwrap() < 1e-12);
        assert!(literal_prefix_discrepancy(&mu, 5, 1).unwrap() > 1e-3);
    }
}
