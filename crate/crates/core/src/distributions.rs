//! Offspring laws on the nonnegative integers and step laws on `Z^d`.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::point::{self, Point, MAX_DIM, ORIGIN};

/// Absolute tolerance for validating probabilities and moments.
pub const PROB_TOL: f64 = 1e-12;
/// Parametric infinite-support laws are cut where the remaining tail mass drops below this.
pub const TAIL_CUTOFF: f64 = 1e-14;

/// O(1) sampler over a finite list of weights.
#[derive(Clone)]
pub struct AliasTable {
    alias: WeightedAliasIndex<f64>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let alias = WeightedAliasIndex::new(weights.to_vec())
            .map_err(|e| Error::validation(format!("bad weight table: {e}")))?;
        Ok(AliasTable { alias })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }
}

impl fmt::Debug for AliasTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AliasTable")
    }
}

/// A probability mass function on `offset, offset+1, …, offset+len-1`.
#[derive(Clone, Debug)]
pub struct Pmf {
    offset: i64,
    probs: Vec<f64>,
    sampler: AliasTable,
}

impl Pmf {
    pub fn new(offset: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation("empty pmf"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::validation(format!("probability {p} is not a nonnegative number")));
        }
        let sampler = AliasTable::new(&probs)?;
        Ok(Pmf { offset, probs, sampler })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_value(&self) -> i64 {
        self.offset
    }

    pub fn max_value(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    pub fn prob(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i >= self.probs.len() as i64 {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.iter().map(|(k, p)| (k as f64 - m).powi(2) * p).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.offset + i as i64, p))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.offset + self.sampler.sample(rng) as i64
    }

    /// Law of the sum of `n` independent copies, by repeated convolution.
    pub fn convolution_power(&self, n: usize) -> Pmf {
        let mut acc = vec![1.0];
        let mut off = 0i64;
        for _ in 0..n {
            let mut next = vec![0.0; acc.len() + self.probs.len() - 1];
            for (i, &a) in acc.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in self.probs.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            acc = next;
            off += self.offset;
        }
        let sampler = AliasTable::new(&acc).expect("convolution of a valid pmf");
        Pmf { offset: off, probs: acc, sampler }
    }
}

/// How an offspring law was specified; kept for reporting and config round-trips.
#[derive(Clone, Debug, PartialEq)]
pub enum OffspringSpec {
    Binary,
    Geometric(f64),
    Poisson,
    Table(Vec<f64>),
}

impl fmt::Display for OffspringSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffspringSpec::Binary => write!(f, "binary"),
            OffspringSpec::Geometric(p) => write!(f, "geometric({p})"),
            OffspringSpec::Poisson => write!(f, "poisson"),
            OffspringSpec::Table(t) => {
                let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                write!(f, "table([{}])", parts.join(","))
            }
        }
    }
}

/// Critical offspring law μ with finite variance σ².
#[derive(Clone, Debug)]
pub struct OffspringDist {
    spec: OffspringSpec,
    law: Pmf,
    sigma2: f64,
    /// Probability mass beyond the stored support (zero for finite tables).
    tail_mass: f64,
    truncated: bool,
}

impl OffspringDist {
    pub fn binary() -> Self {
        Self::from_probs(OffspringSpec::Binary, vec![0.5, 0.0, 0.5], 0.0, false)
            .expect("binary law is valid")
    }

    /// Geometric law μ(k) = p(1-p)^k; critical only for p = 1/2.
    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::validation(format!("geometric parameter {p} outside (0,1)")));
        }
        let mut probs = Vec::new();
        let mut tail = 1.0;
        let mut k = 0;
        while tail >= TAIL_CUTOFF {
            let pk = p * (1.0 - p).powi(k);
            probs.push(pk);
            tail = (1.0 - p).powi(k + 1);
            k += 1;
        }
        Self::from_probs(OffspringSpec::Geometric(p), probs, tail, true)
    }

    /// Poisson(1) law.
    pub fn poisson() -> Result<Self> {
        let mut probs = Vec::new();
        let mut pk = (-1.0f64).exp();
        let mut cum = 0.0;
        let mut k = 0u32;
        loop {
            probs.push(pk);
            cum += pk;
            k += 1;
            pk /= k as f64;
            // Tail bound: Σ_{j≥k} e^{-1}/j! ≤ 2 e^{-1}/k!.
            if 2.0 * pk < TAIL_CUTOFF {
                break;
            }
        }
        let tail = (1.0 - cum).max(0.0);
        Self::from_probs(OffspringSpec::Poisson, probs, tail, true)
    }

    pub fn table(probs: Vec<f64>) -> Result<Self> {
        Self::from_probs(OffspringSpec::Table(probs.clone()), probs, 0.0, false)
    }

    fn from_probs(spec: OffspringSpec, mut probs: Vec<f64>, tail_mass: f64, truncated: bool) -> Result<Self> {
        while probs.len() > 1 && *probs.last().unwrap() == 0.0 {
            probs.pop();
        }
        let law = Pmf::new(0, probs)?;
        let total = law.total() + tail_mass;
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::validation(format!("offspring probabilities sum to {total}, not 1")));
        }
        let mean = law.mean();
        if (mean - 1.0).abs() > PROB_TOL {
            return Err(Error::validation(format!("offspring mean {mean} is not 1 (law must be critical)")));
        }
        if law.prob(1) >= 1.0 - PROB_TOL {
            return Err(Error::validation("degenerate offspring law μ(1) = 1"));
        }
        let second: f64 = law.iter().map(|(k, p)| (k * k) as f64 * p).sum();
        let sigma2 = second - 1.0;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::validation(format!("offspring variance {sigma2} not in (0,∞)")));
        }
        Ok(OffspringDist { spec, law, sigma2, tail_mass, truncated })
    }

    pub fn spec(&self) -> &OffspringSpec {
        &self.spec
    }

    pub fn law(&self) -> &Pmf {
        &self.law
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.law.prob(k as i64)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Largest stored offspring count.
    pub fn max_support(&self) -> usize {
        self.law.max_value() as usize
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.law.sample(rng) as u32
    }

    /// gcd of the support; a tree of size n exists only when n ≡ 1 mod the period.
    pub fn period(&self) -> usize {
        self.law
            .iter()
            .filter(|&(k, p)| p > 0.0 && k > 0)
            .fold(0usize, |g, (k, _)| gcd(g, k as usize))
            .max(1)
    }

    /// Tail tilt μ̃(k) = Σ_{j>k} μ(j), the root law of the adjoint tree.
    pub fn adjoint(&self) -> Result<Pmf> {
        if self.tail_mass > PROB_TOL {
            return Err(Error::numerical(format!(
                "tail mass {} beyond the stored support prevents evaluating tail sums to {PROB_TOL}",
                self.tail_mass
            )));
        }
        let p = self.law.probs();
        let mut tilt = vec![0.0; p.len().max(2) - 1];
        let mut acc = self.tail_mass;
        for k in (0..tilt.len()).rev() {
            acc += p[k + 1];
            tilt[k] = acc;
        }
        let total: f64 = tilt.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::numerical(format!("adjoint law sums to {total}")));
        }
        Pmf::new(0, tilt)
    }

    /// Step law of the Lukasiewicz walk: P(Y₁ = i) = μ(i+1), i ≥ -1.
    pub fn lukasiewicz_step(&self) -> Pmf {
        Pmf::new(-1, self.law.probs().to_vec()).expect("valid offspring law")
    }

    /// Joint law of the (left, right) child split at a spine vertex:
    /// P(i, j) = μ(i+j+1). Returned as parallel vectors of pairs and weights.
    pub fn spine_split(&self) -> (Vec<(u32, u32)>, Vec<f64>) {
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        for (k, p) in self.law.iter() {
            if k == 0 || p == 0.0 {
                continue;
            }
            for i in 0..k {
                pairs.push((i as u32, (k - 1 - i) as u32));
                weights.push(p);
            }
        }
        (pairs, weights)
    }

    /// Exact P(#T = n) by the hitting-time identity P(#T=n) = P(Y_n = -1)/n.
    pub fn size_probability(&self, n: usize) -> f64 {
        assert!(n >= 1);
        let law = self.lukasiewicz_step().convolution_power(n);
        law.prob(-1) / n as f64
    }

    /// Checks that a tree with `n` vertices has positive probability.
    pub fn check_size_reachable(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::validation("tree size must be at least 1"));
        }
        let g = self.period();
        if (n - 1) % g != 0 {
            return Err(Error::validation(format!("size {n} unreachable (period {g})")));
        }
        // n-1 must be a sum of at most n positive support values.
        let target = n - 1;
        if target == 0 {
            return Ok(());
        }
        if target > 4_000_000 {
            return Ok(());
        }
        let parts: Vec<usize> = self
            .law
            .iter()
            .filter(|&(k, p)| k > 0 && p > 0.0)
            .map(|(k, _)| k as usize)
            .collect();
        let mut best = vec![u32::MAX; target + 1];
        best[0] = 0;
        for v in 1..=target {
            for &k in &parts {
                if k <= v && best[v - k] != u32::MAX {
                    best[v] = best[v].min(best[v - k] + 1);
                }
            }
        }
        if best[target] as usize <= n {
            Ok(())
        } else {
            Err(Error::validation(format!("size {n} unreachable under the offspring support")))
        }
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Parses `binary`, `geometric(p)`, `poisson`, `poisson(1)`, `table([p0,p1,...])`.
pub fn parse_offspring(spec: &str) -> Result<OffspringDist> {
    let (name, args) = split_call(spec)?;
    match name.as_str() {
        "binary" => Ok(OffspringDist::binary()),
        "geometric" => {
            let p = match args.len() {
                0 => 0.5,
                1 => parse_f64(&args[0])?,
                _ => return Err(Error::validation("geometric takes one parameter")),
            };
            OffspringDist::geometric(p)
        }
        "poisson" => {
            if let Some(a) = args.first() {
                let lambda = parse_f64(a)?;
                if (lambda - 1.0).abs() > PROB_TOL {
                    return Err(Error::validation(format!("poisson({lambda}) is not critical")));
                }
            }
            OffspringDist::poisson()
        }
        "table" => {
            let probs = args.iter().map(|a| parse_f64(a)).collect::<Result<Vec<_>>>()?;
            OffspringDist::table(probs)
        }
        other => Err(Error::validation(format!("unknown offspring law '{other}'"))),
    }
}

/// How a step law was specified.
#[derive(Clone, Debug, PartialEq)]
pub enum StepSpec {
    Srw { d: usize, laziness: f64 },
    Box { d: usize, radius: i32 },
    Table { d: usize, entries: Vec<(Vec<i32>, f64)> },
}

impl fmt::Display for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSpec::Srw { d, laziness } => write!(f, "srw({d},{laziness})"),
            StepSpec::Box { d, radius } => write!(f, "box({d},{radius})"),
            StepSpec::Table { d, entries } => {
                let parts: Vec<String> = entries
                    .iter()
                    .map(|(z, p)| {
                        let c: Vec<String> = z.iter().map(|v| v.to_string()).collect();
                        format!("{}:{}", c.join(" "), p)
                    })
                    .collect();
                write!(f, "table({d};{})", parts.join(";"))
            }
        }
    }
}

/// A finitely supported step law θ on `Z^d`.
#[derive(Clone, Debug)]
pub struct StepDist {
    spec: StepSpec,
    d: usize,
    steps: Vec<Point>,
    probs: Vec<f64>,
    covariance: Vec<f64>,
    symmetric: bool,
    aperiodic: bool,
    max_len: f64,
    sampler: AliasTable,
}

impl StepDist {
    /// Simple random walk with holding probability `laziness`.
    pub fn srw(d: usize, laziness: f64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::validation(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        if !(0.0..1.0).contains(&laziness) {
            return Err(Error::validation(format!("laziness {laziness} outside [0,1)")));
        }
        let mut entries = Vec::new();
        if laziness > 0.0 {
            entries.push((vec![0; d], laziness));
        }
        let q = (1.0 - laziness) / (2 * d) as f64;
        for i in 0..d {
            for s in [1, -1] {
                let mut z = vec![0; d];
                z[i] = s;
                entries.push((z, q));
            }
        }
        Self::build(StepSpec::Srw { d, laziness }, d, entries)
    }

    /// Uniform law on the cube {-r,…,r}^d.
    pub fn box_uniform(d: usize, radius: i32) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::validation(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        if radius < 1 {
            return Err(Error::validation("box radius must be at least 1"));
        }
        let side = (2 * radius + 1) as usize;
        let count = side.pow(d as u32);
        if count > 2_000_000 {
            return Err(Error::validation(format!("box({d},{radius}) has {count} atoms, too many")));
        }
        let p = 1.0 / count as f64;
        let mut entries = Vec::with_capacity(count);
        for idx in 0..count {
            let mut z = vec![0; d];
            let mut r = idx;
            for c in z.iter_mut() {
                *c = (r % side) as i32 - radius;
                r /= side;
            }
            entries.push((z, p));
        }
        Self::build(StepSpec::Box { d, radius }, d, entries)
    }

    pub fn table(d: usize, entries: Vec<(Vec<i32>, f64)>) -> Result<Self> {
        Self::build(StepSpec::Table { d, entries: entries.clone() }, d, entries)
    }

    fn build(spec: StepSpec, d: usize, entries: Vec<(Vec<i32>, f64)>) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::validation(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        let mut merged: HashMap<Point, f64> = HashMap::new();
        let mut order = Vec::new();
        for (z, p) in entries {
            if z.len() != d {
                return Err(Error::validation(format!("step {z:?} does not have dimension {d}")));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::validation(format!("step probability {p} invalid")));
            }
            if p == 0.0 {
                continue;
            }
            let pt = point::from_slice(&z);
            if !merged.contains_key(&pt) {
                order.push(pt);
            }
            *merged.entry(pt).or_insert(0.0) += p;
        }
        let steps = order;
        let probs: Vec<f64> = steps.iter().map(|s| merged[s]).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::validation(format!("step probabilities sum to {total}, not 1")));
        }
        let mut covariance = vec![0.0; d * d];
        for (s, &p) in steps.iter().zip(&probs) {
            for i in 0..d {
                for j in 0..d {
                    covariance[i * d + j] += p * s[i] as f64 * s[j] as f64;
                }
            }
        }
        let symmetric = steps.iter().zip(&probs).all(|(s, &p)| {
            let m = merged.get(&point::neg(s)).copied().unwrap_or(0.0);
            (m - p).abs() <= PROB_TOL
        });
        if !generates_lattice(&steps, d) {
            return Err(Error::validation("step support does not generate Z^d (walk is not irreducible)"));
        }
        let aperiodic = return_time_gcd(&steps, 12) == 1;
        if !aperiodic {
            log::info!("step law {spec} is periodic; lattice-level results assume aperiodicity");
        }
        let max_len = steps.iter().map(point::norm2).fold(0.0, f64::max);
        let sampler = AliasTable::new(&probs)?;
        Ok(StepDist { spec, d, steps, probs, covariance, symmetric, aperiodic, max_len, sampler })
    }

    pub fn spec(&self) -> &StepSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn steps(&self) -> &[Point] {
        &self.steps
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, z: &Point) -> f64 {
        self.steps
            .iter()
            .position(|s| s == z)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    /// Row-major d×d covariance Σ θ(z) z zᵀ.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_aperiodic(&self) -> bool {
        self.aperiodic
    }

    /// Longest Euclidean step length in the support.
    pub fn max_step_len(&self) -> f64 {
        self.max_len
    }

    /// Error unless θ is symmetric, as the branching displacement law must be.
    pub fn require_symmetric(&self) -> Result<()> {
        if self.symmetric {
            Ok(())
        } else {
            Err(Error::validation(format!("step law {} is not symmetric", self.spec)))
        }
    }

    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Point {
        &self.steps[self.sampler.sample(rng)]
    }

    /// Whether θ is invariant under all coordinate permutations and sign changes.
    pub fn is_hyperoctahedral(&self) -> bool {
        let d = self.d;
        let mut classes: HashMap<Vec<i32>, (usize, f64)> = HashMap::new();
        for (s, &p) in self.steps.iter().zip(&self.probs) {
            let c = canonical(&s[..d]);
            let e = classes.entry(c).or_insert((0, p));
            if (e.1 - p).abs() > PROB_TOL {
                return false;
            }
            e.0 += 1;
        }
        classes.iter().all(|(c, (count, _))| *count == orbit_size(c))
    }
}

/// Sorted absolute values: the representative of a point's hyperoctahedral orbit.
pub fn canonical(x: &[i32]) -> Vec<i32> {
    let mut c: Vec<i32> = x.iter().map(|v| v.abs()).collect();
    c.sort_unstable();
    c
}

/// Number of points in the hyperoctahedral orbit of a canonical point.
pub fn orbit_size(c: &[i32]) -> usize {
    let d = c.len();
    let mut size = (1..=d).product::<usize>();
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && c[j] == c[i] {
            j += 1;
        }
        size /= (1..=(j - i)).product::<usize>();
        i = j;
    }
    let nonzero = c.iter().filter(|&&v| v != 0).count();
    size << nonzero
}

/// Integer row reduction: the support generates Z^d iff the echelon form has
/// rank d with unit pivots.
fn generates_lattice(steps: &[Point], d: usize) -> bool {
    let mut rows: Vec<Vec<i64>> = steps.iter().map(|s| s[..d].iter().map(|&v| v as i64).collect()).collect();
    let mut top = 0;
    for col in 0..d {
        loop {
            let mut pivot: Option<usize> = None;
            for r in top..rows.len() {
                if rows[r][col] != 0 && pivot.is_none_or(|p| rows[r][col].abs() < rows[p][col].abs()) {
                    pivot = Some(r);
                }
            }
            let Some(p) = pivot else { return false };
            rows.swap(top, p);
            let mut done = true;
            for r in top + 1..rows.len() {
                if rows[r][col] != 0 {
                    let q = rows[r][col] / rows[top][col];
                    for c in 0..d {
                        rows[r][c] -= q * rows[top][c];
                    }
                    if rows[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rows[top][col].abs() != 1 {
            return false;
        }
        top += 1;
    }
    true
}

/// gcd of the return times n ≤ horizon with P(S_n = 0) > 0, by exact support propagation.
fn return_time_gcd(steps: &[Point], horizon: usize) -> usize {
    if steps.contains(&ORIGIN) {
        return 1;
    }
    let mut g = 0usize;
    let mut frontier: FxHashSet<Point> = FxHashSet::default();
    frontier.insert(ORIGIN);
    for n in 1..=horizon {
        let mut next = FxHashSet::default();
        for x in &frontier {
            for s in steps {
                next.insert(point::add(x, s));
            }
        }
        if next.contains(&ORIGIN) {
            g = gcd(g, n);
            if g == 1 {
                return 1;
            }
        }
        if next.len() > 200_000 {
            break;
        }
        frontier = next;
    }
    if g == 0 {
        // No return observed within the horizon: report as periodic so the warning fires.
        usize::MAX
    } else {
        g
    }
}

/// Parses `srw(d, laziness)`, `srw(d)`, `box(d, radius)`, or
/// `table(d; z1 z2 ...: p; ...)`.
pub fn parse_step(spec: &str) -> Result<StepDist> {
    let s = spec.trim();
    if let Some(rest) = s.strip_prefix("table(") {
        let body = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::validation(format!("unterminated step table '{spec}'")))?;
        let mut parts = body.split(';');
        let d: usize = parts
            .next()
            .ok_or_else(|| Error::validation("table step law needs a dimension"))?
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("bad dimension in '{spec}'")))?;
        let mut entries = Vec::new();
        for part in parts {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (z, p) = part
                .split_once(':')
                .ok_or_else(|| Error::validation(format!("step entry '{part}' needs 'coords: prob'")))?;
            let coords = z
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<i32>().map_err(|_| Error::validation(format!("bad coordinate '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            entries.push((coords, parse_f64(p)?));
        }
        return StepDist::table(d, entries);
    }
    let (name, args) = split_call(s)?;
    match name.as_str() {
        "srw" => {
            let d = parse_usize(args.first().ok_or_else(|| Error::validation("srw needs a dimension"))?)?;
            let lazy = match args.get(1) {
                Some(a) => parse_f64(a)?,
                None => 0.0,
            };
            StepDist::srw(d, lazy)
        }
        "box" => {
            let d = parse_usize(args.first().ok_or_else(|| Error::validation("box needs a dimension"))?)?;
            let r = match args.get(1) {
                Some(a) => parse_usize(a)? as i32,
                None => 1,
            };
            StepDist::box_uniform(d, r)
        }
        other => Err(Error::validation(format!("unknown step law '{other}'"))),
    }
}

/// Splits `name(a, b, [c, d])` into the name and flattened arguments.
fn split_call(spec: &str) -> Result<(String, Vec<String>)> {
    let s = spec.trim();
    match s.find('(') {
        None => Ok((s.to_ascii_lowercase(), Vec::new())),
        Some(i) => {
            let name = s[..i].trim().to_ascii_lowercase();
            let inner = s[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::validation(format!("missing ')' in '{spec}'")))?;
            let args = inner
                .split(|c| c == ',' || c == '[' || c == ']')
                .map(|t| t.trim())
                .filter(|t| !t.is_empty())
                .map(String::from)
                .collect();
            Ok((name, args))
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once('/') {
        let num: f64 = a.trim().parse().map_err(|_| Error::validation(format!("bad number '{s}'")))?;
        let den: f64 = b.trim().parse().map_err(|_| Error::validation(format!("bad number '{s}'")))?;
        return Ok(num / den);
    }
    t.parse().map_err(|_| Error::validation(format!("bad number '{s}'")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::validation(format!("bad integer '{s}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn binary_adjoint_and_steps() {
        let mu = OffspringDist::binary();
        assert_eq!(mu.sigma2(), 1.0);
        let adj = mu.adjoint().unwrap();
        assert_eq!(adj.probs(), &[0.5, 0.5]);
        let y = mu.lukasiewicz_step();
        assert_eq!(y.prob(-1), 0.5);
        assert_eq!(y.prob(0), 0.0);
        assert_eq!(y.prob(1), 0.5);
        assert_eq!(mu.period(), 2);
    }

    #[test]
    fn degenerate_law_rejected() {
        assert!(OffspringDist::table(vec![0.0, 1.0]).is_err());
        assert!(OffspringDist::table(vec![0.3, 0.3, 0.3]).is_err());
        assert!(OffspringDist::geometric(0.4).is_err());
    }

    #[test]
    fn geometric_adjoint_is_itself() {
        let mu = OffspringDist::geometric(0.5).unwrap();
        assert!((mu.sigma2() - 2.0).abs() < 1e-10);
        let adj = mu.adjoint().unwrap();
        for k in 0..=60usize {
            let expect = 0.5f64.powi(k as i32 + 1);
            assert!((adj.prob(k as i64) - expect).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn poisson_steps() {
        let mu = OffspringDist::poisson().unwrap();
        assert!((mu.sigma2() - 1.0).abs() < 1e-10);
        let y = mu.lukasiewicz_step();
        let e = (-1.0f64).exp();
        assert!((y.prob(-1) - e).abs() < 1e-15);
        assert!((y.prob(2) - e / 6.0).abs() < 1e-15);
        assert!(y.mean().abs() < 1e-12);
        assert_eq!(mu.period(), 1);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(parse_offspring("binary").unwrap().spec(), &OffspringSpec::Binary);
        assert!(parse_offspring("geometric(0.5)").is_ok());
        assert!(parse_offspring("poisson").is_ok());
        let t = parse_offspring("table([0.25, 0.5, 0.25])").unwrap();
        assert_eq!(t.pmf(1), 0.5);
        let s = parse_step("srw(5, 0.5)").unwrap();
        assert_eq!(s.dim(), 5);
        assert!(s.is_aperiodic());
        let b = parse_step("box(2,1)").unwrap();
        assert_eq!(b.steps().len(), 9);
        let t = parse_step("table(1; 1: 0.5; -1: 0.5)").unwrap();
        assert_eq!(t.dim(), 1);
        assert!(parse_step("srw(3").is_err());
        for spec in ["srw(5,0.5)", "box(2,1)"] {
            let s = parse_step(spec).unwrap();
            assert_eq!(parse_step(&s.spec().to_string()).unwrap().spec(), s.spec());
        }
    }

    #[test]
    fn srw_covariance_and_flags() {
        let s = StepDist::srw(5, 0.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 0.2 } else { 0.0 };
                assert!((s.covariance()[i * 5 + j] - expect).abs() < 1e-12);
            }
        }
        assert!(s.is_symmetric());
        assert!(!s.is_aperiodic());
        assert!(s.is_hyperoctahedral());
        let lazy = StepDist::srw(5, 0.5).unwrap();
        assert!((lazy.covariance()[0] - 0.1).abs() < 1e-12);
        assert!(lazy.is_aperiodic());
        assert!(StepDist::srw(2, 0.0).is_ok());
    }

    #[test]
    fn irreducibility_check() {
        // Steps ±(1,1), ±(1,-1) generate only the even sublattice.
        let e = vec![(vec![1, 1], 0.25), (vec![-1, -1], 0.25), (vec![1, -1], 0.25), (vec![-1, 1], 0.25)];
        assert!(StepDist::table(2, e).is_err());
        let ok = vec![(vec![1, 0], 0.25), (vec![-1, 0], 0.25), (vec![2, 1], 0.25), (vec![-2, -1], 0.25)];
        let s = StepDist::table(2, ok).unwrap();
        assert!(s.is_symmetric());
        assert!(!s.is_hyperoctahedral());
    }

    #[test]
    fn lukasiewicz_sample_mean() {
        let mu = OffspringDist::geometric(0.5).unwrap();
        let y = mu.lukasiewicz_step();
        let mut rng = seeded(1, "luk");
        let n = 1_000_000;
        let s: i64 = (0..n).map(|_| y.sample(&mut rng)).sum();
        let mean = s as f64 / n as f64;
        assert!(mean.abs() < 4.0 * mu.sigma2().sqrt() / 1000.0, "mean {mean}");
    }

    #[test]
    fn srw_sampled_covariance() {
        let s = StepDist::srw(3, 0.25).unwrap();
        let mut rng = seeded(2, "cov");
        let n = 1_000_000;
        let mut acc = [[0.0f64; 3]; 3];
        for _ in 0..n {
            let z = s.sample(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += (z[i] * z[j]) as f64;
                }
            }
        }
        for i in 0..3 {
            let c = acc[i][i] / n as f64;
            assert!((c - 0.25).abs() < 0.01 * 0.25, "{c}");
            for j in 0..3 {
                if i != j {
                    assert!((acc[i][j] / n as f64).abs() < 0.0025);
                }
            }
        }
    }

    #[test]
    fn size_probabilities_binary() {
        let mu = OffspringDist::binary();
        assert!((mu.size_probability(1) - 0.5).abs() < 1e-15);
        assert!((mu.size_probability(3) - 0.125).abs() < 1e-15);
        assert_eq!(mu.size_probability(4), 0.0);
        let err = mu.check_size_reachable(4).unwrap_err().to_string();
        assert!(err.contains("size 4 unreachable (period 2)"), "{err}");
        assert!(mu.check_size_reachable(7).is_ok());
    }

    #[test]
    fn orbit_sizes() {
        assert_eq!(orbit_size(&[0, 0, 0, 0, 1]), 10);
        assert_eq!(orbit_size(&[0, 0, 0, 0, 0]), 1);
        assert_eq!(orbit_size(&[1, 1]), 4);
        assert_eq!(orbit_size(&[1, 2]), 8);
    }
}
