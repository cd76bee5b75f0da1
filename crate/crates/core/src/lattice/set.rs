use std::io::{Read, Write};
use std::sync::OnceLock;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::point::{self, Point, MAX_DIM, ORIGIN};

/// Default cap on the cardinality of a computed neighborhood.
pub const DEFAULT_NEIGHBORHOOD_CAP: usize = 50_000_000;

const DENSE_MAX_BITS: u128 = 1 << 30;

#[derive(Clone, Debug)]
enum Membership {
    Dense { lo: Point, ext: [i64; MAX_DIM], bits: Vec<u64> },
    Hashed(FxHashSet<Point>),
}

/// A finite subset of `Z^d`, stored sorted and deduplicated.
#[derive(Debug)]
pub struct LatticeSet {
    d: usize,
    points: Vec<Point>,
    lo: Point,
    hi: Point,
    membership: Membership,
    grid: OnceLock<BucketGrid>,
}

impl Clone for LatticeSet {
    fn clone(&self) -> Self {
        LatticeSet {
            d: self.d,
            points: self.points.clone(),
            lo: self.lo,
            hi: self.hi,
            membership: self.membership.clone(),
            grid: OnceLock::new(),
        }
    }
}

impl PartialEq for LatticeSet {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.points == other.points
    }
}

impl LatticeSet {
    pub fn new(d: usize, points: impl IntoIterator<Item = Point>) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "dimension {d} unsupported");
        let mut pts: Vec<Point> = points.into_iter().collect();
        for p in &pts {
            debug_assert!(p[d..].iter().all(|&c| c == 0), "coordinates beyond dimension {d}");
        }
        pts.sort_unstable();
        pts.dedup();
        let (mut lo, mut hi) = (ORIGIN, ORIGIN);
        if let Some(first) = pts.first() {
            lo = *first;
            hi = *first;
        }
        for p in &pts {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let membership = Self::build_membership(d, &pts, &lo, &hi);
        LatticeSet { d, points: pts, lo, hi, membership, grid: OnceLock::new() }
    }

    fn build_membership(d: usize, pts: &[Point], lo: &Point, hi: &Point) -> Membership {
        let mut ext = [1i64; MAX_DIM];
        let mut volume: u128 = 1;
        for i in 0..d {
            ext[i] = (hi[i] - lo[i]) as i64 + 1;
            volume = volume.saturating_mul(ext[i] as u128);
        }
        let dense_ok = !pts.is_empty() && volume <= DENSE_MAX_BITS && volume <= 64 * pts.len() as u128 + 4096;
        if dense_ok {
            let mut bits = vec![0u64; (volume as usize).div_ceil(64)];
            for p in pts {
                let idx = dense_index(d, lo, &ext, p).expect("point inside its bounding box");
                bits[idx >> 6] |= 1 << (idx & 63);
            }
            Membership::Dense { lo: *lo, ext, bits }
        } else {
            Membership::Hashed(pts.iter().copied().collect())
        }
    }

    /// Euclidean ball {x : |x - center| ≤ r}.
    pub fn ball(d: usize, center: &Point, r: f64) -> Self {
        let offsets = ball_offsets(d, r);
        LatticeSet::new(d, offsets.iter().map(|z| point::add(center, z)))
    }

    pub fn singleton(d: usize, p: Point) -> Self {
        LatticeSet::new(d, [p])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        (self.lo, self.hi)
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        match &self.membership {
            Membership::Dense { lo, ext, bits } => match dense_index(self.d, lo, ext, p) {
                Some(idx) => bits[idx >> 6] >> (idx & 63) & 1 == 1,
                None => false,
            },
            Membership::Hashed(set) => set.contains(p),
        }
    }

    pub fn translate(&self, z: &Point) -> LatticeSet {
        LatticeSet::new(self.d, self.points.iter().map(|p| point::add(p, z)))
    }

    pub fn union(&self, other: &LatticeSet) -> LatticeSet {
        assert_eq!(self.d, other.d);
        LatticeSet::new(self.d, self.points.iter().chain(other.points.iter()).copied())
    }

    pub fn is_subset(&self, other: &LatticeSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    /// Mean of the points (for centering guards and far points).
    pub fn centroid(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for p in &self.points {
            for i in 0..self.d {
                c[i] += p[i] as f64;
            }
        }
        let n = self.points.len().max(1) as f64;
        for v in c.iter_mut() {
            *v /= n;
        }
        c
    }

    /// Smallest radius of a ball around `center` containing the set.
    pub fn radius_about(&self, center: &[f64; MAX_DIM]) -> f64 {
        self.points
            .iter()
            .map(|p| {
                (0..self.d)
                    .map(|i| (p[i] as f64 - center[i]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Euclidean diameter (exact for small sets, bounding-box diagonal otherwise).
    pub fn diameter(&self) -> f64 {
        if self.points.len() <= 2000 {
            let mut best = 0i64;
            for (i, a) in self.points.iter().enumerate() {
                for b in &self.points[i + 1..] {
                    best = best.max(point::dist_sq(a, b));
                }
            }
            (best as f64).sqrt()
        } else {
            let diag = point::sub(&self.hi, &self.lo);
            point::norm2(&diag)
        }
    }

    /// Points with at least one neighbor `p + z` (z among `steps`) outside the set.
    pub fn boundary(&self, steps: &[Point]) -> Vec<Point> {
        self.points
            .iter()
            .filter(|p| steps.iter().any(|z| !self.contains(&point::add(p, z))))
            .copied()
            .collect()
    }

    /// The bucket grid used for distance queries, built on first use.
    pub fn grid(&self) -> &BucketGrid {
        self.grid.get_or_init(|| {
            let side = default_cell_side(self);
            BucketGrid::new(self, side)
        })
    }

    /// Exact Euclidean distance from `x` to the set.
    pub fn min_dist(&self, x: &Point) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::validation("distance to an empty set"));
        }
        Ok((self.grid().min_dist_sq(self, x) as f64).sqrt())
    }

    /// Whether some point of the set lies within distance `r` of `x`.
    pub fn within(&self, x: &Point, r: f64) -> bool {
        if self.is_empty() {
            return false;
        }
        self.grid().any_within_sq(self, x, (r * r + 1e-9 * (1.0 + r * r)).floor() as i64)
    }

    /// Closed r-neighborhood {x : d(x, A) ≤ r}.
    pub fn neighborhood(&self, r: f64) -> Result<LatticeSet> {
        self.neighborhood_capped(r, DEFAULT_NEIGHBORHOOD_CAP)
    }

    pub fn neighborhood_capped(&self, r: f64, cap: usize) -> Result<LatticeSet> {
        if !(r >= 0.0) {
            return Err(Error::validation(format!("neighborhood radius {r} must be nonnegative")));
        }
        let offsets = ball_offsets(self.d, r);
        let projected = (offsets.len() as u128) * (self.points.len() as u128);
        if projected > cap as u128 {
            return Err(Error::Budget(format!(
                "neighborhood of radius {r} could reach {projected} points, above the cap {cap}"
            )));
        }
        // Stamp cell by cell so that repeated offsets from nearby points hit a warm set.
        let side = ((r / 2.0).floor() as i32).max(1);
        let grid = BucketGrid::new(self, side);
        let mut out: FxHashSet<Point> = FxHashSet::default();
        for members in grid.cells.values() {
            for &i in members {
                let p = &self.points[i as usize];
                for z in &offsets {
                    out.insert(point::add(p, z));
                }
            }
        }
        Ok(LatticeSet::new(self.d, out))
    }

    /// Binary layout: d (u32 LE), count (u32 LE), then d·count i32 LE.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.d as u32).to_le_bytes())?;
        w.write_all(&(self.points.len() as u32).to_le_bytes())?;
        for p in &self.points {
            for c in &p[..self.d] {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        let d = u32::from_le_bytes(buf) as usize;
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::validation(format!("stored dimension {d} unsupported")));
        }
        r.read_exact(&mut buf)?;
        let count = u32::from_le_bytes(buf) as usize;
        let mut pts = Vec::with_capacity(count);
        for _ in 0..count {
            let mut p = ORIGIN;
            for c in p.iter_mut().take(d) {
                r.read_exact(&mut buf)?;
                *c = i32::from_le_bytes(buf);
            }
            pts.push(p);
        }
        Ok(LatticeSet::new(d, pts))
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_binary(&mut v).expect("writing to memory");
        v
    }

    /// One comma-separated point per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            let parts: Vec<String> = p[..self.d].iter().map(|c| c.to_string()).collect();
            s.push_str(&parts.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut d = None;
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let coords = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i32>()
                        .map_err(|_| Error::validation(format!("line {}: bad coordinate '{t}'", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            match d {
                None => d = Some(coords.len()),
                Some(dd) if dd != coords.len() => {
                    return Err(Error::validation(format!("line {}: expected {dd} coordinates", lineno + 1)))
                }
                _ => {}
            }
            if coords.len() > MAX_DIM || coords.is_empty() {
                return Err(Error::validation(format!("line {}: unsupported dimension", lineno + 1)));
            }
            pts.push(point::from_slice(&coords));
        }
        let d = d.ok_or_else(|| Error::validation("no points in CSV"))?;
        Ok(LatticeSet::new(d, pts))
    }
}

#[inline]
fn dense_index(d: usize, lo: &Point, ext: &[i64; MAX_DIM], p: &Point) -> Option<usize> {
    let mut idx: i64 = 0;
    for i in 0..d {
        let off = (p[i] - lo[i]) as i64;
        if off < 0 || off >= ext[i] {
            return None;
        }
        idx = idx * ext[i] + off;
    }
    for &c in &p[d..] {
        if c != 0 {
            return None;
        }
    }
    Some(idx as usize)
}

/// All z ∈ Z^d with |z| ≤ r.
pub fn ball_offsets(d: usize, r: f64) -> Vec<Point> {
    let ri = r.floor() as i32;
    let r2 = (r * r + 1e-9).floor() as i64;
    let mut out = Vec::new();
    let mut cur = ORIGIN;
    fn rec(d: usize, i: usize, ri: i32, r2: i64, acc: i64, cur: &mut Point, out: &mut Vec<Point>) {
        if i == d {
            out.push(*cur);
            return;
        }
        for v in -ri..=ri {
            let a = acc + (v as i64) * (v as i64);
            if a <= r2 {
                cur[i] = v;
                rec(d, i + 1, ri, r2, a, cur, out);
            }
        }
        cur[i] = 0;
    }
    rec(d, 0, ri, r2, 0, &mut cur, &mut out);
    out
}

fn default_cell_side(set: &LatticeSet) -> i32 {
    // Aim for a handful of points per occupied cell.
    let n = set.len().max(1) as f64;
    let diag = point::norm2(&point::sub(&set.hi, &set.lo)).max(1.0);
    ((diag / n.sqrt()).ceil() as i32).clamp(1, 64).max(((n.powf(0.25)) as i32).min(8))
}

/// Points of a set grouped by the cube of side `side` containing them.
#[derive(Clone, Debug)]
pub struct BucketGrid {
    d: usize,
    side: i32,
    cells: FxHashMap<Point, Vec<u32>>,
    cell_lo: Point,
    cell_hi: Point,
}

impl BucketGrid {
    pub fn new(set: &LatticeSet, side: i32) -> Self {
        assert!(side >= 1);
        let d = set.d;
        let mut cells: FxHashMap<Point, Vec<u32>> = FxHashMap::default();
        for (i, p) in set.points.iter().enumerate() {
            cells.entry(cell_of(d, p, side)).or_default().push(i as u32);
        }
        let cell_lo = cell_of(d, &set.lo, side);
        let cell_hi = cell_of(d, &set.hi, side);
        BucketGrid { d, side, cells, cell_lo, cell_hi }
    }

    pub fn side(&self) -> i32 {
        self.side
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, p: &Point) -> Point {
        cell_of(self.d, p, self.side)
    }

    pub fn contains_cell(&self, c: &Point) -> bool {
        self.cells.contains_key(c)
    }

    /// Visit cells at Chebyshev distance exactly `ring` from `center`,
    /// clipped to the occupied cell box.
    fn for_ring(&self, center: &Point, ring: i32, mut f: impl FnMut(&[u32]) -> bool) -> bool {
        let d = self.d;
        let mut lo = ORIGIN;
        let mut hi = ORIGIN;
        for i in 0..d {
            lo[i] = (center[i] - ring).max(self.cell_lo[i]);
            hi[i] = (center[i] + ring).min(self.cell_hi[i]);
            if lo[i] > hi[i] {
                return false;
            }
        }
        let mut c = lo;
        loop {
            let on_ring = ring == 0 || (0..d).any(|i| (c[i] - center[i]).abs() == ring);
            if on_ring {
                if let Some(members) = self.cells.get(&c) {
                    if f(members) {
                        return true;
                    }
                }
            }
            // Advance the innermost coordinate, jumping across the cube interior.
            let others_interior = ring > 0 && (1..d).all(|j| (c[j] - center[j]).abs() < ring);
            let next0 = if others_interior && c[0] < center[0] + ring {
                (c[0] + 1).max(center[0] + ring)
            } else {
                c[0] + 1
            };
            if next0 <= hi[0] {
                c[0] = next0;
                continue;
            }
            c[0] = lo[0];
            let mut i = 1;
            loop {
                if i >= d {
                    return false;
                }
                if c[i] < hi[i] {
                    c[i] += 1;
                    break;
                }
                c[i] = lo[i];
                i += 1;
            }
        }
    }

    fn min_dist_sq(&self, set: &LatticeSet, x: &Point) -> i64 {
        let center = self.cell(x);
        let mut best = i64::MAX;
        let mut max_ring = 0;
        for i in 0..self.d {
            max_ring = max_ring
                .max((center[i] - self.cell_lo[i]).abs())
                .max((center[i] - self.cell_hi[i]).abs());
        }
        for ring in 0..=max_ring {
            // Once the searched cube holds more cells than the set has points, a scan is cheaper.
            let cube = (2 * ring as u64 + 1).saturating_pow(self.d as u32);
            if cube > 4 * set.len() as u64 {
                return set.points.iter().map(|p| point::dist_sq(p, x)).min().unwrap();
            }
            self.for_ring(&center, ring, |members| {
                for &m in members {
                    best = best.min(point::dist_sq(&set.points[m as usize], x));
                }
                false
            });
            if best != i64::MAX {
                let reach = ring as i64 * self.side as i64;
                if best <= reach * reach {
                    return best;
                }
            }
        }
        best
    }

    fn any_within_sq(&self, set: &LatticeSet, x: &Point, r2: i64) -> bool {
        let center = self.cell(x);
        let reach = ((r2 as f64).sqrt() / self.side as f64).ceil() as i32 + 1;
        for ring in 0..=reach {
            let hit = self.for_ring(&center, ring, |members| {
                members.iter().any(|&m| point::dist_sq(&set.points[m as usize], x) <= r2)
            });
            if hit {
                return true;
            }
        }
        false
    }
}

#[inline]
fn cell_of(d: usize, p: &Point, side: i32) -> Point {
    let mut c = ORIGIN;
    for i in 0..d {
        c[i] = p[i].div_euclid(side);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::from_slice;
    use crate::rng::seeded;
    use rand::Rng;

    fn random_set(d: usize, n: usize, spread: i32, seed: u64) -> LatticeSet {
        let mut rng = seeded(seed, "set");
        let pts: Vec<Point> = (0..n)
            .map(|_| {
                let c: Vec<i32> = (0..d).map(|_| rng.random_range(-spread..=spread)).collect();
                from_slice(&c)
            })
            .collect();
        LatticeSet::new(d, pts)
    }

    #[test]
    fn unit_ball_in_five_dims() {
        let b = LatticeSet::ball(5, &ORIGIN, 1.0);
        assert_eq!(b.len(), 11);
        let n = LatticeSet::singleton(5, ORIGIN).neighborhood(1.0).unwrap();
        assert_eq!(n, b);
        let a = random_set(3, 40, 10, 1);
        assert_eq!(a.neighborhood(0.0).unwrap(), a);
    }

    #[test]
    fn distances() {
        let a = LatticeSet::singleton(5, ORIGIN);
        assert_eq!(a.min_dist(&from_slice(&[3, 4, 0, 0, 0])).unwrap(), 5.0);
        assert_eq!(a.min_dist(&ORIGIN).unwrap(), 0.0);
        let empty = LatticeSet::new(5, Vec::<Point>::new());
        assert!(empty.min_dist(&ORIGIN).is_err());
    }

    #[test]
    fn min_dist_matches_scan() {
        let mut rng = seeded(9, "probe");
        for (d, n, spread) in [(2usize, 50usize, 30i32), (5, 300, 12), (5, 3000, 40), (3, 1, 5)] {
            let a = random_set(d, n, spread, d as u64 * 7 + n as u64);
            for _ in 0..300 {
                let c: Vec<i32> = (0..d).map(|_| rng.random_range(-3 * spread..=3 * spread)).collect();
                let x = from_slice(&c);
                let brute = a.points().iter().map(|p| point::dist_sq(p, &x)).min().unwrap();
                let got = a.min_dist(&x).unwrap();
                assert!((got - (brute as f64).sqrt()).abs() < 1e-12, "d={d} n={n}");
                let r = (brute as f64).sqrt();
                assert!(a.within(&x, r));
                if brute > 0 {
                    assert!(!a.within(&x, r - 0.01));
                }
            }
        }
    }

    #[test]
    fn membership_dense_and_hashed() {
        let dense = random_set(3, 500, 6, 3);
        let sparse = random_set(5, 50, 1000, 4);
        let mut rng = seeded(5, "memb");
        for s in [&dense, &sparse] {
            for p in s.points() {
                assert!(s.contains(p));
            }
            for _ in 0..1000 {
                let c: Vec<i32> = (0..s.dim()).map(|_| rng.random_range(-8..=8)).collect();
                let x = from_slice(&c);
                assert_eq!(s.contains(&x), s.points().contains(&x));
            }
        }
    }

    #[test]
    fn serialization_round_trips() {
        let a = random_set(4, 100, 20, 6);
        let back = LatticeSet::read_binary(&a.to_binary()[..]).unwrap();
        assert_eq!(back, a);
        assert_eq!(LatticeSet::from_csv(&a.to_csv()).unwrap(), a);
    }

    #[test]
    fn neighborhood_cap() {
        let a = random_set(5, 100, 20, 7);
        assert!(matches!(a.neighborhood_capped(3.0, 1000), Err(Error::Budget(_))));
    }

    #[test]
    fn boundary_of_ball() {
        let s = crate::distributions::StepDist::srw(3, 0.0).unwrap();
        let b = LatticeSet::ball(3, &ORIGIN, 2.0);
        let bd = b.boundary(s.steps());
        assert!(!bd.contains(&ORIGIN));
        assert!(bd.contains(&from_slice(&[2, 0, 0])));
    }
}
