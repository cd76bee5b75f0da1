//! Fixed-capacity lattice points. Coordinates beyond the active dimension are zero.

pub const MAX_DIM: usize = 8;

pub type Point = [i32; MAX_DIM];

pub const ORIGIN: Point = [0; MAX_DIM];

pub fn from_slice(coords: &[i32]) -> Point {
    assert!(coords.len() <= MAX_DIM, "dimension {} exceeds {MAX_DIM}", coords.len());
    let mut p = ORIGIN;
    p[..coords.len()].copy_from_slice(coords);
    p
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    let mut out = *a;
    for i in 0..MAX_DIM {
        out[i] += b[i];
    }
    out
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    let mut out = *a;
    for i in 0..MAX_DIM {
        out[i] -= b[i];
    }
    out
}

#[inline]
pub fn neg(a: &Point) -> Point {
    let mut out = *a;
    for v in out.iter_mut() {
        *v = -*v;
    }
    out
}

#[inline]
pub fn norm2_sq(a: &Point) -> i64 {
    a.iter().map(|&v| (v as i64) * (v as i64)).sum()
}

#[inline]
pub fn norm2(a: &Point) -> f64 {
    (norm2_sq(a) as f64).sqrt()
}

#[inline]
pub fn dist_sq(a: &Point, b: &Point) -> i64 {
    let mut s = 0i64;
    for i in 0..MAX_DIM {
        let t = (a[i] - b[i]) as i64;
        s += t * t;
    }
    s
}

pub fn scale(a: &Point, s: i32) -> Point {
    let mut out = *a;
    for v in out.iter_mut() {
        *v *= s;
    }
    out
}

pub fn format(p: &Point, d: usize) -> String {
    let parts: Vec<String> = p[..d].iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(","))
}
