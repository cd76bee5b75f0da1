use bcaplab::lattice::{LatticeSet, ThetaNorm};
use bcaplab::point::{self, Point};
use proptest::prelude::*;

fn pt(c: &[i32]) -> Point {
    point::from_slice(c)
}

fn brute(points: &[Point], x: &Point) -> f64 {
    points.iter().map(|q| (point::dist_sq(x, q) as f64).sqrt()).fold(f64::INFINITY, f64::min)
}

fn cloud(d: usize, spread: i32) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(prop::collection::vec(-spread..=spread, d), 1..60)
        .prop_map(|v| v.iter().map(|c| pt(c)).collect())
}

proptest! {
    #[test]
    fn min_dist_matches_brute_force(
        pts in cloud(5, 30),
        x in prop::collection::vec(-80i32..=80, 5),
    ) {
        let set = LatticeSet::new(5, pts.iter().copied());
        let x = pt(&x);
        let want = brute(&pts, &x);
        prop_assert_eq!(set.min_dist(&x).unwrap(), want);
        for r in [0.0, 1.0, 3.5, want, want + 0.5] {
            prop_assert_eq!(set.within(&x, r), want <= r);
        }
        prop_assert_eq!(set.contains(&x), want == 0.0);
    }

    #[test]
    fn set_operations(a in cloud(3, 6), b in cloud(3, 6), z in prop::collection::vec(-5i32..=5, 3)) {
        let (sa, sb) = (LatticeSet::new(3, a.iter().copied()), LatticeSet::new(3, b.iter().copied()));
        let u = sa.union(&sb);
        prop_assert!(sa.is_subset(&u) && sb.is_subset(&u));
        prop_assert!(u.len() <= sa.len() + sb.len());
        let z = pt(&z);
        let moved = sa.translate(&z);
        prop_assert_eq!(moved.len(), sa.len());
        for p in sa.points() {
            prop_assert!(moved.contains(&point::add(p, &z)));
        }
        prop_assert!((moved.diameter() - sa.diameter()).abs() < 1e-9);
    }

    #[test]
    fn serialization_round_trips(a in cloud(4, 50)) {
        let s = LatticeSet::new(4, a.iter().copied());
        let (bin, csv) = (LatticeSet::read_binary(&s.to_binary()[..]).unwrap(), LatticeSet::from_csv(&s.to_csv()).unwrap());
        prop_assert_eq!(bin.points(), s.points());
        prop_assert_eq!(csv.points(), s.points());
    }

    #[test]
    fn neighborhood_is_the_within_set(a in cloud(3, 4), r in 0.0f64..2.5) {
        let s = LatticeSet::new(3, a.iter().copied());
        let nb = s.neighborhood(r).unwrap();
        prop_assert!(s.is_subset(&nb));
        for x in -7..=7 {
            for y in -7..=7 {
                for w in -7..=7 {
                    let p = pt(&[x, y, w]);
                    prop_assert_eq!(nb.contains(&p), s.within(&p, r));
                }
            }
        }
    }
}

#[test]
fn ball_is_symmetric_and_round() {
    let b = LatticeSet::ball(5, &pt(&[0; 5]), 3.0);
    for p in b.points() {
        assert!(point::norm2(p) <= 3.0);
        assert!(b.contains(&point::neg(p)));
    }
    assert!(b.contains(&pt(&[3, 0, 0, 0, 0])) && !b.contains(&pt(&[3, 1, 0, 0, 0])));
}

#[test]
fn theta_norm_of_simple_walk() {
    // Covariance (1/d)·I makes |x|_θ = √d·|x|.
    let d = 5;
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        cov[i * d + i] = 0.2;
    }
    let norm = ThetaNorm::new(&cov, d).unwrap();
    let x = pt(&[3, 4, 0, 0, 0]);
    assert!((norm.norm(&x) - 5.0 * 5f64.sqrt()).abs() < 1e-12);
    assert!((norm.det() - 0.2f64.powi(5)).abs() < 1e-15);
}
