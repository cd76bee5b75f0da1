use bcaplab::capacity::{bcap_escape, newtonian_cap, riesz_cap, CapacityEstimate, EscapeParams, NewtonianParams, RieszParams};
use bcaplab::distributions::{OffspringDist, StepDist};
use bcaplab::lattice::{green_solve, GreenBoundary, LatticeSet};
use bcaplab::point::{self, ORIGIN};
use bcaplab::rng::StreamKey;
use bcaplab::stats::pooled_stderr;
use proptest::prelude::*;

fn srw5() -> StepDist {
    StepDist::srw(5, 0.0).unwrap()
}

fn set(points: &[[i32; 5]]) -> LatticeSet {
    LatticeSet::new(5, points.iter().map(|p| point::from_slice(p)))
}

fn escape(k: &LatticeSet, seed: u64) -> CapacityEstimate {
    let params = EscapeParams { trials: 20_000, levels: 2, ..EscapeParams::default() };
    bcap_escape(k, &OffspringDist::binary(), &srw5(), &params, &StreamKey::new(seed, "escape")).unwrap()
}

#[test]
fn newtonian_capacity_of_a_point() {
    // P_x(hit 0) = g(x)/g(0), so |x|³P_x is known from the Green table.
    let theta = srw5();
    let g = green_solve(&theta, 16, GreenBoundary::FarField).unwrap();
    let params = NewtonianParams {
        far_distances: vec![8.0],
        random_directions: 0,
        trials_per_direction: 40_000,
        guard_factor: 4.0,
        ..NewtonianParams::default()
    };
    let est = newtonian_cap(&LatticeSet::singleton(5, ORIGIN), &theta, &params, &StreamKey::new(1, "newton")).unwrap();
    let x = point::from_slice(&[8, 0, 0, 0, 0]);
    let want = 512.0 * g.eval(&x) / g.eval(&ORIGIN);
    // Killing walks at 4|x| loses about (1/4)^3 of the hits.
    let slack = 4.0 * est.stderr + 0.03 * want;
    assert!((est.value - want).abs() <= slack, "{} ± {} vs {want}", est.value, est.stderr);
}

#[test]
fn branching_capacity_is_monotone_and_subadditive() {
    let point_set = set(&[[0; 5]]);
    let pair = set(&[[0; 5], [1, 0, 0, 0, 0]]);
    let ball = LatticeSet::ball(5, &ORIGIN, 1.0);
    let far_pair = set(&[[0; 5], [20, 0, 0, 0, 0]]);
    let a = escape(&point_set, 1);
    let b = escape(&pair, 2);
    let c = escape(&ball, 3);
    let f = escape(&far_pair, 4);
    assert!(a.value > 0.0);
    assert!(a.value <= b.value + 3.0 * pooled_stderr(a.stderr, b.stderr), "{} vs {}", a.value, b.value);
    assert!(b.value <= c.value + 3.0 * pooled_stderr(b.stderr, c.stderr), "{} vs {}", b.value, c.value);
    let se = pooled_stderr(2.0 * a.stderr, f.stderr);
    assert!(f.value <= 2.0 * a.value + 3.0 * se, "{} vs 2·{}", f.value, a.value);
    assert!(f.value >= a.value - 3.0 * pooled_stderr(a.stderr, f.stderr));
}

#[test]
fn escape_is_translation_invariant_in_law() {
    let k = set(&[[0; 5], [1, 0, 0, 0, 0], [0, 1, 0, 0, 0]]);
    let moved = k.translate(&point::from_slice(&[37, -5, 2, 0, 11]));
    let (a, b) = (escape(&k, 5), escape(&moved, 6));
    assert!((a.value - b.value).abs() <= 3.0 * pooled_stderr(a.stderr, b.stderr), "{} vs {}", a.value, b.value);
}

#[test]
fn segment_energy_grows_like_twice_log_inverse_pitch() {
    // The uniform measure on a unit segment has γ = 1 energy 2·log(1/h) + O(1)
    // once the kernel is cut off at h, so the capacity tends to zero and each
    // halving of the pitch adds 2·log 2 to the minimal energy.
    let energies: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| {
            let h = 1.0 / n as f64;
            let pts: Vec<Vec<f64>> = (0..=n).map(|i| vec![i as f64 * h, 0.0, 0.0, 0.0, 0.0]).collect();
            riesz_cap(&pts, &RieszParams::new(1.0)).unwrap().energy
        })
        .collect();
    let steps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let target = 2.0 * 2f64.ln();
    for w in steps.windows(2) {
        assert!(w[1] < w[0], "{steps:?}");
    }
    for s in &steps {
        assert!((s / target - 1.0).abs() < 0.05, "{steps:?}");
    }
}

/// Points near a unit grid, at least 0.4 apart.
fn jittered(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..0.3, 3), n).prop_map(|jit| {
        jit.iter()
            .enumerate()
            .map(|(i, j)| {
                let c = [i % 4, (i / 4) % 4, i / 16];
                (0..3).map(|a| c[a] as f64 + j[a]).collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frank_wolfe_stays_feasible_and_descends(pts in jittered(30), gamma in 0.3f64..2.5) {
        let params = RieszParams { kappa: Some(8.0), pitch: Some(1.0), ..RieszParams::new(gamma) };
        let sol = riesz_cap(&pts, &params).unwrap();
        prop_assert!(sol.converged);
        prop_assert!(sol.weights.iter().all(|&w| w >= 0.0));
        prop_assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(sol.energy_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(sol.gap < 1e-8);
        prop_assert!((sol.capacity * sol.energy - 1.0).abs() < 1e-12);
        // Uniform weights are feasible, so their energy bounds the minimum.
        let n = pts.len() as f64;
        let mut uniform = 8.0 / n;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    let r: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    uniform += r.powf(-gamma) / (n * n);
                }
            }
        }
        prop_assert!(sol.energy <= uniform * (1.0 + 1e-9));
    }

    #[test]
    fn capacity_grows_with_the_set(pts in jittered(40), split in 5usize..35, gamma in 0.5f64..2.0) {
        let params = RieszParams { kappa: Some(8.0), pitch: Some(1.0), ..RieszParams::new(gamma) };
        let small = riesz_cap(&pts[..split], &params).unwrap();
        let large = riesz_cap(&pts, &params).unwrap();
        prop_assert!(small.capacity <= large.capacity * (1.0 + 1e-7));
    }
}
