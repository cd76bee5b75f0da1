use bcaplab::brw::{realize, TreeWalk};
use bcaplab::distributions::{parse_offspring, parse_step, OffspringDist, StepDist};
use bcaplab::point::ORIGIN;
use bcaplab::rng::seeded;
use bcaplab::trees::sample_gw_conditioned;
use proptest::prelude::*;

/// Critical laws on {0,1,2,3}: p2 = a, p3 = b force p0 = a + 2b, p1 = 1 - 2a - 3b.
fn critical_table() -> impl Strategy<Value = OffspringDist> {
    (0.01f64..0.3, 0.0f64..0.1).prop_map(|(a, b)| OffspringDist::table(vec![a + 2.0 * b, 1.0 - 2.0 * a - 3.0 * b, a, b]).unwrap())
}

proptest! {
    #[test]
    fn convolution_powers_keep_mass_mean_and_variance(mu in critical_table(), n in 1usize..40) {
        let step = mu.lukasiewicz_step();
        let pw = step.convolution_power(n);
        prop_assert!((pw.total() - 1.0).abs() < 1e-12);
        prop_assert!(pw.mean().abs() < 1e-9);
        prop_assert!((pw.variance() - n as f64 * mu.sigma2()).abs() < 1e-8 * n as f64);
    }

    #[test]
    fn adjoint_is_the_tail_law(mu in critical_table()) {
        let adj = mu.adjoint().unwrap();
        prop_assert!((adj.total() - 1.0).abs() < 1e-12);
        // Σ i·P(ξ > i) = E[ξ(ξ-1)]/2 = σ²/2 for a mean-one law.
        prop_assert!((adj.mean() - mu.sigma2() / 2.0).abs() < 1e-12);
        for i in 0..=mu.max_support() {
            let tail: f64 = (i + 1..=mu.max_support()).map(|k| mu.pmf(k)).sum();
            prop_assert!((adj.prob(i as i64) - tail).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_increments_are_steps(seed in any::<u64>(), n in 1usize..200) {
        let theta = StepDist::srw(4, 0.0).unwrap();
        let mu = OffspringDist::geometric(0.5).unwrap();
        let mut rng = seeded(seed, "brw");
        let tree = sample_gw_conditioned(&mu, n, &mut rng).unwrap();
        let walk: TreeWalk = realize(&tree, &theta, &ORIGIN, &mut rng);
        prop_assert_eq!(walk.len(), n);
        prop_assert_eq!(walk.positions[0], ORIGIN);
        let inc = walk.edge_increments();
        prop_assert_eq!(inc.len(), n - 1);
        prop_assert!(inc.iter().all(|z| theta.prob(z) > 0.0));
        prop_assert!(walk.range().len() <= n);
    }
}

#[test]
fn specs_parse_and_print_back() {
    for spec in ["binary", "geometric(0.5)", "poisson", "table([0.25,0.5,0.25])"] {
        let mu = parse_offspring(spec).unwrap();
        assert_eq!(parse_offspring(&mu.spec().to_string()).unwrap().law().probs(), mu.law().probs());
        assert!((mu.law().mean() - 1.0).abs() < 1e-9, "{spec}");
    }
    assert!(parse_offspring("table([0.5,0.5])").is_err());
    assert!(parse_offspring("geometric(1.5)").is_err());
    for spec in ["srw(5)", "srw(6)", "box(5,1)"] {
        let theta = parse_step(spec).unwrap();
        assert!(theta.is_symmetric(), "{spec}");
        let total: f64 = theta.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    assert!(parse_step("srw(0)").is_err());
}

#[test]
fn offspring_sampling_matches_the_law() {
    let mu = OffspringDist::table(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let mut rng = seeded(3, "offspring");
    let mut counts = [0u64; 4];
    for _ in 0..200_000 {
        counts[mu.sample(&mut rng) as usize] += 1;
    }
    let test = bcaplab::stats::chi_square(&counts, &[0.4, 0.3, 0.2, 0.1]);
    assert!(test.p_value > 1e-4, "p = {}", test.p_value);
}
