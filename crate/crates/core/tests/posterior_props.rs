mod common;

use std::sync::Arc;

use common::{dense_posterior, random_domain, random_kernel, random_points};
use kbandit::confidence::BetaAccumulator;
use kbandit::{ConfidenceParams, GridPosterior, PosteriorState, SplitMix64};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incremental_state_matches_dense_oracle(seed in any::<u64>(), t in 1usize..25, d in 1usize..3) {
        let mut rng = SplitMix64::new(seed);
        let kernel = random_kernel(&mut rng);
        let lambda = rng.uniform(0.05, 2.0);
        let pts = random_points(&mut rng, t, d);
        let ys: Vec<f64> = (0..t).map(|_| rng.standard_normal()).collect();
        let mut s = PosteriorState::new(kernel, lambda).unwrap();
        for (p, y) in pts.iter().zip(&ys) {
            s.add_point(p).unwrap();
            s.push_observation(*y).unwrap();
        }
        for x in random_points(&mut rng, 8, d) {
            let (m, v) = dense_posterior(&kernel, &pts, &ys, lambda, &x);
            prop_assert!((s.mean(&x).unwrap() - m).abs() < 1e-8);
            prop_assert!((s.variance(&x).unwrap() - v.max(0.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn variance_never_increases_and_stays_in_prior_range(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = SplitMix64::new(seed);
        let kernel = random_kernel(&mut rng);
        let lambda = rng.uniform(0.01, 1.0);
        let domain = Arc::new(random_domain(&mut rng, n, 1));
        let mut g = GridPosterior::new(kernel, lambda, domain.clone()).unwrap();
        let mut prev = g.variances().unwrap().to_vec();
        for _ in 0..40 {
            let a = rng.below(n as u64) as usize;
            g.add_query(a).unwrap();
            let now = g.variances().unwrap().to_vec();
            for i in 0..n {
                prop_assert!(now[i] <= prev[i] + 1e-12);
                prop_assert!(now[i] >= 0.0 && now[i] <= kernel.eval(domain.point(i), domain.point(i)) + 1e-12);
            }
            prev = now;
        }
    }

    #[test]
    fn pooled_grid_equals_unpooled_state(seed in any::<u64>(), n in 1usize..12, t in 1usize..40) {
        let mut rng = SplitMix64::new(seed);
        let kernel = random_kernel(&mut rng);
        let lambda = rng.uniform(0.05, 1.0);
        let domain = Arc::new(random_domain(&mut rng, n, 2));
        let mut g = GridPosterior::new(kernel, lambda, domain.clone()).unwrap();
        let mut s = PosteriorState::new(kernel, lambda).unwrap();
        let mut ys = Vec::new();
        for _ in 0..t {
            let a = rng.below(n as u64) as usize;
            let y = rng.standard_normal();
            g.add_observed(a, y).unwrap();
            s.add_point(domain.point(a)).unwrap();
            ys.push(y);
        }
        s.set_observations(&ys).unwrap();
        let means = g.means().unwrap().to_vec();
        let vars = g.variances().unwrap().to_vec();
        for a in 0..n {
            let x = domain.point(a);
            prop_assert!((means[a] - s.mean(x).unwrap()).abs() < 1e-7);
            prop_assert!((vars[a] - s.variance(x).unwrap()).abs() < 1e-7);
            prop_assert!((vars[a] - g.variance_at(x).unwrap()).abs() < 1e-9);
        }
        prop_assert_eq!(g.round(), t);
    }

    #[test]
    fn beta_is_nondecreasing(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let params = ConfidenceParams::new(rng.uniform(0.1, 3.0), rng.uniform(0.01, 1.0), rng.uniform(0.01, 2.0), rng.uniform(0.01, 0.5)).unwrap();
        let mut acc = BetaAccumulator::new(params);
        let mut prev = acc.beta();
        prop_assert!((prev - (params.noise_scale / params.lambda.sqrt() * (2.0 * (1.0 / params.delta).ln()).sqrt() + params.norm_bound)).abs() < 1e-12);
        for _ in 0..50 {
            acc.record_round(rng.next_f64()).unwrap();
            prop_assert!(acc.beta() >= prev);
            prev = acc.beta();
        }
    }
}
