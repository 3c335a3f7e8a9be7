//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use kbandit::algorithms::UcbLearner;
use kbandit::{ActionDomain, BanditAlgorithm, ConfidenceParams, KernelSpec, SplitMix64};

pub fn grid(resolution: usize) -> Arc<ActionDomain> {
    Arc::new(ActionDomain::grid(1, resolution, 0.0, 1.0).expect("valid grid"))
}

pub fn se_kernel() -> KernelSpec {
    KernelSpec::squared_exponential(0.2).expect("positive lengthscale")
}

pub fn params() -> ConfidenceParams {
    ConfidenceParams::new(1.0, 0.1, 0.01, 0.1).expect("valid parameters")
}

/// Random symmetric positive definite matrix `AAᵀ + n I`.
pub fn random_spd(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dot: f64 = (0..n).map(|k| a[i][k] * a[j][k]).sum();
                    dot + if i == j { n as f64 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// GP-UCB learner after `rounds` noisy updates on a sine objective.
pub fn warmed_learner(resolution: usize, rounds: usize, seed: u64) -> UcbLearner {
    let domain = grid(resolution);
    let mut learner = UcbLearner::gp_ucb(se_kernel(), domain.clone(), params()).expect("valid learner");
    let all: Vec<usize> = (0..domain.len()).collect();
    let mut rng = SplitMix64::new(seed);
    for _ in 0..rounds {
        let a = learner.select(&all).expect("nonempty set");
        let y = (6.0 * domain.point(a)[0]).sin() * 0.5 + 0.1 * rng.standard_normal();
        learner.update(a, y).expect("matching update");
    }
    learner
}
