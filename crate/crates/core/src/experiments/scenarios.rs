//! Named, ready-to-run configurations.

use super::config::{AlgorithmSpec, ContextSpec, DomainSource, ExperimentConfig, MisspecSpec, ObjectiveSpec};
use crate::kernels::KernelSpec;

pub const SCENARIO_NAMES: [&str; 6] = [
    "realizable",
    "misspec_sin",
    "misspec_sign",
    "spike",
    "contextual_master",
    "gpucb_failure",
];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "realizable" => "f* = f̃ with ‖f̃‖ ≤ 1, EC-GP-UCB with ε = 0",
        "misspec_sin" => "f̃ plus a bounded sinusoid of amplitude 0.2, phased uncertainty sampling",
        "misspec_sign" => "f̃ plus ±0.1 on every action, EC-GP-UCB with ε = 0.1",
        "spike" => "noiseless spike of height 2ζ between grid points; per-round regret 2ζ",
        "contextual_master" => "random action subsets, f̃ rescaled to [0.1, 0.9] plus ±0.1, regret-balancing master",
        "gpucb_failure" => "penalty of 0.2 placed on the maximizer of f̃, plain GP-UCB",
        _ => return None,
    })
}

fn base(name: &str, misspec: MisspecSpec, algorithm: AlgorithmSpec, horizon: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        kernel: KernelSpec::SquaredExponential { lengthscale: 0.2 },
        domain: DomainSource::Grid {
            dimension: 1,
            resolution: 64,
            lower: 0.0,
            upper: 1.0,
        },
        objective: ObjectiveSpec::Rkhs {
            seed: None,
            n_centers: 8,
            target_norm: 1.0,
            misspec,
            unit_interval: false,
        },
        hypothesis_norm: 1.0,
        noise: 0.1,
        assumed_noise: None,
        lambda: 0.01,
        delta: 0.1,
        horizon,
        algorithm,
        contexts: None,
        replications: 20,
        base_seed: 0,
        output: None,
        episode_delta_split: true,
    }
}

pub fn scenario(name: &str) -> Option<ExperimentConfig> {
    Some(match name {
        "realizable" => base(name, MisspecSpec::None, AlgorithmSpec::EcGpUcb { eps: 0.0 }, 2000),
        "misspec_sin" => base(
            name,
            MisspecSpec::BoundedSinusoid {
                amplitude: 0.2,
                frequency: vec![3.0],
                phase: 0.0,
            },
            AlgorithmSpec::PhasedUs,
            4096,
        ),
        "misspec_sign" => base(
            name,
            MisspecSpec::SignPattern {
                amplitude: 0.1,
                seed: 11,
            },
            AlgorithmSpec::EcGpUcb { eps: 0.1 },
            2000,
        ),
        "spike" => {
            let mut cfg = base(name, MisspecSpec::None, AlgorithmSpec::GpUcb, 100);
            cfg.objective = ObjectiveSpec::Spike {
                zeta: 0.1,
                center: vec![0.5],
                lengthscale: 0.2,
                spike_location: vec![0.5],
            };
            cfg.noise = 0.0;
            cfg.assumed_noise = Some(0.1);
            cfg.replications = 1;
            cfg
        }
        "contextual_master" => {
            let mut cfg = base(
                name,
                MisspecSpec::SignPattern {
                    amplitude: 0.1,
                    seed: 23,
                },
                AlgorithmSpec::Master {
                    c: crate::algorithms::DEFAULT_CONSISTENCY_C,
                    gamma_t: None,
                    gamma_lambda: None,
                },
                4096,
            );
            if let ObjectiveSpec::Rkhs { unit_interval, .. } = &mut cfg.objective {
                *unit_interval = true;
            }
            cfg.contexts = Some(ContextSpec {
                pool_size: 8,
                subset_size: 16,
                seed: 5,
            });
            cfg.replications = 10;
            cfg
        }
        "gpucb_failure" => base(
            name,
            MisspecSpec::OptimumPenalty { amplitude: 0.2 },
            AlgorithmSpec::GpUcb,
            1000,
        ),
        _ => return None,
    })
}
