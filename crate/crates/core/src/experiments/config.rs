//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "name": "realizable",
//!   "kernel": {"family": "squared_exponential", "lengthscale": 0.2},
//!   "domain": {"grid": {"dimension": 1, "resolution": 64, "lower": 0.0, "upper": 1.0}},
//!   "objective": {"kind": "rkhs", "n_centers": 8, "target_norm": 1.0,
//!                 "misspec": {"kind": "none"}},
//!   "hypothesis_norm": 1.0,
//!   "noise": 0.1,
//!   "lambda": 0.01,
//!   "delta": 0.1,
//!   "horizon": 2000,
//!   "algorithm": {"kind": "ec_gp_ucb", "eps": 0.0},
//!   "replications": 20,
//!   "base_seed": 0
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceParams;
use crate::environments::{
    spike_objective, synthesize_rkhs, ContextDistribution, Environment, Misspecification, MisspecifiedObjective,
    NoiseModel,
};
use crate::error::{Error, Result};
use crate::kernels::{ActionDomain, KernelSpec};
use crate::rng::mix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSource {
    Grid {
        dimension: usize,
        resolution: usize,
        #[serde(default)]
        lower: f64,
        #[serde(default = "one")]
        upper: f64,
    },
    Csv {
        path: PathBuf,
    },
}

/// Misspecification as written in a config; `optimum_penalty` is placed at
/// the maximizer of `f̃` once the objective has been synthesized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MisspecSpec {
    None,
    BoundedSinusoid {
        amplitude: f64,
        frequency: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    SignPattern {
        amplitude: f64,
        seed: u64,
    },
    OptimumPenalty {
        amplitude: f64,
    },
}

impl MisspecSpec {
    pub fn amplitude(&self) -> f64 {
        match self {
            MisspecSpec::None => 0.0,
            MisspecSpec::BoundedSinusoid { amplitude, .. }
            | MisspecSpec::SignPattern { amplitude, .. }
            | MisspecSpec::OptimumPenalty { amplitude } => *amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Rkhs {
        /// Synthesis seed; when absent each replication draws its own `f̃`.
        #[serde(default)]
        seed: Option<u64>,
        n_centers: usize,
        target_norm: f64,
        misspec: MisspecSpec,
        /// Affinely map `f̃` into `[ε, 1 − ε]` so that `f*` takes values in
        /// `[0, 1]`.
        #[serde(default)]
        unit_interval: bool,
    },
    Spike {
        zeta: f64,
        center: Vec<f64>,
        lengthscale: f64,
        spike_location: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    GpUcb,
    EcGpUcb {
        eps: f64,
    },
    PhasedUs,
    Master {
        #[serde(default = "default_c")]
        c: f64,
        /// Greedy rounds used to estimate `γ_T`; defaults to `min(T, 512)`.
        #[serde(default)]
        gamma_t: Option<usize>,
        /// Regularizer for the `γ_T` estimate; defaults to `lambda`.
        #[serde(default)]
        gamma_lambda: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextSpec {
    pub pool_size: usize,
    pub subset_size: usize,
    pub seed: u64,
}

pub const GAMMA_GREEDY_CAP: usize = 512;

fn one() -> f64 {
    1.0
}

fn default_c() -> f64 {
    crate::algorithms::DEFAULT_CONSISTENCY_C
}

fn default_replications() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub kernel: KernelSpec,
    pub domain: DomainSource,
    pub objective: ObjectiveSpec,
    /// `B` of the learner's hypothesis class.
    pub hypothesis_norm: f64,
    /// Standard deviation of the environment noise.
    pub noise: f64,
    /// Noise scale assumed by the learner's confidence radius; defaults to
    /// `noise`. Needed for noiseless environments.
    #[serde(default)]
    pub assumed_noise: Option<f64>,
    pub lambda: f64,
    pub delta: f64,
    pub horizon: usize,
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub contexts: Option<ContextSpec>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Split `δ` across phased episodes.
    #[serde(default = "default_true")]
    pub episode_delta_split: bool,
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn learner_noise(&self) -> f64 {
        self.assumed_noise.unwrap_or(self.noise)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate().map_err(|e| config_err("kernel", e))?;
        if self.horizon < 1 {
            return Err(config_err("horizon", "must be at least 1"));
        }
        if self.replications < 1 {
            return Err(config_err("replications", "must be at least 1"));
        }
        if !(self.hypothesis_norm > 0.0) {
            return Err(config_err("hypothesis_norm", "must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(config_err("noise", "must be nonnegative"));
        }
        if !(self.learner_noise() > 0.0) {
            return Err(config_err(
                "assumed_noise",
                "the learner needs a positive noise scale; set assumed_noise for noiseless runs",
            ));
        }
        if !(self.lambda > 0.0) {
            return Err(config_err("lambda", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_err("delta", "must lie in (0, 1)"));
        }
        match &self.algorithm {
            AlgorithmSpec::EcGpUcb { eps } if !(*eps >= 0.0) => {
                return Err(config_err("algorithm.eps", "must be nonnegative"))
            }
            AlgorithmSpec::Master { c, gamma_lambda, .. } => {
                if !(*c >= 0.0) {
                    return Err(config_err("algorithm.c", "must be nonnegative"));
                }
                if matches!(gamma_lambda, Some(l) if !(*l > 0.0)) {
                    return Err(config_err("algorithm.gamma_lambda", "must be positive"));
                }
            }
            AlgorithmSpec::PhasedUs if self.contexts.is_some() => {
                return Err(config_err(
                    "algorithm",
                    "phased_us needs a fixed action set and cannot run with contexts",
                ))
            }
            _ => {}
        }
        if let Some(ctx) = &self.contexts {
            if ctx.pool_size == 0 || ctx.subset_size == 0 {
                return Err(config_err("contexts", "pool_size and subset_size must be positive"));
            }
        }
        match &self.objective {
            ObjectiveSpec::Rkhs {
                n_centers,
                target_norm,
                misspec,
                ..
            } => {
                if *n_centers == 0 {
                    return Err(config_err("objective.n_centers", "must be positive"));
                }
                if !(*target_norm > 0.0) {
                    return Err(config_err("objective.target_norm", "must be positive"));
                }
                if !(misspec.amplitude() >= 0.0) {
                    return Err(config_err("objective.misspec.amplitude", "must be nonnegative"));
                }
            }
            ObjectiveSpec::Spike { zeta, lengthscale, .. } => {
                if !(*zeta > 0.0) {
                    return Err(config_err("objective.zeta", "must be positive"));
                }
                if !(*lengthscale > 0.0) {
                    return Err(config_err("objective.lengthscale", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn confidence_params(&self) -> Result<ConfidenceParams> {
        ConfidenceParams::new(self.hypothesis_norm, self.learner_noise(), self.lambda, self.delta)
    }

    pub fn build_domain(&self) -> Result<Arc<ActionDomain>> {
        let domain = match &self.domain {
            DomainSource::Grid {
                dimension,
                resolution,
                lower,
                upper,
            } => ActionDomain::grid(*dimension, *resolution, *lower, *upper),
            DomainSource::Csv { path } => ActionDomain::from_csv(path),
        }
        .map_err(|e| config_err("domain", e))?;
        domain.validate_for(&self.kernel).map_err(|e| config_err("domain", e))?;
        Ok(Arc::new(domain))
    }

    pub fn build_contexts(&self, domain: &ActionDomain) -> Result<Option<ContextDistribution>> {
        self.contexts
            .as_ref()
            .map(|c| {
                ContextDistribution::random_pool(domain.len(), c.pool_size, c.subset_size, c.seed)
                    .map_err(|e| config_err("contexts", e))
            })
            .transpose()
    }

    /// Environment for one replication.
    pub fn build_environment(&self, domain: &Arc<ActionDomain>, replication_seed: u64) -> Result<Environment> {
        let noise = NoiseModel::gaussian(self.noise)?;
        match &self.objective {
            ObjectiveSpec::Rkhs {
                seed,
                n_centers,
                target_norm,
                misspec,
                unit_interval,
            } => {
                let synth_seed = seed.unwrap_or_else(|| mix64(replication_seed ^ 0x6F62_6A65_6374_6976));
                let g = synthesize_rkhs(&self.kernel, domain, *n_centers, *target_norm, synth_seed)
                    .map_err(|e| config_err("objective", e))?;
                let amplitude = misspec.amplitude();
                let (scale, offset) = if *unit_interval {
                    if amplitude >= 0.5 {
                        return Err(config_err("objective.misspec", "unit_interval needs amplitude < 0.5"));
                    }
                    let values: Vec<f64> = domain.points().iter().map(|x| g.value(x)).collect();
                    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let span = (hi - lo).max(f64::MIN_POSITIVE);
                    let scale = (1.0 - 2.0 * amplitude) / span;
                    (scale, amplitude - scale * lo)
                } else {
                    (1.0, 0.0)
                };
                let misspec = match misspec {
                    MisspecSpec::None => Misspecification::None,
                    MisspecSpec::BoundedSinusoid {
                        amplitude,
                        frequency,
                        phase,
                    } => Misspecification::BoundedSinusoid {
                        amplitude: *amplitude,
                        frequency: frequency.clone(),
                        phase: *phase,
                    },
                    MisspecSpec::SignPattern { amplitude, seed } => Misspecification::SignPattern {
                        amplitude: *amplitude,
                        seed: *seed,
                    },
                    MisspecSpec::OptimumPenalty { amplitude } => {
                        let best = domain
                            .points()
                            .iter()
                            .enumerate()
                            .fold((0, f64::NEG_INFINITY), |acc, (i, x)| {
                                let v = g.value(x);
                                if v > acc.1 {
                                    (i, v)
                                } else {
                                    acc
                                }
                            })
                            .0;
                        Misspecification::PointPenalty {
                            amplitude: *amplitude,
                            location: domain.point(best).to_vec(),
                        }
                    }
                };
                let objective = MisspecifiedObjective::with_affine(g, scale, offset, misspec, domain.points())
                    .map_err(|e| config_err("objective.misspec", e))?;
                Environment::new(domain.clone(), objective, noise, &[])
            }
            ObjectiveSpec::Spike {
                zeta,
                center,
                lengthscale,
                spike_location,
            } => {
                if spike_location.len() != domain.dimension() || center.len() != domain.dimension() {
                    return Err(config_err(
                        "objective",
                        "center and spike_location must match the domain dimension",
                    ));
                }
                if domain.index_of(spike_location).is_some() {
                    return Err(config_err(
                        "objective.spike_location",
                        "must not coincide with a domain point",
                    ));
                }
                let objective = spike_objective(*zeta, center, *lengthscale, spike_location, domain.points())
                    .map_err(|e| config_err("objective", e))?;
                Environment::new(domain.clone(), objective, noise, std::slice::from_ref(spike_location))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "kernel": {"family": "squared_exponential", "lengthscale": 0.2},
        "domain": {"grid": {"dimension": 1, "resolution": 16}},
        "objective": {"kind": "rkhs", "n_centers": 4, "target_norm": 1.0, "misspec": {"kind": "none"}},
        "hypothesis_norm": 1.0, "noise": 0.1, "lambda": 0.01, "delta": 0.1, "horizon": 10,
        "algorithm": {"kind": "gp_ucb"}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.replications, 1);
        assert_eq!(cfg.base_seed, 0);
        assert!(cfg.episode_delta_split);
        assert_eq!(cfg.build_domain().unwrap().len(), 16);
        let round_trip = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(round_trip, cfg);
    }

    #[test]
    fn field_level_errors() {
        let bad = MINIMAL.replace("\"horizon\": 10", "\"horizon\": 0");
        let err = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("horizon"), "{err}");

        let bad = MINIMAL.replace("\"delta\": 0.1", "\"delta\": 1.5");
        assert!(ExperimentConfig::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("delta"));

        let bad = MINIMAL.replace("\"noise\": 0.1", "\"noise\": 0.0");
        assert!(ExperimentConfig::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("assumed_noise"));

        let bad = MINIMAL.replace("\"lambda\"", "\"lambada\"");
        assert!(ExperimentConfig::from_json(&bad).is_err());

        let bad = MINIMAL.replace(r#"{"kind": "gp_ucb"}"#, r#"{"kind": "ec_gp_ucb", "eps": -1}"#);
        assert!(ExperimentConfig::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("eps"));
    }

    #[test]
    fn phased_rejects_contexts() {
        let bad = MINIMAL
            .replace(r#"{"kind": "gp_ucb"}"#, r#"{"kind": "phased_us"}"#)
            .replace(
                "\"horizon\": 10",
                "\"horizon\": 10, \"contexts\": {\"pool_size\": 2, \"subset_size\": 3, \"seed\": 1}",
            );
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn unit_interval_rescaling() {
        let text = MINIMAL.replace(
            r#""misspec": {"kind": "none"}}"#,
            r#""misspec": {"kind": "sign_pattern", "amplitude": 0.1, "seed": 3}, "unit_interval": true}"#,
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let domain = cfg.build_domain().unwrap();
        let env = cfg.build_environment(&domain, 7).unwrap();
        let fs = env.f_star_values();
        assert!(fs.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        let ft = env.f_tilde_values();
        let lo = ft.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ft.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 0.1).abs() < 1e-12 && (hi - 0.9).abs() < 1e-12);
        assert!((env.eps_true() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn spike_must_be_off_grid() {
        let text = MINIMAL.replace(
            r#"{"kind": "rkhs", "n_centers": 4, "target_norm": 1.0, "misspec": {"kind": "none"}}"#,
            r#"{"kind": "spike", "zeta": 0.1, "center": [0.4], "lengthscale": 0.2, "spike_location": [0.41]}"#,
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let domain = cfg.build_domain().unwrap();
        assert!(cfg.build_environment(&domain, 0).is_ok());
        let on_grid = text.replace("\"spike_location\": [0.41]", "\"spike_location\": [0.4]");
        let cfg = ExperimentConfig::from_json(&on_grid).unwrap();
        assert!(cfg.build_environment(&domain, 0).is_err());
    }
}
