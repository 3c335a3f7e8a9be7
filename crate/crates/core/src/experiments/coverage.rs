//! Monte Carlo check of the confidence band `|f̃(x) − μ_{t−1}(x)| ≤ β_t σ_{t−1}(x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::runner::Prepared;
use crate::algorithms::{BanditAlgorithm, UcbLearner};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub runs: usize,
    pub horizon: usize,
    pub delta: f64,
    /// Runs in which the band failed at some round and action.
    pub violations: usize,
    pub violation_fraction: f64,
    /// Largest `|f̃ − μ| / (β σ)` seen across all runs.
    pub worst_ratio: f64,
}

impl CoverageReport {
    pub fn passes(&self) -> bool {
        self.violation_fraction <= self.delta
    }
}

/// Runs GP-UCB on `runs` independent realizable instances (replication
/// seeds `base_seed + r`) and records whether the band ever failed.
pub fn run_coverage(config: &ExperimentConfig, runs: usize) -> Result<CoverageReport> {
    if runs == 0 {
        return Err(Error::Config("coverage: runs must be positive".into()));
    }
    let prepared = Prepared::new(config)?;
    let outcomes = (0..runs)
        .into_par_iter()
        .map(|r| coverage_run(&prepared, r))
        .collect::<Result<Vec<_>>>()?;
    let violations = outcomes.iter().filter(|o| o.0).count();
    let worst_ratio = outcomes.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok(CoverageReport {
        runs,
        horizon: config.horizon,
        delta: config.delta,
        violations,
        violation_fraction: violations as f64 / runs as f64,
        worst_ratio,
    })
}

fn coverage_run(prepared: &Prepared, replication: usize) -> Result<(bool, f64)> {
    let cfg = &prepared.config;
    let seed = prepared.replication_seed(replication);
    let env = cfg.build_environment(&prepared.domain, seed)?;
    if env.eps_true() > 0.0 {
        return Err(Error::Config(format!(
            "coverage: objective must be realizable, found ε = {}",
            env.eps_true()
        )));
    }
    let mut learner = UcbLearner::gp_ucb(cfg.kernel, prepared.domain.clone(), cfg.confidence_params()?)?;
    let mut noise_rng = SplitMix64::stream(seed, 1);
    let all: Vec<usize> = (0..prepared.domain.len()).collect();
    let f = env.f_tilde_values();
    let mut violated = false;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.horizon {
        let beta = learner.beta();
        let (means, stds) = learner.mean_and_std()?;
        for a in 0..all.len() {
            let gap = (f[a] - means[a]).abs();
            let width = beta * stds[a];
            if gap > width {
                violated = true;
            }
            if width > 0.0 {
                worst = worst.max(gap / width);
            }
        }
        let x = learner.select(&all)?;
        let y = env.observe(x, &mut noise_rng);
        learner.update(x, y)?;
    }
    Ok((violated, worst))
}
