//! Regret-bound balancing over enlarged-confidence GP-UCB bases.
//!
//! Base `i` runs with a guessed misspecification `ε̂_i = 2^{1−i} / √γ_T` and
//! comes with a candidate regret bound `R_i(N)`. Each round the master plays
//! the active base whose bound at its current play count is smallest, then
//! drops every base whose optimistic cumulative reward falls below the best
//! pessimistic one.

use std::sync::Arc;

use super::{BanditAlgorithm, UcbLearner};
use crate::confidence::ConfidenceParams;
use crate::error::{Error, Result};
use crate::kernels::{ActionDomain, KernelSpec};

/// Default constant `c` of the consistency test.
pub const DEFAULT_CONSISTENCY_C: f64 = 2.0;

/// Candidate bound
/// `min(2β √((2λ+1) γ N) + 2 (ε̂/√λ) √((2λ+1) γ) N, N)`, further limited to
/// grow by at most one per play.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBound {
    eps_hat: f64,
    sqrt_term: f64,
    linear_term: f64,
    // table[n] = R(n), grown on demand.
    table: Vec<f64>,
}

impl CandidateBound {
    pub fn new(eps_hat: f64, gamma: f64, beta: f64, lambda: f64) -> Self {
        let spread = ((2.0 * lambda + 1.0) * gamma).sqrt();
        Self {
            eps_hat,
            sqrt_term: 2.0 * beta * spread,
            linear_term: 2.0 * eps_hat / lambda.sqrt() * spread,
            table: vec![0.0],
        }
    }

    pub fn eps_hat(&self) -> f64 {
        self.eps_hat
    }

    /// Uncapped bound.
    pub fn raw(&self, n: usize) -> f64 {
        let n = n as f64;
        self.sqrt_term * n.sqrt() + self.linear_term * n
    }

    pub fn value(&mut self, n: usize) -> f64 {
        while self.table.len() <= n {
            let k = self.table.len();
            let prev = self.table[k - 1];
            let capped = self.raw(k).min(k as f64);
            self.table.push(capped.max(prev).min(prev + 1.0));
        }
        self.table[n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseSpec {
    pub eps_hat: f64,
    pub bound: CandidateBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterConfig {
    pub bases: Vec<BaseSpec>,
    pub gamma: f64,
    /// Radius used inside the candidate bounds, with `2γ_T` in place of the
    /// running log-determinant.
    pub beta: f64,
    pub warnings: Vec<String>,
}

impl MasterConfig {
    pub fn m(&self) -> usize {
        self.bases.len()
    }
}

/// `M = ⌈1 + ½ log₂(T / γ_T²)⌉` bases with `ε̂_i = 2^{1−i} / √γ_T`.
pub fn make_master_config(horizon: usize, gamma: f64, params: &ConfidenceParams) -> Result<MasterConfig> {
    params.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma_T", format!("{gamma} must be positive")));
    }
    if horizon < 2 {
        return Err(Error::invalid("horizon", format!("{horizon} must be at least 2")));
    }
    let raw_m = (1.0 + 0.5 * (horizon as f64 / (gamma * gamma)).log2()).ceil();
    let mut warnings = Vec::new();
    let m = if raw_m < 1.0 {
        warnings.push(format!("M = {raw_m} < 1 (γ_T² > T); using a single base"));
        1
    } else {
        raw_m as usize
    };
    let beta = params.radius_from_gamma(gamma);
    let bases = (1..=m)
        .map(|i| {
            let eps_hat = 2f64.powi(1 - i as i32) / gamma.sqrt();
            BaseSpec {
                eps_hat,
                bound: CandidateBound::new(eps_hat, gamma, beta, params.lambda),
            }
        })
        .collect();
    Ok(MasterConfig {
        bases,
        gamma,
        beta,
        warnings,
    })
}

fn deviation(c: f64, n: usize, m: usize, delta: f64) -> f64 {
    let n_eff = n.max(2) as f64;
    let log_term = (m as f64 * n_eff.ln() / delta).ln().max(0.0);
    c * (n as f64 * log_term).sqrt()
}

/// Active bases failing the consistency test
/// `J_i + R_i(N_i) + c √(N_i ln(M ln N_i / δ)) < max_j J_j − c √(N_j ln(M ln N_j / δ))`,
/// with `N` replaced by `max(N, 2)` inside the iterated logarithm.
pub fn inconsistent_bases(
    rewards: &[f64],
    counts: &[usize],
    bounds: &[f64],
    active: &[bool],
    c: f64,
    delta: f64,
) -> Vec<usize> {
    let m = active.len();
    let best_pessimistic = (0..m)
        .filter(|&j| active[j])
        .map(|j| rewards[j] - deviation(c, counts[j], m, delta))
        .fold(f64::NEG_INFINITY, f64::max);
    (0..m)
        .filter(|&i| active[i])
        .filter(|&i| rewards[i] + bounds[i] + deviation(c, counts[i], m, delta) < best_pessimistic)
        .collect()
}

#[derive(Debug, Clone)]
pub struct RegretBalancingMaster {
    bases: Vec<UcbLearner>,
    bounds: Vec<CandidateBound>,
    counts: Vec<usize>,
    rewards: Vec<f64>,
    active: Vec<bool>,
    c: f64,
    delta: f64,
    pending_base: Option<usize>,
    eliminations: Vec<(usize, usize)>,
}

impl RegretBalancingMaster {
    pub fn new(
        kernel: KernelSpec,
        domain: Arc<ActionDomain>,
        params: ConfidenceParams,
        config: &MasterConfig,
        c: f64,
    ) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid("c", format!("{c} must be nonnegative")));
        }
        if config.bases.is_empty() {
            return Err(Error::invalid("bases", "at least one base is required"));
        }
        let bases = config
            .bases
            .iter()
            .map(|b| UcbLearner::new(kernel, domain.clone(), params, b.eps_hat))
            .collect::<Result<Vec<_>>>()?;
        let m = bases.len();
        Ok(Self {
            bases,
            bounds: config.bases.iter().map(|b| b.bound.clone()).collect(),
            counts: vec![0; m],
            rewards: vec![0.0; m],
            active: vec![true; m],
            c,
            delta: params.delta,
            pending_base: None,
            eliminations: Vec::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.bases.len()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_bases(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| self.active[i]).collect()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cumulative_rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn eps_hats(&self) -> Vec<f64> {
        self.bases.iter().map(UcbLearner::eps).collect()
    }

    /// `(round, base)` for every elimination so far.
    pub fn eliminations(&self) -> &[(usize, usize)] {
        &self.eliminations
    }

    /// Base chosen by the most recent `select`.
    pub fn last_base(&self) -> Option<usize> {
        self.pending_base
    }

    /// `R_i(N_i)` for every base.
    pub fn current_bounds(&mut self) -> Vec<f64> {
        (0..self.m()).map(|i| self.bounds[i].value(self.counts[i])).collect()
    }

    /// Active base with the smallest candidate bound, lowest index on ties.
    pub fn choose_base(&mut self) -> usize {
        let bounds = self.current_bounds();
        let mut best: Option<usize> = None;
        for i in (0..self.m()).filter(|&i| self.active[i]) {
            if best.is_none_or(|b| bounds[i] < bounds[b]) {
                best = Some(i);
            }
        }
        best.expect("the active set is never empty")
    }

    /// Feeds `(action, reward)` to base `base` and runs the consistency test.
    pub fn update_base(&mut self, base: usize, action: usize, reward: f64) -> Result<()> {
        if base >= self.m() || !self.active[base] {
            return Err(Error::InactiveBase(base));
        }
        self.bases[base].update(action, reward)?;
        self.counts[base] += 1;
        self.rewards[base] += reward;
        let bounds = self.current_bounds();
        let failing = inconsistent_bases(&self.rewards, &self.counts, &bounds, &self.active, self.c, self.delta);
        let round: usize = self.counts.iter().sum();
        for i in failing {
            self.active[i] = false;
            self.eliminations.push((round, i));
        }
        debug_assert!(self.active.iter().any(|&a| a));
        Ok(())
    }
}

impl BanditAlgorithm for RegretBalancingMaster {
    fn name(&self) -> String {
        format!("master(M={})", self.m())
    }

    fn select(&mut self, action_set: &[usize]) -> Result<usize> {
        let base = self.choose_base();
        let action = self.bases[base].select(action_set)?;
        self.pending_base = Some(base);
        Ok(action)
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        let base = self
            .pending_base
            .ok_or_else(|| Error::invalid("update", "no base was selected"))?;
        self.update_base(base, action, reward)
    }
}
