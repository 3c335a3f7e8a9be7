//! Phased uncertainty sampling with hallucinated-bound elimination.
//!
//! Episode `e` lasts `m_e = 2^{e−1}` rounds. Inside an episode the learner
//! starts from the prior and repeatedly queries the action of largest
//! posterior variance among the surviving set `D_e`; rewards are only used
//! once the episode ends, when every `x ∈ D_e` with
//! `μ(x) + β σ(x) < max_{x'} (μ(x') − β σ(x'))` is discarded.

use std::sync::Arc;

use super::{argmax_over, BanditAlgorithm};
use crate::confidence::{BetaAccumulator, ConfidenceParams};
use crate::error::{Error, Result};
use crate::gp_posterior::GridPosterior;
use crate::kernels::{ActionDomain, KernelSpec};

/// Per-episode confidence level `δ / (⌈log₂ T⌉ + 1)`, a union bound over
/// the at most `⌈log₂ T⌉ + 1` episodes of a run of length `T`.
pub fn episode_delta(delta: f64, horizon: usize) -> f64 {
    let episodes = (horizon.max(1) as f64).log2().ceil() + 1.0;
    delta / episodes
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub survivors: Vec<usize>,
    /// Action attaining the largest lower bound.
    pub lcb_argmax: usize,
    pub max_lcb: f64,
}

/// Keeps the actions of `active` whose upper bound reaches the best lower
/// bound.
pub fn eliminate(means: &[f64], stds: &[f64], beta: f64, active: &[usize]) -> Result<Elimination> {
    let lcb: Vec<f64> = means.iter().zip(stds).map(|(m, s)| m - beta * s).collect();
    let lcb_argmax = argmax_over(&lcb, active)?;
    let max_lcb = lcb[lcb_argmax];
    let survivors: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&a| means[a] + beta * stds[a] >= max_lcb)
        .collect();
    assert!(
        survivors.contains(&lcb_argmax),
        "the lower-bound maximizer must survive its own test"
    );
    Ok(Elimination {
        survivors,
        lcb_argmax,
        max_lcb,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub episode: usize,
    pub length: usize,
    pub beta: f64,
    pub active_before: usize,
    pub lcb_argmax: usize,
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PhasedUncertaintySampling {
    posterior: GridPosterior,
    beta: BetaAccumulator,
    active: Vec<usize>,
    episode: usize,
    episode_len: usize,
    queries: Vec<usize>,
    observations: Vec<f64>,
    reports: Vec<EpisodeReport>,
}

impl PhasedUncertaintySampling {
    /// `params.delta` is used as given; pass [`episode_delta`] to split the
    /// failure probability across episodes.
    pub fn new(kernel: KernelSpec, domain: Arc<ActionDomain>, params: ConfidenceParams) -> Result<Self> {
        params.validate()?;
        let active = (0..domain.len()).collect();
        Ok(Self {
            posterior: GridPosterior::new(kernel, params.lambda, domain)?,
            beta: BetaAccumulator::new(params),
            active,
            episode: 1,
            episode_len: 1,
            queries: Vec::new(),
            observations: Vec::new(),
            reports: Vec::new(),
        })
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn episode_len(&self) -> usize {
        self.episode_len
    }

    /// Surviving actions `D_e`, ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn reports(&self) -> &[EpisodeReport] {
        &self.reports
    }

    /// Queries issued in the current episode.
    pub fn pending_queries(&self) -> &[usize] {
        &self.queries
    }

    pub fn posterior(&self) -> &GridPosterior {
        &self.posterior
    }

    /// Next maximum-variance query within `D_e`; it enters the posterior
    /// immediately (variances do not depend on rewards).
    pub fn next_query(&mut self) -> Result<usize> {
        if self.queries.len() >= self.episode_len {
            return Err(Error::invalid("episode", "all queries of this episode were issued"));
        }
        let vars = self.posterior.variances()?;
        let x = argmax_over(vars, &self.active)?;
        let var = vars[x];
        self.beta.record_round(var)?;
        self.posterior.add_query(x)?;
        self.queries.push(x);
        Ok(x)
    }

    /// Closes the episode with one observation per query, in query order.
    pub fn end_episode(&mut self, observations: &[f64]) -> Result<&EpisodeReport> {
        if self.queries.len() != self.episode_len {
            return Err(Error::invalid(
                "episode",
                format!("{} of {} queries issued", self.queries.len(), self.episode_len),
            ));
        }
        if observations.len() != self.episode_len {
            return Err(Error::dims(self.episode_len, observations.len()));
        }
        for (&x, &y) in self.queries.iter().zip(observations) {
            self.posterior.add_observation(x, y)?;
        }
        let beta = self.beta.beta();
        let means = self.posterior.means()?.to_vec();
        let stds: Vec<f64> = self.posterior.variances()?.iter().map(|v| v.sqrt()).collect();
        let elim = eliminate(&means, &stds, beta, &self.active)?;
        let report = EpisodeReport {
            episode: self.episode,
            length: self.episode_len,
            beta,
            active_before: self.active.len(),
            lcb_argmax: elim.lcb_argmax,
            survivors: elim.survivors.clone(),
        };
        self.active = elim.survivors;
        self.reports.push(report);
        self.posterior.reset();
        self.beta.reset();
        self.queries.clear();
        self.observations.clear();
        self.episode_len *= 2;
        self.episode += 1;
        Ok(self.reports.last().unwrap())
    }
}

impl BanditAlgorithm for PhasedUncertaintySampling {
    fn name(&self) -> String {
        "phased_us".into()
    }

    /// The offered set is ignored: the learner plays on its own surviving set.
    fn select(&mut self, _action_set: &[usize]) -> Result<usize> {
        if self.queries.len() > self.observations.len() {
            return Err(Error::invalid("select", "previous query has no reward yet"));
        }
        self.next_query()
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        let k = self.observations.len();
        match self.queries.get(k) {
            Some(&q) if q == action => {}
            _ => return Err(Error::invalid("action", format!("no pending query for {action}"))),
        }
        self.observations.push(reward);
        if self.observations.len() == self.episode_len {
            let obs = std::mem::take(&mut self.observations);
            self.end_episode(&obs)?;
        }
        Ok(())
    }
}
