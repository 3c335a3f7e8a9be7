use std::sync::Arc;

use super::{argmax_over, BanditAlgorithm};
use crate::confidence::{enlarged_bonus, BetaAccumulator, ConfidenceParams};
use crate::error::{Error, Result};
use crate::gp_posterior::GridPosterior;
use crate::kernels::{ActionDomain, KernelSpec};

/// `argmax_{a ∈ action_set} mean[a] + radius · std[a]`, lowest index on ties.
pub fn ucb_argmax(means: &[f64], stds: &[f64], radius: f64, action_set: &[usize]) -> Result<usize> {
    let scores: Vec<f64> = means.iter().zip(stds).map(|(m, s)| m + radius * s).collect();
    argmax_over(&scores, action_set)
}

/// GP-UCB with the confidence radius enlarged by `ε √t / √λ`.
///
/// With `eps = 0` this is plain GP-UCB: the enlargement adds an exact zero,
/// so scores and selections are bit-identical.
#[derive(Debug, Clone)]
pub struct UcbLearner {
    posterior: GridPosterior,
    beta: BetaAccumulator,
    eps: f64,
    awaiting: Option<usize>,
}

impl UcbLearner {
    pub fn new(kernel: KernelSpec, domain: Arc<ActionDomain>, params: ConfidenceParams, eps: f64) -> Result<Self> {
        params.validate()?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("{eps} must be nonnegative")));
        }
        Ok(Self {
            posterior: GridPosterior::new(kernel, params.lambda, domain)?,
            beta: BetaAccumulator::new(params),
            eps,
            awaiting: None,
        })
    }

    pub fn gp_ucb(kernel: KernelSpec, domain: Arc<ActionDomain>, params: ConfidenceParams) -> Result<Self> {
        Self::new(kernel, domain, params, 0.0)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Round `t` of the next selection (1-based).
    pub fn next_round(&self) -> usize {
        self.posterior.round() + 1
    }

    /// Realizable radius `β_t` for the next selection.
    pub fn beta(&self) -> f64 {
        self.beta.beta()
    }

    /// `β_t + ε √t / √λ` for the next selection.
    pub fn radius(&self) -> f64 {
        let bonus = enlarged_bonus(self.eps, self.next_round(), self.posterior.lambda())
            .expect("eps and lambda validated at construction");
        self.beta.beta() + bonus
    }

    pub fn posterior(&self) -> &GridPosterior {
        &self.posterior
    }

    pub fn posterior_mut(&mut self) -> &mut GridPosterior {
        &mut self.posterior
    }

    /// Current posterior means and standard deviations over the domain.
    pub fn mean_and_std(&mut self) -> Result<(Vec<f64>, Vec<f64>)> {
        let means = self.posterior.means()?.to_vec();
        let stds = self.posterior.variances()?.iter().map(|v| v.sqrt()).collect();
        Ok((means, stds))
    }
}

impl BanditAlgorithm for UcbLearner {
    fn name(&self) -> String {
        if self.eps == 0.0 {
            "ec_gp_ucb(eps=0)".into()
        } else {
            format!("ec_gp_ucb(eps={})", self.eps)
        }
    }

    fn select(&mut self, action_set: &[usize]) -> Result<usize> {
        if action_set.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        let radius = self.radius();
        let (means, stds) = self.mean_and_std()?;
        let chosen = ucb_argmax(&means, &stds, radius, action_set)?;
        self.awaiting = Some(chosen);
        Ok(chosen)
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        if let Some(expected) = self.awaiting.take() {
            if expected != action {
                return Err(Error::invalid(
                    "action",
                    format!("update for {action} but {expected} was selected"),
                ));
            }
        }
        let prior_var = self.posterior.variance(action)?;
        self.beta.record_round(prior_var)?;
        self.posterior.add_observed(action, reward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn setup(eps: f64) -> UcbLearner {
        let domain = Arc::new(ActionDomain::grid(1, 16, 0.0, 1.0).unwrap());
        let params = ConfidenceParams::new(1.0, 0.1, 1.0, 0.1).unwrap();
        UcbLearner::new(KernelSpec::squared_exponential(0.2).unwrap(), domain, params, eps).unwrap()
    }

    #[test]
    fn scoring_examples() {
        let means = [0.0, 0.0];
        let stds = [0.5, 0.2];
        assert_eq!(ucb_argmax(&means, &stds, 1.0, &[0, 1]).unwrap(), 0);
        // β + ε√t/√λ = 1 + 1 with ε = 1, t = 1, λ = 1.
        let radius = 1.0 + crate::confidence::enlarged_bonus(1.0, 1, 1.0).unwrap();
        assert_eq!(radius, 2.0);
        assert_eq!(ucb_argmax(&means, &stds, radius, &[0, 1]).unwrap(), 0);
        assert_eq!(ucb_argmax(&[0.3, 0.3], &[0.1, 0.1], 2.0, &[1, 0]).unwrap(), 0);
        assert_eq!(ucb_argmax(&means, &stds, 1.0, &[1]).unwrap(), 1);
        assert!(matches!(
            ucb_argmax(&means, &stds, 1.0, &[]),
            Err(Error::EmptyActionSet)
        ));
    }

    #[test]
    fn prior_selection_is_lowest_index() {
        let mut l = setup(0.0);
        let all: Vec<usize> = (0..16).collect();
        assert_eq!(l.select(&all).unwrap(), 0);
        assert_eq!(l.select(&[7, 3, 9]).unwrap(), 3);
        assert!(matches!(l.select(&[]), Err(Error::EmptyActionSet)));
    }

    #[test]
    fn eps_zero_matches_gp_ucb_bitwise() {
        let mut a = setup(0.0);
        let domain = a.posterior().domain().clone();
        let params = ConfidenceParams::new(1.0, 0.1, 1.0, 0.1).unwrap();
        let mut b = UcbLearner::gp_ucb(KernelSpec::squared_exponential(0.2).unwrap(), domain, params).unwrap();
        let all: Vec<usize> = (0..16).collect();
        let mut rng = SplitMix64::new(5);
        for _ in 0..40 {
            assert_eq!(a.radius().to_bits(), b.radius().to_bits());
            let xa = a.select(&all).unwrap();
            let xb = b.select(&all).unwrap();
            assert_eq!(xa, xb);
            let y = -(xa as f64 / 16.0 - 0.6).powi(2) + 0.1 * rng.standard_normal();
            a.update(xa, y).unwrap();
            b.update(xb, y).unwrap();
        }
    }

    #[test]
    fn radius_grows_with_eps() {
        let mut a = setup(0.5);
        assert!((a.radius() - a.beta() - 0.5).abs() < 1e-15);
        let x = a.select(&[0, 1, 2, 3]).unwrap();
        a.update(x, 0.3).unwrap();
        assert!((a.radius() - a.beta() - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn update_must_match_selection() {
        let mut a = setup(0.0);
        let x = a.select(&[2, 4]).unwrap();
        assert!(a.update(x + 1, 0.0).is_err());
    }
}
