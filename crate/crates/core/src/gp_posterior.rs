//! Kernel ridge regression / GP posterior.
//!
//! With `K_t` the Gram matrix of the queried points and `k_t(x)` the column
//! of kernel values against them,
//!
//! ```text
//! mean(x)     = k_t(x)ᵀ (K_t + λI)⁻¹ Y
//! variance(x) = k(x, x) − k_t(x)ᵀ (K_t + λI)⁻¹ k_t(x)
//! ```
//!
//! The variance ignores the observations, so points can be added before
//! their rewards are known (uncertainty sampling receives a whole episode of
//! observations at once).
//!
//! Two representations are provided:
//!
//! * [`PosteriorState`] keeps one row per query over arbitrary points and
//!   grows its Cholesky factor incrementally.
//! * [`GridPosterior`] works on a finite [`ActionDomain`] and pools repeated
//!   queries of the same action: `n` observations at `x` with mean `ȳ` are
//!   equivalent to one observation `ȳ` with ridge `λ / n`. Its system is at
//!   most `|D|` wide no matter how many rounds are played.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{ActionDomain, KernelSpec};
use crate::numerics::{cholesky_factor, extend_factor, solve_spd, SpdFactor, DEFAULT_JITTER};

/// Raw variances below this are reported as a corrupted factor.
pub const VARIANCE_BREAKDOWN: f64 = -1e-8;

fn clip_variance(raw: f64) -> Result<f64> {
    if raw < VARIANCE_BREAKDOWN || raw.is_nan() {
        Err(Error::NumericalBreakdown(format!("posterior variance {raw:e}")))
    } else {
        Ok(raw.max(0.0))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("lambda", format!("{lambda} must be positive")))
    }
}

#[derive(Debug, Clone)]
pub struct PosteriorState {
    kernel: KernelSpec,
    lambda: f64,
    points: Vec<Vec<f64>>,
    factor: SpdFactor,
    observations: Vec<f64>,
    // (K_t + λI)⁻¹ Y, present only when every query has an observation.
    weights: Option<Vec<f64>>,
}

impl PosteriorState {
    pub fn new(kernel: KernelSpec, lambda: f64) -> Result<Self> {
        kernel.validate()?;
        check_lambda(lambda)?;
        Ok(Self {
            kernel,
            lambda,
            points: Vec::new(),
            factor: SpdFactor::empty(),
            observations: Vec::new(),
            weights: Some(Vec::new()),
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of queried points `t`.
    pub fn round(&self) -> usize {
        self.points.len()
    }

    pub fn queried_points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.points.first() {
            Some(p) if p.len() != x.len() => Err(Error::dims(p.len(), x.len())),
            _ => Ok(()),
        }
    }

    fn cross(&self, x: &[f64]) -> Vec<f64> {
        self.points.iter().map(|p| self.kernel.eval(p, x)).collect()
    }

    /// Appends a query point. Observations are left untouched.
    pub fn add_point(&mut self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        let cross = self.cross(x);
        let corner = self.kernel.eval(x, x) + self.lambda;
        self.factor.extend_in_place(&cross, corner)?;
        self.points.push(x.to_vec());
        self.weights = None;
        Ok(())
    }

    /// Replaces the observation vector; its length must equal the number of
    /// queried points.
    pub fn set_observations(&mut self, ys: &[f64]) -> Result<()> {
        if ys.len() != self.points.len() {
            return Err(Error::dims(self.points.len(), ys.len()));
        }
        self.weights = Some(solve_spd(&self.factor, ys)?);
        self.observations = ys.to_vec();
        Ok(())
    }

    /// Appends one observation for the oldest query still lacking one.
    pub fn push_observation(&mut self, y: f64) -> Result<()> {
        if self.observations.len() >= self.points.len() {
            return Err(Error::dims(self.points.len(), self.observations.len() + 1));
        }
        self.observations.push(y);
        if self.observations.len() == self.points.len() {
            self.weights = Some(solve_spd(&self.factor, &self.observations)?);
        }
        Ok(())
    }

    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let w = self.weights.as_ref().ok_or(Error::ObservationsMissing {
            queried: self.points.len(),
            observed: self.observations.len(),
        })?;
        Ok(self
            .points
            .iter()
            .zip(w)
            .map(|(p, wi)| self.kernel.eval(p, x) * wi)
            .sum())
    }

    /// Mean the same queries would give under a different observation
    /// vector; the cached weights are not touched.
    pub fn mean_with(&self, x: &[f64], ys: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let w = solve_spd(&self.factor, ys)?;
        Ok(self
            .points
            .iter()
            .zip(&w)
            .map(|(p, wi)| self.kernel.eval(p, x) * wi)
            .sum())
    }

    pub fn variance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let v = self.factor.forward_solve(&self.cross(x))?;
        clip_variance(self.kernel.eval(x, x) - v.iter().map(|a| a * a).sum::<f64>())
    }

    pub fn std_dev(&self, x: &[f64]) -> Result<f64> {
        self.variance(x).map(f64::sqrt)
    }
}

/// Pooled posterior over the actions of a finite domain.
#[derive(Debug, Clone)]
pub struct GridPosterior {
    kernel: KernelSpec,
    lambda: f64,
    domain: Arc<ActionDomain>,
    prior_variance: Vec<f64>,
    // Distinct queried actions in first-query order.
    support: Vec<usize>,
    slot_of: Vec<Option<usize>>,
    query_counts: Vec<u32>,
    obs_counts: Vec<u32>,
    obs_sums: Vec<f64>,
    // k(support[s], x) for every domain action x, one row per support slot.
    cross_rows: Vec<Vec<f64>>,
    factor: SpdFactor,
    total_queries: usize,
    total_observations: usize,
    variances: Option<Vec<f64>>,
    means: Option<Vec<f64>>,
}

impl GridPosterior {
    pub fn new(kernel: KernelSpec, lambda: f64, domain: Arc<ActionDomain>) -> Result<Self> {
        kernel.validate()?;
        check_lambda(lambda)?;
        let n = domain.len();
        let prior_variance = domain.points().iter().map(|p| kernel.eval(p, p)).collect();
        Ok(Self {
            kernel,
            lambda,
            domain,
            prior_variance,
            support: Vec::new(),
            slot_of: vec![None; n],
            query_counts: Vec::new(),
            obs_counts: Vec::new(),
            obs_sums: Vec::new(),
            cross_rows: Vec::new(),
            factor: SpdFactor::empty(),
            total_queries: 0,
            total_observations: 0,
            variances: None,
            means: None,
        })
    }

    /// Back to the prior, keeping kernel, λ and domain.
    pub fn reset(&mut self) {
        self.support.clear();
        self.slot_of.iter_mut().for_each(|s| *s = None);
        self.query_counts.clear();
        self.obs_counts.clear();
        self.obs_sums.clear();
        self.cross_rows.clear();
        self.factor = SpdFactor::empty();
        self.total_queries = 0;
        self.total_observations = 0;
        self.variances = None;
        self.means = None;
    }

    pub fn domain(&self) -> &Arc<ActionDomain> {
        &self.domain
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Total number of queries `t`, repeats included.
    pub fn round(&self) -> usize {
        self.total_queries
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn jitter_applied(&self) -> f64 {
        self.factor.jitter_applied()
    }

    fn check_index(&self, action: usize) -> Result<()> {
        if action < self.domain.len() {
            Ok(())
        } else {
            Err(Error::invalid(
                "action",
                format!("{action} outside a domain of {}", self.domain.len()),
            ))
        }
    }

    /// Registers a query of `action` (variance-only update).
    pub fn add_query(&mut self, action: usize) -> Result<()> {
        self.check_index(action)?;
        match self.slot_of[action] {
            Some(slot) => {
                self.query_counts[slot] += 1;
                self.refactor()?;
            }
            None => {
                let slot = self.support.len();
                let row: Vec<f64> = {
                    let p = self.domain.point(action);
                    self.domain.points().iter().map(|q| self.kernel.eval(p, q)).collect()
                };
                let cross: Vec<f64> = self.support.iter().map(|&s| row[s]).collect();
                let corner = self.prior_variance[action] + self.lambda;
                self.factor = extend_factor(&self.factor, &cross, corner)?;
                self.support.push(action);
                self.slot_of[action] = Some(slot);
                self.query_counts.push(1);
                self.obs_counts.push(0);
                self.obs_sums.push(0.0);
                self.cross_rows.push(row);
            }
        }
        self.total_queries += 1;
        self.variances = None;
        self.means = None;
        Ok(())
    }

    /// Attaches an observation to a previously queried action.
    pub fn add_observation(&mut self, action: usize, y: f64) -> Result<()> {
        self.check_index(action)?;
        let slot = self.slot_of[action]
            .ok_or_else(|| Error::invalid("action", format!("{action} observed before being queried")))?;
        if self.obs_counts[slot] >= self.query_counts[slot] {
            return Err(Error::invalid(
                "action",
                format!("{action} has more observations than queries"),
            ));
        }
        self.obs_counts[slot] += 1;
        self.obs_sums[slot] += y;
        self.total_observations += 1;
        self.means = None;
        Ok(())
    }

    /// Query and observation in one step.
    pub fn add_observed(&mut self, action: usize, y: f64) -> Result<()> {
        self.add_query(action)?;
        self.add_observation(action, y)
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.support.len();
        let mut sys = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let v = self.cross_rows[i][self.support[j]];
                sys[i][j] = v;
                sys[j][i] = v;
            }
            sys[i][i] += self.lambda / f64::from(self.query_counts[i]);
        }
        self.factor = cholesky_factor(&sys, DEFAULT_JITTER)?;
        Ok(())
    }

    fn cross_column(&self, action: usize) -> Vec<f64> {
        self.cross_rows.iter().map(|row| row[action]).collect()
    }

    /// Posterior variances of every domain action.
    pub fn variances(&mut self) -> Result<&[f64]> {
        if self.variances.is_none() {
            let vars = (0..self.domain.len())
                .map(|a| self.compute_variance(a))
                .collect::<Result<Vec<_>>>()?;
            self.variances = Some(vars);
        }
        Ok(self.variances.as_deref().unwrap())
    }

    fn compute_variance(&self, action: usize) -> Result<f64> {
        let v = self.factor.forward_solve(&self.cross_column(action))?;
        clip_variance(self.prior_variance[action] - v.iter().map(|a| a * a).sum::<f64>())
    }

    pub fn variance(&self, action: usize) -> Result<f64> {
        self.check_index(action)?;
        match &self.variances {
            Some(v) => Ok(v[action]),
            None => self.compute_variance(action),
        }
    }

    /// Posterior means of every domain action. Requires one observation per
    /// query.
    pub fn means(&mut self) -> Result<&[f64]> {
        if self.means.is_none() {
            if self.total_observations != self.total_queries {
                return Err(Error::ObservationsMissing {
                    queried: self.total_queries,
                    observed: self.total_observations,
                });
            }
            let averages: Vec<f64> = self
                .obs_sums
                .iter()
                .zip(&self.query_counts)
                .map(|(s, &n)| s / f64::from(n))
                .collect();
            let w = solve_spd(&self.factor, &averages)?;
            let means = (0..self.domain.len())
                .map(|a| self.cross_rows.iter().zip(&w).map(|(row, wi)| row[a] * wi).sum())
                .collect();
            self.means = Some(means);
        }
        Ok(self.means.as_deref().unwrap())
    }

    /// Variance at an arbitrary point (not necessarily in the domain).
    pub fn variance_at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain.dimension() {
            return Err(Error::dims(self.domain.dimension(), x.len()));
        }
        let cross: Vec<f64> = self
            .support
            .iter()
            .map(|&s| self.kernel.eval(self.domain.point(s), x))
            .collect();
        let v = self.factor.forward_solve(&cross)?;
        clip_variance(self.kernel.eval(x, x) - v.iter().map(|a| a * a).sum::<f64>())
    }
}
