//! Confidence radii for RKHS functions under sub-Gaussian noise.
//!
//! ```text
//! β_t = (σ / √λ) · √(2 ln(1/δ) + Σ_{t'<t} ln(1 + σ²_{t'−1}(x_{t'}) / λ)) + B
//! ```
//!
//! The running sum is `ln det(I + K_{t−1} / λ)`, i.e. twice the information
//! gathered by the queries so far, so it is maintained online from the
//! predictive variance of each query taken just before the query is added.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    /// RKHS norm bound `B` of the hypothesis class.
    pub norm_bound: f64,
    /// Sub-Gaussian noise scale `σ`.
    pub noise_scale: f64,
    pub lambda: f64,
    /// Failure probability `δ`.
    pub delta: f64,
}

impl ConfidenceParams {
    pub fn new(norm_bound: f64, noise_scale: f64, lambda: f64, delta: f64) -> Result<Self> {
        let p = Self {
            norm_bound,
            noise_scale,
            lambda,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} must be positive")))
            }
        };
        positive("norm_bound", self.norm_bound)?;
        positive("noise_scale", self.noise_scale)?;
        positive("lambda", self.lambda)?;
        positive("delta", self.delta)?;
        if self.delta >= 1.0 {
            return Err(Error::invalid("delta", format!("{} must be < 1", self.delta)));
        }
        Ok(())
    }

    /// Same parameters with `δ` replaced.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.norm_bound, self.noise_scale, self.lambda, delta)
    }

    /// Radius for a given value of the log-determinant sum.
    pub fn radius(&self, log_det_sum: f64) -> f64 {
        (self.noise_scale / self.lambda.sqrt()) * (2.0 * (1.0 / self.delta).ln() + log_det_sum).sqrt() + self.norm_bound
    }

    /// Radius written with an information gain `γ`, where the log-determinant
    /// sum is replaced by `2γ`.
    pub fn radius_from_gamma(&self, gamma: f64) -> f64 {
        (self.noise_scale / self.lambda.sqrt()) * (2.0 * (1.0 / self.delta).ln() + 2.0 * gamma).sqrt() + self.norm_bound
    }
}

/// Online `β_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaAccumulator {
    params: ConfidenceParams,
    log_det_sum: f64,
    rounds_seen: usize,
}

impl BetaAccumulator {
    pub fn new(params: ConfidenceParams) -> Self {
        Self {
            params,
            log_det_sum: 0.0,
            rounds_seen: 0,
        }
    }

    /// Folds in the predictive variance of the point just queried, taken
    /// before that point enters the posterior.
    pub fn record_round(&mut self, predictive_variance: f64) -> Result<()> {
        if !(predictive_variance >= 0.0) {
            return Err(Error::invalid(
                "predictive_variance",
                format!("{predictive_variance} is negative"),
            ));
        }
        self.log_det_sum += (predictive_variance / self.params.lambda).ln_1p();
        self.rounds_seen += 1;
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.params.radius(self.log_det_sum)
    }

    pub fn log_det_sum(&self) -> f64 {
        self.log_det_sum
    }

    pub fn rounds_seen(&self) -> usize {
        self.rounds_seen
    }

    pub fn params(&self) -> &ConfidenceParams {
        &self.params
    }

    pub fn reset(&mut self) {
        self.log_det_sum = 0.0;
        self.rounds_seen = 0;
    }
}

/// Enlargement `ε √t / √λ` added to `β_t` under misspecification `ε`.
pub fn enlarged_bonus(eps: f64, t: usize, lambda: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::invalid("eps", format!("{eps} is negative")));
    }
    if t == 0 {
        return Err(Error::invalid("t", "rounds start at 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("{lambda} must be positive")));
    }
    Ok(eps * (t as f64).sqrt() / lambda.sqrt())
}
