//! Maximum information gain `γ_t(k, D) = max_{|S| = t} ½ ln det(I + K_S / λ)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp_posterior::GridPosterior;
use crate::kernels::{gram_matrix, ActionDomain, KernelSpec};
use crate::numerics::{cholesky_factor, DEFAULT_JITTER};

/// Largest domain accepted by [`gamma_exact`].
pub const EXACT_MAX_DOMAIN: usize = 12;
/// Largest `t` accepted by [`gamma_exact`].
pub const EXACT_MAX_T: usize = 8;

/// `(1 − 1/e)`, the greedy approximation ratio for monotone submodular
/// maximization.
pub fn greedy_ratio() -> f64 {
    1.0 - (-1.0f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMethod {
    ExactBruteForce,
    Greedy,
}

impl GammaMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GammaMethod::ExactBruteForce => "exact_brute_force",
            GammaMethod::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: f64,
    pub method: GammaMethod,
    pub t: usize,
    pub lambda: f64,
}

/// `½ ln det(I + K / λ)` for the given points.
pub fn information_of(kernel: &KernelSpec, points: &[Vec<f64>], lambda: f64) -> Result<f64> {
    if points.is_empty() {
        return Ok(0.0);
    }
    let mut m = gram_matrix(kernel, points)?;
    for (i, row) in m.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= lambda;
        }
        row[i] += 1.0;
    }
    Ok(0.5 * cholesky_factor(&m, DEFAULT_JITTER)?.log_det())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("lambda", format!("{lambda} must be positive")))
    }
}

fn check_exact_size(domain: &ActionDomain, t: usize) -> Result<()> {
    if domain.len() > EXACT_MAX_DOMAIN || t > EXACT_MAX_T {
        return Err(Error::InstanceTooLarge(format!(
            "|D| = {}, t = {t} (limits {EXACT_MAX_DOMAIN}, {EXACT_MAX_T})",
            domain.len()
        )));
    }
    Ok(())
}

/// Largest information over index sequences `s_1 ≤ … ≤ s_t` (strictly
/// increasing when `repeats` is false), visited in lexicographic order.
fn enumerate_max(kernel: &KernelSpec, domain: &ActionDomain, t: usize, lambda: f64, repeats: bool) -> Result<f64> {
    let n = domain.len();
    if t == 0 {
        return Ok(0.0);
    }
    let step = usize::from(!repeats);
    let top = |i: usize| if repeats { n - 1 } else { n - t + i };
    let mut seq: Vec<usize> = (0..t).map(|i| i * step).collect();
    let mut best = 0.0f64;
    loop {
        let pts: Vec<Vec<f64>> = seq.iter().map(|&i| domain.point(i).to_vec()).collect();
        best = best.max(information_of(kernel, &pts, lambda)?);
        let mut i = t;
        while i > 0 && seq[i - 1] == top(i - 1) {
            i -= 1;
        }
        if i == 0 {
            return Ok(best);
        }
        seq[i - 1] += 1;
        for j in i..t {
            seq[j] = seq[j - 1] + step;
        }
    }
}

/// Exhaustive maximum over all multisets of `t` domain points.
///
/// Repeated queries can collect more information than any set of distinct
/// points, and both the greedy picks and the learners repeat points, so the
/// maximum is taken over multisets.
pub fn gamma_exact(kernel: &KernelSpec, domain: &ActionDomain, t: usize, lambda: f64) -> Result<GammaEstimate> {
    check_lambda(lambda)?;
    check_exact_size(domain, t)?;
    Ok(GammaEstimate {
        value: enumerate_max(kernel, domain, t, lambda, true)?,
        method: GammaMethod::ExactBruteForce,
        t,
        lambda,
    })
}

/// Exhaustive maximum over `t`-subsets of distinct domain points.
pub fn gamma_exact_distinct(
    kernel: &KernelSpec,
    domain: &ActionDomain,
    t: usize,
    lambda: f64,
) -> Result<GammaEstimate> {
    check_lambda(lambda)?;
    check_exact_size(domain, t)?;
    if t > domain.len() {
        return Err(Error::invalid(
            "t",
            format!("{t} exceeds the {} distinct domain points", domain.len()),
        ));
    }
    Ok(GammaEstimate {
        value: enumerate_max(kernel, domain, t, lambda, false)?,
        method: GammaMethod::ExactBruteForce,
        t,
        lambda,
    })
}

/// Greedy sequence of `t` maximum-variance picks (repeats allowed, ties to the
/// lowest index) together with the information it collects.
pub fn greedy_sequence(kernel: &KernelSpec, domain: &ActionDomain, t: usize, lambda: f64) -> Result<(Vec<usize>, f64)> {
    check_lambda(lambda)?;
    let mut post = GridPosterior::new(*kernel, lambda, Arc::new(domain.clone()))?;
    let mut picks = Vec::with_capacity(t);
    let mut info = 0.0;
    for _ in 0..t {
        let vars = post.variances()?;
        let (best, var) = argmax_first(vars);
        info += 0.5 * (var / lambda).ln_1p();
        post.add_query(best)?;
        picks.push(best);
    }
    Ok((picks, info))
}

fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

pub fn gamma_greedy(kernel: &KernelSpec, domain: &ActionDomain, t: usize, lambda: f64) -> Result<GammaEstimate> {
    let (_, value) = greedy_sequence(kernel, domain, t, lambda)?;
    Ok(GammaEstimate {
        value,
        method: GammaMethod::Greedy,
        t,
        lambda,
    })
}

/// Greedy value inflated by `(1 − 1/e)⁻¹`; an upper surrogate for `γ_t`.
pub fn gamma_upper_estimate(kernel: &KernelSpec, domain: &ActionDomain, t: usize, lambda: f64) -> Result<f64> {
    Ok(upper_from_greedy(gamma_greedy(kernel, domain, t, lambda)?.value))
}

pub fn upper_from_greedy(greedy_value: f64) -> f64 {
    greedy_value / greedy_ratio()
}
