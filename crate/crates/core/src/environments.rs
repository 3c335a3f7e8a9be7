//! Misspecified bandit environments and regret accounting.
//!
//! The true reward is `f* = f̃ + m` where `f̃` lies in the learner's RKHS ball
//! and `‖m‖_∞ ≤ ε`. Observations are `f*(x) + η` with Gaussian `η`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, ActionDomain, KernelSpec};
use crate::numerics::{cholesky_factor, DEFAULT_JITTER, PIVOT_FLOOR};
use crate::rng::{mix64, SplitMix64};

/// Jitter above which synthesized centers count as degenerate.
pub const MAX_SYNTHESIS_JITTER: f64 = 1e-6;

/// `x ↦ Σ αᵢ k(zᵢ, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsFunction {
    kernel: KernelSpec,
    centers: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    norm: f64,
}

impl RkhsFunction {
    pub fn new(kernel: KernelSpec, centers: Vec<Vec<f64>>, coefficients: Vec<f64>) -> Result<Self> {
        if centers.len() != coefficients.len() {
            return Err(Error::dims(centers.len(), coefficients.len()));
        }
        let norm = rkhs_norm(&kernel, &centers, &coefficients)?;
        Ok(Self {
            kernel,
            centers,
            coefficients,
            norm,
        })
    }

    pub fn zero(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            centers: Vec::new(),
            coefficients: Vec::new(),
            norm: 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.coefficients)
            .map(|(z, a)| a * self.kernel.eval(z, x))
            .sum()
    }

    /// Cached `√(αᵀ K_z α)`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn recompute_norm(&self) -> Result<f64> {
        rkhs_norm(&self.kernel, &self.centers, &self.coefficients)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `c · f`, with norm `|c| · ‖f‖`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            kernel: self.kernel,
            centers: self.centers.clone(),
            coefficients: self.coefficients.iter().map(|a| a * c).collect(),
            norm: self.norm * c.abs(),
        }
    }
}

fn rkhs_norm(kernel: &KernelSpec, centers: &[Vec<f64>], coefficients: &[f64]) -> Result<f64> {
    let g = gram_matrix(kernel, centers)?;
    let quad: f64 = g
        .iter()
        .zip(coefficients)
        .map(|(row, ai)| ai * row.iter().zip(coefficients).map(|(k, aj)| k * aj).sum::<f64>())
        .sum();
    Ok(quad.max(0.0).sqrt())
}

/// Random element of the RKHS ball boundary: `n_centers` distinct domain
/// points, standard normal coefficients, rescaled to `‖f‖_k = target_norm`.
pub fn synthesize_rkhs(
    kernel: &KernelSpec,
    domain: &ActionDomain,
    n_centers: usize,
    target_norm: f64,
    seed: u64,
) -> Result<RkhsFunction> {
    if n_centers == 0 || n_centers > domain.len() {
        return Err(Error::invalid(
            "n_centers",
            format!("{n_centers} not in 1..={}", domain.len()),
        ));
    }
    if !(target_norm > 0.0 && target_norm.is_finite()) {
        return Err(Error::invalid("target_norm", format!("{target_norm} must be positive")));
    }
    let mut rng = SplitMix64::new(seed);
    let idx = rng.sample_indices(domain.len(), n_centers);
    let centers: Vec<Vec<f64>> = idx.iter().map(|&i| domain.point(i).to_vec()).collect();
    let factor = match cholesky_factor(&gram_matrix(kernel, &centers)?, DEFAULT_JITTER) {
        Err(Error::NotFactorizable { max_jitter }) => return Err(Error::DegenerateGram { jitter: max_jitter }),
        other => other?,
    };
    // A pivot comparable to the jitter means the centers are numerically coincident.
    let min_pivot = factor.diagonal().fold(f64::INFINITY, |m, d| m.min(d * d));
    if min_pivot <= PIVOT_FLOOR.max(10.0 * factor.jitter_applied()) {
        return Err(Error::DegenerateGram {
            jitter: factor.jitter_applied(),
        });
    }
    if factor.jitter_applied() > MAX_SYNTHESIS_JITTER {
        return Err(Error::DegenerateGram {
            jitter: factor.jitter_applied(),
        });
    }
    let raw: Vec<f64> = (0..n_centers).map(|_| rng.standard_normal()).collect();
    let raw_norm = rkhs_norm(kernel, &centers, &raw)?;
    if raw_norm == 0.0 {
        return Err(Error::DegenerateGram { jitter: 0.0 });
    }
    let coefficients = raw.iter().map(|a| a * target_norm / raw_norm).collect();
    Ok(RkhsFunction {
        kernel: *kernel,
        centers,
        coefficients,
        norm: target_norm,
    })
}

/// Shape of `m = f* − f̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Misspecification {
    None,
    /// `m(x) = ε · sin(2π ⟨ω, x⟩ + φ)`.
    BoundedSinusoid {
        amplitude: f64,
        frequency: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    /// `m(x) = ±ε`, the sign a seeded hash of the coordinates of `x`.
    SignPattern {
        amplitude: f64,
        seed: u64,
    },
    /// `f*` is zero everywhere except `height` at `location`.
    Spike {
        height: f64,
        location: Vec<f64>,
    },
    /// `m(x) = −ε` at `location`, zero elsewhere.
    PointPenalty {
        amplitude: f64,
        location: Vec<f64>,
    },
}

impl Misspecification {
    /// The sup-norm bound this descriptor promises.
    pub fn declared_amplitude(&self) -> f64 {
        match self {
            Misspecification::None => 0.0,
            Misspecification::BoundedSinusoid { amplitude, .. }
            | Misspecification::SignPattern { amplitude, .. }
            | Misspecification::PointPenalty { amplitude, .. } => *amplitude,
            Misspecification::Spike { height, .. } => *height,
        }
    }
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() < crate::kernels::MIN_POINT_GAP)
}

fn coordinate_hash(x: &[f64], seed: u64) -> u64 {
    x.iter().fold(mix64(seed), |h, v| {
        // +0.0 and -0.0 hash alike.
        let bits = if *v == 0.0 { 0 } else { v.to_bits() };
        mix64(h ^ bits)
    })
}

/// `f* = f̃ + m`, where `f̃(x) = scale · g(x) + offset` for an RKHS member `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MisspecifiedObjective {
    best_in_class: RkhsFunction,
    scale: f64,
    offset: f64,
    misspec: Misspecification,
    eps_true: f64,
}

impl MisspecifiedObjective {
    /// Builds the objective and measures `ε = max |m|` over `support` (all
    /// points the environment can ever be evaluated at). Fails if that
    /// exceeds the descriptor's declared amplitude.
    pub fn new(best_in_class: RkhsFunction, misspec: Misspecification, support: &[Vec<f64>]) -> Result<Self> {
        Self::with_affine(best_in_class, 1.0, 0.0, misspec, support)
    }

    pub fn with_affine(
        best_in_class: RkhsFunction,
        scale: f64,
        offset: f64,
        misspec: Misspecification,
        support: &[Vec<f64>],
    ) -> Result<Self> {
        match &misspec {
            Misspecification::BoundedSinusoid {
                amplitude, frequency, ..
            } => {
                if let Some(p) = support.first() {
                    if frequency.len() != p.len() {
                        return Err(Error::dims(p.len(), frequency.len()));
                    }
                }
                if !(*amplitude >= 0.0) {
                    return Err(Error::invalid("amplitude", "must be nonnegative"));
                }
            }
            Misspecification::SignPattern { amplitude, .. }
            | Misspecification::PointPenalty { amplitude, .. }
            | Misspecification::Spike { height: amplitude, .. } => {
                if !(*amplitude >= 0.0) {
                    return Err(Error::invalid("amplitude", "must be nonnegative"));
                }
            }
            Misspecification::None => {}
        }
        let mut obj = Self {
            best_in_class,
            scale,
            offset,
            misspec,
            eps_true: 0.0,
        };
        let eps = support
            .iter()
            .map(|x| obj.misspecification(x).abs())
            .fold(0.0, f64::max);
        let declared = obj.misspec.declared_amplitude();
        if eps > declared + 1e-12 {
            return Err(Error::invalid(
                "misspec",
                format!("measured ‖m‖∞ = {eps} exceeds declared {declared}"),
            ));
        }
        obj.eps_true = eps;
        Ok(obj)
    }

    pub fn f_tilde(&self, x: &[f64]) -> f64 {
        self.scale * self.best_in_class.value(x) + self.offset
    }

    pub fn misspecification(&self, x: &[f64]) -> f64 {
        match &self.misspec {
            Misspecification::None => 0.0,
            Misspecification::BoundedSinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                let arg: f64 = frequency.iter().zip(x).map(|(w, v)| w * v).sum();
                amplitude * (2.0 * std::f64::consts::PI * arg + phase).sin()
            }
            Misspecification::SignPattern { amplitude, seed } => {
                if coordinate_hash(x, *seed) & 1 == 0 {
                    *amplitude
                } else {
                    -amplitude
                }
            }
            Misspecification::Spike { .. } => self.f_star(x) - self.f_tilde(x),
            Misspecification::PointPenalty { amplitude, location } => {
                if same_point(x, location) {
                    -amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn f_star(&self, x: &[f64]) -> f64 {
        match &self.misspec {
            Misspecification::Spike { height, location } => {
                if same_point(x, location) {
                    *height
                } else {
                    0.0
                }
            }
            _ => self.f_tilde(x) + self.misspecification(x),
        }
    }

    /// Measured `‖m‖_∞` over the construction support.
    pub fn eps_true(&self) -> f64 {
        self.eps_true
    }

    pub fn misspec(&self) -> &Misspecification {
        &self.misspec
    }

    pub fn best_in_class(&self) -> &RkhsFunction {
        &self.best_in_class
    }

    /// `(scale, offset)` of the affine map applied to the RKHS member.
    pub fn affine(&self) -> (f64, f64) {
        (self.scale, self.offset)
    }

    /// RKHS norm of `f̃` when the offset is zero.
    pub fn tilde_norm(&self) -> Option<f64> {
        (self.offset == 0.0).then(|| self.best_in_class.norm() * self.scale.abs())
    }
}

/// Bump-plus-spike construction for the `Ω(εT)` lower bound.
///
/// `f̃ = 2ζ · k_SE(center, ·)` takes values in `[0, 2ζ]`, has RKHS norm `2ζ`
/// and satisfies `f̃ ≥ ζ` on the ball `W` of radius `l √(2 ln 2)` around the
/// center. The true function is zero except for the value `2ζ` at
/// `spike_location`, which must lie in `W`.
pub fn spike_objective(
    zeta: f64,
    center: &[f64],
    lengthscale: f64,
    spike_location: &[f64],
    support: &[Vec<f64>],
) -> Result<MisspecifiedObjective> {
    if !(zeta > 0.0) {
        return Err(Error::invalid("zeta", "must be positive"));
    }
    if center.len() != spike_location.len() {
        return Err(Error::dims(center.len(), spike_location.len()));
    }
    let kernel = KernelSpec::squared_exponential(lengthscale)?;
    let bump = RkhsFunction::new(kernel, vec![center.to_vec()], vec![2.0 * zeta])?;
    if bump.value(spike_location) < zeta {
        return Err(Error::invalid(
            "spike_location",
            "must lie in the region where the bump is at least ζ",
        ));
    }
    let mut pts = support.to_vec();
    pts.push(spike_location.to_vec());
    MisspecifiedObjective::new(
        bump,
        Misspecification::Spike {
            height: 2.0 * zeta,
            location: spike_location.to_vec(),
        },
        &pts,
    )
}

/// Zero-mean Gaussian noise of standard deviation `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub scale: f64,
}

impl NoiseModel {
    pub fn gaussian(scale: f64) -> Result<Self> {
        if scale >= 0.0 && scale.is_finite() {
            Ok(Self { scale })
        } else {
            Err(Error::invalid("noise", format!("{scale} must be nonnegative")))
        }
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.scale * rng.standard_normal()
        }
    }
}

/// `f*(x) + η`.
pub fn observe(obj: &MisspecifiedObjective, noise: &NoiseModel, x: &[f64], rng: &mut SplitMix64) -> f64 {
    obj.f_star(x) + noise.sample(rng)
}

/// `(f*(x) + η, f̃(x) + η)` sharing one noise draw.
pub fn observe_paired(obj: &MisspecifiedObjective, noise: &NoiseModel, x: &[f64], rng: &mut SplitMix64) -> (f64, f64) {
    let eta = noise.sample(rng);
    (obj.f_star(x) + eta, obj.f_tilde(x) + eta)
}

/// I.i.d. distribution over action subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextDistribution {
    pool: Vec<Vec<usize>>,
    cumulative: Vec<f64>,
}

impl ContextDistribution {
    pub fn new(pool: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::invalid("pool", "is empty"));
        }
        if pool.len() != weights.len() {
            return Err(Error::dims(pool.len(), weights.len()));
        }
        if pool.iter().any(Vec::is_empty) {
            return Err(Error::invalid("pool", "contains an empty subset"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("weights", "must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights", format!("sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { pool, cumulative })
    }

    pub fn uniform(pool: Vec<Vec<usize>>) -> Result<Self> {
        let n = pool.len();
        let mut weights = vec![1.0 / n.max(1) as f64; n];
        // Absorb rounding so the weights sum to one exactly enough.
        if let Some(last) = weights.last_mut() {
            *last = 1.0 - (n - 1) as f64 / n as f64;
        }
        Self::new(pool, weights)
    }

    /// `pool_size` random subsets of `0..domain_len`, each of `subset_size`
    /// distinct sorted indices, uniformly weighted.
    pub fn random_pool(domain_len: usize, pool_size: usize, subset_size: usize, seed: u64) -> Result<Self> {
        if subset_size == 0 || subset_size > domain_len {
            return Err(Error::invalid(
                "subset_size",
                format!("{subset_size} not in 1..={domain_len}"),
            ));
        }
        let mut rng = SplitMix64::new(seed);
        let pool = (0..pool_size)
            .map(|_| {
                let mut s = rng.sample_indices(domain_len, subset_size);
                s.sort_unstable();
                s
            })
            .collect();
        Self::uniform(pool)
    }

    pub fn pool(&self) -> &[Vec<usize>] {
        &self.pool
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|c| {
                let w = c - prev;
                prev = *c;
                w
            })
            .collect()
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> &[usize] {
        let u = rng.next_f64() * self.cumulative[self.cumulative.len() - 1];
        let i = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.pool.len() - 1);
        &self.pool[i]
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// An objective bound to a learner-visible domain.
///
/// `hidden_points` belong to the true action space but are never offered to
/// the learner; they still count towards the optimum used for regret.
#[derive(Debug, Clone)]
pub struct Environment {
    domain: Arc<ActionDomain>,
    objective: MisspecifiedObjective,
    noise: NoiseModel,
    f_star: Vec<f64>,
    f_tilde: Vec<f64>,
    hidden_best_star: Option<f64>,
    hidden_best_tilde: Option<f64>,
}

impl Environment {
    pub fn new(
        domain: Arc<ActionDomain>,
        objective: MisspecifiedObjective,
        noise: NoiseModel,
        hidden_points: &[Vec<f64>],
    ) -> Result<Self> {
        for p in hidden_points {
            if p.len() != domain.dimension() {
                return Err(Error::dims(domain.dimension(), p.len()));
            }
        }
        let f_star = domain.points().iter().map(|x| objective.f_star(x)).collect();
        let f_tilde = domain.points().iter().map(|x| objective.f_tilde(x)).collect();
        let max_of = |f: &dyn Fn(&[f64]) -> f64| hidden_points.iter().map(|x| f(x)).reduce(f64::max);
        let hidden_best_star = max_of(&|x| objective.f_star(x));
        let hidden_best_tilde = max_of(&|x| objective.f_tilde(x));
        Ok(Self {
            domain,
            objective,
            noise,
            f_star,
            f_tilde,
            hidden_best_star,
            hidden_best_tilde,
        })
    }

    pub fn domain(&self) -> &Arc<ActionDomain> {
        &self.domain
    }

    pub fn objective(&self) -> &MisspecifiedObjective {
        &self.objective
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn f_star_values(&self) -> &[f64] {
        &self.f_star
    }

    pub fn f_tilde_values(&self) -> &[f64] {
        &self.f_tilde
    }

    pub fn eps_true(&self) -> f64 {
        self.objective.eps_true()
    }

    pub fn observe(&self, action: usize, rng: &mut SplitMix64) -> f64 {
        self.f_star[action] + self.noise.sample(rng)
    }

    /// `(y*, y)`: the real observation and the one `f̃` would have produced
    /// under the same noise draw.
    pub fn observe_paired(&self, action: usize, rng: &mut SplitMix64) -> (f64, f64) {
        let eta = self.noise.sample(rng);
        (self.f_star[action] + eta, self.f_tilde[action] + eta)
    }

    /// `max f*` and `max f̃` over the offered set plus hidden points.
    pub fn optimum(&self, action_set: &[usize]) -> (f64, f64) {
        let mut star = self.hidden_best_star.unwrap_or(f64::NEG_INFINITY);
        let mut tilde = self.hidden_best_tilde.unwrap_or(f64::NEG_INFINITY);
        for &a in action_set {
            star = star.max(self.f_star[a]);
            tilde = tilde.max(self.f_tilde[a]);
        }
        (star, tilde)
    }

    /// Domain index maximizing `f̃` (lowest index on ties).
    pub fn tilde_argmax(&self) -> usize {
        argmax(&self.f_tilde)
    }

    pub fn star_argmax(&self) -> usize {
        argmax(&self.f_star)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub action_index: usize,
    pub reward: f64,
    pub inst_regret_star: f64,
    pub inst_regret_tilde: f64,
    pub cum_regret_star: f64,
    pub cum_regret_tilde: f64,
}

/// Per-round regret against `f*` and against `f̃`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTrace {
    records: Vec<RoundRecord>,
    star: CompensatedSum,
    tilde: CompensatedSum,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(rounds: usize) -> Self {
        Self {
            records: Vec::with_capacity(rounds),
            ..Self::default()
        }
    }

    pub fn record_round(&mut self, env: &Environment, action_set: &[usize], chosen: usize, reward: f64) -> Result<()> {
        if !action_set.contains(&chosen) {
            return Err(Error::ActionNotInSet(chosen));
        }
        let (best_star, best_tilde) = env.optimum(action_set);
        let r_star = best_star - env.f_star[chosen];
        let r_tilde = best_tilde - env.f_tilde[chosen];
        self.star.add(r_star);
        self.tilde.add(r_tilde);
        self.records.push(RoundRecord {
            round: self.records.len() + 1,
            action_index: chosen,
            reward,
            inst_regret_star: r_star,
            inst_regret_tilde: r_tilde,
            cum_regret_star: self.star.value(),
            cum_regret_tilde: self.tilde.value(),
        });
        Ok(())
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `R*_T`.
    pub fn cumulative_star(&self) -> f64 {
        self.star.value()
    }

    /// `R_T`.
    pub fn cumulative_tilde(&self) -> f64 {
        self.tilde.value()
    }

    /// `R*_t` after `t` rounds (`t >= 1`).
    pub fn cumulative_star_at(&self, t: usize) -> f64 {
        self.records[t - 1].cum_regret_star
    }
}
