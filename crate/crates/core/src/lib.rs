//! Gaussian-process bandit optimization under model misspecification.
//!
//! The learner models the unknown reward function with an RKHS of bounded
//! norm, while the true function may sit up to `ε` away from that class in
//! sup-norm. This crate provides
//!
//! * the numerical substrate ([`numerics`], [`kernels`], [`gp_posterior`]),
//! * confidence radii and information-gain estimates ([`confidence`],
//!   [`infogain`]),
//! * misspecified environments with regret accounting ([`environments`]),
//! * the learners: GP-UCB, enlarged-confidence GP-UCB, phased uncertainty
//!   sampling with elimination, and a regret-bound balancing master
//!   ([`algorithms`]),
//! * a seeded Monte Carlo harness with named scenarios ([`experiments`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algorithms;
pub mod confidence;
pub mod environments;
pub mod error;
pub mod experiments;
pub mod gp_posterior;
pub mod infogain;
pub mod kernels;
pub mod numerics;
pub mod rng;

pub use algorithms::{AlgorithmState, BanditAlgorithm};
pub use confidence::{BetaAccumulator, ConfidenceParams};
pub use environments::{Environment, Misspecification, MisspecifiedObjective, NoiseModel, RegretTrace, RkhsFunction};
pub use error::{Error, Result};
pub use gp_posterior::{GridPosterior, PosteriorState};
pub use infogain::{GammaEstimate, GammaMethod};
pub use kernels::{ActionDomain, KernelSpec, MaternNu};
pub use numerics::SpdFactor;
pub use rng::SplitMix64;
