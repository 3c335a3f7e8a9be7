#![allow(dead_code)]

use kbandit::{ActionDomain, KernelSpec, MaternNu, SplitMix64};
use nalgebra::{DMatrix, DVector};

pub fn random_kernel(rng: &mut SplitMix64) -> KernelSpec {
    let l = rng.uniform(0.1, 1.0);
    match rng.below(4) {
        0 => KernelSpec::squared_exponential(l).unwrap(),
        1 => KernelSpec::matern(l, MaternNu::Half).unwrap(),
        2 => KernelSpec::matern(l, MaternNu::ThreeHalves).unwrap(),
        _ => KernelSpec::matern(l, MaternNu::FiveHalves).unwrap(),
    }
}

pub fn random_points(rng: &mut SplitMix64, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.next_f64()).collect()).collect()
}

pub fn random_domain(rng: &mut SplitMix64, n: usize, d: usize) -> ActionDomain {
    ActionDomain::new(random_points(rng, n, d)).unwrap()
}

/// Posterior mean and variance at `x` from a dense LU solve of `(K + λI)`.
pub fn dense_posterior(kernel: &KernelSpec, points: &[Vec<f64>], ys: &[f64], lambda: f64, x: &[f64]) -> (f64, f64) {
    let t = points.len();
    if t == 0 {
        return (0.0, kernel.eval(x, x));
    }
    let k = DMatrix::from_fn(t, t, |i, j| {
        kernel.eval(&points[i], &points[j]) + if i == j { lambda } else { 0.0 }
    });
    let kx = DVector::from_iterator(t, points.iter().map(|p| kernel.eval(p, x)));
    let lu = k.lu();
    let alpha = lu.solve(&DVector::from_column_slice(ys)).unwrap();
    let v = lu.solve(&kx).unwrap();
    (kx.dot(&alpha), kernel.eval(x, x) - kx.dot(&v))
}

/// `½ ln det(I + K/λ)` via nalgebra's Cholesky.
pub fn dense_information(kernel: &KernelSpec, points: &[Vec<f64>], lambda: f64) -> f64 {
    let t = points.len();
    let m = DMatrix::from_fn(t, t, |i, j| {
        kernel.eval(&points[i], &points[j]) / lambda + if i == j { 1.0 } else { 0.0 }
    });
    let chol = m.cholesky().unwrap();
    chol.l().diagonal().iter().map(|d| d.ln()).sum()
}
