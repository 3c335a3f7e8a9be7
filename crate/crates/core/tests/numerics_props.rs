mod common;

use kbandit::numerics::{cholesky_factor, extend_factor, solve_spd, SpdFactor};
use kbandit::{Error, SplitMix64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random_spd(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 })
                .collect()
        })
        .collect()
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn two_hundred_random_spd_matrices_reconstruct() {
    for seed in 0..200 {
        let n = 1 + (seed as usize % 24);
        let a = random_spd(n, seed);
        let f = cholesky_factor(&a, 1e-10).unwrap();
        assert_eq!(f.jitter_applied(), 0.0);
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_abs_diff(&f.reconstruct(), &a) <= 1e-12 * scale.max(1.0) * n as f64);

        let chol = DMatrix::from_fn(n, n, |i, j| a[i][j]).cholesky().unwrap();
        let ld: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        assert!((f.log_det() - ld).abs() < 1e-9 * ld.abs().max(1.0));
    }
}

#[test]
fn nonsymmetric_and_ragged_inputs_rejected() {
    assert!(cholesky_factor(&[vec![1.0, 0.5], vec![0.4, 1.0]], 1e-10).is_err());
    assert!(matches!(
        cholesky_factor(&[vec![1.0, 0.0], vec![0.0]], 1e-10),
        Err(Error::DimensionMismatch { .. }) | Err(Error::InvalidParameter { .. })
    ));
    assert!(matches!(
        cholesky_factor(&[vec![-1.0]], 1e-10),
        Err(Error::NotFactorizable { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extension_matches_direct_factorization(n in 2usize..20, seed in any::<u64>()) {
        let a = random_spd(n, seed);
        let head: Vec<Vec<f64>> = a[..n - 1].iter().map(|r| r[..n - 1].to_vec()).collect();
        let f = cholesky_factor(&head, 1e-10).unwrap();
        let ext = extend_factor(&f, &a[n - 1][..n - 1], a[n - 1][n - 1]).unwrap();
        let direct = cholesky_factor(&a, 1e-10).unwrap();
        for i in 0..n {
            for j in 0..=i {
                prop_assert!((ext.get(i, j) - direct.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn solve_residual_is_small(n in 1usize..24, seed in any::<u64>()) {
        let a = random_spd(n, seed);
        let mut rng = SplitMix64::new(seed ^ 1);
        let b: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let x = solve_spd(&cholesky_factor(&a, 1e-10).unwrap(), &b).unwrap();
        let oracle = DMatrix::from_fn(n, n, |i, j| a[i][j]).lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a[i][j] * x[j]).sum::<f64>() - b[i];
            prop_assert!(r.abs() < 1e-8);
            prop_assert!((x[i] - oracle[i]).abs() < 1e-6 * oracle[i].abs().max(1.0));
        }
    }

    #[test]
    fn incremental_growth_from_empty(n in 1usize..16, seed in any::<u64>()) {
        let a = random_spd(n, seed);
        let mut f = SpdFactor::empty();
        for k in 0..n {
            f.extend_in_place(&a[k][..k], a[k][k]).unwrap();
        }
        prop_assert!(max_abs_diff(&f.reconstruct(), &a) < 1e-10 * n as f64);
    }
}
