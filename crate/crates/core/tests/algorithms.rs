use std::sync::Arc;

use kbandit::algorithms::{
    inconsistent_bases, make_master_config, PhasedUncertaintySampling, RegretBalancingMaster, UcbLearner,
};
use kbandit::environments::synthesize_rkhs;
use kbandit::{
    ActionDomain, BanditAlgorithm, ConfidenceParams, Environment, KernelSpec, Misspecification, MisspecifiedObjective,
    NoiseModel, SplitMix64,
};

fn setup(seed: u64) -> (Arc<ActionDomain>, KernelSpec, Environment, ConfidenceParams) {
    let domain = Arc::new(ActionDomain::grid(1, 40, 0.0, 1.0).unwrap());
    let kernel = KernelSpec::squared_exponential(0.2).unwrap();
    let f = synthesize_rkhs(&kernel, &domain, 6, 1.0, seed).unwrap();
    let obj = MisspecifiedObjective::new(f, Misspecification::None, domain.points()).unwrap();
    let env = Environment::new(domain.clone(), obj, NoiseModel::gaussian(0.1).unwrap(), &[]).unwrap();
    (domain, kernel, env, ConfidenceParams::new(1.0, 0.1, 0.01, 0.1).unwrap())
}

fn play(algo: &mut dyn BanditAlgorithm, env: &Environment, rounds: usize, seed: u64) -> Vec<usize> {
    let mut rng = SplitMix64::new(seed);
    let all: Vec<usize> = (0..env.domain().len()).collect();
    (0..rounds)
        .map(|_| {
            let a = algo.select(&all).unwrap();
            let y = env.observe(a, &mut rng);
            algo.update(a, y).unwrap();
            a
        })
        .collect()
}

#[test]
fn zero_enlargement_reproduces_gp_ucb() {
    for seed in 0..5 {
        let (domain, kernel, env, params) = setup(seed);
        let mut a = UcbLearner::gp_ucb(kernel, domain.clone(), params).unwrap();
        let mut b = UcbLearner::new(kernel, domain, params, 0.0).unwrap();
        assert_eq!(play(&mut a, &env, 150, seed), play(&mut b, &env, 150, seed));
    }
}

#[test]
fn gp_ucb_concentrates_on_the_maximizer() {
    let (domain, kernel, env, params) = setup(3);
    let mut a = UcbLearner::gp_ucb(kernel, domain, params).unwrap();
    let picks = play(&mut a, &env, 400, 1);
    let best = env.star_argmax();
    let late_hits = picks[300..]
        .iter()
        .filter(|&&p| (p as i64 - best as i64).abs() <= 1)
        .count();
    assert!(late_hits >= 80, "{late_hits}");
}

#[test]
fn phased_survivors_shrink_and_keep_the_maximizer() {
    let (domain, kernel, env, params) = setup(4);
    let mut p = PhasedUncertaintySampling::new(kernel, domain, params).unwrap();
    play(&mut p, &env, 1023, 2);
    assert_eq!(p.reports().len(), 10);
    assert!(p.active().len() < 40);
    assert!(p.active().contains(&env.tilde_argmax()));
    for r in p.reports() {
        assert!(r.survivors.contains(&r.lcb_argmax));
    }
}

#[test]
fn single_base_master_never_eliminates() {
    let (domain, kernel, env, params) = setup(5);
    let mut cfg = make_master_config(64, 40.0, &params).unwrap();
    assert_eq!(cfg.m(), 1);
    assert!(!cfg.warnings.is_empty());
    let mut m = RegretBalancingMaster::new(kernel, domain, params, &cfg, 0.0).unwrap();
    play(&mut m, &env, 64, 3);
    assert_eq!(m.active_bases(), vec![0]);
    assert!(m.eliminations().is_empty());
    cfg.bases.clear();
    assert!(RegretBalancingMaster::new(kernel, env.domain().clone(), params, &cfg, 2.0).is_err());
}

#[test]
fn consistency_test_flags_underperformers() {
    // Base 1 collects far less reward than base 0 with the same count.
    let failing = inconsistent_bases(&[50.0, 0.0], &[100, 100], &[1.0, 1.0], &[true, true], 0.5, 0.1);
    assert_eq!(failing, vec![1]);
    let none = inconsistent_bases(&[50.0, 49.0], &[100, 100], &[1.0, 1.0], &[true, true], 0.5, 0.1);
    assert!(none.is_empty());
}

#[test]
fn master_balances_bounds() {
    let (domain, kernel, env, params) = setup(6);
    let cfg = make_master_config(1024, 4.0, &params).unwrap();
    assert!(cfg.m() >= 3);
    let mut m = RegretBalancingMaster::new(kernel, domain, params, &cfg, 2.0).unwrap();
    let mut rng = SplitMix64::new(8);
    let all: Vec<usize> = (0..40).collect();
    for _ in 0..500 {
        let a = m.select(&all).unwrap();
        m.update(a, env.observe(a, &mut rng)).unwrap();
        let b = m.current_bounds();
        for &i in &m.active_bases() {
            for &j in &m.active_bases() {
                assert!(b[i] <= b[j] + 1.0 + 1e-12);
            }
        }
    }
    assert_eq!(m.counts().iter().sum::<usize>(), 500);
}
