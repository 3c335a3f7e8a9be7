use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AlgorithmSpec, ExperimentConfig, GAMMA_GREEDY_CAP};
use crate::algorithms::{
    episode_delta, make_master_config, AlgorithmState, BanditAlgorithm, MasterConfig, PhasedUncertaintySampling,
    RegretBalancingMaster, UcbLearner,
};
use crate::environments::{ContextDistribution, Environment, RegretTrace};
use crate::error::{Error, Result};
use crate::infogain::gamma_upper_estimate;
use crate::kernels::ActionDomain;
use crate::rng::SplitMix64;

const NOISE_STREAM: u64 = 1;
const CONTEXT_STREAM: u64 = 2;

pub const CSV_HEADER: [&str; 8] = [
    "round",
    "replication",
    "algorithm",
    "action_index",
    "reward",
    "inst_regret_star",
    "cum_regret_star",
    "cum_regret_tilde",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasedDiagnostics {
    pub tilde_argmax: usize,
    /// `argmax f̃` is still in the surviving set after the last completed
    /// episode.
    pub tilde_argmax_survived: bool,
    /// The lower-bound maximizer survived every elimination step.
    pub lcb_argmax_always_survived: bool,
    pub episodes_completed: usize,
    pub final_active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterDiagnostics {
    pub eps_hats: Vec<f64>,
    /// Rounds after which two active bases had `R_i(N_i) > R_j(N_j) + 1`.
    pub balancing_violations: usize,
    pub counts: Vec<usize>,
    pub active_at_end: Vec<usize>,
    /// `(round, base)` pairs.
    pub eliminations: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub replication: usize,
    pub seed: u64,
    pub algorithm: String,
    pub eps_true: f64,
    /// `(scale, offset)` applied to the synthesized RKHS member.
    pub affine: (f64, f64),
    pub trace: RegretTrace,
    pub phased: Option<PhasedDiagnostics>,
    pub master: Option<MasterDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub round: usize,
    pub mean_regret_star: f64,
    pub mean_avg_regret_star: f64,
    pub mean_regret_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub name: String,
    pub algorithm: String,
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub rng: String,
    pub mean_regret_star: f64,
    pub std_regret_star: f64,
    pub mean_regret_tilde: f64,
    pub std_regret_tilde: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub final_regret_star: Vec<f64>,
    pub final_regret_tilde: Vec<f64>,
    pub eps_true: Vec<f64>,
    /// Per-replication `(scale, offset)` of `f̃`.
    pub affine: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_hats: Option<Vec<f64>>,
    /// Per-replication master diagnostics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master: Option<Vec<MasterDiagnostics>>,
    /// Per-replication phased-elimination diagnostics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phased: Option<Vec<PhasedDiagnostics>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub replications: Vec<ReplicationResult>,
    pub summary: SummaryRecord,
}

/// Shared, replication-independent pieces of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub domain: Arc<ActionDomain>,
    pub contexts: Option<ContextDistribution>,
    pub master: Option<(MasterConfig, f64)>,
    pub warnings: Vec<String>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let domain = config.build_domain()?;
        let contexts = config.build_contexts(&domain)?;
        let mut warnings = Vec::new();
        let master = match &config.algorithm {
            AlgorithmSpec::Master {
                c,
                gamma_t,
                gamma_lambda,
            } => {
                let t = gamma_t.unwrap_or_else(|| config.horizon.min(GAMMA_GREEDY_CAP)).max(1);
                let lambda = gamma_lambda.unwrap_or(config.lambda);
                let gamma = gamma_upper_estimate(&config.kernel, &domain, t, lambda)?;
                let mc = make_master_config(config.horizon.max(2), gamma, &config.confidence_params()?)?;
                warnings.extend(mc.warnings.iter().cloned());
                Some((mc, *c))
            }
            _ => None,
        };
        Ok(Self {
            config: config.clone(),
            domain,
            contexts,
            master,
            warnings,
        })
    }

    pub fn build_algorithm(&self) -> Result<AlgorithmState> {
        let cfg = &self.config;
        let params = cfg.confidence_params()?;
        let kernel = cfg.kernel;
        let domain = self.domain.clone();
        Ok(match &cfg.algorithm {
            AlgorithmSpec::GpUcb => AlgorithmState::GpUcb(UcbLearner::gp_ucb(kernel, domain, params)?),
            AlgorithmSpec::EcGpUcb { eps } => AlgorithmState::EcGpUcb(UcbLearner::new(kernel, domain, params, *eps)?),
            AlgorithmSpec::PhasedUs => {
                let params = if cfg.episode_delta_split {
                    params.with_delta(episode_delta(cfg.delta, cfg.horizon))?
                } else {
                    params
                };
                AlgorithmState::PhasedUs(PhasedUncertaintySampling::new(kernel, domain, params)?)
            }
            AlgorithmSpec::Master { .. } => {
                let (mc, c) = self.master.as_ref().expect("master config prepared");
                AlgorithmState::Master(RegretBalancingMaster::new(kernel, domain, params, mc, *c)?)
            }
        })
    }

    pub fn replication_seed(&self, replication: usize) -> u64 {
        self.config.base_seed.wrapping_add(replication as u64)
    }

    pub fn run_replication(&self, replication: usize) -> Result<ReplicationResult> {
        let seed = self.replication_seed(replication);
        let env = self.config.build_environment(&self.domain, seed)?;
        let mut algo = self.build_algorithm()?;
        let mut noise_rng = SplitMix64::stream(seed, NOISE_STREAM);
        let mut context_rng = SplitMix64::stream(seed, CONTEXT_STREAM);
        let full: Vec<usize> = (0..self.domain.len()).collect();
        let horizon = self.config.horizon;
        let mut trace = RegretTrace::with_capacity(horizon);
        let mut balancing_violations = 0;

        for _ in 0..horizon {
            let action_set: &[usize] = match &self.contexts {
                Some(c) => c.sample(&mut context_rng),
                None => &full,
            };
            let action = algo.select(action_set)?;
            let reward = env.observe(action, &mut noise_rng);
            algo.update(action, reward)?;
            trace.record_round(&env, played_set(&algo, action_set, &full), action, reward)?;
            if let AlgorithmState::Master(m) = &mut algo {
                if !is_balanced(m) {
                    balancing_violations += 1;
                }
            }
        }

        let phased = match &algo {
            AlgorithmState::PhasedUs(p) => Some(phased_diagnostics(p, &env)),
            _ => None,
        };
        let master = match &algo {
            AlgorithmState::Master(m) => Some(MasterDiagnostics {
                eps_hats: m.eps_hats(),
                balancing_violations,
                counts: m.counts().to_vec(),
                active_at_end: m.active_bases(),
                eliminations: m.eliminations().to_vec(),
            }),
            _ => None,
        };
        Ok(ReplicationResult {
            replication,
            seed,
            algorithm: algo.name(),
            eps_true: env.eps_true(),
            affine: env.objective().affine(),
            trace,
            phased,
            master,
        })
    }
}

/// Phased learners play on their own surviving set, which is a subset of the
/// full domain; regret is measured against the full domain.
fn played_set<'a>(algo: &AlgorithmState, offered: &'a [usize], full: &'a [usize]) -> &'a [usize] {
    match algo {
        AlgorithmState::PhasedUs(_) => full,
        _ => offered,
    }
}

fn is_balanced(m: &mut RegretBalancingMaster) -> bool {
    let bounds = m.current_bounds();
    let active = m.active_bases();
    active
        .iter()
        .all(|&i| active.iter().all(|&j| bounds[i] <= bounds[j] + 1.0 + 1e-9))
}

fn phased_diagnostics(p: &PhasedUncertaintySampling, env: &Environment) -> PhasedDiagnostics {
    let tilde_argmax = env.tilde_argmax();
    PhasedDiagnostics {
        tilde_argmax,
        tilde_argmax_survived: p.active().contains(&tilde_argmax),
        lcb_argmax_always_survived: p.reports().iter().all(|r| r.survivors.contains(&r.lcb_argmax)),
        episodes_completed: p.reports().len(),
        final_active: p.active().len(),
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Rounds `T/10, T/4, T/2, T`, deduplicated and at least 1.
pub fn checkpoint_rounds(horizon: usize) -> Vec<usize> {
    let mut rounds: Vec<usize> = [horizon / 10, horizon / 4, horizon / 2, horizon]
        .iter()
        .map(|&t| t.max(1))
        .collect();
    rounds.dedup();
    rounds
}

pub fn summarize(prepared: &Prepared, reps: &[ReplicationResult]) -> SummaryRecord {
    let cfg = &prepared.config;
    let finals_star: Vec<f64> = reps.iter().map(|r| r.trace.cumulative_star()).collect();
    let finals_tilde: Vec<f64> = reps.iter().map(|r| r.trace.cumulative_tilde()).collect();
    let (mean_star, std_star) = mean_std(&finals_star);
    let (mean_tilde, std_tilde) = mean_std(&finals_tilde);
    let checkpoints = checkpoint_rounds(cfg.horizon)
        .into_iter()
        .map(|t| {
            let star: Vec<f64> = reps.iter().map(|r| r.trace.cumulative_star_at(t)).collect();
            let tilde: Vec<f64> = reps.iter().map(|r| r.trace.records()[t - 1].cum_regret_tilde).collect();
            let mean_regret_star = mean_std(&star).0;
            Checkpoint {
                round: t,
                mean_regret_star,
                mean_avg_regret_star: mean_regret_star / t as f64,
                mean_regret_tilde: mean_std(&tilde).0,
            }
        })
        .collect();
    SummaryRecord {
        name: cfg.name.clone(),
        algorithm: reps.first().map(|r| r.algorithm.clone()).unwrap_or_default(),
        horizon: cfg.horizon,
        replications: reps.len(),
        base_seed: cfg.base_seed,
        rng: format!("splitmix64-v{}", crate::rng::RNG_VERSION),
        mean_regret_star: mean_star,
        std_regret_star: std_star,
        mean_regret_tilde: mean_tilde,
        std_regret_tilde: std_tilde,
        checkpoints,
        final_regret_star: finals_star,
        final_regret_tilde: finals_tilde,
        eps_true: reps.iter().map(|r| r.eps_true).collect(),
        affine: reps.iter().map(|r| r.affine).collect(),
        gamma_t: prepared.master.as_ref().map(|(m, _)| m.gamma),
        eps_hats: prepared
            .master
            .as_ref()
            .map(|(m, _)| m.bases.iter().map(|b| b.eps_hat).collect()),
        master: reps.iter().map(|r| r.master.clone()).collect(),
        phased: reps.iter().map(|r| r.phased.clone()).collect(),
        warnings: prepared.warnings.clone(),
    }
}

/// Runs every replication (in parallel) and aggregates them. Results do not
/// depend on the number of worker threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    let prepared = Prepared::new(config)?;
    let replications = (0..config.replications)
        .into_par_iter()
        .map(|r| prepared.run_replication(r))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&prepared, &replications);
    Ok(RunOutput { replications, summary })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_trace_csv<W: Write>(out: W, reps: &[ReplicationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for rep in reps {
        for rec in rep.trace.records() {
            w.write_record([
                rec.round.to_string(),
                rep.replication.to_string(),
                rep.algorithm.clone(),
                rec.action_index.to_string(),
                fmt_f64(rec.reward),
                fmt_f64(rec.inst_regret_star),
                fmt_f64(rec.cum_regret_star),
                fmt_f64(rec.cum_regret_tilde),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn summary_json(summary: &SummaryRecord) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes")
}

/// Path of the summary written next to a trace CSV.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

/// Writes the trace CSV to `csv_path` and the summary next to it; returns
/// the summary path.
pub fn write_outputs(output: &RunOutput, csv_path: &Path) -> Result<PathBuf> {
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    write_trace_csv(file, &output.replications)?;
    let summary = summary_path(csv_path);
    std::fs::write(&summary, summary_json(&output.summary) + "\n")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::scenarios::scenario;

    fn small(name: &str) -> ExperimentConfig {
        let mut cfg = scenario(name).unwrap();
        cfg.horizon = 40;
        cfg.replications = 3;
        cfg
    }

    #[test]
    fn checkpoints() {
        assert_eq!(checkpoint_rounds(1000), vec![100, 250, 500, 1000]);
        assert_eq!(checkpoint_rounds(3), vec![1, 3]);
        assert_eq!(checkpoint_rounds(1), vec![1]);
    }

    #[test]
    fn runs_are_reproducible_and_csv_is_stable() {
        let cfg = small("realizable");
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        write_trace_csv(&mut ca, &a.replications).unwrap();
        write_trace_csv(&mut cb, &b.replications).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(summary_json(&a.summary), summary_json(&b.summary));
        let text = String::from_utf8(ca).unwrap();
        assert!(text.starts_with("round,replication,algorithm,action_index,reward,inst_regret_star"));
        assert_eq!(text.lines().count(), 1 + 40 * 3);
    }

    #[test]
    fn every_scenario_runs_briefly() {
        for name in crate::experiments::scenarios::SCENARIO_NAMES {
            let out = run_experiment(&small(name)).unwrap();
            assert_eq!(out.replications.len(), 3, "{name}");
            for r in &out.replications {
                assert_eq!(r.trace.len(), 40);
                assert!(r.trace.cumulative_star() >= -1e-12);
            }
        }
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
