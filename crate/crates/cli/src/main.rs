#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kbandit::experiments::{
    run_coverage, run_experiment, scenario, scenarios, summary_json, write_outputs, ExperimentConfig, SCENARIO_NAMES,
};
use kbandit::infogain::{gamma_exact, gamma_greedy, upper_from_greedy, EXACT_MAX_DOMAIN, EXACT_MAX_T};
use kbandit::Error;

#[derive(Parser)]
#[command(name = "kbandit", version, about = "Kernelized bandits under misspecification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Base seed; replication r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV path; the summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and print its summary.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Information-gain estimates for the config's kernel and domain.
    Gamma {
        config: PathBuf,
        /// Number of rounds t (defaults to min(horizon, 512)).
        #[arg(long)]
        t: Option<usize>,
        /// Regularizer (defaults to the config's lambda).
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Monte Carlo frequency of confidence-band failures.
    Coverage {
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// Print the scenario names.
    List,
    /// Print a scenario's config as JSON.
    Show { name: String },
}

fn load(path: &PathBuf, overrides: Option<&Overrides>) -> kbandit::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(o) = overrides {
        if let Some(seed) = o.seed {
            cfg.base_seed = seed;
        }
        if let Some(r) = o.replications {
            cfg.replications = r;
        }
        if let Some(out) = &o.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> kbandit::Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, Some(&overrides))?;
            let output = run_experiment(&cfg)?;
            for w in &output.summary.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(path) = &cfg.output {
                let summary = write_outputs(&output, path)?;
                eprintln!("wrote {} and {}", path.display(), summary.display());
            }
            println!("{}", summary_json(&output.summary));
        }
        Command::Gamma { config, t, lambda } => {
            let cfg = load(&config, None)?;
            let domain = cfg.build_domain()?;
            let t = t.unwrap_or_else(|| cfg.horizon.min(kbandit::experiments::config::GAMMA_GREEDY_CAP));
            let lambda = lambda.unwrap_or(cfg.lambda);
            if !(lambda > 0.0) || t == 0 {
                return Err(Error::Config("gamma: t and lambda must be positive".into()));
            }
            let greedy = gamma_greedy(&cfg.kernel, &domain, t, lambda)?;
            let mut report = serde_json::json!({
                "t": t,
                "lambda": lambda,
                "domain_size": domain.len(),
                "greedy": greedy.value,
                "upper_estimate": upper_from_greedy(greedy.value),
            });
            if domain.len() <= EXACT_MAX_DOMAIN && t <= EXACT_MAX_T {
                report["exact"] = gamma_exact(&cfg.kernel, &domain, t, lambda)?.value.into();
            }
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
        }
        Command::Coverage {
            config,
            runs,
            overrides,
        } => {
            let cfg = load(&config, Some(&overrides))?;
            let report = run_coverage(&cfg, runs)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
        }
        Command::Scenarios { action } => match action {
            ScenarioAction::List => {
                for name in SCENARIO_NAMES {
                    println!("{name}\t{}", scenarios::describe(name).unwrap_or(""));
                }
            }
            ScenarioAction::Show { name } => {
                let cfg = scenario(&name).ok_or_else(|| Error::Config(format!("unknown scenario {name:?}")))?;
                println!("{}", cfg.to_json());
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
