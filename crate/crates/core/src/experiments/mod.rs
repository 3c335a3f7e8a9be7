//! Config-driven simulation runs, named scenarios and coverage checks.

pub mod config;
pub mod coverage;
pub mod runner;
pub mod scenarios;

pub use config::{AlgorithmSpec, ContextSpec, DomainSource, ExperimentConfig, MisspecSpec, ObjectiveSpec};
pub use coverage::{run_coverage, CoverageReport};
pub use runner::{
    run_experiment, summary_json, summary_path, write_outputs, write_trace_csv, Checkpoint, MasterDiagnostics,
    PhasedDiagnostics, Prepared, ReplicationResult, RunOutput, SummaryRecord, CSV_HEADER,
};
pub use scenarios::{scenario, SCENARIO_NAMES};
