//! Experiment configuration, trace persistence and posterior diagnostics for
//! synthetic-likelihood chains.

pub mod config;
pub mod data;
pub mod diagnostics;
pub mod experiment;
pub mod trace_io;

pub use config::{ConfigErrors, Experiment, ExperimentConfig, FieldError, ReportConfig};
pub use diagnostics::{ess, ess_min, hpd_interval, thin, DiagnosticError, Ess, EssSummary};
pub use experiment::{build_report, chain_report, run_experiment, write_artifacts, HarnessError, Report, RunOutput};
pub use trace_io::{read_trace, write_trace, TraceError};

/// Iteration divisor of the smoke profile.
pub const SMOKE_FACTOR: usize = 10;
