use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use synlik::engine::{run_chain, ChainTrace, Stage};
use thiserror::Error;

use crate::config::{ConfigErrors, Experiment, ReportConfig};
use crate::diagnostics::{ess_min, hpd_interval, mean, thin};
use crate::trace_io::{write_trace, TraceError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error("replicate {replicate} (seed {seed}): {source}")]
    Chain { replicate: usize, seed: u64, source: synlik::Error },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub name: String,
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hpd: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burnin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub label: String,
    pub iterations: usize,
    /// Draws summarised after tail selection and thinning.
    pub draws: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ess: Option<f64>,
    /// Parameters whose column was constant (ESS set to 1).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub degenerate: Vec<String>,
    pub acceptance: Acceptance,
    pub params: Vec<ParamReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<usize>,
    pub thin: usize,
    pub chains: Vec<ChainReport>,
}

/// Draws summarised in a report: the adaptive stage (or the whole chain when
/// it has none), optionally its last `tail` rows, then thinned.
pub fn posterior_window(trace: &ChainTrace, cfg: &ReportConfig) -> ChainTrace {
    let adaptive: Vec<_> = trace.stage(Stage::Adaptive).cloned().collect();
    let rows = if adaptive.is_empty() { trace.records.clone() } else { adaptive };
    let start = cfg.tail.map_or(0, |t| rows.len().saturating_sub(t));
    ChainTrace { param_names: trace.param_names.clone(), records: thin(&rows[start..], cfg.thin) }
}

pub fn chain_report(label: &str, trace: &ChainTrace, cfg: &ReportConfig) -> ChainReport {
    let window = posterior_window(trace, cfg);
    let columns: Vec<Vec<f64>> = (0..trace.param_names.len()).map(|j| window.column(j)).collect();
    let ess = ess_min(&columns).ok();
    let params = trace
        .param_names
        .iter()
        .zip(&columns)
        .enumerate()
        .map(|(j, (name, col))| ParamReport {
            name: name.clone(),
            mean: if col.is_empty() { f64::NAN } else { mean(col) },
            hpd: hpd_interval(col, cfg.level).ok().map(|(lo, hi)| [lo, hi]),
            ess: ess.as_ref().map(|e| e.per_param[j].value),
        })
        .collect();
    let degenerate = ess
        .as_ref()
        .map(|e| {
            trace.param_names.iter().zip(&e.per_param).filter(|(_, x)| x.degenerate).map(|(n, _)| n.clone()).collect()
        })
        .unwrap_or_default();
    ChainReport {
        label: label.to_string(),
        iterations: trace.len(),
        draws: window.len(),
        min_ess: ess.map(|e| e.min),
        degenerate,
        acceptance: Acceptance {
            burnin: trace.acceptance_rate(Some(Stage::Burnin)),
            asl: trace.acceptance_rate(Some(Stage::Asl)),
            adaptive: trace.acceptance_rate(Some(Stage::Adaptive)),
            overall: trace.acceptance_rate(None),
        },
        params,
    }
}

/// Pure function of the traces: rerunning it on traces read back from disk
/// reproduces the report.
pub fn build_report(experiment: &str, cfg: &ReportConfig, traces: &[(String, ChainTrace)]) -> Report {
    Report {
        experiment: experiment.to_string(),
        level: cfg.level,
        tail: cfg.tail,
        thin: cfg.thin,
        chains: traces.iter().map(|(label, t)| chain_report(label, t, cfg)).collect(),
    }
}

impl Report {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub traces: Vec<(String, ChainTrace)>,
    pub report: Report,
}

pub fn trace_label(replicate: usize) -> String {
    format!("chain_{replicate:03}")
}

/// Runs every replicate in parallel (each chain is serial apart from its
/// simulations) and aggregates once all have finished.
pub fn run_experiment(experiment: &Experiment) -> Result<RunOutput, HarnessError> {
    let seeds = experiment.config.seeds();
    let traces = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let cfg = experiment.chain_config(seed);
            log::info!("{}: replicate {i} (seed {seed}) starting", experiment.config.name);
            run_chain(&experiment.bundle, &cfg)
                .map(|t| (trace_label(i), t))
                .map_err(|source| HarnessError::Chain { replicate: i, seed, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = build_report(&experiment.config.name, &experiment.config.report, &traces);
    Ok(RunOutput { traces, report })
}

/// Writes `<label>.tsv` per chain, `report.toml` and the resolved config.
pub fn write_artifacts(dir: &Path, experiment: &Experiment, out: &RunOutput) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for (label, trace) in &out.traces {
        let path = dir.join(format!("{label}.tsv"));
        write_trace(&path, trace)?;
        written.push(path);
    }
    let report = dir.join("report.toml");
    fs::write(&report, out.report.to_toml()).map_err(io(&report))?;
    written.push(report);
    let config = dir.join("config.toml");
    fs::write(&config, experiment.config.to_toml()).map_err(io(&config))?;
    written.push(config);
    Ok(written)
}
