use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use synlik::simulators::{build_model, draw_variates, ModelOptions};
use synlik_harness::config::ReportConfig;
use synlik_harness::data::write_dataset;
use synlik_harness::experiment::{build_report, write_artifacts};
use synlik_harness::{read_trace, run_experiment, ExperimentConfig, SMOKE_FACTOR};

#[derive(Debug, Parser)]
#[command(name = "synlik", version, about = "Synthetic-likelihood MCMC experiments")]
struct Cli {
    /// Base seed; replaces the config's run seed (replicates use seed, seed+1, …).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config and write traces plus a report.
    Run {
        config: PathBuf,
        /// Divide every stage length by ten.
        #[arg(long)]
        smoke: bool,
        /// Validate the config and exit.
        #[arg(long)]
        check: bool,
    },
    /// Rebuild a report from trace files.
    Diagnose {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        tail: Option<usize>,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Simulate one dataset and print its summaries.
    Simulate {
        model: String,
        /// Comma-separated natural-scale parameters.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        params: Vec<f64>,
        /// Observations per dataset.
        #[arg(long)]
        n: Option<usize>,
        /// Also write the raw dataset here.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn run(config: &Path, smoke: bool, check: bool, cli: &Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
        cfg.run.seeds = None;
    }
    if smoke {
        cfg = cfg.scaled(SMOKE_FACTOR);
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let experiment = cfg.prepare(base)?;
    if check {
        println!("{}: ok", cfg.name);
        return Ok(());
    }
    let out = run_experiment(&experiment)?;
    let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs")).join(&cfg.name);
    for path in write_artifacts(&dir, &experiment, &out)? {
        log::info!("wrote {}", path.display());
    }
    print!("{}", out.report.to_toml());
    Ok(())
}

fn diagnose(traces: &[PathBuf], report: ReportConfig, cli: &Cli) -> Result<()> {
    if report.thin == 0 {
        bail!("--thin must be at least 1");
    }
    let loaded = traces
        .iter()
        .map(|p| {
            let label = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            read_trace(p).map(|t| (label, t)).with_context(|| format!("reading {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let text = build_report("diagnose", &report, &loaded).to_toml();
    if let Some(dir) = &cli.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("diagnose.toml"), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn simulate(model: &str, params: &[f64], n: Option<usize>, data: Option<&Path>, cli: &Cli) -> Result<()> {
    let model = build_model(model, &ModelOptions { n, ..Default::default() })?;
    let seed = cli.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = draw_variates(&*model, &mut rng);
    model.prepare(&mut v);
    let dataset = model.simulate(params, &v)?;
    let summaries = model.summarize(&dataset)?;
    if let Some(path) = data {
        write_dataset(path, &dataset)?;
    }
    let mut table = toml::Table::new();
    table.insert("model".into(), model.id().into());
    table.insert("seed".into(), toml::Value::Integer(seed as i64));
    table.insert("params".into(), params.to_vec().into());
    table.insert("summaries".into(), summaries.iter().copied().collect::<Vec<f64>>().into());
    print!("{}", toml::to_string(&table)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match &cli.command {
        Command::Run { config, smoke, check } => run(config, *smoke, *check, &cli),
        Command::Diagnose { traces, tail, thin, level } => {
            diagnose(traces, ReportConfig { tail: *tail, thin: *thin, level: *level }, &cli)
        }
        Command::Simulate { model, params, n, data } => simulate(model, params, *n, data.as_deref(), &cli),
    }
}
