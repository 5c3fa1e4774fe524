use std::path::{Path, PathBuf};
use std::time::Instant;

use synlik_harness::{run_experiment, ExperimentConfig, SMOKE_FACTOR};

fn configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
}

#[test]
fn bundled_configs_validate_and_round_trip() {
    let paths = configs();
    assert!(paths.len() >= 6, "expected one config per experiment, found {paths:?}");
    for path in paths {
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        cfg.prepare(path.parent().unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn smoke_profile_runs_every_config_within_budget() {
    let t0 = Instant::now();
    for path in configs() {
        let cfg = ExperimentConfig::load(&path).unwrap().scaled(SMOKE_FACTOR);
        let exp = cfg.prepare(path.parent().unwrap()).unwrap();
        let out = run_experiment(&exp).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(out.traces.len(), cfg.seeds().len());
        let expected = cfg.schedule.burnin + cfg.schedule.asl + cfg.schedule.adaptive;
        assert!(out.traces.iter().all(|(_, t)| t.len() == expected));
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 300.0, "smoke profile took {secs:.0}s");
}
