use std::path::Path;

use smc_squared::harness::*;
use smc_squared::models::{read_dataset, Sir};
use smc_squared::smc2::ProposalKind;

fn small_sir() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ModelKind::Sir, 5);
    cfg.n_seeds = 2;
    cfg.n_particles = 64;
    cfg.n_samples = 8;
    cfg.iterations = 3;
    cfg.grid_count = 2;
    cfg.range_rw = Some([0.02, 0.05]);
    cfg.range_fo = Some([1e-4, 5e-4]);
    cfg.range_so = Some([0.3, 0.6]);
    cfg
}

/// `results.csv` with the last (wall-clock) column blanked.
fn masked_results(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn masked_summary(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    for s in v.as_array_mut().unwrap() {
        s["rr"] = serde_json::Value::Null;
    }
    v
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ModelKind::Sir, 0);
    cfg.n_seeds = 3;
    let a = cmd_generate(&cfg, &dir.path().join("a")).unwrap();
    let b = cmd_generate(&cfg, &dir.path().join("b")).unwrap();
    assert_eq!(a.len(), 3);
    for (pa, pb) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
        let data = read_dataset(pa).unwrap();
        assert_eq!(data.len(), 36);
        assert!(data.observations.iter().all(|y| y.fract() == 0.0 && *y >= 0.0));
    }
    let first = std::fs::read_to_string(&a[0]).unwrap();
    let second = std::fs::read_to_string(&a[1]).unwrap();
    assert_ne!(first, second);
}

#[test]
fn lgss_datasets_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ModelKind::Lgss, 0);
    cfg.n_seeds = 1;
    cfg.t = Some(50);
    let paths = cmd_generate(&cfg, dir.path()).unwrap();
    let data = read_dataset(&paths[0]).unwrap();
    assert_eq!(data.len(), 50);
    let again = smc_squared::models::simulate(&smc_squared::models::Lgss::new(), &cfg.theta(), 50, 0);
    assert_eq!(data.observations, again.observations);
}

#[test]
fn sweep_output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sir();
    let mut outputs = Vec::new();
    for workers in [1, 4, 8] {
        let out = dir.path().join(format!("w{workers}"));
        cmd_sweep(&cfg, workers, Some(&out)).unwrap();
        outputs.push(out);
    }
    let base = &outputs[0];
    for other in &outputs[1..] {
        assert_eq!(masked_results(&base.join("results.csv")), masked_results(&other.join("results.csv")));
        for f in ["rmse_by_eps.csv", "cells.csv"] {
            assert_eq!(std::fs::read(base.join(f)).unwrap(), std::fs::read(other.join(f)).unwrap(), "{f}");
        }
        assert_eq!(masked_summary(&base.join("summary.json")), masked_summary(&other.join("summary.json")));
    }
}

#[test]
fn results_csv_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sir();
    let out = cmd_sweep(&cfg, 2, Some(dir.path())).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["model", "proposal", "eps", "seed", "status", "theta_hat_1", "theta_hat_2", "rmse", "sq_err_1", "sq_err_2", "wall_s"]
    );
    let truth = Sir::TRUE_THETA;
    let mut n = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        n += 1;
        if &rec[4] != "ok" {
            continue;
        }
        let th: Vec<f64> = (5..7).map(|i| rec[i].parse().unwrap()).collect();
        let rmse: f64 = rec[7].parse().unwrap();
        let again = ((th[0] - truth[0]).powi(2) / 2.0 + (th[1] - truth[1]).powi(2) / 2.0).sqrt();
        assert!((rmse - again).abs() < 1e-12);
        for j in 0..2 {
            let sq: f64 = rec[8 + j].parse().unwrap();
            assert!((sq - (th[j] - truth[j]).powi(2)).abs() < 1e-12);
        }
    }
    assert_eq!(n, 3 * 2 * 2);
    assert_eq!(out.rows.len(), n);

    let by_eps = csv::Reader::from_path(dir.path().join("rmse_by_eps.csv")).unwrap().into_records().count();
    assert_eq!(by_eps, cfg.proposals.len() * cfg.grid_count);

    let summary = &out.summary;
    let rw = summary.iter().find(|s| s.proposal == ProposalKind::Rw).unwrap();
    assert_eq!(rw.rr, Some(1.0));
    assert!(summary.iter().all(|s| s.means.len() == 2));
}

#[test]
fn single_cell_sweep_equals_run() {
    let mut cfg = small_sir();
    cfg.proposals = vec![ProposalKind::So];
    cfg.eps_so = Some(vec![0.4]);
    cfg.first_seed = 1;
    cfg.n_seeds = 1;
    let sweep = cmd_sweep(&cfg, 1, None).unwrap();
    let run = cmd_run(&small_sir(), ProposalKind::So, 0.4, 1, 1, None).unwrap();
    let mut a = sweep.rows[0].clone();
    a.wall_s = run.wall_s;
    assert_eq!(a, run);
}

#[test]
fn one_iteration_returns_the_prior_estimate() {
    let mut cfg = small_sir();
    cfg.iterations = 1;
    for p in ProposalKind::ALL {
        let row = cmd_run(&cfg, p, 0.1, 0, 1, None).unwrap();
        assert!(row.is_ok(), "{:?}", row.error);
        assert_eq!(row.moves, 0);
    }
    // nothing moves, so every proposal sees the same estimate
    let a = cmd_run(&cfg, ProposalKind::Rw, 0.1, 0, 1, None).unwrap();
    let b = cmd_run(&cfg, ProposalKind::So, 0.1, 0, 1, None).unwrap();
    assert_eq!(a.theta_hat, b.theta_hat);
}

#[test]
fn injected_indefinite_hessians_are_counted() {
    let mut cfg = small_sir();
    cfg.inject_indefinite = vec![0, 3];
    let row = cmd_run(&cfg, ProposalKind::So, 0.3, 0, 1, None).unwrap();
    assert!(row.is_ok(), "{:?}", row.error);
    assert!(row.fallbacks >= 2 * (cfg.iterations - 1));
}

#[test]
fn config_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.toml");
    std::fs::write(&path, "model = \"lgss\"\nmaster_seed = 9\nt = 40\nworkers = 3\neps_rw = [0.5]\n").unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.t_len(), 40);
    assert_eq!(cfg.workers, Some(3));
    assert_eq!(cfg.grid(ProposalKind::Rw), vec![0.5]);
    std::fs::write(&path, "model = \"lgss\"\nmaster_seed = 9\nworkers = 0\n").unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
    assert!(ExperimentConfig::load(&dir.path().join("missing.toml")).is_err());
}

#[test]
fn sweep_reads_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_sir();
    cfg.n_seeds = 1;
    cfg.proposals = vec![ProposalKind::Rw];
    cfg.eps_rw = Some(vec![0.03]);
    let simulated = cmd_sweep(&cfg, 1, None).unwrap();
    cmd_generate(&cfg, dir.path()).unwrap();
    cfg.data_dir = Some(dir.path().to_path_buf());
    let loaded = cmd_sweep(&cfg, 1, None).unwrap();
    assert_eq!(simulated.rows[0].theta_hat, loaded.rows[0].theta_hat);
}
