//! Experiment driver: dataset generation, single runs and step-size sweeps.
//!
//! A sweep runs every `(proposal, ε, seed)` cell on a bounded worker pool
//! and writes
//!
//! - `results.csv`: one row per cell,
//!   `model,proposal,eps,seed,status,theta_hat_1..d,rmse,sq_err_1..d,wall_s`
//! - `rmse_by_eps.csv`: per `(proposal, ε)` RMSE mean and quartiles over seeds
//! - `summary.json`: each proposal at its median-RMSE step size, with
//!   relative runtime against RW
//! - `cells.csv`: per-cell SO move and fallback counts, and failure reasons
//!
//! Rows are written in `(proposal, ε, seed)` order as soon as every earlier
//! row is done, so the files do not depend on the number of workers (apart
//! from the `wall_s` timings).

mod aggregate;
mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::SymMatrix;
use crate::models::{read_dataset, simulate, write_dataset, Dataset, DatasetError, Lgss, Sir, StateSpaceModel};
use crate::pf::CrnStreams;
use crate::rng::{mix_seed, tags};
use crate::smc2::{ProposalConfig, ProposalKind, Sampler, SamplerConfig, SamplerError, SamplerOptions};

pub use aggregate::{
    aggregate_rmse, quantile, rmse, rmse_by_eps, CellResult, CellStatus, EpsSummary, ProposalSummary,
};
pub use config::{default_range, log_grid, ExperimentConfig, ModelKind};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SMC2_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("config{}: {message}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    Config { path: Option<PathBuf>, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Worker count from [`WORKERS_ENV`], else the number of CPUs.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

enum AnyModel {
    Lgss(Lgss),
    Sir(Sir),
}

impl AnyModel {
    fn new(cfg: &ExperimentConfig) -> Self {
        match cfg.model {
            ModelKind::Lgss => AnyModel::Lgss(Lgss::new()),
            ModelKind::Sir => {
                let sir = Sir::new();
                let nv = cfg.noise_var.unwrap_or(sir.noise_var);
                AnyModel::Sir(sir.with_noise_var(nv))
            }
        }
    }

    fn simulate(&self, theta: &[f64], t_len: usize, seed: u64) -> Dataset {
        match self {
            AnyModel::Lgss(m) => simulate(m, theta, t_len, seed),
            AnyModel::Sir(m) => simulate(m, theta, t_len, seed),
        }
    }
}

/// Writes `n_seeds` datasets and returns their CSV paths.
pub fn cmd_generate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let model = AnyModel::new(cfg);
    cfg.seeds()
        .into_iter()
        .map(|seed| Ok(write_dataset(out_dir, &model.simulate(&cfg.theta(), cfg.t_len(), seed))?))
        .collect()
}

fn load_datasets(cfg: &ExperimentConfig, model: &AnyModel) -> Result<BTreeMap<u64, Dataset>, HarnessError> {
    cfg.seeds()
        .into_iter()
        .map(|seed| {
            let data = match &cfg.data_dir {
                Some(dir) => {
                    let stem = crate::models::dataset_stem(cfg.model.as_str(), seed);
                    read_dataset(&dir.join(format!("{stem}.csv")))?
                }
                None => model.simulate(&cfg.theta(), cfg.t_len(), seed),
            };
            Ok((seed, data))
        })
        .collect()
}

/// An indefinite matrix: `+1` on the first diagonal entry, `−1` elsewhere.
pub fn indefinite_matrix(dim: usize) -> SymMatrix {
    let mut diag = vec![-1.0; dim];
    diag[0] = 1.0;
    SymMatrix::from_diag(&diag)
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    proposal: ProposalKind,
    eps: f64,
    seed: u64,
}

fn run_cell_with<M: StateSpaceModel>(model: &M, cfg: &ExperimentConfig, data: &Dataset, cell: Cell) -> CellResult {
    let streams = CrnStreams::new(mix_seed(&[cfg.master_seed, tags::RUN_SEED, cell.seed]));
    let truth = cfg.theta();
    let mut out = CellResult {
        model: cfg.model,
        proposal: cell.proposal,
        eps: cell.eps,
        seed: cell.seed,
        status: CellStatus::Failed,
        theta_hat: None,
        rmse: None,
        sq_err: None,
        wall_s: 0.0,
        moves: 0,
        fallbacks: 0,
        error: None,
    };
    let mut options = SamplerOptions::default();
    if !cfg.inject_indefinite.is_empty() {
        let targets = cfg.inject_indefinite.clone();
        options.hessian_hook = Some(Arc::new(move |_, i, h: &SymMatrix| {
            targets.contains(&i).then(|| indefinite_matrix(h.dim()))
        }));
    }
    let start = Instant::now();
    let result = ProposalConfig::new(cell.proposal, cell.eps)
        .and_then(|proposal| {
            let sc = SamplerConfig {
                n_samples: cfg.n_samples,
                iterations: cfg.iterations,
                n_particles: cfg.n_particles,
            };
            Sampler::new(model, &data.observations, streams, sc, proposal)
        })
        .and_then(|s| s.with_options(options).run());
    out.wall_s = start.elapsed().as_secs_f64();
    match result {
        Ok(pop) => {
            out.moves = pop.moves;
            out.fallbacks = pop.fallbacks;
            match pop.recycled_mean().filter(|m| m.iter().all(|v| v.is_finite())) {
                Some(mean) => {
                    let (r, sq) = rmse(&mean, &truth);
                    out.status = CellStatus::Ok;
                    out.theta_hat = Some(mean);
                    out.rmse = Some(r);
                    out.sq_err = Some(sq);
                }
                None => out.error = Some("non-finite posterior mean".into()),
            }
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

fn run_cell(model: &AnyModel, cfg: &ExperimentConfig, data: &Dataset, cell: Cell) -> CellResult {
    match model {
        AnyModel::Lgss(m) => run_cell_with(m, cfg, data, cell),
        AnyModel::Sir(m) => run_cell_with(m, cfg, data, cell),
    }
}

/// Everything a sweep produced.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub rows: Vec<CellResult>,
    pub by_eps: Vec<EpsSummary>,
    pub summary: Vec<ProposalSummary>,
}

/// Runs every cell of `cfg` on `workers` threads. With `out_dir`, rows are
/// streamed to `results.csv` as they complete (in cell order) and the
/// aggregate files are written at the end.
pub fn cmd_sweep(cfg: &ExperimentConfig, workers: usize, out_dir: Option<&Path>) -> Result<SweepOutput, HarnessError> {
    cfg.validate()?;
    if workers == 0 {
        return Err(HarnessError::Invalid("workers must be ≥ 1".into()));
    }
    let model = AnyModel::new(cfg);
    let datasets = load_datasets(cfg, &model)?;
    let cells: Vec<Cell> = cfg
        .proposals
        .iter()
        .flat_map(|&proposal| {
            cfg.grid(proposal).into_iter().flat_map(move |eps| {
                cfg.seeds().into_iter().map(move |seed| Cell { proposal, eps, seed })
            })
        })
        .collect();

    let mut sink = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            Some(ResultsWriter::create(&dir.join("results.csv"), cfg.model.n_params())?)
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<(usize, CellResult)>();
    let mut rows: Vec<Option<CellResult>> = vec![None; cells.len()];
    std::thread::scope(|scope| -> Result<(), HarnessError> {
        let (model, datasets, cells) = (&model, &datasets, &cells);
        scope.spawn(move || {
            pool.install(|| {
                cells.par_iter().enumerate().for_each_with(tx, |tx, (i, &cell)| {
                    let row = run_cell(model, cfg, &datasets[&cell.seed], cell);
                    // the receiver only disappears if writing failed
                    let _ = tx.send((i, row));
                });
            });
        });
        let mut next = 0;
        for (i, row) in rx {
            rows[i] = Some(row);
            while next < rows.len() {
                match (&rows[next], sink.as_mut()) {
                    (Some(r), Some(w)) => w.write(r)?,
                    (Some(_), None) => {}
                    (None, _) => break,
                }
                next += 1;
            }
        }
        Ok(())
    })?;
    let rows: Vec<CellResult> = rows.into_iter().map(|r| r.expect("every cell reported")).collect();

    let by_eps = rmse_by_eps(&rows);
    let summary = aggregate_rmse(&rows);
    if let Some(dir) = out_dir {
        write_rmse_by_eps(&dir.join("rmse_by_eps.csv"), &by_eps)?;
        write_cells(&dir.join("cells.csv"), &rows)?;
        write_summary(&dir.join("summary.json"), &summary)?;
    }
    Ok(SweepOutput { rows, by_eps, summary })
}

/// A single proposal at a single step size for one seed.
pub fn cmd_run(
    cfg: &ExperimentConfig,
    proposal: ProposalKind,
    eps: f64,
    seed: u64,
    workers: usize,
    out_dir: Option<&Path>,
) -> Result<CellResult, HarnessError> {
    let mut single = cfg.clone();
    single.proposals = vec![proposal];
    single.first_seed = seed;
    single.n_seeds = 1;
    match proposal {
        ProposalKind::Rw => single.eps_rw = Some(vec![eps]),
        ProposalKind::Fo => single.eps_fo = Some(vec![eps]),
        ProposalKind::So => single.eps_so = Some(vec![eps]),
    }
    let mut out = cmd_sweep(&single, workers, out_dir)?;
    Ok(out.rows.remove(0))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Header of `results.csv` for `d` parameters.
pub fn results_header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = ["model", "proposal", "eps", "seed", "status"].map(String::from).to_vec();
    h.extend((1..=d).map(|i| format!("theta_hat_{i}")));
    h.push("rmse".into());
    h.extend((1..=d).map(|i| format!("sq_err_{i}")));
    h.push("wall_s".into());
    h
}

/// One `results.csv` record.
pub fn results_record(r: &CellResult, d: usize) -> Vec<String> {
    let mut rec = vec![
        r.model.to_string(),
        r.proposal.to_string(),
        r.eps.to_string(),
        r.seed.to_string(),
        r.status.as_str().to_string(),
    ];
    let spread = |v: &Option<Vec<f64>>| -> Vec<String> {
        match v {
            Some(v) => v.iter().map(|x| x.to_string()).collect(),
            None => vec![String::new(); d],
        }
    };
    rec.extend(spread(&r.theta_hat));
    rec.push(fmt_opt(r.rmse));
    rec.extend(spread(&r.sq_err));
    rec.push(format!("{:.6}", r.wall_s));
    rec
}

pub struct ResultsWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
    dim: usize,
}

impl ResultsWriter {
    pub fn create(path: &Path, dim: usize) -> Result<Self, HarnessError> {
        let mut inner = csv::Writer::from_path(path).map_err(csv_err(path))?;
        inner.write_record(results_header(dim)).map_err(csv_err(path))?;
        inner.flush().map_err(io_err(path))?;
        Ok(ResultsWriter {
            path: path.to_path_buf(),
            inner,
            dim,
        })
    }

    pub fn write(&mut self, row: &CellResult) -> Result<(), HarnessError> {
        self.inner
            .write_record(results_record(row, self.dim))
            .map_err(csv_err(&self.path))?;
        self.inner.flush().map_err(io_err(&self.path))
    }
}

pub fn write_rmse_by_eps(path: &Path, cells: &[EpsSummary]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["proposal", "eps", "rmse_mean", "rmse_q25", "rmse_q75", "n_failed"])
        .map_err(csv_err(path))?;
    for c in cells {
        w.write_record([
            c.proposal.to_string(),
            c.eps.to_string(),
            fmt_opt(c.rmse_mean),
            fmt_opt(c.rmse_q25),
            fmt_opt(c.rmse_q75),
            c.n_failed.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_cells(path: &Path, rows: &[CellResult]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["proposal", "eps", "seed", "status", "moves", "fallbacks", "error"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.proposal.to_string(),
            r.eps.to_string(),
            r.seed.to_string(),
            r.status.as_str().to_string(),
            r.moves.to_string(),
            r.fallbacks.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_summary(path: &Path, summary: &[ProposalSummary]) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(summary).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut f = File::create(path).map_err(io_err(path))?;
    writeln!(f, "{text}").map_err(io_err(path))
}
