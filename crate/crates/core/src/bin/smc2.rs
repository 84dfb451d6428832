//! Command-line front end: `generate`, `run` and `sweep`.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use smc_squared::harness::{
    cmd_generate, cmd_run, cmd_sweep, default_workers, results_header, results_record, ExperimentConfig, ModelKind,
    WORKERS_ENV,
};
use smc_squared::smc2::ProposalKind;

#[derive(Parser)]
#[command(name = "smc2", version, about = "SMC² with RW, first- and second-order proposals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate datasets, one CSV (+ JSON sidecar) per seed.
    Generate {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        /// Comma-separated true parameters (defaults to the model's).
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// SIR noise variance.
        #[arg(long)]
        noise_var: Option<f64>,
    },
    /// One proposal at one step size on one seed; prints a results row.
    Run {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        proposal: ProposalKind,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        common: RunArgs,
    },
    /// Full (proposal × ε × seed) sweep from a TOML config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    n_particles: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// Read datasets from this directory instead of simulating them.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Sample indices given an indefinite Hessian before each SO move.
    #[arg(long, value_delimiter = ',')]
    inject_indefinite: Option<Vec<usize>>,
    #[arg(long, help = format!("worker threads [default: ${WORKERS_ENV} or CPU count]"))]
    workers: Option<usize>,
    /// Also write results.csv and the aggregate files here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            model,
            t,
            seeds,
            out,
            first_seed,
            theta,
            noise_var,
        } => {
            let mut cfg = ExperimentConfig::new(model, 0);
            cfg.t = Some(t);
            cfg.n_seeds = seeds;
            cfg.first_seed = first_seed;
            cfg.true_theta = theta;
            cfg.noise_var = noise_var;
            for path in cmd_generate(&cfg, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Run {
            model,
            proposal,
            eps,
            seed,
            common: a,
        } => {
            let mut cfg = ExperimentConfig::new(model, a.master_seed);
            cfg.t = a.t;
            cfg.true_theta = a.theta;
            cfg.data_dir = a.data_dir;
            cfg.n_particles = a.n_particles.unwrap_or(cfg.n_particles);
            cfg.n_samples = a.n_samples.unwrap_or(cfg.n_samples);
            cfg.iterations = a.iterations.unwrap_or(cfg.iterations);
            cfg.inject_indefinite = a.inject_indefinite.unwrap_or_default();
            let workers = a.workers.unwrap_or_else(default_workers);
            let row = cmd_run(&cfg, proposal, eps, seed, workers, a.out.as_deref())?;
            let d = model.n_params();
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(results_header(d))?;
            w.write_record(results_record(&row, d))?;
            w.flush()?;
            if let Some(err) = &row.error {
                eprintln!("run failed: {err}");
            }
            if proposal == ProposalKind::So {
                eprintln!("SO moves: {}, fallbacks to FO: {}", row.moves, row.fallbacks);
            }
        }
        Command::Sweep { config, workers, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let workers = workers.or(cfg.workers).unwrap_or_else(default_workers);
            let out = out
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from(format!("sweep_{}", cfg.model)));
            let result = cmd_sweep(&cfg, workers, Some(&out)).with_context(|| format!("sweep {}", config.display()))?;
            let mut stdout = std::io::stdout().lock();
            for s in &result.summary {
                writeln!(
                    stdout,
                    "{:>2}-{:<8.4} means {:.4?}  rmse {:.4e}  rr {}",
                    s.proposal.as_str().to_uppercase(),
                    s.eps_median,
                    s.means,
                    s.rmse,
                    s.rr.map_or("-".into(), |r| format!("{r:.2}"))
                )?;
            }
            let failed = result.rows.iter().filter(|r| !r.is_ok()).count();
            writeln!(stdout, "{} cells, {failed} failed; wrote {}", result.rows.len(), out.display())?;
        }
    }
    Ok(())
}
