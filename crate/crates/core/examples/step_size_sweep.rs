//! A small (proposal × ε × seed) sweep through the harness API, writing the
//! same files as `smc2 sweep`.
//!
//! ```bash
//! cargo run --release --example step_size_sweep -- /tmp/sweep_sir
//! ```

use std::path::PathBuf;

use smc_squared::harness::{cmd_sweep, default_workers, ExperimentConfig, ModelKind};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("smc2_sweep_sir"), PathBuf::from);

    let cfg = ExperimentConfig::from_toml_str(
        r#"
        model = "sir"
        master_seed = 1
        n_seeds = 3
        n_particles = 200
        iterations = 8
        grid_count = 4
        range_fo = [0.0005, 0.004]
        "#,
    )?;
    let result = cmd_sweep(&cfg, default_workers(), Some(&out))?;

    println!("{:<4} {:>9} {:>10} {:>10} {:>10} {:>7}", "prop", "eps", "rmse", "q25", "q75", "failed");
    for c in &result.by_eps {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!(
            "{:<4} {:>9.5} {:>10} {:>10} {:>10} {:>7}",
            c.proposal,
            c.eps,
            f(c.rmse_mean),
            f(c.rmse_q25),
            f(c.rmse_q75),
            c.n_failed
        );
    }
    println!();
    for s in &result.summary {
        println!(
            "{}-{:<8.4} means {:.4?} rmse {:.4} rr {:.2} (IQR over ε {:.4})",
            s.proposal,
            s.eps_median,
            s.means,
            s.rmse,
            s.rr.unwrap_or(f64::NAN),
            s.rmse_iqr
        );
    }
    println!("\nwrote {}", out.display());
    assert_eq!(cfg.model, ModelKind::Sir);
    Ok(())
}
