//! The second-order proposal needs a positive-definite negative Hessian.
//! A hook replaces the estimate for a few samples with an indefinite matrix;
//! those moves revert to the first-order proposal.
//!
//! ```bash
//! cargo run --release --example so_fallback
//! ```

use std::sync::Arc;

use smc_squared::harness::indefinite_matrix;
use smc_squared::linalg::is_positive_definite;
use smc_squared::models::{simulate, Lgss};
use smc_squared::pf::CrnStreams;
use smc_squared::smc2::{HessianHook, ProposalConfig, ProposalKind, Sampler, SamplerConfig, SamplerOptions};

fn main() -> anyhow::Result<()> {
    let model = Lgss::new();
    let data = simulate(&model, &Lgss::TRUE_THETA, 100, 0);
    let poisoned = [0usize, 5, 9];
    let hook: HessianHook = Arc::new(move |_iteration, sample, neg_hess| {
        if !is_positive_definite(neg_hess) {
            eprintln!("sample {sample}: estimated curvature already indefinite");
        }
        poisoned.contains(&sample).then(|| indefinite_matrix(neg_hess.dim()))
    });
    let config = SamplerConfig {
        n_samples: 16,
        iterations: 6,
        n_particles: 500,
    };
    let sampler = Sampler::new(&model, &data.observations, CrnStreams::new(3), config, ProposalConfig::new(ProposalKind::So, 1.0)?)?
        .with_options(SamplerOptions {
            hessian_hook: Some(hook),
            ..Default::default()
        });

    let mut pop = sampler.init_population()?;
    for _ in 1..6 {
        let r = sampler.step(&mut pop)?;
        let fell_back: Vec<usize> = (0..r.fallback_used.len()).filter(|&i| r.fallback_used[i]).collect();
        println!("iteration {}: FO fallback on samples {fell_back:?}", r.iteration);
    }
    println!("{} SO moves, {} fell back ({:.0}%)", pop.moves, pop.fallbacks, 100.0 * pop.fallbacks as f64 / pop.moves as f64);
    Ok(())
}
