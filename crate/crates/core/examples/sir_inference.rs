//! Inference of (β, γ) in the stochastic SIR model from Poisson counts,
//! comparing the three proposals on one dataset.
//!
//! ```bash
//! cargo run --release --example sir_inference
//! ```

use std::time::Instant;

use smc_squared::models::{simulate, Sir};
use smc_squared::pf::CrnStreams;
use smc_squared::smc2::{ProposalConfig, ProposalKind, Sampler, SamplerConfig};

fn main() -> anyhow::Result<()> {
    let model = Sir::new();
    let data = simulate(&model, &Sir::TRUE_THETA, 36, 1);
    println!("observed I_t: {:?}", &data.observations[..12]);

    let config = SamplerConfig {
        n_samples: 32,
        iterations: 15,
        n_particles: 500,
    };
    for (kind, eps) in [(ProposalKind::Rw, 0.55), (ProposalKind::Fo, 0.008), (ProposalKind::So, 2.05)] {
        let sampler = Sampler::new(&model, &data.observations, CrnStreams::new(5), config.clone(), ProposalConfig::new(kind, eps)?)?;
        let start = Instant::now();
        match sampler.run() {
            Ok(pop) => {
                let mean = pop.recycled_mean().unwrap();
                println!(
                    "{kind}-{eps:<6} beta {:.4} gamma {:.4}  final ESS {:>5.1}  {:.2}s",
                    mean[0],
                    mean[1],
                    pop.ess_history.last().unwrap(),
                    start.elapsed().as_secs_f64()
                );
            }
            // large gradients can push every proposal out of the prior box
            Err(e) => println!("{kind}-{eps:<6} failed: {e}"),
        }
    }
    Ok(())
}
