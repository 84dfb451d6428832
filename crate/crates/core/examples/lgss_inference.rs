//! Parameter inference on the linear-Gaussian model, printing the sampler's
//! progress iteration by iteration.
//!
//! ```bash
//! cargo run --release --example lgss_inference -- so 1.55
//! cargo run --release --example lgss_inference -- fo 0.03 3
//! ```

use smc_squared::models::{simulate, Lgss};
use smc_squared::pf::CrnStreams;
use smc_squared::smc2::{ProposalConfig, ProposalKind, Sampler, SamplerConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: ProposalKind = args.first().map_or(Ok(ProposalKind::So), |s| s.parse())?;
    let eps: f64 = args.get(1).map_or(Ok(1.55), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |s| s.parse())?;

    let model = Lgss::new();
    let data = simulate(&model, &Lgss::TRUE_THETA, 500, seed);
    let config = SamplerConfig {
        n_samples: 32,
        iterations: 15,
        n_particles: 500,
    };
    let sampler = Sampler::new(&model, &data.observations, CrnStreams::new(seed), config.clone(), ProposalConfig::new(kind, eps)?)?;

    let mut pop = sampler.init_population()?;
    println!("iter   ESS   resampled  weighted mean (mu, phi, sigma)");
    let mean_of = |pop: &smc_squared::smc2::SamplerPopulation| -> Vec<f64> {
        let snap = pop.snapshots.last().unwrap();
        (0..3)
            .map(|j| snap.thetas.iter().zip(&snap.weights).map(|(t, w)| w * t[j]).sum())
            .collect()
    };
    println!("{:>4} {:>6.2} {:>9}  {:.4?}", 0, pop.ess_history[0], "-", mean_of(&pop));
    for _ in 1..config.iterations {
        let r = sampler.step(&mut pop)?;
        println!("{:>4} {:>6.2} {:>9}  {:.4?}", r.iteration, r.ess, r.resampled, mean_of(&pop));
    }
    let est = pop.recycled_mean().expect("non-empty population");
    println!("\nrecycled posterior mean {est:.4?} (truth {:?})", Lgss::TRUE_THETA);
    if kind == ProposalKind::So {
        println!("SO moves {}, fallbacks to FO {}", pop.moves, pop.fallbacks);
    }
    Ok(())
}
