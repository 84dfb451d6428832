//! Plugging a new model into the filter and sampler: a stochastic
//! volatility model
//!
//!   x_t = a·x_{t-1} + s·v_t,   y_t ~ N(0, exp(x_t)),
//!
//! with a bootstrap proposal. Writing the transition over a generic
//! `Scalar` is all it takes to get gradients and Hessians.
//!
//! ```bash
//! cargo run --release --example custom_model
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use smc_squared::jet::Scalar;
use smc_squared::models::{gaussian_obs_logdensity, DiffState, PriorSpec, StateSpaceModel};
use smc_squared::pf::{run_pf, CrnStreams, Order};
use smc_squared::smc2::{ProposalConfig, ProposalKind, Sampler, SamplerConfig};

struct StochVol {
    prior: PriorSpec,
}

impl StateSpaceModel for StochVol {
    fn name(&self) -> &'static str {
        "stochvol"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["a", "s"]
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    type Coeffs<S: Scalar> = [S; 2];

    fn coefficients<S: Scalar>(&self, theta: &[S]) -> [S; 2] {
        [theta[0], theta[1]]
    }

    fn initial_state<S: Scalar>(&self, _c: &[S; 2]) -> DiffState<S> {
        DiffState::constant(&[0.0])
    }

    fn propagate<S: Scalar>(&self, c: &[S; 2], prev: &DiffState<S>, _y: f64, noise: &[f64]) -> DiffState<S> {
        let mut next = *prev;
        next.x[0] = c[0] * prev.x[0] + c[1] * noise[0];
        next
    }

    fn log_weight<S: Scalar>(&self, _c: &[S; 2], _prev: &DiffState<S>, next: &DiffState<S>, y: f64) -> S {
        gaussian_obs_logdensity(y, S::constant(0.0), next.x[0].exp())
    }

    fn simulate_observations(&self, theta: &[f64], t_len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..t_len)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                let e: f64 = StandardNormal.sample(&mut rng);
                x = theta[0] * x + theta[1] * v;
                (0.5 * x).exp() * e
            })
            .collect()
    }
}

fn main() -> anyhow::Result<()> {
    let model = StochVol {
        prior: PriorSpec::uniform(&[(0.0, 1.0), (0.0, 2.0)]),
    };
    let truth = [0.9, 0.4];
    let ys = model.simulate_observations(&truth, 300, 42);

    let est = run_pf(&model, &truth, &ys, &CrnStreams::new(0), 0, 1_000, Order::Hessian)?;
    println!("log p̂ = {:.3}, gradient {:.3?}", est.loglik, est.grad.unwrap());
    println!("−Hessian {:.2?}", est.neg_hess.unwrap().rows());

    let config = SamplerConfig {
        n_samples: 32,
        iterations: 12,
        n_particles: 300,
    };
    let sampler = Sampler::new(&model, &ys, CrnStreams::new(1), config, ProposalConfig::new(ProposalKind::So, 1.0)?)?;
    let pop = sampler.run()?;
    println!("posterior mean {:.3?} (truth {truth:?}), fallbacks {}/{}", pop.recycled_mean().unwrap(), pop.fallbacks, pop.moves);
    Ok(())
}
