//! Linear Gaussian state-space model
//!
//! ```text
//! x_t | x_{t-1} ~ N(μ x_{t-1}, φ²)
//! y_t | x_t     ~ N(x_t, σ²)
//! ```
//!
//! with θ = (μ, φ, σ) and x₀ = 0. The filter samples from the locally
//! optimal proposal `p(x_t | x_{t-1}, y_t)` and weights by the predictive
//! `p(y_t | x_{t-1}) = N(y_t; μ x_{t-1}, φ² + σ²)`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DiffState, PriorSpec, StateSpaceModel};
use crate::jet::Scalar;
use crate::rng::{mix_seed, tags};

const MU: usize = 0;
const PHI: usize = 1;
const SIGMA: usize = 2;

#[derive(Clone, Debug)]
pub struct Lgss {
    prior: PriorSpec,
}

impl Lgss {
    pub const TRUE_THETA: [f64; 3] = [0.75, 1.0, 1.0];

    pub fn new() -> Self {
        Self::with_prior(PriorSpec::uniform(&[(0.0, 1.0), (0.0, 2.0), (0.0, 2.0)]))
    }

    pub fn with_prior(prior: PriorSpec) -> Self {
        assert_eq!(prior.dim(), 3, "LGSS has three parameters");
        Lgss { prior }
    }
}

impl Default for Lgss {
    fn default() -> Self {
        Self::new()
    }
}

/// Gaussian log-density `log N(y; h, R)` where the mean `h` and variance `R`
/// both carry derivatives w.r.t. θ. The derivatives are assembled from the
/// partials of the density in `h` and `R` through the two channels.
pub fn gaussian_obs_logdensity<S: Scalar>(y: f64, h: S, r: S) -> S {
    let var = r.value();
    let resid = y - h.value();
    let resid2 = resid * resid;
    let f = -0.5 * (2.0 * PI * var).ln() - 0.5 * resid2 / var;
    let f_h = resid / var;
    let f_r = -0.5 / var + 0.5 * resid2 / (var * var);
    let f_hh = -1.0 / var;
    let f_hr = -resid / (var * var);
    let f_rr = 0.5 / (var * var) - resid2 / (var * var * var);
    S::chain2(h, r, f, f_h, f_r, f_hh, f_hr, f_rr)
}

/// Optimal proposal `x_t = ρ²(σ⁻² y_t + φ⁻² μ x_{t-1}) + ρ·noise`, with
/// `ρ⁻² = φ⁻² + σ⁻²`.
pub fn lgss_optimal_proposal<S: Scalar>(theta: &[S], x_prev: S, y: f64, noise: f64) -> S {
    let phi2 = theta[PHI].square();
    let sig2 = theta[SIGMA].square();
    let rho2 = (phi2.recip() + sig2.recip()).recip();
    let mean = rho2 * (sig2.recip() * y + theta[MU] * x_prev / phi2);
    mean + rho2.sqrt() * noise
}

/// Predictive weight `log N(y_t; μ x_{t-1}, φ² + σ²)` for the optimal proposal.
pub fn lgss_weight_logdensity<S: Scalar>(theta: &[S], x_prev: S, y: f64) -> S {
    let h = theta[MU] * x_prev;
    let r = theta[PHI].square() + theta[SIGMA].square();
    gaussian_obs_logdensity(y, h, r)
}

/// Prior dynamics `x_t = μ x_{t-1} + φ·noise`.
pub fn lgss_bootstrap_propagate<S: Scalar>(theta: &[S], x_prev: S, noise: f64) -> S {
    theta[MU] * x_prev + theta[PHI] * noise
}

/// θ-only terms of the proposal and weight.
#[derive(Clone, Copy, Debug)]
pub struct LgssCoeffs<S> {
    mu: S,
    /// ρ²/σ²
    gain_y: S,
    /// ρ²μ/φ²
    gain_x: S,
    /// ρ
    proposal_sd: S,
    /// φ² + σ²
    predictive_var: S,
}

impl StateSpaceModel for Lgss {
    fn name(&self) -> &'static str {
        "lgss"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu", "phi", "sigma"]
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

    type Coeffs<S: Scalar> = LgssCoeffs<S>;

    fn coefficients<S: Scalar>(&self, theta: &[S]) -> LgssCoeffs<S> {
        let phi2 = theta[PHI].square();
        let sig2 = theta[SIGMA].square();
        let rho2 = (phi2.recip() + sig2.recip()).recip();
        LgssCoeffs {
            mu: theta[MU],
            gain_y: rho2 / sig2,
            gain_x: rho2 * theta[MU] / phi2,
            proposal_sd: rho2.sqrt(),
            predictive_var: phi2 + sig2,
        }
    }

    fn initial_state<S: Scalar>(&self, _coeffs: &LgssCoeffs<S>) -> DiffState<S> {
        DiffState::constant(&[0.0])
    }

    #[inline]
    fn propagate<S: Scalar>(&self, c: &LgssCoeffs<S>, prev: &DiffState<S>, y: f64, noise: &[f64]) -> DiffState<S> {
        let mut next = *prev;
        next.x[0] = c.gain_y * y + c.gain_x * prev.x[0] + c.proposal_sd * noise[0];
        next
    }

    #[inline]
    fn log_weight<S: Scalar>(&self, c: &LgssCoeffs<S>, prev: &DiffState<S>, _next: &DiffState<S>, y: f64) -> S {
        gaussian_obs_logdensity(y, c.mu * prev.x[0], c.predictive_var)
    }

    fn simulate_observations(&self, theta: &[f64], t_len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, tags::SIMULATE, 1]));
        let mut x = 0.0;
        (0..t_len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let e: f64 = StandardNormal.sample(&mut rng);
                x = lgss_bootstrap_propagate(theta, x, z);
                x + theta[SIGMA] * e
            })
            .collect()
    }
}
