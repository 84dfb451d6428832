//! Discrete-time stochastic SIR model with Poisson observations of `I_t`.
//!
//! ```text
//! S_t = S_{t-1} - β I_{t-1} S_{t-1} + ε_β
//! I_t = I_{t-1} + β I_{t-1} S_{t-1} - γ I_{t-1} - ε_β + ε_γ
//! R_t = N_pop - S_t - I_t
//! y_t ~ Poisson(I_t)
//! ```
//!
//! The filter is a bootstrap filter: particles follow the dynamics and are
//! weighted by the Poisson observation density.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::{DiffState, PriorSpec, StateSpaceModel};
use crate::jet::Scalar;
use crate::rng::{mix_seed, tags};

const BETA: usize = 0;
const GAMMA: usize = 1;

const S: usize = 0;
const I: usize = 1;
const R: usize = 2;

/// Floor applied to the infected compartment so the Poisson mean stays positive.
pub const SIR_I_MIN: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Sir {
    prior: PriorSpec,
    pub n_pop: f64,
    pub i0: f64,
    /// Variance of each of ε_β and ε_γ.
    pub noise_var: f64,
}

impl Sir {
    pub const TRUE_THETA: [f64; 2] = [0.6, 0.3];
    pub const N_POP: f64 = 763.0;

    pub fn new() -> Self {
        Sir {
            prior: PriorSpec::uniform(&[(0.0, 1.0), (0.0, 1.0)]),
            n_pop: Self::N_POP,
            i0: 1.0,
            noise_var: 0.5,
        }
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Self {
        assert!(noise_var >= 0.0);
        self.noise_var = noise_var;
        self
    }

    pub fn with_prior(mut self, prior: PriorSpec) -> Self {
        assert_eq!(prior.dim(), 2, "SIR has two parameters");
        self.prior = prior;
        self
    }

    pub fn initial_values(&self) -> [f64; 3] {
        [self.n_pop - self.i0, self.i0, 0.0]
    }
}

impl Default for Sir {
    fn default() -> Self {
        Self::new()
    }
}

/// One SIR transition with clamping: `S_t ∈ [0, N_pop]`, `I_t ≥ I_min`.
/// A clamped compartment becomes a constant (its derivatives are zero).
pub fn sir_step<T: Scalar>(
    theta: &[T],
    state: &DiffState<T>,
    noise: &[f64],
    n_pop: f64,
    noise_sd: f64,
) -> DiffState<T> {
    let (s, i) = (state.x[S], state.x[I]);
    let e_beta = noise_sd * noise[0];
    let e_gamma = noise_sd * noise[1];
    let infections = theta[BETA] * i * s;
    let mut s_next = s - infections + e_beta;
    let mut i_next = i + infections - theta[GAMMA] * i - e_beta + e_gamma;
    if s_next.value() < 0.0 {
        s_next = T::constant(0.0);
    } else if s_next.value() > n_pop {
        s_next = T::constant(n_pop);
    }
    if !(i_next.value() >= SIR_I_MIN) {
        i_next = T::constant(SIR_I_MIN);
    }
    let r_next = T::constant(n_pop) - s_next - i_next;
    let mut next = *state;
    next.x[S] = s_next;
    next.x[I] = i_next;
    next.x[R] = r_next;
    next
}

/// `log P(y; I_t)`, Poisson with mean `I_t`, differentiated through `I_t(θ)`.
pub fn sir_obs_logdensity<T: Scalar>(state: &DiffState<T>, y: f64) -> T {
    let i = state.x[I];
    let mean = i.value();
    let f = y * mean.ln() - mean - libm::lgamma(y + 1.0);
    i.chain1(f, y / mean - 1.0, -y / (mean * mean))
}

impl StateSpaceModel for Sir {
    fn name(&self) -> &'static str {
        "sir"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["beta", "gamma"]
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn noise_dim(&self) -> usize {
        2
    }

    fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    type Coeffs<T: Scalar> = [T; 2];

    fn coefficients<T: Scalar>(&self, theta: &[T]) -> [T; 2] {
        [theta[BETA], theta[GAMMA]]
    }

    fn initial_state<T: Scalar>(&self, _coeffs: &[T; 2]) -> DiffState<T> {
        DiffState::constant(&self.initial_values())
    }

    #[inline]
    fn propagate<T: Scalar>(&self, theta: &[T; 2], prev: &DiffState<T>, _y: f64, noise: &[f64]) -> DiffState<T> {
        sir_step(theta, prev, noise, self.n_pop, self.noise_var.sqrt())
    }

    #[inline]
    fn log_weight<T: Scalar>(&self, _theta: &[T; 2], _prev: &DiffState<T>, next: &DiffState<T>, y: f64) -> T {
        sir_obs_logdensity(next, y)
    }

    fn simulate_observations(&self, theta: &[f64], t_len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, tags::SIMULATE, 2]));
        let mut state = DiffState::<f64>::constant(&self.initial_values());
        let sd = self.noise_var.sqrt();
        (0..t_len)
            .map(|_| {
                let noise: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
                state = sir_step(theta, &state, &noise, self.n_pop, sd);
                let mean = state.x[I].max(SIR_I_MIN);
                Poisson::new(mean).expect("finite positive Poisson mean").sample(&mut rng)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet2;
    use rand::Rng;

    fn vars(b: f64, g: f64) -> [Jet2; 2] {
        [Jet2::variable(b, 0), Jet2::variable(g, 1)]
    }

    #[test]
    fn no_dynamics_when_rates_vanish() {
        let st = DiffState::<f64>::constant(&[500.0, 40.0, 223.0]);
        let next = sir_step(&[0.0, 0.0], &st, &[0.0, 0.0], 763.0, 0.5f64.sqrt());
        assert_eq!(next.x[S], 500.0);
        assert_eq!(next.x[I], 40.0);
    }

    #[test]
    fn first_step_by_substitution() {
        let st = DiffState::<f64>::constant(&[762.0, 1.0, 0.0]);
        let next = sir_step(&[0.6, 0.3], &st, &[0.0, 0.0], 763.0, 1.0);
        assert_eq!(next.x[S], 762.0 - 0.6 * 762.0);
        assert_eq!(next.x[I], 1.0 + 0.6 * 762.0 - 0.3);
        assert_eq!(next.x[R], 763.0 - next.x[S] - next.x[I]);
    }

    #[test]
    fn infection_derivative_from_constant_state() {
        let st = DiffState::<Jet2>::constant(&[700.0, 3.0, 60.0]);
        let next = sir_step(&vars(0.001, 0.2), &st, &[0.1, -0.3], 763.0, 0.5f64.sqrt());
        assert!((next.x[I].g[BETA] - 3.0 * 700.0).abs() < 1e-12);
        assert!((next.x[I].g[GAMMA] + 3.0).abs() < 1e-12);
        assert!((next.x[S].g[BETA] + 3.0 * 700.0).abs() < 1e-12);
        // R carries the negated sum of the other derivatives
        assert!((next.x[R].g[BETA] + next.x[S].g[BETA] + next.x[I].g[BETA]).abs() < 1e-12);
    }

    #[test]
    fn clamped_compartments_lose_derivatives() {
        let st = DiffState::<Jet2>::constant(&[300.0, 400.0, 63.0]);
        let next = sir_step(&vars(0.9, 0.3), &st, &[0.0, 0.0], 763.0, 0.0);
        assert_eq!(next.x[S].v, 0.0);
        assert_eq!(next.x[S].g, [0.0; 3]);
        let st = DiffState::<Jet2>::constant(&[0.0, 0.5, 762.5]);
        let next = sir_step(&vars(0.1, 0.9), &st, &[0.0, -3.0], 763.0, 1.0);
        assert_eq!(next.x[I].v, SIR_I_MIN);
        assert_eq!(next.x[I].g, [0.0; 3]);
    }

    #[test]
    fn poisson_density_examples() {
        let st = DiffState::<Jet2>::constant(&[762.0, 1.0, 0.0]);
        let l = sir_obs_logdensity(&st, 0.0);
        assert_eq!(l.v, -1.0);
        assert_eq!(l.g, [0.0; 3]);
        assert_eq!(l.h, [[0.0; 3]; 3]);

        // at the mode y = I the (y/I - 1) channel vanishes
        let mut st = DiffState::<Jet2>::constant(&[700.0, 12.0, 51.0]);
        st.x[I].g = [4.0, -2.0, 0.0];
        st.x[I].h[0][0] = 1.5;
        let l = sir_obs_logdensity(&st, 12.0);
        assert!(l.g.iter().all(|g| g.abs() < 1e-14));
        // only the curvature term remains: -y/I² · dI dIᵀ
        assert!((l.h[0][1] - (-12.0 / 144.0) * 4.0 * -2.0).abs() < 1e-14);
    }

    fn composite(theta: [f64; 2], base: &DiffState<f64>, noise: &[[f64; 2]]) -> DiffState<f64> {
        let mut st = *base;
        for n in noise {
            st = sir_step(&theta, &st, n, 763.0, 0.5f64.sqrt());
        }
        st
    }

    #[test]
    fn propagated_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let base = DiffState::<f64>::constant(&[650.0, 20.0, 93.0]);
        for _ in 0..10 {
            let theta = [rng.random_range(0.0001..0.002), rng.random_range(0.05..0.5)];
            let noise: Vec<[f64; 2]> = (0..4)
                .map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)])
                .collect();
            let mut st = DiffState::<Jet2>::constant(&[650.0, 20.0, 93.0]);
            let th = vars(theta[0], theta[1]);
            for n in &noise {
                st = sir_step(&th, &st, n, 763.0, 0.5f64.sqrt());
            }
            let y = 35.0;
            let obs = sir_obs_logdensity(&st, y);
            let h = 1e-7;
            for i in 0..2 {
                let (mut up, mut dn) = (theta, theta);
                up[i] += h;
                dn[i] -= h;
                let (su, sd) = (composite(up, &base, &noise), composite(dn, &base, &noise));
                for k in 0..3 {
                    let fd = (su.x[k] - sd.x[k]) / (2.0 * h);
                    assert!((fd - st.x[k].g[i]).abs() <= 1e-6 * fd.abs().max(1.0), "dx{k}/dθ{i}");
                }
                let fd_obs = (sir_obs_logdensity(&su, y) - sir_obs_logdensity(&sd, y)) / (2.0 * h);
                assert!((fd_obs - obs.g[i]).abs() <= 1e-5 * fd_obs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn population_is_conserved() {
        let m = Sir::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = m.coefficients(&[0.001, 0.1]);
        let mut st = m.initial_state::<f64>(&c);
        for _ in 0..36 {
            let noise = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            st = m.propagate(&c, &st, 0.0, &noise);
            assert_eq!(st.x[R], m.n_pop - st.x[S] - st.x[I]);
        }
    }

    #[test]
    fn simulation_examples() {
        let m = Sir::new();
        let a = m.simulate_observations(&Sir::TRUE_THETA, 36, 1);
        assert_eq!(a.len(), 36);
        assert_eq!(a, m.simulate_observations(&Sir::TRUE_THETA, 36, 1));
        assert!(a.iter().all(|y| *y >= 0.0 && y.fract() == 0.0));

        // without transmission the epidemic dies out
        let quiet = m.simulate_observations(&[0.0, 0.5], 36, 3);
        let zeros = quiet[18..].iter().filter(|&&y| y == 0.0).count();
        assert!(zeros >= 15, "{quiet:?}");
    }
}
