//! State-space models with reparameterized propagation.
//!
//! Every model exposes its transition as a deterministic map of the previous
//! state, the parameters and an explicit standard-normal noise vector. With
//! the noise held fixed the filter output is a smooth function of θ, and the
//! derivatives of every state w.r.t. θ ride along in the [`Scalar`] type.

mod dataset;
mod kalman;
mod lgss;
mod prior;
mod sir;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::jet::{Jet2, Scalar};

pub use dataset::{dataset_stem, read_dataset, simulate, write_dataset, Dataset, DatasetError, DatasetMeta};
pub use kalman::kalman_loglik;
pub use lgss::{
    gaussian_obs_logdensity, lgss_bootstrap_propagate, lgss_optimal_proposal,
    lgss_weight_logdensity, Lgss,
};
pub use prior::{prior_logpdf, PriorSpec};
pub use sir::{sir_obs_logdensity, sir_step, Sir, SIR_I_MIN};

/// Largest latent state dimension over the shipped models.
pub const MAX_STATE: usize = 3;

/// A parameter point θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// θ as independent variables of a jet.
    pub fn to_scalars<S: Scalar>(&self) -> Vec<S> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &v)| S::variable(v, i))
            .collect()
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// Latent state with its first and second derivatives w.r.t. θ.
///
/// Only the first `state_dim` slots are meaningful for a given model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffState<S> {
    pub x: [S; MAX_STATE],
}

impl<S: Scalar> DiffState<S> {
    pub fn constant(values: &[f64]) -> Self {
        let mut x = [S::constant(0.0); MAX_STATE];
        for (slot, &v) in x.iter_mut().zip(values) {
            *slot = S::constant(v);
        }
        DiffState { x }
    }

    pub fn value(&self, k: usize) -> f64 {
        self.x[k].value()
    }

    pub fn dx_dtheta(&self, k: usize, i: usize) -> f64 {
        self.x[k].grad(i)
    }

    pub fn d2x_dtheta2(&self, k: usize, i: usize, j: usize) -> f64 {
        self.x[k].hess(i, j)
    }
}

/// Log observation density with gradient and Hessian w.r.t. θ.
pub type ObsLogDensity = Jet2;

/// A state-space model whose transition is reparameterized by explicit noise.
pub trait StateSpaceModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn param_names(&self) -> &'static [&'static str];

    fn n_params(&self) -> usize {
        self.param_names().len()
    }

    fn state_dim(&self) -> usize;

    /// Standard-normal draws consumed per particle per step.
    fn noise_dim(&self) -> usize;

    fn prior(&self) -> &PriorSpec;

    /// Per-θ quantities shared by every particle, computed once per filter run.
    type Coeffs<S: Scalar>: Send + Sync;

    fn coefficients<S: Scalar>(&self, theta: &[S]) -> Self::Coeffs<S>;

    fn initial_state<S: Scalar>(&self, coeffs: &Self::Coeffs<S>) -> DiffState<S>;

    /// Draws `x_t` from the filter's proposal given `x_{t-1}` and `noise`.
    fn propagate<S: Scalar>(&self, coeffs: &Self::Coeffs<S>, prev: &DiffState<S>, y: f64, noise: &[f64]) -> DiffState<S>;

    /// Log incremental importance weight for the move `prev → next`.
    fn log_weight<S: Scalar>(&self, coeffs: &Self::Coeffs<S>, prev: &DiffState<S>, next: &DiffState<S>, y: f64) -> S;

    /// Moves a particle one step and returns its log incremental weight.
    #[inline]
    fn advance<S: Scalar>(&self, coeffs: &Self::Coeffs<S>, prev: &DiffState<S>, y: f64, noise: &[f64]) -> (DiffState<S>, S) {
        let next = self.propagate(coeffs, prev, y, noise);
        let w = self.log_weight(coeffs, prev, &next, y);
        (next, w)
    }

    /// Generates observations `y_1..y_T` from the generative model.
    fn simulate_observations(&self, theta: &[f64], t_len: usize, seed: u64) -> Vec<f64>;
}
