//! Common-random-number differentiable particle filter.
//!
//! For a fixed set of random streams the filter's log-likelihood estimate
//! `log p̂(y_{1:T} | θ)` is a piecewise-smooth function of θ. The filter
//! returns its exact gradient and Hessian on the current piece: states and
//! log-weights are propagated as [`Scalar`] jets, and resampling indices are
//! held fixed (children copy the parent's full jet state; log-weights reset
//! to constants).

mod resample;

use thiserror::Error;

use crate::jet::{Jet1, Jet2, Scalar};
use crate::linalg::SymMatrix;
use crate::models::{DiffState, StateSpaceModel};
use crate::rng::{mix_seed, tags};

pub use crate::rng::CrnStreams;
pub use resample::{ess, log_mean_exp, systematic_resample, systematic_resample_into};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PfError {
    #[error("all particle weights vanished{}", step.map(|t| format!(" at step {t}")).unwrap_or_default())]
    DegenerateCloud { step: Option<usize> },
    #[error("particle filter needs at least 2 particles, got {0}")]
    TooFewParticles(usize),
    #[error("dataset is empty")]
    EmptyData,
}

/// Which derivatives of the log-likelihood to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

impl Order {
    pub fn as_usize(self) -> usize {
        match self {
            Order::Value => 0,
            Order::Gradient => 1,
            Order::Hessian => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PfDiagnostics {
    pub resample_count: usize,
    /// Hash of every ancestor vector; equal hashes mean the same resampling path.
    pub ancestry_hash: u64,
}

/// Output of one filter run.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLikEstimate {
    pub loglik: f64,
    pub grad: Option<Vec<f64>>,
    /// `-∇² log p̂(y | θ)`.
    pub neg_hess: Option<SymMatrix>,
    pub diagnostics: PfDiagnostics,
}

impl LogLikEstimate {
    fn from_scalar<S: Scalar>(ll: S, dim: usize, diagnostics: PfDiagnostics) -> Self {
        let grad = (S::ORDER >= 1).then(|| (0..dim).map(|i| ll.grad(i)).collect());
        let neg_hess = (S::ORDER >= 2).then(|| SymMatrix::from_fn(dim, |i, j| -ll.hess(i, j)));
        LogLikEstimate {
            loglik: ll.value(),
            grad,
            neg_hess,
            diagnostics,
        }
    }

    pub fn degenerate() -> Self {
        LogLikEstimate {
            loglik: f64::NEG_INFINITY,
            grad: None,
            neg_hess: None,
            diagnostics: PfDiagnostics::default(),
        }
    }
}

/// Particles with log-weights. Each log-weight jet carries `d log w/dθ` and
/// `d² log w/dθ²` next to its value.
#[derive(Clone, Debug)]
pub struct ParticleCloud<S> {
    pub particles: Vec<DiffState<S>>,
    pub log_weights: Vec<S>,
    normalized: Vec<f64>,
    scratch: Vec<DiffState<S>>,
    ancestors: Vec<usize>,
}

impl<S: Scalar> ParticleCloud<S> {
    pub fn new(particles: Vec<DiffState<S>>) -> Self {
        let n = particles.len();
        ParticleCloud {
            particles,
            log_weights: vec![S::constant(0.0); n],
            normalized: vec![1.0 / n as f64; n],
            scratch: Vec::with_capacity(n),
            ancestors: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Normalized weights as of the last [`normalize`](Self::normalize).
    pub fn weights(&self) -> &[f64] {
        &self.normalized
    }

    /// Rescales log-weights to have mean weight one and returns the log mean
    /// weight before rescaling (the likelihood increment).
    pub fn normalize(&mut self) -> Result<S, PfError> {
        let lmw = log_mean_exp(&self.log_weights, &mut self.normalized)?;
        for lw in self.log_weights.iter_mut() {
            *lw = *lw - lmw;
        }
        Ok(lmw)
    }

    pub fn ess(&self) -> f64 {
        ess(&self.normalized)
    }

    /// Systematic resampling with offset `u`. Children inherit the parent's
    /// state jets; log-weights reset to uniform constants. Returns the
    /// ancestor indices.
    pub fn resample(&mut self, u: f64) -> &[usize] {
        let n = self.len();
        systematic_resample_into(&self.normalized, u, n, &mut self.ancestors);
        self.scratch.clear();
        self.scratch.extend(self.ancestors.iter().map(|&a| self.particles[a]));
        std::mem::swap(&mut self.particles, &mut self.scratch);
        self.log_weights.iter_mut().for_each(|w| *w = S::constant(0.0));
        self.normalized.iter_mut().for_each(|w| *w = 1.0 / n as f64);
        &self.ancestors
    }
}

/// Runs the filter at the requested derivative order.
///
/// The propagation noise for step `t` comes from the stream
/// `(PF_PROPAGATE, sample_id, t)` and the resampling offset from
/// `(PF_RESAMPLE, sample_id, t)`; the offset is drawn at every step whether
/// or not resampling fires, so stream alignment never depends on θ.
pub fn run_pf<M: StateSpaceModel>(
    model: &M,
    theta: &[f64],
    observations: &[f64],
    streams: &CrnStreams,
    sample_id: u64,
    n_particles: usize,
    order: Order,
) -> Result<LogLikEstimate, PfError> {
    let dim = theta.len();
    assert!(dim <= crate::jet::MAX_PARAMS, "at most {} parameters", crate::jet::MAX_PARAMS);
    match order {
        Order::Value => filter::<f64, M>(model, theta, observations, streams, sample_id, n_particles)
            .map(|(ll, d)| LogLikEstimate::from_scalar(ll, dim, d)),
        Order::Gradient => filter::<Jet1, M>(model, theta, observations, streams, sample_id, n_particles)
            .map(|(ll, d)| LogLikEstimate::from_scalar(ll, dim, d)),
        Order::Hessian => filter::<Jet2, M>(model, theta, observations, streams, sample_id, n_particles)
            .map(|(ll, d)| LogLikEstimate::from_scalar(ll, dim, d)),
    }
}

/// The filter loop, generic over the derivative carrier.
pub fn filter<S: Scalar, M: StateSpaceModel>(
    model: &M,
    theta: &[f64],
    observations: &[f64],
    streams: &CrnStreams,
    sample_id: u64,
    n_particles: usize,
) -> Result<(S, PfDiagnostics), PfError> {
    if n_particles < 2 {
        return Err(PfError::TooFewParticles(n_particles));
    }
    if observations.is_empty() {
        return Err(PfError::EmptyData);
    }
    let th: Vec<S> = theta.iter().enumerate().map(|(i, &v)| S::variable(v, i)).collect();
    let coeffs = model.coefficients(&th);
    let mut cloud = ParticleCloud::new(vec![model.initial_state(&coeffs); n_particles]);
    let noise_dim = model.noise_dim();
    let mut noise = vec![0.0; n_particles * noise_dim];
    let mut loglik = S::constant(0.0);
    let mut diagnostics = PfDiagnostics::default();
    let threshold = n_particles as f64 / 2.0;

    for (t, &y) in observations.iter().enumerate() {
        streams.fill_normals(tags::PF_PROPAGATE, sample_id, t as u64, &mut noise);
        let u = streams.uniform(tags::PF_RESAMPLE, sample_id, t as u64);

        for ((state, lw), eps) in cloud
            .particles
            .iter_mut()
            .zip(cloud.log_weights.iter_mut())
            .zip(noise.chunks_exact(noise_dim))
        {
            let (next, incr) = model.advance(&coeffs, state, y, eps);
            *state = next;
            *lw = *lw + incr;
        }

        let increment = cloud
            .normalize()
            .map_err(|_| PfError::DegenerateCloud { step: Some(t) })?;
        loglik = loglik + increment;

        if cloud.ess() < threshold {
            let ancestors = cloud.resample(u);
            let mut h = diagnostics.ancestry_hash ^ t as u64;
            for &a in ancestors {
                h = mix_seed(&[h, a as u64]);
            }
            diagnostics.ancestry_hash = h;
            diagnostics.resample_count += 1;
        }
    }
    Ok((loglik, diagnostics))
}
