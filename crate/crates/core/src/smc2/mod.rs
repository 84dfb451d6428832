//! Outer SMC sampler over θ.
//!
//! Each sample's target `log π(θ) = log prior(θ) + log p̂(y | θ)` is
//! estimated by a particle filter run at the derivative order its proposal
//! needs. Samples are moved by RW, FO or SO kernels and reweighted with
//!
//! ```text
//! log v_k = log v_{k-1} + log π(θ_k) − log π(θ_{k-1}) + log L_k − log q_k
//! ```
//!
//! and the posterior mean is recycled over every iteration with weights
//! proportional to that iteration's ESS.

mod proposal;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::SymMatrix;
use crate::models::{prior_logpdf, ParamVector, StateSpaceModel};
use crate::pf::{ess, log_mean_exp, run_pf, systematic_resample, CrnStreams, Order, PfError};
use crate::rng::tags;

pub use proposal::{
    leapfrog_finish, leapfrog_start, propose_fo, propose_rw, propose_so, rw_log_densities, Move,
    ProposalConfig, ProposalKind, TargetEval,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),
    #[error("unknown proposal {0:?} (expected rw, fo or so)")]
    UnknownProposal(String),
    #[error("sampler needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sampler needs at least one iteration")]
    NoIterations,
    #[error("every sample weight vanished at iteration {iteration}")]
    AllWeightsVanished { iteration: usize },
    #[error("particle filter: {0}")]
    Pf(#[from] PfError),
}

/// One weighted point of the sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerSample {
    pub theta: ParamVector,
    pub log_target: f64,
    pub grad: Option<Vec<f64>>,
    pub neg_hess: Option<SymMatrix>,
    pub momentum_out: Vec<f64>,
    pub fallback_used: bool,
}

impl SamplerSample {
    fn from_eval(theta: Vec<f64>, eval: TargetEval) -> Self {
        SamplerSample {
            theta: ParamVector(theta),
            log_target: eval.log_target,
            grad: eval.grad,
            neg_hess: eval.neg_hess,
            momentum_out: Vec::new(),
            fallback_used: false,
        }
    }
}

/// Particles and weights of one iteration, kept for recycling.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub thetas: Vec<ParamVector>,
    pub weights: Vec<f64>,
    pub ess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerPopulation {
    pub samples: Vec<SamplerSample>,
    /// Normalized log-weights.
    pub log_v: Vec<f64>,
    /// Index of the last completed iteration (0 = initialization).
    pub iteration: usize,
    pub ess_history: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// SO moves attempted and how many of them fell back to FO.
    pub moves: usize,
    pub fallbacks: usize,
}

impl SamplerPopulation {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_v.iter().map(|l| l.exp()).collect()
    }

    pub fn ess(&self) -> f64 {
        ess(&self.weights())
    }

    /// `Σ_k λ_k Σ_i w̃_k^i f(θ_k^i)` with `λ_k ∝ ESS_k`.
    pub fn recycled_estimate(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Option<Vec<f64>> {
        let total: f64 = self.snapshots.iter().map(|s| s.ess).sum();
        let mut acc: Option<Vec<f64>> = None;
        for snap in &self.snapshots {
            let lambda = snap.ess / total;
            for (theta, &w) in snap.thetas.iter().zip(&snap.weights) {
                if w == 0.0 {
                    continue;
                }
                let v = f(theta);
                let acc = acc.get_or_insert_with(|| vec![0.0; v.len()]);
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += lambda * w * x;
                }
            }
        }
        acc
    }

    pub fn recycled_mean(&self) -> Option<Vec<f64>> {
        self.recycled_estimate(|t| t.to_vec())
    }
}

/// Replaces a sample's `neg_hess` before an SO move. Called with
/// `(iteration, sample index, current neg_hess)`; returning `Some` overrides it.
pub type HessianHook = Arc<dyn Fn(usize, usize, &SymMatrix) -> Option<SymMatrix> + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Number of θ samples `N`.
    pub n_samples: usize,
    /// Iterations `K`, counting the initialization from the prior.
    pub iterations: usize,
    /// Particles per filter `N_x`.
    pub n_particles: usize,
}

#[derive(Clone, Default)]
pub struct SamplerOptions {
    /// Forces `L = q`, so weight updates telescope to target ratios.
    pub force_l_equals_q: bool,
    pub hessian_hook: Option<HessianHook>,
}

/// Prior plus filter likelihood at a single θ.
pub struct Target<'a, M> {
    pub model: &'a M,
    pub observations: &'a [f64],
    pub streams: CrnStreams,
    pub n_particles: usize,
}

impl<M: StateSpaceModel> Target<'_, M> {
    pub fn evaluate(&self, theta: &[f64], sample_id: u64, order: Order) -> Result<TargetEval, SamplerError> {
        let log_prior = prior_logpdf(self.model.prior(), theta);
        if !log_prior.is_finite() {
            return Ok(TargetEval::outside());
        }
        match run_pf(self.model, theta, self.observations, &self.streams, sample_id, self.n_particles, order) {
            Ok(est) if est.loglik.is_finite() => Ok(TargetEval {
                log_target: log_prior + est.loglik,
                grad: est.grad,
                neg_hess: est.neg_hess,
            }),
            Ok(_) | Err(PfError::DegenerateCloud { .. }) => Ok(TargetEval::outside()),
            Err(e) => Err(e.into()),
        }
    }
}

/// Per-iteration record of a sampler step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub iteration: usize,
    pub ess: f64,
    pub resampled: bool,
    pub fallback_used: Vec<bool>,
    /// `log v_k − log v_{k-1}` per sample, before normalization.
    pub log_increments: Vec<f64>,
    /// `log π` at each proposed point, in sample order before resampling.
    pub log_targets: Vec<f64>,
}

pub struct Sampler<'a, M> {
    pub target: Target<'a, M>,
    pub config: SamplerConfig,
    pub proposal: ProposalConfig,
    pub options: SamplerOptions,
}

impl<'a, M: StateSpaceModel> Sampler<'a, M> {
    pub fn new(
        model: &'a M,
        observations: &'a [f64],
        streams: CrnStreams,
        config: SamplerConfig,
        proposal: ProposalConfig,
    ) -> Result<Self, SamplerError> {
        if config.n_samples < 2 {
            return Err(SamplerError::TooFewSamples(config.n_samples));
        }
        if config.iterations == 0 {
            return Err(SamplerError::NoIterations);
        }
        if config.n_particles < 2 {
            return Err(PfError::TooFewParticles(config.n_particles).into());
        }
        if observations.is_empty() {
            return Err(PfError::EmptyData.into());
        }
        Ok(Sampler {
            target: Target {
                model,
                observations,
                streams,
                n_particles: config.n_particles,
            },
            config,
            proposal,
            options: SamplerOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SamplerOptions) -> Self {
        self.options = options;
        self
    }

    fn streams(&self) -> &CrnStreams {
        &self.target.streams
    }

    fn pf_sample_id(&self, iteration: usize, sample: usize) -> u64 {
        (iteration * self.config.n_samples + sample) as u64
    }

    /// Draws θ from the prior and weights each draw by its likelihood.
    pub fn init_population(&self) -> Result<SamplerPopulation, SamplerError> {
        let prior = self.target.model.prior();
        let order = self.proposal.kind.pf_order();
        let samples = (0..self.config.n_samples)
            .into_par_iter()
            .map(|i| {
                let theta = prior.sample(&mut self.streams().stream(tags::PRIOR_INIT, i as u64, 0));
                let eval = self.target.evaluate(&theta, self.pf_sample_id(0, i), order)?;
                Ok(SamplerSample::from_eval(theta, eval))
            })
            .collect::<Result<Vec<_>, SamplerError>>()?;
        // q₁ is the prior, so the weight is the likelihood alone
        let log_v = samples
            .iter()
            .map(|s| s.log_target - prior_logpdf(prior, &s.theta))
            .map(|l| if l.is_nan() { f64::NEG_INFINITY } else { l })
            .collect();
        let mut pop = SamplerPopulation {
            samples,
            log_v,
            iteration: 0,
            ess_history: Vec::new(),
            snapshots: Vec::new(),
            moves: 0,
            fallbacks: 0,
        };
        self.reweight_and_resample(&mut pop, 0)?;
        Ok(pop)
    }

    fn move_sample(&self, iteration: usize, index: usize, sample: &SamplerSample) -> Result<Move, SamplerError> {
        let theta = &sample.theta.0;
        let eps = self.proposal.epsilon;
        let order = self.proposal.kind.pf_order();
        let noise = self.streams().normals(tags::MOMENTUM, index as u64, iteration as u64, theta.len());
        let sample_id = self.pf_sample_id(iteration, index);
        let evaluate = |th: &[f64]| self.target.evaluate(th, sample_id, order);
        let missing = || vec![0.0; theta.len()];
        match self.proposal.kind {
            ProposalKind::Rw => propose_rw(theta, eps, &noise, evaluate),
            ProposalKind::Fo => {
                let grad = sample.grad.clone().unwrap_or_else(missing);
                propose_fo(theta, &grad, eps, &noise, evaluate)
            }
            ProposalKind::So => {
                let grad = sample.grad.clone().unwrap_or_else(missing);
                let mut neg_hess = sample.neg_hess.clone().unwrap_or_else(|| SymMatrix::zeros(theta.len()));
                if let Some(hook) = &self.options.hessian_hook {
                    if let Some(h) = hook(iteration, index, &neg_hess) {
                        neg_hess = h;
                    }
                }
                propose_so(theta, &grad, &neg_hess, eps, &noise, evaluate)
            }
        }
    }

    /// Moves every sample once, reweights, and resamples if the ESS drops
    /// below `N/2`.
    pub fn step(&self, pop: &mut SamplerPopulation) -> Result<StepReport, SamplerError> {
        let k = pop.iteration + 1;
        let moves = pop
            .samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| self.move_sample(k, i, s))
            .collect::<Result<Vec<_>, SamplerError>>()?;

        let mut fallback_used = Vec::with_capacity(moves.len());
        let mut log_increments = Vec::with_capacity(moves.len());
        let mut log_targets = Vec::with_capacity(moves.len());
        for ((sample, log_v), mv) in pop.samples.iter_mut().zip(pop.log_v.iter_mut()).zip(moves) {
            let incr = if self.options.force_l_equals_q {
                mv.target.log_target - sample.log_target
            } else {
                (mv.target.log_target - sample.log_target) + (mv.log_l - mv.log_q)
            };
            *log_v = if mv.target.is_finite() && log_v.is_finite() && incr.is_finite() {
                *log_v + incr
            } else {
                f64::NEG_INFINITY
            };
            if self.proposal.kind == ProposalKind::So {
                pop.moves += 1;
                pop.fallbacks += mv.fallback_used as usize;
            }
            fallback_used.push(mv.fallback_used);
            log_increments.push(incr);
            log_targets.push(mv.target.log_target);
            *sample = SamplerSample {
                theta: ParamVector(mv.theta),
                log_target: mv.target.log_target,
                grad: mv.target.grad,
                neg_hess: mv.target.neg_hess,
                momentum_out: mv.momentum_out,
                fallback_used: mv.fallback_used,
            };
        }
        pop.iteration = k;
        let resampled = self.reweight_and_resample(pop, k)?;
        Ok(StepReport {
            iteration: k,
            ess: *pop.ess_history.last().expect("just pushed"),
            resampled,
            fallback_used,
            log_increments,
            log_targets,
        })
    }

    fn reweight_and_resample(&self, pop: &mut SamplerPopulation, k: usize) -> Result<bool, SamplerError> {
        let n = pop.len();
        let mut w = vec![0.0; n];
        let lme: f64 =
            log_mean_exp(&pop.log_v, &mut w).map_err(|_| SamplerError::AllWeightsVanished { iteration: k })?;
        for lv in pop.log_v.iter_mut() {
            *lv -= lme + (n as f64).ln();
        }
        let e = ess(&w);
        pop.ess_history.push(e);
        pop.snapshots.push(Snapshot {
            thetas: pop.samples.iter().map(|s| s.theta.clone()).collect(),
            weights: w.clone(),
            ess: e,
        });
        if e < n as f64 / 2.0 {
            let u = self.streams().uniform(tags::SAMPLER_RESAMPLE, 0, k as u64);
            let ancestors = systematic_resample(&w, u, n);
            pop.samples = ancestors.iter().map(|&a| pop.samples[a].clone()).collect();
            pop.log_v.iter_mut().for_each(|l| *l = -(n as f64).ln());
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Initializes and runs all remaining iterations.
    pub fn run(&self) -> Result<SamplerPopulation, SamplerError> {
        let mut pop = self.init_population()?;
        for _ in 1..self.config.iterations {
            self.step(&mut pop)?;
        }
        Ok(pop)
    }
}
