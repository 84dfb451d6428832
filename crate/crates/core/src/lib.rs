//! SMC² over static parameters with a common-random-number differentiable
//! particle filter.
//!
//! The outer sampler ([`smc2`]) moves a population of parameter samples with
//! random-walk, first-order (Langevin) or second-order (Hessian
//! preconditioned) proposals and weights them with change-of-variables
//! L-kernels. Each target evaluation runs the inner particle filter ([`pf`]),
//! which returns `log p̂(y | θ)` together with its exact gradient and Hessian
//! under fixed random streams.
//!
//! Two models ship with the crate: a linear Gaussian state-space model and a
//! discrete-time SIR epidemic model ([`models`]). The [`harness`] module runs
//! step-size sweeps and writes the result tables.

pub mod harness;
pub mod jet;
pub mod linalg;
pub mod models;
pub mod pf;
pub mod rng;
pub mod smc2;
