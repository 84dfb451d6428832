//! Random-walk, first-order and second-order moves with leapfrog L-kernels.
//!
//! All three moves are written as a change of variables from the momentum
//! `p` to the new parameter. FO and SO run one leapfrog step
//!
//! ```text
//! p_half = (ε/2) G(θ) + p
//! θ'     = θ + ε M p_half
//! p_out  = (ε/2) G(θ') + p_half
//! ```
//!
//! with `M = I` (FO) or `M = H = (−∇² log π)⁻¹` (SO). The forward density
//! is that of `p`, the backward one that of `−p_out`, each divided by the
//! Jacobian `|ε M|` of the map.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::linalg::{cholesky, inverse_spd, mvn_logpdf_chol, std_normal_logpdf, CholFactor, SymMatrix};
use crate::pf::Order;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalKind {
    Rw,
    Fo,
    So,
}

impl ProposalKind {
    pub const ALL: [ProposalKind; 3] = [ProposalKind::Rw, ProposalKind::Fo, ProposalKind::So];

    /// Derivatives of the likelihood this move needs at the proposed point.
    pub fn pf_order(self) -> Order {
        match self {
            ProposalKind::Rw => Order::Value,
            ProposalKind::Fo => Order::Gradient,
            ProposalKind::So => Order::Hessian,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProposalKind::Rw => "rw",
            ProposalKind::Fo => "fo",
            ProposalKind::So => "so",
        }
    }
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProposalKind {
    type Err = SamplerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rw" => Ok(ProposalKind::Rw),
            "fo" => Ok(ProposalKind::Fo),
            "so" => Ok(ProposalKind::So),
            _ => Err(SamplerError::UnknownProposal(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    pub kind: ProposalKind,
    pub epsilon: f64,
}

impl ProposalConfig {
    pub fn new(kind: ProposalKind, epsilon: f64) -> Result<Self, SamplerError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(SamplerError::InvalidStepSize(epsilon));
        }
        Ok(ProposalConfig { kind, epsilon })
    }
}

/// Log-target value with whatever derivatives were requested.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetEval {
    pub log_target: f64,
    pub grad: Option<Vec<f64>>,
    pub neg_hess: Option<SymMatrix>,
}

impl TargetEval {
    pub fn outside() -> Self {
        TargetEval {
            log_target: f64::NEG_INFINITY,
            grad: None,
            neg_hess: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.log_target.is_finite()
    }
}

/// Result of one move from θ.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub theta: Vec<f64>,
    pub target: TargetEval,
    pub log_q: f64,
    pub log_l: f64,
    pub momentum_out: Vec<f64>,
    pub fallback_used: bool,
}

/// `θ + ε·noise` with a symmetric Gaussian kernel.
pub fn propose_rw(
    theta: &[f64],
    epsilon: f64,
    noise: &[f64],
    evaluate: impl FnOnce(&[f64]) -> Result<TargetEval, SamplerError>,
) -> Result<Move, SamplerError> {
    let theta_new: Vec<f64> = theta.iter().zip(noise).map(|(t, z)| t + epsilon * z).collect();
    let (log_q, log_l) = rw_log_densities(theta, &theta_new, epsilon);
    let target = evaluate(&theta_new)?;
    Ok(Move {
        theta: theta_new,
        target,
        log_q,
        log_l,
        momentum_out: noise.to_vec(),
        fallback_used: false,
    })
}

/// Forward and backward log-densities of the RW kernel `N(·; ·, ε² I)`.
pub fn rw_log_densities(theta: &[f64], theta_new: &[f64], epsilon: f64) -> (f64, f64) {
    let d = theta.len() as f64;
    let scaled = |a: &[f64], b: &[f64]| -> f64 {
        let z: Vec<f64> = a.iter().zip(b).map(|(x, m)| (x - m) / epsilon).collect();
        std_normal_logpdf(&z, &vec![0.0; z.len()]) - d * epsilon.ln()
    };
    (scaled(theta_new, theta), scaled(theta, theta_new))
}

/// First half of a leapfrog step: returns `(θ', p_half)`.
pub fn leapfrog_start(theta: &[f64], grad: &[f64], metric: Option<&SymMatrix>, epsilon: f64, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p_half: Vec<f64> = grad.iter().zip(p).map(|(g, p)| 0.5 * epsilon * g + p).collect();
    let step = match metric {
        Some(h) => h.mul_vec(&p_half).expect("metric dimension matches θ"),
        None => p_half.clone(),
    };
    let theta_new = theta.iter().zip(&step).map(|(t, s)| t + epsilon * s).collect();
    (theta_new, p_half)
}

/// Second half of a leapfrog step: `p_out = (ε/2) G(θ') + p_half`.
pub fn leapfrog_finish(p_half: &[f64], grad_new: &[f64], epsilon: f64) -> Vec<f64> {
    grad_new.iter().zip(p_half).map(|(g, p)| 0.5 * epsilon * g + p).collect()
}

/// Finishes a leapfrog move given the momentum density.
fn leapfrog_move(
    theta: &[f64],
    grad: &[f64],
    metric: Option<(&SymMatrix, &CholFactor)>,
    epsilon: f64,
    p: Vec<f64>,
    evaluate: impl FnOnce(&[f64]) -> Result<TargetEval, SamplerError>,
) -> Result<Move, SamplerError> {
    let d = theta.len() as f64;
    let (theta_new, p_half) = leapfrog_start(theta, grad, metric.map(|m| m.0), epsilon, &p);
    let momentum_logpdf = |v: &[f64]| -> f64 {
        match metric {
            Some((_, chol)) => mvn_logpdf_chol(v, &vec![0.0; v.len()], chol).expect("dimension checked"),
            None => std_normal_logpdf(v, &vec![0.0; v.len()]),
        }
    };
    // log|det ε M| = d log ε + log det H, and log det H = −log det(−∇² log π)
    let log_jac = match metric {
        Some((_, chol)) => d * epsilon.ln() + (-chol.log_det()),
        None => d * epsilon.ln(),
    };
    let log_q = momentum_logpdf(&p) - log_jac;
    let target = evaluate(&theta_new)?;
    let (momentum_out, log_l) = match &target.grad {
        Some(g_new) if target.is_finite() => {
            let p_out = leapfrog_finish(&p_half, g_new, epsilon);
            let neg: Vec<f64> = p_out.iter().map(|v| -v).collect();
            let log_l = momentum_logpdf(&neg) - log_jac;
            (p_out, log_l)
        }
        _ => (p_half, f64::NEG_INFINITY),
    };
    Ok(Move {
        theta: theta_new,
        target,
        log_q,
        log_l,
        momentum_out,
        fallback_used: false,
    })
}

/// First-order (MALA-like) move with `p = noise ~ N(0, I)`.
pub fn propose_fo(
    theta: &[f64],
    grad: &[f64],
    epsilon: f64,
    noise: &[f64],
    evaluate: impl FnOnce(&[f64]) -> Result<TargetEval, SamplerError>,
) -> Result<Move, SamplerError> {
    leapfrog_move(theta, grad, None, epsilon, noise.to_vec(), evaluate)
}

/// Second-order move with `p ~ N(0, H⁻¹)`, `H = (neg_hess)⁻¹`. Falls back to
/// [`propose_fo`] when `neg_hess` is not positive definite.
pub fn propose_so(
    theta: &[f64],
    grad: &[f64],
    neg_hess: &SymMatrix,
    epsilon: f64,
    noise: &[f64],
    evaluate: impl FnOnce(&[f64]) -> Result<TargetEval, SamplerError>,
) -> Result<Move, SamplerError> {
    let factored = cholesky(neg_hess).and_then(|chol| Ok((inverse_spd(neg_hess)?, chol)));
    match factored {
        Ok((h, chol)) if h.is_finite() => {
            let p = chol.mul_vec(noise).expect("dimension matches θ");
            leapfrog_move(theta, grad, Some((&h, &chol)), epsilon, p, evaluate)
        }
        _ => {
            let mut m = propose_fo(theta, grad, epsilon, noise, evaluate)?;
            m.fallback_used = true;
            Ok(m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target_with_grad(g: Vec<f64>) -> impl FnOnce(&[f64]) -> Result<TargetEval, SamplerError> {
        move |_| {
            Ok(TargetEval {
                log_target: -1.0,
                grad: Some(g),
                neg_hess: None,
            })
        }
    }

    #[test]
    fn rw_kernel_is_symmetric() {
        let m = propose_rw(&[0.5, 1.0, 1.2], 0.7, &[0.3, -1.1, 2.0], target_with_grad(vec![])).unwrap();
        assert_eq!(m.log_l - m.log_q, 0.0);
        assert!((m.theta[1] - (1.0 - 0.77)).abs() < 1e-15);
        let m = propose_rw(&[0.5, 1.0], 0.7, &[0.0, 0.0], target_with_grad(vec![])).unwrap();
        assert_eq!(m.theta, vec![0.5, 1.0]);
        assert_eq!(m.log_l, m.log_q);
    }

    #[test]
    fn fo_without_gradient_is_a_random_walk() {
        let noise = [0.4, -0.2];
        let m = propose_fo(&[0.1, 0.2], &[0.0, 0.0], 0.05, &noise, target_with_grad(vec![0.0, 0.0])).unwrap();
        assert_eq!(m.theta, vec![0.1 + 0.05 * 0.4, 0.2 + 0.05 * -0.2]);
        assert_eq!(m.log_l - m.log_q, 0.0);
    }

    #[test]
    fn indefinite_hessian_falls_back() {
        let h = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let g = vec![0.3, -0.1];
        let so = propose_so(&[0.1, 0.2], &g, &h, 0.1, &[0.5, 0.5], target_with_grad(vec![1.0, 1.0])).unwrap();
        let fo = propose_fo(&[0.1, 0.2], &g, 0.1, &[0.5, 0.5], target_with_grad(vec![1.0, 1.0])).unwrap();
        assert!(so.fallback_used);
        assert_eq!(so.theta, fo.theta);
        assert_eq!((so.log_q, so.log_l), (fo.log_q, fo.log_l));
    }

    #[test]
    fn so_logq_includes_metric_jacobian() {
        let h = SymMatrix::from_diag(&[4.0, 0.25]);
        let m = propose_so(&[0.0, 0.0], &[0.0, 0.0], &h, 0.5, &[0.0, 0.0], target_with_grad(vec![0.0, 0.0])).unwrap();
        // p = 0: log N(0; 0, neg_hess) − 2 log ε − log det H, and det H = 1 here
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * (4.0f64 * 0.25).ln() - 2.0 * 0.5f64.ln();
        assert!((m.log_q - expected).abs() < 1e-14);
    }

    #[test]
    fn outside_target_gives_no_backward_density() {
        let m = propose_fo(&[0.1], &[0.0], 0.1, &[1.0], |_| Ok(TargetEval::outside())).unwrap();
        assert_eq!(m.log_l, f64::NEG_INFINITY);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("SO".parse::<ProposalKind>().unwrap(), ProposalKind::So);
        assert!("hmc".parse::<ProposalKind>().is_err());
        assert!(ProposalConfig::new(ProposalKind::Rw, 0.0).is_err());
        assert_eq!(ProposalKind::Fo.pf_order(), Order::Gradient);
    }
}
