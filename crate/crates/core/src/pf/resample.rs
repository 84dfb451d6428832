//! Weight normalization, effective sample size and systematic resampling.

use super::PfError;
use crate::jet::{Grad, Hess, Scalar, MAX_PARAMS};

/// Log of the mean weight, `logsumexp(log_w) - log N`, as a jet.
///
/// Fills `normalized` with `w̃_j = w_j / Σ w`. The gradient of the result is
/// `Σ_j w̃_j ∂log w_j` and its Hessian is
/// `Σ_j w̃_j (∂log w_j - g) ∂log w_jᵀ + Σ_j w̃_j ∂²log w_j`, where the first
/// term comes from differentiating the normalized weights themselves.
pub fn log_mean_exp<S: Scalar>(log_w: &[S], normalized: &mut [f64]) -> Result<S, PfError> {
    assert_eq!(log_w.len(), normalized.len());
    let max = log_w
        .iter()
        .map(|w| w.value())
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(PfError::DegenerateCloud { step: None });
    }
    let mut total = 0.0;
    for (w, lw) in normalized.iter_mut().zip(log_w) {
        let v = lw.value();
        *w = if v.is_nan() { 0.0 } else { (v - max).exp() };
        total += *w;
    }
    for w in normalized.iter_mut() {
        *w /= total;
    }
    let value = max + total.ln() - (log_w.len() as f64).ln();

    let mut grad: Grad = [0.0; MAX_PARAMS];
    let mut hess: Hess = [[0.0; MAX_PARAMS]; MAX_PARAMS];
    if S::ORDER >= 1 {
        for (lw, &w) in log_w.iter().zip(normalized.iter()) {
            if w == 0.0 {
                continue;
            }
            for (i, g) in grad.iter_mut().enumerate() {
                *g += w * lw.grad(i);
            }
        }
    }
    if S::ORDER >= 2 {
        for (lw, &w) in log_w.iter().zip(normalized.iter()) {
            if w == 0.0 {
                continue;
            }
            for i in 0..MAX_PARAMS {
                let centred = w * (lw.grad(i) - grad[i]);
                for j in 0..MAX_PARAMS {
                    hess[i][j] += centred * lw.grad(j) + w * lw.hess(i, j);
                }
            }
        }
        for i in 0..MAX_PARAMS {
            for j in (i + 1)..MAX_PARAMS {
                let avg = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = avg;
                hess[j][i] = avg;
            }
        }
    }
    Ok(S::from_parts(value, &grad, &hess))
}

/// `1 / Σ w̃²` for normalized weights.
pub fn ess(normalized: &[f64]) -> f64 {
    1.0 / normalized.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling: child `j` takes the parent whose cumulative-weight
/// interval contains `(u + j) / n_out`.
pub fn systematic_resample(normalized: &[f64], u: f64, n_out: usize) -> Vec<usize> {
    let mut ancestors = Vec::with_capacity(n_out);
    systematic_resample_into(normalized, u, n_out, &mut ancestors);
    ancestors
}

pub fn systematic_resample_into(normalized: &[f64], u: f64, n_out: usize, ancestors: &mut Vec<usize>) {
    assert!((0.0..1.0).contains(&u), "resampling offset must lie in [0, 1)");
    assert!(!normalized.is_empty());
    ancestors.clear();
    let last = normalized.len() - 1;
    let step = 1.0 / n_out as f64;
    let mut parent = 0;
    let mut cumulative = normalized[0];
    for j in 0..n_out {
        let position = (u + j as f64) * step;
        while position >= cumulative && parent < last {
            parent += 1;
            cumulative += normalized[parent];
        }
        ancestors.push(parent);
    }
}
