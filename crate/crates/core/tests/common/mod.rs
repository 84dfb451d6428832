#![allow(dead_code)]

use smc_squared::linalg::SymMatrix;
use smc_squared::pf::{run_pf, CrnStreams, LogLikEstimate, Order};
use smc_squared::models::StateSpaceModel;
use smc_squared::smc2::leapfrog_start;

/// `log |det A|` by Gaussian elimination with partial pivoting.
pub fn log_abs_det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let pivot = a[c][c];
        acc += pivot.abs().ln();
        for r in (c + 1)..n {
            let f = a[r][c] / pivot;
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    acc
}

/// Central-difference Jacobian of the leapfrog map `p ↦ θ'`.
pub fn leapfrog_jacobian(theta: &[f64], grad: &[f64], metric: Option<&SymMatrix>, eps: f64, p: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = p.len();
    let mut jac = vec![vec![0.0; d]; d];
    for j in 0..d {
        let (mut up, mut dn) = (p.to_vec(), p.to_vec());
        up[j] += h;
        dn[j] -= h;
        let tu = leapfrog_start(theta, grad, metric, eps, &up).0;
        let td = leapfrog_start(theta, grad, metric, eps, &dn).0;
        for i in 0..d {
            jac[i][j] = (tu[i] - td[i]) / (2.0 * h);
        }
    }
    jac
}

pub struct FdCheck {
    pub grad_rel: f64,
    pub hess_rel: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Compares the filter's gradient and Hessian with central differences of
/// its own CRN log-likelihood. The step shrinks from `h0` while the
/// resampling path differs between stencil points.
pub fn fd_check<M: StateSpaceModel>(model: &M, theta: &[f64], ys: &[f64], streams: &CrnStreams, n_x: usize, h0: f64) -> FdCheck {
    let eval = |th: &[f64], order| run_pf(model, th, ys, streams, 0, n_x, order).unwrap();
    let centre = eval(theta, Order::Hessian);
    let grad = centre.grad.clone().unwrap();
    let neg_hess = centre.neg_hess.clone().unwrap();
    let d = theta.len();
    let mut step = h0;
    loop {
        let mut fd_grad = vec![0.0; d];
        let mut fd_hess = vec![vec![0.0; d]; d];
        let mut flipped = false;
        for i in 0..d {
            let h = step * theta[i].abs().max(1e-3);
            let shifted = |sign: f64| -> LogLikEstimate {
                let mut th = theta.to_vec();
                th[i] += sign * h;
                eval(&th, Order::Gradient)
            };
            let (up, dn) = (shifted(1.0), shifted(-1.0));
            flipped |= up.diagnostics != centre.diagnostics || dn.diagnostics != centre.diagnostics;
            fd_grad[i] = (up.loglik - dn.loglik) / (2.0 * h);
            let (gu, gd) = (up.grad.unwrap(), dn.grad.unwrap());
            for j in 0..d {
                fd_hess[i][j] = -(gu[j] - gd[j]) / (2.0 * h);
            }
        }
        if !flipped || step < 1e-9 {
            let diff: Vec<f64> = grad.iter().zip(&fd_grad).map(|(a, b)| a - b).collect();
            let mut hd = 0.0;
            let mut hn = 0.0;
            for i in 0..d {
                for j in 0..d {
                    hd += (neg_hess.get(i, j) - fd_hess[i][j]).powi(2);
                    hn += fd_hess[i][j].powi(2);
                }
            }
            return FdCheck {
                grad_rel: norm(&diff) / norm(&fd_grad),
                hess_rel: (hd / hn).sqrt(),
            };
        }
        step /= 10.0;
    }
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
