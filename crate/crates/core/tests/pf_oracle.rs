mod common;

use smc_squared::models::{kalman_loglik, simulate, Lgss};
use smc_squared::pf::{run_pf, CrnStreams, Order};

use common::mean_se;

fn kalman_grad_hess(theta: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = theta.len();
    let f = |di: usize, a: f64, dj: usize, b: f64| {
        let mut t = theta.to_vec();
        t[di] += a;
        t[dj] += b;
        kalman_loglik(&t, ys)
    };
    let h = 1e-5;
    let grad = (0..d).map(|i| (f(i, h, i, 0.0) - f(i, -h, i, 0.0)) / (2.0 * h)).collect();
    let e = 1e-4;
    let neg_hess = (0..d)
        .map(|i| (0..d).map(|j| -(f(i, e, j, e) - f(i, e, j, -e) - f(i, -e, j, e) + f(i, -e, j, -e)) / (4.0 * e * e)).collect())
        .collect();
    (grad, neg_hess)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

#[test]
fn likelihood_estimate_is_unbiased() {
    let m = Lgss::new();
    let ys = simulate(&m, &Lgss::TRUE_THETA, 20, 5).observations;
    let exact = kalman_loglik(&Lgss::TRUE_THETA, &ys);
    let streams = CrnStreams::new(31);
    let ratios: Vec<f64> = (0..200)
        .map(|r| (run_pf(&m, &Lgss::TRUE_THETA, &ys, &streams, r, 500, Order::Value).unwrap().loglik - exact).exp())
        .collect();
    let (mean, se) = mean_se(&ratios);
    assert!((mean - 1.0).abs() < 4.0 * se, "E[p̂/p] = {mean} ± {se}");
}

#[test]
fn large_cloud_matches_kalman() {
    let m = Lgss::new();
    let ys = simulate(&m, &Lgss::TRUE_THETA, 50, 6).observations;
    let exact = kalman_loglik(&Lgss::TRUE_THETA, &ys);
    let streams = CrnStreams::new(32);
    let lls: Vec<f64> = (0..8)
        .map(|r| run_pf(&m, &Lgss::TRUE_THETA, &ys, &streams, r, 100_000, Order::Value).unwrap().loglik)
        .collect();
    let (mean, se) = mean_se(&lls);
    assert!((mean - exact).abs() < 3.0 * se.max(1e-3), "{mean} ± {se} vs {exact}");
}

#[test]
fn filter_derivatives_track_the_exact_score() {
    let m = Lgss::new();
    let ys = simulate(&m, &Lgss::TRUE_THETA, 100, 0).observations;
    let streams = CrnStreams::new(1);
    for theta in [Lgss::TRUE_THETA, [0.6, 1.2, 0.8]] {
        let (grad, neg_hess) = kalman_grad_hess(&theta, &ys);
        let est = run_pf(&m, &theta, &ys, &streams, 0, 10_000, Order::Hessian).unwrap();
        let g = est.grad.unwrap();
        assert!(rel(&g, &grad) < 2e-2, "{g:?} vs {grad:?}");
        let nh = est.neg_hess.unwrap();
        let flat: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| nh.get(i, j)).collect();
        let exact: Vec<f64> = neg_hess.iter().flatten().copied().collect();
        assert!(rel(&flat, &exact) < 5e-2, "{flat:?} vs {exact:?}");
    }
}

#[test]
fn derivative_orders_share_the_value() {
    let m = Lgss::new();
    let ys = simulate(&m, &Lgss::TRUE_THETA, 40, 2).observations;
    let streams = CrnStreams::new(4);
    let th = [0.7, 0.9, 1.3];
    let v: Vec<f64> = [Order::Value, Order::Gradient, Order::Hessian]
        .into_iter()
        .map(|o| run_pf(&m, &th, &ys, &streams, 3, 300, o).unwrap().loglik)
        .collect();
    assert_eq!(v[0], v[1]);
    assert_eq!(v[0], v[2]);
}
