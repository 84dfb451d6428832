//! Compares the filter's analytic gradient and Hessian with central finite
//! differences of its own log-likelihood under fixed random streams.
//!
//! ```bash
//! cargo run --release --example derivative_check
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smc_squared::models::{simulate, Lgss, Sir, StateSpaceModel};
use smc_squared::pf::{run_pf, CrnStreams, LogLikEstimate, Order};

struct Report {
    grad_rel: f64,
    hess_rel: f64,
    step: f64,
}

fn check<M: StateSpaceModel>(model: &M, theta: &[f64], ys: &[f64], streams: &CrnStreams, n_x: usize) -> Report {
    let eval = |th: &[f64], order| run_pf(model, th, ys, streams, 0, n_x, order).expect("filter run");
    let centre = eval(theta, Order::Hessian);
    let grad = centre.grad.clone().unwrap();
    let neg_hess = centre.neg_hess.unwrap();
    let d = theta.len();

    // shrink the step until no resampling index flips inside the stencil
    let mut step = 1e-5;
    let (fd_grad, fd_hess) = loop {
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
            break (fd_grad, fd_hess);
        }
        step /= 10.0;
    };

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = grad.iter().zip(&fd_grad).map(|(a, b)| a - b).collect();
    let mut hd = 0.0;
    let mut hn = 0.0;
    for i in 0..d {
        for j in 0..d {
            hd += (neg_hess.get(i, j) - fd_hess[i][j]).powi(2);
            hn += fd_hess[i][j].powi(2);
        }
    }
    Report {
        grad_rel: norm(&diff) / norm(&fd_grad),
        hess_rel: (hd / hn).sqrt(),
        step,
    }
}

fn run<M: StateSpaceModel>(model: &M, truth: &[f64], t_len: usize) {
    let data = simulate(model, truth, t_len, 0);
    let streams = CrnStreams::new(2024);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{} (T={t_len}, N_x=200)", model.name());
    for _ in 0..10 {
        let theta = model.prior().sample(&mut rng);
        let r = check(model, &theta, &data.observations, &streams, 200);
        println!(
            "  θ = {:<40} grad rel err {:.2e}   hess rel err {:.2e}   (h = {:.0e})",
            format!("{theta:.4?}"),
            r.grad_rel,
            r.hess_rel,
            r.step
        );
    }
}

fn main() {
    run(&Lgss::new(), &Lgss::TRUE_THETA, 50);
    run(&Sir::new(), &Sir::TRUE_THETA, 36);
}
