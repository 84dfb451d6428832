//! The particle-filter likelihood on the linear-Gaussian model against the
//! exact Kalman-filter value, for growing particle counts.
//!
//! ```bash
//! cargo run --release --example kalman_oracle
//! ```

use smc_squared::models::{kalman_loglik, simulate, Lgss};
use smc_squared::pf::{run_pf, CrnStreams, Order};

fn main() {
    let model = Lgss::new();
    let theta = Lgss::TRUE_THETA;
    let data = simulate(&model, &theta, 100, 0);
    let exact = kalman_loglik(&theta, &data.observations);
    println!("Kalman log-likelihood: {exact:.4}");

    let streams = CrnStreams::new(7);
    let repeats = 20;
    println!("{:>8} {:>12} {:>10} {:>12}", "N_x", "mean", "sd", "E[p̂/p]");
    for n_x in [100, 1_000, 10_000] {
        let lls: Vec<f64> = (0..repeats)
            .map(|r| run_pf(&model, &theta, &data.observations, &streams, r, n_x, Order::Value).unwrap().loglik)
            .collect();
        let mean = lls.iter().sum::<f64>() / repeats as f64;
        let sd = (lls.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt();
        // the likelihood, not its log, is the unbiased quantity
        let ratio = lls.iter().map(|l| (l - exact).exp()).sum::<f64>() / repeats as f64;
        println!("{n_x:>8} {mean:>12.4} {sd:>10.4} {ratio:>12.4}");
    }

    // score from the filter against central differences of the Kalman value
    let h = 1e-5;
    let est = run_pf(&model, &theta, &data.observations, &streams, 0, 10_000, Order::Gradient).unwrap();
    println!("\n{:>6} {:>10} {:>10}", "param", "Kalman", "filter");
    for (i, name) in ["mu", "phi", "sigma"].iter().enumerate() {
        let (mut up, mut dn) = (theta, theta);
        up[i] += h;
        dn[i] -= h;
        let fd = (kalman_loglik(&up, &data.observations) - kalman_loglik(&dn, &data.observations)) / (2.0 * h);
        println!("{name:>6} {fd:>10.3} {:>10.3}", est.grad.as_ref().unwrap()[i]);
    }
}
