//! Common random numbers make the likelihood estimate a deterministic,
//! piecewise-smooth function of θ. This traces log p̂ along μ with fixed
//! streams and with fresh streams at every point.
//!
//! ```bash
//! cargo run --release --example crn_streams
//! ```

use smc_squared::models::{simulate, Lgss};
use smc_squared::pf::{run_pf, CrnStreams, Order};
use smc_squared::rng::tags;

fn main() {
    let model = Lgss::new();
    let data = simulate(&model, &Lgss::TRUE_THETA, 200, 3);
    let streams = CrnStreams::new(11);

    println!("{:>6} {:>14} {:>14} {:>10}", "mu", "fixed streams", "fresh streams", "d/dmu");
    let mut prev: Option<f64> = None;
    let mut roughness = [0.0; 2];
    let mut prev_fresh: Option<f64> = None;
    for k in 0..=20 {
        let mu = 0.70 + 0.005 * k as f64;
        let theta = [mu, 1.0, 1.0];
        let fixed = run_pf(&model, &theta, &data.observations, &streams, 0, 500, Order::Gradient).unwrap();
        // a different sample id is an independent stream set
        let fresh = run_pf(&model, &theta, &data.observations, &streams, 1 + k as u64, 500, Order::Value).unwrap();
        if let (Some(a), Some(b)) = (prev, prev_fresh) {
            roughness[0] += (fixed.loglik - a).abs();
            roughness[1] += (fresh.loglik - b).abs();
        }
        prev = Some(fixed.loglik);
        prev_fresh = Some(fresh.loglik);
        println!("{mu:>6.3} {:>14.4} {:>14.4} {:>10.3}", fixed.loglik, fresh.loglik, fixed.grad.unwrap()[0]);
    }
    println!("\ntotal variation along the path: fixed {:.3}, fresh {:.3}", roughness[0], roughness[1]);

    // streams are addressed, not consumed: the same key always gives the same draws
    let a = streams.normals(tags::PF_PROPAGATE, 5, 12, 4);
    let _ = streams.normals(tags::PF_PROPAGATE, 6, 12, 4);
    let b = streams.normals(tags::PF_PROPAGATE, 5, 12, 4);
    assert_eq!(a, b);
    println!("stream (PF_PROPAGATE, 5, 12): {a:.4?}");
}
