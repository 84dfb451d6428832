//! One move of each proposal on a correlated Gaussian target, where the
//! gradient and curvature are known in closed form. Prints the proposal and
//! L-kernel densities that enter the sampler's incremental weight.
//!
//! ```bash
//! cargo run --example proposals
//! ```

use smc_squared::linalg::SymMatrix;
use smc_squared::smc2::{leapfrog_finish, leapfrog_start, propose_fo, propose_rw, propose_so, SamplerError, TargetEval};

/// `log N(θ; 0, Σ)` with `Σ⁻¹ = precision`.
fn gaussian(precision: &SymMatrix) -> impl Fn(&[f64]) -> Result<TargetEval, SamplerError> + '_ {
    move |theta: &[f64]| {
        let pt = precision.mul_vec(theta).unwrap();
        let quad: f64 = theta.iter().zip(&pt).map(|(a, b)| a * b).sum();
        Ok(TargetEval {
            log_target: -0.5 * quad,
            grad: Some(pt.iter().map(|v| -v).collect()),
            neg_hess: Some(precision.clone()),
        })
    }
}

fn main() {
    let precision = SymMatrix::from_rows(&[[40.0, 18.0], [18.0, 10.0]]).unwrap();
    let target = gaussian(&precision);
    let theta = [0.3, -0.2];
    let here = target(&theta).unwrap();
    let grad = here.grad.clone().unwrap();
    let noise = [0.8, -0.5];

    let report = |name: &str, eps: f64, m: smc_squared::smc2::Move| {
        let incr = (m.target.log_target - here.log_target) + (m.log_l - m.log_q);
        println!(
            "{name}-{eps:<5} θ' = {:>18}  log q {:>8.3}  log L {:>8.3}  log weight increment {incr:>8.3}{}",
            format!("{:.4?}", m.theta),
            m.log_q,
            m.log_l,
            if m.fallback_used { "  (fell back to FO)" } else { "" }
        );
    };
    report("RW", 0.1, propose_rw(&theta, 0.1, &noise, &target).unwrap());
    report("FO", 0.1, propose_fo(&theta, &grad, 0.1, &noise, &target).unwrap());
    report("SO", 1.0, propose_so(&theta, &grad, &precision, 1.0, &noise, &target).unwrap());

    // an indefinite curvature estimate sends SO down the FO path
    let bad = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
    report("SO", 0.1, propose_so(&theta, &grad, &bad, 0.1, &noise, &target).unwrap());

    // leapfrog is reversible: negating the final momentum walks back
    let (t1, p_half) = leapfrog_start(&theta, &grad, None, 0.1, &noise);
    let g1 = target(&t1).unwrap().grad.unwrap();
    let p_out = leapfrog_finish(&p_half, &g1, 0.1);
    let back: Vec<f64> = p_out.iter().map(|v| -v).collect();
    let (t0, _) = leapfrog_start(&t1, &g1, None, 0.1, &back);
    println!("\nforward {theta:?} → {t1:.4?}, back to {t0:.4?}");
}
