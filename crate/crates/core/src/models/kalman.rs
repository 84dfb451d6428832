use std::f64::consts::PI;

/// Exact LGSS log-likelihood by prediction-error decomposition.
///
/// Uses the same initialization as the filter: `x₀ = 0` known, so the first
/// predicted state is `N(0, φ²)`.
pub fn kalman_loglik(theta: &[f64], observations: &[f64]) -> f64 {
    let (mu, phi, sigma) = (theta[0], theta[1], theta[2]);
    let (q, r) = (phi * phi, sigma * sigma);
    let mut mean = 0.0;
    let mut var = q;
    let mut ll = 0.0;
    for &y in observations {
        let innov = y - mean;
        let s = var + r;
        ll += -0.5 * ((2.0 * PI * s).ln() + innov * innov / s);
        let gain = var / s;
        let filt_mean = mean + gain * innov;
        let filt_var = var * (1.0 - gain);
        mean = mu * filt_mean;
        var = mu * mu * filt_var + q;
    }
    ll
}
