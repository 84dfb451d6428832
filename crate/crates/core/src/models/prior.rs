use rand::Rng;
use serde::{Deserialize, Serialize};

/// Independent uniform priors, one `(lower, upper)` interval per parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl PriorSpec {
    pub fn uniform(bounds: &[(f64, f64)]) -> Self {
        for &(lo, hi) in bounds {
            assert!(lo < hi, "prior bounds must satisfy lower < upper ({lo} >= {hi})");
        }
        PriorSpec {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Open-interval support test; the models divide by some parameters, so
    /// boundary points are excluded.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&t, (&lo, &hi))| t > lo && t < hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| loop {
                let u: f64 = rng.random();
                let v = lo + (hi - lo) * u;
                if v > lo && v < hi {
                    break v;
                }
            })
            .collect()
    }
}

/// Log prior density. Uniform, so gradient and Hessian are zero inside the
/// support; outside it the density is `-inf`.
pub fn prior_logpdf(prior: &PriorSpec, theta: &[f64]) -> f64 {
    if !prior.contains(theta) {
        return f64::NEG_INFINITY;
    }
    -prior
        .lower
        .iter()
        .zip(&prior.upper)
        .map(|(lo, hi)| (hi - lo).ln())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_box_and_wider_box() {
        let unit = PriorSpec::uniform(&[(0.0, 1.0), (0.0, 1.0)]);
        assert_eq!(prior_logpdf(&unit, &[0.5, 0.5]), 0.0);
        let lgss = PriorSpec::uniform(&[(0.0, 1.0), (0.0, 2.0), (0.0, 2.0)]);
        assert!((prior_logpdf(&lgss, &[0.5, 1.0, 1.0]) + 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn outside_support_is_neg_infinity() {
        let unit = PriorSpec::uniform(&[(0.0, 1.0), (0.0, 1.0)]);
        assert_eq!(prior_logpdf(&unit, &[1.2, 0.5]), f64::NEG_INFINITY);
        assert_eq!(prior_logpdf(&unit, &[0.0, 0.5]), f64::NEG_INFINITY);
        assert_eq!(prior_logpdf(&unit, &[0.5]), f64::NEG_INFINITY);
    }

    #[test]
    fn draws_stay_inside() {
        let p = PriorSpec::uniform(&[(0.0, 1.0), (0.0, 2.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(p.contains(&p.sample(&mut rng)));
        }
    }
}
