//! Signed power transform and standardizer used by the AR and RBF pipelines.
//!
//! The transform is a Box-Cox extension defined on all reals:
//! `sign(y)·((|y|+1)^λ − 1)/λ` for λ ≠ 0 and `sign(y)·ln(|y|+1)` for λ = 0.
//! It is odd, strictly increasing, reduces to the identity at λ = 1, and is
//! reversible.

use crate::error::{Error, Result};
use crate::stats;

/// Default λ search grid: −2 to 2 in steps of 0.05.
pub fn default_lambda_grid() -> Vec<f64> {
    (-40..=40).map(|i| f64::from(i) * 0.05).collect()
}

fn signed_forward(lambda: f64, y: f64) -> f64 {
    let ln1p = y.abs().ln_1p();
    let magnitude = if lambda == 0.0 {
        ln1p
    } else {
        (lambda * ln1p).exp_m1() / lambda
    };
    magnitude.copysign(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaTransform {
    pub lambda: f64,
    /// Number of observations the transform was fitted on; 0 when constructed directly.
    pub fitted_on_length: usize,
}

impl LambdaTransform {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Validation(format!("lambda must be finite, got {lambda}")));
        }
        Ok(LambdaTransform { lambda, fitted_on_length: 0 })
    }

    /// Grid-scan maximum-likelihood fit; ties break toward the λ closest to 1.
    pub fn fit(values: &[f64], grid: &[f64]) -> Result<Self> {
        if values.len() < 10 {
            return Err(Error::Validation(format!(
                "lambda fit needs at least 10 values, got {}",
                values.len()
            )));
        }
        if grid.is_empty() {
            return Err(Error::Validation("lambda grid is empty".into()));
        }
        if grid.iter().any(|l| !l.is_finite()) {
            return Err(Error::Validation("lambda grid contains a non-finite value".into()));
        }
        if values.iter().all(|&v| v == values[0]) {
            return Err(Error::Degenerate("constant series has no likelihood-optimal lambda".into()));
        }
        // The log-Jacobian factor is shared across candidates.
        let jacobian: f64 = values.iter().map(|&y| (y.abs() + 1.0).ln()).sum();
        let mut best: Option<(f64, f64)> = None; // (lambda, log-likelihood)
        for &lambda in grid {
            let ll = profile_log_likelihood(lambda, values, jacobian);
            let better = match best {
                None => true,
                Some((bl, bll)) => {
                    ll > bll || (ll == bll && (lambda - 1.0).abs() < (bl - 1.0).abs())
                }
            };
            if better {
                best = Some((lambda, ll));
            }
        }
        let (lambda, ll) = best.expect("nonempty grid");
        if ll == f64::NEG_INFINITY {
            return Err(Error::Degenerate("transformed series is constant for every candidate lambda".into()));
        }
        Ok(LambdaTransform { lambda, fitted_on_length: values.len() })
    }

    pub fn forward(&self, y: f64) -> f64 {
        signed_forward(self.lambda, y)
    }

    pub fn forward_slice(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&y| self.forward(y)).collect()
    }

    /// Inverse transform. For λ < 0 the forward image is bounded by 1/|λ|, so
    /// |z| past that bound is a domain error.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        let lambda = self.lambda;
        let m = z.abs();
        let magnitude = if lambda == 0.0 {
            m.exp_m1()
        } else {
            // λ|z| + 1, fused so the cancellation-prone case keeps full precision.
            let base = f64::mul_add(lambda, m, 1.0);
            if base <= 0.0 {
                return Err(Error::Domain(format!(
                    "inverse transform undefined for z = {z} at lambda = {lambda}"
                )));
            }
            (base.ln() / lambda).exp_m1()
        };
        Ok(magnitude.copysign(z))
    }
}

/// Gaussian profile log-likelihood of the transformed sample, including the
/// signed transform's log-Jacobian Σ(λ−1)·ln(|y|+1). Constant terms dropped.
fn profile_log_likelihood(lambda: f64, values: &[f64], jacobian: f64) -> f64 {
    let n = values.len() as f64;
    let z: Vec<f64> = values.iter().map(|&y| signed_forward(lambda, y)).collect();
    let mu = stats::mean(&z);
    let var = z.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    if var <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: f64,
    pub std_dev: f64,
}

impl Standardizer {
    /// Fit on `values` (sample std dev) and return the standardized copy.
    pub fn fit(values: &[f64]) -> Result<(Self, Vec<f64>)> {
        if values.len() < 2 {
            return Err(Error::Validation(format!(
                "standardizer needs at least 2 values, got {}",
                values.len()
            )));
        }
        let mean = stats::mean(values);
        let std_dev = stats::sample_std(values);
        if std_dev <= 0.0 {
            return Err(Error::Degenerate("cannot standardize a constant series".into()));
        }
        let s = Standardizer { mean, std_dev };
        let out = values.iter().map(|&v| s.apply(v)).collect();
        Ok((s, out))
    }

    pub fn apply(&self, y: f64) -> f64 {
        (y - self.mean) / self.std_dev
    }

    pub fn invert(&self, z: f64) -> f64 {
        self.mean + self.std_dev * z
    }
}

/// Demean and scale to unit sample standard deviation.
pub fn standardize(values: &[f64]) -> Result<(Standardizer, Vec<f64>)> {
    Standardizer::fit(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn forward_is_identity_at_lambda_one() {
        let t = LambdaTransform::new(1.0).unwrap();
        assert_relative_eq!(t.forward(-7.3), -7.3, max_relative = 1e-12);
    }

    #[test]
    fn forward_log_case() {
        let t = LambdaTransform::new(0.0).unwrap();
        assert_relative_eq!(t.forward(std::f64::consts::E - 1.0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn forward_half_power() {
        let t = LambdaTransform::new(0.5).unwrap();
        assert_relative_eq!(t.forward(3.0), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn inverse_examples() {
        assert_relative_eq!(
            LambdaTransform::new(1.0).unwrap().inverse(-7.3).unwrap(),
            -7.3,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            LambdaTransform::new(0.0).unwrap().inverse(1.0).unwrap(),
            std::f64::consts::E - 1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            LambdaTransform::new(0.5).unwrap().inverse(2.0).unwrap(),
            3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn inverse_rejects_out_of_range() {
        let t = LambdaTransform::new(-0.5).unwrap();
        // Forward image is bounded by 1/|λ| = 2.
        assert!(t.inverse(2.5).is_err());
        assert!(t.inverse(-2.5).is_err());
    }

    #[test]
    fn single_candidate_grid_wins_regardless_of_data() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64).sin() * 40.0).collect();
        let t = LambdaTransform::fit(&values, &[1.0]).unwrap();
        assert_eq!(t.lambda, 1.0);
        assert_eq!(t.fitted_on_length, 50);
    }

    #[test]
    fn gaussian_data_selects_lambda_near_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let values: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
        let t = LambdaTransform::fit(&values, &default_lambda_grid()).unwrap();
        assert!((t.lambda - 1.0).abs() <= 0.1, "selected lambda {}", t.lambda);
    }

    /// Independent oracle: recompute the profile likelihood directly over a
    /// fine grid and check the implementation's argmax agrees.
    fn oracle_best_lambda(values: &[f64], grid: &[f64]) -> f64 {
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for &lambda in grid {
            let z: Vec<f64> = values
                .iter()
                .map(|&y| {
                    let l1p = (y.abs() + 1.0).ln();
                    let m = if lambda == 0.0 { l1p } else { ((lambda * l1p).exp() - 1.0) / lambda };
                    m.copysign(y)
                })
                .collect();
            let n = z.len() as f64;
            let mu = z.iter().sum::<f64>() / n;
            let var = z.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            let jac: f64 = values.iter().map(|&y| (y.abs() + 1.0).ln()).sum();
            let ll = -0.5 * n * var.ln() + (lambda - 1.0) * jac;
            if ll > best.0 {
                best = (ll, lambda);
            }
        }
        best.1
    }

    #[test]
    fn exponential_of_positive_gaussian_selects_lambda_near_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // z Gaussian and nonnegative, so ln(y+1) = z is exactly Gaussian.
        let normal = Normal::new(3.0, 0.5).unwrap();
        let values: Vec<f64> = (0..2000)
            .map(|_| {
                let z: f64 = normal.sample(&mut rng);
                z.max(0.0).exp() - 1.0
            })
            .collect();
        let t = LambdaTransform::fit(&values, &default_lambda_grid()).unwrap();
        assert!(t.lambda.abs() <= 0.15, "selected lambda {}", t.lambda);

        let fine: Vec<f64> = (-200..=200).map(|i| f64::from(i) * 0.01).collect();
        let oracle = oracle_best_lambda(&values, &fine);
        assert!(
            (t.lambda - oracle).abs() <= 0.05,
            "grid pick {} vs fine-grid oracle {}",
            t.lambda,
            oracle
        );
    }

    #[test]
    fn fit_rejects_constant_and_short_input() {
        assert!(matches!(
            LambdaTransform::fit(&[3.0; 20], &default_lambda_grid()),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            LambdaTransform::fit(&[1.0, 2.0], &default_lambda_grid()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn fit_is_order_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(5.0, 30.0).unwrap();
        let values: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng)).collect();
        let base = LambdaTransform::fit(&values, &default_lambda_grid()).unwrap();
        let mut reversed = values.clone();
        reversed.reverse();
        let mut interleaved: Vec<f64> = Vec::with_capacity(values.len());
        for i in 0..values.len() / 2 {
            interleaved.push(values[i]);
            interleaved.push(values[values.len() - 1 - i]);
        }
        for other in [reversed, interleaved] {
            let t = LambdaTransform::fit(&other, &default_lambda_grid()).unwrap();
            assert_eq!(t.lambda, base.lambda);
        }
    }

    #[test]
    fn standardize_two_points() {
        let (s, out) = standardize(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(s.mean, 1.0);
        assert_relative_eq!(s.std_dev, 2.0f64.sqrt());
        assert_relative_eq!(out[0], -1.0 / 2.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(out[1], 1.0 / 2.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn standardize_is_idempotent_on_standardized_input() {
        let input = vec![-1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt()];
        let (s, out) = standardize(&input).unwrap();
        assert_relative_eq!(s.mean, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.std_dev, 1.0, max_relative = 1e-12);
        for (a, b) in out.iter().zip(&input) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(-3.0, 12.0).unwrap();
        let values: Vec<f64> = (0..1000).map(|_| normal.sample(&mut rng)).collect();
        let (s, out) = standardize(&values).unwrap();
        assert_relative_eq!(stats::mean(&out), 0.0, epsilon = 1e-12);
        assert_relative_eq!(stats::sample_std(&out), 1.0, epsilon = 1e-12);
        let max_err = out
            .iter()
            .zip(&values)
            .map(|(&z, &y)| (s.invert(z) - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-12, "round-trip error {max_err}");
    }

    #[test]
    fn standardize_rejects_constant() {
        assert!(matches!(standardize(&[4.0, 4.0, 4.0]), Err(Error::Degenerate(_))));
    }

    /// Largest |y| for which the f64 round trip can stay within 1e-9 relative
    /// error. For λ < 0 the forward image saturates at 1/|λ|, and the spacing
    /// of representable z values near that bound limits recoverable |y| to
    /// roughly ((9e5)·|λ|)^(1/|λ|); beyond it no inverse can recover y.
    fn conditioned_y_bound(lambda: f64) -> f64 {
        if lambda >= -0.9 {
            1e7
        } else {
            (9.1e5 * (-lambda)).powf(1.0 / (-lambda)).min(1e7)
        }
    }

    proptest::proptest! {
        #[test]
        fn forward_is_odd(lambda in -2.0f64..2.0, y in -1e7f64..1e7) {
            let t = LambdaTransform::new(lambda).unwrap();
            proptest::prop_assert_eq!(t.forward(-y), -t.forward(y));
        }

        #[test]
        fn forward_is_weakly_monotone(lambda in -2.0f64..2.0, a in -1e7f64..1e7, b in -1e7f64..1e7) {
            let t = LambdaTransform::new(lambda).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(t.forward(lo) <= t.forward(hi));
        }

        #[test]
        fn forward_is_strictly_monotone_at_moderate_scale(
            lambda in -2.0f64..2.0,
            a in -1e4f64..1e4,
            gap in 1e-3f64..10.0,
        ) {
            let t = LambdaTransform::new(lambda).unwrap();
            proptest::prop_assert!(t.forward(a) < t.forward(a + gap));
        }

        #[test]
        fn round_trip_within_tolerance(lambda in -2.0f64..2.0, unit in -1.0f64..1.0) {
            let y = unit * conditioned_y_bound(lambda);
            let t = LambdaTransform::new(lambda).unwrap();
            let back = t.inverse(t.forward(y)).unwrap();
            let rel = (back - y).abs() / y.abs().max(1.0);
            proptest::prop_assert!(rel < 1e-9, "y={} lambda={} back={} rel={}", y, lambda, back, rel);
        }
    }
}
