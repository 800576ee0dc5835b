//! Diagonal Gaussian action distribution with state-independent log-std.

use rand::Rng;
use rand_distr::StandardNormal;

/// `ln(2π)`.
pub const LOG_2PI: f64 = 1.837_877_066_409_345_3;

/// Log density of `action` under `N(mean, diag(exp(log_std))²)`.
pub fn log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&m, &ls), &a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * LOG_2PI
        })
        .sum()
}

/// Differential entropy, `Σ (0.5·ln(2πe) + log_std)`.
pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|&ls| 0.5 * (LOG_2PI + 1.0) + ls).sum()
}

/// Draws an unclamped action and its log density.
pub fn sample_action<R: Rng + ?Sized>(mean: &[f64], log_std: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
    let action: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(&m, &ls)| {
            let z: f64 = rng.sample(StandardNormal);
            m + ls.exp() * z
        })
        .collect();
    let lp = log_prob(mean, log_std, &action);
    (action, lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vanishing_noise_returns_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, _) = sample_action(&[0.3, -0.7], &[-20.0, -20.0], &mut rng);
        assert!((a[0] - 0.3).abs() < 1e-6 && (a[1] + 0.7).abs() < 1e-6);
    }

    #[test]
    fn density_and_entropy_reference_values() {
        assert!((LOG_2PI - (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((log_prob(&[0.2, 0.1], &[0.0, 0.0], &[0.2, 0.1]) + 1.837_88).abs() < 1e-5);
        assert!((entropy(&[0.0, 0.0]) - 2.837_88).abs() < 1e-5);
        let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
        assert!((entropy(&[0.0, 0.0]) - two_pi_e.ln()).abs() < 1e-12);
    }

    #[test]
    fn sampled_log_prob_matches_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, lp) = sample_action(&[0.1, 0.5], &[-0.5, 0.3], &mut rng);
        assert_eq!(lp, log_prob(&[0.1, 0.5], &[-0.5, 0.3], &a));
    }

    proptest! {
        #[test]
        fn mode_maximizes_density(m in -1.0f64..1.0, ls in -3.0f64..1.0, d in 1e-3f64..2.0) {
            let at_mode = log_prob(&[m, m], &[ls, ls], &[m, m]);
            prop_assert!(at_mode > log_prob(&[m, m], &[ls, ls], &[m + d, m]));
            prop_assert!(at_mode > log_prob(&[m, m], &[ls, ls], &[m, m - d]));
        }

        #[test]
        fn entropy_increases_with_log_std(a in -5.0f64..2.0, d in 1e-3f64..1.0) {
            prop_assert!(entropy(&[a + d, 0.0]) > entropy(&[a, 0.0]));
            prop_assert!(entropy(&[0.0, a + d]) > entropy(&[0.0, a]));
        }
    }
}
