//! TD residuals and their discounted sums.
//!
//! `δ_t = r_t + γ·V(s_{t+1}) - V(s_t)` with `V(s_{t+1})` masked to zero on
//! terminal steps, and `A_t = Σ_k γ^k δ_{t+k}` truncated at the episode end,
//! evaluated right to left as `A_t = δ_t + γ·(1 - done_t)·A_{t+1}`.

use crate::{Error, Result};

pub fn compute_deltas(rewards: &[f64], values: &[f64], next_values: &[f64], dones: &[bool], gamma: f64) -> Result<Vec<f64>> {
    let n = rewards.len();
    if values.len() != n || next_values.len() != n || dones.len() != n {
        return Err(Error::Usage(format!(
            "sequence lengths differ: rewards {n}, values {}, next_values {}, dones {}",
            values.len(),
            next_values.len(),
            dones.len()
        )));
    }
    Ok((0..n)
        .map(|t| {
            let next = if dones[t] { 0.0 } else { next_values[t] };
            rewards[t] + gamma * next - values[t]
        })
        .collect())
}

pub fn compute_advantages(deltas: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    let mut adv = vec![0.0; deltas.len()];
    let mut running = 0.0;
    for t in (0..deltas.len()).rev() {
        let carry = if dones.get(t).copied().unwrap_or(false) { 0.0 } else { running };
        running = deltas[t] + gamma * carry;
        adv[t] = running;
    }
    adv
}

/// `V_target = A + V`.
pub fn value_targets(advantages: &[f64], values: &[f64]) -> Vec<f64> {
    advantages.iter().zip(values).map(|(a, v)| a + v).collect()
}

/// Shifts to zero mean and scales to unit standard deviation (floored at 1e-8).
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    let n = advantages.len() as f64;
    if advantages.is_empty() {
        return Vec::new();
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    advantages.iter().map(|a| (a - mean) / std).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Term-by-term sum of γ^k δ_{t+k} up to and including the episode's last step.
    fn explicit_sum(deltas: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
        (0..deltas.len())
            .map(|t| {
                let mut total = 0.0;
                let mut discount = 1.0;
                for k in t..deltas.len() {
                    total += discount * deltas[k];
                    if dones[k] {
                        break;
                    }
                    discount *= gamma;
                }
                total
            })
            .collect()
    }

    #[test]
    fn delta_reference_values() {
        let d = compute_deltas(&[1.0], &[0.5], &[123.0], &[true], 0.99).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12);
        let d = compute_deltas(&[0.0], &[0.4], &[0.4], &[false], 1.0).unwrap();
        assert_eq!(d[0], 0.0);
        let d = compute_deltas(&[0.0], &[0.2], &[0.5], &[false], 0.99).unwrap();
        assert!((d[0] - 0.295).abs() < 1e-12);
        assert!(matches!(compute_deltas(&[0.0], &[], &[0.0], &[false], 0.9), Err(Error::Usage(_))));
    }

    #[test]
    fn advantage_reference_values() {
        let a = compute_advantages(&[0.295, 0.5], &[false, true], 0.99);
        assert!((a[0] - 0.79).abs() < 1e-12, "{}", a[0]);
        assert!((a[1] - 0.5).abs() < 1e-12);
        assert_eq!(compute_advantages(&[0.42], &[true], 0.9), vec![0.42]);
    }

    #[test]
    fn zero_values_and_unit_gamma_give_returns_to_go() {
        let rewards = [-0.001, -0.001, 1.0, -0.001, -1.0];
        let dones = [false, false, true, false, true];
        let zeros = [0.0; 5];
        let d = compute_deltas(&rewards, &zeros, &zeros, &dones, 1.0).unwrap();
        let a = compute_advantages(&d, &dones, 1.0);
        let expected = [0.998, 0.999, 1.0, -1.001, -1.0];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn targets_add_values() {
        let t = value_targets(&[0.79, 0.0], &[0.2, 0.3]);
        assert!((t[0] - 0.99).abs() < 1e-12);
        assert_eq!(t[1], 0.3);
    }

    #[test]
    fn value_offset_shifts_targets_consistently() {
        // Raising every value by c changes each δ by (γ - 1)c (terminal: -c);
        // the targets then move by exactly the value shift of a bootstrap-free return.
        let rewards = [0.1, -0.2, 0.3, 0.0];
        let values = [0.5, -0.1, 0.2, 0.4];
        let next = [-0.1, 0.2, 0.4, 0.7];
        let dones = [false, false, false, false];
        let gamma = 0.9;
        let c = 0.25;
        let base = {
            let d = compute_deltas(&rewards, &values, &next, &dones, gamma).unwrap();
            value_targets(&compute_advantages(&d, &dones, gamma), &values)
        };
        let vs: Vec<f64> = values.iter().map(|v| v + c).collect();
        let ns: Vec<f64> = next.iter().map(|v| v + c).collect();
        let shifted = {
            let d = compute_deltas(&rewards, &vs, &ns, &dones, gamma).unwrap();
            value_targets(&compute_advantages(&d, &dones, gamma), &vs)
        };
        // without terminals the target is a discounted return bootstrapped from the last next-value
        for t in 0..4 {
            let expected = gamma.powi((4 - t) as i32) * c;
            assert!((shifted[t] - base[t] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_has_zero_mean_unit_std() {
        let n = normalize_advantages(&[1.0, 2.0, 3.0, 4.0]);
        assert!(n.iter().sum::<f64>().abs() < 1e-12);
        assert!((n.iter().map(|v| v * v).sum::<f64>() / 4.0 - 1.0).abs() < 1e-12);
        assert_eq!(normalize_advantages(&[2.0, 2.0]), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn recursion_matches_explicit_sum(
            trace in proptest::collection::vec((-1.0f64..1.0, proptest::bool::weighted(0.25)), 1..=10),
            gamma in prop_oneof![Just(0.5), Just(0.99), Just(1.0)],
        ) {
            let (deltas, dones): (Vec<f64>, Vec<bool>) = trace.into_iter().unzip();
            let fast = compute_advantages(&deltas, &dones, gamma);
            let slow = explicit_sum(&deltas, &dones, gamma);
            for (a, b) in fast.iter().zip(slow) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn done_flag_decouples_segments(
            left in proptest::collection::vec(-1.0f64..1.0, 1..6),
            right in proptest::collection::vec(-1.0f64..1.0, 1..6),
            other in proptest::collection::vec(-1.0f64..1.0, 1..6),
        ) {
            let mut dones = vec![false; left.len()];
            *dones.last_mut().unwrap() = true;
            let run = |tail: &[f64]| {
                let deltas: Vec<f64> = left.iter().chain(tail).copied().collect();
                let mut d = dones.clone();
                d.extend(std::iter::repeat_n(false, tail.len()));
                compute_advantages(&deltas, &d, 0.99)
            };
            let a = run(&right);
            let b = run(&other);
            prop_assert_eq!(&a[..left.len()], &b[..left.len()]);
        }

        #[test]
        fn normalization_preserves_order(xs in proptest::collection::vec(-10.0f64..10.0, 2..50)) {
            let n = normalize_advantages(&xs);
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    if xs[i] < xs[j] {
                        prop_assert!(n[i] <= n[j]);
                    }
                }
            }
        }
    }
}
