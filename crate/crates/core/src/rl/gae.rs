use super::RlError;

/// Generalized advantage estimation over one trajectory segment.
///
/// `last_value` bootstraps the step after the segment. `dones[t]` cuts both
/// the bootstrap and the advantage recursion at `t`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), RlError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(RlError::LengthMismatch {
            rewards: n,
            values: values.len(),
            dones: dones.len(),
        });
    }
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let keep = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * keep - values[t];
        next_adv = delta + gamma * lambda * keep * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_step() {
        for gamma in [0.0, 0.5, 0.99, 1.0] {
            let (a, r) = compute_gae(&[1.0], &[0.0], &[true], 7.0, gamma, 0.95).unwrap();
            assert_eq!(a, vec![1.0]);
            assert_eq!(r, vec![1.0]);
        }
    }

    #[test]
    fn lambda_zero_is_td_residual() {
        let rewards = [0.0, 0.5, 0.0, 1.0];
        let values = [0.2, 0.4, -0.1, 0.3];
        let dones = [false, false, true, false];
        let (a, _) = compute_gae(&rewards, &values, &dones, 0.7, 0.9, 0.0).unwrap();
        let expected = [
            0.0 + 0.9 * 0.4 - 0.2,
            0.5 + 0.9 * -0.1 - 0.4,
            0.0 - -0.1,
            1.0 + 0.9 * 0.7 - 0.3,
        ];
        assert_eq!(a, expected);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            compute_gae(&[0.0, 1.0], &[0.0], &[false, true], 0.0, 0.99, 0.95),
            Err(RlError::LengthMismatch { .. })
        ));
    }
}
