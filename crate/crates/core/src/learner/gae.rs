use super::LearnerError;

/// Generalized advantage estimates and the matching returns.
///
/// `values` carries one bootstrap entry past the last reward (0 at terminal).
pub fn compute_gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>), LearnerError> {
    if values.len() != rewards.len() + 1 {
        return Err(LearnerError::LengthMismatch { rewards: rewards.len(), values: values.len() });
    }
    let mut adv = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}
