//! Loss and reward algebra. Per-sequence values are stored padded; only
//! positions `t < lengths[n]` take part in any sum.

pub const PROB_FLOOR: f64 = 1e-7;

/// Per-token rewards `R = 2r - 1` with the sequence lengths as mask.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMatrix {
    pub values: Vec<Vec<f64>>,
    pub lengths: Vec<usize>,
}

impl RewardMatrix {
    pub fn token_count(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn unmasked(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.lengths).flat_map(|(row, &n)| row[..n].iter().copied())
    }

    /// Mean reward over unmasked positions.
    pub fn mean(&self) -> f64 {
        let n = self.token_count();
        if n == 0 {
            return 0.0;
        }
        self.unmasked().sum::<f64>() / n as f64
    }
}

pub fn compute_rewards(scores: &[Vec<f64>], lengths: &[usize]) -> RewardMatrix {
    let values = scores
        .iter()
        .zip(lengths)
        .map(|(row, &n)| row.iter().enumerate().map(|(t, &r)| if t < n { 2.0 * r - 1.0 } else { 0.0 }).collect())
        .collect();
    RewardMatrix { values, lengths: lengths.to_vec() }
}

/// Exponential moving average: `alpha * b_prev + (1 - alpha) * batch_mean`.
pub fn update_baseline(b_prev: f64, batch_mean: f64, alpha: f64) -> f64 {
    alpha * b_prev + (1.0 - alpha) * batch_mean
}

/// `-sum (R - b) log p / sum T_n` over unmasked positions.
pub fn generator_loss(log_probs: &[Vec<f64>], rewards: &RewardMatrix, baseline: f64) -> f64 {
    let total = rewards.token_count();
    if total == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for ((lp, r), &n) in log_probs.iter().zip(&rewards.values).zip(&rewards.lengths) {
        for t in 0..n {
            acc += (r[t] - baseline) * lp[t];
        }
    }
    -acc / total as f64
}

/// Coefficients `c` such that the generator loss is `sum c * (-log p)`.
pub fn generator_loss_weights(rewards: &RewardMatrix, baseline: f64) -> Vec<Vec<f64>> {
    let total = rewards.token_count().max(1) as f64;
    rewards
        .values
        .iter()
        .zip(&rewards.lengths)
        .map(|(r, &n)| r.iter().enumerate().map(|(t, &v)| if t < n { (v - baseline) / total } else { 0.0 }).collect())
        .collect()
}

/// Mean binary cross-entropy over the unmasked tokens of both sets, with
/// probabilities clamped to [1e-7, 1 - 1e-7]. Real tokens have label 1.
pub fn discriminator_bce(real: &[Vec<f64>], real_len: &[usize], fake: &[Vec<f64>], fake_len: &[usize]) -> f64 {
    let clamp = |y: f64| y.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (row, &len) in real.iter().zip(real_len) {
        sum += row[..len].iter().map(|&y| -clamp(y).ln()).sum::<f64>();
        n += len;
    }
    for (row, &len) in fake.iter().zip(fake_len) {
        sum += row[..len].iter().map(|&y| -(1.0 - clamp(y)).ln()).sum::<f64>();
        n += len;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_map() {
        let r = compute_rewards(&[vec![0.0, 0.5, 1.0, 0.25, 0.9]], &[4]);
        assert_eq!(r.values[0], vec![-1.0, 0.0, 1.0, -0.5, 0.0]);
        assert_eq!(r.token_count(), 4);
        assert_eq!(r.mean(), -0.125);
    }

    #[test]
    fn baseline_examples() {
        assert!((update_baseline(0.0, 1.0, 0.9) - 0.1).abs() < 1e-15);
        assert_eq!(update_baseline(0.3, 0.3, 0.9), 0.3);
    }

    #[test]
    fn generator_loss_examples() {
        let r = compute_rewards(&[vec![1.0]], &[1]);
        assert_eq!(generator_loss(&[vec![-2.0]], &r, 0.0), 2.0);
        let flat = RewardMatrix { values: vec![vec![0.3, 0.3]], lengths: vec![2] };
        assert_eq!(generator_loss(&[vec![-1.0, -3.0]], &flat, 0.3), 0.0);
    }

    #[test]
    fn loss_is_normalized_by_length() {
        let one = RewardMatrix { values: vec![vec![0.5, -0.2]], lengths: vec![2] };
        let lp = vec![vec![-1.5, -0.3]];
        let two = RewardMatrix { values: vec![vec![0.5, -0.2, 0.5, -0.2]], lengths: vec![4] };
        let lp2 = vec![vec![-1.5, -0.3, -1.5, -0.3]];
        assert!((generator_loss(&lp, &one, 0.1) - generator_loss(&lp2, &two, 0.1)).abs() < 1e-15);
    }

    #[test]
    fn bce_examples() {
        let half = vec![vec![0.5; 3]];
        assert!((discriminator_bce(&half, &[3], &half, &[2]) - std::f64::consts::LN_2).abs() < 1e-15);
        let perfect = discriminator_bce(&[vec![1.0]], &[1], &[vec![0.0]], &[1]);
        assert!(perfect > 0.0 && perfect < 1e-6);
    }
}
