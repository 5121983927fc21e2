//! Clipped-surrogate policy optimization over a collected rollout.

use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use super::net::{Adam, Mlp};
use super::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Gradient passes over the rollout per update.
    pub update_epochs: usize,
    /// Contiguous batch splits per pass; 1 keeps the whole rollout in a
    /// single deterministic full-batch step.
    pub minibatches: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            learning_rate: 3e-4,
            entropy_coef: 0.0,
            value_coef: 2.0,
            update_epochs: 4,
            minibatches: 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct UpdateStats {
    /// Fraction of samples where the ratio left the clip band, from the
    /// last update epoch.
    pub clip_fraction: f64,
    /// Mean squared value error from the last update epoch.
    pub value_loss: f64,
}

/// One sample of the actor objective: rollout data held fixed while the
/// parameters move.
#[derive(Debug, Clone)]
pub struct SurrogateSample {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    /// Log probability under the parameters that collected the sample.
    pub old_log_prob: f64,
    /// Normalized advantage.
    pub advantage: f64,
}

/// Mean negated clipped-surrogate objective over `samples`: the scalar
/// that gradient descent on the actor minimizes.
#[allow(clippy::needless_range_loop)]
pub fn surrogate_loss(policy: &Policy, samples: &[SurrogateSample], clip: f64) -> f64 {
    let act_dim = policy.log_std.len();
    let mut total = 0.0;
    for s in samples {
        let mean_out = policy.actor.forward(&s.observation);
        let mut log_prob = 0.0;
        for i in 0..act_dim {
            log_prob += super::gaussian_log_prob(s.action[i], mean_out[i], policy.log_std[i]);
        }
        let ratio = (log_prob - s.old_log_prob).exp();
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
        total -= (ratio * s.advantage).min(clipped * s.advantage);
    }
    total / samples.len() as f64
}

/// Analytic gradient of [`surrogate_loss`] plus the entropy bonus, laid
/// out as actor weights first and one log_std slot per action dimension
/// after them. Returns the gradient and the number of samples whose ratio
/// left the clip band.
#[allow(clippy::needless_range_loop)]
pub fn surrogate_gradient(
    policy: &Policy,
    samples: &[SurrogateSample],
    clip: f64,
    entropy_coef: f64,
) -> (Vec<f64>, usize) {
    let act_dim = policy.log_std.len();
    let actor_params = policy.actor.parameter_count();
    let mut grad = vec![0.0; actor_params + act_dim];
    let mut outside = 0usize;

    for s in samples {
        let (mean_out, cache) = policy.actor.forward_cached(&s.observation);
        let mut log_prob = 0.0;
        for i in 0..act_dim {
            log_prob += super::gaussian_log_prob(s.action[i], mean_out[i], policy.log_std[i]);
        }
        let ratio = (log_prob - s.old_log_prob).exp();
        if ratio < 1.0 - clip || ratio > 1.0 + clip {
            outside += 1;
        }
        // Gradient of -min(ratio*adv, clip(ratio)*adv) wrt log_prob.
        // It vanishes exactly when the clipped branch is active.
        let active = if s.advantage >= 0.0 {
            ratio <= 1.0 + clip
        } else {
            ratio >= 1.0 - clip
        };
        let d_log_prob = if active { -s.advantage * ratio } else { 0.0 };

        if d_log_prob != 0.0 || entropy_coef != 0.0 {
            let mut d_mean = vec![0.0; act_dim];
            for i in 0..act_dim {
                let sigma = policy.log_std[i].exp();
                let z = (s.action[i] - mean_out[i]) / sigma;
                d_mean[i] = d_log_prob * z / sigma;
                // d log_prob / d log_std = z^2 - 1; entropy gradient is
                // +1 per dimension (maximized, so negated in the loss).
                grad[actor_params + i] += d_log_prob * (z * z - 1.0) - entropy_coef;
            }
            policy
                .actor
                .backward(&cache, &d_mean, &mut grad[..actor_params]);
        }
    }

    let n = samples.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    (grad, outside)
}

/// One PPO update: `update_epochs` passes over the rollout, each split
/// into `minibatches` contiguous chunks stepped in a fixed order.
///
/// Deterministic: no shuffling anywhere. With all advantages zero the
/// actor parameters come back bitwise identical.
pub fn ppo_update(
    policy: &mut Policy,
    critic: &mut Mlp,
    actor_opt: &mut Adam,
    critic_opt: &mut Adam,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
) -> UpdateStats {
    let n = buffer.len();
    let actor_params = policy.actor.parameter_count();

    // Advantage normalization over the whole rollout.
    let mean: f64 = buffer.iter().map(|(_, a, _)| a).sum::<f64>() / n as f64;
    let var: f64 =
        buffer.iter().map(|(_, a, _)| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let normalize = |a: f64| {
        if std > 0.0 {
            (a - mean) / (std + 1e-8)
        } else {
            // A perfectly flat advantage carries no signal; keep it zero
            // rather than amplifying rounding noise.
            0.0
        }
    };

    let mut samples = Vec::with_capacity(n);
    let mut returns = Vec::with_capacity(n);
    for (tr, advantage, ret) in buffer.iter() {
        samples.push(SurrogateSample {
            observation: tr.observation.clone(),
            action: tr.action.clone(),
            old_log_prob: tr.log_prob,
            advantage: normalize(advantage),
        });
        returns.push(ret);
    }

    let batches = config.minibatches.clamp(1, n);
    let mut stats = UpdateStats::default();

    for _ in 0..config.update_epochs {
        let mut clipped = 0usize;
        let mut value_loss = 0.0;

        for b in 0..batches {
            let lo = b * n / batches;
            let hi = (b + 1) * n / batches;
            let chunk = &samples[lo..hi];

            let (actor_grad, outside) =
                surrogate_gradient(policy, chunk, config.clip, config.entropy_coef);
            clipped += outside;

            let mut critic_grad = vec![0.0; critic.parameter_count()];
            for (s, &ret) in chunk.iter().zip(&returns[lo..hi]) {
                let (value_out, value_cache) = critic.forward_cached(&s.observation);
                let err = value_out[0] - ret;
                value_loss += err * err;
                critic.backward(&value_cache, &[config.value_coef * err], &mut critic_grad);
            }
            for g in &mut critic_grad {
                *g /= chunk.len() as f64;
            }

            let mut actor_flat = policy.actor.flatten_params();
            actor_flat.extend_from_slice(&policy.log_std);
            actor_opt.step(&mut actor_flat, &actor_grad, config.learning_rate);
            policy.log_std = actor_flat.split_off(actor_params);
            policy.actor.set_params(&actor_flat);

            let mut critic_flat = critic.flatten_params();
            critic_opt.step(&mut critic_flat, &critic_grad, config.learning_rate);
            critic.set_params(&critic_flat);
        }

        stats.clip_fraction = clipped as f64 / n as f64;
        stats.value_loss = value_loss / n as f64;
    }

    stats
}
