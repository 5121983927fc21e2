//! On-policy reinforcement learning with a small hand-rolled network
//! stack: no autodiff, just multilayer perceptrons with analytic
//! gradients, generalized advantage estimation, and a clipped surrogate
//! update.

mod buffer;
mod net;
mod ppo;
pub mod toy;

pub use buffer::{gae, RolloutBuffer, Transition};
pub use net::{Adam, Mlp};
pub use ppo::{
    ppo_update, surrogate_gradient, surrogate_loss, PpoConfig, SurrogateSample, UpdateStats,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What an environment hands back after one control step.
#[derive(Debug, Clone)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The episode failed and the state is terminal; no bootstrap value.
    pub terminated: bool,
    /// The step budget ran out; bootstrap from the value estimate.
    pub truncated: bool,
    /// Cumulative successes in the current episode.
    pub successes: u32,
}

/// A resettable, seedable control task.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Start a fresh episode; fully determined by `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> EnvStep;
}

/// Gaussian policy: an MLP producing per-dimension means plus a learned
/// state-independent log standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub actor: Mlp,
    pub log_std: Vec<f64>,
}

impl Policy {
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        Self {
            actor: Mlp::new(obs_dim, hidden, act_dim, rng),
            log_std: vec![-0.5; act_dim],
        }
    }

    /// Deterministic action: the mean of the Gaussian.
    pub fn mean_action(&self, observation: &[f64]) -> Vec<f64> {
        self.actor.forward(observation)
    }

    /// Sample an action and return its log probability.
    pub fn sample_action(&self, observation: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        use rand_distr::{Distribution, StandardNormal};
        let mean = self.actor.forward(observation);
        let mut action = Vec::with_capacity(mean.len());
        let mut log_prob = 0.0;
        for (i, &m) in mean.iter().enumerate() {
            let std = self.log_std[i].exp();
            let z: f64 = StandardNormal.sample(rng);
            let a = m + std * z;
            log_prob += gaussian_log_prob(a, m, self.log_std[i]);
            action.push(a);
        }
        (action, log_prob)
    }

    /// Log probability of `action` under the current parameters.
    pub fn log_prob(&self, observation: &[f64], action: &[f64]) -> f64 {
        let mean = self.actor.forward(observation);
        mean.iter()
            .zip(action)
            .enumerate()
            .map(|(i, (&m, &a))| gaussian_log_prob(a, m, self.log_std[i]))
            .sum()
    }
}

pub(crate) fn gaussian_log_prob(x: f64, mean: f64, log_std: f64) -> f64 {
    let std = log_std.exp();
    let z = (x - mean) / std;
    -0.5 * z * z - log_std - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Control steps collected per environment per epoch.
    pub horizon: usize,
    pub envs_per_epoch: usize,
    pub hidden: Vec<usize>,
    pub ppo: PpoConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            horizon: 16,
            envs_per_epoch: 4,
            hidden: vec![256, 128, 64],
            ppo: PpoConfig::default(),
            seed: 0,
        }
    }
}

/// Per-epoch progress for learning curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-step reward over the epoch's rollout.
    pub mean_reward: f64,
    /// Mean successes per finished episode (0 when none finished).
    pub mean_successes: f64,
}

/// The trained policy, its critic, and the learning curve.
#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Parameters after the final update.
    pub policy: Policy,
    pub critic: Mlp,
    pub curve: Vec<EpochStats>,
    /// Snapshot from the epoch with the highest mean rollout reward; the
    /// initial parameters when no epoch beat negative infinity (0 epochs).
    pub best_policy: Policy,
    pub best_epoch: usize,
}

/// Train a fresh policy on `envs` with synchronous PPO.
///
/// Environments persist across epochs; episodes are only restarted on
/// termination or truncation. Fully deterministic for a given config and
/// environment behavior.
pub fn train<E: Environment>(envs: &mut [E], config: &TrainConfig) -> TrainResult {
    assert!(!envs.is_empty(), "need at least one environment");
    let obs_dim = envs[0].observation_dim();
    let act_dim = envs[0].action_dim();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut policy = Policy::new(obs_dim, act_dim, &config.hidden, &mut rng);
    let mut critic = Mlp::new(obs_dim, &config.hidden, 1, &mut rng);
    let mut actor_opt = Adam::new(policy.actor.parameter_count() + act_dim);
    let mut critic_opt = Adam::new(critic.parameter_count());

    // Deterministic per-env reset seeds, refreshed as episodes finish.
    let mut episode_counter: u64 = 0;
    let mut observations: Vec<Vec<f64>> = envs
        .iter_mut()
        .map(|env| {
            let seed = reset_seed(config.seed, episode_counter);
            episode_counter += 1;
            env.reset(seed)
        })
        .collect();

    let mut curve = Vec::with_capacity(config.epochs);
    let mut finished_successes: Vec<u32> = Vec::new();
    let mut best_policy = policy.clone();
    let mut best_epoch = 0;
    let mut best_reward = f64::NEG_INFINITY;

    for epoch in 0..config.epochs {
        let mut buffer = RolloutBuffer::new(envs.len(), config.horizon);
        finished_successes.clear();

        for step in 0..config.horizon {
            for (ei, env) in envs.iter_mut().enumerate() {
                let obs = observations[ei].clone();
                let (action, log_prob) = policy.sample_action(&obs, &mut rng);
                let value = critic.forward(&obs)[0];
                let out = env.step(&action);
                let done = out.terminated || out.truncated;
                // Truncation cuts a live episode: credit past the cut is
                // the critic's estimate of the state we stopped in.
                let bootstrap = if out.truncated && !out.terminated {
                    critic.forward(&out.observation)[0]
                } else {
                    0.0
                };
                buffer.push(
                    ei,
                    step,
                    Transition {
                        observation: obs,
                        action,
                        log_prob,
                        reward: out.reward,
                        value,
                        terminated: out.terminated,
                        done,
                        bootstrap,
                    },
                );
                if done {
                    finished_successes.push(out.successes);
                    let seed = reset_seed(config.seed, episode_counter);
                    episode_counter += 1;
                    observations[ei] = env.reset(seed);
                } else {
                    observations[ei] = out.observation;
                }
            }
        }

        // Bootstrap values for rollouts cut mid-episode.
        let tail_values: Vec<f64> = observations.iter().map(|o| critic.forward(o)[0]).collect();
        buffer.finish(&tail_values, config.ppo.gamma, config.ppo.lambda);

        let mean_reward = buffer.mean_reward();
        // The rollout measured the pre-update parameters, so snapshot
        // before stepping them.
        if mean_reward > best_reward {
            best_reward = mean_reward;
            best_policy = policy.clone();
            best_epoch = epoch;
        }
        ppo_update(
            &mut policy,
            &mut critic,
            &mut actor_opt,
            &mut critic_opt,
            &buffer,
            &config.ppo,
        );

        let mean_successes = if finished_successes.is_empty() {
            0.0
        } else {
            finished_successes.iter().map(|&s| s as f64).sum::<f64>()
                / finished_successes.len() as f64
        };
        curve.push(EpochStats {
            epoch,
            mean_reward,
            mean_successes,
        });
    }

    TrainResult {
        policy,
        critic,
        curve,
        best_policy,
        best_epoch,
    }
}

/// Outcome of one evaluation episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub consecutive_successes: u32,
    /// The episode ended early because the cube left the workspace.
    pub fell: bool,
    pub steps: u32,
}

/// Evaluation failed inside an environment (for example a goal queue ran
/// dry).
#[derive(Debug, thiserror::Error)]
#[error("evaluation episode {episode}: {message}")]
pub struct EvalError {
    pub episode: usize,
    pub message: String,
}

/// An environment that can replay fixed, numbered evaluation episodes.
///
/// `reset_episode` must derive every random draw from the episode index
/// alone so that evaluating the same episode twice gives identical
/// results.
pub trait EvalEnvironment {
    fn action_dim(&self) -> usize;
    fn reset_episode(&mut self, episode: usize) -> Result<Vec<f64>, String>;
    fn try_step(&mut self, action: &[f64]) -> Result<EnvStep, String>;
}

/// Deterministic evaluation: roll out the policy mean (no sampling) for
/// `n_episodes` numbered episodes of at most `episode_steps` steps each.
pub fn evaluate_policy<E: EvalEnvironment>(
    policy: &Policy,
    env: &mut E,
    n_episodes: usize,
    episode_steps: usize,
) -> Result<Vec<EpisodeResult>, EvalError> {
    let mut results = Vec::with_capacity(n_episodes);
    for episode in 0..n_episodes {
        let mut obs = env
            .reset_episode(episode)
            .map_err(|message| EvalError { episode, message })?;
        let mut successes = 0;
        let mut fell = false;
        let mut steps = 0;
        for step in 0..episode_steps {
            let action = policy.mean_action(&obs);
            let out = env
                .try_step(&action)
                .map_err(|message| EvalError { episode, message })?;
            successes = out.successes;
            steps = step as u32 + 1;
            obs = out.observation;
            if out.terminated {
                fell = true;
                break;
            }
            if out.truncated {
                break;
            }
        }
        results.push(EpisodeResult {
            consecutive_successes: successes,
            fell,
            steps,
        });
    }
    Ok(results)
}

/// Deterministic stream of reset seeds for training episodes.
pub(crate) fn reset_seed(master: u64, episode: u64) -> u64 {
    // SplitMix64 step over (master, episode); avalanches well enough for
    // decorrelated episode initializations.
    let mut z = master
        .wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(episode.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
