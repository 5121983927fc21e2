//! Rollout storage and generalized advantage estimation.

/// One step of experience from one environment.
#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    /// Critic value of `observation` at collection time.
    pub value: f64,
    pub terminated: bool,
    /// Episode boundary (terminated or truncated).
    pub done: bool,
    /// Value to bootstrap from past this step: 0 on termination, the
    /// critic's estimate of the final observation on truncation, unused
    /// otherwise.
    pub bootstrap: f64,
}

/// Fixed-shape rollout: `num_envs` rows of `horizon` steps.
pub struct RolloutBuffer {
    num_envs: usize,
    horizon: usize,
    rows: Vec<Vec<Option<Transition>>>,
    advantages: Vec<Vec<f64>>,
    returns: Vec<Vec<f64>>,
}

impl RolloutBuffer {
    pub fn new(num_envs: usize, horizon: usize) -> Self {
        Self {
            num_envs,
            horizon,
            rows: vec![vec![None; horizon]; num_envs],
            advantages: vec![vec![0.0; horizon]; num_envs],
            returns: vec![vec![0.0; horizon]; num_envs],
        }
    }

    pub fn push(&mut self, env: usize, step: usize, transition: Transition) {
        assert!(self.rows[env][step].is_none(), "slot filled twice");
        self.rows[env][step] = Some(transition);
    }

    /// Compute advantages and returns; `tail_values` bootstraps rollouts
    /// cut mid-episode at the horizon boundary.
    #[allow(clippy::needless_range_loop)]
    pub fn finish(&mut self, tail_values: &[f64], gamma: f64, lambda: f64) {
        assert_eq!(tail_values.len(), self.num_envs, "one tail value per env");
        for e in 0..self.num_envs {
            let mut acc = 0.0;
            for t in (0..self.horizon).rev() {
                let tr = self.rows[e][t].as_ref().expect("buffer fully filled");
                let next_value = if tr.done {
                    tr.bootstrap
                } else if t + 1 < self.horizon {
                    self.rows[e][t + 1].as_ref().expect("filled").value
                } else {
                    tail_values[e]
                };
                let delta = tr.reward + gamma * next_value - tr.value;
                acc = delta + gamma * lambda * if tr.done { 0.0 } else { acc };
                self.advantages[e][t] = acc;
                self.returns[e][t] = acc + tr.value;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.num_envs * self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean_reward(&self) -> f64 {
        let total: f64 = self
            .iter()
            .map(|(tr, _, _)| tr.reward)
            .sum();
        total / self.len() as f64
    }

    /// Env-major iteration over (transition, advantage, return).
    pub fn iter(&self) -> impl Iterator<Item = (&Transition, f64, f64)> {
        self.rows.iter().enumerate().flat_map(move |(e, row)| {
            row.iter().enumerate().map(move |(t, tr)| {
                (
                    tr.as_ref().expect("buffer fully filled"),
                    self.advantages[e][t],
                    self.returns[e][t],
                )
            })
        })
    }
}

/// Standalone GAE over one episode segment; exposed for oracle tests.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_value: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    assert_eq!(rewards.len(), values.len());
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        let nv = if t + 1 < values.len() {
            values[t + 1]
        } else {
            next_value
        };
        let delta = rewards[t] + gamma * nv - values[t];
        acc = delta + gamma * lambda * acc;
        out[t] = acc;
    }
    out
}
