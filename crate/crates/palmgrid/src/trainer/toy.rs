//! A two-link planar reaching task, small enough to train in seconds.
//!
//! Used to verify the learning loop end to end without dragging in the
//! full hand simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvStep, Environment};

const LINK: f64 = 0.1;
const GOAL: (f64, f64) = (0.12, 0.08);
const EPISODE_STEPS: u32 = 64;
/// First-order lag toward the commanded angle per step.
const TRACKING: f64 = 0.25;

/// Two revolute joints chasing a fixed point with dense shaped reward.
pub struct PlanarReacher {
    q: [f64; 2],
    steps: u32,
    successes: u32,
}

impl PlanarReacher {
    pub fn new() -> Self {
        Self {
            q: [0.0; 2],
            steps: 0,
            successes: 0,
        }
    }

    fn tip(&self) -> (f64, f64) {
        let (q1, q2) = (self.q[0], self.q[1]);
        (
            LINK * q1.cos() + LINK * (q1 + q2).cos(),
            LINK * q1.sin() + LINK * (q1 + q2).sin(),
        )
    }

    fn distance(&self) -> f64 {
        let (x, y) = self.tip();
        ((x - GOAL.0).powi(2) + (y - GOAL.1).powi(2)).sqrt()
    }

    fn observe(&self) -> Vec<f64> {
        let (x, y) = self.tip();
        vec![self.q[0], self.q[1], GOAL.0 - x, GOAL.1 - y]
    }
}

impl Default for PlanarReacher {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PlanarReacher {
    fn observation_dim(&self) -> usize {
        4
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.q = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
        self.steps = 0;
        self.successes = 0;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> EnvStep {
        for (qi, &a) in self.q.iter_mut().zip(action) {
            let target = a.clamp(-1.0, 1.0) * std::f64::consts::PI;
            *qi += TRACKING * (target - *qi);
        }
        self.steps += 1;

        let dist = self.distance();
        if dist < 0.01 {
            self.successes += 1;
        }
        EnvStep {
            observation: self.observe(),
            // In (0, 1]: keeps returns O(10) so the critic can track them.
            reward: 0.02 / (dist + 0.02),
            terminated: false,
            truncated: self.steps >= EPISODE_STEPS,
            successes: self.successes,
        }
    }
}
