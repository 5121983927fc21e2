//! The in-hand cube-reorientation task: a cube spawns above a grid cell
//! on the palm, and the policy drives joint position targets to spin it
//! into a stream of goal orientations.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::handspec::{ActuatorParams, HandModel, JointLimits};
use crate::math::{quat_to_wxyz, rotation_about, unit_norm_error, Transform, UnitQuat, Vec3};
use crate::physics::{actuator_torque, CubeState, PhysicsConfig, SimState, Simulator};
use crate::trainer::{reset_seed, EnvStep, Environment, EvalEnvironment};

/// Scalar weights of the shaped reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardCoefficients {
    pub rotation_scale: f64,
    pub rotation_eps: f64,
    pub distance_scale: f64,
    pub action_penalty: f64,
    pub reach_bonus: f64,
    pub fall_penalty: f64,
}

impl Default for RewardCoefficients {
    fn default() -> Self {
        Self {
            rotation_scale: 1.0,
            rotation_eps: 0.1,
            distance_scale: -10.0,
            action_penalty: -0.0002,
            reach_bonus: 250.0,
            fall_penalty: 0.0,
        }
    }
}

/// Episode parameters for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    /// Cube spawn and target point on the palm plane (m, palm frame).
    pub cell_xy: [f64; 2],
    pub cube_edge: f64,
    /// Clearance between the lowest possible cube point and the palm.
    pub z_offset: f64,
    /// Orientation error under which a goal counts as reached (rad).
    pub success_tolerance: f64,
    /// Distance from the target position that ends the episode (m).
    pub fall_distance: f64,
    /// Control steps per episode.
    pub episode_length: u32,
    pub reward: RewardCoefficients,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            cell_xy: [0.0, 0.0],
            cube_edge: 0.065,
            z_offset: 0.005,
            success_tolerance: 0.1,
            fall_distance: 0.24,
            episode_length: 600,
            reward: RewardCoefficients::default(),
        }
    }
}

impl TaskConfig {
    pub fn for_cell(x: f64, y: f64) -> Self {
        Self {
            cell_xy: [x, y],
            ..Self::default()
        }
    }

    /// Spawn and target height: half the cube's space diagonal (so no
    /// orientation can clip the palm) plus the clearance offset.
    pub fn cube_height(&self) -> f64 {
        self.cube_edge * 3.0f64.sqrt() / 2.0 + self.z_offset
    }

    // Negated comparison is deliberate: NaN fields must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), TaskError> {
        let [x, y] = self.cell_xy;
        if x.abs() > 1.0 || y.abs() > 1.0 {
            return Err(TaskError::CellOutOfRange { x, y });
        }
        for (field, value) in [
            ("cube_edge", self.cube_edge),
            ("success_tolerance", self.success_tolerance),
            ("fall_distance", self.fall_distance),
            ("episode_length", self.episode_length as f64),
        ] {
            if !(value > 0.0) {
                return Err(TaskError::NonPositive { field, value });
            }
        }
        Ok(())
    }
}

/// The current reorientation target.
#[derive(Debug, Clone)]
pub struct GoalState {
    pub target_orientation: UnitQuat,
    /// World-frame target point; x and y from the grid cell, z fixed.
    pub target_position: Vec3,
}

/// Everything that evolves over one episode.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub sim: SimState,
    pub goal: GoalState,
    pub consecutive_successes: u32,
    pub steps_elapsed: u32,
    pub rng: ChaCha8Rng,
}

/// Per-term reward breakdown; the reward is exactly their sum.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub rotation_term: f64,
    pub distance_term: f64,
    pub action_term: f64,
    pub bonus_term: f64,
    pub fall_term: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.rotation_term + self.distance_term + self.action_term + self.bonus_term
            + self.fall_term
    }
}

/// Where fresh goal orientations come from.
#[derive(Debug, Clone)]
pub enum GoalSource {
    /// Drawn from the episode rng (training).
    Random,
    /// Popped from a pre-generated sequence (evaluation). Episode `e`
    /// owns entries `e * per_episode ..`, and `seed` drives every other
    /// random draw in a reset so episodes match across hands.
    Queue {
        goals: Vec<UnitQuat>,
        per_episode: usize,
        seed: u64,
    },
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("cell ({x}, {y}) is outside the workable |x|, |y| <= 1 m range")]
    CellOutOfRange { x: f64, y: f64 },
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("task cube edge {cube_edge} does not match the physics half extent {half_extent}")]
    CubeSizeMismatch { cube_edge: f64, half_extent: f64 },
    #[error("goal queue exhausted in episode {episode} after {used} goals")]
    GoalQueueExhausted { episode: usize, used: usize },
    #[error("action has {got} entries, expected {expected}")]
    ActionLength { expected: usize, got: usize },
}

/// Goal orientation: a rotation about y followed by a rotation about x,
/// both angles uniform on [-pi, pi].
pub fn sample_goal_orientation(rng: &mut ChaCha8Rng) -> UnitQuat {
    let theta_y = rng.random_range(-PI..PI);
    let theta_x = rng.random_range(-PI..PI);
    rotation_about(&Vec3::new(1.0, 0.0, 0.0), theta_x)
        * rotation_about(&Vec3::new(0.0, 1.0, 0.0), theta_y)
}

/// Geodesic angle in [0, pi] between two orientations. Insensitive to
/// quaternion sign, so `q` and `-q` are at distance zero.
pub fn rot_dist(qa: &UnitQuat, qb: &UnitQuat) -> f64 {
    assert!(
        unit_norm_error(qa) < 1e-6 && unit_norm_error(qb) < 1e-6,
        "rot_dist needs unit quaternions"
    );
    // Vector part of qa * qb^-1, grouped so each term is a difference of
    // two products that round identically when qb = +/-qa; the zeros of
    // the double cover are then exact, not merely small.
    let a = qa.into_inner();
    let b = qb.into_inner();
    let x = (b.w * a.i - a.w * b.i) - (a.j * b.k - a.k * b.j);
    let y = (b.w * a.j - a.w * b.j) - (a.k * b.i - a.i * b.k);
    let z = (b.w * a.k - a.w * b.k) - (a.i * b.j - a.j * b.i);
    2.0 * (x * x + y * y + z * z).sqrt().min(1.0).asin()
}

/// Shaped reward for the state reached by one control step, judged
/// against the goal that was active during the step.
pub fn compute_reward(
    cube: &CubeState,
    goal: &GoalState,
    action: &[f64],
    success: bool,
    fell: bool,
    c: &RewardCoefficients,
) -> (f64, RewardTerms) {
    let d_rot = rot_dist(&cube.orientation, &goal.target_orientation);
    let d_pos = (cube.position - goal.target_position).norm();
    let terms = RewardTerms {
        rotation_term: c.rotation_scale / (d_rot + c.rotation_eps),
        distance_term: c.distance_scale * d_pos,
        action_term: c.action_penalty * action.iter().map(|a| a * a).sum::<f64>(),
        bonus_term: if success { c.reach_bonus } else { 0.0 },
        fall_term: if fell { c.fall_penalty } else { 0.0 },
    };
    (terms.total(), terms)
}

/// The cube-reorientation environment at one grid cell.
#[derive(Debug, Clone)]
pub struct CubeReorientEnv {
    simulator: Simulator,
    config: TaskConfig,
    source: GoalSource,
    limits: Vec<(f64, f64)>,
    actuation: Vec<(ActuatorParams, JointLimits)>,
    flat_pose: Vec<f64>,
    palm_inv: Transform,
    dof: usize,
    state: EpisodeState,
    prev_action: Vec<f64>,
    /// Goals popped so far in the current episode (queue mode).
    goals_used: usize,
    /// Current evaluation episode index (queue mode).
    episode: usize,
}

impl CubeReorientEnv {
    pub fn new(
        model: &HandModel,
        physics: PhysicsConfig,
        config: TaskConfig,
        source: GoalSource,
    ) -> Result<Self, TaskError> {
        config.validate()?;
        if (2.0 * physics.cube.half_extent - config.cube_edge).abs() > 1e-12 {
            return Err(TaskError::CubeSizeMismatch {
                cube_edge: config.cube_edge,
                half_extent: physics.cube.half_extent,
            });
        }
        let limits = model
            .joints
            .iter()
            .map(|j| (j.limits.position_lo, j.limits.position_hi))
            .collect();
        let actuation = model
            .joints
            .iter()
            .map(|j| (j.actuator, j.limits))
            .collect();
        let flat_pose = model.pose_or_zero("init_flat");
        let dof = model.dof();
        let simulator = Simulator::new(model, physics);
        let palm_inv = simulator.palm_frame().inverse();
        let mut env = Self {
            simulator,
            config,
            source,
            limits,
            actuation,
            flat_pose,
            palm_inv,
            dof,
            state: EpisodeState {
                sim: SimState {
                    q: vec![0.0; dof],
                    qdot: vec![0.0; dof],
                    cube: CubeState::at_rest(Vec3::zeros(), UnitQuat::identity()),
                },
                goal: GoalState {
                    target_orientation: UnitQuat::identity(),
                    target_position: Vec3::zeros(),
                },
                consecutive_successes: 0,
                steps_elapsed: 0,
                rng: ChaCha8Rng::seed_from_u64(0),
            },
            prev_action: vec![0.0; dof],
            goals_used: 0,
            episode: 0,
        };
        env.reset_with_seed(0)?;
        Ok(env)
    }

    /// Observation length: four per-joint blocks plus 21 cube/goal values.
    pub fn observation_dim(&self) -> usize {
        4 * self.dof + 21
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    /// Map a policy action in [-1, 1] per joint onto the joint's position
    /// limit range.
    pub fn action_to_targets(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(&self.limits)
            .map(|(&a, &(lo, hi))| lo + 0.5 * (a.clamp(-1.0, 1.0) + 1.0) * (hi - lo))
            .collect()
    }

    fn next_goal(&mut self) -> Result<UnitQuat, TaskError> {
        match &self.source {
            GoalSource::Random => Ok(sample_goal_orientation(&mut self.state.rng)),
            GoalSource::Queue {
                goals, per_episode, ..
            } => {
                let index = self.episode * per_episode + self.goals_used;
                if self.goals_used >= *per_episode || index >= goals.len() {
                    return Err(TaskError::GoalQueueExhausted {
                        episode: self.episode,
                        used: self.goals_used,
                    });
                }
                self.goals_used += 1;
                Ok(goals[index])
            }
        }
    }

    fn reset_with_seed(&mut self, seed: u64) -> Result<Vec<f64>, TaskError> {
        self.goals_used = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let initial_orientation = sample_goal_orientation(&mut rng);
        self.state.rng = rng;
        let target_orientation = self.next_goal()?;

        let spawn = self.palm_inv.inverse().apply(&Vec3::new(
            self.config.cell_xy[0],
            self.config.cell_xy[1],
            self.config.cube_height(),
        ));
        self.state.sim = self.simulator.initial_state(
            self.flat_pose.clone(),
            CubeState::at_rest(spawn, initial_orientation),
        );
        self.state.goal = GoalState {
            target_orientation,
            target_position: spawn,
        };
        self.state.consecutive_successes = 0;
        self.state.steps_elapsed = 0;
        self.prev_action = vec![0.0; self.dof];
        Ok(self.observe())
    }

    /// One 30 Hz control step with the reward term breakdown.
    pub fn step_detailed(&mut self, action: &[f64]) -> Result<(EnvStep, RewardTerms), TaskError> {
        if action.len() != self.dof {
            return Err(TaskError::ActionLength {
                expected: self.dof,
                got: action.len(),
            });
        }
        let clamped: Vec<f64> = action.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        let targets = self.action_to_targets(&clamped);
        self.simulator.step(&mut self.state.sim, &targets);
        self.state.steps_elapsed += 1;

        let cube = &self.state.sim.cube;
        let d_rot = rot_dist(&cube.orientation, &self.state.goal.target_orientation);
        let d_pos = (cube.position - self.state.goal.target_position).norm();
        let success = d_rot < self.config.success_tolerance;
        let fell = d_pos > self.config.fall_distance;
        let (reward, terms) = compute_reward(
            cube,
            &self.state.goal,
            &clamped,
            success,
            fell,
            &self.config.reward,
        );
        if success {
            self.state.consecutive_successes += 1;
            self.state.goal.target_orientation = self.next_goal()?;
        }
        self.prev_action = clamped;

        let step = EnvStep {
            observation: self.observe(),
            reward,
            terminated: fell,
            truncated: self.state.steps_elapsed >= self.config.episode_length,
            successes: self.state.consecutive_successes,
        };
        Ok((step, terms))
    }

    /// Observation layout, palm frame throughout: joint positions scaled
    /// to [-1, 1] by their limits (dof), joint velocities (dof), actuator
    /// torques scaled by the effort limit (dof), cube position (3), cube
    /// orientation wxyz (4), cube linear and angular velocity (6), goal
    /// orientation wxyz (4), rotation from cube to goal wxyz (4),
    /// previous action (dof). Total length 4 * dof + 21.
    pub fn observe(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(4 * self.dof + 21);
        for (i, &(lo, hi)) in self.limits.iter().enumerate() {
            obs.push(2.0 * (self.state.sim.q[i] - lo) / (hi - lo) - 1.0);
        }
        obs.extend_from_slice(&self.state.sim.qdot);
        let targets = self.action_to_targets(&self.prev_action);
        for (i, (actuator, limits)) in self.actuation.iter().enumerate() {
            let torque = actuator_torque(
                actuator,
                limits,
                self.state.sim.q[i],
                self.state.sim.qdot[i],
                targets[i],
            );
            obs.push(torque / limits.effort);
        }

        let cube = &self.state.sim.cube;
        let position = self.palm_inv.apply(&cube.position);
        let orientation = self.palm_inv.rotation * cube.orientation;
        let goal = self.palm_inv.rotation * self.state.goal.target_orientation;
        let relative = goal * orientation.inverse();
        obs.extend_from_slice(position.as_slice());
        obs.extend_from_slice(&quat_to_wxyz(&orientation));
        obs.extend_from_slice(self.palm_inv.rotate(&cube.linear_velocity).as_slice());
        obs.extend_from_slice(self.palm_inv.rotate(&cube.angular_velocity).as_slice());
        obs.extend_from_slice(&quat_to_wxyz(&goal));
        obs.extend_from_slice(&quat_to_wxyz(&relative));
        obs.extend_from_slice(&self.prev_action);
        obs
    }
}

impl Environment for CubeReorientEnv {
    fn observation_dim(&self) -> usize {
        4 * self.dof + 21
    }

    fn action_dim(&self) -> usize {
        self.dof
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.reset_with_seed(seed)
            .unwrap_or_else(|e| panic!("reset failed: {e}"))
    }

    fn step(&mut self, action: &[f64]) -> EnvStep {
        self.step_detailed(action)
            .map(|(step, _)| step)
            .unwrap_or_else(|e| panic!("step failed: {e}"))
    }
}

impl EvalEnvironment for CubeReorientEnv {
    fn action_dim(&self) -> usize {
        self.dof
    }

    fn reset_episode(&mut self, episode: usize) -> Result<Vec<f64>, String> {
        let seed = match &self.source {
            GoalSource::Queue { seed, .. } => reset_seed(*seed, episode as u64),
            GoalSource::Random => reset_seed(0, episode as u64),
        };
        self.episode = episode;
        self.reset_with_seed(seed).map_err(|e| e.to_string())
    }

    fn try_step(&mut self, action: &[f64]) -> Result<EnvStep, String> {
        self.step_detailed(action)
            .map(|(step, _)| step)
            .map_err(|e| e.to_string())
    }
}
