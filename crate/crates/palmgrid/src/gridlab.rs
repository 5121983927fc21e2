//! Grid sweep orchestration: cell enumeration, per-cell train/eval jobs,
//! resumable parallel execution, and Table-style aggregation.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::handspec::HandModel;
use crate::math::UnitQuat;
use crate::physics::PhysicsConfig;
use crate::task::{sample_goal_orientation, CubeReorientEnv, GoalSource, TaskConfig};
use crate::trainer::{evaluate_policy, train, EpochStats, Policy, TrainConfig};

/// Thresholds for the "cells with s >= t" columns of the aggregate table.
pub const SUCCESS_THRESHOLDS: [f64; 4] = [1.0, 10.0, 20.0, 30.0];

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("goal sequence length must be positive")]
    EmptyGoalSequence,
    #[error("goal sequence holds {have} goals but the protocol needs {need}")]
    GoalSequenceTooShort { have: usize, need: usize },
    #[error("task setup failed: {0}")]
    Task(#[from] crate::task::TaskError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] crate::trainer::EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Rectangular cell layout on the palm plane, inclusive of both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub spacing: f64,
}

impl GridSpec {
    /// The layout the hands are compared on: 13 columns by 17 rows.
    pub fn paper() -> Self {
        Self {
            x_min: -0.10,
            x_max: 0.14,
            y_min: -0.14,
            y_max: 0.18,
            spacing: 0.02,
        }
    }

    /// Step count along one axis, or an error when the range is not an
    /// integer multiple of the spacing (tolerance 1e-9 on the remainder).
    fn steps(&self, lo: f64, hi: f64, axis: &str) -> Result<usize, GridError> {
        if hi < lo {
            return Err(GridError::InvalidSpec(format!(
                "{axis}_max {hi} is below {axis}_min {lo}"
            )));
        }
        let ratio = (hi - lo) / self.spacing;
        let steps = ratio.round();
        if (ratio - steps).abs() * self.spacing > 1e-9 {
            return Err(GridError::InvalidSpec(format!(
                "{axis} range {lo}..{hi} is not a multiple of spacing {}",
                self.spacing
            )));
        }
        Ok(steps as usize)
    }

    // Negated comparison is deliberate: a NaN spacing must be rejected.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.spacing > 0.0) {
            return Err(GridError::InvalidSpec(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        self.steps(self.x_min, self.x_max, "x")?;
        self.steps(self.y_min, self.y_max, "y")?;
        Ok(())
    }

    pub fn columns(&self) -> usize {
        self.steps(self.x_min, self.x_max, "x").expect("validated") + 1
    }

    pub fn rows(&self) -> usize {
        self.steps(self.y_min, self.y_max, "y").expect("validated") + 1
    }
}

/// One cube placement: integer grid index plus palm-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// (column, row).
    pub index: (usize, usize),
    /// (x, y) on the palm plane in meters.
    pub xy: [f64; 2],
}

/// Enumerate every cell row-major: row 0 first, columns left to right.
pub fn make_grid(spec: &GridSpec) -> Result<Vec<GridCell>, GridError> {
    spec.validate()?;
    let cols = spec.columns();
    let rows = spec.rows();
    let mut cells = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            cells.push(GridCell {
                index: (col, row),
                xy: [
                    spec.x_min + col as f64 * spec.spacing,
                    spec.y_min + row as f64 * spec.spacing,
                ],
            });
        }
    }
    Ok(cells)
}

/// Pre-generate the shared evaluation goal sequence. The stream depends on
/// nothing but the seed, so every hand sees identical targets.
pub fn generate_goal_sequence(seed: u64, n: usize) -> Result<Vec<UnitQuat>, GridError> {
    if n == 0 {
        return Err(GridError::EmptyGoalSequence);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sample_goal_orientation(&mut rng)).collect())
}

/// Outcome of one cell's evaluation under one training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: GridCell,
    pub seed: u64,
    /// Consecutive successes per evaluation episode.
    pub episode_successes: Vec<u32>,
    /// Mean of `episode_successes`; the paper's s.
    pub mean_successes: f64,
}

impl CellResult {
    pub fn new(cell: GridCell, seed: u64, episode_successes: Vec<u32>) -> Self {
        let mean_successes = if episode_successes.is_empty() {
            0.0
        } else {
            episode_successes.iter().map(|&c| c as f64).sum::<f64>()
                / episode_successes.len() as f64
        };
        Self {
            cell,
            seed,
            episode_successes,
            mean_successes,
        }
    }
}

/// Evaluation protocol knobs; defaults follow the reference comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub episodes: usize,
    /// Control steps per episode (600 = 20 s at 30 Hz).
    pub episode_steps: usize,
    /// Seed of the pre-generated goal sequence and the episode resets.
    pub goal_seed: u64,
    /// Goals reserved per episode in the shared sequence.
    pub goals_per_episode: usize,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        Self {
            episodes: 100,
            episode_steps: 600,
            goal_seed: 0,
            goals_per_episode: 64,
        }
    }
}

impl EvalProtocol {
    /// Total goals the sequence must hold.
    pub fn goals_needed(&self) -> usize {
        self.episodes * self.goals_per_episode
    }
}

/// Self-contained snapshot of a trained policy, loadable for later
/// evaluation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format_version: u32,
    pub hand: String,
    pub dof: usize,
    pub observation_dim: usize,
    pub cell: GridCell,
    pub seed: u64,
    pub train: TrainConfig,
    /// Training epoch the snapshot was taken from.
    pub best_epoch: usize,
    /// Filled in when the sweep persists the record.
    pub config_hash: String,
    pub policy: Policy,
}

/// What a finished job yields: evaluation counts, the training curve, and
/// the checkpoint that produced the counts (absent for stubbed runners).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub episode_successes: Vec<u32>,
    pub curve: Vec<EpochStats>,
    pub checkpoint: Option<PolicyCheckpoint>,
}

/// Executes one (cell, seed) job. The production implementation trains and
/// evaluates; tests substitute cheap stubs.
pub trait CellJobRunner: Sync {
    fn run(&self, cell: &GridCell, seed: u64) -> Result<CellOutcome, String>;
}

/// Train a policy at `cell`, then score its best checkpoint on the shared
/// goal sequence.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    model: &HandModel,
    physics: &PhysicsConfig,
    task_template: &TaskConfig,
    train_config: &TrainConfig,
    eval: &EvalProtocol,
    goals: &[UnitQuat],
    cell: &GridCell,
    seed: u64,
) -> Result<CellOutcome, GridError> {
    if goals.len() < eval.goals_needed() {
        return Err(GridError::GoalSequenceTooShort {
            have: goals.len(),
            need: eval.goals_needed(),
        });
    }
    let mut task = task_template.clone();
    task.cell_xy = cell.xy;

    let mut envs = Vec::with_capacity(train_config.envs_per_epoch);
    for _ in 0..train_config.envs_per_epoch {
        envs.push(CubeReorientEnv::new(
            model,
            *physics,
            task.clone(),
            GoalSource::Random,
        )?);
    }
    let mut config = train_config.clone();
    config.seed = seed;
    let trained = train(&mut envs, &config);

    let mut eval_env = CubeReorientEnv::new(
        model,
        *physics,
        task,
        GoalSource::Queue {
            goals: goals.to_vec(),
            per_episode: eval.goals_per_episode,
            seed: eval.goal_seed,
        },
    )?;
    let episodes = evaluate_policy(
        &trained.best_policy,
        &mut eval_env,
        eval.episodes,
        eval.episode_steps,
    )?;
    Ok(CellOutcome {
        episode_successes: episodes.iter().map(|e| e.consecutive_successes).collect(),
        curve: trained.curve,
        checkpoint: Some(PolicyCheckpoint {
            format_version: 1,
            hand: model.name.clone(),
            dof: model.dof(),
            observation_dim: eval_env.observation_dim(),
            cell: *cell,
            seed,
            train: config,
            best_epoch: trained.best_epoch,
            config_hash: String::new(),
            policy: trained.best_policy,
        }),
    })
}

/// Production runner: full training plus shared-sequence evaluation for
/// every job handed to [`run_grid`].
pub struct TrainEvalRunner<'a> {
    pub model: &'a HandModel,
    pub physics: PhysicsConfig,
    /// Template; each job overrides `cell_xy`.
    pub task: TaskConfig,
    /// Template; each job overrides `seed`.
    pub train: TrainConfig,
    pub eval: EvalProtocol,
    pub goals: Vec<UnitQuat>,
}

impl CellJobRunner for TrainEvalRunner<'_> {
    fn run(&self, cell: &GridCell, seed: u64) -> Result<CellOutcome, String> {
        run_cell(
            self.model,
            &self.physics,
            &self.task,
            &self.train,
            &self.eval,
            &self.goals,
            cell,
            seed,
        )
        .map_err(|e| e.to_string())
    }
}

/// On-disk record for one finished job; doubles as the resume checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// Hash of every config value that shaped this result; stale records
    /// are recomputed instead of reused.
    pub config_hash: String,
    pub hand: String,
    pub result: CellResult,
    pub curve: Vec<EpochStats>,
    #[serde(default)]
    pub checkpoint: Option<PolicyCheckpoint>,
}

/// A job that returned an error; the sweep records it and moves on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: GridCell,
    pub seed: u64,
    pub message: String,
}

/// Everything a sweep produced, in job enumeration order.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<CellRecord>,
    pub failures: Vec<CellFailure>,
    /// How many records were loaded from an earlier interrupted run.
    pub resumed: usize,
}

/// Checkpoint filename for one job, stable across runs.
pub fn record_filename(cell: &GridCell, seed: u64) -> String {
    format!("cell_c{:02}_r{:02}_s{}.json", cell.index.0, cell.index.1, seed)
}

fn load_record(path: &Path, config_hash: &str, hand: &str) -> Option<CellRecord> {
    let bytes = fs::read(path).ok()?;
    let record: CellRecord = serde_json::from_slice(&bytes).ok()?;
    (record.config_hash == config_hash && record.hand == hand).then_some(record)
}

fn store_record(path: &Path, record: &CellRecord) -> Result<(), GridError> {
    let json = serde_json::to_vec_pretty(record).map_err(|source| GridError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, json).map_err(|source| GridError::Io {
        path: tmp.clone(),
        source,
    })?;
    fs::rename(&tmp, path).map_err(|source| GridError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Run every (cell, seed) job, checkpointing each into `cells_dir`.
///
/// Jobs already on disk with a matching config hash are reused, so an
/// interrupted sweep resumes where it stopped. Output order is the job
/// enumeration order (cells outer, seeds inner) no matter how many workers
/// execute, and failures never abort the remaining jobs.
pub fn run_grid<R: CellJobRunner>(
    runner: &R,
    cells: &[GridCell],
    seeds: &[u64],
    hand: &str,
    config_hash: &str,
    cells_dir: &Path,
    worker_count: usize,
) -> Result<SweepOutcome, GridError> {
    fs::create_dir_all(cells_dir).map_err(|source| GridError::Io {
        path: cells_dir.to_path_buf(),
        source,
    })?;
    let jobs: Vec<(GridCell, u64)> = cells
        .iter()
        .flat_map(|cell| seeds.iter().map(move |&seed| (*cell, seed)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count.max(1))
        .build()
        .map_err(|e| GridError::InvalidSpec(format!("worker pool: {e}")))?;

    enum JobStatus {
        Fresh(CellRecord),
        Resumed(CellRecord),
        Failed(CellFailure),
    }

    let statuses: Vec<JobStatus> = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, seed)| {
                let path = cells_dir.join(record_filename(&cell, seed));
                if let Some(record) = load_record(&path, config_hash, hand) {
                    return JobStatus::Resumed(record);
                }
                match runner.run(&cell, seed) {
                    Ok(outcome) => JobStatus::Fresh(CellRecord {
                        config_hash: config_hash.to_string(),
                        hand: hand.to_string(),
                        result: CellResult::new(cell, seed, outcome.episode_successes),
                        curve: outcome.curve,
                        checkpoint: outcome.checkpoint.map(|mut c| {
                            c.config_hash = config_hash.to_string();
                            c
                        }),
                    }),
                    Err(message) => JobStatus::Failed(CellFailure {
                        cell,
                        seed,
                        message,
                    }),
                }
            })
            .collect()
    });

    let mut outcome = SweepOutcome {
        records: Vec::new(),
        failures: Vec::new(),
        resumed: 0,
    };
    for status in statuses {
        match status {
            JobStatus::Fresh(record) => {
                let path = cells_dir.join(record_filename(&record.result.cell, record.result.seed));
                store_record(&path, &record)?;
                outcome.records.push(record);
            }
            JobStatus::Resumed(record) => {
                outcome.resumed += 1;
                outcome.records.push(record);
            }
            JobStatus::Failed(failure) => outcome.failures.push(failure),
        }
    }
    Ok(outcome)
}

/// Average each cell's mean over its seeds. Cells missing entirely (all
/// seeds failed) are absent from the map rather than zero.
pub fn seed_averaged_means(results: &[CellResult]) -> Vec<(GridCell, f64)> {
    let mut by_cell: std::collections::BTreeMap<(usize, usize), (GridCell, f64, usize)> =
        std::collections::BTreeMap::new();
    for result in results {
        let entry = by_cell
            .entry((result.cell.index.1, result.cell.index.0))
            .or_insert((result.cell, 0.0, 0));
        entry.1 += result.mean_successes;
        entry.2 += 1;
    }
    by_cell
        .into_values()
        .map(|(cell, sum, n)| (cell, sum / n as f64))
        .collect()
}

/// Table-style aggregate over seed-averaged per-cell means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    /// Best cell's mean consecutive successes.
    pub max_s: f64,
    /// Sum over all evaluated cells.
    pub sum_s: f64,
    /// Cell counts meeting each of `SUCCESS_THRESHOLDS`, in order.
    pub count_ge: [usize; 4],
}

/// Reduce seed-averaged means to the aggregate row. Failed (absent) cells
/// contribute nothing. An empty input yields the all-zero row.
pub fn aggregate(means: &[(GridCell, f64)]) -> GridSummary {
    let mut summary = GridSummary {
        max_s: 0.0,
        sum_s: 0.0,
        count_ge: [0; 4],
    };
    for &(_, s) in means {
        summary.max_s = summary.max_s.max(s);
        summary.sum_s += s;
        for (slot, &threshold) in summary.count_ge.iter_mut().zip(&SUCCESS_THRESHOLDS) {
            if s >= threshold {
                *slot += 1;
            }
        }
    }
    summary
}

/// Seed-averaged means laid out `[row][column]`; `None` marks cells with no
/// surviving result. Input order never matters.
pub fn heatmap_matrix(spec: &GridSpec, means: &[(GridCell, f64)]) -> Vec<Vec<Option<f64>>> {
    let mut matrix = vec![vec![None; spec.columns()]; spec.rows()];
    for &(cell, s) in means {
        let (col, row) = cell.index;
        if row < matrix.len() && col < matrix[row].len() {
            matrix[row][col] = Some(s);
        }
    }
    matrix
}
