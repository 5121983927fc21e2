//! Command-line interface: sweeps, reports, pairwise comparison, and
//! single-policy evaluation.
//!
//! Exit codes are stable contracts: 0 success, 2 configuration or spec
//! diagnostics, 3 at least one failed sweep cell, 4 empty report input,
//! 5 comparison length mismatch, 6 checkpoint/hand mismatch.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::gridlab::{
    aggregate, generate_goal_sequence, heatmap_matrix, make_grid, record_filename,
    seed_averaged_means, CellRecord, CellResult, EvalProtocol, GridSpec, PolicyCheckpoint,
    TrainEvalRunner,
};
use crate::handspec::{builtin_model, parse_hand_spec, validate_model, HandModel, BUILTIN_NAMES};
use crate::manifest::{
    hand_spec_hash, timestamp_epoch_seconds, JobEntry, OutputPaths, RunManifest, SweepConfig,
};
use crate::physics::PhysicsConfig;
use crate::report;
use crate::stats::{bonferroni, summarize, wilcoxon_signed_rank, PairedSample, StatsError};
use crate::task::{CubeReorientEnv, GoalSource, TaskConfig};
use crate::trainer::{evaluate_policy, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 2;
pub const EXIT_FAILED_CELLS: i32 = 3;
pub const EXIT_EMPTY_INPUT: i32 = 4;
pub const EXIT_LENGTH_MISMATCH: i32 = 5;
pub const EXIT_DOF_MISMATCH: i32 = 6;

/// Worker count override honored when no `--workers` flag is given.
pub const WORKERS_ENV: &str = "PALMGRID_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "palmgrid",
    version,
    about = "Grid-based training and evaluation of dexterous-hand cube reorientation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hand model utilities.
    Model {
        #[command(subcommand)]
        action: ModelCommand,
    },
    /// Train and evaluate one policy per grid cell and seed.
    Sweep(SweepArgs),
    /// Regenerate tables, curves, and the heatmap from a sweep directory.
    Report(ReportArgs),
    /// Paired Wilcoxon signed-rank tests over all pairs of result files.
    Compare(CompareArgs),
    /// Evaluate a stored policy checkpoint on the fixed goal sequence.
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Parse and validate a hand spec; prints the DoF count when clean.
    Validate { spec: String },
    /// Write a builtin model as a spec file (stdout without --out).
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Builtin hand name or spec file path.
    #[arg(long)]
    pub hand: String,
    /// x_min:x_max:y_min:y_max:spacing, meters.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Training seeds, one job per (cell, seed).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Training epochs per cell.
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    /// Evaluation episodes per job.
    #[arg(long, default_value_t = EvalProtocol::default().episodes)]
    pub eval_episodes: usize,
    /// Seed of the shared evaluation goal sequence.
    #[arg(long, default_value_t = 0)]
    pub goal_seed: u64,
    /// Parallel jobs; defaults to PALMGRID_WORKERS or the CPU count.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep directory (may be partial).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Heatmap SVG path; defaults to heatmap.svg inside the directory.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
    /// Aggregate-table CSV path; defaults to table.csv inside.
    #[arg(long)]
    pub table3: Option<PathBuf>,
    /// Training-curve CSV path; defaults to curves.csv inside.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Two or more per-episode count CSVs, one per hand.
    #[arg(required = true, num_args = 2..)]
    pub results: Vec<PathBuf>,
    /// Comparison CSV path; stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Policy checkpoint JSON.
    #[arg(long)]
    pub policy: PathBuf,
    /// Builtin hand name or spec file path.
    #[arg(long)]
    pub hand: String,
    /// Cube placement "x,y" in meters.
    #[arg(long, allow_hyphen_values = true)]
    pub cell: String,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub goal_seed: u64,
    /// Per-episode CSV path; stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Model { action } => match action {
            ModelCommand::Validate { spec } => model_validate(&spec),
            ModelCommand::Export { name, out } => model_export(&name, out.as_deref()),
        },
        Command::Sweep(args) => sweep(&args),
        Command::Report(args) => report_cmd(&args),
        Command::Compare(args) => compare(&args),
        Command::Eval(args) => eval(&args),
    }
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    code
}

/// Accepts either a builtin name or a spec file path. An existing file
/// wins over a name collision.
fn resolve_hand(spec: &str) -> Result<HandModel, String> {
    let path = Path::new(spec);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| format!("{spec}: {e}"))?;
        return parse_hand_spec(&text).map_err(|e| format!("{spec}: {e}"));
    }
    builtin_model(spec).ok_or_else(|| {
        format!(
            "no such file, and no builtin hand named '{spec}' (builtins: {})",
            BUILTIN_NAMES.join(", ")
        )
    })
}

fn model_validate(spec: &str) -> i32 {
    let model = match resolve_hand(spec) {
        Ok(model) => model,
        Err(message) => return fail(EXIT_DIAGNOSTICS, message),
    };
    let diagnostics = validate_model(&model);
    if diagnostics.is_empty() {
        println!("dof: {}", model.dof());
        EXIT_OK
    } else {
        for diagnostic in &diagnostics {
            eprintln!("{diagnostic}");
        }
        EXIT_DIAGNOSTICS
    }
}

fn model_export(name: &str, out: Option<&Path>) -> i32 {
    let Some(model) = builtin_model(name) else {
        return fail(
            EXIT_DIAGNOSTICS,
            format!("no builtin hand named '{name}' (builtins: {})", BUILTIN_NAMES.join(", ")),
        );
    };
    let text = crate::handspec::serialize_hand_spec(&model);
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", path.display()));
            }
            EXIT_OK
        }
        None => {
            print!("{text}");
            EXIT_OK
        }
    }
}

fn parse_grid_spec(text: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 5 {
        return Err(format!(
            "grid spec '{text}' must be x_min:x_max:y_min:y_max:spacing"
        ));
    }
    let mut values = [0.0f64; 5];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("grid spec '{text}': {e}"))?;
    }
    Ok(GridSpec {
        x_min: values[0],
        x_max: values[1],
        y_min: values[2],
        y_max: values[3],
        spacing: values[4],
    })
}

fn worker_count(flag: Option<usize>) -> usize {
    if let Some(n) = flag {
        return n.max(1);
    }
    if let Ok(value) = std::env::var(WORKERS_ENV) {
        if let Ok(n) = value.parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Records sorted into job enumeration order: row, then column, then seed.
fn sort_records(records: &mut [CellRecord]) {
    records.sort_by_key(|r| (r.result.cell.index.1, r.result.cell.index.0, r.result.seed));
}

fn write_sweep_artifacts(
    dir: &Path,
    outputs: &OutputPaths,
    hand: &str,
    grid: &GridSpec,
    records: &[CellRecord],
) -> Result<(), String> {
    let results: Vec<CellResult> = records.iter().map(|r| r.result.clone()).collect();
    let means = seed_averaged_means(&results);
    let summary = aggregate(&means);
    let matrix = heatmap_matrix(grid, &means);
    report::write_results_csv(&dir.join(&outputs.results_csv), records)
        .map_err(|e| e.to_string())?;
    report::write_summary_csv(&dir.join(&outputs.summary_csv), hand, &means)
        .map_err(|e| e.to_string())?;
    report::write_table_csv(&dir.join(&outputs.table_csv), &[(hand.to_string(), summary)])
        .map_err(|e| e.to_string())?;
    report::write_curves_csv(&dir.join(&outputs.curves_csv), records)
        .map_err(|e| e.to_string())?;
    report::write_heatmap_svg(&dir.join(&outputs.heatmap_svg), grid, &matrix, hand)
        .map_err(|e| e.to_string())?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> i32 {
    let model = match resolve_hand(&args.hand) {
        Ok(model) => model,
        Err(message) => return fail(EXIT_DIAGNOSTICS, message),
    };
    let grid = match parse_grid_spec(&args.grid) {
        Ok(grid) => grid,
        Err(message) => return fail(EXIT_DIAGNOSTICS, message),
    };
    let cells = match make_grid(&grid) {
        Ok(cells) => cells,
        Err(e) => return fail(EXIT_DIAGNOSTICS, e),
    };
    if args.seeds.is_empty() {
        return fail(EXIT_DIAGNOSTICS, "at least one seed is required");
    }

    let train = TrainConfig {
        epochs: args.epochs,
        ..TrainConfig::default()
    };
    let eval = EvalProtocol {
        episodes: args.eval_episodes,
        goal_seed: args.goal_seed,
        ..EvalProtocol::default()
    };
    let task = TaskConfig::default();
    let physics = PhysicsConfig::default();
    let config = SweepConfig {
        hand_name: model.name.clone(),
        hand_spec_hash: hand_spec_hash(&model),
        grid,
        physics,
        task: task.clone(),
        train: train.clone(),
        eval,
        seeds: args.seeds.clone(),
    };
    let config_hash = config.hash();

    let goals = match generate_goal_sequence(eval.goal_seed, eval.goals_needed()) {
        Ok(goals) => goals,
        Err(e) => return fail(EXIT_DIAGNOSTICS, e),
    };

    let outputs = OutputPaths::default();
    if let Err(e) = fs::create_dir_all(&args.out) {
        return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", args.out.display()));
    }
    if let Err(e) = report::write_goals_csv(&args.out.join(&outputs.goals_csv), &goals) {
        return fail(EXIT_DIAGNOSTICS, e);
    }

    let jobs: Vec<JobEntry> = cells
        .iter()
        .flat_map(|c| args.seeds.iter().map(move |&s| JobEntry::new(c, s)))
        .collect();
    let workers = worker_count(args.workers);
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: std::env::args().collect(),
        timestamp_epoch_seconds: timestamp_epoch_seconds(),
        worker_count: workers,
        config: config.clone(),
        config_hash: config_hash.clone(),
        jobs,
        outputs: outputs.clone(),
        failures: vec![],
    };
    // Written before the jobs start so an interrupted directory still
    // carries its configuration; rewritten with failures at the end.
    let manifest_path = args.out.join("manifest.json");
    if let Err(e) = manifest.write(&manifest_path) {
        return fail(EXIT_DIAGNOSTICS, e);
    }

    let runner = TrainEvalRunner {
        model: &model,
        physics,
        task,
        train,
        eval,
        goals,
    };
    let cells_dir = args.out.join(&outputs.cells_dir);
    let outcome = match crate::gridlab::run_grid(
        &runner,
        &cells,
        &args.seeds,
        &model.name,
        &config_hash,
        &cells_dir,
        workers,
    ) {
        Ok(outcome) => outcome,
        Err(e) => return fail(EXIT_DIAGNOSTICS, e),
    };

    let policies_dir = args.out.join(&outputs.policies_dir);
    if let Err(e) = fs::create_dir_all(&policies_dir) {
        return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", policies_dir.display()));
    }
    let mut records = outcome.records;
    sort_records(&mut records);
    for record in &records {
        if let Some(checkpoint) = &record.checkpoint {
            let path = policies_dir.join(record_filename(&record.result.cell, record.result.seed));
            let json = match serde_json::to_vec_pretty(checkpoint) {
                Ok(json) => json,
                Err(e) => return fail(EXIT_DIAGNOSTICS, e),
            };
            if let Err(e) = fs::write(&path, json) {
                return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", path.display()));
            }
        }
    }
    if let Err(message) = write_sweep_artifacts(&args.out, &outputs, &model.name, &grid, &records)
    {
        return fail(EXIT_DIAGNOSTICS, message);
    }

    manifest.failures = outcome.failures.clone();
    if let Err(e) = manifest.write(&manifest_path) {
        return fail(EXIT_DIAGNOSTICS, e);
    }

    println!(
        "{}: {} jobs ({} resumed), {} failed",
        model.name,
        records.len() + outcome.failures.len(),
        outcome.resumed,
        outcome.failures.len()
    );
    if outcome.failures.is_empty() {
        EXIT_OK
    } else {
        for failure in &outcome.failures {
            eprintln!(
                "cell ({}, {}) seed {}: {}",
                failure.cell.index.0, failure.cell.index.1, failure.seed, failure.message
            );
        }
        EXIT_FAILED_CELLS
    }
}

fn load_records(dir: &Path, config_hash: &str) -> Result<Vec<CellRecord>, String> {
    let mut records = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for entry in entries {
        let entry = entry.map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let record: CellRecord = serde_json::from_slice(&bytes)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        if record.config_hash == config_hash {
            records.push(record);
        }
    }
    sort_records(&mut records);
    Ok(records)
}

fn report_cmd(args: &ReportArgs) -> i32 {
    let manifest = match RunManifest::read(&args.input.join("manifest.json")) {
        Ok(manifest) => manifest,
        Err(e) => return fail(EXIT_EMPTY_INPUT, format!("not a sweep directory: {e}")),
    };
    let cells_dir = args.input.join(&manifest.outputs.cells_dir);
    let records = match load_records(&cells_dir, &manifest.config_hash) {
        Ok(records) => records,
        Err(message) => return fail(EXIT_EMPTY_INPUT, message),
    };
    if records.is_empty() {
        return fail(EXIT_EMPTY_INPUT, "no matching result files");
    }

    let results: Vec<CellResult> = records.iter().map(|r| r.result.clone()).collect();
    let means = seed_averaged_means(&results);
    let summary = aggregate(&means);
    let matrix = heatmap_matrix(&manifest.config.grid, &means);
    let hand = &manifest.config.hand_name;

    let heatmap_path = args
        .heatmap
        .clone()
        .unwrap_or_else(|| args.input.join(&manifest.outputs.heatmap_svg));
    let table_path = args
        .table3
        .clone()
        .unwrap_or_else(|| args.input.join(&manifest.outputs.table_csv));
    let curves_path = args
        .curves
        .clone()
        .unwrap_or_else(|| args.input.join(&manifest.outputs.curves_csv));

    if let Err(e) =
        report::write_heatmap_svg(&heatmap_path, &manifest.config.grid, &matrix, hand)
    {
        return fail(EXIT_DIAGNOSTICS, e);
    }
    if let Err(e) = report::write_table_csv(&table_path, &[(hand.clone(), summary)]) {
        return fail(EXIT_DIAGNOSTICS, e);
    }
    if let Err(e) = report::write_curves_csv(&curves_path, &records) {
        return fail(EXIT_DIAGNOSTICS, e);
    }
    println!(
        "{hand}: {} records over {} cells",
        records.len(),
        means.len()
    );
    EXIT_OK
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn compare(args: &CompareArgs) -> i32 {
    let mut hands = Vec::new();
    for path in &args.results {
        match report::read_episode_counts(path) {
            Ok(counts) => hands.push((file_label(path), counts)),
            Err(e) => return fail(EXIT_DIAGNOSTICS, e),
        }
    }
    for window in hands.windows(2) {
        if window[0].1.len() != window[1].1.len() {
            return fail(
                EXIT_LENGTH_MISMATCH,
                format!(
                    "{} has {} episodes but {} has {}",
                    window[0].0,
                    window[0].1.len(),
                    window[1].0,
                    window[1].1.len()
                ),
            );
        }
    }

    let mut pairs = Vec::new();
    for i in 0..hands.len() {
        for j in (i + 1)..hands.len() {
            pairs.push((i, j));
        }
    }
    let m = pairs.len();

    let mut rows = String::from("hand_a,hand_b,W,p,p_adjusted,significant_at_0.05\n");
    for (i, j) in pairs {
        let (name_a, counts_a) = &hands[i];
        let (name_b, counts_b) = &hands[j];
        let sample = PairedSample {
            x: counts_a.clone(),
            y: counts_b.clone(),
        };
        match wilcoxon_signed_rank(&sample) {
            Ok(result) => {
                let adjusted = bonferroni(&[result.p_value_two_sided], m)[0];
                rows.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    name_a,
                    name_b,
                    result.statistic,
                    result.p_value_two_sided,
                    adjusted,
                    adjusted < 0.05
                ));
            }
            Err(StatsError::AllZeroDifferences) => {
                eprintln!("{name_a} vs {name_b}: all paired differences are zero; test undefined");
                rows.push_str(&format!("{name_a},{name_b},,,,false\n"));
            }
            Err(e) => return fail(EXIT_DIAGNOSTICS, e),
        }
    }

    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, rows) {
                return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", path.display()));
            }
        }
        None => print!("{rows}"),
    }
    EXIT_OK
}

fn parse_cell(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("cell '{text}' must be x,y"));
    }
    let x = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("cell '{text}': {e}"))?;
    let y = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("cell '{text}': {e}"))?;
    Ok([x, y])
}

fn eval(args: &EvalArgs) -> i32 {
    let bytes = match fs::read(&args.policy) {
        Ok(bytes) => bytes,
        Err(e) => return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", args.policy.display())),
    };
    let checkpoint: PolicyCheckpoint = match serde_json::from_slice(&bytes) {
        Ok(checkpoint) => checkpoint,
        Err(e) => return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", args.policy.display())),
    };
    let model = match resolve_hand(&args.hand) {
        Ok(model) => model,
        Err(message) => return fail(EXIT_DIAGNOSTICS, message),
    };
    if checkpoint.dof != model.dof() {
        return fail(
            EXIT_DOF_MISMATCH,
            format!(
                "checkpoint was trained on {} with {} DoF, but {} has {}",
                checkpoint.hand,
                checkpoint.dof,
                model.name,
                model.dof()
            ),
        );
    }
    let cell_xy = match parse_cell(&args.cell) {
        Ok(xy) => xy,
        Err(message) => return fail(EXIT_DIAGNOSTICS, message),
    };
    if args.episodes == 0 {
        return fail(EXIT_DIAGNOSTICS, "at least one episode is required");
    }

    let eval = EvalProtocol {
        episodes: args.episodes,
        goal_seed: args.goal_seed,
        ..EvalProtocol::default()
    };
    let goals = match generate_goal_sequence(eval.goal_seed, eval.goals_needed()) {
        Ok(goals) => goals,
        Err(e) => return fail(EXIT_DIAGNOSTICS, e),
    };
    let task = TaskConfig {
        cell_xy,
        ..TaskConfig::default()
    };
    let mut env = match CubeReorientEnv::new(
        &model,
        PhysicsConfig::default(),
        task,
        GoalSource::Queue {
            goals,
            per_episode: eval.goals_per_episode,
            seed: eval.goal_seed,
        },
    ) {
        Ok(env) => env,
        Err(e) => return fail(EXIT_DIAGNOSTICS, e),
    };
    if checkpoint.observation_dim != env.observation_dim() {
        return fail(
            EXIT_DOF_MISMATCH,
            format!(
                "checkpoint expects {}-dimensional observations, environment provides {}",
                checkpoint.observation_dim,
                env.observation_dim()
            ),
        );
    }

    let episodes = match evaluate_policy(
        &checkpoint.policy,
        &mut env,
        eval.episodes,
        eval.episode_steps,
    ) {
        Ok(episodes) => episodes,
        Err(e) => return fail(EXIT_DIAGNOSTICS, e),
    };
    let counts: Vec<u32> = episodes.iter().map(|e| e.consecutive_successes).collect();
    let csv = report::episodes_csv(&counts);
    let stats = summarize(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, csv) {
                return fail(EXIT_DIAGNOSTICS, format!("{}: {e}", path.display()));
            }
            println!("mean: {}", stats.mean);
            println!("median: {}", stats.median);
        }
        None => {
            print!("{csv}");
            eprintln!("mean: {}", stats.mean);
            eprintln!("median: {}", stats.median);
        }
    }
    EXIT_OK
}
