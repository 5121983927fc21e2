//! Desk-scale dexterous-hand simulation and grid-based policy evaluation.
//!
//! `palmgrid` bundles everything needed to compare articulated robot hands on
//! the in-hand cube-reorientation task on a laptop CPU, deterministically:
//!
//! - [`handspec`] — a JSON hand-model format, validation, and four builtin
//!   hand models (an articulated-palm hand, its flat-palm ablation, and two
//!   coarse proxies of popular 16-DoF research hands).
//! - [`kinematics`] — forward kinematics, joint clamping, and world-frame
//!   collision-proxy placement.
//! - [`physics`] — a fixed-timestep stepper with PD-actuated joints, a free
//!   cube, and penalty contacts.
//! - [`task`] — the cube-reorientation environment: observations, reward,
//!   goal resampling, and consecutive-success counting.
//! - [`trainer`] — a small actor-critic PPO implementation and the fixed
//!   evaluation protocol.
//! - [`gridlab`] — grid construction, per-cell train/eval orchestration with
//!   resumable sweeps, and summary aggregation.
//! - [`stats`] — paired Wilcoxon signed-rank testing with Bonferroni
//!   correction and descriptive statistics.
//! - [`manifest`] / [`report`] — run manifests, CSV persistence, and SVG
//!   heatmaps backing the `palmgrid` command-line tool.
//!
//! Everything is seeded and bit-reproducible: the same inputs produce the
//! same bytes in every output file, independent of worker count.

pub mod cli;
pub mod gridlab;
pub mod handspec;
pub mod kinematics;
pub mod manifest;
pub mod math;
pub mod physics;
pub mod report;
pub mod stats;
pub mod task;
pub mod trainer;

// The guide chapters double as doctests so the book can never drift from the
// library API. `cargo test --doc` compiles and runs every Rust snippet below.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }

    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(HandModels, "../../../book/src/hand-models.md");
    chapter!(Kinematics, "../../../book/src/kinematics.md");
    chapter!(Physics, "../../../book/src/physics.md");
    chapter!(Task, "../../../book/src/task.md");
    chapter!(Training, "../../../book/src/training.md");
    chapter!(GridEvaluation, "../../../book/src/grid-evaluation.md");
    chapter!(Statistics, "../../../book/src/statistics.md");
    chapter!(CommandLine, "../../../book/src/cli.md");
}
