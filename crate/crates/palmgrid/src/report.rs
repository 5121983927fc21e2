//! Result artifacts: CSV tables and the per-hand heatmap SVG.
//!
//! Every writer is a pure function of its inputs with a fixed header and
//! row order, so reruns produce byte-identical files. Floats that carry
//! data (coordinates, rewards) print in shortest round-trip form; the
//! aggregate table prints with two decimals, matching how the numbers
//! are reported.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::gridlab::{CellRecord, GridCell, GridSpec, GridSummary};
use crate::math::{quat_to_wxyz, UnitQuat};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per evaluation episode of every (cell, seed) job.
pub fn results_csv(records: &[CellRecord]) -> String {
    let mut out = String::from("hand,column,row,x,y,seed,episode_index,successes\n");
    for record in records {
        let result = &record.result;
        let (col, row) = result.cell.index;
        for (episode, successes) in result.episode_successes.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                record.hand,
                col,
                row,
                result.cell.xy[0],
                result.cell.xy[1],
                result.seed,
                episode,
                successes
            )
            .expect("string write");
        }
    }
    out
}

/// Seed-averaged mean consecutive successes per cell.
pub fn summary_csv(hand: &str, means: &[(GridCell, f64)]) -> String {
    let mut out = String::from("hand,column,row,x,y,mean_successes\n");
    for (cell, mean) in means {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            hand, cell.index.0, cell.index.1, cell.xy[0], cell.xy[1], mean
        )
        .expect("string write");
    }
    out
}

/// Aggregate table, one row per hand, threshold columns in rising order.
pub fn table_csv(rows: &[(String, GridSummary)]) -> String {
    let mut out = String::from("hand,max_s,sum_s,count_ge_1,count_ge_10,count_ge_20,count_ge_30\n");
    for (hand, summary) in rows {
        writeln!(
            out,
            "{},{:.2},{:.2},{},{},{},{}",
            hand,
            summary.max_s,
            summary.sum_s,
            summary.count_ge[0],
            summary.count_ge[1],
            summary.count_ge[2],
            summary.count_ge[3]
        )
        .expect("string write");
    }
    out
}

/// Concatenated training curves of every job.
pub fn curves_csv(records: &[CellRecord]) -> String {
    let mut out = String::from("hand,column,row,seed,epoch,mean_reward,mean_successes\n");
    for record in records {
        let (col, row) = record.result.cell.index;
        for stats in &record.curve {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                record.hand,
                col,
                row,
                record.result.seed,
                stats.epoch,
                stats.mean_reward,
                stats.mean_successes
            )
            .expect("string write");
        }
    }
    out
}

/// The shared evaluation goal sequence, w-first quaternions.
pub fn goals_csv(goals: &[UnitQuat]) -> String {
    let mut out = String::from("index,w,x,y,z\n");
    for (index, goal) in goals.iter().enumerate() {
        let [w, x, y, z] = quat_to_wxyz(goal);
        writeln!(out, "{index},{w},{x},{y},{z}").expect("string write");
    }
    out
}

/// Per-episode counts from one evaluation run.
pub fn episodes_csv(counts: &[u32]) -> String {
    let mut out = String::from("episode,successes\n");
    for (episode, successes) in counts.iter().enumerate() {
        writeln!(out, "{episode},{successes}").expect("string write");
    }
    out
}

pub fn write_results_csv(path: &Path, records: &[CellRecord]) -> Result<(), ReportError> {
    write_text(path, &results_csv(records))
}

pub fn write_summary_csv(
    path: &Path,
    hand: &str,
    means: &[(GridCell, f64)],
) -> Result<(), ReportError> {
    write_text(path, &summary_csv(hand, means))
}

pub fn write_table_csv(path: &Path, rows: &[(String, GridSummary)]) -> Result<(), ReportError> {
    write_text(path, &table_csv(rows))
}

pub fn write_curves_csv(path: &Path, records: &[CellRecord]) -> Result<(), ReportError> {
    write_text(path, &curves_csv(records))
}

pub fn write_goals_csv(path: &Path, goals: &[UnitQuat]) -> Result<(), ReportError> {
    write_text(path, &goals_csv(goals))
}

pub fn write_episodes_csv(path: &Path, counts: &[u32]) -> Result<(), ReportError> {
    write_text(path, &episodes_csv(counts))
}

/// Parse an `episode,successes` file back into counts, in row order.
pub fn read_episode_counts(path: &Path) -> Result<Vec<f64>, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "episode,successes" => {}
        _ => {
            return Err(ReportError::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "expected header 'episode,successes'".into(),
            })
        }
    }
    let mut counts = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(_), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(ReportError::Parse {
                path: path.to_path_buf(),
                line: index + 1,
                message: "expected two comma-separated fields".into(),
            });
        };
        let successes: f64 = value.trim().parse().map_err(|e| ReportError::Parse {
            path: path.to_path_buf(),
            line: index + 1,
            message: format!("bad count: {e}"),
        })?;
        counts.push(successes);
    }
    Ok(counts)
}

const CELL_PX: f64 = 48.0;
const LEFT_PX: f64 = 64.0;
const TOP_PX: f64 = 48.0;
const BOTTOM_PX: f64 = 44.0;
const LEGEND_PX: f64 = 86.0;

fn blend(t: f64) -> (u8, u8, u8) {
    // White to dark blue, linear in each channel.
    let lerp = |a: f64, b: f64| (a + t.clamp(0.0, 1.0) * (b - a)).round() as u8;
    (lerp(250.0, 8.0), lerp(250.0, 48.0), lerp(250.0, 107.0))
}

/// Seed-averaged heatmap as standalone SVG 1.1.
///
/// Row 0 (the smallest y) renders at the bottom. The color scale runs
/// linearly from 0 to the largest present value, each cell is annotated
/// with its value, the best cell gets a green outline, and missing cells
/// are gray.
pub fn heatmap_svg(spec: &GridSpec, matrix: &[Vec<Option<f64>>], title: &str) -> String {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, |r| r.len());
    let width = LEFT_PX + cols as f64 * CELL_PX + LEGEND_PX;
    let height = TOP_PX + rows as f64 * CELL_PX + BOTTOM_PX;

    let mut max_value = 0.0f64;
    let mut best: Option<(usize, usize)> = None;
    for (row, cells) in matrix.iter().enumerate() {
        for (col, value) in cells.iter().enumerate() {
            if let Some(v) = value {
                if best.is_none() || *v > max_value {
                    max_value = *v;
                    best = Some((row, col));
                }
            }
        }
    }

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    )
    .expect("string write");
    writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>"
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>",
        LEFT_PX + cols as f64 * CELL_PX / 2.0,
        title
    )
    .expect("string write");

    for (row, cells) in matrix.iter().enumerate() {
        let y = TOP_PX + (rows - 1 - row) as f64 * CELL_PX;
        for (col, value) in cells.iter().enumerate() {
            let x = LEFT_PX + col as f64 * CELL_PX;
            match value {
                Some(v) => {
                    let t = if max_value > 0.0 { v / max_value } else { 0.0 };
                    let (r, g, b) = blend(t);
                    writeln!(
                        svg,
                        "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" \
                         fill=\"#{r:02x}{g:02x}{b:02x}\" stroke=\"#ffffff\"/>"
                    )
                    .expect("string write");
                    let ink = if t > 0.55 { "#ffffff" } else { "#1a1a1a" };
                    writeln!(
                        svg,
                        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                         fill=\"{ink}\" text-anchor=\"middle\">{v:.1}</text>",
                        x + CELL_PX / 2.0,
                        y + CELL_PX / 2.0 + 4.0
                    )
                    .expect("string write");
                }
                None => {
                    writeln!(
                        svg,
                        "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" \
                         fill=\"#d4d4d4\" stroke=\"#ffffff\"/>"
                    )
                    .expect("string write");
                }
            }
        }
    }

    if let Some((row, col)) = best {
        let x = LEFT_PX + col as f64 * CELL_PX;
        let y = TOP_PX + (rows - 1 - row) as f64 * CELL_PX;
        writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" \
             fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"3\"/>"
        )
        .expect("string write");
    }

    // Axis labels: palm-frame coordinates in meters.
    for col in 0..cols {
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" \
             text-anchor=\"middle\">{:.2}</text>",
            LEFT_PX + col as f64 * CELL_PX + CELL_PX / 2.0,
            TOP_PX + rows as f64 * CELL_PX + 14.0,
            spec.x_min + col as f64 * spec.spacing
        )
        .expect("string write");
    }
    for row in 0..rows {
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" \
             text-anchor=\"end\">{:.2}</text>",
            LEFT_PX - 6.0,
            TOP_PX + (rows - 1 - row) as f64 * CELL_PX + CELL_PX / 2.0 + 3.0,
            spec.y_min + row as f64 * spec.spacing
        )
        .expect("string write");
    }
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
         text-anchor=\"middle\">x (m)</text>",
        LEFT_PX + cols as f64 * CELL_PX / 2.0,
        TOP_PX + rows as f64 * CELL_PX + 32.0
    )
    .expect("string write");

    // Color legend: vertical gradient from 0 at the bottom to the max.
    let legend_x = LEFT_PX + cols as f64 * CELL_PX + 24.0;
    let legend_h = (rows as f64 * CELL_PX).max(CELL_PX);
    writeln!(
        svg,
        "<defs><linearGradient id=\"scale\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\
         <stop offset=\"0\" stop-color=\"#fafafa\"/>\
         <stop offset=\"1\" stop-color=\"#08306b\"/>\
         </linearGradient></defs>"
    )
    .expect("string write");
    writeln!(
        svg,
        "<rect x=\"{legend_x}\" y=\"{TOP_PX}\" width=\"14\" height=\"{legend_h}\" \
         fill=\"url(#scale)\" stroke=\"#666666\"/>"
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{max_value:.2}</text>",
        legend_x + 18.0,
        TOP_PX + 8.0
    )
    .expect("string write");
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">0</text>",
        legend_x + 18.0,
        TOP_PX + legend_h
    )
    .expect("string write");
    svg.push_str("</svg>\n");
    svg
}

pub fn write_heatmap_svg(
    path: &Path,
    spec: &GridSpec,
    matrix: &[Vec<Option<f64>>],
    title: &str,
) -> Result<(), ReportError> {
    write_text(path, &heatmap_svg(spec, matrix, title))
}
