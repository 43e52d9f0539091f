//! Distance export for external distance-based learners.
//!
//! CSV with header `point_index,goal_index,cost,source_label`. Costs use the
//! shortest round-trip decimal form, so parsing the file back recovers every
//! value bit-exactly; unreached rows write the literal `inf` with empty goal
//! fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{DbdError, Result};
use crate::search::{GoalCostMatrix, GoalSet, ShortestPathResult};

fn fmt_cost(cost: f64) -> String {
    if cost.is_finite() {
        format!("{cost}")
    } else {
        "inf".to_string()
    }
}

/// One row per point: its assigned goal and cost from a multi-goal search.
pub fn write_distances<W: Write>(
    result: &ShortestPathResult,
    goals: &GoalSet,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "point_index,goal_index,cost,source_label")?;
    for i in 0..result.len() {
        match result.source(i) {
            Some(g) => writeln!(
                w,
                "{i},{g},{},{}",
                fmt_cost(result.cost(i)),
                goals.get(g).label
            )?,
            None => writeln!(w, "{i},,inf,")?,
        }
    }
    Ok(())
}

/// One row per (point, goal) pair of a dense cost matrix.
pub fn write_distance_matrix<W: Write>(
    matrix: &GoalCostMatrix,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "point_index,goal_index,cost,source_label")?;
    for i in 0..matrix.point_count() {
        for g in 0..matrix.goal_count() {
            writeln!(
                w,
                "{i},{g},{},{}",
                fmt_cost(matrix.cost(i, g)),
                matrix.goal(g).label
            )?;
        }
    }
    Ok(())
}

fn to_path(path: &Path, write: impl FnOnce(BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| DbdError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    write(BufWriter::new(file)).map_err(|e| DbdError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// [`write_distances`] to a file, with path context on I/O failure.
pub fn export_distances(
    result: &ShortestPathResult,
    goals: &GoalSet,
    path: &Path,
) -> Result<()> {
    to_path(path, |w| write_distances(result, goals, w))
}

/// [`write_distance_matrix`] to a file, with path context on I/O failure.
pub fn export_distance_matrix(matrix: &GoalCostMatrix, path: &Path) -> Result<()> {
    to_path(path, |w| write_distance_matrix(matrix, w))
}
