//! Path CSV I/O: one row per grid point, columns `path_id,t,value`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FbmError, Result};
use crate::grid::{Role, SamplePath, TimeGrid};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    path_id: usize,
    t: f64,
    value: f64,
}

fn io_err(path: &Path, source: std::io::Error) -> FbmError {
    FbmError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, detail: impl Into<String>) -> FbmError {
    FbmError::PathFormat {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Writes `paths` as CSV to any writer. Floats use shortest round-trip form.
pub fn write_paths_to<W: Write>(
    writer: W,
    paths: &[SamplePath],
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for (id, p) in paths.iter().enumerate() {
        let grid = p.grid();
        for (k, &value) in p.values().iter().enumerate() {
            w.serialize(Row {
                path_id: id,
                t: grid.time(k),
                value,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_paths(path: &Path, paths: &[SamplePath]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_paths_to(file, paths).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => io_err(path, io),
        other => format_err(path, format!("{other:?}")),
    })
}

/// Parses path CSV. Path ids must run `0, 1, 2, …` in contiguous blocks; each
/// block must start at `t = 0` with value 0 on a uniform grid shared by all paths.
pub fn read_paths_from<R: Read>(reader: R, source: &Path, role: Role) -> Result<Vec<SamplePath>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut blocks: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for (line, rec) in rdr.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| format_err(source, format!("row {}: {e}", line + 2)))?;
        if row.path_id == blocks.len() {
            blocks.push((Vec::new(), Vec::new()));
        } else if row.path_id + 1 != blocks.len() {
            return Err(format_err(
                source,
                format!(
                    "row {}: path_id {} out of sequence (expected {} or {})",
                    line + 2,
                    row.path_id,
                    blocks.len().saturating_sub(1),
                    blocks.len()
                ),
            ));
        }
        let b = blocks.last_mut().unwrap();
        b.0.push(row.t);
        b.1.push(row.value);
    }
    if blocks.is_empty() {
        return Err(format_err(source, "no rows"));
    }
    let mut grid: Option<TimeGrid> = None;
    let mut out = Vec::with_capacity(blocks.len());
    for (id, (ts, vs)) in blocks.into_iter().enumerate() {
        let g = infer_grid(&ts).map_err(|d| format_err(source, format!("path {id}: {d}")))?;
        match grid {
            None => grid = Some(g),
            Some(g0) if g0 != g => {
                return Err(format_err(
                    source,
                    format!("path {id}: grid differs from path 0"),
                ))
            }
            _ => {}
        }
        out.push(
            SamplePath::new(g, vs, role)
                .map_err(|e| format_err(source, format!("path {id}: {e}")))?,
        );
    }
    Ok(out)
}

pub fn read_paths(path: &Path, role: Role) -> Result<Vec<SamplePath>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_paths_from(file, path, role)
}

fn infer_grid(ts: &[f64]) -> std::result::Result<TimeGrid, String> {
    if ts.len() < 2 {
        return Err("need at least two grid points".into());
    }
    if ts[0] != 0.0 {
        return Err(format!("first time must be 0, got {}", ts[0]));
    }
    let n = ts.len() - 1;
    let grid = TimeGrid::new(ts[n], n).map_err(|e| e.to_string())?;
    let tol = 1e-9 * grid.step();
    if let Some(k) = (0..=n).find(|&k| (ts[k] - grid.time(k)).abs() > tol) {
        return Err(format!(
            "time {} at index {k} is not on a uniform grid",
            ts[k]
        ));
    }
    Ok(grid)
}
