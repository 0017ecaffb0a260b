use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qphase::PhaseDistribution;
use serde::Serialize;

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Header: `re_alpha,im_alpha,value` for one mode, `re_alpha0,im_alpha0,...`
/// for several. Rows follow the grid's row-major order.
pub fn grid_csv(dist: &PhaseDistribution) -> String {
    let grid = dist.grid();
    let modes = grid.space().mode_count();
    let mut out = String::new();
    if modes == 1 {
        out.push_str("re_alpha,im_alpha,value\n");
    } else {
        for k in 0..modes {
            let _ = write!(out, "re_alpha{k},im_alpha{k},");
        }
        out.push_str("value\n");
    }
    for (i, v) in dist.values().iter().enumerate() {
        for a in grid.alphas_at(i) {
            let _ = write!(out, "{},{},", a.re, a.im);
        }
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// Summary of a grid for manifests.
#[derive(Debug, Serialize)]
pub struct GridSummary {
    pub file: PathBuf,
    pub kind: String,
    pub measure: qphase::Measure,
    pub points: usize,
    pub integral: f64,
    pub min: f64,
    pub max: f64,
}

impl GridSummary {
    pub fn of(dist: &PhaseDistribution, file: &Path) -> Self {
        GridSummary {
            file: file.to_path_buf(),
            kind: dist.kind().name(),
            measure: dist.measure(),
            points: dist.values().len(),
            integral: dist.integrate(),
            min: dist.min(),
            max: dist.max(),
        }
    }
}
