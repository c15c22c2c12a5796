//! Every file a run produces goes through [`Artifacts`].

use std::fs;
use std::path::{Path, PathBuf};

use dampkg_core::damping::DampingProfile;
use dampkg_core::TorusGrid;
use serde_json::Value;

use crate::error::CliError;

/// Shortest round-trip text for `x`, switching to exponent form for very
/// large or small magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.put(name, &bytes)
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.put(name, text.as_bytes())
    }
}

/// Reads a numeric CSV with a header, returning the named columns.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header.iter().position(|h| h == *n).ok_or_else(|| CliError::Validation {
                path: Some(path.display().to_string()),
                message: format!("missing column `{n}`"),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| CliError::Validation {
                path: Some(path.display().to_string()),
                message: format!("row {}: `{field}` is not a number", line + 2),
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// `t, energy` trace.
pub fn read_trace(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut cols = read_columns(path, &["t", "energy"])?;
    let e = cols.pop().unwrap_or_default();
    let t = cols.pop().unwrap_or_default();
    Ok((t, e))
}

/// Header and rows of a profile CSV: `x, gamma` in 1-D, `x, y, gamma` in 2-D.
pub fn profile_rows(profile: &DampingProfile) -> (Vec<&'static str>, Vec<Vec<f64>>) {
    let grid = profile.grid();
    let rows = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let g = profile.gamma()[i];
            if grid.dim() == 1 { vec![p[0], g] } else { vec![p[0], p[1], g] }
        })
        .collect();
    let header = if grid.dim() == 1 { vec!["x", "gamma"] } else { vec!["x", "y", "gamma"] };
    (header, rows)
}

/// Reads a profile written by [`profile_rows`]; rows must follow grid order.
pub fn read_profile(path: &Path, grid: &TorusGrid) -> Result<DampingProfile, CliError> {
    let gamma = read_columns(path, &["gamma"])?.remove(0);
    Ok(DampingProfile::custom(grid, gamma)?)
}
