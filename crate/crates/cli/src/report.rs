//! Artifact writers. Files are written to a temporary sibling and renamed into
//! place, so a reader never sees a half-written file.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Contents of `summary.json`; fields that do not apply to a command are null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub classification: Option<String>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub epsilon: Option<f64>,
    pub horizon: Option<usize>,
    pub sup_err: Option<f64>,
    pub bound: Option<f64>,
    pub method: Option<String>,
    pub truncation: Option<usize>,
    pub iterations: Option<usize>,
    pub verdict: Verdict,
}

impl Summary {
    pub fn new(epsilon: Option<f64>, horizon: Option<usize>) -> Self {
        Self {
            classification: None,
            k: None,
            epsilon,
            horizon,
            sup_err: None,
            bound: None,
            method: None,
            truncation: None,
            iterations: None,
            verdict: Verdict::Fail,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| io_err(&path, std::io::Error::other(e)))?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Writes rows whose cells are already formatted.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| io_err(&path, std::io::Error::other(e));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| io_err(&path, std::io::Error::other(e.to_string())))?;
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// Seventeen significant digits, enough to round-trip any double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty cell for values that are absent or not finite.
pub fn opt_num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => num(v),
        _ => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(opt_num(Some(f64::NEG_INFINITY)), "");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
