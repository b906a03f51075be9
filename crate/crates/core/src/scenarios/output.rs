//! Diagnostics CSV, profile CSV and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

pub const DIAGNOSTICS_HEADER: &str =
    "t,norm1,norm2,lz1,lz2,proj11,proj12,n_cores,energy,boundary_mass";

pub const MANIFEST_NAME: &str = "manifest.json";

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::with_capacity(64 + records.len() * 240);
    s.push_str(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.norm1),
            fmt_f64(r.norm2),
            fmt_f64(r.lz1),
            fmt_f64(r.lz2),
            fmt_f64(r.proj11),
            fmt_f64(r.proj12),
            r.n_cores,
            fmt_f64(r.energy),
            fmt_f64(r.boundary_mass)
        );
    }
    s
}

/// Parses a diagnostics CSV back into records.
pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(DIAGNOSTICS_HEADER) {
        return Err(Error::Format("unexpected diagnostics header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Format(format!("diagnostics row {}: malformed", i + 1));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 10 {
                return Err(bad());
            }
            let f = |k: usize| cols[k].parse::<f64>().map_err(|_| bad());
            Ok(DiagnosticsRecord {
                t: f(0)?,
                norm1: f(1)?,
                norm2: f(2)?,
                lz1: f(3)?,
                lz2: f(4)?,
                proj11: f(5)?,
                proj12: f(6)?,
                n_cores: cols[7].parse().map_err(|_| bad())?,
                energy: f(8)?,
                boundary_mass: f(9)?,
            })
        })
        .collect()
}

/// Columns of equal length written as CSV with a header row.
pub fn columns_csv(columns: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    let header: Vec<&str> = columns.iter().map(|c| c.0).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    let n = columns.first().map_or(0, |c| c.1.len());
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|c| fmt_f64(c.1[i])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub kind: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value,
            threshold: format!("<= {limit:e}"),
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= limit,
            value,
            threshold: format!(">= {limit:e}"),
        }
    }

    pub fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: (value - target).abs() <= tol,
            value,
            threshold: format!("{target} +/- {tol}"),
        }
    }

    pub fn equals(name: &str, value: f64, target: f64) -> Self {
        Self {
            name: name.into(),
            passed: value == target,
            value,
            threshold: format!("== {target}"),
        }
    }
}

/// Collects emitted files while a run is in progress.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, kind: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.into(),
            kind: kind.into(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub format_version: u32,
    pub config_sha256: Option<String>,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub files: Vec<FileEntry>,
    pub metadata: serde_json::Map<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Format(format!("manifest serialization: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
