//! Artifacts are collected in memory and committed to the output directory in
//! one step, so a failed run leaves nothing behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) {
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.add(name, text.into_bytes());
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    /// Writes everything into a sibling staging directory, then renames it
    /// over `out`. An existing `out` is replaced only when it is empty or
    /// holds an earlier run (a `manifest.json`).
    pub fn commit(&self, out: &Path) -> Result<()> {
        let io = |what: &str, p: &Path, e: std::io::Error| {
            CliError::Validation(format!("cannot {what} {}: {e}", p.display()))
        };
        if out.exists() {
            if !out.is_dir() {
                return Err(CliError::Validation(format!("{} exists and is not a directory", out.display())));
            }
            let empty = fs::read_dir(out).map_err(|e| io("read", out, e))?.next().is_none();
            if !empty && !out.join(MANIFEST).is_file() {
                return Err(CliError::Validation(format!(
                    "refusing to replace {}: it is not empty and holds no {MANIFEST}",
                    out.display()
                )));
            }
        }
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| io("create", &parent, e))?;
        let leaf = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
        let staging = parent.join(format!(".{leaf}.staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| io("clear", &staging, e))?;
        }
        fs::create_dir(&staging).map_err(|e| io("create", &staging, e))?;
        let written = self.files.iter().try_for_each(|(name, bytes)| {
            let p = staging.join(name);
            fs::write(&p, bytes).map_err(|e| io("write", &p, e))
        });
        if let Err(e) = written {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        if out.exists() {
            fs::remove_dir_all(out).map_err(|e| io("replace", out, e))?;
        }
        fs::rename(&staging, out).map_err(|e| {
            let _ = fs::remove_dir_all(&staging);
            io("move results to", out, e)
        })
    }
}

/// Fixed-format float for CSV cells: shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
