//! Run artifacts: CSV tables, JSON verdicts, and the provenance manifest.
//!
//! Every CSV starts with one `#` comment line naming the manifest and the
//! config hash, followed by the header row. Floats use Rust's shortest
//! round-trip formatting, so equal results give equal bytes.

use crate::config::{hex, Command, ExperimentConfig};
use crate::error::{LabError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
pub const VERDICTS: &str = "verdicts.json";
pub const CONFIG_COPY: &str = "config.txt";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub threshold: f64,
    pub pass: bool,
    /// How `estimate` is compared with `threshold`.
    pub rule: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, estimate: f64, stderr: f64, threshold: f64, pass: bool, rule: impl Into<String>) -> Self {
        Verdict { name: name.into(), estimate, stderr, threshold, pass, rule: rule.into() }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: estimate {} (stderr {:.2e}) {} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            short(self.estimate),
            self.stderr,
            self.rule,
            short(self.threshold)
        )
    }
}

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    code_version: &'a str,
    config_sha256: &'a str,
    config_file: &'a str,
    constants: &'a BTreeMap<String, f64>,
    files: &'a [FileEntry],
}

#[derive(Debug, Serialize)]
struct VerdictFile<'a> {
    manifest: &'a str,
    config_sha256: &'a str,
    verdicts: &'a [Verdict],
}

/// Writer for one run directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    command: Command,
    config_hash: String,
    files: Vec<FileEntry>,
    pub constants: BTreeMap<String, f64>,
}

impl Artifacts {
    pub fn create(config: &ExperimentConfig, command: Command) -> Result<Self> {
        let dir = config.out.clone();
        fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
        let mut a = Artifacts { dir, command, config_hash: config.hash(), files: Vec::new(), constants: BTreeMap::new() };
        a.write_bytes(CONFIG_COPY, config.to_text().into_bytes())?;
        Ok(a)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn write_bytes(&mut self, name: &str, bytes: Vec<u8>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, &bytes).map_err(|e| LabError::io(&path, e))?;
        self.files.push(FileEntry { name: name.into(), sha256: hex(&Sha256::digest(&bytes)) });
        Ok(path)
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[String], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut buf = format!("# manifest={MANIFEST} config_sha256={}\n", self.config_hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(&row)?;
            }
            w.flush().map_err(|e| LabError::io(self.dir.join(name), e))?;
        }
        self.write_bytes(name, buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, bytes)
    }

    /// Write the verdicts and the manifest; returns the manifest path.
    pub fn finish(mut self, verdicts: &[Verdict]) -> Result<PathBuf> {
        let hash = self.config_hash.clone();
        self.write_json(VERDICTS, &VerdictFile { manifest: MANIFEST, config_sha256: &hash, verdicts })?;
        let manifest = Manifest {
            command: self.command.name(),
            code_version: env!("CARGO_PKG_VERSION"),
            config_sha256: &hash,
            config_file: CONFIG_COPY,
            constants: &self.constants,
            files: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}

fn short(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

/// Read a CSV written by [`Artifacts::write_csv`]: header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<csv::Result<_>>()?;
    Ok((header, rows))
}
