//! CSV emission and per-command result directories with a hash manifest.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Shortest round-tripping form; exponent notation outside [1e-4, 1e6).
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// CSV text with a `# key = value` metadata block above the column header.
pub fn csv<I>(meta: &[(&str, String)], columns: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = String::new();
    for (k, v) in meta {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    writeln!(out, "{}", columns.join(",")).unwrap();
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

/// Reads one named column of a CSV written by [`csv`].
pub fn read_column(text: &str, column: &str) -> Result<Vec<f64>, CliError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty CSV input".into()))?;
    let idx = header
        .split(',')
        .position(|c| c.trim() == column)
        .ok_or_else(|| CliError::Config(format!("CSV input has no `{column}` column")))?;
    lines
        .enumerate()
        .map(|(row, line)| {
            line.split(',')
                .nth(idx)
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("bad `{column}` value on data row {}", row + 1)))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub command: String,
    pub version: String,
    pub rng_algorithm: String,
    /// Effective configuration, as TOML.
    pub config: String,
    pub files: Vec<FileEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one command run under `dir`.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    /// Creates `dir`, removing whatever an earlier manifest there listed.
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let old = dir.join(MANIFEST_NAME);
        if old.exists() {
            if let Ok(m) = serde_json::from_str::<ResultManifest>(&fs::read_to_string(&old)?) {
                for f in m.files {
                    let p = dir.join(&f.path);
                    if p.is_file() {
                        fs::remove_file(p)?;
                    }
                }
            }
            fs::remove_file(old)?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn finish(self, command: &str, config: String) -> Result<ResultManifest, CliError> {
        let manifest = ResultManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng_algorithm: kicked_kerr::classical::RNG_ALGORITHM.to_string(),
            config,
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(manifest)
    }
}

/// Checks that `dir` holds exactly the manifest's files with matching hashes.
pub fn verify_manifest(dir: &Path) -> Result<ResultManifest, CliError> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let manifest: ResultManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    for f in &manifest.files {
        let bytes = fs::read(dir.join(&f.path))?;
        if sha256_hex(&bytes) != f.sha256 {
            return Err(CliError::Verify(format!("hash mismatch for {}", f.path)));
        }
    }
    let listed: BTreeSet<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST_NAME && !listed.contains(name.as_str()) {
            return Err(CliError::Verify(format!("unlisted file {name}")));
        }
    }
    Ok(manifest)
}
