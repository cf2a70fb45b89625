use crate::error::RunError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// One output file, held in memory until the study has finished.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, contents: String) -> Self {
        Artifact { name: name.into(), contents }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut contents = serde_json::to_string_pretty(value).expect("study metadata serializes");
        contents.push('\n');
        Artifact { name: name.into(), contents }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub study: String,
    pub config_path: String,
    pub config_sha256: String,
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub versions: Versions,
    pub started_unix_s: u64,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

#[derive(Serialize)]
pub struct Versions {
    pub cli: &'static str,
    pub core: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { cli: env!("CARGO_PKG_VERSION"), core: magnon_ghz::VERSION }
    }
}

pub fn file_entries(artifacts: &[Artifact]) -> Vec<FileEntry> {
    artifacts
        .iter()
        .map(|a| FileEntry { name: a.name.clone(), bytes: a.contents.len(), sha256: sha256_hex(a.contents.as_bytes()) })
        .collect()
}

/// Writes through a temporary file in `dir` and renames it into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    let io = |source| RunError::Output { path: path.clone(), source };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Output { path: dir.to_path_buf(), source })?;
    for a in artifacts {
        write_atomic(dir, &a.name, &a.contents)?;
    }
    Ok(())
}
