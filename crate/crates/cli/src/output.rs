//! Result files. Everything is written to a temporary file in the target
//! directory and renamed into place, so readers never see partial files.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use tempfile::NamedTempFile;

/// Version of the file layout and CSV headers.
pub const SCHEMA_VERSION: u32 = 1;

pub const COMBINED_CSV_HEADER: &str = "lethality,planner,trial,deployment,h_z,h_x,h_total";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub command: &'static str,
    /// Seconds since the Unix epoch. The only field that varies between
    /// otherwise identical runs.
    pub created_unix: u64,
    pub config: &'a C,
    pub seeds: Vec<SeedRecord>,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SeedRecord {
    pub scenario: String,
    pub master_seed: u64,
    pub trial_seeds: Vec<u64>,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(command: &'static str, config: &'a C) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            command,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            config,
            seeds: Vec::new(),
            files: Vec::new(),
        }
    }
}
