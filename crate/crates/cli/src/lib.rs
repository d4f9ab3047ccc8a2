//! Scenario runner behind the `synclab` binary: parses scenario files,
//! dispatches to the simulation layers and writes CSV/JSON artifacts with a
//! manifest.

pub mod compare;
mod run;
pub mod scenario;

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use synclab_core::io::Csv;
use thiserror::Error;

pub use run::execute;
pub use scenario::{schema, Scenario};

pub const TOOL: &str = "synclab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("scenario error: {0}")]
    Schema(String),
    #[error("simulation error: {0}")]
    Simulation(#[from] synclab_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("incomparable artifacts: {0}")]
    Incomparable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) | CliError::Incomparable(_) => 2,
            CliError::Simulation(_) | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub name: String,
    pub seed: u64,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Value,
    pub scenario: serde_json::Value,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Incomparable(format!("{}: {e}", path.display())))
    }
}

/// Artifact sink for one run directory.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Outputs {
    /// Creates `dir`, removing artifacts listed by a previous manifest there.
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let old = dir.join(MANIFEST);
        if let Ok(prev) = Manifest::load(&old) {
            for f in prev.files {
                let _ = fs::remove_file(dir.join(f.path));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn csv(&mut self, name: &str, csv: &Csv) -> Result<(), CliError> {
        self.write(name, csv.as_str())?;
        let mut lines = csv.as_str().lines();
        let columns = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
        self.files.push(FileEntry {
            path: name.to_string(),
            format: "csv".into(),
            rows: Some(lines.count()),
            columns: Some(columns),
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(name, &text)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            format: "json".into(),
            rows: None,
            columns: None,
        });
        Ok(())
    }

    /// Writes the manifest; it lists itself last.
    pub fn finish(mut self, scenario: &Scenario, name: &str, outcome: &Result<serde_json::Value, CliError>) -> Result<Manifest, CliError> {
        self.files.push(FileEntry {
            path: MANIFEST.into(),
            format: "json".into(),
            rows: None,
            columns: None,
        });
        let manifest = Manifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            kind: scenario.kind().into(),
            name: name.into(),
            seed: scenario.seed(),
            failed: outcome.is_err(),
            error: outcome.as_ref().err().map(|e| e.to_string()),
            files: self.files,
            summary: outcome.as_ref().ok().cloned().unwrap_or(serde_json::Value::Null),
            scenario: serde_json::to_value(scenario).expect("scenario serializes"),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Reads, validates and runs one scenario file into `dir`. `seed`
/// overrides the scenario's seed.
pub fn run_file(path: &Path, dir: Option<&Path>, root: Option<&Path>, seed: Option<u64>) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut scenario = Scenario::from_json(&text)?;
    if let Some(s) = seed {
        scenario.set_seed(s);
    }
    let name = scenario
        .name()
        .map(str::to_string)
        .unwrap_or_else(|| path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned()));
    let dir = match dir {
        Some(d) => d.to_path_buf(),
        None => root.map_or_else(|| PathBuf::from("synclab-out"), Path::to_path_buf).join(&name),
    };
    run_scenario(&scenario, &name, &dir)
}

/// Runs a parsed scenario. Failures still write a manifest with
/// `failed = true`, then surface as the error.
pub fn run_scenario(scenario: &Scenario, name: &str, dir: &Path) -> Result<Manifest, CliError> {
    let mut out = Outputs::create(dir)?;
    let outcome = execute(scenario, &mut out);
    let manifest = out.finish(scenario, name, &outcome)?;
    outcome.map(|_| manifest)
}
