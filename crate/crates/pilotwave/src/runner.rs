//! Config resolution and atomic run directories.
//!
//! Artifacts are written to a hidden sibling `.<name>.partial-<pid>` and
//! renamed into place after `manifest.json`, so a run directory either
//! holds a complete run or does not exist.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{nearest, ExperimentConfig, ExperimentKind, EXPERIMENTS};
use crate::error::CliError;
use crate::experiments::{self, Outcome};

/// A parsed config and the stem used for default output directories.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub stem: String,
}

/// Reads `arg` as a config path, or as the name of a shipped config.
pub fn resolve(arg: &str) -> Result<Resolved, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let config = ExperimentConfig::load(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(&config.experiment).to_string();
        return Ok(Resolved { config, stem });
    }
    if let Some(kind) = EXPERIMENTS.iter().find(|k| k.name() == arg) {
        return Ok(Resolved { config: ExperimentConfig::parse(kind.default_config())?, stem: arg.to_string() });
    }
    if arg.ends_with(".toml") || arg.contains(std::path::MAIN_SEPARATOR) {
        let source = std::io::Error::new(std::io::ErrorKind::NotFound, "no such file");
        return Err(CliError::ConfigRead { path: path.to_path_buf(), source });
    }
    Err(CliError::UnknownExperiment {
        name: arg.to_string(),
        suggestion: nearest(arg, EXPERIMENTS.iter().map(|k| k.name())),
    })
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Worker threads; `None` or 0 uses every core.
    pub threads: Option<usize>,
}

/// `--out`, then `output.dir`, then `$PILOTWAVE_OUT/<stem>`, then
/// `runs/<stem>`.
pub fn output_dir(resolved: &Resolved, opts: &RunOptions) -> PathBuf {
    if let Some(d) = &opts.out {
        return d.clone();
    }
    if let Some(d) = &resolved.config.output.dir {
        return d.clone();
    }
    match std::env::var_os("PILOTWAVE_OUT") {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(&resolved.stem),
        _ => PathBuf::from("runs").join(&resolved.stem),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub experiment: String,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub kind: ExperimentKind,
    pub outcome: Outcome,
    pub manifest: Manifest,
}

fn output_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output { path: path.to_path_buf(), source }
}

/// A directory may be replaced when it is empty or holds a previous run.
fn replaceable(dir: &Path) -> Result<bool, CliError> {
    if !dir.exists() {
        return Ok(true);
    }
    if !dir.is_dir() {
        return Ok(false);
    }
    if dir.join("manifest.json").is_file() {
        return Ok(true);
    }
    Ok(fs::read_dir(dir).map_err(output_err(dir))?.next().is_none())
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

pub fn run(resolved: &Resolved, opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = &resolved.config;
    let kind = cfg.kind()?;
    let dir = output_dir(resolved, opts);
    if !replaceable(&dir)? {
        let source = std::io::Error::new(std::io::ErrorKind::AlreadyExists, "exists and is not a pilotwave run directory");
        return Err(CliError::Output { path: dir, source });
    }
    let start = Instant::now();
    let outcome = in_pool(opts.threads, || experiments::execute(cfg))??;
    let wall = start.elapsed().as_secs_f64();

    let files = outcome
        .artifacts
        .files
        .iter()
        .map(|a| FileEntry { path: a.path.clone(), bytes: a.bytes.len() as u64, sha256: format!("{:x}", Sha256::digest(&a.bytes)) })
        .collect();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        experiment: kind.name().into(),
        config_hash: cfg.hash(),
        wall_time_s: wall,
        files,
    };

    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(output_err(&parent))?;
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("run");
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    let result = write_staged(&staging, &outcome, &manifest).and_then(|()| {
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(output_err(&dir))?;
        }
        fs::rename(&staging, &dir).map_err(output_err(&dir))
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result?;
    Ok(RunReport { dir, kind, outcome, manifest })
}

fn write_staged(staging: &Path, outcome: &Outcome, manifest: &Manifest) -> Result<(), CliError> {
    if staging.exists() {
        fs::remove_dir_all(staging).map_err(output_err(staging))?;
    }
    fs::create_dir_all(staging).map_err(output_err(staging))?;
    for a in &outcome.artifacts.files {
        let path = staging.join(&a.path);
        if let Some(p) = path.parent() {
            fs::create_dir_all(p).map_err(output_err(p))?;
        }
        fs::write(&path, &a.bytes).map_err(output_err(&path))?;
    }
    let mut bytes = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    bytes.push(b'\n');
    let path = staging.join("manifest.json");
    fs::write(&path, bytes).map_err(output_err(&path))
}

/// Validates without running: the warnings of the experiment's checks.
pub fn validate(resolved: &Resolved) -> Result<Vec<String>, CliError> {
    experiments::check(&resolved.config)
}
