//! Layered settings: command-line flags, then the JSON config file, then
//! `MERMINLAB_SEED`, then built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use merminlab::device::{load_topology, CouplingGraph};
use merminlab::experiment::{ChainSelection, Mode};
use merminlab::fixtures::rochester;
use merminlab::noise::NoiseSpec;
use serde::Deserialize;

use crate::CliResult;

pub const SEED_ENV: &str = "MERMINLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum NoiseSource {
    File(PathBuf),
    Inline(NoiseSpec),
}

/// Contents of `--config`. Every global flag has a key of the same name;
/// subcommand options may be given here too.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub repeats: Option<usize>,
    pub noise: Option<NoiseSource>,
    pub topology: Option<PathBuf>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub n: Option<usize>,
    pub phi: Option<f64>,
    pub chains: Option<ChainSelection>,
    pub mode: Option<Mode>,
    pub trajectories: Option<usize>,
    pub points: Option<usize>,
    pub reference: Option<String>,
    pub circles: Option<Vec<f64>>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: FileConfig = serde_json::from_str(&text)
            .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        // Relative paths inside the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(NoiseSource::File(p)) = &mut cfg.noise {
            *p = base.join(&*p);
        }
        if let Some(p) = &mut cfg.topology {
            *p = base.join(&*p);
        }
        if let Some(p) = &mut cfg.output {
            *p = base.join(&*p);
        }
        if let Some(r) = &mut cfg.reference {
            if r != "builtin" {
                *r = base.join(&*r).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }
}

pub fn seed_from_env() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().map_err(|_| {
            format!("{SEED_ENV} must be an unsigned integer, got {v:?}")
        })?)),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{SEED_ENV}: {e}").into()),
    }
}

pub fn read_noise(source: &NoiseSource) -> CliResult<NoiseSpec> {
    let spec = match source {
        NoiseSource::Inline(spec) => *spec,
        NoiseSource::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read noise file {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("invalid noise file {}: {e}", path.display()))?
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub fn read_topology(path: Option<&Path>) -> CliResult<CouplingGraph> {
    match path {
        None => Ok(rochester()),
        Some(p) => {
            let file = fs::File::open(p)
                .map_err(|e| format!("cannot open topology {}: {e}", p.display()))?;
            Ok(load_topology(file)?)
        }
    }
}
