//! Experiment driver for `ua-core`: configuration, subcommands and
//! reproducible CSV/JSON outputs. The binary `ua` is a thin wrapper.

pub mod commands;
pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use config::{ConfigError, ExperimentConfig};
use output::{outputs_hash, OutputDir, RunManifest};

pub const FINITE_VOLUME_NOTE: &str =
    "Finite periodic lattice: every spectrum is pure point, so the \
     spectral diagnostics are identity checks and scaling indicators, not proofs of localization.";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] ua_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BuildCheck,
    Identities,
    Moments,
    Constants,
    Decoupling,
    Spectrum,
    Localization,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::BuildCheck => "build-check",
            Self::Identities => "identities",
            Self::Moments => "moments",
            Self::Constants => "constants",
            Self::Decoupling => "decoupling",
            Self::Spectrum => "spectrum",
            Self::Localization => "localization",
        };
        f.write_str(name)
    }
}

/// Shared state of one subcommand run.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub params: ua_core::params::ModelParams,
    pub out: OutputDir,
    pub violations: Vec<String>,
    pub failures: BTreeMap<String, usize>,
    pub labels: Vec<String>,
}

impl Context {
    pub fn violation(&mut self, message: String) {
        log::error!("contract violated: {message}");
        self.violations.push(message);
    }

    pub fn uses_stream(&mut self, label: &str) {
        if !self.labels.iter().any(|l| l == label) {
            self.labels.push(label.to_string());
        }
    }

    pub fn opts(&self) -> ua_core::moments::McOptions {
        ua_core::moments::McOptions {
            n_samples: self.cfg.n_samples,
            seed: self.cfg.seed,
            workers: self.cfg.workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn ok(&self) -> bool {
        self.manifest.violations.is_empty()
    }
}

/// Validates `cfg`, runs `command`, writes outputs and `manifest.json`.
pub fn run(command: Command, cfg: ExperimentConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let params = cfg.params()?;
    let out = OutputDir::create(&cfg.output_dir)?;
    let mut ctx = Context {
        cfg,
        params,
        out,
        violations: Vec::new(),
        failures: BTreeMap::new(),
        labels: Vec::new(),
    };
    log::info!(
        "{command} on {} with seed {}",
        ctx.params.lattice(),
        ctx.cfg.seed
    );
    match command {
        Command::BuildCheck => commands::build_check(&mut ctx)?,
        Command::Identities => commands::identities(&mut ctx)?,
        Command::Moments => commands::moments(&mut ctx)?,
        Command::Constants => commands::constants(&mut ctx)?,
        Command::Decoupling => commands::decoupling(&mut ctx)?,
        Command::Spectrum => commands::spectrum(&mut ctx)?,
        Command::Localization => commands::localization(&mut ctx)?,
    }
    let outputs = ctx.out.files().clone();
    let manifest = RunManifest {
        tool: "ua".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        command: command.to_string(),
        config_hash: ctx.cfg.hash(),
        master_seed: ctx.cfg.seed,
        workers: ctx.cfg.workers,
        task_seeds: ctx
            .labels
            .iter()
            .map(|l| (l.clone(), ua_core::seed::derive_seed(ctx.cfg.seed, l, 0)))
            .collect(),
        failures: ctx.failures.clone(),
        violations: ctx.violations.clone(),
        outputs_hash: outputs_hash(&outputs),
        outputs,
        note: FINITE_VOLUME_NOTE.into(),
    };
    let path = ctx.out.root().join("manifest.json");
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(CliError::Json)?;
    text.push(b'\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(RunOutcome {
        out_dir: ctx.out.root().to_path_buf(),
        manifest,
    })
}
