//! Reproducible runs over `spinlab-core`: configuration, per-task seeds,
//! realization dumps and structured outputs.

pub mod commands;
pub mod config;
pub mod dump;
pub mod error;
pub mod output;
pub mod seeds;

use std::path::Path;

pub use commands::Command;
pub use config::RunConfig;
pub use error::{LabError, Result};
pub use output::Manifest;

/// Runs `command` writing outputs and `manifest.json` under `out`.
pub fn run(command: Command, config: &RunConfig, threads: usize, out: &Path) -> Result<Manifest> {
    config.validate()?;
    if threads == 0 {
        return Err(LabError::Schema("threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Schema(e.to_string()))?;
    let mut dir = output::OutDir::create(out)?;
    let mut ctx = commands::Context {
        config,
        command,
        out: &mut dir,
        pool: &pool,
    };
    commands::dispatch(&mut ctx)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        master_seed: config.seed,
        threads,
        config: config.clone(),
        outputs: dir.written().to_vec(),
        notes: Vec::new(),
    };
    dir.json("manifest.json", &manifest)?;
    Ok(manifest)
}
