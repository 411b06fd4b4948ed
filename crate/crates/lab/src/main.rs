use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinlab::config::parse_mixture;
use spinlab::{Command, LabError, RunConfig};

#[derive(Parser)]
#[command(name = "spinlab", version, about = "Spherical mixed p-spin glass experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bit-reproducible runs.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Mixture as `p:gamma2,...`, e.g. `3:1` or `2:0.5,4:0.5`.
    #[arg(long, global = true)]
    mixture: Option<String>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Number of tasks (realizations, chains or seeds).
    #[arg(long, global = true)]
    seeds: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// xi values, algorithmic energy and full-RSB check.
    MixtureInfo,
    /// Sample realizations and write binary dumps.
    Sample,
    /// Hessian descent from the origin.
    Optimize {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        eig_tol: Option<f64>,
        #[arg(long)]
        emit_path: bool,
    },
    /// Least-squares descent.
    Lsq,
    /// Free-energy curve and minimizing measures.
    Parisi,
    /// Volume exponent table.
    Volume,
    TapScan,
    CriticalPoints,
    Complexity,
    /// Metropolis chains and cross-chain overlaps.
    Gibbs,
    /// Band free energy by thermodynamic integration.
    BandF,
    Multisamp,
}

fn resolve(cli: &Cli) -> Result<(Command, RunConfig), LabError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(m) = &cli.mixture {
        config.mixture = parse_mixture(m)?;
    }
    if let Some(n) = cli.n {
        config.n = n;
    }
    if let Some(b) = cli.beta {
        config.beta = b;
    }
    if let Some(s) = cli.seeds {
        config.seeds = s;
    }
    let command = match &cli.command {
        Cmd::MixtureInfo => Command::MixtureInfo,
        Cmd::Sample => Command::Sample,
        Cmd::Optimize { k, eig_tol, emit_path } => {
            if let Some(k) = k {
                config.optimize.k = *k;
            }
            if let Some(t) = eig_tol {
                config.optimize.eig_tol = *t;
            }
            config.optimize.emit_path |= emit_path;
            Command::Optimize
        }
        Cmd::Lsq => Command::Lsq,
        Cmd::Parisi => Command::Parisi,
        Cmd::Volume => Command::Volume,
        Cmd::TapScan => Command::TapScan,
        Cmd::CriticalPoints => Command::CriticalPoints,
        Cmd::Complexity => Command::Complexity,
        Cmd::Gibbs => Command::Gibbs,
        Cmd::BandF => Command::BandF,
        Cmd::Multisamp => Command::Multisamp,
    };
    Ok((command, config))
}

fn report(err: &LabError, out: &std::path::Path) -> ExitCode {
    let record = err.record();
    let line = serde_json::to_string(&record).unwrap_or_else(|_| format!("{{\"kind\":\"{}\"}}", record.kind));
    eprintln!("{line}");
    if out.is_dir() {
        let _ = std::fs::write(out.join("error.json"), format!("{line}\n"));
    }
    ExitCode::from(record.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&LabError::Schema(e.to_string()), std::path::Path::new("")),
    };
    let result = resolve(&cli).and_then(|(command, config)| spinlab::run(command, &config, cli.threads, &cli.out));
    match result {
        Ok(m) => {
            println!("{}", serde_json::json!({ "command": m.command, "outputs": m.outputs }));
            ExitCode::SUCCESS
        }
        Err(e) => report(&e, &cli.out),
    }
}
