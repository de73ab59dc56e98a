use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phasefield::config::{load_config, RunConfig};
use phasefield::run::{execute, resolve_out_dir, write_error, Command};
use phasefield::{Error, Exec};

/// Spectral Galerkin solver for a phase field system with type III heat conduction.
#[derive(Parser, Debug)]
#[command(name = "phasefield", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the configuration and the environment.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and sample suites; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Integrate one trajectory and write a snapshot plus monitors.
    Solve,
    /// Sweep β towards 0 and fit the convergence rate.
    SweepBeta,
    /// Sweep the Yosida parameter ε and check uniform bounds.
    SweepEps,
    /// Measure convergence order against a manufactured solution.
    Mms,
    /// Run the invariant suite.
    Check,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::SweepBeta => Command::SweepBeta,
            Cmd::SweepEps => Command::SweepEps,
            Cmd::Mms => Command::Mms,
            Cmd::Check => Command::Check,
        }
    }
}

fn executor(threads: Option<usize>) -> Result<Exec, Error> {
    match threads {
        Some(0) => Err(Error::InvalidParameter("--threads must be >= 1".into())),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidParameter(format!("cannot start thread pool: {e}")))?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            eprintln!("warning: built without the parallel feature, running sequentially");
            Ok(Exec::Sequential)
        }
        None => Ok(Exec::default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let config = match &cli.config {
        Some(path) => load_config(path),
        None => Ok(RunConfig::default()),
    };
    let fallback = RunConfig::default();
    let out_dir = resolve_out_dir(cli.out.as_deref(), config.as_ref().unwrap_or(&fallback));

    let result = config.and_then(|cfg| {
        let exec = executor(cli.threads)?;
        execute(command, &cfg, &out_dir, exec)
    });
    match result {
        Ok(summary) => {
            for g in &summary.gates {
                println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
            }
            println!("{command}: wrote {} artifacts to {}", summary.artifacts.len(), out_dir.display());
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            if let Err(w) = write_error(&out_dir, command, &e) {
                eprintln!("could not write error report: {w}");
            }
            ExitCode::from(2)
        }
    }
}
