use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sysrisk::{load_instance, report, Error, Instance, Report};

/// Systemic risk measures on finite scenario spaces.
#[derive(Parser)]
#[command(name = "sysrisk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Primal and dual values, certificates, and diagnostics.
    Solve(Common),
    /// `solve` plus property checks; exits with 1 if any fails.
    Verify(Common),
    /// `solve` plus brute-force grid references.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Grid points per dimension.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
}

#[derive(Args)]
struct Common {
    instance: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock seconds per stage.
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn load(&self) -> sysrisk::Result<Instance> {
        let mut instance = load_instance(&self.instance)?;
        if let Some(tol) = self.tol {
            instance.solver.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            instance.solver.max_iter = max_iter;
        }
        if let Some(seed) = self.seed {
            instance.solver.seed = seed;
        }
        let mut file = instance.to_file();
        file.solver = instance.solver.clone();
        Instance::from_file(file)
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::LinearProgram(_) | Error::Indeterminate { .. } => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(Report, Option<PathBuf>), Error> {
    let (common, report) = match &cli.command {
        Command::Solve(c) => (c, report::solve(&c.load()?, c.timings)?),
        Command::Verify(c) => (c, report::verify(&c.load()?, c.timings)?),
        Command::Oracle { common, grid } => {
            if *grid < 3 {
                return Err(Error::Validation {
                    invariant: "at least 3 grid points",
                    detail: format!("--grid {grid}"),
                });
            }
            (
                common,
                report::oracle(&common.load()?, *grid, common.timings)?,
            )
        }
    };
    Ok((report, common.out.clone()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYSRISK_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, out)) => {
            let json = report.to_json();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, json + "\n") {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => {
                    // a closed pipe downstream is not our failure
                    let _ = writeln!(std::io::stdout().lock(), "{json}");
                }
            }
            let code = report.exit_code();
            log::info!("finished with exit code {code}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
