use clap::{Parser, Subcommand};
use slp::cli_io::{self, CliError, Fixed};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectra of self-adjoint discrete Sturm-Liouville problems.
///
/// Tolerances can be overridden with SLP_TOL_OVERRIDES, a JSON object such
/// as {"trim": 1e-12}. Exit codes: 0 ok, 1 verification failed, 2 invalid
/// input, 3 I/O or parse error.
#[derive(Parser)]
#[command(name = "slp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, count and leading coefficient of one problem
    Spectrum {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Singular-set membership on the equation side, condition side and product
    Classify {
        #[arg(short, long)]
        input: PathBuf,
        /// hold the equation (`eq`) or the boundary condition (`bc`) fixed
        #[arg(long, value_parser = ["eq", "bc"])]
        fixed: Option<String>,
    },
    /// Trace eigenvalue curves along a one-parameter family
    Sweep {
        #[arg(short, long)]
        family: PathBuf,
        #[arg(short = 'n', long, default_value_t = 512)]
        grid: usize,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Compare the engine with a closed-form example on 256 points
    VerifyExample {
        #[arg(long)]
        name: String,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let tol = cli_io::tolerances_from_env()?;
    match cli.command {
        Command::Spectrum { input, output } => cli_io::cmd_spectrum(&input, output.as_deref(), &tol),
        Command::Classify { input, fixed } => {
            cli_io::cmd_classify(&input, fixed.as_deref().and_then(Fixed::parse), &tol)
        }
        Command::Sweep { family, grid, output, events } => {
            cli_io::cmd_sweep(&family, grid, &output, events.as_deref(), &tol)
        }
        Command::VerifyExample { name } => cli_io::cmd_verify_example(&name, &tol),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        // a closed pipe on stdout is not an error worth a panic
        Ok(text) => {
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(CliError::VerificationFailed(report)) => {
            let _ = writeln!(std::io::stdout(), "{report}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
