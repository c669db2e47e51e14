//! `bmhd`: simulate, verify and analyse bipolar MHD runs.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 usage or
//! configuration error, 3 numerical blow-up.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bmhd", version, about = "Bipolar MHD pseudo-spectral simulator and checkers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured run and store the trajectory.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check energy identities and estimates on a stored trajectory.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Sample operator properties.
    Props {
        #[command(subcommand)]
        check: PropsCommand,
    },
    /// Simulate an ensemble and test it against the absorbing-ball estimate.
    Absorbing {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        ensemble: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Omega-limit diagnostics of a stored trajectory.
    Attractor {
        file: PathBuf,
        config: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        window: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the eigenvalues of the dissipation operator.
    Spectrum {
        config: PathBuf,
        /// Rows per branch.
        #[arg(long, default_value_t = 16)]
        count: usize,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Energy budget along the record.
    Energy {
        file: PathBuf,
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exponential energy inequality over all record pairs.
    Inequality {
        file: PathBuf,
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Uniform a priori bound.
    Apriori {
        file: PathBuf,
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PropsCommand {
    /// Skew-symmetry, monotonicity, constitutive bounds and Korn constants.
    Operators {
        config: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn configure_threads() {
    if let Ok(v) = std::env::var("BMHD_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring BMHD_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Simulate { config, output } => commands::simulate(&config, &output),
        Command::Verify { check } => match check {
            VerifyCommand::Energy { file, config, output } => {
                commands::verify_energy(&file, &config, output.as_deref())
            }
            VerifyCommand::Inequality { file, config, output } => {
                commands::verify_inequality(&file, &config, output.as_deref())
            }
            VerifyCommand::Apriori { file, config, output } => {
                commands::verify_apriori(&file, &config, output.as_deref())
            }
        },
        Command::Props { check } => match check {
            PropsCommand::Operators {
                config,
                samples,
                seed,
                output,
            } => commands::props_operators(&config, samples, seed, output.as_deref()),
        },
        Command::Absorbing {
            config,
            ensemble,
            output,
        } => commands::absorbing(&config, ensemble, &output),
        Command::Attractor {
            file,
            config,
            delta,
            window,
            output,
        } => commands::attractor(&file, &config, delta, window, &output),
        Command::Spectrum { config, count } => commands::spectrum(&config, count),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let blow_up = e
                .downcast_ref::<bmhd_core::Error>()
                .is_some_and(|c| matches!(c, bmhd_core::Error::BlowUp { .. }));
            ExitCode::from(if blow_up { 3 } else { 2 })
        }
    }
}
