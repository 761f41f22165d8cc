//! Command-line front end: bounds on supplied joints, mechanism construction,
//! oracle runs and the handwritten-digit experiment.

pub mod commands;
pub mod error;
pub mod plot;
pub mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{
    BoundsArgs, ExperimentArgs, Format, MechanismArgs, OracleArgs, DEFAULT_EXPERIMENT_SWEEP,
};
pub use error::{CliError, CliResult, ExitStatus};

#[derive(Debug, Parser)]
#[command(
    name = "semcom",
    version,
    about = "Privacy-utility bounds for private semantic communication"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form bounds on a joint over (S, F) or (S, F, H).
    Bounds {
        #[arg(long)]
        joint: PathBuf,
        #[arg(
            long,
            conflicts_with = "sweep",
            required_unless_present = "sweep",
            allow_negative_numbers = true
        )]
        epsilon: Option<f64>,
        /// Inclusive grid `start:step:end`.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Semantic constraints `γ1,γ2,γ3` for the semantic-agnostic bound.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        constraints: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized-response mechanism with leakage exactly `ε`.
    Mechanism {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-start search for the trade-off value, with a bound check.
    Oracle {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        /// Output alphabet size; defaults to |S|·|F| + 1.
        #[arg(long)]
        u_size: Option<usize>,
        #[arg(long, default_value_t = OracleArgs::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the best channel as JSON.
        #[arg(long)]
        dump_channel: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Digit experiment: bound sweep on the MNIST training split.
    Experiment {
        #[arg(long, env = "MNIST_DIR", default_value = "data/mnist")]
        mnist_dir: PathBuf,
        /// Pixels at or above this intensity count as white.
        #[arg(long, default_value_t = semcom::dataset::DEFAULT_THRESHOLD)]
        threshold: u8,
        #[arg(long, default_value = DEFAULT_EXPERIMENT_SWEEP)]
        sweep: String,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// SVG plot of the three utility curves.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Also write the (S, Z, H) joint as JSON.
        #[arg(long)]
        export_joint: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bounds {
            joint,
            epsilon,
            sweep,
            format,
            constraints,
            out,
        } => {
            let constraints = match constraints.as_deref() {
                None => None,
                Some(&[g1, g2, g3]) => Some((g1, g2, g3)),
                Some(_) => return Err(CliError::usage("--constraints takes exactly three values")),
            };
            commands::cmd_bounds(&BoundsArgs {
                joint,
                epsilon,
                sweep,
                format,
                constraints,
                out,
            })
        }
        Command::Mechanism {
            joint,
            epsilon,
            out,
        } => commands::cmd_mechanism(&MechanismArgs {
            joint,
            epsilon,
            out,
        }),
        Command::Oracle {
            joint,
            epsilon,
            u_size,
            restarts,
            seed,
            dump_channel,
            out,
        } => commands::cmd_oracle(&OracleArgs {
            joint,
            epsilon,
            u_size,
            restarts,
            seed,
            dump_channel,
            out,
        }),
        Command::Experiment {
            mnist_dir,
            threshold,
            sweep,
            out,
            plot,
            export_joint,
        } => commands::cmd_experiment(&ExperimentArgs {
            mnist_dir,
            threshold,
            sweep,
            out,
            plot,
            export_joint,
        }),
    }
}
