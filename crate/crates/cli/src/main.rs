use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modal_steer_cli::commands::{self, Context, DEFAULT_SEED};
use modal_steer_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "modal-steer", version, about = "Minimum-energy steering of truncated flexible-structure models")]
struct Cli {
    /// Experiment configuration (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Primary output file; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and quadrature
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Accept kappa >= min omega
    #[arg(long, global = true)]
    allow_overdamped: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partial sums of the frequency-gap series
    GapCheck {
        /// Comma-separated K values
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
    },
    /// Synthesize and store the minimum-energy law of order n
    Synthesize,
    /// Sample the trajectory under a stored law
    Simulate {
        #[arg(long)]
        law: PathBuf,
    },
    /// Residual sweep over n_range
    Converge {
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// System summary and seeded self-check
    Info,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = ExperimentConfig::load(&path)?;
    let ctx = Context {
        out: cli.out,
        allow_overdamped: cli.allow_overdamped,
        seed: cli.seed,
    };
    match cli.command {
        Command::GapCheck { checkpoints } => {
            let g = commands::gap_check(&cfg, &checkpoints, &ctx)?;
            print!("{}", g.table);
            if let Some(w) = g.warning() {
                eprintln!("{w}");
            }
        }
        Command::Synthesize => {
            let s = commands::synthesize_cmd(&cfg, &ctx)?;
            if let Some(json) = s.stdout {
                print!("{json}");
            }
            eprint!("{}", s.summary);
        }
        Command::Simulate { law } => {
            if let Some(csv) = commands::simulate_cmd(&cfg, &law, &ctx)?.stdout {
                print!("{csv}");
            }
        }
        Command::Converge { plot_data, svg } => {
            let c = commands::converge_cmd(&cfg, plot_data.as_deref(), svg.as_deref(), &ctx)?;
            if let Some(csv) = c.stdout {
                print!("{csv}");
            }
        }
        Command::Info => print!("{}", commands::info_cmd(&cfg, &ctx)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
