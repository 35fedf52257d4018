use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qcontrol::plotdata::{default_output, emit_plotdata};
use qcontrol::{parse_config, run_experiment, HarnessError, RunOptions};

#[derive(Parser)]
#[command(name = "qcontrol", version, about = "Policy and pulse optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Prefix for relative output directories.
        #[arg(long, env = "QCONTROL_OUTPUT_ROOT")]
        output_root: Option<PathBuf>,
        /// Worker threads (0 = one per core); overrides the config.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a config file without running it.
    Validate { config: PathBuf },
    /// Convert a ledger or robustness CSV into plot-ready columns.
    Plotdata {
        artifact: PathBuf,
        /// Defaults to `<stem>.plot.csv` next to the artifact.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, output_root, threads } => {
            let cfg = parse_config(&config)?;
            let report = run_experiment(&cfg, &RunOptions { output_root, threads })?;
            println!("{} finished in {:.1}s", cfg.experiment.name(), report.manifest.wall_seconds);
            println!("artifacts in {}", report.output_dir.display());
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            println!("{}: valid {} config", config.display(), cfg.experiment.name());
        }
        Command::Plotdata { artifact, output } => {
            let output = output.unwrap_or_else(|| default_output(&artifact));
            emit_plotdata(&artifact, &output)?;
            println!("{}", output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
