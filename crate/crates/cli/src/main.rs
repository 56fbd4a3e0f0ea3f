use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlspec_cli::{execute, render_summary, write_outputs, CliError, Command, LoadedConfig, Options};

#[derive(Parser)]
#[command(name = "nlspec", version, about = "Discrete spectrum of convolution operators with potentials")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectral intervals and the dense-oracle eigenvalues.
    Spectrum(RunArgs),
    /// All configured criteria, cross-validated against Rayleigh-Ritz and the oracle.
    Check(RunArgs),
    /// Counting criteria and oracle counts across resolutions.
    Count(RunArgs),
    /// Time evolution and its growth rate.
    Evolve(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or a JSON report whose config_echo is re-run.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report and CSV files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Analyse potentials that do not vanish at infinity.
    #[arg(long)]
    force_offset: bool,
    /// Seed for the randomized self-checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(command: Command, args: RunArgs) -> Result<String, CliError> {
    let loaded = LoadedConfig::from_path(&args.config)?;
    let opts = Options { force_offset: args.force_offset, seed: args.seed };
    let output = execute(command, &loaded, &opts)?;
    write_outputs(&args.out, &output)?;
    Ok(render_summary(&output.report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Count(a) => (Command::Count, a),
        Cmd::Evolve(a) => (Command::Evolve, a),
    };
    match run(command, args) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("nlspec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
