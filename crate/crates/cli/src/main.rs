use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use satburgers_cli::commands::{converge, selfsim, solve, verify, wave, Options};
use satburgers_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(
    name = "satburgers",
    version,
    about = "Viscous conservation laws with saturating diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (`section.key = value` lines or a meta.json).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "off")]
    svg: Toggle,
}

#[derive(Subcommand)]
enum Command {
    /// Run the viscous solver and write snapshots.
    Solve(Common),
    /// Tabulate a traveling-wave profile.
    Wave(Common),
    /// Step run for a zero-flux model and fit of the similarity exponent.
    Selfsim(Common),
    /// Resolution and viscosity sweeps against the wave oracle.
    Converge(Common),
    /// Check a run directory; exit 1 when a check fails.
    Verify {
        /// Run directory to check; defaults to --out.
        #[arg(long)]
        run: Option<PathBuf>,
        /// Optional overrides for the verify.* keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "off")]
        svg: Toggle,
    },
}

fn options(c: &Common) -> Options {
    Options {
        config: c.config.clone(),
        out: c.out.clone(),
        svg: matches!(c.svg, Toggle::On),
        run: None,
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve(c) => solve::run(&RunConfig::load(&c.config)?, &options(&c)),
        Command::Wave(c) => wave::run(&RunConfig::load(&c.config)?, &options(&c)),
        Command::Selfsim(c) => selfsim::run(&RunConfig::load(&c.config)?, &options(&c)),
        Command::Converge(c) => converge::run(&RunConfig::load(&c.config)?, &options(&c)),
        Command::Verify { run, config, out, svg } => {
            let overlay = config.as_deref().map(RunConfig::load).transpose()?;
            let opts = Options {
                config: config.unwrap_or_default(),
                out,
                svg: matches!(svg, Toggle::On),
                run,
            };
            verify::run(overlay.as_ref(), &opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("satburgers: {e}");
            if let CliError::Io { source, .. } = &e {
                eprintln!("  cause: {source}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
