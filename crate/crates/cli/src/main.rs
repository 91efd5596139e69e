use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cosine_switch_cli::commands::{self, Options, Output, Verb};
use cosine_switch_cli::CliError;

/// Simulate, sweep, fit and design a flux-tunable coupled-line switch.
#[derive(Parser)]
#[command(name = "cosine-switch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and fits.
    #[arg(long, env = "COSINE_SWITCH_THREADS")]
    threads: Option<usize>,
    /// Reference impedance override, ohm.
    #[arg(long)]
    z0: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Touchstone four-port file over the frequency grid at one flux.
    Simulate(Common),
    /// Frequency by flux transmission map as CSV.
    Sweep(Common),
    /// Fit the coupling inductance to measured |S21|, |S31|.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Measured CSV; overrides fit.data.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Synthesize a device for a target frequency and impedance.
    Design(Common),
    /// Operating points from a sweep CSV.
    Points {
        #[command(flatten)]
        common: Common,
        /// Sweep CSV; overrides points.input.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (verb, common, input) = match cli.command {
        Command::Simulate(c) => (Verb::Simulate, c, None),
        Command::Sweep(c) => (Verb::Sweep, c, None),
        Command::Fit { common, input } => (Verb::Fit, common, input),
        Command::Design(c) => (Verb::Design, c, None),
        Command::Points { common, input } => (Verb::Points, common, input),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config {
                key: "--threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (config, base_dir) = commands::load_config(&common.config)?;
    let options = Options {
        z0: common.z0,
        input,
        base_dir,
    };
    let Output { primary, summary, files } = commands::run(verb, &config, &options)?;
    for (path, text) in &files {
        write(path, text)?;
    }
    match &common.out {
        Some(path) => {
            write(path, &primary)?;
            if let Some(s) = summary {
                print!("{s}");
            }
        }
        None => {
            print!("{primary}");
            if let Some(s) = summary {
                eprint!("{s}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
