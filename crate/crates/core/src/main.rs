//! Command-line front end: run experiments, render dumps, print oracle
//! energies. Exit codes: 0 success, 2 config error, 3 numerical failure,
//! 4 i/o error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semifluxon::cli_io::{parse_config, pgm, read_dump, run_experiment, RenderMode};
use semifluxon::spectral::{disc_oracle, rectangle_oracle};
use semifluxon::Error;

#[derive(Parser)]
#[command(name = "semifluxon", version, about = "2D flux-line quantum simulator")]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config.
    Run { config: PathBuf },
    /// Render a grid-field dump to an 8-bit PGM heat map.
    Render {
        dump: PathBuf,
        /// magnitude | signed
        mode: String,
        out: PathBuf,
    },
    /// Print closed-form reference energies.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Hard-wall disc modes: j_{|m|,k}^2 / (2R^2).
    Disc {
        radius: f64,
        /// Central semifluxon (restricts to the ground angular family).
        #[arg(long)]
        semifluxon: bool,
        /// Radial index k >= 1.
        #[arg(long, default_value_t = 1)]
        radial: u32,
        /// Angular index m (0 selects the ground family with --semifluxon).
        #[arg(long, default_value_t = 0)]
        angular: i32,
    },
    /// Hard-wall rectangle modes: (π²/2)(n²/D² + m²/d²).
    Rectangle { width: f64, height: f64, n: u32, m: u32 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config } => {
            let mut cfg = parse_config(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let summary = run_experiment(&cfg)?;
            for (k, v) in summary.entries() {
                println!("{k} = {v}");
            }
            Ok(())
        }
        Command::Render { dump, mode, out } => {
            let mode = RenderMode::parse(&mode)?;
            let d = read_dump(&dump)?;
            pgm::render_to_file(&d, mode, &out)?;
            Ok(())
        }
        Command::Oracle { which } => {
            match which {
                OracleCommand::Disc {
                    radius,
                    semifluxon,
                    radial,
                    angular,
                } => {
                    let e = disc_oracle(radius, semifluxon, radial, angular)?;
                    println!("{e:.12}");
                }
                OracleCommand::Rectangle { width, height, n, m } => {
                    println!("{:.12}", rectangle_oracle(width, height, n, m));
                }
            }
            Ok(())
        }
    }
}
