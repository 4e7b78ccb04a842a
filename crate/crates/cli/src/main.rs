//! `fibm` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fibm::config::RunConfig;
use fibm::run::{convergence_dts, convergence_grids, filter_snapshot, run};
use fibm::Error;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "fibm", version, about = "Immersed-boundary Fourier pseudo-spectral solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured case and write diagnostics, snapshots and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Error against the finest grid or smallest time step, with fitted slope.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated grid sizes, e.g. 128,256,512.
        #[arg(long, value_delimiter = ',', conflicts_with = "dts", required_unless_present = "dts")]
        grids: Vec<usize>,
        /// Comma-separated time steps.
        #[arg(long, value_delimiter = ',')]
        dts: Vec<f64>,
        /// CSV output file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Helmholtz-filter a field snapshot.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        calpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cmd: Command) -> fibm::Result<()> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let s = run(&cfg, &out)?;
            println!(
                "{}: {} steps to t = {}, {:.3} ms/step, {} transforms",
                s.status,
                s.steps,
                s.final_time,
                1e3 * s.wall_time_per_step_s,
                s.transforms.total()
            );
        }
        Command::Convergence { config, grids, dts, out } => {
            let cfg = RunConfig::load(&config)?;
            let table = if grids.is_empty() { convergence_dts(&cfg, &dts)? } else { convergence_grids(&cfg, &grids)? };
            let csv = table.to_csv();
            match out {
                Some(p) => {
                    std::fs::write(&p, &csv)?;
                    println!("fitted slope {}", table.slope);
                }
                None => print!("{csv}"),
            }
        }
        Command::Filter { input, calpha, out } => {
            let alpha = filter_snapshot(&input, calpha, &out)?;
            println!("alpha = {alpha}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::InvalidGrid(_)
                | Error::Geometry(_)
                | Error::Window(_) => ExitCode::from(2),
                Error::NonFinite { .. } => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
