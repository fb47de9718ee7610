use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use filmsolve_core::config::{load_config, RunConfig};
use filmsolve_core::output::fmt_f64;
use filmsolve_core::runner::{self, RunSummary};
use filmsolve_core::{diagnostics, Grid, Variant};

/// Falling-film simulator with soluble surfactant.
#[derive(Debug, Parser)]
#[command(name = "filmsolve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one configuration and write series, snapshots and metadata.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `variant` key of the config file.
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// Overrides the `output_dir` key of the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both closures from the same initial state and join their outputs.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print linear growth rates of modes 1..=MODES as CSV on stdout.
    Dispersion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        modes: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Legacy,
    Corrected,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Legacy => Variant::Legacy,
            VariantArg::Corrected => Variant::Corrected,
        }
    }
}

const THREADS_VAR: &str = "FILMSOLVE_THREADS";

/// Sizes the global pool from `FILMSOLVE_THREADS`, else from `default`.
fn configure_threads(default: Option<usize>) -> Result<(), String> {
    let requested = match std::env::var(THREADS_VAR) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => return Err(format!("{THREADS_VAR}={raw:?}: expected a positive integer")),
        },
        Err(_) => default,
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = requested {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = requested;
    Ok(())
}

fn report(summary: &RunSummary) {
    eprintln!(
        "{}: {} at t = {} after {} accepted / {} rejected steps ({:.1} s), max |rel_drift| = {:.3e}",
        summary.variant,
        summary.status.as_str(),
        summary.t_final,
        summary.accepted,
        summary.rejected,
        summary.wall_time.as_secs_f64(),
        summary.max_abs_rel_drift,
    );
}

fn load(path: &PathBuf) -> Result<RunConfig, String> {
    load_config(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn execute(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Run { config, variant, out } => {
            configure_threads(Some(1))?;
            let mut cfg = load(&config)?;
            if let Some(v) = variant {
                cfg.variant = v.into();
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let summary = runner::run(&cfg).map_err(|e| e.to_string())?;
            report(&summary);
            Ok(summary.status.exit_code())
        }
        Command::Compare { config, out } => {
            configure_threads(Some(2))?;
            let cfg = load(&config)?;
            let summary = runner::compare_variants(&cfg, &out).map_err(|e| e.to_string())?;
            report(&summary.legacy);
            report(&summary.corrected);
            eprintln!("max growth-rate difference: {:.3e}", summary.max_growth_diff);
            Ok(summary.status().exit_code())
        }
        Command::Dispersion { config, modes } => {
            configure_threads(None)?;
            let cfg = load(&config)?;
            if modes == 0 || modes >= cfg.n / 2 {
                return Err(format!("--modes {modes} outside [1, {}]", cfg.n / 2 - 1));
            }
            let grid = Grid::new(cfg.n, cfg.params.domain_length).map_err(|e| e.to_string())?;
            let rates = diagnostics::dispersion(&cfg.params, cfg.variant, &grid, modes).map_err(|e| e.to_string())?;
            println!("mode,k,growth_rate,phase_rate");
            for r in rates {
                println!("{},{},{},{}", r.mode, fmt_f64(r.k), fmt_f64(r.eigenvalue.re), fmt_f64(r.eigenvalue.im));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
