use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use escher::commands::{cmd_eoc, cmd_run, format_eoc_table, load_config, mesh_info, EocOptions};
use escher::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Cahn-Hilliard on evolving surfaces.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write diagnostics.csv and VTK snapshots.
    Run { config: PathBuf },
    /// Convergence study over a refinement hierarchy; writes eoc_u.csv and eoc_w.csv.
    Eoc {
        config: PathBuf,
        /// Number of study levels.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Use the IMEX scheme regardless of the configuration.
        #[arg(long)]
        imex: bool,
        /// Run the levels concurrently.
        #[arg(long)]
        parallel_levels: bool,
    },
    /// Print statistics of the configured initial mesh.
    MeshInfo { config: PathBuf },
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ESCHER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("ESCHER_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn fail(code: u8, e: &dyn std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn code_for(e: &Error) -> u8 {
    if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_SOLVER
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return fail(EXIT_CONFIG, &e);
    }
    let path = match &cli.command {
        Command::Run { config } | Command::Eoc { config, .. } | Command::MeshInfo { config } => config,
    };
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let result = match cli.command {
        Command::Run { .. } => cmd_run(&cfg).map(|s| {
            let last = s.trajectory.records.last().expect("initial record");
            println!("wrote {} ({} rows)", s.diagnostics.display(), s.trajectory.records.len());
            if !s.snapshots.is_empty() {
                println!("wrote {} snapshots", s.snapshots.len());
            }
            println!(
                "final energy {:.9e}, relative mass drift {:.3e}, Newton iterations {}",
                last.energy,
                s.trajectory.max_relative_mass_drift(),
                s.trajectory.total_newton_iterations()
            );
        }),
        Command::Eoc {
            levels,
            imex,
            parallel_levels,
            ..
        } => cmd_eoc(
            &cfg,
            EocOptions {
                levels,
                imex,
                parallel_levels,
            },
        )
        .map(|s| {
            print!("{}", format_eoc_table("u, L2", &s.study.u));
            print!("{}", format_eoc_table("w, L2", &s.study.w));
            println!("wrote {} and {}", s.u_path.display(), s.w_path.display());
        }),
        Command::MeshInfo { .. } => mesh_info(&cfg).map(|info| println!("{info}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(code_for(&e), &e),
    }
}
