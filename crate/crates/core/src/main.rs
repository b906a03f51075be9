use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cvss::diagnostics::{detect_vortex_cores, CORE_DENSITY_FLOOR};
use cvss::scenarios::{self, run::with_output_dir};
use cvss::Error;

#[derive(Parser)]
#[command(
    name = "cvss",
    version,
    about = "Coupled vortex superposition state simulator"
)]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    /// Write outputs here instead of the config's output_dir.
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario.
    Run { config: PathBuf },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Print a snapshot header, norms and core counts.
    Inspect { snapshot: PathBuf },
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Io { .. } | Error::Format(_) => EXIT_IO,
        _ => EXIT_ASSERTION,
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Validate { config } => {
            let cfg = scenarios::parse_config(&read_text(config)?)?;
            if !cli.quiet {
                println!(
                    "{}: ok ({}, {} steps of dt = {})",
                    config.display(),
                    cfg.scenario.name(),
                    cfg.evolution.n_steps,
                    cfg.evolution.dt
                );
            }
            Ok(0)
        }
        Command::Run { config } => {
            let text = read_text(config)?;
            let cfg = with_output_dir(scenarios::parse_config(&text)?, cli.output_dir.as_deref());
            let summary = scenarios::run_scenario_with_source(&cfg, Some(&text))?;
            if !cli.quiet {
                for c in &summary.checks {
                    println!(
                        "{} {}: {:e} ({})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.value,
                        c.threshold
                    );
                }
                println!("manifest: {}", summary.manifest_path.display());
            }
            Ok(if summary.passed { 0 } else { EXIT_ASSERTION })
        }
        Command::Inspect { snapshot } => {
            let snap = scenarios::read_snapshot(snapshot)?;
            let g = snap.grid;
            println!("file: {}", snapshot.display());
            println!("grid: {} x {}, box {} x {}", g.nx(), g.ny(), g.lx(), g.ly());
            println!("t: {}", snap.t);
            println!("components: {}", snap.components.len());
            for (i, c) in snap.components.iter().enumerate() {
                println!(
                    "component {}: norm {:.12e}, cores {}",
                    i + 1,
                    c.norm_sqr(),
                    detect_vortex_cores(c, CORE_DENSITY_FLOOR).len()
                );
            }
            if let Ok(state) = snap.into_state() {
                println!(
                    "total norm: {:.12e}, cores in psi1 + psi2: {}",
                    state.total_norm(),
                    detect_vortex_cores(&state.superposition(), CORE_DENSITY_FLOOR).len()
                );
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
