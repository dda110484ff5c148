use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beris::config::RunConfig;
use beris::run::{cmd_diagnose, cmd_potential_table, cmd_run, RunError};

#[derive(Parser)]
#[command(
    name = "beris",
    version,
    about = "Pseudo-spectral Q-tensor hydrodynamics on the torus with structural-law diagnostics"
)]
struct Cli {
    /// Worker threads for grid-pointwise solves (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a simulation described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute diagnostics from the snapshots of a finished run.
    Diagnose {
        /// Run directory containing resolved_config.toml and snapshots.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate the configured potential over eigenvalue space.
    PotentialTable {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 24)]
        samples: usize,
        /// Regularization sweep values for the convergence columns.
        #[arg(long, value_delimiter = ',')]
        m_sweep: Vec<f64>,
        #[arg(long, default_value = "potential_table.csv")]
        output: PathBuf,
    },
    /// Run the reduced-size invariant suite.
    Selftest,
}

fn load_config(path: &PathBuf) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("warning: could not configure thread pool: {e}");
        }
    }
    let result: Result<(), RunError> = match cli.cmd {
        Cmd::Run {
            config,
            output,
            seed,
        } => load_config(&config).and_then(|cfg| {
            cmd_run(&cfg, output.as_deref(), seed).map(|manifest| {
                println!(
                    "run {}: {} artifacts written",
                    manifest.status,
                    manifest.artifacts.len()
                );
            })
        }),
        Cmd::Diagnose { dir, output } => cmd_diagnose(&dir, output.as_deref()),
        Cmd::PotentialTable {
            config,
            samples,
            m_sweep,
            output,
        } => load_config(&config).and_then(|cfg| {
            let spec = cfg.potential.to_spec().map_err(RunError::Config)?;
            cmd_potential_table(&spec, samples, &m_sweep, &output)
        }),
        Cmd::Selftest => {
            let results = beris::selftest::run_all();
            println!("{}", serde_json::to_string_pretty(&results).unwrap());
            let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
            if failed.is_empty() {
                println!("selftest: all {} checks passed", results.len());
                return ExitCode::SUCCESS;
            }
            eprintln!("selftest: FAILED checks: {}", failed.join(", "));
            return ExitCode::from(1);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
