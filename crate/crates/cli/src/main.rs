use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harvest_cli::commands;
use harvest_cli::config::{MuSetting, Preset, RunConfig};
use harvest_cli::{CliError, Result};

/// Robust harvest scheduling for a heterogeneous fish population.
#[derive(Parser, Debug)]
#[command(name = "harvest", version)]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run even when the time step exceeds the CFL bound.
    #[arg(long, global = true)]
    override_cfl: bool,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Growth preset (2021 or 2022); replaces the configured growth block.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Uncertainty level(s), e.g. `0.01` or `0.01,0.1,inf`. A single value
    /// sets the objective; `distort` takes the whole list.
    #[arg(long, global = true, value_delimiter = ',')]
    mu: Vec<MuSetting>,
    /// Terminal values for backward paths.
    #[arg(long, global = true, value_delimiter = ',')]
    terminal_values: Option<Vec<f64>>,
    /// Initial values for forward paths.
    #[arg(long, global = true, value_delimiter = ',')]
    initial_values: Option<Vec<f64>>,
    #[arg(long, global = true)]
    quad_points: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the configuration and print one PASS/FAIL line per check.
    Validate,
    /// Solve the value function; writes value_field.csv and policy_field.csv.
    Solve,
    /// Optimal population paths; one CSV per start value.
    Paths,
    /// Baseline and worst-case densities; writes density.csv.
    Distort,
    /// Fit the growth parameters to weight observations; writes fit_report.txt.
    Fit {
        /// CSV with columns `t,w`.
        #[arg(long)]
        observations: Option<PathBuf>,
    },
}

fn configure(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.override_cfl |= cli.override_cfl;
    if let Some(p) = cli.preset {
        cfg.growth = Default::default();
        cfg.growth.preset = Some(p);
    }
    if let Some(q) = cli.quad_points {
        cfg.quad_points = q;
    }
    if let Some(v) = &cli.terminal_values {
        cfg.paths.terminal_values = v.clone();
    }
    if let Some(v) = &cli.initial_values {
        cfg.paths.initial_values = v.clone();
    }
    if !cli.mu.is_empty() {
        if matches!(cli.command, Command::Distort) {
            cfg.distort.mu = cli.mu.clone();
        } else if let [mu] = cli.mu.as_slice() {
            cfg.objective.mu = *mu;
        } else {
            return Err(CliError::Config("--mu takes a single value outside `distort`".into()));
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = configure(cli)?;
    let summary = match &cli.command {
        Command::Validate => {
            let report = commands::validate(&cfg);
            print!("{report}");
            if report.blocks(cfg.override_cfl) {
                return Err(CliError::Validation(
                    report
                        .checks
                        .iter()
                        .filter(|c| !c.passed)
                        .map(|c| c.name)
                        .collect::<Vec<_>>()
                        .join(", "),
                ));
            }
            if cfg.override_cfl && report.blocks(false) {
                println!("note: CFL failure overridden");
            }
            return Ok(());
        }
        Command::Solve => commands::run_solve(&cfg, &cli.out_dir)?,
        Command::Paths => commands::run_paths(&cfg, &cli.out_dir)?,
        Command::Distort => commands::run_distort(&cfg, &cli.out_dir)?,
        Command::Fit { observations } => commands::run_fit(&cfg, observations.as_deref(), &cli.out_dir)?,
    };
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harvest: {e}");
            e.exit_code()
        }
    }
}
