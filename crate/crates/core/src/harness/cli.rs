//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, Config};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

use super::csv::write_log_file;
use super::metrics::Metrics;
use super::runner::{run_named, RunResult};
use super::scenario::{generate_scenario, Scenario, ScenarioKind};
use super::validate::run_checks;

#[derive(Debug, Parser)]
#[command(name = "tirewear", version, about = "Tire-wear-aware trajectory tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one controller on one scenario and write its CSV log and metrics.
    Run(RunArgs),
    /// Run several controllers on one scenario and print a metrics table.
    Compare(CompareArgs),
    /// Repeat a comparison across vehicle masses.
    Sweep(SweepArgs),
    /// Run the built-in oracle and property checks.
    Validate,
}

#[derive(Debug, Args)]
struct Common {
    /// curve, offset_line, or a scenario .toml file.
    #[arg(long, default_value = "curve")]
    scenario: String,
    /// Reference speed, km/h.
    #[arg(long, default_value_t = 35.0)]
    speed: f64,
    /// Run length, s.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Gross vehicle mass, kg.
    #[arg(long)]
    mass: Option<f64>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Annealing seed (overrides sa.seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "two")]
    controller: String,
    /// CSV log path; metrics go next to it with a `.metrics` extension.
    #[arg(long, default_value = "run.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "kinematic,ntwo,two")]
    controllers: Vec<String>,
    /// Directory for per-run CSV logs and metrics.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Execute independent runs concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "8000,12000,16000,20000")]
    masses: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "kinematic,ntwo,two")]
    controllers: Vec<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run(a) => {
            let (config, scenario) = prepare(&a.common)?;
            let result = run_named(&scenario, &a.controller, &config)?;
            write_outputs(&a.out, &result, config.vehicle.axle_count())?;
            print_table(&[(label(&result), result.metrics)]);
            Ok(0)
        }
        Command::Compare(a) => {
            let (config, scenario) = prepare(&a.common)?;
            let jobs: Vec<(Scenario, String)> = a.controllers.iter().map(|c| (scenario.clone(), c.clone())).collect();
            let results = run_jobs(&jobs, &config, a.parallel)?;
            emit(&results, a.out_dir.as_deref(), &config)?;
            Ok(0)
        }
        Command::Sweep(a) => {
            let (config, scenario) = prepare(&a.common)?;
            let mut jobs = Vec::new();
            for &m in &a.masses {
                for c in &a.controllers {
                    jobs.push((scenario.clone().with_mass(m), c.clone()));
                }
            }
            let results = run_jobs(&jobs, &config, a.parallel)?;
            emit(&results, a.out_dir.as_deref(), &config)?;
            Ok(0)
        }
        Command::Validate => {
            let checks = run_checks()?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            println!("{} checks, {failed} failed", checks.len());
            Ok(i32::from(failed > 0))
        }
    }
}

fn prepare(common: &Common) -> Result<(Config, Scenario)> {
    let mut config = match &common.config {
        Some(p) => load_config(p)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config = config.with_seed(seed);
    }
    if let Some(m) = common.mass {
        config = config.with_mass(m)?;
    }
    let kind: ScenarioKind = common.scenario.parse()?;
    let scenario = generate_scenario(
        &kind,
        common.speed,
        common.duration,
        config.plant.dt,
        &config.vehicle,
        &config.tire_params()?,
        &config.limits,
    )?;
    Ok((config, scenario))
}

fn run_jobs(jobs: &[(Scenario, String)], config: &Config, parallel: bool) -> Result<Vec<RunResult>> {
    let mode = Parallelism::from_flag(parallel);
    par::map(jobs, mode, |(s, c)| run_named(s, c, config)).into_iter().collect()
}

fn label(r: &RunResult) -> String {
    format!("{}/{}/{:.0}kg", r.scenario, r.controller, r.mass_kg)
}

fn emit(results: &[RunResult], out_dir: Option<&Path>, config: &Config) -> Result<()> {
    let rows: Vec<(String, Metrics)> = results.iter().map(|r| (label(r), r.metrics)).collect();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (i, r) in results.iter().enumerate() {
            let path = dir.join(format!("{:02}_{}_{}_{:.0}kg.csv", i, r.scenario, r.controller, r.mass_kg));
            write_outputs(&path, r, config.vehicle.axle_count())?;
        }
    }
    print_table(&rows);
    Ok(())
}

fn write_outputs(csv_path: &Path, result: &RunResult, axle_count: usize) -> Result<()> {
    write_log_file(csv_path, &result.rows, axle_count)?;
    let mut f = std::fs::File::create(csv_path.with_extension("metrics"))?;
    writeln!(f, "scenario={}", result.scenario)?;
    writeln!(f, "controller={}", result.controller)?;
    writeln!(f, "mass_kg={}", result.mass_kg)?;
    f.write_all(result.metrics.to_key_value_text().as_bytes())?;
    Ok(())
}

fn print_table(rows: &[(String, Metrics)]) {
    println!(
        "{:<30} {:>11} {:>11} {:>11} {:>11} {:>11} {:>9} {:>9} {:>9} {:>9}",
        "run", "Omega", "W_tw", "W_alpha", "W_s", "W_t", "e_bar", "e_x", "e_y", "e_phi"
    );
    for (name, m) in rows {
        println!(
            "{:<30} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            name,
            m.omega,
            m.wear.total,
            m.wear.slip_angle,
            m.wear.slip_ratio,
            m.wear.steer,
            m.errors.mean,
            m.errors.x_cm,
            m.errors.y_cm,
            m.errors.heading_deg
        );
    }
}
