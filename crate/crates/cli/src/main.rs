use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stalight::scenarios::{self, Manifest};
use stalight::{parse_config, Config, Error, ScenarioName};

/// Stationary-light simulations in atomic ensembles.
#[derive(Parser)]
#[command(name = "stalight", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Steady-state transmission and reflection spectrum of the configured controls.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario once per value of a config parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path, e.g. `ensemble.d` or `scenario.parameters.delta`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Worker threads; STALIGHT_THREADS caps this.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Built-in scenario configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List scenario names with a one-line description.
    List,
    /// Print the preset config of a scenario as JSON.
    Show { name: String },
}

fn load(path: &Path) -> stalight::Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text).map_err(|e| e.with_context(path.display().to_string()))
}

fn parse_values(list: &str) -> stalight::Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::validation("--values", format!("`{s}` is not a finite number")))
        })
        .collect()
}

fn report(manifest: &Manifest, out: &Path) {
    println!("{} -> {}", manifest.scenario, out.display());
    for (k, v) in &manifest.metrics {
        match v {
            Some(v) => println!("  {k} = {v}"),
            None => println!("  {k} = n/a"),
        }
    }
}

fn execute(cli: Cli) -> stalight::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            report(&scenarios::run_scenario(&cfg, &out)?, &out);
        }
        Command::Scan { config, out } => {
            let cfg = load(&config)?;
            report(&scenarios::scan(&cfg, &out)?, &out);
        }
        Command::Sweep {
            config,
            param,
            values,
            jobs,
            out,
        } => {
            let cfg = load(&config)?;
            let values = parse_values(&values)?;
            scenarios::run_sweep(&cfg, &param, &values, jobs, &out)?;
            println!("{} points -> {}", values.len(), out.join("sweep.csv").display());
        }
        Command::Presets { action: PresetAction::List } => {
            for name in ScenarioName::ALL {
                println!("{:<24} {}", name.as_str(), scenarios::describe(name));
            }
        }
        Command::Presets {
            action: PresetAction::Show { name },
        } => {
            let name = ScenarioName::parse(&name)?;
            println!("{}", scenarios::preset(name).to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_validation() {
                2
            } else if e.is_divergence() {
                3
            } else {
                1
            };
            ExitCode::from(code)
        }
    }
}
