use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coopmol::analytics::SystemKind;
use coopmol::experiment::{
    analytic_report, load_scenarios, sweep_to_csv, ExperimentError, Overrides, Preset, Scenario,
};
use coopmol::simulator::{with_workers, DetectorChoice, Simulator};

/// Error-rate analysis and simulation of diffusion-based cooperative relay networks.
#[derive(Parser)]
#[command(name = "coopmol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form results at the scenario's own operating point, as JSON.
    Analytic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate for one system at the scenario's operating point, as JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "cooperative")]
        system: SystemKind,
        /// Relays to use for the cooperative system (default: all).
        #[arg(long)]
        relays: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "linear")]
        detector: DetectorChoice,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the sweep block of a scenario file and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a built-in reference sweep and write CSV.
    Reproduce {
        #[arg(value_enum)]
        preset: Preset,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct McArgs {
    /// Monte Carlo trials per row; 0 for analytic values only.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    detector: Option<DetectorChoice>,
}

#[derive(Args)]
struct RunArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo runs (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl From<&McArgs> for Overrides {
    fn from(a: &McArgs) -> Self {
        Overrides {
            trials: a.trials,
            seed: a.seed,
            detector: a.detector,
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write + Send>, ExperimentError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout()),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<(), ExperimentError> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn pooled<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    match workers {
        Some(w) => Ok(with_workers(w, f)?),
        None => Ok(f()),
    }
}

fn one_or_many<T: serde::Serialize>(items: Vec<T>) -> serde_json::Value {
    let mut v = serde_json::to_value(items).expect("serializable");
    match v.as_array_mut() {
        Some(a) if a.len() == 1 => a.pop().expect("one element"),
        _ => v,
    }
}

fn simulate(
    scenarios: &[Scenario],
    system: SystemKind,
    relays: Option<usize>,
    trials: u64,
    seed: u64,
    detector: DetectorChoice,
) -> Result<serde_json::Value, ExperimentError> {
    let mut results = Vec::new();
    for s in scenarios {
        let point = s.base_point();
        let n = relays.unwrap_or(s.relays.len());
        let sys = s.system(system, n, &point)?;
        let analytic = sys.analytic_pe()?;
        let est = Simulator::new(&sys)?.estimate(detector, trials, seed)?;
        results.push(serde_json::json!({
            "label": s.label,
            "system": system,
            "N": s.branch_count(system, n),
            "detector": detector,
            "pe_analytic": analytic,
            "estimate": est,
            "interval_95": est.interval(1.96),
        }));
    }
    Ok(one_or_many(results))
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Analytic { config, out } => {
            let reports = load_scenarios(&config)?
                .iter()
                .map(analytic_report)
                .collect::<Result<Vec<_>, _>>()?;
            write_json(&one_or_many(reports), out.as_deref())
        }
        Command::Simulate {
            config,
            system,
            relays,
            trials,
            seed,
            detector,
            run,
        } => {
            let scenarios = load_scenarios(&config)?;
            let value = pooled(run.workers, || {
                simulate(&scenarios, system, relays, trials, seed, detector)
            })??;
            write_json(&value, run.out.as_deref())
        }
        Command::Sweep { config, mc, run } => {
            let scenarios = load_scenarios(&config)?;
            let overrides = Overrides::from(&mc);
            let out = output(run.out.as_deref())?;
            pooled(run.workers, || sweep_to_csv(&scenarios, &overrides, out))??;
            Ok(())
        }
        Command::Reproduce { preset, mc, run } => {
            let scenarios = preset.scenarios()?;
            let overrides = Overrides::from(&mc);
            let out = output(run.out.as_deref())?;
            pooled(run.workers, || sweep_to_csv(&scenarios, &overrides, out))??;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
