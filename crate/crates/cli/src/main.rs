//! Command-line harness around the prediction library: emits analytic
//! correlation curves, model fits, raw traces, and full NMSE evaluations
//! as CSV. Runs are deterministic for a fixed seed, so re-running a
//! command reproduces its output files byte for byte.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ipred_core::correlation::{interference_autocorr, SpatialConfig};
use ipred_core::eval::{
    build_predictor, evaluate_scenario, preset, write_heatmap_csv, write_histogram_csv,
    write_nmse_csv, EvaluationResult, FitSettings, PredictorKind, ScenarioSpec, PRESET_NAMES,
};
use ipred_core::sim::run_realization;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "ipred", version, about = "Interference prediction experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where scenarios come from: a built-in preset or a config file.
#[derive(Args)]
struct Source {
    /// Built-in scenario preset (see `scenario list`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Scenario config file; every section becomes one scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for the simulation streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the realization count of every selected scenario.
    #[arg(long)]
    realizations: Option<usize>,
    /// Override the trace length in slots.
    #[arg(long)]
    slots: Option<usize>,
    /// Override the prediction horizons, e.g. "1,2,4,8".
    #[arg(long)]
    deltas: Option<String>,
    /// Use published-scale realization counts instead of desk scale.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the analytic interference correlation curve per scenario.
    Correlation {
        #[command(flatten)]
        source: Source,
        /// Largest lag to tabulate.
        #[arg(long, default_value_t = 300)]
        max_lag: usize,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a model per scenario and emit the order-selection grid.
    Fit {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 20)]
        p_max: usize,
        #[arg(long, default_value_t = -30.0, allow_hyphen_values = true)]
        target_db: f64,
        /// Output CSV path for the error grid (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate interference traces and emit them as CSV.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the predictor comparison and emit NMSE tables.
    Evaluate {
        #[command(flatten)]
        source: Source,
        /// Directory receiving nmse.csv, heatmap.csv and histogram.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Inspect available scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// List the built-in presets.
    List,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Correlation { source, max_lag, out } => correlation(&source, max_lag, out),
        Command::Fit { source, p_max, target_db, out } => fit(&source, p_max, target_db, out),
        Command::Simulate { source, out } => simulate(&source, out),
        Command::Evaluate { source, out } => evaluate(&source, &out),
        Command::Scenario { action: ScenarioAction::List } => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

/// Resolves the scenario list from preset or config file and applies the
/// shared command-line overrides.
fn load_specs(source: &Source) -> Result<Vec<ScenarioSpec>> {
    let mut specs = match (&source.preset, &source.config) {
        (Some(name), None) => {
            preset(name, source.seed.unwrap_or(1), source.full_scale).map_err(|e| anyhow!(e))?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            config::parse_config(&text)?
        }
        (None, None) => bail!("pass --preset <name> or --config <file>; see `scenario list`"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    for spec in &mut specs {
        if let Some(s) = source.seed {
            spec.config.seed = s;
        }
        if let Some(r) = source.realizations {
            spec.config.realizations = r;
        }
        if let Some(t) = source.slots {
            spec.config.horizon = t;
        }
        if let Some(d) = &source.deltas {
            spec.deltas = config::parse_deltas(d)?;
        }
    }
    Ok(specs)
}

fn emit(path: Option<PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(&p, content)
            .with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn correlation(source: &Source, max_lag: usize, out: Option<PathBuf>) -> Result<()> {
    let specs = load_specs(source)?;
    let mut csv = String::from("scenario,lag,correlation\n");
    for spec in &specs {
        let curve = interference_autocorr(&spec.config.params, max_lag, &SpatialConfig::Static)
            .map_err(|e| anyhow!("{}: {e}", spec.name))?;
        for (tau, v) in curve.values().iter().enumerate() {
            writeln!(csv, "{},{tau},{v:.9}", spec.name).unwrap();
        }
    }
    emit(out, &csv)
}

fn fit(source: &Source, p_max: usize, target_db: f64, out: Option<PathBuf>) -> Result<()> {
    let specs = load_specs(source)?;
    let settings = FitSettings { p_max, target_db, ..FitSettings::default() };
    let mut csv = String::from("scenario,p,q,mse_db,selected\n");
    for spec in &specs {
        let built = build_predictor(PredictorKind::Interference, &spec.config.params, &settings)
            .map_err(|e| anyhow!("{}: {e}", spec.name))?;
        let report = built.report.expect("model predictor carries a report");
        let model = built.model.expect("model predictor carries a model");
        eprintln!(
            "{}: selected ({},{}) at {:.2} dB{}{}",
            spec.name,
            report.selected.0,
            report.selected.1,
            report.selected_mse_db,
            if report.missed_target { " (missed target)" } else { "" },
            if built.decimation > 1 {
                format!(", filter runs every {} slots", built.decimation)
            } else {
                String::new()
            },
        );
        eprintln!("  ar: {:?}", model.ar);
        eprintln!("  ma: {:?}", model.ma);
        for (p, q, db) in report.feasible_cells() {
            let sel = (p, q) == report.selected;
            writeln!(csv, "{},{p},{q},{db:.6},{}", spec.name, sel as u8).unwrap();
        }
    }
    emit(out, &csv)
}

fn simulate(source: &Source, out: Option<PathBuf>) -> Result<()> {
    let specs = load_specs(source)?;
    let mut csv = String::from("scenario,realization,slot,interference\n");
    for spec in &specs {
        for idx in 0..spec.config.realizations as u64 {
            let trace = run_realization(&spec.config, idx)
                .map_err(|e| anyhow!("{}: {e}", spec.name))?;
            for (slot, v) in trace.values.iter().enumerate() {
                writeln!(csv, "{},{idx},{slot},{v:.9e}", spec.name).unwrap();
            }
        }
    }
    emit(out, &csv)
}

fn evaluate(source: &Source, out: &Path) -> Result<()> {
    let specs = load_specs(source)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))?;
    let mut results: Vec<EvaluationResult> = Vec::new();
    for spec in &specs {
        let res = evaluate_scenario(&spec.name, &spec.config, &spec.kinds, &spec.deltas)
            .map_err(|e| anyhow!("{}: {e}", spec.name))?;
        eprintln!(
            "{}: {} realizations, {} cells, {:.1}s",
            res.scenario,
            res.realizations,
            res.cells.len(),
            res.elapsed_s
        );
        results.push(res);
    }
    write_nmse_csv(&results, &out.join("nmse.csv"))?;
    write_heatmap_csv(&results, &out.join("heatmap.csv"))?;
    write_histogram_csv(&results, &out.join("histogram.csv"))?;

    // Compact horizon-by-predictor table per scenario on stdout.
    for res in &results {
        println!("{} (NMSE dB, {} realizations)", res.scenario, res.realizations);
        let mut deltas: Vec<usize> = res.cells.iter().map(|c| c.delta).collect();
        deltas.sort_unstable();
        deltas.dedup();
        print!("{:>13}", "delta");
        for d in &deltas {
            print!("{d:>8}");
        }
        println!();
        let mut kinds: Vec<PredictorKind> = res.cells.iter().map(|c| c.predictor).collect();
        kinds.dedup();
        for kind in kinds {
            print!("{:>13}", kind.label());
            for d in &deltas {
                let cell = res
                    .cells
                    .iter()
                    .find(|c| c.predictor == kind && c.delta == *d)
                    .expect("cell grid is rectangular");
                print!("{:>8.2}", cell.nmse_db);
            }
            println!();
        }
    }
    Ok(())
}
