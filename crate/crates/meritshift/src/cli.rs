//! The `meritshift` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use meritshift_core::data::generate_synthetic;
use meritshift_core::models::Fitter;
use meritshift_core::scenario::{forecast_error_scenarios, run_scenario, Technology};
use meritshift_core::{ModelFit, ModelId, ModelSpec, Observation};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{AppError, ExitStatus, Result};
use crate::ingest::{ingest_with, DropReason, IngestOptions};
use crate::io::{format_timestamp, parse_timestamp};
use crate::parallel;
use crate::report::{self, PlotData};
use crate::store::{self, dataset_digests, file_digest, read_dataset, DatasetSummary, FileDigest, Manifest, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "meritshift", version, about = "Intraday electricity price models built on shifted day-ahead auction curves")]
pub struct Cli {
    /// TOML run file. Flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for outputs and the run manifest [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Worker threads [default: one per core].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read curve, price and renewable CSVs into a dataset directory.
    Ingest(IngestArgs),
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Estimate models on a dataset and write one JSON file per model.
    Fit(FitArgs),
    /// Predict intraday prices for every hour of a dataset.
    Predict(PredictArgs),
    /// Rolling-window refit and out-of-sample evaluation.
    Backtest(BacktestArgs),
    /// Capacity-scaling study of price volatility.
    Scenario(ScenarioArgs),
    /// Long-format CSV for external plotting.
    PlotData(PlotArgs),
}

fn model_id(s: &str) -> std::result::Result<ModelId, String> {
    s.parse().map_err(|e: meritshift_core::Error| e.to_string())
}

fn technology(s: &str) -> std::result::Result<Technology, String> {
    s.parse().map_err(|e: meritshift_core::Error| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long, value_name = "FILE")]
    pub curves: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub prices: PathBuf,
    /// Quarter-hourly wind and solar forecasts and actuals.
    #[arg(long, value_name = "FILE")]
    pub renewables: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub days: Option<usize>,
    /// Model generating the intraday price.
    #[arg(long, value_parser = model_id)]
    pub generator: Option<ModelId>,
    /// Standard deviation of the intraday price noise, EUR/MWh.
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    /// Model to fit; repeat for several [default: all].
    #[arg(long = "model", value_parser = model_id)]
    pub models: Vec<ModelId>,
    /// Fit on the first N days only.
    #[arg(long)]
    pub train_days: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    /// Fit file written by `fit`; repeat for several.
    #[arg(long = "fit", value_name = "FILE", required = true)]
    pub fits: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BacktestArgs {
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    #[arg(long = "model", value_parser = model_id)]
    pub models: Vec<ModelId>,
    #[arg(long)]
    pub in_sample_days: Option<usize>,
    #[arg(long)]
    pub out_sample_days: Option<usize>,
    /// Hours between refits.
    #[arg(long)]
    pub step: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScenarioArgs {
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    /// Use these fits instead of fitting on the dataset.
    #[arg(long = "fit", value_name = "FILE")]
    pub fits: Vec<PathBuf>,
    #[arg(long = "model", value_parser = model_id, conflicts_with = "fits")]
    pub models: Vec<ModelId>,
    #[arg(long = "gamma")]
    pub gammas: Vec<f64>,
    #[arg(long = "rho")]
    pub rhos: Vec<f64>,
    /// wind, solar or wind+solar.
    #[arg(long = "technology", value_parser = technology)]
    pub technologies: Vec<Technology>,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    /// Output directory of a `backtest` run.
    #[arg(long, value_name = "DIR")]
    pub backtest: Option<PathBuf>,
    /// Dataset for the shift decomposition; needs `--fit`.
    #[arg(long, value_name = "DIR", requires = "fit")]
    pub dataset: Option<PathBuf>,
    /// An `nlm` fit file.
    #[arg(long, value_name = "FILE", requires = "dataset")]
    pub fit: Option<PathBuf>,
    /// Hour for the simulated shift scenarios [default: first hour].
    #[arg(long, value_name = "TIMESTAMP")]
    pub hour: Option<String>,
    /// Size of the simulated forecast errors, MW.
    #[arg(long, default_value_t = 2500.0)]
    pub magnitude: f64,
}

/// Parses `args` (including the program name), runs the command and
/// reports errors on stderr.
pub fn run<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage } else { ExitStatus::Ok };
        }
    };
    match execute(cli) {
        Ok(_) => ExitStatus::Ok,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_status()
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out_dir.is_some() {
        cfg.out_dir.clone_from(&cli.out_dir);
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    match &cli.command {
        Command::Synth(a) => {
            if let Some(d) = a.days {
                cfg.synth.days = d;
            }
            if let Some(g) = a.generator {
                cfg.synth.generator = g;
            }
            if let Some(s) = a.noise_sd {
                cfg.synth.noise_sd = s;
            }
        }
        Command::Fit(a) => {
            if !a.models.is_empty() {
                cfg.fit.models.clone_from(&a.models);
            }
            if a.train_days.is_some() {
                cfg.fit.train_days = a.train_days;
            }
        }
        Command::Backtest(a) => {
            if !a.models.is_empty() {
                cfg.backtest.models.clone_from(&a.models);
            }
            let w = &mut cfg.backtest.window;
            w.in_sample_days = a.in_sample_days.unwrap_or(w.in_sample_days);
            w.out_sample_days = a.out_sample_days.unwrap_or(w.out_sample_days);
            w.step = a.step.unwrap_or(w.step);
        }
        Command::Scenario(a) => {
            if !a.models.is_empty() {
                cfg.scenario.models.clone_from(&a.models);
            }
            let g = &mut cfg.scenario.grid;
            if !a.gammas.is_empty() {
                g.gammas.clone_from(&a.gammas);
            }
            if !a.rhos.is_empty() {
                g.rhos.clone_from(&a.rhos);
            }
            if !a.technologies.is_empty() {
                g.technologies.clone_from(&a.technologies);
            }
        }
        _ => {}
    }
    Ok(cfg.resolve())
}

fn recorded(args: &impl Serialize, cfg: &RunConfig) -> serde_json::Value {
    serde_json::json!({ "args": args, "run": cfg })
}

pub fn execute(cli: Cli) -> Result<Manifest> {
    let cfg = resolve(&cli)?;
    let out = OutputDir::create(&cfg.out_dir())?;
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, &cfg, out),
        Command::Synth(a) => cmd_synth(a, &cfg, out),
        Command::Fit(a) => cmd_fit(a, &cfg, out),
        Command::Predict(a) => cmd_predict(a, &cfg, out),
        Command::Backtest(a) => cmd_backtest(a, &cfg, out),
        Command::Scenario(a) => cmd_scenario(a, &cfg, out),
        Command::PlotData(a) => cmd_plot_data(a, &cfg, out),
    }
}

fn cmd_ingest(a: &IngestArgs, cfg: &RunConfig, mut out: OutputDir) -> Result<Manifest> {
    let (dataset, summary) = ingest_with(&a.curves, &a.prices, &a.renewables, IngestOptions::default())?;
    store::write_dataset_files(&mut out, &dataset)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let dropped = (|| {
        w.write_record(["timestamp_utc", "reason"])?;
        for (ts, reason) in &summary.dropped {
            let reason = match reason {
                DropReason::MissingPrice => "missing price",
                DropReason::MissingRenewables => "missing renewables",
                DropReason::MissingCurve => "missing curve",
            };
            w.write_record([format_timestamp(*ts).as_str(), reason])?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    })()
    .map_err(|e: csv::Error| AppError::format(out.path("dropped.csv"), e))?;
    out.write("dropped.csv", &dropped)?;
    eprintln!("ingested {} hours, dropped {}", summary.hours, summary.dropped.len());
    let inputs = [&a.curves, &a.prices, &a.renewables]
        .into_iter()
        .map(|p| file_digest(p))
        .collect::<Result<Vec<_>>>()?;
    out.finish("ingest", recorded(a, cfg), inputs, Some(DatasetSummary::of(&dataset, None)))
}

fn cmd_synth(a: &SynthArgs, cfg: &RunConfig, mut out: OutputDir) -> Result<Manifest> {
    let dataset = generate_synthetic(&cfg.synth, cfg.seed())?;
    store::write_dataset_files(&mut out, &dataset)?;
    eprintln!("generated {} hours", dataset.len());
    let summary = DatasetSummary::of(&dataset, Some(cfg.synth.clone()));
    out.finish("synth", recorded(a, cfg), Vec::new(), Some(summary))
}

fn load_observations(dir: &Path, days: Option<usize>, pool: &rayon::ThreadPool) -> Result<(Vec<Observation>, Vec<FileDigest>)> {
    let dataset = read_dataset(dir)?;
    let records = match days {
        Some(d) => dataset.first_days(d),
        None => dataset.records(),
    };
    Ok((parallel::observations(pool, records)?, dataset_digests(dir)?))
}

fn fit_all(obs: &[Observation], models: &[ModelId], cfg: &RunConfig) -> Result<Vec<ModelFit>> {
    let mut fitter = Fitter::new(obs, &cfg.estimation);
    models.iter().map(|&m| Ok(fitter.fit(m)?)).collect()
}

fn cmd_fit(a: &FitArgs, cfg: &RunConfig, mut out: OutputDir) -> Result<Manifest> {
    let pool = parallel::thread_pool(cfg.jobs)?;
    let (obs, inputs) = load_observations(&a.dataset, cfg.fit.train_days, &pool)?;
    for fit in fit_all(&obs, &cfg.fit.models, cfg)? {
        out.write(&format!("fit_{}.json", fit.spec.id), &report::fit_json(&fit))?;
    }
    out.finish("fit", recorded(a, cfg), inputs, None)
}

fn read_fits(paths: &[PathBuf], inputs: &mut Vec<FileDigest>) -> Result<Vec<ModelFit>> {
    paths
        .iter()
        .map(|p| {
            inputs.push(file_digest(p)?);
            report::read_fit(p)
        })
        .collect()
}

fn cmd_predict(a: &PredictArgs, cfg: &RunConfig, mut out: OutputDir) -> Result<Manifest> {
    let pool = parallel::thread_pool(cfg.jobs)?;
    let (obs, mut inputs) = load_observations(&a.dataset, None, &pool)?;
    let fits = read_fits(&a.fits, &mut inputs)?;
    let mut rows = Vec::with_capacity(obs.len() * fits.len());
    for fit in &fits {
        for o in &obs {
            rows.push((o.timestamp, fit.spec.id, fit.predict(o)?));
        }
    }
    out.write("predictions.csv", &report::predictions_csv(rows.iter().map(|(t, m, p)| (*t, *m, p))))?;
    out.finish("predict", recorded(a, cfg), inputs, None)
}

fn cmd_backtest(a: &BacktestArgs, cfg: &RunConfig, mut out: OutputDir) -> Result<Manifest> {
    let norms = cfg.backtest.norms()?;
    let pool = parallel::thread_pool(cfg.jobs)?;
    let (obs, inputs) = load_observations(&a.dataset, None, &pool)?;
    let specs: Vec<ModelSpec> = cfg.backtest.models.iter().map(|&m| ModelSpec::new(m)).collect();
    let bt = parallel::run_backtest(&pool, &obs, &specs, &cfg.backtest.window, &cfg.estimation)?;
    out.write("predictions.csv", &report::backtest_predictions_csv(&bt))?;
    out.write("metrics.csv", &report::metrics_csv(&bt.metrics))?;
    out.write("dm.csv", &report::dm_csv(&bt.dm_table(&norms)))?;
    out.write("coefficients.csv", &report::coefficients_csv(&bt.coefficients))?;
    out.write("exclusions.csv", &report::exclusions_csv(&bt.exclusions))?;
    for m in &bt.metrics {
        eprintln!("{:>6}  mae {:>9.4}  rmse {:>9.4}", m.model.as_str(), m.mae, m.rmse);
    }
    out.finish("backtest", recorded(a, cfg), inputs, None)
}

fn cmd_scenario(a: &ScenarioArgs, cfg: &RunConfig, mut out: OutputDir) -> Result<Manifest> {
    let pool = parallel::thread_pool(cfg.jobs)?;
    let (obs, mut inputs) = load_observations(&a.dataset, None, &pool)?;
    let fits = if a.fits.is_empty() {
        fit_all(&obs, &cfg.scenario.models, cfg)?
    } else {
        read_fits(&a.fits, &mut inputs)?
    };
    let rep = run_scenario(&obs, &fits, &cfg.scenario.grid)?;
    out.write("scenario.csv", &report::scenario_csv(&rep))?;
    out.finish("scenario", recorded(a, cfg), inputs, None)
}

fn cmd_plot_data(a: &PlotArgs, cfg: &RunConfig, mut out: OutputDir) -> Result<Manifest> {
    if a.backtest.is_none() && a.fit.is_none() {
        return Err(AppError::Usage("plot-data needs --backtest, or --dataset with --fit".into()));
    }
    let mut plot = PlotData::default();
    let mut inputs = Vec::new();
    if let Some(dir) = &a.backtest {
        for (name, add) in [
            ("dm.csv", PlotData::dm_by_hour as fn(&mut PlotData, &Path) -> Result<()>),
            ("coefficients.csv", PlotData::coefficient_paths),
        ] {
            let path = dir.join(name);
            inputs.push(file_digest(&path)?);
            add(&mut plot, &path)?;
        }
    }
    if let (Some(dir), Some(fit_path)) = (&a.dataset, &a.fit) {
        let pool = parallel::thread_pool(cfg.jobs)?;
        let (obs, digests) = load_observations(dir, None, &pool)?;
        inputs.extend(digests);
        let fit = read_fits(std::slice::from_ref(fit_path), &mut inputs)?.remove(0);
        if fit.spec.id != ModelId::Nlm {
            return Err(AppError::Usage(format!("plot-data needs an nlm fit, got {}", fit.spec.id)));
        }
        plot.shift_decomposition(&fit, &obs)?;
        let hour = match &a.hour {
            Some(text) => {
                let ts = parse_timestamp(text).ok_or_else(|| AppError::Usage(format!("--hour `{text}` is not an RFC 3339 timestamp")))?;
                obs.iter()
                    .find(|o| o.timestamp == ts)
                    .ok_or_else(|| AppError::Usage(format!("hour {text} is not in the dataset")))?
            }
            None => obs.first().ok_or(meritshift_core::Error::EmptyInput)?,
        };
        let z = hour.z.as_array();
        plot.shift_scenarios(&fit, hour, &forecast_error_scenarios(a.magnitude, z[4], z[5]))?;
    }
    out.write("plot_data.csv", &plot.to_csv())?;
    out.finish("plot-data", recorded(a, cfg), inputs, None)
}
