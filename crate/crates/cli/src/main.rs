use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dnm::rolling::{observation_values, write_forecast_csv, ForecastRow};
use dnm::*;

/// Forecast multivariate time series with dynamic network models.
#[derive(Parser, Debug)]
#[command(name = "dnm", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Inference engine.
    #[arg(long, value_enum, default_value_t = Engine::Exact, global = true)]
    inference: Engine,
    /// Samples per query for approximate inference.
    #[arg(long, default_value_t = 10_000, global = true)]
    samples: usize,
    /// Seed for approximate inference.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Write log output to this file instead of stderr.
    #[arg(long, global = true)]
    log: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Exact,
    Approx,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Update {
    Dls,
    Off,
}

impl From<Update> for UpdateMode {
    fn from(u: Update) -> Self {
        match u {
            Update::Dls => UpdateMode::Dls,
            Update::Off => UpdateMode::Off,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Binning {
    Quantile,
    EqualWidth,
}

impl From<Binning> for BinMethod {
    fn from(b: Binning) -> Self {
        match b {
            Binning::Quantile => BinMethod::Quantile,
            Binning::EqualWidth => BinMethod::EqualWidth,
        }
    }
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV with a header row; a column named `t` is taken as the time stamp.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated columns holding category labels.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit bin boundaries and representative values for every column.
    Discretize {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = Binning::Quantile)]
        method: Binning,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn structure and tables from data and write a model file.
    Learn {
        #[command(flatten)]
        data: DataArgs,
        /// Markov order: the largest lag a parent may have.
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = Binning::Quantile)]
        method: Binning,
        #[arg(long, default_value_t = 3)]
        max_parents: usize,
        /// Variable ordering for same-slice arcs; defaults to column order.
        #[arg(long, value_delimiter = ',')]
        ordering: Vec<String>,
        /// Dirichlet pseudo-count added to every table cell.
        #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
        smoothing: f64,
        /// Use this topology instead of searching for one.
        #[arg(long)]
        structure: Option<PathBuf>,
        /// Learn from rows before this index only.
        #[arg(long)]
        train_end: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forecast `horizon` steps ahead from one origin.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Origin row; history up to and including it is observed.
        #[arg(long)]
        from: usize,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        /// With `dls`, α is first adapted over every earlier origin.
        #[arg(long, value_enum, default_value_t = Update::Off)]
        update: Update,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rolling-origin evaluation with optional online α adaptation.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        train_end: usize,
        /// Origins as `a:b`, half-open.
        #[arg(long, value_parser = parse_range)]
        range: Range<usize>,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = Update::Dls)]
        update: Update,
        #[arg(long)]
        theta: Option<f64>,
        /// Metrics report (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Forecast table (CSV).
        #[arg(long)]
        forecasts: Option<PathBuf>,
        /// α update log (JSON).
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Save the model with its final α state.
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> std::result::Result<Range<usize>, String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if a >= b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok(a..b)
}

impl Common {
    fn method(&self) -> InferenceMethod {
        match self.inference {
            Engine::Exact => InferenceMethod::Exact,
            Engine::Approx => InferenceMethod::Approximate {
                samples: self.samples,
                seed: self.seed,
            },
        }
    }
}

fn init_logging(path: Option<&Path>) -> Result<()> {
    let mut builder = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    if let Some(path) = path {
        let file = File::create(path).with_context(|| format!("creating log file {}", path.display()))?;
        builder.target(env_logger::Target::Pipe(Box::new(file)));
    }
    builder.try_init().context("initializing logger")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_table(data: &DataArgs) -> Result<TimeSeriesTable> {
    let schema = Schema::Infer {
        categorical: data.categorical.clone(),
    };
    load_csv_path(&data.data, &schema).with_context(|| format!("loading {}", data.data.display()))
}

/// Loads a data file with the columns and codings a saved model expects.
fn load_for_model(model: &SavedModel, data: &DataArgs) -> Result<(TimeSeriesTable, DiscreteSeries)> {
    let codings = model
        .codings
        .as_ref()
        .context("model file has no column codings, so raw data cannot be encoded")?;
    let schema = Schema::Explicit(
        codings
            .iter()
            .map(|c| match c {
                ColumnCoding::Binned { name, .. } => ColumnSchema::continuous(name.as_str()),
                ColumnCoding::Categorical { name, .. } => ColumnSchema::categorical(name.as_str()),
            })
            .collect(),
    );
    let table = load_csv_path(&data.data, &schema).with_context(|| format!("loading {}", data.data.display()))?;
    let series = encode(&table, codings)?;
    Ok((table, series))
}

fn load_saved(path: &Path, theta: Option<f64>) -> Result<SavedModel> {
    let mut model = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
    if let Some(theta) = theta {
        model.alpha = AlphaState::from_entries(model.alpha.entries().to_vec(), theta)?;
    }
    Ok(model)
}

fn discretize_cmd(data: &DataArgs, bins: usize, method: Binning, out: &Path) -> Result<()> {
    let table = load_table(data)?;
    let codings = fit_codings(&table, bins, method.into())?;
    for c in &codings {
        log::info!("{}: {} states", c.name(), c.cardinality());
    }
    write_json(out, &codings)
}

#[allow(clippy::too_many_arguments)]
fn learn_cmd(
    data: &DataArgs,
    order: usize,
    bins: usize,
    method: Binning,
    max_parents: usize,
    ordering: &[String],
    smoothing: f64,
    structure: Option<&Path>,
    train_end: Option<usize>,
    theta: f64,
    out: &Path,
) -> Result<()> {
    let mut table = load_table(data)?;
    if let Some(end) = train_end {
        ensure!(end <= table.len(), "--train-end {end} is past the {} data rows", table.len());
        table = table.slice(0..end);
    }
    let codings = fit_codings(&table, bins, method.into())?;
    let series = encode(&table, &codings)?;

    let structure = match structure {
        Some(path) => {
            let spec = StructureSpec::load(path).with_context(|| format!("loading structure {}", path.display()))?;
            spec.resolve(series.variables().to_vec())?
        }
        None => {
            let names: Vec<&str> = series.variables().iter().map(|v| v.name.as_str()).collect();
            let order_idx: Vec<usize> = if ordering.is_empty() {
                (0..names.len()).collect()
            } else {
                ordering
                    .iter()
                    .map(|n| names.iter().position(|m| m == n).with_context(|| format!("unknown variable {n} in --ordering")))
                    .collect::<Result<_>>()?
            };
            let windows = build_windows(&series, order)?;
            learn_structure(&windows, &order_idx, max_parents)?
        }
    };
    let windows = build_windows(&series, structure.order())?;
    log::info!(
        "{} records ({} complete), {} arcs",
        windows.records().len(),
        windows.records().iter().filter(|r| r.complete).count(),
        structure.arcs().len()
    );
    let dnm = estimate_cpds(&structure, &windows, smoothing)?
        .with_representative_values(codings.iter().map(ColumnCoding::representative_values).collect())?;
    let alpha = AlphaState::for_model(&dnm, theta)?;
    save_model(
        out,
        &SavedModel {
            dnm,
            alpha,
            codings: Some(codings),
        },
    )?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn forecast_cmd(
    common: &Common,
    model: &Path,
    data: &DataArgs,
    from: usize,
    horizon: usize,
    update: Update,
    theta: Option<f64>,
    out: &Path,
) -> Result<()> {
    ensure!(horizon > 0, "--horizon must be at least 1");
    let saved = load_saved(model, theta)?;
    let (table, series) = load_for_model(&saved, data)?;
    ensure!(from < series.len(), "--from {from} is past the {} data rows", series.len());
    let l = saved.dnm.window_len();
    if from + 1 < l {
        bail!("--from {from} leaves fewer than {l} history rows");
    }

    let mut state = saved.alpha.clone();
    let first = l.saturating_sub(1);
    if update == Update::Dls && from > first {
        let values = observation_values(&table, &series)?;
        let opts = RollingOptions {
            train_end: first,
            range: first..from,
            horizon: 1,
            update: UpdateMode::Dls,
            method: common.method(),
        };
        state = rolling_forecast_evaluate(&saved.dnm, &series, &values, state, &opts)?.final_state;
        log::info!("adapted α over {} origins: {:?}", from - first, state.alphas());
    }

    let dnm = state.apply(&saved.dnm);
    let fc = k_step_forecast(&dnm, &series.window(from, l)?, horizon, common.method())?;
    let rows: Vec<ForecastRow> = fc
        .steps
        .iter()
        .flat_map(|set| {
            dnm.variables().iter().enumerate().map(move |(v, var)| ForecastRow {
                t: from,
                step: set.step,
                variable: var.name.clone(),
                expected: set.expected[v],
                distribution: set.distributions[v].clone(),
            })
        })
        .collect();
    let mut w = create(out)?;
    write_forecast_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cmd(
    common: &Common,
    model: &Path,
    data: &DataArgs,
    train_end: usize,
    range: Range<usize>,
    horizon: usize,
    update: Update,
    theta: Option<f64>,
    out: &Path,
    forecasts: Option<&Path>,
    audit: Option<&Path>,
    save: Option<&Path>,
) -> Result<()> {
    let saved = load_saved(model, theta)?;
    let (table, series) = load_for_model(&saved, data)?;
    let values = observation_values(&table, &series)?;
    let opts = RollingOptions {
        train_end,
        range,
        horizon,
        update: update.into(),
        method: common.method(),
    };
    let result = rolling_forecast_evaluate(&saved.dnm, &series, &values, saved.alpha.clone(), &opts)?;
    for r in result.report.reports.iter().filter(|r| r.step == 1) {
        match &r.metrics {
            VariableMetrics::Continuous { mape: Some(m), .. } => log::info!("{} one-step MAPE {:.4}", r.variable, m),
            VariableMetrics::Categorical { accuracy: Some(a), .. } => log::info!("{} one-step accuracy {:.4}", r.variable, a),
            _ => {}
        }
    }

    write_json(out, &result.report)?;
    if let Some(path) = forecasts {
        let mut w = create(path)?;
        write_forecast_csv(&result.forecasts, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = audit {
        write_json(path, &result.audit)?;
    }
    if let Some(path) = save {
        save_model(
            path,
            &SavedModel {
                dnm: result.final_state.apply(&saved.dnm),
                alpha: result.final_state,
                codings: saved.codings,
            },
        )?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_logging(cli.common.log.as_deref())?;
    let common = &cli.common;
    match &cli.command {
        Command::Discretize { data, bins, method, out } => discretize_cmd(data, *bins, *method, out),
        Command::Learn {
            data,
            order,
            bins,
            method,
            max_parents,
            ordering,
            smoothing,
            structure,
            train_end,
            theta,
            out,
        } => learn_cmd(
            data,
            *order,
            *bins,
            *method,
            *max_parents,
            ordering,
            *smoothing,
            structure.as_deref(),
            *train_end,
            *theta,
            out,
        ),
        Command::Forecast {
            model,
            data,
            from,
            horizon,
            update,
            theta,
            out,
        } => forecast_cmd(common, model, data, *from, *horizon, *update, *theta, out),
        Command::Evaluate {
            model,
            data,
            train_end,
            range,
            horizon,
            update,
            theta,
            out,
            forecasts,
            audit,
            save,
        } => evaluate_cmd(
            common,
            model,
            data,
            *train_end,
            range.clone(),
            *horizon,
            *update,
            *theta,
            out,
            forecasts.as_deref(),
            audit.as_deref(),
            save.as_deref(),
        ),
    }
}
