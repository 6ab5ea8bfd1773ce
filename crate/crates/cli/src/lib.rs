// SPDX-License-Identifier: Apache-2.0

//! `rmtchannel` command line: curves of `α(t)`, the three non-Markovianity
//! measures and the fluctuation predictions, written as CSV (with a single
//! `#`-prefixed JSON metadata line) or JSON.
//!
//! Settings come from flags, then the `--config` file (flat TOML with the
//! flag names as keys), then per-command defaults. Exit codes: 0 success,
//! 2 configuration error, 3 numerical failure.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use rmtchannel::analytics::{self, AlphaCurve, CurveModel, Size, TimeGrid};
use rmtchannel::channel::{self, EnvironmentSpec, EnvironmentState, PauliTransferMatrix};
use rmtchannel::ensembles::{self, Spectrum};
use rmtchannel::fluctuations::{self, FluctuationKind};
use rmtchannel::measures::{self, M1Value, MeasureOptions};
use rmtchannel::{parallel, rng, special, stats};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const BUILD_ID: &str = match option_env!("RMTCHANNEL_BUILD_ID") {
    Some(id) => id,
    None => concat!("rmtchannel-", env!("CARGO_PKG_VERSION")),
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(#[from] rmtchannel::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

fn config_err(msg: impl fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "rmtchannel", version, about = "Qubit channels induced by random-matrix environments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Depolarizing radius α(t) for a model.
    Alpha(CommonArgs),
    /// Non-Markovianity measures M1, M2, M3.
    Measures(MeasuresArgs),
    /// Variances of the channel entries: exact, leading order, Monte Carlo.
    Fluctuations(FluctuationsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    GueExact,
    GueInfinite,
    Poisson,
    PoissonInfinite,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Environment initial state as given on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvChoice {
    Projector,
    Mixed,
    Rank(usize),
}

impl std::str::FromStr for EnvChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "projector" => Ok(EnvChoice::Projector),
            "mixed" | "maximally-mixed" => Ok(EnvChoice::Mixed),
            _ => s
                .strip_prefix("rank:")
                .and_then(|r| r.parse().ok())
                .map(EnvChoice::Rank)
                .ok_or_else(|| format!("expected projector, mixed or rank:<r>, got {s:?}")),
        }
    }
}

impl fmt::Display for EnvChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvChoice::Projector => write!(f, "projector"),
            EnvChoice::Mixed => write!(f, "mixed"),
            EnvChoice::Rank(r) => write!(f, "rank:{r}"),
        }
    }
}

impl EnvChoice {
    fn spec(self, dim: usize) -> Result<EnvironmentSpec, CliError> {
        let state = match self {
            EnvChoice::Projector => EnvironmentState::Projector,
            EnvChoice::Mixed => EnvironmentState::MaximallyMixed,
            EnvChoice::Rank(r) => EnvironmentState::Rank(r),
        };
        EnvironmentSpec::new(dim, state).map_err(config_err)
    }
}

pub fn parse_dim(s: &str) -> Result<Size, String> {
    match s {
        "inf" | "infinity" => Ok(Size::Infinite),
        _ => s.parse().map(Size::Finite).map_err(|_| format!("expected an integer or \"inf\", got {s:?}")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Hilbert-space dimension N (integer or "inf").
    #[arg(long, value_parser = parse_dim)]
    pub dim: Option<Size>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub t_step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Haar eigenvector draws for Monte Carlo.
    #[arg(long)]
    pub samples: Option<usize>,
    /// projector | mixed | rank:<r>
    #[arg(long)]
    pub env: Option<EnvChoice>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MeasuresArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reference grid: GUE and Poisson at N = 4, 8 and infinity.
    #[arg(long)]
    pub table: bool,
    /// Curve file (CSV with `t` and `value` columns) instead of a model.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FluctuationsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also report the variance over both eigenvectors and this many
    /// sampled spectra (0 = fixed spectrum only).
    #[arg(long)]
    pub spectra: Option<usize>,
}

/// Command-specific settings that can also come from the config file.
#[derive(Debug, Clone, Default)]
pub struct Extras {
    pub table: bool,
    pub input: Option<PathBuf>,
    pub spectra: Option<usize>,
}

/// Config file contents; every key is optional and mirrors a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    model: Option<Model>,
    dim: Option<DimValue>,
    t_start: Option<f64>,
    t_end: Option<f64>,
    t_step: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
    env: Option<String>,
    out: Option<PathBuf>,
    format: Option<Format>,
    workers: Option<usize>,
    table: Option<bool>,
    input: Option<PathBuf>,
    spectra: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DimValue {
    Int(usize),
    Text(String),
}

fn read_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Alpha,
    Measures,
    Fluctuations,
}

/// Effective configuration after merging flags, file and defaults; echoed
/// into every output.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub model: Model,
    #[serde(serialize_with = "serialize_size")]
    pub dim: Size,
    pub t_start: f64,
    pub t_end: f64,
    pub t_step: f64,
    pub seed: u64,
    pub samples: usize,
    #[serde(serialize_with = "serialize_display")]
    pub env: EnvChoice,
    pub format: Format,
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub table: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "is_zero")]
    pub spectra: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

fn serialize_size<S: serde::Serializer>(s: &Size, ser: S) -> Result<S::Ok, S::Error> {
    match s {
        Size::Finite(n) => ser.serialize_u64(*n as u64),
        Size::Infinite => ser.serialize_str("inf"),
    }
}

fn serialize_display<S: serde::Serializer, T: fmt::Display>(v: &T, ser: S) -> Result<S::Ok, S::Error> {
    ser.collect_str(v)
}

struct Defaults {
    dim: usize,
    grid: (f64, f64, f64),
    samples: usize,
}

fn defaults(command: CommandKind) -> Defaults {
    match command {
        CommandKind::Alpha => Defaults { dim: 4, grid: (0.0, 10.0, 0.01), samples: 100 },
        CommandKind::Measures => Defaults { dim: 4, grid: (0.0, 500.0, 0.005), samples: 0 },
        CommandKind::Fluctuations => Defaults { dim: 8, grid: (0.0, 20.0, 0.05), samples: 0 },
    }
}

impl ExperimentConfig {
    pub fn resolve(command: CommandKind, args: &CommonArgs, extras: &Extras) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let d = defaults(command);
        let model = args.model.or(file.model).unwrap_or(Model::GueExact);
        let dim = match (args.dim, file.dim) {
            (Some(s), _) => Some(s),
            (None, Some(DimValue::Int(n))) => Some(Size::Finite(n)),
            (None, Some(DimValue::Text(s))) => Some(parse_dim(&s).map_err(config_err)?),
            (None, None) => None,
        };
        let dim = match (model, dim) {
            (Model::GueInfinite | Model::PoissonInfinite, Some(Size::Finite(n))) => {
                return Err(config_err(format!("model {model:?} takes --dim inf, got {n}")));
            }
            (Model::GueInfinite | Model::PoissonInfinite, _) => Size::Infinite,
            (_, Some(s)) => s,
            (_, None) => Size::Finite(d.dim),
        };
        let env = match (args.env, &file.env) {
            (Some(e), _) => e,
            (None, Some(s)) => s.parse().map_err(config_err)?,
            (None, None) => EnvChoice::Projector,
        };
        let cfg = ExperimentConfig {
            command,
            model,
            dim,
            t_start: args.t_start.or(file.t_start).unwrap_or(d.grid.0),
            t_end: args.t_end.or(file.t_end).unwrap_or(d.grid.1),
            t_step: args.t_step.or(file.t_step).unwrap_or(d.grid.2),
            seed: args.seed.or(file.seed).unwrap_or(0),
            samples: args.samples.or(file.samples).unwrap_or(d.samples),
            env,
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            workers: args.workers.or(file.workers),
            table: extras.table || file.table.unwrap_or(false),
            input: extras.input.clone().or(file.input),
            spectra: extras.spectra.or(file.spectra).unwrap_or(0),
            out: args.out.clone().or(file.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        if self.workers == Some(0) {
            return Err(config_err("--workers must be at least 1"));
        }
        if let Size::Finite(n) = self.dim {
            if n < 2 {
                return Err(config_err(format!("--dim must be at least 2, got {n}")));
            }
        }
        let needs_channel = self.model == Model::MonteCarlo || (self.command == CommandKind::Fluctuations && self.samples > 0);
        if needs_channel {
            let n = self.finite_dim()?;
            if n % 2 != 0 {
                return Err(config_err(format!("qubit ⊗ environment needs an even --dim, got {n}")));
            }
            self.env.spec(n / 2)?;
        }
        match self.command {
            CommandKind::Alpha if self.model == Model::MonteCarlo && self.samples == 0 => {
                Err(config_err("monte-carlo needs --samples >= 1"))
            }
            CommandKind::Measures if self.model == Model::MonteCarlo && self.input.is_none() && !self.table => {
                Err(config_err("measures needs an analytic model or --input"))
            }
            CommandKind::Fluctuations => {
                if matches!(self.model, Model::GueInfinite | Model::PoissonInfinite) {
                    return Err(config_err("fluctuations need a finite spectrum model"));
                }
                if self.finite_dim()? < 4 {
                    return Err(config_err("fluctuation formulas need --dim >= 4"));
                }
                if self.spectra == 1 {
                    return Err(config_err("--spectra must be 0 or at least 2"));
                }
                if self.samples > 0 && self.samples < fluctuations::MIN_MC_SAMPLES {
                    return Err(config_err(format!("--samples must be 0 or at least {}", fluctuations::MIN_MC_SAMPLES)));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.t_start, self.t_end, self.t_step).map_err(config_err)
    }

    fn finite_dim(&self) -> Result<usize, CliError> {
        self.dim.finite().ok_or_else(|| config_err(format!("model {:?} needs a finite --dim", self.model)))
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or_else(|| v.to_string().into(), serde_json::Value::Number),
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

fn size_cell(s: Size) -> Cell {
    match s {
        Size::Finite(n) => Cell::Int(n as u64),
        Size::Infinite => Cell::Text("inf".into()),
    }
}

/// A rendered result: column names, rows and metadata.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: serde_json::Value,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = format!("# {}\n{}\n", self.metadata, self.columns.join(","));
                for row in &self.rows {
                    out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|r| self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect::<serde_json::Map<_, _>>().into())
                    .collect();
                let doc = serde_json::json!({ "metadata": self.metadata, "columns": self.columns, "rows": rows });
                format!("{doc:#}\n")
            }
        }
    }
}

fn metadata(cfg: &ExperimentConfig, workers: usize, extra: serde_json::Value) -> serde_json::Value {
    let mut m = serde_json::json!({ "build": BUILD_ID, "config": cfg, "workers": workers });
    if let (Some(obj), serde_json::Value::Object(more)) = (m.as_object_mut(), extra) {
        obj.extend(more);
    }
    m
}

/// Runs one command and returns its table together with the effective config.
pub fn run(cli: &Cli) -> Result<(ExperimentConfig, Table), CliError> {
    let cfg = match &cli.command {
        Command::Alpha(a) => ExperimentConfig::resolve(CommandKind::Alpha, a, &Extras::default())?,
        Command::Measures(m) => ExperimentConfig::resolve(
            CommandKind::Measures,
            &m.common,
            &Extras { table: m.table, input: m.input.clone(), ..Extras::default() },
        )?,
        Command::Fluctuations(f) => {
            ExperimentConfig::resolve(CommandKind::Fluctuations, &f.common, &Extras { spectra: f.spectra, ..Extras::default() })?
        }
    };
    let table = parallel::with_workers(cfg.workers, || {
        let workers = parallel::worker_count();
        match cfg.command {
            CommandKind::Alpha => cmd_alpha(&cfg, workers),
            CommandKind::Measures => cmd_measures(&cfg, workers),
            CommandKind::Fluctuations => cmd_fluctuations(&cfg, workers),
        }
    })?;
    Ok((cfg, table))
}

/// Parses `args`, runs, writes the output; returns the process exit code.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli).and_then(|(cfg, table)| write_output(&cfg, &table)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rmtchannel: {e}");
            e.exit_code()
        }
    }
}

fn write_output(cfg: &ExperimentConfig, table: &Table) -> Result<(), CliError> {
    let body = table.render(cfg.format);
    match &cfg.out {
        Some(p) => std::fs::write(p, body).map_err(|e| config_err(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(body.as_bytes()).map_err(|e| config_err(format!("stdout: {e}")))
        }
    }
}

fn analytic_curve(model: Model, dim: Size, grid: &TimeGrid) -> Result<AlphaCurve, CliError> {
    let curve = match (model, dim) {
        (Model::GueExact, Size::Finite(n)) => AlphaCurve::gue_exact(n, grid)?,
        (Model::GueExact | Model::GueInfinite, _) => AlphaCurve::gue_infinite(grid)?,
        (Model::Poisson | Model::PoissonInfinite, size) => AlphaCurve::poisson(size, grid)?,
        (Model::MonteCarlo, _) => return Err(config_err("monte-carlo is not an analytic model")),
    };
    Ok(curve)
}

/// GUE spectrum of the Monte Carlo model: eigenvalues of one sampled matrix.
fn gue_spectrum(n: usize, seed: u64) -> Result<Spectrum, CliError> {
    let h = ensembles::sample_gue(n, seed)?;
    Ok(ensembles::eigen_decompose(&h)?.0)
}

/// Haar draws use a stream family distinct from the spectrum's.
fn haar_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, 1)
}

fn cmd_alpha(cfg: &ExperimentConfig, workers: usize) -> Result<Table, CliError> {
    let grid = cfg.grid()?;
    if cfg.model != Model::MonteCarlo {
        let curve = analytic_curve(cfg.model, cfg.dim, &grid)?;
        let rows = curve.times().iter().zip(curve.values()).map(|(&t, &v)| vec![Cell::Num(t), Cell::Num(v)]).collect();
        return Ok(Table { columns: vec!["t".into(), "value".into()], rows, metadata: metadata(cfg, workers, serde_json::json!({})) });
    }
    let n = cfg.finite_dim()?;
    let env = cfg.env.spec(n / 2)?;
    let spec = gue_spectrum(n, cfg.seed)?;
    let times = grid.points();
    let draws = channel::sample_ptms(&spec, &env, &times, cfg.samples, haar_seed(cfg.seed))?;
    let averages = channel::reduce_draws(&draws, &times);
    let mut columns: Vec<String> = ["t", "value", "stderr", "alpha_spectrum"].map(String::from).to_vec();
    for j in 0..4 {
        for k in 0..4 {
            columns.push(format!("lambda_{j}{k}"));
            columns.push(format!("lambda_{j}{k}_se"));
        }
    }
    let diag = |p: &PauliTransferMatrix| (p.get(0, 0) + p.get(1, 1) + p.get(2, 2)) / 3.0;
    let mut rows = Vec::with_capacity(times.len());
    for (ti, &t) in times.iter().enumerate() {
        let per_draw: Vec<f64> = draws.iter().map(|d| diag(&d[ti])).collect();
        let se = if per_draw.len() > 1 { Cell::Num(stats::stderr(&per_draw)) } else { Cell::Empty };
        let mut row = vec![Cell::Num(t), Cell::Num(stats::mean(&per_draw)), se, Cell::Num(channel::alpha_from_spectrum(&spec, t)?)];
        for j in 0..4 {
            for k in 0..4 {
                row.push(Cell::Num(averages[ti].mean.get(j, k)));
                row.push(if per_draw.len() > 1 { Cell::Num(averages[ti].stderr[j][k]) } else { Cell::Empty });
            }
        }
        rows.push(row);
    }
    Ok(Table { columns, rows, metadata: metadata(cfg, workers, serde_json::json!({})) })
}

/// Curve from a CSV file with `t` and `value` columns (`#` lines skipped).
pub fn read_curve(path: &Path) -> Result<AlphaCurve, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| config_err(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| config_err(format!("{}: no {name:?} column", path.display())))
    };
    let (ti, vi) = (col("t")?, col("value")?);
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| config_err(format!("{}: bad number in data row {}", path.display(), line + 1)))
        };
        times.push(num(ti)?);
        values.push(num(vi)?);
    }
    AlphaCurve::new(times, values, CurveModel::External, None).map_err(config_err)
}

fn measure_row(model: &str, size: Option<Size>, curve: &AlphaCurve, opts: &MeasureOptions) -> Result<Vec<Cell>, CliError> {
    let r = measures::measure_all(curve, opts)?;
    let m1 = match r.m1 {
        M1Value::Finite(v) => Cell::Num(v),
        M1Value::Divergent => Cell::Text("inf".into()),
    };
    Ok(vec![
        Cell::Text(model.into()),
        size.map_or(Cell::Empty, size_cell),
        m1,
        Cell::Num(r.m2),
        Cell::Num(r.m3),
        Cell::Num(r.horizon),
        Cell::Num(r.tail_bound),
    ])
}

const TABLE_MODELS: [(Model, Size); 6] = [
    (Model::GueExact, Size::Finite(4)),
    (Model::GueExact, Size::Finite(8)),
    (Model::GueInfinite, Size::Infinite),
    (Model::Poisson, Size::Finite(4)),
    (Model::Poisson, Size::Finite(8)),
    (Model::PoissonInfinite, Size::Infinite),
];

fn model_name(m: Model) -> &'static str {
    match m {
        Model::GueExact => "gue-exact",
        Model::GueInfinite => "gue-infinite",
        Model::Poisson => "poisson",
        Model::PoissonInfinite => "poisson-infinite",
        Model::MonteCarlo => "monte-carlo",
    }
}

fn cmd_measures(cfg: &ExperimentConfig, workers: usize) -> Result<Table, CliError> {
    let opts = MeasureOptions::default();
    let columns = ["model", "N", "M1", "M2", "M3", "horizon", "tail_bound"].map(String::from).to_vec();
    let rows = if let Some(path) = &cfg.input {
        vec![measure_row("external", None, &read_curve(path)?, &opts)?]
    } else {
        let grid = cfg.grid()?;
        let models: Vec<(Model, Size)> = if cfg.table { TABLE_MODELS.to_vec() } else { vec![(cfg.model, cfg.dim)] };
        models
            .iter()
            .map(|&(m, s)| measure_row(model_name(m), Some(s), &analytic_curve(m, s, &grid)?, &opts))
            .collect::<Result<Vec<_>, _>>()?
    };
    let extra = serde_json::json!({ "tolerances": opts });
    Ok(Table { columns, rows, metadata: metadata(cfg, workers, extra) })
}

fn cmd_fluctuations(cfg: &ExperimentConfig, workers: usize) -> Result<Table, CliError> {
    let n = cfg.finite_dim()?;
    let times = cfg.grid()?.points();
    let poisson = cfg.model == Model::Poisson;
    let sample = |seed: u64| if poisson { Ok(ensembles::sample_poisson_spectrum(n, seed)?) } else { gue_spectrum(n, seed) };
    let spec = sample(cfg.seed)?;
    let h: fn(f64) -> f64 = if poisson { |t| special::sinc(2.0 * t) } else { analytics::b1_infinite };
    let mc = if cfg.samples > 0 {
        let env = cfg.env.spec(n / 2)?;
        Some(fluctuations::monte_carlo_fluctuations(&spec, &env, &times, cfg.samples, haar_seed(cfg.seed))?)
    } else {
        None
    };
    let mut columns = ["t", "kind", "sigma2_exact", "sigma2_leading"].map(String::from).to_vec();
    if mc.is_some() {
        columns.extend(["sigma2_mc", "mc_stderr"].map(String::from));
    }
    if cfg.spectra > 0 {
        columns.push("sigma2_ensemble".into());
    }
    // spectrum i of the ensemble average uses its own stream family
    let ensemble_sampler = |i: usize| -> rmtchannel::Result<Spectrum> {
        let seed = rng::derive_seed(rng::derive_seed(cfg.seed, 2), i as u64);
        sample(seed).map_err(|e| match e {
            CliError::Numeric(e) => e,
            CliError::Config(m) => rmtchannel::Error::InvalidArgument(m),
        })
    };
    let real = |x: f64| Complex64::new(x, 0.0);
    let mut rows = Vec::with_capacity(3 * times.len());
    for (ti, &t) in times.iter().enumerate() {
        let exact = fluctuations::exact_for_spectrum(&spec, t)?;
        for kind in FluctuationKind::ALL {
            let e = exact.iter().find(|p| p.kind == kind).expect("all classes predicted");
            let lead = fluctuations::sigma2_leading(t, kind, real(h(t)), real(h(2.0 * t)), n)?;
            let mut row = vec![Cell::Num(t), Cell::Text(kind.name().into()), Cell::Num(e.variance), Cell::Num(lead.variance)];
            if let Some(mc) = &mc {
                let c = mc[ti].class(kind);
                row.extend([Cell::Num(c.variance), Cell::Num(c.variance_stderr)]);
            }
            if cfg.spectra > 0 {
                row.push(Cell::Num(fluctuations::ensemble_sigma2(kind, t, cfg.spectra, ensemble_sampler)?));
            }
            rows.push(row);
        }
    }
    Ok(Table { columns, rows, metadata: metadata(cfg, workers, serde_json::json!({})) })
}
