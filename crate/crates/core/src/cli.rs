//! Command-line front end: single runs with trace/metrics output, and a
//! benchmark grid that tabulates iterations to relative-gap thresholds.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levels::{Adjustment, DEFAULT_GAMMA, DEFAULT_GAMMA_BAR};
use crate::problems::{parse_sizes, Family, ProblemInstance};
use crate::solver::{run_approximate, run_exact, Method, RunConfig, RunResult, StopReason};
use crate::types::{DenseVector, TraceRecord};

pub const METRICS_SCHEMA_VERSION: u32 = 1;
pub const BENCH_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.01, 0.005, 0.001];

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;

const THRESHOLD_HELP: &str =
    "Thresholds are relative gaps |best - f*| / |f*| with f* taken from the \
instance metadata; when |f*| < 1e-12 the absolute gap is used instead.";

#[derive(Parser, Debug)]
#[command(name = "psadla", version, about = "Level-adjusted Polyak subgradient methods", after_help = THRESHOLD_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run one method on one problem instance.
    Run(RunArgs),
    /// Run a grid of methods and problems from a JSON spec and tabulate
    /// iterations to each threshold.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Problem family for --generate: l1, gap or transport.
    #[arg(long)]
    problem: Option<String>,
    /// JSON instance or OR-Library GAP file.
    #[arg(long, conflicts_with = "generate")]
    instance_file: Option<PathBuf>,
    /// Sizes such as 500x100 (l1), 2x8 (gap), 4x6x3 or 4x6x3x2 (transport).
    #[arg(long)]
    generate: Option<String>,
    /// Write the generated or loaded instance as JSON.
    #[arg(long)]
    save_instance: Option<PathBuf>,
    /// psadla, sdd, path, diminishing or square-summable.
    #[arg(long, default_value = "psadla")]
    method: String,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA_BAR)]
    gamma_bar: f64,
    /// Initial level in the problem's own sense; required by psadla and sdd.
    #[arg(long, allow_hyphen_values = true)]
    level0: Option<f64>,
    /// zeros, const:<v> or uniform:<lo>:<hi>.
    #[arg(long, default_value = "zeros", allow_hyphen_values = true)]
    x0: String,
    #[arg(long, default_value_t = 1e-6)]
    stop_gap: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long)]
    time_limit_ms: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    check_every: usize,
    /// Margin by which an approximate value must clear the level.
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    /// Use the incremental oracle.
    #[arg(long)]
    approximate: bool,
    /// Rows (l1) or jobs per incremental group.
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    budget: Option<f64>,
    /// Scale `a` of the diminishing or square-summable schedule.
    #[arg(long)]
    step_a: Option<f64>,
    /// Offset `b` of the square-summable schedule.
    #[arg(long, default_value_t = 0.0)]
    step_b: f64,
    #[arg(long)]
    max_window: Option<usize>,
    /// Comma-separated relative-gap thresholds.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write zeros in the elapsed_ms column.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// JSON benchmark spec.
    spec: PathBuf,
    /// Table CSV path; overrides the spec's `output`.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    no_timing: bool,
}

/// Where a problem comes from in a benchmark spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRef {
    pub name: String,
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Instance file, resolved relative to the spec file.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

impl ProblemRef {
    pub fn resolve(&self, base: &Path) -> Result<ProblemInstance> {
        match (&self.file, self.family) {
            (Some(file), _) => ProblemInstance::load(&base.join(file)),
            (None, Some(family)) => ProblemInstance::generate(family, &self.sizes, self.seed),
            (None, None) => Err(Error::InvalidArgument(format!(
                "problem {:?} needs a file or a family",
                self.name
            ))),
        }
    }
}

/// One method configuration of a benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    #[serde(flatten)]
    pub method: Method,
    #[serde(default)]
    pub level0: Option<f64>,
    #[serde(default = "default_x0")]
    pub x0: String,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_gamma_bar")]
    pub gamma_bar: f64,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub stop_gap: Option<f64>,
    #[serde(default)]
    pub approximate: bool,
    #[serde(default)]
    pub group_size: Option<usize>,
}

fn default_x0() -> String {
    "zeros".into()
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_gamma_bar() -> f64 {
    DEFAULT_GAMMA_BAR
}

/// Every run is executed on every problem, rows ordered problem-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub schema_version: u32,
    pub problems: Vec<ProblemRef>,
    pub runs: Vec<BenchRun>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory for per-row trace CSVs.
    #[serde(default)]
    pub trace_dir: Option<PathBuf>,
}

fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}

fn default_max_iters() -> usize {
    1000
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != BENCH_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported bench schema_version {}",
                self.schema_version
            )));
        }
        if self.problems.is_empty() || self.runs.is_empty() {
            return Err(Error::InvalidArgument("benchmark spec has no rows".into()));
        }
        validate_thresholds(&self.thresholds)
    }
}

pub fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one threshold is required".into(),
        ));
    }
    if thresholds.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::InvalidArgument(
            "thresholds must lie in (0, 1)".into(),
        ));
    }
    if thresholds.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "thresholds must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// `|best − f*| / |f*|`, or the absolute gap when `|f*| < 1e-12`.
pub fn relative_gap(best: f64, fstar: f64) -> f64 {
    let gap = (best - fstar).abs();
    if fstar.abs() < 1e-12 {
        gap
    } else {
        gap / fstar.abs()
    }
}

/// First iteration whose best value is within each threshold of `fstar`.
pub fn threshold_iterations(
    trace: &[TraceRecord],
    fstar: f64,
    thresholds: &[f64],
) -> Vec<Option<usize>> {
    thresholds
        .iter()
        .map(|&t| {
            trace
                .iter()
                .find(|r| relative_gap(r.best_value, fstar) <= t)
                .map(|r| r.iter)
        })
        .collect()
}

/// `zeros`, `const:<v>` or `uniform:<lo>:<hi>` (seeded).
pub fn parse_x0(spec: &str, dim: usize, seed: u64) -> Result<DenseVector> {
    let bad = || Error::InvalidArgument(format!("bad x0 spec {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        ["zeros"] => Ok(DenseVector::zeros(dim)),
        ["const", v] => DenseVector::new(vec![num(v)?; dim]),
        ["uniform", lo, hi] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if !(lo < hi) {
                return Err(bad());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            DenseVector::new((0..dim).map(|_| rng.gen_range(lo..hi)).collect())
        }
        _ => Err(bad()),
    }
}

pub fn parse_method(
    name: &str,
    delta0: Option<f64>,
    budget: Option<f64>,
    step_a: Option<f64>,
    step_b: f64,
) -> Result<Method> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| Error::InvalidArgument(format!("method {name} requires --{flag}")))
    };
    match name {
        "psadla" => Ok(Method::Psadla),
        "sdd" => Ok(Method::SddLevel),
        "path" => Ok(Method::PathBased {
            delta0: need(delta0, "delta0")?,
            budget: need(budget, "budget")?,
        }),
        "diminishing" => Ok(Method::Diminishing {
            a: need(step_a, "step-a")?,
        }),
        "square-summable" => Ok(Method::SquareSummable {
            a: need(step_a, "step-a")?,
            b: step_b,
        }),
        _ => Err(Error::InvalidArgument(format!("unknown method {name:?}"))),
    }
}

/// Runs `config` on `problem` with the exact or incremental oracle.
pub fn execute(
    problem: &ProblemInstance,
    config: &RunConfig,
    approximate: bool,
    group_size: Option<usize>,
) -> Result<RunResult> {
    if approximate {
        let mut oracle = problem.approximate_oracle(group_size)?;
        run_approximate(&mut *oracle, config)
    } else {
        let mut oracle = problem.exact_oracle();
        run_exact(&mut *oracle, config)
    }
}

pub const TRACE_COLUMNS: [&str; 9] = [
    "iter",
    "value",
    "best_value",
    "level",
    "stepsize",
    "grad_norm_sq",
    "window_size",
    "triggered",
    "elapsed_ms",
];

/// Trace CSV; `level` is empty for rules without one.
pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRecord], no_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(TRACE_COLUMNS).map_err(io)?;
    for r in trace {
        let elapsed = if no_timing { 0.0 } else { r.elapsed_ms };
        w.write_record([
            r.iter.to_string(),
            r.value.to_string(),
            r.best_value.to_string(),
            r.level.map(|l| l.to_string()).unwrap_or_default(),
            r.stepsize.to_string(),
            r.grad_norm_sq.to_string(),
            r.window_size.to_string(),
            r.triggered.to_string(),
            elapsed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdHit {
    pub threshold: f64,
    pub iteration: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    pub family: Family,
    pub method: String,
    pub params: String,
    pub stop_reason: StopReason,
    pub diagnostic: Option<String>,
    pub iterations: usize,
    pub best_value: f64,
    pub final_level: Option<f64>,
    pub known_fstar: Option<f64>,
    pub adjustments: Vec<Adjustment>,
    pub thresholds: Vec<ThresholdHit>,
    pub work: f64,
    pub wall_time_ms: f64,
}

impl Metrics {
    pub fn new(
        problem: &ProblemInstance,
        config: &RunConfig,
        result: &RunResult,
        thresholds: &[f64],
        no_timing: bool,
    ) -> Self {
        let hits = match problem.known_fstar() {
            Some(f) => threshold_iterations(&result.trace, f, thresholds),
            None => vec![None; thresholds.len()],
        };
        let wall = if no_timing {
            0.0
        } else {
            result.trace.last().map_or(0.0, |r| r.elapsed_ms)
        };
        Metrics {
            schema_version: METRICS_SCHEMA_VERSION,
            family: problem.family(),
            method: config.method.label().to_string(),
            params: config.method.params_label(),
            stop_reason: result.stop_reason,
            diagnostic: result.diagnostic.clone(),
            iterations: result.iterations(),
            best_value: result.best_value,
            final_level: result.final_level,
            known_fstar: problem.known_fstar(),
            adjustments: result.adjustments.clone(),
            thresholds: thresholds
                .iter()
                .zip(hits)
                .map(|(&threshold, iteration)| ThresholdHit {
                    threshold,
                    iteration,
                })
                .collect(),
            work: result.work,
            wall_time_ms: wall,
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_problem(args: &RunArgs) -> Result<ProblemInstance> {
    match (&args.instance_file, &args.generate) {
        (Some(path), _) => ProblemInstance::load(path),
        (None, Some(sizes)) => {
            let family: Family = args
                .problem
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("--generate requires --problem".into()))?
                .parse()?;
            ProblemInstance::generate(family, &parse_sizes(sizes)?, args.seed)
        }
        (None, None) => Err(Error::InvalidArgument(
            "one of --instance-file or --generate is required".into(),
        )),
    }
}

fn build_config(args: &RunArgs, problem: &ProblemInstance) -> Result<RunConfig> {
    let method = parse_method(
        &args.method,
        args.delta0,
        args.budget,
        args.step_a,
        args.step_b,
    )?;
    let level0 = match (method, args.level0) {
        (_, Some(l)) => l,
        (Method::Psadla | Method::SddLevel, None) => {
            return Err(Error::InvalidArgument(format!(
                "method {} requires --level0",
                args.method
            )))
        }
        (_, None) => 0.0,
    };
    let x0 = parse_x0(&args.x0, problem.dim(), args.seed)?;
    let mut config = RunConfig::new(method, x0, level0);
    config.gamma = args.gamma;
    config.gamma_bar = args.gamma_bar;
    config.stop_gap = args.stop_gap;
    config.max_iters = args.max_iters;
    config.time_limit_ms = args.time_limit_ms;
    config.seed = args.seed;
    config.epsilon_cond = args.epsilon;
    config.check_every = args.check_every;
    config.max_window = args.max_window;
    config.validate()?;
    Ok(config)
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn run_command(args: &RunArgs) -> std::result::Result<i32, Failure> {
    let thresholds = args.thresholds.clone().unwrap_or_else(default_thresholds);
    validate_thresholds(&thresholds)?;
    let problem = load_problem(args)?;
    let config = build_config(args, &problem)?;
    if let Some(path) = &args.save_instance {
        problem.save(path)?;
    }
    let result = execute(&problem, &config, args.approximate, args.group_size)?;
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &result.trace, args.no_timing)?;
        write_atomic(path, &buf)?;
    }
    let metrics = Metrics::new(&problem, &config, &result, &thresholds, args.no_timing);
    if let Some(path) = &args.metrics {
        let json = serde_json::to_string_pretty(&metrics).map_err(Error::from)?;
        write_atomic(path, json.as_bytes())?;
    }
    println!(
        "{} on {:?}: stop={:?} iterations={} best={} level={}",
        metrics.method,
        metrics.family,
        result.stop_reason,
        result.iterations(),
        result.best_value,
        result
            .final_level
            .map_or_else(|| "-".to_string(), |l| l.to_string()),
    );
    if let Some(d) = &result.diagnostic {
        eprintln!("diagnostic: {d}");
    }
    Ok(if result.stop_reason.is_failure() {
        EXIT_CONTRACT
    } else {
        EXIT_OK
    })
}

/// One finished row of a benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub problem: String,
    pub method: String,
    pub params: String,
    pub x0: String,
    pub hits: Vec<Option<usize>>,
    pub stop_reason: Option<StopReason>,
    pub iterations: usize,
    pub best_value: Option<f64>,
    pub diagnostic: String,
    pub trace: Vec<TraceRecord>,
}

fn bench_row(
    spec: &BenchmarkSpec,
    problem_ref: &ProblemRef,
    problem: &Result<ProblemInstance>,
    run: &BenchRun,
) -> BenchRow {
    let mut row = BenchRow {
        problem: problem_ref.name.clone(),
        method: run.method.label().to_string(),
        params: run.method.params_label(),
        x0: run.x0.clone(),
        hits: vec![None; spec.thresholds.len()],
        stop_reason: None,
        iterations: 0,
        best_value: None,
        diagnostic: String::new(),
        trace: Vec::new(),
    };
    let outcome = (|| -> Result<RunResult> {
        let problem = problem.as_ref().map_err(Clone::clone)?;
        let level0 = match (run.method, run.level0) {
            (_, Some(l)) => l,
            (Method::Psadla | Method::SddLevel, None) => {
                return Err(Error::InvalidArgument("level0 is required".into()))
            }
            (_, None) => 0.0,
        };
        let x0 = parse_x0(&run.x0, problem.dim(), spec.seed)?;
        let mut config = RunConfig::new(run.method, x0, level0);
        config.gamma = run.gamma;
        config.gamma_bar = run.gamma_bar;
        config.max_iters = run.max_iters.unwrap_or(spec.max_iters);
        config.seed = spec.seed;
        if let Some(g) = run.stop_gap {
            config.stop_gap = g;
        }
        let result = execute(problem, &config, run.approximate, run.group_size)?;
        if let Some(f) = problem.known_fstar() {
            row.hits = threshold_iterations(&result.trace, f, &spec.thresholds);
        }
        Ok(result)
    })();
    match outcome {
        Ok(result) => {
            row.stop_reason = Some(result.stop_reason);
            row.iterations = result.iterations();
            row.best_value = Some(result.best_value);
            row.diagnostic = result.diagnostic.unwrap_or_default();
            row.trace = result.trace;
        }
        Err(e) => row.diagnostic = e.to_string(),
    }
    row
}

/// Executes every row (in parallel) and returns them in spec order.
pub fn run_bench(spec: &BenchmarkSpec, base: &Path) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    let problems: Vec<Result<ProblemInstance>> =
        spec.problems.iter().map(|p| p.resolve(base)).collect();
    let pairs: Vec<(usize, &BenchRun)> = (0..spec.problems.len())
        .flat_map(|p| spec.runs.iter().map(move |r| (p, r)))
        .collect();
    Ok(pairs
        .par_iter()
        .map(|&(p, run)| bench_row(spec, &spec.problems[p], &problems[p], run))
        .collect())
}

pub fn threshold_label(t: f64) -> String {
    format!("iters_to_{}%", t * 100.0)
}

pub fn write_bench_table<W: Write>(out: W, thresholds: &[f64], rows: &[BenchRow]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "problem".to_string(),
        "method".into(),
        "params".into(),
        "x0".into(),
    ];
    header.extend(thresholds.iter().map(|&t| threshold_label(t)));
    header.extend([
        "stop_reason".into(),
        "iterations".into(),
        "best_value".into(),
        "diagnostic".into(),
    ]);
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![
            r.problem.clone(),
            r.method.clone(),
            r.params.clone(),
            r.x0.clone(),
        ];
        rec.extend(
            r.hits
                .iter()
                .map(|h| h.map_or_else(|| "-".to_string(), |i| i.to_string())),
        );
        rec.push(r.stop_reason.map_or_else(
            || "error".to_string(),
            |s| {
                serde_json::to_value(s)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default()
            },
        ));
        rec.push(r.iterations.to_string());
        rec.push(r.best_value.map(|v| v.to_string()).unwrap_or_default());
        rec.push(r.diagnostic.clone());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn bench_command(args: &BenchArgs) -> std::result::Result<i32, Failure> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.spec.display())))?;
    let spec: BenchmarkSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    let base = args.spec.parent().unwrap_or(Path::new(".")).to_path_buf();
    let rows = run_bench(&spec, &base)?;
    if let Some(dir) = &spec.trace_dir {
        let dir = base.join(dir);
        fs::create_dir_all(&dir).map_err(|e| Error::Io(e.to_string()))?;
        for (i, row) in rows.iter().enumerate() {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &row.trace, args.no_timing)?;
            write_atomic(
                &dir.join(format!("row{i:03}_{}_{}.csv", row.problem, row.method)),
                &buf,
            )?;
        }
    }
    let mut buf = Vec::new();
    write_bench_table(&mut buf, &spec.thresholds, &rows)?;
    match args
        .table
        .clone()
        .or_else(|| spec.output.as_ref().map(|p| base.join(p)))
    {
        Some(path) => write_atomic(&path, &buf)?,
        None => std::io::stdout().write_all(&buf).map_err(Error::from)?,
    }
    Ok(EXIT_OK)
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Bench(args) => bench_command(args),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iter: usize, best: f64) -> TraceRecord {
        TraceRecord {
            iter,
            value: best,
            best_value: best,
            level: None,
            stepsize: 0.0,
            grad_norm_sq: 1.0,
            window_size: 0,
            triggered: false,
            elapsed_ms: 0.0,
        }
    }

    #[test]
    fn thresholds_validation() {
        assert!(validate_thresholds(&DEFAULT_THRESHOLDS).is_ok());
        assert!(validate_thresholds(&[0.01, 0.01]).is_err());
        assert!(validate_thresholds(&[0.001, 0.01]).is_err());
        assert!(validate_thresholds(&[1.5]).is_err());
        assert!(validate_thresholds(&[]).is_err());
    }

    #[test]
    fn threshold_hits_and_gap_fallback() {
        let trace = vec![record(0, 110.0), record(1, 100.8), record(2, 100.05)];
        assert_eq!(
            threshold_iterations(&trace, 100.0, &DEFAULT_THRESHOLDS),
            vec![Some(1), Some(2), Some(2)]
        );
        assert_eq!(relative_gap(0.004, 0.0), 0.004);
        let never = vec![record(0, 200.0)];
        assert_eq!(threshold_iterations(&never, 100.0, &[0.01]), vec![None]);
    }

    #[test]
    fn x0_specs() {
        assert_eq!(parse_x0("zeros", 2, 0).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(
            parse_x0("const:-1.5", 2, 0).unwrap().as_slice(),
            &[-1.5, -1.5]
        );
        let u = parse_x0("uniform:-10:10", 50, 3).unwrap();
        assert!(u.iter().all(|v| (-10.0..10.0).contains(v)));
        assert_eq!(u, parse_x0("uniform:-10:10", 50, 3).unwrap());
        assert!(parse_x0("uniform:1:1", 2, 0).is_err());
        assert!(parse_x0("ones", 2, 0).is_err());
    }

    #[test]
    fn dash_for_unreached_threshold() {
        let row = BenchRow {
            problem: "p".into(),
            method: "psadla".into(),
            params: String::new(),
            x0: "zeros".into(),
            hits: vec![Some(3), None],
            stop_reason: Some(StopReason::MaxIters),
            iterations: 10,
            best_value: Some(1.0),
            diagnostic: String::new(),
            trace: Vec::new(),
        };
        let mut buf = Vec::new();
        write_bench_table(&mut buf, &[0.01, 0.005], &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "problem,method,params,x0,iters_to_1%,iters_to_0.5%,stop_reason,iterations,best_value,diagnostic"
        );
        assert_eq!(lines.next().unwrap(), "p,psadla,,zeros,3,-,max_iters,10,1,");
    }

    #[test]
    fn method_parsing() {
        assert_eq!(
            parse_method("psadla", None, None, None, 0.0).unwrap(),
            Method::Psadla
        );
        assert!(parse_method("path", Some(1.0), None, None, 0.0).is_err());
        assert_eq!(
            parse_method("square-summable", None, None, Some(1e-3), 10.0).unwrap(),
            Method::SquareSummable { a: 1e-3, b: 10.0 }
        );
        assert!(parse_method("newton", None, None, None, 0.0).is_err());
    }
}
