//! C ABI over the `psadla` crate.
//!
//! Problems and runs are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`PsadlaStatus`]; on failure a
//! description is available from [`psadla_last_error_message`] on the same
//! thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use psadla::cli::execute;
use psadla::linfeas::{check_feasible, Cut, FeasibilityVerdict};
use psadla::problems::{parse_gap_orlib, Family, ProblemInstance};
use psadla::solver::{Method, RunConfig, RunResult, StopReason};
use psadla::{DenseVector, Error, FeasibleRegion};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsadlaStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    NonFinite = 3,
    SolverFailure = 4,
    ContractViolation = 5,
    WindowLimit = 6,
    ParseError = 7,
    IoError = 8,
    NullPointer = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsadlaFamily {
    L1 = 0,
    Gap = 1,
    Transport = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsadlaMethod {
    Psadla = 0,
    Sdd = 1,
    /// `param_a` = initial offset, `param_b` = path budget.
    PathBased = 2,
    /// Step `param_a / sqrt(k)`.
    Diminishing = 3,
    /// Step `param_a / (k + param_b)`.
    SquareSummable = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsadlaStopReason {
    GapMet = 0,
    MaxIters = 1,
    TimeLimit = 2,
    ZeroGradient = 3,
    ContractViolation = 4,
    StepUnderflow = 5,
    WindowLimit = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsadlaDomain {
    Unconstrained = 0,
    NonNegative = 1,
}

/// Run parameters. Obtain defaults from [`psadla_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsadlaConfig {
    pub method: PsadlaMethod,
    pub gamma: f64,
    pub gamma_bar: f64,
    /// Initial level in the problem's own sense.
    pub initial_level: f64,
    pub stop_gap: f64,
    pub max_iters: usize,
    /// Non-positive means no limit.
    pub time_limit_ms: f64,
    pub epsilon: f64,
    pub check_every: usize,
    pub tol_feas: f64,
    /// Zero means unlimited.
    pub max_window: usize,
    pub param_a: f64,
    pub param_b: f64,
    /// Nonzero selects the incremental oracle.
    pub approximate: c_int,
    /// Zero selects the family default.
    pub group_size: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsadlaTraceRecord {
    pub iter: usize,
    pub value: f64,
    pub best_value: f64,
    /// Meaningful only when `has_level` is nonzero.
    pub level: f64,
    pub has_level: c_int,
    pub stepsize: f64,
    pub grad_norm_sq: f64,
    pub window_size: usize,
    pub triggered: c_int,
    pub elapsed_ms: f64,
}

pub struct PsadlaProblem {
    inner: ProblemInstance,
}

pub struct PsadlaRun {
    inner: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PsadlaStatus {
    match err {
        Error::InvalidArgument(_) => PsadlaStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => PsadlaStatus::DimensionMismatch,
        Error::NonFinite(_) => PsadlaStatus::NonFinite,
        Error::SolverFailure(_) => PsadlaStatus::SolverFailure,
        Error::ContractViolation(_) => PsadlaStatus::ContractViolation,
        Error::WindowLimit { .. } => PsadlaStatus::WindowLimit,
        Error::Parse { .. } => PsadlaStatus::ParseError,
        Error::Io(_) => PsadlaStatus::IoError,
    }
}

struct Fail(PsadlaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PsadlaStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(body: F) -> PsadlaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PsadlaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PsadlaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            PsadlaStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn problem_ref<'a>(p: *const PsadlaProblem) -> Result<&'a ProblemInstance, Fail> {
    p.as_ref().map(|p| &p.inner).ok_or_else(|| null("problem"))
}

unsafe fn run_ref<'a>(r: *const PsadlaRun) -> Result<&'a RunResult, Fail> {
    r.as_ref().map(|r| &r.inner).ok_or_else(|| null("run"))
}

fn boxed_problem(inner: ProblemInstance) -> *mut PsadlaProblem {
    Box::into_raw(Box::new(PsadlaProblem { inner }))
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn psadla_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_config_default(out: *mut PsadlaConfig) -> PsadlaStatus {
    guard(|| {
        let d = RunConfig::new(Method::Psadla, DenseVector::zeros(1), 0.0);
        let cfg = PsadlaConfig {
            method: PsadlaMethod::Psadla,
            gamma: d.gamma,
            gamma_bar: d.gamma_bar,
            initial_level: 0.0,
            stop_gap: d.stop_gap,
            max_iters: d.max_iters,
            time_limit_ms: 0.0,
            epsilon: d.epsilon_cond,
            check_every: d.check_every,
            tol_feas: d.tol_feas,
            max_window: 0,
            param_a: 0.0,
            param_b: 0.0,
            approximate: 0,
            group_size: 0,
        };
        write_out(out, cfg, "out")
    })
}

/// Seeded instance. `sizes` as for the command line: rows and columns (l1),
/// machines and jobs (gap), machines, jobs, operations and optional group
/// size (transport).
///
/// # Safety
/// `sizes` must point to `n_sizes` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_generate(
    family: PsadlaFamily,
    sizes: *const usize,
    n_sizes: usize,
    seed: u64,
    out: *mut *mut PsadlaProblem,
) -> PsadlaStatus {
    guard(|| {
        let sizes = slice_arg(sizes, n_sizes, "sizes")?;
        let family = match family {
            PsadlaFamily::L1 => Family::L1,
            PsadlaFamily::Gap => Family::Gap,
            PsadlaFamily::Transport => Family::Transport,
        };
        let inner = ProblemInstance::generate(family, sizes, seed)?;
        write_out(out, boxed_problem(inner), "out")
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_from_json(
    json: *const c_char,
    out: *mut *mut PsadlaProblem,
) -> PsadlaStatus {
    guard(|| {
        let inner = ProblemInstance::from_json(str_arg(json, "json")?)?;
        write_out(out, boxed_problem(inner), "out")
    })
}

/// OR-Library GAP text. `name` may be null; a known name attaches its
/// reference value.
///
/// # Safety
/// `text` and a non-null `name` must be NUL-terminated; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_parse_orlib(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut PsadlaProblem,
) -> PsadlaStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let name = if name.is_null() {
            None
        } else {
            Some(str_arg(name, "name")?)
        };
        let inner = ProblemInstance::Gap(parse_gap_orlib(text, name)?);
        write_out(out, boxed_problem(inner), "out")
    })
}

/// JSON text of the instance, released with [`psadla_string_free`].
///
/// # Safety
/// `problem` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_to_json(
    problem: *const PsadlaProblem,
    out: *mut *mut c_char,
) -> PsadlaStatus {
    guard(|| {
        let json = problem_ref(problem)?.to_json()?;
        let c =
            CString::new(json).map_err(|e| Fail(PsadlaStatus::InvalidArgument, e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn psadla_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `problem` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_dim(
    problem: *const PsadlaProblem,
    out: *mut usize,
) -> PsadlaStatus {
    guard(|| write_out(out, problem_ref(problem)?.dim(), "out"))
}

/// Nonzero when the problem is a maximization.
///
/// # Safety
/// `problem` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_is_maximization(
    problem: *const PsadlaProblem,
    out: *mut c_int,
) -> PsadlaStatus {
    guard(|| {
        let max = problem_ref(problem)?.sense() == psadla::Sense::Maximize;
        write_out(out, c_int::from(max), "out")
    })
}

/// # Safety
/// `problem` must be a live handle; `value` and `has_value` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_known_fstar(
    problem: *const PsadlaProblem,
    value: *mut f64,
    has_value: *mut c_int,
) -> PsadlaStatus {
    guard(|| {
        let f = problem_ref(problem)?.known_fstar();
        write_out(value, f.unwrap_or(f64::NAN), "value")?;
        write_out(has_value, c_int::from(f.is_some()), "has_value")
    })
}

/// Exact value and (super)gradient at `x`, in the problem's own sense.
///
/// # Safety
/// `x` and `gradient` must hold `n` values; `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_evaluate(
    problem: *const PsadlaProblem,
    x: *const f64,
    n: usize,
    value: *mut f64,
    gradient: *mut f64,
) -> PsadlaStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        if n != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: n,
            }
            .into());
        }
        let x = DenseVector::new(slice_arg(x, n, "x")?.to_vec())?;
        if gradient.is_null() {
            return Err(null("gradient"));
        }
        let report = p.exact_oracle().evaluate(&x)?;
        write_out(value, report.value, "value")?;
        slice::from_raw_parts_mut(gradient, n).copy_from_slice(report.gradient.as_slice());
        Ok(())
    })
}

/// # Safety
/// `problem` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn psadla_problem_free(problem: *mut PsadlaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn method_of(cfg: &PsadlaConfig) -> Method {
    match cfg.method {
        PsadlaMethod::Psadla => Method::Psadla,
        PsadlaMethod::Sdd => Method::SddLevel,
        PsadlaMethod::PathBased => Method::PathBased {
            delta0: cfg.param_a,
            budget: cfg.param_b,
        },
        PsadlaMethod::Diminishing => Method::Diminishing { a: cfg.param_a },
        PsadlaMethod::SquareSummable => Method::SquareSummable {
            a: cfg.param_a,
            b: cfg.param_b,
        },
    }
}

/// Runs the configured method from `x0`. A run that stops on a broken
/// precondition still returns a handle; inspect its stop reason.
///
/// # Safety
/// `problem` must be a live handle, `config` valid, `x0` must hold `n`
/// values and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_solve(
    problem: *const PsadlaProblem,
    config: *const PsadlaConfig,
    x0: *const f64,
    n: usize,
    out: *mut *mut PsadlaRun,
) -> PsadlaStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let x0 = DenseVector::new(slice_arg(x0, n, "x0")?.to_vec())?;
        if x0.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: x0.dim(),
            }
            .into());
        }
        let mut rc = RunConfig::new(method_of(cfg), x0, cfg.initial_level);
        rc.gamma = cfg.gamma;
        rc.gamma_bar = cfg.gamma_bar;
        rc.stop_gap = cfg.stop_gap;
        rc.max_iters = cfg.max_iters;
        rc.time_limit_ms = (cfg.time_limit_ms > 0.0).then_some(cfg.time_limit_ms);
        rc.epsilon_cond = cfg.epsilon;
        rc.check_every = cfg.check_every;
        rc.tol_feas = cfg.tol_feas;
        rc.max_window = (cfg.max_window > 0).then_some(cfg.max_window);
        let group = (cfg.group_size > 0).then_some(cfg.group_size);
        let result = execute(p, &rc, cfg.approximate != 0, group)?;
        write_out(
            out,
            Box::into_raw(Box::new(PsadlaRun { inner: result })),
            "out",
        )
    })
}

/// Number of recorded iterations, 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_iterations(run: *const PsadlaRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.iterations())
}

/// # Safety
/// `run` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_stop_reason(
    run: *const PsadlaRun,
    out: *mut PsadlaStopReason,
) -> PsadlaStatus {
    guard(|| {
        let reason = match run_ref(run)?.stop_reason {
            StopReason::GapMet => PsadlaStopReason::GapMet,
            StopReason::MaxIters => PsadlaStopReason::MaxIters,
            StopReason::TimeLimit => PsadlaStopReason::TimeLimit,
            StopReason::ZeroGradient => PsadlaStopReason::ZeroGradient,
            StopReason::ContractViolation => PsadlaStopReason::ContractViolation,
            StopReason::StepUnderflow => PsadlaStopReason::StepUnderflow,
            StopReason::WindowLimit => PsadlaStopReason::WindowLimit,
        };
        write_out(out, reason, "out")
    })
}

/// # Safety
/// `run` must be a live handle; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_summary(
    run: *const PsadlaRun,
    best_value: *mut f64,
    final_level: *mut f64,
    has_level: *mut c_int,
) -> PsadlaStatus {
    guard(|| {
        let r = run_ref(run)?;
        write_out(best_value, r.best_value, "best_value")?;
        write_out(
            final_level,
            r.final_level.unwrap_or(f64::NAN),
            "final_level",
        )?;
        write_out(has_level, c_int::from(r.final_level.is_some()), "has_level")
    })
}

/// # Safety
/// `run` must be a live handle; `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_best_point(
    run: *const PsadlaRun,
    out: *mut f64,
    n: usize,
) -> PsadlaStatus {
    guard(|| {
        let r = run_ref(run)?;
        let point = r.best_point.as_slice();
        if n != point.len() {
            return Err(Error::DimensionMismatch {
                expected: point.len(),
                found: n,
            }
            .into());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, n).copy_from_slice(point);
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_trace_record(
    run: *const PsadlaRun,
    index: usize,
    out: *mut PsadlaTraceRecord,
) -> PsadlaStatus {
    guard(|| {
        let r = run_ref(run)?;
        write_out(out, trace_record(r, index)?, "out")
    })
}

fn trace_record(run: &RunResult, index: usize) -> Result<PsadlaTraceRecord, Fail> {
    let t = run.trace.get(index).ok_or_else(|| {
        Fail(
            PsadlaStatus::InvalidArgument,
            format!(
                "trace index {index} out of range ({} records)",
                run.trace.len()
            ),
        )
    })?;
    Ok(PsadlaTraceRecord {
        iter: t.iter,
        value: t.value,
        best_value: t.best_value,
        level: t.level.unwrap_or(f64::NAN),
        has_level: c_int::from(t.level.is_some()),
        stepsize: t.stepsize,
        grad_norm_sq: t.grad_norm_sq,
        window_size: t.window_size,
        triggered: c_int::from(t.triggered),
        elapsed_ms: t.elapsed_ms,
    })
}

/// Number of level adjustments, 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_adjustment_count(run: *const PsadlaRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.adjustments.len())
}

/// # Safety
/// `run` must be a live handle; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_adjustment(
    run: *const PsadlaRun,
    index: usize,
    iter: *mut usize,
    old_level: *mut f64,
    new_level: *mut f64,
) -> PsadlaStatus {
    guard(|| {
        let r = run_ref(run)?;
        let a = r.adjustments.get(index).ok_or_else(|| {
            Fail(
                PsadlaStatus::InvalidArgument,
                format!("adjustment index {index} out of range"),
            )
        })?;
        write_out(iter, a.iter, "iter")?;
        write_out(old_level, a.old_level, "old_level")?;
        write_out(new_level, a.new_level, "new_level")
    })
}

/// # Safety
/// `run` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn psadla_run_free(run: *mut PsadlaRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Decides whether `normals · x <= rhs` (row-major `k × n`) has a point in
/// the domain. `witness` may be null; otherwise it receives `n` values when
/// the system is feasible.
///
/// # Safety
/// `normals` must hold `k * n` values, `rhs` `k` values; outputs must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psadla_check_feasible(
    normals: *const f64,
    rhs: *const f64,
    k: usize,
    n: usize,
    domain: PsadlaDomain,
    tol_feas: f64,
    feasible: *mut c_int,
    witness: *mut f64,
) -> PsadlaStatus {
    guard(|| {
        if n == 0 {
            return Err(Fail(
                PsadlaStatus::InvalidArgument,
                "dimension must be positive".into(),
            ));
        }
        let normals = slice_arg(normals, k * n, "normals")?;
        let rhs = slice_arg(rhs, k, "rhs")?;
        let cuts = normals
            .chunks(n)
            .zip(rhs)
            .map(|(row, &r)| Cut::new(DenseVector::new(row.to_vec())?, r))
            .collect::<psadla::Result<Vec<_>>>()?;
        let region = match domain {
            PsadlaDomain::Unconstrained => FeasibleRegion::Unconstrained,
            PsadlaDomain::NonNegative => FeasibleRegion::NonNegativeOrthant,
        };
        let verdict = if cuts.is_empty() {
            FeasibilityVerdict::Feasible(psadla::project(&DenseVector::zeros(n), &region)?)
        } else {
            check_feasible(&cuts, &region, tol_feas)?
        };
        write_out(feasible, c_int::from(verdict.is_feasible()), "feasible")?;
        if let (FeasibilityVerdict::Feasible(w), false) = (&verdict, witness.is_null()) {
            slice::from_raw_parts_mut(witness, n).copy_from_slice(w.as_slice());
        }
        Ok(())
    })
}
