//! Projected subgradient loops with level-based Polyak stepsizes.
//!
//! Internally everything runs in the minimization frame: maximization
//! oracles are negated on the way in and values are negated back on the way
//! out, so traces and results are reported in the problem's own sense.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detectors::{DetectorKind, DetectorWindow};
use crate::error::{Error, Result};
use crate::levels::{
    polyak_step, scheduled_step, validate_gammas, Adjustment, LevelState, PathController,
    StepsizeRule, DEFAULT_GAMMA, DEFAULT_GAMMA_BAR,
};
use crate::linfeas::DEFAULT_TOL_FEAS;
use crate::types::{
    project, to_minimization, ApproximateOracle, DenseVector, Oracle, Sense, SubgradientReport,
    TraceRecord,
};

/// Stepsizes below this count as stalled for the baseline rules.
pub const STEP_UNDERFLOW: f64 = 1e-15;
/// Consecutive stalled steps before a baseline run is stopped.
pub const STEP_UNDERFLOW_PATIENCE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Polyak level stepsize, level adjusted when the stepsize-violation
    /// window becomes infeasible.
    Psadla,
    /// Same, with the divergence detector as trigger.
    #[serde(rename = "sdd")]
    SddLevel,
    #[serde(rename = "path")]
    PathBased {
        delta0: f64,
        budget: f64,
    },
    Diminishing {
        a: f64,
    },
    #[serde(rename = "square-summable")]
    SquareSummable {
        a: f64,
        b: f64,
    },
}

impl Method {
    pub fn detector(&self) -> Option<DetectorKind> {
        match self {
            Method::Psadla => Some(DetectorKind::Psvd),
            Method::SddLevel => Some(DetectorKind::Sdd),
            _ => None,
        }
    }

    pub fn uses_level(&self) -> bool {
        matches!(
            self,
            Method::Psadla | Method::SddLevel | Method::PathBased { .. }
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Psadla => "psadla",
            Method::SddLevel => "sdd",
            Method::PathBased { .. } => "path",
            Method::Diminishing { .. } => "diminishing",
            Method::SquareSummable { .. } => "square-summable",
        }
    }

    pub fn params_label(&self) -> String {
        match *self {
            Method::Psadla | Method::SddLevel => String::new(),
            Method::PathBased { delta0, budget } => format!("{delta0:e},{budget}"),
            Method::Diminishing { a } => format!("{a:e}"),
            Method::SquareSummable { a, b } => format!("{a:e},{b}"),
        }
    }

    fn schedule(&self) -> Option<StepsizeRule> {
        match *self {
            Method::Diminishing { a } => Some(StepsizeRule::Diminishing { a }),
            Method::SquareSummable { a, b } => Some(StepsizeRule::SquareSummable { a, b }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub gamma: f64,
    pub gamma_bar: f64,
    /// Initial level in the problem's own sense (an over-estimate for
    /// maximization problems).
    pub initial_level: f64,
    pub initial_point: DenseVector,
    pub stop_gap: f64,
    pub max_iters: usize,
    pub time_limit_ms: Option<f64>,
    pub seed: u64,
    pub epsilon_cond: f64,
    pub check_every: usize,
    pub tol_feas: f64,
    pub max_window: Option<usize>,
}

impl RunConfig {
    pub fn new(method: Method, initial_point: DenseVector, initial_level: f64) -> Self {
        RunConfig {
            method,
            gamma: DEFAULT_GAMMA,
            gamma_bar: DEFAULT_GAMMA_BAR,
            initial_level,
            initial_point,
            stop_gap: 1e-6,
            max_iters: 1000,
            time_limit_ms: None,
            seed: 0,
            epsilon_cond: 1e-10,
            check_every: 1,
            tol_feas: DEFAULT_TOL_FEAS,
            max_window: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Psadla | Method::SddLevel => validate_gammas(self.gamma, self.gamma_bar)?,
            Method::PathBased { delta0, budget } => {
                StepsizeRule::PathBased { delta0, budget }.validate()?;
                validate_gammas(self.gamma, self.gamma_bar)?;
            }
            Method::Diminishing { .. } | Method::SquareSummable { .. } => {
                self.method.schedule().expect("schedule").validate()?
            }
        }
        if !self.initial_level.is_finite() {
            return Err(Error::InvalidArgument(
                "initial level must be finite".into(),
            ));
        }
        if !(self.stop_gap > 0.0) {
            return Err(Error::InvalidArgument("stop gap must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if let Some(t) = self.time_limit_ms {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument("time limit must be positive".into()));
            }
        }
        if !(self.epsilon_cond > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.check_every == 0 {
            return Err(Error::InvalidArgument(
                "check_every must be positive".into(),
            ));
        }
        if !(self.tol_feas > 0.0) {
            return Err(Error::InvalidArgument("tol_feas must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GapMet,
    MaxIters,
    TimeLimit,
    ZeroGradient,
    ContractViolation,
    StepUnderflow,
    WindowLimit,
}

impl StopReason {
    /// Stops that indicate a broken precondition rather than a normal end.
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            StopReason::ContractViolation | StopReason::WindowLimit
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub trace: Vec<TraceRecord>,
    /// Level at termination in the problem's own sense.
    pub final_level: Option<f64>,
    pub best_value: f64,
    pub best_point: DenseVector,
    /// Level adjustments in the problem's own sense.
    pub adjustments: Vec<Adjustment>,
    pub stop_reason: StopReason,
    pub diagnostic: Option<String>,
    pub sense: Sense,
    /// Oracle work in full-sweep equivalents.
    pub work: f64,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// What an observer sees after each completed iteration. `report` and the
/// levels are in the minimization frame.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub iter: usize,
    pub point: &'a DenseVector,
    pub next_point: &'a DenseVector,
    pub report: &'a SubgradientReport,
    pub level: Option<f64>,
    pub next_level: Option<f64>,
    pub stepsize: f64,
    pub triggered: bool,
    pub window_size: usize,
    pub work: f64,
}

pub fn run_exact<O: Oracle + ?Sized>(oracle: &mut O, config: &RunConfig) -> Result<RunResult> {
    run_exact_observed(oracle, config, &mut |_| {})
}

pub fn run_exact_observed<O: Oracle + ?Sized>(
    oracle: &mut O,
    config: &RunConfig,
    observer: &mut dyn FnMut(&IterationView),
) -> Result<RunResult> {
    run_loop(
        oracle,
        config,
        observer,
        &mut |o: &mut O, x, _level| o.evaluate(x),
        false,
    )
}

pub fn run_approximate<O: ApproximateOracle + ?Sized>(
    oracle: &mut O,
    config: &RunConfig,
) -> Result<RunResult> {
    run_approximate_observed(oracle, config, &mut |_| {})
}

/// Same loop as [`run_exact`], but the oracle may return a surrogate value and
/// direction as long as the value clears the level by `epsilon_cond`.
/// Rules without an adjustable level (path-based, schedules) always request
/// exact evaluations.
pub fn run_approximate_observed<O: ApproximateOracle + ?Sized>(
    oracle: &mut O,
    config: &RunConfig,
    observer: &mut dyn FnMut(&IterationView),
) -> Result<RunResult> {
    let epsilon = config.epsilon_cond;
    run_loop(
        oracle,
        config,
        observer,
        &mut |o: &mut O, x, level| match level {
            Some(level) => o.evaluate_approx(x, level, epsilon),
            None => o.evaluate(x),
        },
        true,
    )
}

type Evaluate<'a, O> =
    dyn FnMut(&mut O, &DenseVector, Option<f64>) -> Result<SubgradientReport> + 'a;

fn run_loop<O: Oracle + ?Sized>(
    oracle: &mut O,
    config: &RunConfig,
    observer: &mut dyn FnMut(&IterationView),
    evaluate: &mut Evaluate<'_, O>,
    approximate: bool,
) -> Result<RunResult> {
    config.validate()?;
    let dim = oracle.dim();
    if config.initial_point.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: config.initial_point.dim(),
        });
    }
    let sense = oracle.sense();
    let region = oracle.region();
    let started = Instant::now();

    let mut x = project(&config.initial_point, &region)?;
    let mut levels = LevelState::new(sense.canonical(config.initial_level));
    let mut path = match config.method {
        Method::PathBased { delta0, budget } => Some(PathController::new(delta0, budget)?),
        _ => None,
    };
    let mut window = config.method.detector().map(|kind| {
        // the divergence detector is only linear over the whole space
        let domain = match kind {
            DetectorKind::Psvd => region.clone(),
            DetectorKind::Sdd => crate::types::FeasibleRegion::Unconstrained,
        };
        DetectorWindow::new(kind, domain, 0)
            .with_check_every(config.check_every)
            .with_max_len(config.max_window)
    });

    let mut trace = Vec::with_capacity(config.max_iters.min(100_000));
    let mut best = f64::INFINITY;
    let mut best_exact = f64::INFINITY;
    let mut best_point = x.clone();
    let mut stop_reason = StopReason::MaxIters;
    let mut diagnostic = None;
    let mut stalled = 0usize;
    // level for rules that carry one; path-based refreshes it every iteration
    let mut active_level = match config.method {
        Method::Psadla | Method::SddLevel => Some(levels.level()),
        _ => None,
    };

    for k in 0..config.max_iters {
        if let Some(limit) = config.time_limit_ms {
            if k > 0 && elapsed_ms(started) >= limit {
                stop_reason = StopReason::TimeLimit;
                break;
            }
        }

        let requested = if approximate && config.method.detector().is_some() {
            Some(sense.native(levels.level()))
        } else {
            None
        };
        let report = evaluate(oracle, &x, requested)?;
        if report.gradient.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: report.gradient.dim(),
            });
        }
        if !report.is_finite() {
            return Err(Error::NonFinite(format!(
                "oracle returned value {} with non-finite entries at iteration {k}",
                report.value
            )));
        }
        let report = to_minimization(report, sense);
        let value = report.value;
        let grad_norm_sq = report.gradient.norm_sq();

        if value < best {
            best = value;
            best_point = x.clone();
        }
        if report.exact && value < best_exact {
            best_exact = value;
        }

        if grad_norm_sq == 0.0 {
            trace.push(record(
                k,
                sense,
                value,
                best,
                active_level,
                0.0,
                0.0,
                0,
                false,
                started,
            ));
            stop_reason = StopReason::ZeroGradient;
            break;
        }

        if approximate && !report.exact {
            if let Some(level) = requested.map(|l| sense.canonical(l)) {
                if value < level + config.epsilon_cond {
                    stop_reason = StopReason::ContractViolation;
                    diagnostic = Some(format!(
                        "iteration {k}: inexact value {value} does not clear level {level} by epsilon"
                    ));
                    break;
                }
            }
        }

        let step = match config.method {
            Method::Psadla | Method::SddLevel => {
                polyak_step(value, levels.level(), grad_norm_sq, config.gamma)
            }
            Method::PathBased { .. } => {
                let controller = path.as_mut().expect("path controller");
                controller
                    .step(value, best, grad_norm_sq, config.gamma)
                    .map(|(s, level)| {
                        active_level = Some(level);
                        s
                    })
            }
            Method::Diminishing { .. } | Method::SquareSummable { .. } => {
                scheduled_step(&config.method.schedule().expect("schedule"), k + 1)
            }
        };
        let stepsize = match step {
            Ok(s) => s,
            Err(Error::ContractViolation(msg)) => {
                stop_reason = StopReason::ContractViolation;
                diagnostic = Some(format!("iteration {k}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        };

        let x_next = project(&x.add_scaled(-stepsize, &report.gradient), &region)?;
        if !x_next.is_finite() {
            return Err(Error::NonFinite(format!(
                "iterate diverged at iteration {k}"
            )));
        }

        let mut triggered = false;
        let mut window_size = 0;
        if let Some(w) = window.as_mut() {
            levels.observe(value);
            match w.observe(
                &x,
                &x_next,
                &report.gradient,
                stepsize,
                config.gamma_bar,
                config.tol_feas,
            ) {
                Ok(t) => triggered = t,
                Err(Error::WindowLimit { cap }) => {
                    stop_reason = StopReason::WindowLimit;
                    diagnostic = Some(format!(
                        "iteration {k}: window reached {cap} entries without a trigger"
                    ));
                    break;
                }
                Err(e) => return Err(e),
            }
            window_size = w.len();
        }

        let level_used = active_level;
        if triggered {
            match levels.adjust(k, config.gamma, config.gamma_bar) {
                Ok(new_level) => active_level = Some(new_level),
                Err(Error::ContractViolation(msg)) => {
                    stop_reason = StopReason::ContractViolation;
                    diagnostic = Some(format!("iteration {k}: {msg}"));
                    break;
                }
                Err(e) => return Err(e),
            }
            if let Some(w) = window.as_mut() {
                w.reset(k + 1);
            }
        }

        trace.push(record(
            k,
            sense,
            value,
            best,
            level_used,
            stepsize,
            grad_norm_sq,
            window_size,
            triggered,
            started,
        ));
        observer(&IterationView {
            iter: k,
            point: &x,
            next_point: &x_next,
            report: &report,
            level: level_used,
            next_level: active_level,
            stepsize,
            triggered,
            window_size,
            work: oracle.work().unwrap_or((k + 1) as f64),
        });

        x = x_next;

        if let Some(level) = active_level {
            // inexact values from earlier windows bound nothing once the level has moved
            let reference = if approximate && window.is_some() {
                best_exact.min(levels.window_best())
            } else {
                best
            };
            if reference - level < config.stop_gap {
                stop_reason = StopReason::GapMet;
                break;
            }
        }
        if config.method.detector().is_none() {
            stalled = if stepsize < STEP_UNDERFLOW {
                stalled + 1
            } else {
                0
            };
            if stalled >= STEP_UNDERFLOW_PATIENCE {
                stop_reason = StopReason::StepUnderflow;
                diagnostic = Some(format!(
                    "stepsize below {STEP_UNDERFLOW:e} for {STEP_UNDERFLOW_PATIENCE} iterations"
                ));
                break;
            }
        }
    }

    let iterations = trace.len();
    let adjustments = levels
        .adjustments()
        .iter()
        .map(|a| Adjustment {
            iter: a.iter,
            old_level: sense.native(a.old_level),
            new_level: sense.native(a.new_level),
        })
        .collect();
    Ok(RunResult {
        trace,
        final_level: active_level.map(|l| sense.native(l)),
        best_value: sense.native(best),
        best_point,
        adjustments,
        stop_reason,
        diagnostic,
        sense,
        work: oracle.work().unwrap_or(iterations as f64),
    })
}

#[allow(clippy::too_many_arguments)]
fn record(
    iter: usize,
    sense: Sense,
    value: f64,
    best: f64,
    level: Option<f64>,
    stepsize: f64,
    grad_norm_sq: f64,
    window_size: usize,
    triggered: bool,
    started: Instant,
) -> TraceRecord {
    TraceRecord {
        iter,
        value: sense.native(value),
        best_value: sense.native(best),
        level: level.map(|l| sense.native(l)),
        stepsize,
        grad_norm_sq,
        window_size,
        triggered,
        elapsed_ms: elapsed_ms(started),
    }
}

fn elapsed_ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}
