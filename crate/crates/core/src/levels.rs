//! Stepsize rules and level controllers. Everything here works in the
//! canonical minimization frame: the level is an under-estimate of the
//! optimal value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_GAMMA_BAR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub iter: usize,
    pub old_level: f64,
    pub new_level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelState {
    level: f64,
    window_best: f64,
    adjustments: Vec<Adjustment>,
}

impl LevelState {
    pub fn new(initial_level: f64) -> Self {
        LevelState {
            level: initial_level,
            window_best: f64::INFINITY,
            adjustments: Vec::new(),
        }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn window_best(&self) -> f64 {
        self.window_best
    }

    pub fn adjustments(&self) -> &[Adjustment] {
        &self.adjustments
    }

    pub fn into_adjustments(self) -> Vec<Adjustment> {
        self.adjustments
    }

    /// Records a value (or surrogate value) seen in the current window.
    pub fn observe(&mut self, value: f64) {
        if value < self.window_best {
            self.window_best = value;
        }
    }

    /// Moves the level to `(γ/γ̄)·level + (1 − γ/γ̄)·window_best` and opens a
    /// fresh window. Returns the new level.
    pub fn adjust(&mut self, iter: usize, gamma: f64, gamma_bar: f64) -> Result<f64> {
        validate_gammas(gamma, gamma_bar)?;
        if !self.window_best.is_finite() {
            return Err(Error::ContractViolation(
                "adjusting on an empty window".into(),
            ));
        }
        if !(self.window_best > self.level) {
            return Err(Error::ContractViolation(format!(
                "window best {} does not exceed level {}",
                self.window_best, self.level
            )));
        }
        let ratio = gamma / gamma_bar;
        let new_level = ratio * self.level + (1.0 - ratio) * self.window_best;
        if !(new_level > self.level) {
            // the convex combination rounded back onto the old level
            return Err(Error::ContractViolation(format!(
                "level adjustment made no progress at {}",
                self.level
            )));
        }
        self.adjustments.push(Adjustment {
            iter,
            old_level: self.level,
            new_level,
        });
        self.level = new_level;
        self.window_best = f64::INFINITY;
        Ok(new_level)
    }
}

pub fn validate_gammas(gamma: f64, gamma_bar: f64) -> Result<()> {
    if 0.0 < gamma && gamma < gamma_bar && gamma_bar < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "need 0 < gamma < gamma_bar < 2, got gamma={gamma}, gamma_bar={gamma_bar}"
        )))
    }
}

/// `γ·(value − level)/‖g‖²`.
pub fn polyak_step(value: f64, level: f64, grad_norm_sq: f64, gamma: f64) -> Result<f64> {
    if !(grad_norm_sq > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "squared subgradient norm must be positive, got {grad_norm_sq}"
        )));
    }
    if value < level {
        return Err(Error::ContractViolation(format!(
            "value {value} is below level {level}"
        )));
    }
    Ok(gamma * (value - level) / grad_norm_sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepsizeRule {
    PolyakLevel {
        gamma: f64,
    },
    PathBased {
        delta0: f64,
        budget: f64,
    },
    /// `a / sqrt(k)`
    Diminishing {
        a: f64,
    },
    /// `a / (k + b)`
    SquareSummable {
        a: f64,
        b: f64,
    },
}

impl StepsizeRule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepsizeRule::PolyakLevel { gamma } => gamma > 0.0 && gamma < 2.0,
            StepsizeRule::PathBased { delta0, budget } => delta0 > 0.0 && budget > 0.0,
            StepsizeRule::Diminishing { a } => a > 0.0,
            StepsizeRule::SquareSummable { a, b } => a > 0.0 && b >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid stepsize rule {self:?}"
            )))
        }
    }
}

/// Predefined schedules; `k` counts from 1.
pub fn scheduled_step(rule: &StepsizeRule, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("schedules start at k = 1".into()));
    }
    rule.validate()?;
    let k = k as f64;
    match *rule {
        StepsizeRule::Diminishing { a } => Ok(a / k.sqrt()),
        StepsizeRule::SquareSummable { a, b } => Ok(a / (k + b)),
        _ => Err(Error::InvalidArgument(format!(
            "{rule:?} is not a schedule"
        ))),
    }
}

/// Path-based level controller.
///
/// The level sits `delta` below the best value found so far. The step path
/// `Σ s‖g‖` is accumulated since the last reset; once it exceeds `budget`
/// without the best value improving by at least `delta / 2`, `delta` is
/// halved and the path restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct PathController {
    delta: f64,
    budget: f64,
    path_len: f64,
    reference_best: f64,
}

impl PathController {
    pub fn new(delta0: f64, budget: f64) -> Result<Self> {
        StepsizeRule::PathBased { delta0, budget }.validate()?;
        Ok(PathController {
            delta: delta0,
            budget,
            path_len: 0.0,
            reference_best: f64::INFINITY,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn path_len(&self) -> f64 {
        self.path_len
    }

    /// Level for the current iteration; `best` already includes `value`.
    pub fn level(&mut self, best: f64) -> f64 {
        if self.reference_best == f64::INFINITY {
            self.reference_best = best;
        } else if self.reference_best - best >= 0.5 * self.delta {
            self.reference_best = best;
            self.path_len = 0.0;
        } else if self.path_len > self.budget {
            self.delta *= 0.5;
            self.path_len = 0.0;
            self.reference_best = best;
        }
        best - self.delta
    }

    /// Polyak step against `best - delta`; returns `(stepsize, level)`.
    pub fn step(
        &mut self,
        value: f64,
        best: f64,
        grad_norm_sq: f64,
        gamma: f64,
    ) -> Result<(f64, f64)> {
        let level = self.level(best);
        let s = polyak_step(value, level, grad_norm_sq, gamma)?;
        self.path_len += s * grad_norm_sq.sqrt();
        Ok((s, level))
    }
}
