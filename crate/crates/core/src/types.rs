//! Shared numeric types, optimization sense, the oracle contract and the
//! per-iteration trace record.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense vector of finite reals.
///
/// Construction through [`DenseVector::new`] rejects empty input and
/// NaN/Inf entries. Arithmetic helpers may produce non-finite entries on
/// overflow; callers at API boundaries re-check with [`DenseVector::is_finite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("vector must be non-empty".into()));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry {i} is {}", entries[i])));
        }
        Ok(DenseVector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![0.0; dim.max(1)])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        DenseVector(vec![value; dim.max(1)])
    }

    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        DenseVector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + alpha * direction`
    pub fn add_scaled(&self, alpha: f64, direction: &[f64]) -> DenseVector {
        DenseVector(
            self.0
                .iter()
                .zip(direction)
                .map(|(a, d)| a + alpha * d)
                .collect(),
        )
    }

    pub fn negated(&self) -> DenseVector {
        DenseVector(self.0.iter().map(|v| -v).collect())
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        DenseVector::new(entries)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Vec<f64> {
        v.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Maps a value in this sense to the canonical minimization frame. The
    /// map is its own inverse.
    pub fn canonical(self, value: f64) -> f64 {
        match self {
            Sense::Minimize => value,
            Sense::Maximize => -value,
        }
    }

    pub fn native(self, canonical_value: f64) -> f64 {
        self.canonical(canonical_value)
    }

    /// True when `candidate` is strictly better than `incumbent`.
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sense::Minimize => candidate < incumbent,
            Sense::Maximize => candidate > incumbent,
        }
    }

    /// Condition on an inexact value: it must sit at least `epsilon` on the
    /// far side of the level (above for minimization, below for maximization).
    pub fn clears_level(self, value: f64, level: f64, epsilon: f64) -> bool {
        self.canonical(value) >= self.canonical(level) + epsilon
    }
}

/// Value and (approximate) subgradient returned by an oracle at a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientReport {
    pub value: f64,
    pub gradient: DenseVector,
    /// True when `value` is the objective at the query point and `gradient`
    /// is an exact subgradient.
    pub exact: bool,
}

impl SubgradientReport {
    pub fn exact(value: f64, gradient: DenseVector) -> Self {
        SubgradientReport {
            value,
            gradient,
            exact: true,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.is_finite()
    }
}

/// Negates value and gradient of a maximization report so the solver only
/// ever sees a minimization problem. Identity for `Minimize`.
pub fn to_minimization(report: SubgradientReport, sense: Sense) -> SubgradientReport {
    match sense {
        Sense::Minimize => report,
        Sense::Maximize => SubgradientReport {
            value: -report.value,
            gradient: report.gradient.negated(),
            exact: report.exact,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleRegion {
    Unconstrained,
    NonNegativeOrthant,
    Box {
        lower: DenseVector,
        upper: DenseVector,
    },
}

impl FeasibleRegion {
    pub fn boxed(lower: DenseVector, upper: DenseVector) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch {
                expected: lower.dim(),
                found: upper.dim(),
            });
        }
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidArgument(format!(
                "box lower bound exceeds upper bound at index {i}"
            )));
        }
        Ok(FeasibleRegion::Box { lower, upper })
    }

    /// Dimension fixed by the region, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            FeasibleRegion::Box { lower, .. } => Some(lower.dim()),
            _ => None,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            FeasibleRegion::Unconstrained => true,
            FeasibleRegion::NonNegativeOrthant => x.iter().all(|&v| v >= -tol),
            FeasibleRegion::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol),
        }
    }
}

/// Euclidean projection onto `region`.
pub fn project(x: &DenseVector, region: &FeasibleRegion) -> Result<DenseVector> {
    match region {
        FeasibleRegion::Unconstrained => Ok(x.clone()),
        FeasibleRegion::NonNegativeOrthant => {
            Ok(DenseVector(x.iter().map(|&v| v.max(0.0)).collect()))
        }
        FeasibleRegion::Box { lower, upper } => {
            if lower.dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: lower.dim(),
                    found: x.dim(),
                });
            }
            Ok(DenseVector(
                x.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(&v, (&l, &u))| v.clamp(l, u))
                    .collect(),
            ))
        }
    }
}

/// One row of a run trace. Values are reported in the problem's own sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub value: f64,
    pub best_value: f64,
    /// Level in force for this iteration's step; `None` for rules without one.
    pub level: Option<f64>,
    pub stepsize: f64,
    pub grad_norm_sq: f64,
    pub window_size: usize,
    pub triggered: bool,
    pub elapsed_ms: f64,
}

/// A problem oracle returning values and subgradients in its own sense.
pub trait Oracle {
    fn dim(&self) -> usize;

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn region(&self) -> FeasibleRegion {
        FeasibleRegion::Unconstrained
    }

    /// Exact value and subgradient at `x`.
    fn evaluate(&mut self, x: &DenseVector) -> Result<SubgradientReport>;

    /// Cumulative work in full-sweep equivalents, for oracles that can do
    /// partial evaluations. `None` means one sweep per call.
    fn work(&self) -> Option<f64> {
        None
    }
}

/// An oracle that can trade exactness for work, returning a value/direction
/// pair that clears the level by `epsilon` whenever it is not exact.
pub trait ApproximateOracle: Oracle {
    /// `level` is expressed in the oracle's own sense.
    fn evaluate_approx(
        &mut self,
        x: &DenseVector,
        level: f64,
        epsilon: f64,
    ) -> Result<SubgradientReport>;
}

/// Adapts a closure into an exact [`Oracle`].
pub struct FnOracle<F> {
    dim: usize,
    sense: Sense,
    region: FeasibleRegion,
    eval: F,
}

impl<F> FnOracle<F>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    pub fn new(dim: usize, eval: F) -> Self {
        FnOracle {
            dim,
            sense: Sense::Minimize,
            region: FeasibleRegion::Unconstrained,
            eval,
        }
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    pub fn with_region(mut self, region: FeasibleRegion) -> Self {
        self.region = region;
        self
    }
}

impl<F> Oracle for FnOracle<F>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn sense(&self) -> Sense {
        self.sense
    }

    fn region(&self) -> FeasibleRegion {
        self.region.clone()
    }

    fn evaluate(&mut self, x: &DenseVector) -> Result<SubgradientReport> {
        let (value, gradient) = (self.eval)(x.as_slice());
        if gradient.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: gradient.len(),
            });
        }
        Ok(SubgradientReport::exact(
            value,
            DenseVector::from_raw(gradient),
        ))
    }
}
