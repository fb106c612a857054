//! Detector windows whose infeasibility triggers a level adjustment.
//!
//! The stepsize-violation detector collects one linear cut per iteration.
//! The divergence detector collects the perpendicular-bisector half-spaces of
//! consecutive iterates; it is kept as the baseline it is compared against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linfeas::{check_feasible, Cut, FeasibilityVerdict};
use crate::types::{DenseVector, FeasibleRegion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Polyak stepsize violation detector.
    Psvd,
    /// Solution divergence detector.
    Sdd,
}

/// Cut `g·x <= g·x_k - s_k ‖g‖² / gamma_bar`.
///
/// Every minimizer lies in it as long as `s_k` did not exceed the
/// `gamma_bar`-Polyak step for the true optimal value.
pub fn psvd_cut(x_k: &DenseVector, g_k: &DenseVector, s_k: f64, gamma_bar: f64) -> Result<Cut> {
    if x_k.dim() != g_k.dim() {
        return Err(Error::DimensionMismatch {
            expected: x_k.dim(),
            found: g_k.dim(),
        });
    }
    if !(s_k >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stepsize {s_k} is negative"
        )));
    }
    if !(gamma_bar > 0.0 && gamma_bar < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma_bar {gamma_bar} outside (0, 2)"
        )));
    }
    let norm_sq = g_k.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::InvalidArgument(
            "zero subgradient certifies optimality; no cut".into(),
        ));
    }
    let rhs = g_k.dot(x_k) - s_k * norm_sq / gamma_bar;
    Cut::new(g_k.clone(), rhs)
}

/// Linearized `‖x - x_next‖² <= ‖x - x_prev‖²`, i.e.
/// `2 (x_prev - x_next)·x <= ‖x_prev‖² - ‖x_next‖²`.
///
/// Returns `None` when the iterates coincide (the row reads `0 <= 0`).
pub fn sdd_cut(x_prev: &DenseVector, x_next: &DenseVector) -> Result<Option<Cut>> {
    if x_prev.dim() != x_next.dim() {
        return Err(Error::DimensionMismatch {
            expected: x_prev.dim(),
            found: x_next.dim(),
        });
    }
    if x_prev == x_next {
        return Ok(None);
    }
    let normal: Vec<f64> = x_prev
        .iter()
        .zip(x_next.iter())
        .map(|(p, n)| 2.0 * (p - n))
        .collect();
    let rhs = x_prev.norm_sq() - x_next.norm_sq();
    Ok(Some(Cut::new(DenseVector::new(normal)?, rhs)?))
}

#[derive(Debug, Clone)]
pub struct DetectorWindow {
    kind: DetectorKind,
    cuts: Vec<Cut>,
    window_start_iter: usize,
    /// Iterates seen by a divergence window, first one included.
    sdd_points: Vec<DenseVector>,
    include_domain: FeasibleRegion,
    /// Number of inputs received since the window opened.
    received: usize,
    check_every: usize,
    max_len: Option<usize>,
}

impl DetectorWindow {
    pub fn new(
        kind: DetectorKind,
        include_domain: FeasibleRegion,
        window_start_iter: usize,
    ) -> Self {
        DetectorWindow {
            kind,
            cuts: Vec::new(),
            window_start_iter,
            sdd_points: Vec::new(),
            include_domain,
            received: 0,
            check_every: 1,
            max_len: None,
        }
    }

    /// Only test feasibility on every `c`-th input.
    pub fn with_check_every(mut self, c: usize) -> Self {
        self.check_every = c.max(1);
        self
    }

    /// Abort with an error once a window holds more than `len` inputs.
    pub fn with_max_len(mut self, len: Option<usize>) -> Self {
        self.max_len = len;
        self
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn window_start_iter(&self) -> usize {
        self.window_start_iter
    }

    pub fn sdd_points(&self) -> &[DenseVector] {
        &self.sdd_points
    }

    pub fn include_domain(&self) -> &FeasibleRegion {
        &self.include_domain
    }

    /// Adds the cut for iteration `x_k -> x_next` and reports whether the
    /// window became infeasible. The caller resets the window on a trigger.
    ///
    /// For a PSVD window `g_k`, `s_k` and `gamma_bar` define the cut; an SDD
    /// window only looks at the two iterates.
    pub fn observe(
        &mut self,
        x_k: &DenseVector,
        x_next: &DenseVector,
        g_k: &DenseVector,
        s_k: f64,
        gamma_bar: f64,
        tol_feas: f64,
    ) -> Result<bool> {
        let cut = match self.kind {
            DetectorKind::Psvd => Some(psvd_cut(x_k, g_k, s_k, gamma_bar)?),
            DetectorKind::Sdd => {
                if self.sdd_points.is_empty() {
                    self.sdd_points.push(x_k.clone());
                }
                self.sdd_points.push(x_next.clone());
                sdd_cut(x_k, x_next)?
            }
        };
        self.append_and_test(cut, tol_feas)
    }

    /// Appends a cut (or a skipped always-satisfied row) and tests the system.
    pub fn append_and_test(&mut self, cut: Option<Cut>, tol_feas: f64) -> Result<bool> {
        if let Some(cut) = cut {
            if let Some(first) = self.cuts.first() {
                if first.dim() != cut.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: first.dim(),
                        found: cut.dim(),
                    });
                }
            }
            self.cuts.push(cut);
        }
        self.received += 1;
        if let Some(cap) = self.max_len {
            if self.received > cap {
                return Err(Error::WindowLimit { cap });
            }
        }
        if self.cuts.is_empty() || !self.received.is_multiple_of(self.check_every) {
            return Ok(false);
        }
        self.test(tol_feas)
    }

    /// True when the current system (plus the domain) has no point.
    pub fn test(&self, tol_feas: f64) -> Result<bool> {
        if self.cuts.is_empty() {
            return Ok(false);
        }
        let verdict = check_feasible(&self.cuts, &self.include_domain, tol_feas)?;
        Ok(matches!(verdict, FeasibilityVerdict::Infeasible))
    }

    /// Drops every cut and opens a new window at `next_start`.
    pub fn reset(&mut self, next_start: usize) {
        self.cuts.clear();
        self.sdd_points.clear();
        self.received = 0;
        self.window_start_iter = next_start;
    }
}
