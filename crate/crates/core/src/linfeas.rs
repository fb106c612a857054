//! Linear feasibility: does a finite set of half-spaces `g·x <= r`, together
//! with optional sign or box constraints, have a common point?
//!
//! Decided by a dense phase-1 simplex. Columns are priced by most negative
//! reduced cost, falling back to Bland's rule while pivots stay degenerate,
//! which rules out cycling. Free coordinates are
//! split into nonnegative pairs, box coordinates are shifted to their lower
//! bound and capped by an extra row. Each cut is scaled to a unit normal
//! before it enters the tableau; the feasible set is unchanged by this.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{dot, DenseVector, FeasibleRegion};

pub const DEFAULT_TOL_FEAS: f64 = 1e-9;

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-11;
/// Consecutive degenerate pivots before pricing switches to Bland's rule.
const DEGENERATE_SWITCH: usize = 50;
const RATIO_TIE: f64 = 1e-12;

/// The half-space `normal · x <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub normal: DenseVector,
    pub rhs: f64,
}

impl Cut {
    /// Rejects a zero normal paired with a negative right-hand side, which
    /// describes the empty set.
    pub fn new(normal: DenseVector, rhs: f64) -> Result<Self> {
        if !rhs.is_finite() {
            return Err(Error::NonFinite(format!("cut rhs {rhs}")));
        }
        if normal.iter().all(|&g| g == 0.0) && rhs < 0.0 {
            return Err(Error::InvalidArgument(
                "zero-normal cut with negative rhs is empty".into(),
            ));
        }
        Ok(Cut { normal, rhs })
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `normal · x - rhs`; positive means violated.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.normal.dot(x) - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityVerdict {
    Feasible(DenseVector),
    Infeasible,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityVerdict::Feasible(_))
    }
}

/// How each original coordinate maps onto tableau columns.
enum ColumnMap {
    Split,
    NonNegative,
    Shifted(Vec<f64>),
}

pub fn check_feasible(
    cuts: &[Cut],
    domain: &FeasibleRegion,
    tol_feas: f64,
) -> Result<FeasibilityVerdict> {
    if !(tol_feas > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol_feas must be positive, got {tol_feas}"
        )));
    }
    let dim = match (cuts.first(), domain.dim()) {
        (Some(c), _) => c.dim(),
        (None, Some(d)) => d,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "cannot infer dimension from an empty system".into(),
            ))
        }
    };
    if let Some(c) = cuts.iter().find(|c| c.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: c.dim(),
        });
    }
    if let Some(d) = domain.dim() {
        if d != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d,
            });
        }
    }

    let (map, structural) = match domain {
        FeasibleRegion::Unconstrained => (ColumnMap::Split, 2 * dim),
        FeasibleRegion::NonNegativeOrthant => (ColumnMap::NonNegative, dim),
        FeasibleRegion::Box { lower, .. } => (ColumnMap::Shifted(lower.as_slice().to_vec()), dim),
    };

    // Rows of `coeffs · columns <= rhs` over structural columns.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cuts.len() + dim);
    for cut in cuts {
        let norm = cut.normal.norm();
        if norm == 0.0 {
            if cut.rhs < -tol_feas {
                return Ok(FeasibilityVerdict::Infeasible);
            }
            continue;
        }
        let mut coeffs = vec![0.0; structural];
        let mut rhs = cut.rhs;
        for (j, &g) in cut.normal.iter().enumerate() {
            match &map {
                ColumnMap::Split => {
                    coeffs[2 * j] = g / norm;
                    coeffs[2 * j + 1] = -g / norm;
                }
                ColumnMap::NonNegative => coeffs[j] = g / norm,
                ColumnMap::Shifted(lower) => {
                    coeffs[j] = g / norm;
                    rhs -= g * lower[j];
                }
            }
        }
        rows.push((coeffs, rhs / norm));
    }
    if let FeasibleRegion::Box { lower, upper } = domain {
        for j in 0..dim {
            let mut coeffs = vec![0.0; structural];
            coeffs[j] = 1.0;
            rows.push((coeffs, upper[j] - lower[j]));
        }
    }

    let columns = Phase1::new(&rows, structural).solve()?;
    if columns.objective > tol_feas {
        return Ok(FeasibilityVerdict::Infeasible);
    }

    let witness: Vec<f64> = (0..dim)
        .map(|j| match &map {
            ColumnMap::Split => columns.values[2 * j] - columns.values[2 * j + 1],
            ColumnMap::NonNegative => columns.values[j],
            ColumnMap::Shifted(lower) => lower[j] + columns.values[j],
        })
        .collect();
    Ok(FeasibilityVerdict::Feasible(DenseVector::from_raw(witness)))
}

/// Largest violation of any cut at `x` (zero or negative when all hold).
pub fn max_violation(cuts: &[Cut], x: &[f64]) -> f64 {
    cuts.iter()
        .map(|c| dot(&c.normal, x) - c.rhs)
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Phase1Solution {
    objective: f64,
    values: Vec<f64>,
}

/// Dense tableau for `min sum(artificials)` subject to
/// `A y + s = b` (rows with `b >= 0`) and `-A y - s + a = -b` (rows with `b < 0`).
struct Phase1 {
    m: usize,
    structural: usize,
    width: usize,
    /// `m` constraint rows followed by the reduced-cost row, each `width + 1` wide.
    tab: Vec<f64>,
    basis: Vec<usize>,
}

impl Phase1 {
    fn new(rows: &[(Vec<f64>, f64)], structural: usize) -> Self {
        let m = rows.len();
        let artificial_rows: Vec<usize> = (0..m).filter(|&i| rows[i].1 < 0.0).collect();
        let width = structural + m + artificial_rows.len();
        let stride = width + 1;
        let mut tab = vec![0.0; (m + 1) * stride];
        let mut basis = vec![0; m];

        let mut next_artificial = structural + m;
        for (i, (coeffs, rhs)) in rows.iter().enumerate() {
            let row = &mut tab[i * stride..(i + 1) * stride];
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            for (j, &a) in coeffs.iter().enumerate() {
                row[j] = sign * a;
            }
            row[structural + i] = sign;
            row[width] = sign * rhs;
            if *rhs < 0.0 {
                row[next_artificial] = 1.0;
                basis[i] = next_artificial;
                next_artificial += 1;
            } else {
                basis[i] = structural + i;
            }
        }

        // reduced costs: d_j = c_j - sum over artificial-basic rows of T[i][j]
        let cost_start = m * stride;
        for &i in &artificial_rows {
            for j in 0..=width {
                tab[cost_start + j] -= tab[i * stride + j];
            }
        }
        for j in structural + m..width {
            tab[cost_start + j] = 0.0;
        }

        Phase1 {
            m,
            structural,
            width,
            tab,
            basis,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.tab[i * (self.width + 1) + j]
    }

    /// Minimum-ratio row for `col`. Under Bland's rule ties go to the
    /// smallest basic index, otherwise near-ties go to the largest pivot.
    fn ratio_test(&self, col: usize, bland: bool) -> Option<usize> {
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, col);
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = self.at(i, self.width).max(0.0) / a;
            let better = match leaving {
                None => true,
                Some((r, best)) if bland => {
                    ratio < best || (ratio == best && self.basis[i] < self.basis[r])
                }
                Some((r, best)) => {
                    ratio < best - RATIO_TIE || (ratio <= best + RATIO_TIE && a > self.at(r, col))
                }
            };
            if better {
                leaving = Some((i, ratio));
            }
        }
        leaving.map(|(i, _)| i)
    }

    /// Entering column and leaving row, or `None` at optimality. Artificial
    /// columns never re-enter. A negative reduced cost over a column without
    /// a usable pivot is rounding noise (the objective is bounded below by
    /// zero), so such columns are passed over.
    fn choose(&self, bland: bool) -> Option<(usize, usize)> {
        let cost_row = self.m;
        let eligible = self.structural + self.m;
        let mut candidates: Vec<usize> = (0..eligible)
            .filter(|&j| self.at(cost_row, j) < -COST_EPS)
            .collect();
        if !bland {
            candidates.sort_by(|&a, &b| self.at(cost_row, a).total_cmp(&self.at(cost_row, b)));
        }
        candidates
            .into_iter()
            .find_map(|col| self.ratio_test(col, bland).map(|row| (row, col)))
    }

    fn solve(mut self) -> Result<Phase1Solution> {
        let stride = self.width + 1;
        let cap = 50 * (self.m + self.width);
        let mut pivots = 0;
        let mut degenerate_run = 0;
        while let Some((row, col)) = self.choose(degenerate_run >= DEGENERATE_SWITCH) {
            if self.at(row, self.width) <= PIVOT_EPS {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            pivots += 1;
            if pivots > cap {
                return Err(Error::SolverFailure(format!(
                    "phase-1 simplex exceeded {cap} pivots"
                )));
            }
            self.pivot(row, col, stride);
        }

        let objective = -self.at(self.m, self.width);
        let mut values = vec![0.0; self.structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.structural {
                values[b] = self.at(i, self.width).max(0.0);
            }
        }
        Ok(Phase1Solution {
            objective: objective.max(0.0),
            values,
        })
    }

    fn pivot(&mut self, row: usize, col: usize, stride: usize) {
        let p = self.tab[row * stride + col];
        let (before, rest) = self.tab.split_at_mut(row * stride);
        let (pivot_row, after) = rest.split_at_mut(stride);
        for v in pivot_row.iter_mut() {
            *v /= p;
        }
        pivot_row[col] = 1.0;
        for other in before.chunks_mut(stride).chain(after.chunks_mut(stride)) {
            let factor = other[col];
            if factor != 0.0 {
                for (o, &pv) in other.iter_mut().zip(pivot_row.iter()) {
                    *o -= factor * pv;
                }
                other[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(normal: &[f64], rhs: f64) -> Cut {
        Cut::new(DenseVector::new(normal.to_vec()).unwrap(), rhs).unwrap()
    }

    #[test]
    fn single_half_space_is_feasible() {
        let cuts = [cut(&[1.0, 0.0], 0.5)];
        let verdict = check_feasible(&cuts, &FeasibleRegion::Unconstrained, 1e-9).unwrap();
        let FeasibilityVerdict::Feasible(w) = verdict else {
            panic!("expected feasible")
        };
        assert!(max_violation(&cuts, &w) <= 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let cuts = [cut(&[1.0], -0.5), cut(&[-1.0], 0.0)];
        let verdict = check_feasible(&cuts, &FeasibleRegion::Unconstrained, 1e-9).unwrap();
        assert_eq!(verdict, FeasibilityVerdict::Infeasible);
    }

    #[test]
    fn hand_trace_windows() {
        // x <= 0, x <= -0.5 is fine; adding x >= 0.25 empties it
        let mut cuts = vec![cut(&[1.0], 0.0)];
        let free = FeasibleRegion::Unconstrained;
        assert!(check_feasible(&cuts, &free, 1e-9).unwrap().is_feasible());
        cuts.push(cut(&[1.0], -0.5));
        assert!(check_feasible(&cuts, &free, 1e-9).unwrap().is_feasible());
        cuts.push(cut(&[-1.0], -0.25));
        assert!(!check_feasible(&cuts, &free, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn domain_constraints_enter_the_system() {
        let cuts = [cut(&[1.0, 1.0], -1.0)];
        assert!(check_feasible(&cuts, &FeasibleRegion::Unconstrained, 1e-9)
            .unwrap()
            .is_feasible());
        assert!(
            !check_feasible(&cuts, &FeasibleRegion::NonNegativeOrthant, 1e-9)
                .unwrap()
                .is_feasible()
        );

        let region = FeasibleRegion::boxed(
            DenseVector::new(vec![1.0, 1.0]).unwrap(),
            DenseVector::new(vec![2.0, 3.0]).unwrap(),
        )
        .unwrap();
        let cuts = [cut(&[1.0, 1.0], 2.5)];
        let FeasibilityVerdict::Feasible(w) = check_feasible(&cuts, &region, 1e-9).unwrap() else {
            panic!("expected feasible")
        };
        assert!(region.contains(&w, 1e-12));
        assert!(max_violation(&cuts, &w) <= 1e-9);
        let cuts = [cut(&[1.0, 1.0], 1.5)];
        assert!(!check_feasible(&cuts, &region, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn zero_normal_cut_handling() {
        let zero = DenseVector::new(vec![0.0, 0.0]).unwrap();
        assert!(Cut::new(zero.clone(), -1.0).is_err());
        let trivial = Cut::new(zero, 0.0).unwrap();
        assert!(
            check_feasible(&[trivial], &FeasibleRegion::Unconstrained, 1e-9)
                .unwrap()
                .is_feasible()
        );
    }

    #[test]
    fn argument_errors() {
        let cuts = [cut(&[1.0], 0.0), cut(&[1.0, 0.0], 0.0)];
        assert!(matches!(
            check_feasible(&cuts, &FeasibleRegion::Unconstrained, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(check_feasible(&cuts[..1], &FeasibleRegion::Unconstrained, 0.0).is_err());
        assert!(check_feasible(&[], &FeasibleRegion::Unconstrained, 1e-9).is_err());
    }

    #[test]
    fn degenerate_system_terminates() {
        // many copies of the same boundary through the origin
        let mut cuts = Vec::new();
        for k in 0..20 {
            let t = k as f64 * 0.1;
            cuts.push(cut(&[t.cos(), t.sin(), 1.0], 0.0));
            cuts.push(cut(&[-t.cos(), -t.sin(), 1.0], 0.0));
        }
        let verdict = check_feasible(&cuts, &FeasibleRegion::Unconstrained, 1e-9).unwrap();
        let FeasibilityVerdict::Feasible(w) = verdict else {
            panic!("origin is feasible")
        };
        assert!(max_violation(&cuts, &w) <= 1e-9);
    }
}
