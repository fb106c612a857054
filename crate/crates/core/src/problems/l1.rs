//! `min ‖Ax − b‖₁` with an exact oracle and a grouped incremental oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Metadata;
use crate::error::{Error, Result};
use crate::types::{dot, ApproximateOracle, DenseVector, Oracle, Sense, SubgradientReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Instance {
    /// Row-major `M × N` matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub known_fstar: Option<f64>,
    #[serde(default)]
    pub known_xstar: Option<DenseVector>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl L1Instance {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let inst = L1Instance {
            a,
            b,
            known_fstar: None,
            known_xstar: None,
            metadata: Metadata::default(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.a.len();
        if m == 0 || self.a[0].is_empty() {
            return Err(Error::InvalidArgument("L1 instance needs M, N >= 1".into()));
        }
        let n = self.a[0].len();
        if let Some(row) = self.a.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        if self.b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.b.len(),
            });
        }
        if self
            .a
            .iter()
            .flatten()
            .chain(&self.b)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("L1 instance data".into()));
        }
        if let Some(xs) = &self.known_xstar {
            if xs.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: xs.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn cols(&self) -> usize {
        self.a[0].len()
    }

    /// `A ~ U[-1, 1]`, `b = 0`, so the minimum is 0 at the origin.
    pub fn generate(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("L1 sizes must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let mut metadata = Metadata::new(Some(seed), "A ~ U[-1,1], b = 0");
        metadata.set("rows", rows as f64);
        metadata.set("cols", cols as f64);
        metadata.set("a_low", -1.0);
        metadata.set("a_high", 1.0);
        Ok(L1Instance {
            a,
            b: vec![0.0; rows],
            known_fstar: Some(0.0),
            known_xstar: Some(DenseVector::zeros(cols)),
            metadata,
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Adds the subgradient of rows `range` at `x` into `grad`; returns their value.
    fn accumulate(&self, x: &[f64], range: std::ops::Range<usize>, grad: &mut [f64]) -> f64 {
        let mut value = 0.0;
        for m in range {
            let row = &self.a[m];
            let residual = dot(row, x) - self.b[m];
            value += residual.abs();
            // sign convention: 0 contributes nothing at a kink
            let z = if residual > 0.0 {
                1.0
            } else if residual < 0.0 {
                -1.0
            } else {
                0.0
            };
            if z != 0.0 {
                for (g, &a) in grad.iter_mut().zip(row) {
                    *g += z * a;
                }
            }
        }
        value
    }
}

/// Value `Σ|A_m x − b_m|` and subgradient `Aᵀz` with `z_m = sign(A_m x − b_m)`.
pub fn l1_exact(x: &[f64], inst: &L1Instance) -> Result<SubgradientReport> {
    inst.check_point(x)?;
    let mut grad = vec![0.0; inst.cols()];
    let value = inst.accumulate(x, 0..inst.rows(), &mut grad);
    Ok(SubgradientReport::exact(value, DenseVector::from_raw(grad)))
}

pub struct L1Oracle<'a> {
    inst: &'a L1Instance,
}

impl<'a> L1Oracle<'a> {
    pub fn new(inst: &'a L1Instance) -> Self {
        L1Oracle { inst }
    }
}

impl Oracle for L1Oracle<'_> {
    fn dim(&self) -> usize {
        self.inst.cols()
    }

    fn evaluate(&mut self, x: &DenseVector) -> Result<SubgradientReport> {
        l1_exact(x, self.inst)
    }
}

/// Cached linearization of one group of rows: `f_G(y) >= intercept + grad·y`.
#[derive(Debug, Clone)]
struct GroupCut {
    grad: Vec<f64>,
    intercept: f64,
}

/// Incremental oracle over groups of consecutive rows.
///
/// Stale groups contribute the linearization taken where they were last
/// evaluated. Each call refreshes groups round-robin until the surrogate
/// value clears the level by `epsilon`, or every group has been refreshed at
/// the query point, in which case the exact report is returned.
pub struct L1Incremental<'a> {
    inst: &'a L1Instance,
    group_size: usize,
    cache: Vec<GroupCut>,
    cursor: usize,
    work: f64,
}

impl<'a> L1Incremental<'a> {
    pub fn new(inst: &'a L1Instance, group_size: usize) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::InvalidArgument("group size must be >= 1".into()));
        }
        Ok(L1Incremental {
            inst,
            group_size,
            cache: Vec::new(),
            cursor: 0,
            work: 0.0,
        })
    }

    pub fn groups(&self) -> usize {
        self.inst.rows().div_ceil(self.group_size)
    }

    fn group_range(&self, g: usize) -> std::ops::Range<usize> {
        let start = g * self.group_size;
        start..(start + self.group_size).min(self.inst.rows())
    }

    fn refresh(&mut self, g: usize, x: &[f64]) {
        let range = self.group_range(g);
        let share = range.len() as f64 / self.inst.rows() as f64;
        let mut grad = vec![0.0; self.inst.cols()];
        let value = self.inst.accumulate(x, range, &mut grad);
        let intercept = value - dot(&grad, x);
        self.cache[g] = GroupCut { grad, intercept };
        self.work += share;
    }

    fn refresh_all(&mut self, x: &[f64]) -> Result<SubgradientReport> {
        let groups = self.groups();
        if self.cache.len() != groups {
            self.cache = vec![
                GroupCut {
                    grad: Vec::new(),
                    intercept: 0.0
                };
                groups
            ];
        }
        for g in 0..groups {
            self.refresh(g, x);
        }
        self.cursor = 0;
        l1_exact(x, self.inst)
    }

    /// Surrogate value and direction assembled from the cache.
    pub fn surrogate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.inst.cols()];
        let mut value = 0.0;
        for cut in &self.cache {
            value += cut.intercept + dot(&cut.grad, x);
            for (g, &c) in grad.iter_mut().zip(&cut.grad) {
                *g += c;
            }
        }
        (value, grad)
    }
}

impl Oracle for L1Incremental<'_> {
    fn dim(&self) -> usize {
        self.inst.cols()
    }

    fn evaluate(&mut self, x: &DenseVector) -> Result<SubgradientReport> {
        self.inst.check_point(x)?;
        self.refresh_all(x)
    }

    fn work(&self) -> Option<f64> {
        Some(self.work)
    }
}

impl ApproximateOracle for L1Incremental<'_> {
    fn evaluate_approx(
        &mut self,
        x: &DenseVector,
        level: f64,
        epsilon: f64,
    ) -> Result<SubgradientReport> {
        self.inst.check_point(x)?;
        if self.cache.is_empty() {
            return self.refresh_all(x);
        }
        let groups = self.groups();
        for refreshed in 1..=groups {
            let g = self.cursor;
            self.cursor = (self.cursor + 1) % groups;
            self.refresh(g, x);
            if refreshed == groups {
                break;
            }
            let (value, grad) = self.surrogate(x);
            if Sense::Minimize.clears_level(value, level, epsilon) {
                return Ok(SubgradientReport {
                    value,
                    gradient: DenseVector::from_raw(grad),
                    exact: false,
                });
            }
        }
        // every group is fresh at x
        l1_exact(x, self.inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_example() {
        let inst = L1Instance::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let r = l1_exact(&[2.0], &inst).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.gradient.as_slice(), &[2.0]);
        assert!(r.exact);
    }

    #[test]
    fn kink_component_contributes_zero() {
        let inst = L1Instance::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]], vec![0.0, 1.0]).unwrap();
        // first row residual is exactly 0 at (1, -1)
        let r = l1_exact(&[1.0, -1.0], &inst).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.gradient.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn gradient_matches_finite_differences_off_kinks() {
        let inst = L1Instance::new(
            vec![vec![0.3, -0.7], vec![-0.2, 0.9], vec![0.5, 0.4]],
            vec![0.1, -0.3, 0.2],
        )
        .unwrap();
        let x = [0.37, -0.61];
        let r = l1_exact(&x, &inst).unwrap();
        let h = 1e-7;
        for dir in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
            let xp = [x[0] + h * dir[0], x[1] + h * dir[1]];
            let xm = [x[0] - h * dir[0], x[1] - h * dir[1]];
            let fd = (l1_exact(&xp, &inst).unwrap().value - l1_exact(&xm, &inst).unwrap().value)
                / (2.0 * h);
            let analytic = r.gradient.dot(&dir);
            assert!((fd - analytic).abs() < 1e-6, "{fd} vs {analytic}");
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = L1Instance::generate(5, 3, 1).unwrap();
        let b = L1Instance::generate(5, 3, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.a.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        assert!(a.b.iter().all(|&v| v == 0.0));
        assert_eq!(a.known_fstar, Some(0.0));
        assert_ne!(a, L1Instance::generate(5, 3, 2).unwrap());
    }

    #[test]
    fn single_group_is_exact() {
        let inst = L1Instance::generate(6, 2, 3).unwrap();
        let mut inc = L1Incremental::new(&inst, 6).unwrap();
        let x = DenseVector::new(vec![0.4, -1.3]).unwrap();
        inc.evaluate_approx(&x, -100.0, 1e-10).unwrap();
        let y = DenseVector::new(vec![-0.2, 0.9]).unwrap();
        let r = inc.evaluate_approx(&y, -100.0, 1e-10).unwrap();
        assert!(r.exact);
        assert_eq!(r, l1_exact(&y, &inst).unwrap());
    }

    #[test]
    fn two_component_hand_evaluation() {
        // f1 = |x|, f2 = |x - 1|, each its own group
        let inst = L1Instance::new(vec![vec![1.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        let mut inc = L1Incremental::new(&inst, 1).unwrap();
        let start = DenseVector::new(vec![2.0]).unwrap();
        inc.evaluate_approx(&start, -10.0, 1e-10).unwrap();
        // At x = 0 group 0 (|x|) is refreshed: f1(0) = 0, g1 = 0.
        // Group 1 keeps its linearization from x = 2: 1 + 1·(0 − 2) = −1, g2 = 1.
        // F = 0 + (−1) = −1, g̃ = 1.
        let r = inc
            .evaluate_approx(&DenseVector::new(vec![0.0]).unwrap(), -10.0, 1e-10)
            .unwrap();
        assert!(!r.exact);
        assert_eq!(r.value, -1.0);
        assert_eq!(r.gradient.as_slice(), &[1.0]);
        assert_eq!(inc.work(), Some(1.5));
    }

    #[test]
    fn falls_back_to_exact_when_level_not_cleared() {
        let inst = L1Instance::new(vec![vec![1.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        let mut inc = L1Incremental::new(&inst, 1).unwrap();
        inc.evaluate_approx(&DenseVector::new(vec![2.0]).unwrap(), -10.0, 1e-10)
            .unwrap();
        // surrogate −1 does not clear level 0, so the second group is refreshed too
        let x = DenseVector::new(vec![0.0]).unwrap();
        let r = inc.evaluate_approx(&x, 0.0, 1e-10).unwrap();
        assert!(r.exact);
        assert_eq!(r, l1_exact(&x, &inst).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(L1Instance::new(vec![vec![1.0, 2.0], vec![1.0]], vec![0.0, 0.0]).is_err());
        assert!(L1Instance::new(vec![vec![1.0]], vec![0.0, 0.0]).is_err());
        let inst = L1Instance::generate(3, 2, 0).unwrap();
        assert!(l1_exact(&[1.0], &inst).is_err());
    }
}
