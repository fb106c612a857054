//! Lagrangian duals of assignment problems whose capacity rows are relaxed.
//!
//! After relaxation the inner minimization splits into independent blocks
//! (one per job). [`DualOracle`] solves every block on each call;
//! [`IncrementalDual`] keeps the last solution of every block and re-solves
//! them a group at a time.

use crate::error::{Error, Result};
use crate::types::{
    ApproximateOracle, DenseVector, FeasibleRegion, Oracle, Sense, SubgradientReport,
};

/// A relaxed problem that separates into blocks sharing the multipliers.
pub trait SeparableDual {
    type Solution: Clone;

    fn machines(&self) -> usize;
    fn blocks(&self) -> usize;
    fn capacities(&self) -> &[f64];
    /// Minimizer of the block's Lagrangian term at `x`.
    fn solve_block(&self, block: usize, x: &[f64]) -> Self::Solution;
    /// Lagrangian term of `block` at `x` under a given solution.
    fn block_value(&self, block: usize, sol: &Self::Solution, x: &[f64]) -> f64;
    /// Adds the capacity usage of `sol` into `load`.
    fn add_load(&self, block: usize, sol: &Self::Solution, load: &mut [f64]);
}

fn check_point<D: SeparableDual + ?Sized>(dual: &D, x: &[f64]) -> Result<()> {
    if x.len() != dual.machines() {
        return Err(Error::DimensionMismatch {
            expected: dual.machines(),
            found: x.len(),
        });
    }
    Ok(())
}

/// `L(x) = Σ_b term_b(x) − x·T` with slack `load − T`, in the maximization frame.
pub fn lagrangian<D: SeparableDual + ?Sized>(
    dual: &D,
    solutions: &[D::Solution],
    x: &[f64],
    exact: bool,
) -> SubgradientReport {
    let mut load = vec![0.0; dual.machines()];
    let mut value = 0.0;
    for (b, sol) in solutions.iter().enumerate() {
        value += dual.block_value(b, sol, x);
        dual.add_load(b, sol, &mut load);
    }
    let caps = dual.capacities();
    for m in 0..dual.machines() {
        value -= x[m] * caps[m];
        load[m] -= caps[m];
    }
    SubgradientReport {
        value,
        gradient: DenseVector::from_raw(load),
        exact,
    }
}

pub fn solve_all<D: SeparableDual + ?Sized>(dual: &D, x: &[f64]) -> Vec<D::Solution> {
    (0..dual.blocks()).map(|b| dual.solve_block(b, x)).collect()
}

pub struct DualOracle<'a, D> {
    dual: &'a D,
}

impl<'a, D: SeparableDual> DualOracle<'a, D> {
    pub fn new(dual: &'a D) -> Self {
        DualOracle { dual }
    }
}

impl<D: SeparableDual> Oracle for DualOracle<'_, D> {
    fn dim(&self) -> usize {
        self.dual.machines()
    }

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn region(&self) -> FeasibleRegion {
        FeasibleRegion::NonNegativeOrthant
    }

    fn evaluate(&mut self, x: &DenseVector) -> Result<SubgradientReport> {
        check_point(self.dual, x)?;
        let sols = solve_all(self.dual, x);
        Ok(lagrangian(self.dual, &sols, x, true))
    }
}

/// Surrogate-dual oracle over groups of `group_size` consecutive blocks.
///
/// Stale block solutions stay feasible for the relaxed problem, so the
/// Lagrangian evaluated with them is a valid approximate value at any `x`.
pub struct IncrementalDual<'a, D: SeparableDual> {
    dual: &'a D,
    group_size: usize,
    cache: Option<Vec<D::Solution>>,
    cursor: usize,
    work: f64,
}

impl<'a, D: SeparableDual> IncrementalDual<'a, D> {
    pub fn new(dual: &'a D, group_size: usize) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::InvalidArgument("group size must be >= 1".into()));
        }
        Ok(IncrementalDual {
            dual,
            group_size,
            cache: None,
            cursor: 0,
            work: 0.0,
        })
    }

    pub fn groups(&self) -> usize {
        self.dual.blocks().div_ceil(self.group_size)
    }

    fn full(&mut self, x: &[f64]) -> SubgradientReport {
        let sols = solve_all(self.dual, x);
        let report = lagrangian(self.dual, &sols, x, true);
        self.cache = Some(sols);
        self.cursor = 0;
        self.work += 1.0;
        report
    }
}

impl<D: SeparableDual> Oracle for IncrementalDual<'_, D> {
    fn dim(&self) -> usize {
        self.dual.machines()
    }

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn region(&self) -> FeasibleRegion {
        FeasibleRegion::NonNegativeOrthant
    }

    fn evaluate(&mut self, x: &DenseVector) -> Result<SubgradientReport> {
        check_point(self.dual, x)?;
        Ok(self.full(x))
    }

    fn work(&self) -> Option<f64> {
        Some(self.work)
    }
}

impl<D: SeparableDual> ApproximateOracle for IncrementalDual<'_, D> {
    fn evaluate_approx(
        &mut self,
        x: &DenseVector,
        level: f64,
        epsilon: f64,
    ) -> Result<SubgradientReport> {
        check_point(self.dual, x)?;
        let Some(mut sols) = self.cache.take() else {
            return Ok(self.full(x));
        };
        let groups = self.groups();
        let blocks = self.dual.blocks();
        let mut report = None;
        for refreshed in 1..=groups {
            let g = self.cursor;
            self.cursor = (self.cursor + 1) % groups;
            let start = g * self.group_size;
            let end = (start + self.group_size).min(blocks);
            for b in start..end {
                sols[b] = self.dual.solve_block(b, x);
            }
            self.work += (end - start) as f64 / blocks as f64;
            let exact = refreshed == groups;
            let candidate = lagrangian(self.dual, &sols, x, exact);
            if exact || Sense::Maximize.clears_level(candidate.value, level, epsilon) {
                report = Some(candidate);
                break;
            }
        }
        self.cache = Some(sols);
        Ok(report.expect("loop ends with the exact report"))
    }
}
