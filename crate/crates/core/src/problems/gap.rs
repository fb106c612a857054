//! Lagrangian dual of the generalized assignment problem with the machine
//! capacity rows relaxed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dual::{lagrangian, solve_all, SeparableDual};
use super::Metadata;
use crate::error::{Error, Result};
use crate::linfeas::{check_feasible, Cut, FeasibilityVerdict, DEFAULT_TOL_FEAS};
use crate::types::{DenseVector, FeasibleRegion, SubgradientReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDualInstance {
    #[serde(default)]
    pub name: Option<String>,
    pub machines: usize,
    pub jobs: usize,
    /// `costs[j][m]`
    pub costs: Vec<Vec<f64>>,
    /// `times[j][m]`
    pub times: Vec<Vec<f64>>,
    pub capacities: Vec<f64>,
    #[serde(default)]
    pub known_fstar: Option<f64>,
    #[serde(default)]
    pub known_xstar: Option<DenseVector>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl GapDualInstance {
    pub fn new(costs: Vec<Vec<f64>>, times: Vec<Vec<f64>>, capacities: Vec<f64>) -> Result<Self> {
        let inst = GapDualInstance {
            name: None,
            machines: capacities.len(),
            jobs: costs.len(),
            costs,
            times,
            capacities,
            known_fstar: None,
            known_xstar: None,
            metadata: Metadata::default(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.machines == 0 || self.jobs == 0 {
            return Err(Error::InvalidArgument(
                "GAP needs at least one machine and one job".into(),
            ));
        }
        let mismatch = |expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected, found })
            }
        };
        mismatch(self.machines, self.capacities.len())?;
        mismatch(self.jobs, self.costs.len())?;
        mismatch(self.jobs, self.times.len())?;
        for row in self.costs.iter().chain(&self.times) {
            mismatch(self.machines, row.len())?;
        }
        let all = self
            .costs
            .iter()
            .chain(&self.times)
            .flatten()
            .chain(&self.capacities);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GAP instance data".into()));
        }
        if self.times.iter().flatten().any(|&t| t < 0.0) {
            return Err(Error::InvalidArgument(
                "processing times must be nonnegative".into(),
            ));
        }
        if self.capacities.iter().any(|&c| c <= 0.0) {
            return Err(Error::InvalidArgument("capacities must be positive".into()));
        }
        if let Some(xs) = &self.known_xstar {
            mismatch(self.machines, xs.dim())?;
        }
        Ok(())
    }

    /// Assignment chosen by each job at `x` (lowest machine index on ties).
    pub fn assignment(&self, x: &[f64]) -> Vec<usize> {
        solve_all(self, x)
    }

    /// Correlated instance in the style of OR-Library type D:
    /// `t ~ U{1..100}`, `c = 111 − t + U{−10..10}`, `T_m = ⌊0.8·Σ_j t_jm / M⌋`.
    ///
    /// Draws are repeated until the cheapest assignment at zero multipliers
    /// overloads some machine and the LP relaxation is feasible, so the dual
    /// optimum is finite and away from the origin. For small instances the
    /// dual optimum is computed and stored in `known_fstar`/`known_xstar`.
    pub fn generate(machines: usize, jobs: usize, seed: u64) -> Result<Self> {
        if machines == 0 || jobs == 0 {
            return Err(Error::InvalidArgument("GAP sizes must be >= 1".into()));
        }
        const RHO: f64 = 0.8;
        const MAX_ATTEMPTS: usize = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for attempt in 1..=MAX_ATTEMPTS {
            let mut times = vec![vec![0.0; machines]; jobs];
            let mut costs = vec![vec![0.0; machines]; jobs];
            for j in 0..jobs {
                for m in 0..machines {
                    let t = rng.gen_range(1..=100) as f64;
                    let noise = rng.gen_range(-10..=10) as f64;
                    times[j][m] = t;
                    costs[j][m] = 111.0 - t + noise;
                }
            }
            let capacities: Vec<f64> = (0..machines)
                .map(|m| {
                    let total: f64 = times.iter().map(|row| row[m]).sum();
                    (RHO * total / machines as f64).floor().max(1.0)
                })
                .collect();
            let mut inst = GapDualInstance::new(costs, times, capacities)?;
            if !inst.origin_overloads() || !inst.relaxation_feasible()? {
                continue;
            }
            let mut metadata = Metadata::new(
                Some(seed),
                "t ~ U{1..100}, c = 111 - t + U{-10..10}, T_m = floor(rho * sum_j t_jm / M)",
            );
            metadata.set("machines", machines as f64);
            metadata.set("jobs", jobs as f64);
            metadata.set("rho", RHO);
            metadata.set("attempts", attempt as f64);
            inst.metadata = metadata;
            if machines * jobs <= 400 {
                let (fstar, xstar) = inst.dual_optimum()?;
                inst.known_fstar = Some(fstar);
                inst.known_xstar = Some(xstar);
            }
            return Ok(inst);
        }
        Err(Error::SolverFailure(format!(
            "no suitable GAP draw in {MAX_ATTEMPTS} attempts"
        )))
    }

    fn origin_overloads(&self) -> bool {
        let zero = vec![0.0; self.machines];
        let sols = solve_all(self, &zero);
        let report = lagrangian(self, &sols, &zero, true);
        report.gradient.iter().any(|&slack| slack > 0.0)
    }

    /// Whether `Σ_m y_jm = 1`, `Σ_j t_jm y_jm <= T_m`, `y >= 0` has a point.
    pub fn relaxation_feasible(&self) -> Result<bool> {
        let (jm, n) = (self.machines, self.jobs * self.machines);
        let mut cuts = Vec::new();
        for j in 0..self.jobs {
            let mut row = vec![0.0; n];
            row[j * jm..(j + 1) * jm].fill(1.0);
            let neg: Vec<f64> = row.iter().map(|v| -v).collect();
            cuts.push(Cut::new(DenseVector::new(row)?, 1.0)?);
            cuts.push(Cut::new(DenseVector::new(neg)?, -1.0)?);
        }
        for m in 0..self.machines {
            let mut row = vec![0.0; n];
            for j in 0..self.jobs {
                row[j * jm + m] = self.times[j][m];
            }
            if row.iter().any(|&v| v != 0.0) {
                cuts.push(Cut::new(DenseVector::new(row)?, self.capacities[m])?);
            }
        }
        let verdict = check_feasible(&cuts, &FeasibleRegion::NonNegativeOrthant, DEFAULT_TOL_FEAS)?;
        Ok(verdict.is_feasible())
    }

    /// Maximum of the dual and a maximizer, by bisection on the value of the
    /// epigraph system `w_j <= c_jm + x_m t_jm`, `Σ w − x·T >= θ`, `x >= 0`.
    ///
    /// Each feasible verdict's witness multipliers are evaluated exactly, so
    /// the returned value is attained at the returned point.
    pub fn dual_optimum(&self) -> Result<(f64, DenseVector)> {
        let (nm, nj) = (self.machines, self.jobs);
        let dim = nm + nj;
        let mut base = Vec::new();
        for j in 0..nj {
            for m in 0..nm {
                let mut row = vec![0.0; dim];
                row[nm + j] = 1.0;
                row[m] = -self.times[j][m];
                base.push(Cut::new(DenseVector::new(row)?, self.costs[j][m])?);
            }
        }
        for m in 0..nm {
            let mut row = vec![0.0; dim];
            row[m] = -1.0;
            base.push(Cut::new(DenseVector::new(row)?, 0.0)?);
        }
        let mut value_row = vec![-1.0; dim];
        value_row[..nm].copy_from_slice(&self.capacities);
        let value_row = DenseVector::new(value_row)?;

        let mut best_x = DenseVector::zeros(nm);
        let mut lo = gap_dual_exact(&best_x, self)?.value;
        let probe = |theta: f64| -> Result<Option<DenseVector>> {
            let mut cuts = base.clone();
            cuts.push(Cut::new(value_row.clone(), -theta)?);
            match check_feasible(&cuts, &FeasibleRegion::Unconstrained, DEFAULT_TOL_FEAS)? {
                FeasibilityVerdict::Feasible(z) => {
                    let x: Vec<f64> = z[..nm].iter().map(|v| v.max(0.0)).collect();
                    Ok(Some(DenseVector::new(x)?))
                }
                FeasibilityVerdict::Infeasible => Ok(None),
            }
        };
        let scale = lo.abs().max(1.0);
        let mut width = scale;
        let mut hi = lo + width;
        let mut found_upper = false;
        for _ in 0..200 {
            match probe(hi)? {
                Some(x) => {
                    let v = gap_dual_exact(&x, self)?.value;
                    if v > lo {
                        lo = v;
                        best_x = x;
                    }
                    width *= 2.0;
                    hi = lo + width;
                }
                None => {
                    found_upper = true;
                    break;
                }
            }
        }
        if !found_upper {
            return Err(Error::SolverFailure("GAP dual appears unbounded".into()));
        }
        for _ in 0..200 {
            if hi - lo <= 1e-11 * scale {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match probe(mid)? {
                Some(x) => {
                    let v = gap_dual_exact(&x, self)?.value;
                    if v <= lo {
                        // witness only feasible within tolerance; no further progress possible
                        break;
                    }
                    lo = v;
                    best_x = x;
                }
                None => hi = mid,
            }
        }
        Ok((lo, best_x))
    }
}

impl SeparableDual for GapDualInstance {
    type Solution = usize;

    fn machines(&self) -> usize {
        self.machines
    }

    fn blocks(&self) -> usize {
        self.jobs
    }

    fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    fn solve_block(&self, j: usize, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_cost = self.costs[j][0] + x[0] * self.times[j][0];
        for m in 1..self.machines {
            let cost = self.costs[j][m] + x[m] * self.times[j][m];
            if cost < best_cost {
                best = m;
                best_cost = cost;
            }
        }
        best
    }

    fn block_value(&self, j: usize, &m: &usize, x: &[f64]) -> f64 {
        self.costs[j][m] + x[m] * self.times[j][m]
    }

    fn add_load(&self, j: usize, &m: &usize, load: &mut [f64]) {
        load[m] += self.times[j][m];
    }
}

/// Dual value `Σ_j min_m (c_jm + x_m t_jm) − x·T` and its supergradient
/// `load − T`, in the maximization frame.
pub fn gap_dual_exact(x: &[f64], inst: &GapDualInstance) -> Result<SubgradientReport> {
    if x.len() != inst.machines {
        return Err(Error::DimensionMismatch {
            expected: inst.machines,
            found: x.len(),
        });
    }
    let sols = solve_all(inst, x);
    Ok(lagrangian(inst, &sols, x, true))
}
