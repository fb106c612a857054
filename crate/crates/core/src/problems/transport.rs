//! Multi-operation assignment with transport costs between consecutive
//! operations of a job. Relaxing machine capacities leaves one shortest-path
//! problem per job over a layered graph (one layer per operation).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dual::{lagrangian, solve_all, SeparableDual};
use super::Metadata;
use crate::error::{Error, Result};
use crate::types::SubgradientReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportAssignInstance {
    pub machines: usize,
    /// `costs[i][j][m]`: job `i`, operation `j`, machine `m`.
    pub costs: Vec<Vec<Vec<f64>>>,
    /// `times[i][j][m]`
    pub times: Vec<Vec<Vec<f64>>>,
    pub capacities: Vec<f64>,
    /// `transport[i][m1][m2]`, zero on the diagonal.
    pub transport: Vec<Vec<Vec<f64>>>,
    /// Jobs per incremental group.
    pub group_size: usize,
    #[serde(default)]
    pub known_fstar: Option<f64>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl TransportAssignInstance {
    pub fn jobs(&self) -> usize {
        self.costs.len()
    }

    pub fn operations(&self, job: usize) -> usize {
        self.costs[job].len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.machines;
        if m == 0 || self.jobs() == 0 || self.group_size == 0 {
            return Err(Error::InvalidArgument(
                "transport instance needs machines, jobs and group size >= 1".into(),
            ));
        }
        let check = |expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected, found })
            }
        };
        check(m, self.capacities.len())?;
        check(self.jobs(), self.times.len())?;
        check(self.jobs(), self.transport.len())?;
        for i in 0..self.jobs() {
            if self.operations(i) == 0 {
                return Err(Error::InvalidArgument(format!("job {i} has no operations")));
            }
            check(self.operations(i), self.times[i].len())?;
            for j in 0..self.operations(i) {
                check(m, self.costs[i][j].len())?;
                check(m, self.times[i][j].len())?;
            }
            check(m, self.transport[i].len())?;
            for row in &self.transport[i] {
                check(m, row.len())?;
            }
        }
        let values = self
            .costs
            .iter()
            .chain(&self.times)
            .chain(&self.transport)
            .flatten()
            .flatten()
            .chain(&self.capacities);
        if values.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transport instance data".into()));
        }
        if self.transport.iter().flatten().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "transport costs must be nonnegative".into(),
            ));
        }
        if self.times.iter().flatten().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "processing times must be nonnegative".into(),
            ));
        }
        if self.capacities.iter().any(|&c| c <= 0.0) {
            return Err(Error::InvalidArgument("capacities must be positive".into()));
        }
        Ok(())
    }

    /// Integer-valued instance: `c ~ U{1..20}`, `t ~ U{1..10}`,
    /// off-diagonal transport `~ U{0..10}`, `T_m = max(1, ⌊0.8·Σ_ij mean_m t / M⌋)`.
    pub fn generate(
        machines: usize,
        jobs: usize,
        operations: usize,
        group_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if machines == 0 || jobs == 0 || operations == 0 || group_size == 0 {
            return Err(Error::InvalidArgument(
                "transport sizes must be >= 1".into(),
            ));
        }
        const RHO: f64 = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut costs = vec![vec![vec![0.0; machines]; operations]; jobs];
        let mut times = costs.clone();
        let mut transport = vec![vec![vec![0.0; machines]; machines]; jobs];
        for i in 0..jobs {
            for j in 0..operations {
                for m in 0..machines {
                    costs[i][j][m] = rng.gen_range(1..=20) as f64;
                    times[i][j][m] = rng.gen_range(1..=10) as f64;
                }
            }
            for a in 0..machines {
                for b in 0..machines {
                    if a != b {
                        transport[i][a][b] = rng.gen_range(0..=10) as f64;
                    }
                }
            }
        }
        let mean_load: f64 = times
            .iter()
            .flatten()
            .map(|row| row.iter().sum::<f64>() / machines as f64)
            .sum();
        let cap = (RHO * mean_load / machines as f64).floor().max(1.0);
        let mut metadata = Metadata::new(
            Some(seed),
            "c ~ U{1..20}, t ~ U{1..10}, transport ~ U{0..10} off-diagonal, T_m = floor(rho * mean load / M)",
        );
        metadata.set("machines", machines as f64);
        metadata.set("jobs", jobs as f64);
        metadata.set("operations", operations as f64);
        metadata.set("rho", RHO);
        let inst = TransportAssignInstance {
            machines,
            costs,
            times,
            capacities: vec![cap; machines],
            transport,
            group_size,
            known_fstar: None,
            metadata,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn node(&self, i: usize, j: usize, m: usize, x: &[f64]) -> f64 {
        self.costs[i][j][m] + x[m] * self.times[i][j][m]
    }

    /// Cost of job `i` along `route`, accumulated operation by operation.
    pub fn route_cost(&self, i: usize, route: &[usize], x: &[f64]) -> f64 {
        let mut v = self.node(i, 0, route[0], x);
        for j in 1..route.len() {
            v += self.transport[i][route[j - 1]][route[j]];
            v += self.node(i, j, route[j], x);
        }
        v
    }
}

impl SeparableDual for TransportAssignInstance {
    type Solution = Vec<usize>;

    fn machines(&self) -> usize {
        self.machines
    }

    fn blocks(&self) -> usize {
        self.jobs()
    }

    fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    /// Layered shortest path; ties go to the lowest machine index.
    fn solve_block(&self, i: usize, x: &[f64]) -> Vec<usize> {
        let nm = self.machines;
        let ops = self.operations(i);
        let mut dist: Vec<f64> = (0..nm).map(|m| self.node(i, 0, m, x)).collect();
        let mut pred = vec![vec![0usize; nm]; ops];
        for j in 1..ops {
            let mut next = vec![0.0; nm];
            for m in 0..nm {
                let mut best_p = 0;
                let mut best = dist[0] + self.transport[i][0][m];
                for p in 1..nm {
                    let cand = dist[p] + self.transport[i][p][m];
                    if cand < best {
                        best = cand;
                        best_p = p;
                    }
                }
                pred[j][m] = best_p;
                next[m] = best + self.node(i, j, m, x);
            }
            dist = next;
        }
        let mut last = 0;
        for m in 1..nm {
            if dist[m] < dist[last] {
                last = m;
            }
        }
        let mut route = vec![0; ops];
        route[ops - 1] = last;
        for j in (1..ops).rev() {
            route[j - 1] = pred[j][route[j]];
        }
        route
    }

    fn block_value(&self, i: usize, route: &Vec<usize>, x: &[f64]) -> f64 {
        self.route_cost(i, route, x)
    }

    fn add_load(&self, i: usize, route: &Vec<usize>, load: &mut [f64]) {
        for (j, &m) in route.iter().enumerate() {
            load[m] += self.times[i][j][m];
        }
    }
}

/// Dual value and supergradient with every job solved at `x`.
pub fn transport_dual_exact(
    x: &[f64],
    inst: &TransportAssignInstance,
) -> Result<SubgradientReport> {
    if x.len() != inst.machines {
        return Err(Error::DimensionMismatch {
            expected: inst.machines,
            found: x.len(),
        });
    }
    let sols = solve_all(inst, x);
    Ok(lagrangian(inst, &sols, x, true))
}
