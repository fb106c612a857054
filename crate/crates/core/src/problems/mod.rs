//! Built-in problem families and the JSON instance format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ApproximateOracle, DenseVector, FeasibleRegion, Oracle, Sense};

pub mod dual;
pub mod gap;
pub mod l1;
pub mod orlib;
pub mod transport;

pub use dual::{DualOracle, IncrementalDual, SeparableDual};
pub use gap::{gap_dual_exact, GapDualInstance};
pub use l1::{l1_exact, L1Incremental, L1Instance, L1Oracle};
pub use orlib::{parse_gap_orlib, write_gap_orlib};
pub use transport::{transport_dual_exact, TransportAssignInstance};

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

/// Provenance of an instance: generator seed, a description of the sampling
/// rule, and its numeric parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub distribution: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl Metadata {
    pub fn new(seed: Option<u64>, distribution: &str) -> Self {
        Metadata {
            seed,
            distribution: distribution.to_string(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.parameters.insert(key.to_string(), value);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    L1,
    Gap,
    Transport,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Family::L1),
            "gap" => Ok(Family::Gap),
            "transport" => Ok(Family::Transport),
            _ => Err(Error::InvalidArgument(format!(
                "unknown problem family {s:?} (expected l1, gap or transport)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemInstance {
    L1(L1Instance),
    Gap(GapDualInstance),
    Transport(TransportAssignInstance),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u32,
    #[serde(flatten)]
    problem: ProblemInstance,
}

impl ProblemInstance {
    /// `sizes`: `MxN` rows and columns for l1, `MxJ` machines and jobs for
    /// gap, `MxJxO[xG]` machines, jobs, operations and group size for transport.
    pub fn generate(family: Family, sizes: &[usize], seed: u64) -> Result<Self> {
        let bad =
            || Error::InvalidArgument(format!("wrong number of sizes {sizes:?} for {family:?}"));
        match family {
            Family::L1 => match *sizes {
                [rows, cols] => Ok(ProblemInstance::L1(L1Instance::generate(rows, cols, seed)?)),
                _ => Err(bad()),
            },
            Family::Gap => match *sizes {
                [machines, jobs] => Ok(ProblemInstance::Gap(GapDualInstance::generate(
                    machines, jobs, seed,
                )?)),
                _ => Err(bad()),
            },
            Family::Transport => {
                let (m, j, o, g) = match *sizes {
                    [m, j, o] => (m, j, o, 10.min(j.max(1))),
                    [m, j, o, g] => (m, j, o, g),
                    _ => return Err(bad()),
                };
                Ok(ProblemInstance::Transport(
                    TransportAssignInstance::generate(m, j, o, g, seed)?,
                ))
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ProblemInstance::L1(_) => Family::L1,
            ProblemInstance::Gap(_) => Family::Gap,
            ProblemInstance::Transport(_) => Family::Transport,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemInstance::L1(p) => p.validate(),
            ProblemInstance::Gap(p) => p.validate(),
            ProblemInstance::Transport(p) => p.validate(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemInstance::L1(p) => p.cols(),
            ProblemInstance::Gap(p) => p.machines,
            ProblemInstance::Transport(p) => p.machines,
        }
    }

    pub fn sense(&self) -> Sense {
        match self {
            ProblemInstance::L1(_) => Sense::Minimize,
            _ => Sense::Maximize,
        }
    }

    pub fn region(&self) -> FeasibleRegion {
        match self {
            ProblemInstance::L1(_) => FeasibleRegion::Unconstrained,
            _ => FeasibleRegion::NonNegativeOrthant,
        }
    }

    /// Optimal value in the instance's own sense, when known.
    pub fn known_fstar(&self) -> Option<f64> {
        match self {
            ProblemInstance::L1(p) => p.known_fstar,
            ProblemInstance::Gap(p) => p.known_fstar,
            ProblemInstance::Transport(p) => p.known_fstar,
        }
    }

    pub fn known_xstar(&self) -> Option<&DenseVector> {
        match self {
            ProblemInstance::L1(p) => p.known_xstar.as_ref(),
            ProblemInstance::Gap(p) => p.known_xstar.as_ref(),
            ProblemInstance::Transport(_) => None,
        }
    }

    pub fn metadata(&self) -> &Metadata {
        match self {
            ProblemInstance::L1(p) => &p.metadata,
            ProblemInstance::Gap(p) => &p.metadata,
            ProblemInstance::Transport(p) => &p.metadata,
        }
    }

    pub fn exact_oracle(&self) -> Box<dyn Oracle + '_> {
        match self {
            ProblemInstance::L1(p) => Box::new(L1Oracle::new(p)),
            ProblemInstance::Gap(p) => Box::new(DualOracle::new(p)),
            ProblemInstance::Transport(p) => Box::new(DualOracle::new(p)),
        }
    }

    /// Incremental oracle; `group_size` counts rows (l1) or jobs. Defaults:
    /// 50 rows, 10 GAP jobs, the transport instance's own group size.
    pub fn approximate_oracle(
        &self,
        group_size: Option<usize>,
    ) -> Result<Box<dyn ApproximateOracle + '_>> {
        Ok(match self {
            ProblemInstance::L1(p) => Box::new(L1Incremental::new(p, group_size.unwrap_or(50))?),
            ProblemInstance::Gap(p) => Box::new(IncrementalDual::new(p, group_size.unwrap_or(10))?),
            ProblemInstance::Transport(p) => {
                Box::new(IncrementalDual::new(p, group_size.unwrap_or(p.group_size))?)
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = InstanceFile {
            schema_version: INSTANCE_SCHEMA_VERSION,
            problem: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.schema_version != INSTANCE_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported instance schema_version {}",
                file.schema_version
            )));
        }
        file.problem.validate()?;
        Ok(file.problem)
    }

    /// Reads a JSON instance, or an OR-Library GAP file when the content does
    /// not start with `{`. The file stem selects a bundled reference value.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            let stem = path.file_stem().and_then(|s| s.to_str());
            Ok(ProblemInstance::Gap(parse_gap_orlib(&text, stem)?))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Parses `AxBxC` size lists.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(['x', 'X'])
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::InvalidArgument(format!("bad size list {text:?}")))
        })
        .collect()
}
