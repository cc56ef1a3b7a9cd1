//! Declarative case files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pnlab::cases;
use pnlab::pinn::PinnConfig;
use pnlab::pn_model::{BoundaryKind, MaterialRegion, Polynomial, ScalingMode, SlabProblem};

use crate::HarnessError;

const ASYMPTOTIC_EPS2: &str = include_str!("../cases/asymptotic_eps2.toml");
const INTERFACE: &str = include_str!("../cases/interface.toml");
const INTERFACE_TANH: &str = include_str!("../cases/interface_tanh.toml");

/// Names accepted by [`CaseFile::load`] in place of a path.
pub const BUNDLED: [&str; 3] = ["asymptotic_eps2", "interface", "interface_tanh"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Pinn,
    Lsfe,
}

impl SolverKind {
    pub fn label(&self) -> &'static str {
        match self {
            SolverKind::Pinn => "pinn",
            SolverKind::Lsfe => "lsfe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub sigma_t: f64,
    pub sigma_a: f64,
    /// Source polynomial coefficients, constant term first.
    #[serde(default)]
    pub source: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Manufactured diffusive-limit slab on [0, 10].
    Asymptotic {
        epsilon: f64,
        alpha: f64,
        #[serde(default = "one")]
        order: usize,
    },
    Slab {
        regions: Vec<RegionSpec>,
        order: usize,
        bc_left: BoundaryKind,
        bc_right: BoundaryKind,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsfeSpec {
    pub elements: usize,
}

impl Default for LsfeSpec {
    fn default() -> Self {
        LsfeSpec { elements: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Closed-form diffusion solution; asymptotic problems only.
    Analytic,
    Mc {
        histories: u64,
        seed: u64,
        #[serde(default = "cutoff")]
        weight_cutoff: f64,
    },
}

fn cutoff() -> f64 {
    1e-3
}

fn both_scalings() -> Vec<ScalingMode> {
    vec![ScalingMode::Unscaled, ScalingMode::Diffusive]
}

fn both_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Pinn, SolverKind::Lsfe]
}

fn grid_points() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub name: String,
    pub problem: ProblemSpec,
    #[serde(default = "both_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default = "both_scalings")]
    pub scalings: Vec<ScalingMode>,
    #[serde(default)]
    pub pinn: PinnConfig,
    #[serde(default)]
    pub lsfe: LsfeSpec,
    pub reference: ReferenceSpec,
    /// Evaluation points for the error metric (cells for a Monte Carlo reference).
    #[serde(default = "grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl CaseFile {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let case: CaseFile = toml::from_str(text)?;
        case.validate()?;
        Ok(case)
    }

    /// Reads `source` as a path, or as a bundled case name when no such file exists.
    pub fn load(source: &str) -> Result<Self, HarnessError> {
        let path = Path::new(source);
        if path.exists() {
            return Self::parse(&std::fs::read_to_string(path)?);
        }
        Self::bundled(source).ok_or_else(|| HarnessError::Case(format!("no case file or bundled case named {source}")))?
    }

    pub fn bundled(name: &str) -> Option<Result<Self, HarnessError>> {
        let text = match name.trim_end_matches(".toml") {
            "asymptotic_eps2" => ASYMPTOTIC_EPS2,
            "interface" => INTERFACE,
            "interface_tanh" => INTERFACE_TANH,
            _ => return None,
        };
        Some(Self::parse(text))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.problem(ScalingMode::Unscaled)?;
        if self.solvers.is_empty() || self.scalings.is_empty() {
            return Err(HarnessError::Case("need at least one solver and one scaling".into()));
        }
        if self.grid_points < 2 {
            return Err(HarnessError::Case("grid_points must be at least 2".into()));
        }
        if self.lsfe.elements == 0 {
            return Err(HarnessError::Case("lsfe.elements must be positive".into()));
        }
        self.pinn.validate()?;
        match (&self.reference, &self.problem) {
            (ReferenceSpec::Analytic, ProblemSpec::Slab { .. }) => {
                Err(HarnessError::Case("analytic reference needs an asymptotic problem".into()))
            }
            (ReferenceSpec::Mc { histories: 0, .. }, _) => Err(HarnessError::Case("histories must be positive".into())),
            _ => Ok(()),
        }
    }

    pub fn problem(&self, scaling: ScalingMode) -> Result<SlabProblem, HarnessError> {
        Ok(match &self.problem {
            ProblemSpec::Asymptotic { epsilon, alpha, order } => cases::asymptotic(*epsilon, *alpha, *order, scaling)?,
            ProblemSpec::Slab {
                regions,
                order,
                bc_left,
                bc_right,
            } => {
                let regions = regions
                    .iter()
                    .map(|r| {
                        let q = if r.source.is_empty() {
                            Polynomial::zero()
                        } else {
                            Polynomial(r.source.clone())
                        };
                        MaterialRegion::new(r.x_lo, r.x_hi, r.sigma_t, r.sigma_a, q)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                SlabProblem::new(regions, *order, *bc_left, *bc_right, scaling, None)?
            }
        })
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.problem {
            ProblemSpec::Asymptotic { epsilon, .. } => Some(epsilon),
            ProblemSpec::Slab { .. } => None,
        }
    }

    /// Copy with a different ε; only asymptotic cases carry one.
    pub fn with_epsilon(&self, eps: f64) -> Result<Self, HarnessError> {
        let mut c = self.clone();
        match &mut c.problem {
            ProblemSpec::Asymptotic { epsilon, .. } => *epsilon = eps,
            ProblemSpec::Slab { .. } => {
                return Err(HarnessError::Case(format!("case {} has no epsilon to sweep", self.name)))
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Overrides every randomness source: PINN restarts become `seed, seed+1, …`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        let n = c.pinn.seeds.len() as u64;
        c.pinn.seeds = (seed..seed + n).collect();
        if let ReferenceSpec::Mc { seed: s, .. } = &mut c.reference {
            *s = seed;
        }
        c
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        Ok(toml::to_string(self)?)
    }
}
