//! Least-squares finite elements for the P_N system with piecewise-linear
//! Lagrange elements.
//!
//! Unknowns are interleaved node by node: dof `node * (N+1) + n` holds φ_n at
//! that node, which keeps the half-bandwidth at `2(N+1) - 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{solve_spd, BandError, BandMatrix, SolveReport};
use crate::pn_model::{ModelError, PnOperator, Side, SlabProblem};
use crate::solution::{FluxSolution, SolutionError};

#[derive(Debug, Error)]
pub enum LsfeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("mesh nodes must be strictly increasing with at least two nodes")]
    BadMesh,
    #[error("mesh spans [{mesh_lo}, {mesh_hi}] but the slab is [{x_l}, {x_r}]")]
    DomainMismatch {
        mesh_lo: f64,
        mesh_hi: f64,
        x_l: f64,
        x_r: f64,
    },
    #[error("element {element} = [{lo}, {hi}] crosses a material interface")]
    Straddle { element: usize, lo: f64, hi: f64 },
    #[error("coefficient vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("grid point {0} outside the mesh")]
    OutOfDomain(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self, LsfeError> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes.iter().any(|v| !v.is_finite()) {
            return Err(LsfeError::BadMesh);
        }
        Ok(Mesh1D { nodes })
    }

    pub fn uniform(x_l: f64, x_r: f64, elements: usize) -> Result<Self, LsfeError> {
        if elements == 0 {
            return Err(LsfeError::BadMesh);
        }
        Self::new(crate::solution::uniform_grid(x_l, x_r, elements + 1))
    }

    /// Uniform mesh with the nearest node moved onto each material interface.
    pub fn conforming(problem: &SlabProblem, elements: usize) -> Result<Self, LsfeError> {
        let mut nodes = Self::uniform(problem.x_l(), problem.x_r(), elements)?.nodes;
        for s in problem.interfaces() {
            let i = (1..nodes.len() - 1)
                .min_by(|&a, &b| (nodes[a] - s).abs().total_cmp(&(nodes[b] - s).abs()))
                .ok_or(LsfeError::BadMesh)?;
            nodes[i] = s;
        }
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn honors(&self, problem: &SlabProblem) -> bool {
        problem.interfaces().iter().all(|s| self.nodes.contains(s))
    }
}

/// Three-point Gauss–Legendre rule on [-1, 1].
const GAUSS: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

#[derive(Debug, Clone)]
pub struct FemSystem {
    pub n_moments: usize,
    pub n_nodes: usize,
    pub matrix: BandMatrix,
    pub rhs: Vec<f64>,
}

impl FemSystem {
    pub fn dof(&self, node: usize, moment: usize) -> usize {
        node * self.n_moments + moment
    }

    /// Least-squares functional up to the constant `‖q‖²`: `cᵀAc − 2bᵀc`.
    pub fn functional(&self, c: &[f64]) -> f64 {
        self.matrix.quadratic_form(c) - 2.0 * self.rhs.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn element_region(problem: &SlabProblem, e: usize, lo: f64, hi: f64) -> Result<usize, LsfeError> {
    let r = problem.region_index(0.5 * (lo + hi))?;
    let reg = &problem.regions[r];
    if lo < reg.x_lo || hi > reg.x_hi {
        return Err(LsfeError::Straddle { element: e, lo, hi });
    }
    Ok(r)
}

/// Assembles the least-squares normal equations, elements in the given order.
pub fn assemble_in_order(
    problem: &SlabProblem,
    mesh: &Mesh1D,
    boundary_weight: f64,
    order: &[usize],
) -> Result<FemSystem, LsfeError> {
    let (mesh_lo, mesh_hi) = (mesh.nodes[0], mesh.nodes[mesh.n_nodes() - 1]);
    if mesh_lo != problem.x_l() || mesh_hi != problem.x_r() {
        return Err(LsfeError::DomainMismatch {
            mesh_lo,
            mesh_hi,
            x_l: problem.x_l(),
            x_r: problem.x_r(),
        });
    }
    let op = PnOperator::new(problem)?;
    let m = op.n_moments();
    let a = op.streaming();
    let size = m * mesh.n_nodes();
    let mut matrix = BandMatrix::zeros(size, 2 * m - 1);
    let mut rhs = vec![0.0; size];
    // columns[j*m + k] = L applied to basis (node j of the element, moment k)
    let mut columns = vec![0.0; 2 * m * m];
    // element contributions are summed locally and scattered once, so the
    // result does not depend on the element visiting order
    let mut local_matrix = vec![0.0; 4 * m * m];
    let mut local_rhs = vec![0.0; 2 * m];
    for &e in order {
        let (lo, hi) = mesh.element(e);
        let local = &op.regions()[element_region(problem, e, lo, hi)?];
        let h = hi - lo;
        local_matrix.fill(0.0);
        local_rhs.fill(0.0);
        for &(xi, w) in &GAUSS {
            let x = lo + 0.5 * (xi + 1.0) * h;
            let wt = 0.5 * w * h;
            let shape = [(hi - x) / h, (x - lo) / h];
            let slope = [-1.0 / h, 1.0 / h];
            for j in 0..2 {
                for k in 0..m {
                    let col = &mut columns[(j * m + k) * m..(j * m + k + 1) * m];
                    for n in 0..m {
                        let mut v = a[(n, k)] * slope[j];
                        if n == k {
                            v += local.collision[n] * shape[j];
                        }
                        col[n] = local.row_scale[n] * v;
                    }
                }
            }
            let q0 = local.source.eval(x);
            for p in 0..2 * m {
                let cp = &columns[p * m..(p + 1) * m];
                local_rhs[p] += wt * cp[0] * q0;
                for r in 0..2 * m {
                    let cr = &columns[r * m..(r + 1) * m];
                    let dot: f64 = cp.iter().zip(cr).map(|(u, v)| u * v).sum();
                    local_matrix[p * 2 * m + r] += wt * dot;
                }
            }
        }
        let base = e * m;
        for p in 0..2 * m {
            rhs[base + p] += local_rhs[p];
            for r in 0..2 * m {
                matrix.add(base + p, base + r, local_matrix[p * 2 * m + r]);
            }
        }
    }
    for (side, node) in [(Side::Left, 0), (Side::Right, mesh.n_nodes() - 1)] {
        let b = problem.boundary_rows(side)?;
        for row in 0..b.nrows() {
            for p in 0..m {
                for r in 0..m {
                    matrix.add(node * m + p, node * m + r, boundary_weight * b[(row, p)] * b[(row, r)]);
                }
            }
        }
    }
    Ok(FemSystem {
        n_moments: m,
        n_nodes: mesh.n_nodes(),
        matrix,
        rhs,
    })
}

pub fn assemble(problem: &SlabProblem, mesh: &Mesh1D, boundary_weight: f64) -> Result<FemSystem, LsfeError> {
    let order: Vec<usize> = (0..mesh.n_elements()).collect();
    assemble_in_order(problem, mesh, boundary_weight, &order)
}

pub fn solve(system: &FemSystem) -> Result<(Vec<f64>, SolveReport), LsfeError> {
    Ok(solve_spd(&system.matrix, &system.rhs)?)
}

/// Piecewise-linear interpolation of every moment onto `grid`.
pub fn evaluate(
    mesh: &Mesh1D,
    coefficients: &[f64],
    n_moments: usize,
    grid: &[f64],
    label: &str,
) -> Result<FluxSolution, LsfeError> {
    let expected = n_moments * mesh.n_nodes();
    if coefficients.len() != expected {
        return Err(LsfeError::Length {
            expected,
            got: coefficients.len(),
        });
    }
    let nodes = &mesh.nodes;
    let last = nodes.len() - 1;
    let mut moments = vec![Vec::with_capacity(grid.len()); n_moments];
    for &x in grid {
        if !(x >= nodes[0] && x <= nodes[last]) {
            return Err(LsfeError::OutOfDomain(x));
        }
        let e = nodes.partition_point(|&v| v <= x).clamp(1, last) - 1;
        let t = (x - nodes[e]) / (nodes[e + 1] - nodes[e]);
        for (n, m) in moments.iter_mut().enumerate() {
            let (a, b) = (coefficients[e * n_moments + n], coefficients[(e + 1) * n_moments + n]);
            m.push(if t == 0.0 { a } else if t == 1.0 { b } else { (1.0 - t) * a + t * b });
        }
    }
    Ok(FluxSolution::new(grid.to_vec(), moments, label)?)
}

#[derive(Debug, Clone)]
pub struct LsfeResult {
    pub mesh: Mesh1D,
    pub coefficients: Vec<f64>,
    pub n_moments: usize,
    pub report: SolveReport,
}

impl LsfeResult {
    pub fn evaluate(&self, grid: &[f64], label: &str) -> Result<FluxSolution, LsfeError> {
        evaluate(&self.mesh, &self.coefficients, self.n_moments, grid, label)
    }

    pub fn nodal_phi0(&self) -> Vec<f64> {
        self.coefficients.iter().step_by(self.n_moments).copied().collect()
    }
}

/// Assemble with unit boundary weight and solve.
pub fn solve_problem(problem: &SlabProblem, mesh: &Mesh1D) -> Result<LsfeResult, LsfeError> {
    let system = assemble(problem, mesh, 1.0)?;
    let (coefficients, report) = solve(&system)?;
    Ok(LsfeResult {
        mesh: mesh.clone(),
        coefficients,
        n_moments: system.n_moments,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pn_model::{BoundaryKind, MaterialRegion, Polynomial, ScalingMode};

    fn slab(source: f64) -> SlabProblem {
        SlabProblem::new(
            vec![MaterialRegion::new(0.0, 4.0, 2.0, 0.5, Polynomial::constant(source)).unwrap()],
            1,
            BoundaryKind::Vacuum,
            BoundaryKind::Vacuum,
            ScalingMode::Unscaled,
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let p = slab(0.0);
        let res = solve_problem(&p, &Mesh1D::uniform(0.0, 4.0, 8).unwrap()).unwrap();
        assert!(res.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn matrix_is_symmetric_and_narrow() {
        let p = slab(1.0).with_order(3).unwrap();
        let sys = assemble(&p, &Mesh1D::uniform(0.0, 4.0, 6).unwrap(), 1.0).unwrap();
        assert_eq!(sys.matrix.max_asymmetry(), 0.0);
        assert!(sys.matrix.occupied_bandwidth() <= 2 * 4 + 1);
    }

    #[test]
    fn evaluate_nodes_and_midpoints() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 2).unwrap();
        let c = vec![1.0, 10.0, 3.0, 20.0, -1.0, 30.0];
        let s = evaluate(&mesh, &c, 2, &[0.0, 0.5, 1.0, 1.5, 2.0], "").unwrap();
        assert_eq!(s.moments[0], vec![1.0, 2.0, 3.0, 1.0, -1.0]);
        assert_eq!(s.moments[1], vec![10.0, 15.0, 20.0, 25.0, 30.0]);
        assert!(evaluate(&mesh, &c, 2, &[2.5], "").is_err());
    }

    #[test]
    fn straddling_element_rejected() {
        let p = SlabProblem::new(
            vec![
                MaterialRegion::new(0.0, 1.5, 1.0, 1.0, Polynomial::constant(1.0)).unwrap(),
                MaterialRegion::new(1.5, 3.0, 2.0, 0.1, Polynomial::zero()).unwrap(),
            ],
            1,
            BoundaryKind::Reflective,
            BoundaryKind::Vacuum,
            ScalingMode::Unscaled,
            None,
        )
        .unwrap();
        let bad = Mesh1D::uniform(0.0, 3.0, 3).unwrap();
        assert!(matches!(assemble(&p, &bad, 1.0), Err(LsfeError::Straddle { .. })));
        let good = Mesh1D::conforming(&p, 3).unwrap();
        assert!(good.honors(&p));
        assert!(assemble(&p, &good, 1.0).is_ok());
    }

    #[test]
    fn domain_mismatch_rejected() {
        let p = slab(1.0);
        let mesh = Mesh1D::uniform(0.0, 5.0, 5).unwrap();
        assert!(matches!(assemble(&p, &mesh, 1.0), Err(LsfeError::DomainMismatch { .. })));
    }
}
