//! Slab-geometry P_N moment model.
//!
//! Moments are taken against unnormalized Legendre polynomials, so the
//! n-th moment equation reads
//!
//! ```text
//! n/(2n+1) φ'_{n-1} + (n+1)/(2n+1) φ'_{n+1} + c_n φ_n = q δ_{n0}
//! ```
//!
//! with `c_0 = σ_a`, `c_n = σ_t` for `n ≥ 1` and the closure `φ_{N+1} = 0`.
//! The diffusive scaling multiplies every row `n ≥ 1` by
//! `τ = sqrt(σ_a / σ_t)` and leaves row 0 untouched.

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("P_N order must be odd and >= 1, got {0}")]
    InvalidOrder(usize),
    #[error("invalid material region: {0}")]
    InvalidRegion(String),
    #[error("regions must tile the slab contiguously (gap or overlap at x = {0})")]
    NotContiguous(f64),
    #[error("problem has no material regions")]
    Empty,
    #[error("invalid epsilon scaling: {0}")]
    InvalidScaling(String),
    #[error("position {x} lies outside the slab [{x_l}, {x_r}]")]
    OutOfDomain { x: f64, x_l: f64, x_r: f64 },
    #[error("vector length {got} does not match N+1 = {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Polynomial in `x` with coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Polynomial(vec![c])
    }

    pub fn zero() -> Self {
        Polynomial(vec![0.0])
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Polynomial(self.0.iter().map(|c| c * factor).collect())
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = |x: f64| {
            self.0
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + c / (k as f64 + 1.0))
                * x
        };
        anti(b) - anti(a)
    }

    /// Minimum and maximum over `[a, b]`, exact for degree <= 2.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut candidates = vec![self.eval(a), self.eval(b)];
        if self.degree() == 2 {
            let vertex = -self.0[1] / (2.0 * self.0[2]);
            if vertex > a && vertex < b {
                candidates.push(self.eval(vertex));
            }
        }
        candidates
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// One homogeneous slab layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRegion {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Total cross section (1/cm).
    pub sigma_t: f64,
    /// Absorption cross section (1/cm).
    pub sigma_a: f64,
    /// Isotropic source density, polynomial in x of degree <= 2.
    pub source: Polynomial,
}

impl MaterialRegion {
    pub fn new(
        x_lo: f64,
        x_hi: f64,
        sigma_t: f64,
        sigma_a: f64,
        source: Polynomial,
    ) -> Result<Self, ModelError> {
        let region = MaterialRegion {
            x_lo,
            x_hi,
            sigma_t,
            sigma_a,
            source,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidRegion(msg));
        if !(self.x_lo.is_finite() && self.x_hi.is_finite()) || self.x_lo >= self.x_hi {
            return bad(format!("x_lo = {} must be < x_hi = {}", self.x_lo, self.x_hi));
        }
        if !(self.sigma_t > 0.0) || !self.sigma_t.is_finite() {
            return bad(format!("sigma_t = {} must be positive", self.sigma_t));
        }
        if !(self.sigma_a >= 0.0 && self.sigma_a <= self.sigma_t) {
            return bad(format!(
                "sigma_a = {} must lie in [0, sigma_t = {}]",
                self.sigma_a, self.sigma_t
            ));
        }
        if self.source.0.is_empty() || self.source.degree() > 2 {
            return bad("source must be a polynomial of degree <= 2".into());
        }
        let (lo, _) = self.source.range_on(self.x_lo, self.x_hi);
        if lo < 0.0 {
            return bad(format!("source is negative somewhere (min {lo})"));
        }
        Ok(())
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_t - self.sigma_a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi
    }
}

/// Diffusive ε-scaling: `σ_t = 1/ε`, `σ_a = αε`, source multiplied by ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScaling {
    pub epsilon: f64,
    pub alpha: f64,
}

impl EpsilonScaling {
    pub fn new(epsilon: f64, alpha: f64) -> Result<Self, ModelError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ModelError::InvalidScaling(format!("epsilon = {epsilon}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ModelError::InvalidScaling(format!("alpha = {alpha}")));
        }
        Ok(EpsilonScaling { epsilon, alpha })
    }

    pub fn sigma_t(&self) -> f64 {
        1.0 / self.epsilon
    }

    pub fn sigma_a(&self) -> f64 {
        self.alpha * self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    /// τ = 1.
    Unscaled,
    /// τ = sqrt(σ_a / σ_t), evaluated per region.
    #[serde(rename = "scaled", alias = "diffusive")]
    Diffusive,
}

impl ScalingMode {
    pub fn label(&self) -> &'static str {
        match self {
            ScalingMode::Unscaled => "unscaled",
            ScalingMode::Diffusive => "scaled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Vacuum,
    Reflective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    pub side: Side,
}

impl BoundaryCondition {
    /// Rows `B_m` of the homogeneous condition `B Φ = 0` at this boundary.
    pub fn rows(&self, order_n: usize) -> Result<DMatrix<f64>, ModelError> {
        match self.kind {
            BoundaryKind::Vacuum => marshak_matrix(order_n, self.side),
            BoundaryKind::Reflective => reflective_rows(order_n),
        }
    }
}

/// Cross sections and scaling after ε-conversion, for one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoefficients {
    pub sigma_t: f64,
    pub sigma_a: f64,
    /// Multiplier applied to the region's source polynomial.
    pub source_factor: f64,
    /// Row scale for moment equations `n >= 1`.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabProblem {
    pub regions: Vec<MaterialRegion>,
    pub order_n: usize,
    pub bc_left: BoundaryKind,
    pub bc_right: BoundaryKind,
    pub scaling: ScalingMode,
    /// When present, overrides every region's cross sections and scales its source.
    pub eps: Option<EpsilonScaling>,
}

impl SlabProblem {
    pub fn new(
        regions: Vec<MaterialRegion>,
        order_n: usize,
        bc_left: BoundaryKind,
        bc_right: BoundaryKind,
        scaling: ScalingMode,
        eps: Option<EpsilonScaling>,
    ) -> Result<Self, ModelError> {
        let problem = SlabProblem {
            regions,
            order_n,
            bc_left,
            bc_right,
            scaling,
            eps,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_order(self.order_n)?;
        if self.regions.is_empty() {
            return Err(ModelError::Empty);
        }
        for r in &self.regions {
            r.validate()?;
        }
        for pair in self.regions.windows(2) {
            if pair[0].x_hi != pair[1].x_lo {
                return Err(ModelError::NotContiguous(pair[0].x_hi));
            }
        }
        if let Some(e) = self.eps {
            EpsilonScaling::new(e.epsilon, e.alpha)?;
        }
        Ok(())
    }

    pub fn x_l(&self) -> f64 {
        self.regions[0].x_lo
    }

    pub fn x_r(&self) -> f64 {
        self.regions[self.regions.len() - 1].x_hi
    }

    pub fn width(&self) -> f64 {
        self.x_r() - self.x_l()
    }

    pub fn n_moments(&self) -> usize {
        self.order_n + 1
    }

    pub fn with_scaling(&self, scaling: ScalingMode) -> Self {
        SlabProblem {
            scaling,
            ..self.clone()
        }
    }

    pub fn with_order(&self, order_n: usize) -> Result<Self, ModelError> {
        check_order(order_n)?;
        Ok(SlabProblem {
            order_n,
            ..self.clone()
        })
    }

    /// Material interfaces strictly inside the slab.
    pub fn interfaces(&self) -> Vec<f64> {
        self.regions[..self.regions.len() - 1]
            .iter()
            .map(|r| r.x_hi)
            .collect()
    }

    /// Index of the region holding `x`; an interface point belongs to the left region.
    pub fn region_index(&self, x: f64) -> Result<usize, ModelError> {
        if !(x >= self.x_l() && x <= self.x_r()) {
            return Err(ModelError::OutOfDomain {
                x,
                x_l: self.x_l(),
                x_r: self.x_r(),
            });
        }
        Ok(self
            .regions
            .iter()
            .position(|r| x <= r.x_hi)
            .unwrap_or(self.regions.len() - 1))
    }

    pub fn coefficients(&self, region: usize) -> EffectiveCoefficients {
        let r = &self.regions[region];
        let (sigma_t, sigma_a, source_factor) = match self.eps {
            Some(e) => (e.sigma_t(), e.sigma_a(), e.epsilon),
            None => (r.sigma_t, r.sigma_a, 1.0),
        };
        let tau = match (self.scaling, self.eps) {
            (ScalingMode::Unscaled, _) => 1.0,
            (ScalingMode::Diffusive, Some(e)) => e.alpha.sqrt() * e.epsilon,
            (ScalingMode::Diffusive, None) => (sigma_a / sigma_t).sqrt(),
        };
        EffectiveCoefficients {
            sigma_t,
            sigma_a,
            source_factor,
            tau,
        }
    }

    /// Source term `q(x)` entering row 0, ε-factor included.
    pub fn source_at(&self, x: f64) -> Result<f64, ModelError> {
        let i = self.region_index(x)?;
        Ok(self.coefficients(i).source_factor * self.regions[i].source.eval(x))
    }

    /// Equivalent problem in physical cross sections (ε folded into the regions).
    pub fn to_physical(&self) -> SlabProblem {
        let regions = (0..self.regions.len())
            .map(|i| {
                let c = self.coefficients(i);
                let r = &self.regions[i];
                MaterialRegion {
                    x_lo: r.x_lo,
                    x_hi: r.x_hi,
                    sigma_t: c.sigma_t,
                    sigma_a: c.sigma_a,
                    source: r.source.scaled(c.source_factor),
                }
            })
            .collect();
        SlabProblem {
            regions,
            eps: None,
            ..self.clone()
        }
    }

    pub fn operator(&self) -> Result<PnOperator, ModelError> {
        PnOperator::new(self)
    }

    pub fn boundary_rows(&self, side: Side) -> Result<DMatrix<f64>, ModelError> {
        let kind = match side {
            Side::Left => self.bc_left,
            Side::Right => self.bc_right,
        };
        BoundaryCondition { kind, side }.rows(self.order_n)
    }
}

fn check_order(order_n: usize) -> Result<(), ModelError> {
    if order_n == 0 || order_n % 2 == 0 {
        Err(ModelError::InvalidOrder(order_n))
    } else {
        Ok(())
    }
}

/// Streaming matrix `A` with `A[n][n-1] = n/(2n+1)` and `A[n][n+1] = (n+1)/(2n+1)`.
pub fn streaming_matrix(order_n: usize) -> Result<DMatrix<f64>, ModelError> {
    check_order(order_n)?;
    let size = order_n + 1;
    Ok(DMatrix::from_fn(size, size, |n, k| {
        let denom = (2 * n + 1) as f64;
        if n >= 1 && k == n - 1 {
            n as f64 / denom
        } else if k == n + 1 {
            (n + 1) as f64 / denom
        } else {
            0.0
        }
    }))
}

type Rational = Ratio<i128>;

/// Coefficients of the Legendre polynomials `P_0 ..= P_max` in the monomial basis.
fn legendre_coefficients(max: usize) -> Vec<Vec<Rational>> {
    let mut polys: Vec<Vec<Rational>> = vec![vec![Rational::from_integer(1)]];
    if max >= 1 {
        polys.push(vec![Rational::from_integer(0), Rational::from_integer(1)]);
    }
    for n in 1..max {
        // (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}
        let mut next = vec![Rational::from_integer(0); n + 2];
        for (k, c) in polys[n].iter().enumerate() {
            next[k + 1] += c * Rational::from_integer(2 * n as i128 + 1);
        }
        for (k, c) in polys[n - 1].iter().enumerate() {
            next[k] -= c * Rational::from_integer(n as i128);
        }
        let scale = Rational::from_integer(n as i128 + 1);
        polys.push(next.into_iter().map(|c| c / scale).collect());
    }
    polys
}

/// Exact `∫_0^{end} P_i P_j dμ` for `end = ±1`.
fn half_range_product(polys: &[Vec<Rational>], i: usize, j: usize, end: i128) -> Rational {
    let mut total = Rational::from_integer(0);
    for (a, ca) in polys[i].iter().enumerate() {
        for (b, cb) in polys[j].iter().enumerate() {
            let power = a + b + 1;
            let bound = Rational::from_integer(end.pow(power as u32));
            total += ca * cb * bound / Rational::from_integer(power as i128);
        }
    }
    total
}

/// Marshak vacuum conditions, one row per `m = 1..=(N+1)/2`:
/// entry `(m, n) = (2n+1)/2 ∫_0^{±1} P_{2m-1} P_n dμ` with `+1` on the left
/// boundary (incoming μ > 0) and `-1` on the right.
pub fn marshak_matrix(order_n: usize, side: Side) -> Result<DMatrix<f64>, ModelError> {
    check_order(order_n)?;
    let rows = (order_n + 1) / 2;
    let polys = legendre_coefficients(order_n);
    let end = match side {
        Side::Left => 1,
        Side::Right => -1,
    };
    Ok(DMatrix::from_fn(rows, order_n + 1, |m, n| {
        let weight = Rational::new(2 * n as i128 + 1, 2);
        let value = weight * half_range_product(&polys, 2 * m + 1, n, end);
        *value.numer() as f64 / *value.denom() as f64
    }))
}

/// Reflective condition: selector rows for φ_1, φ_3, …, φ_N.
pub fn reflective_rows(order_n: usize) -> Result<DMatrix<f64>, ModelError> {
    check_order(order_n)?;
    let rows = (order_n + 1) / 2;
    Ok(DMatrix::from_fn(rows, order_n + 1, |m, n| {
        if n == 2 * m + 1 {
            1.0
        } else {
            0.0
        }
    }))
}

/// Diffusion-limit solution of the manufactured asymptotic problem on [0, 10].
pub fn analytic_diffusion_reference(x: f64) -> f64 {
    -1.5 * x * x + 15.0 * x
}

/// Manufactured source `1 + α φ_0(x)` that makes the reference exact.
pub fn manufactured_source(x: f64, alpha: f64) -> f64 {
    1.0 + alpha * analytic_diffusion_reference(x)
}

/// `manufactured_source` as a polynomial in x.
pub fn manufactured_source_polynomial(alpha: f64) -> Polynomial {
    Polynomial(vec![1.0, 15.0 * alpha, -1.5 * alpha])
}

/// Operator data valid on one material region.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Diagonal `(σ_a, σ_t, …, σ_t)`.
    pub collision: Vec<f64>,
    /// `(1, τ, …, τ)`.
    pub row_scale: Vec<f64>,
    /// Row-0 source with the ε-factor applied.
    pub source: Polynomial,
}

impl LocalOperator {
    /// `row_scale ⊙ (A·dphi + C·phi − q e_0)`, written into `out`.
    pub fn residual_into(
        &self,
        streaming: &DMatrix<f64>,
        phi: &[f64],
        dphi_dx: &[f64],
        x: f64,
        out: &mut [f64],
    ) {
        let size = self.collision.len();
        for n in 0..size {
            let mut r = self.collision[n] * phi[n];
            if n >= 1 {
                r += streaming[(n, n - 1)] * dphi_dx[n - 1];
            }
            if n + 1 < size {
                r += streaming[(n, n + 1)] * dphi_dx[n + 1];
            }
            if n == 0 {
                r -= self.source.eval(x);
            }
            out[n] = self.row_scale[n] * r;
        }
    }
}

/// Transport operator `L_ε` in moment form, with the row scaling applied.
#[derive(Debug, Clone, PartialEq)]
pub struct PnOperator {
    order_n: usize,
    streaming: DMatrix<f64>,
    regions: Vec<LocalOperator>,
}

impl PnOperator {
    pub fn new(problem: &SlabProblem) -> Result<Self, ModelError> {
        problem.validate()?;
        let size = problem.n_moments();
        let regions = problem
            .regions
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let c = problem.coefficients(i);
                let mut collision = vec![c.sigma_t; size];
                collision[0] = c.sigma_a;
                let mut row_scale = vec![c.tau; size];
                row_scale[0] = 1.0;
                LocalOperator {
                    x_lo: r.x_lo,
                    x_hi: r.x_hi,
                    collision,
                    row_scale,
                    source: r.source.scaled(c.source_factor),
                }
            })
            .collect();
        Ok(PnOperator {
            order_n: problem.order_n,
            streaming: streaming_matrix(problem.order_n)?,
            regions,
        })
    }

    pub fn order_n(&self) -> usize {
        self.order_n
    }

    pub fn n_moments(&self) -> usize {
        self.order_n + 1
    }

    pub fn streaming(&self) -> &DMatrix<f64> {
        &self.streaming
    }

    pub fn regions(&self) -> &[LocalOperator] {
        &self.regions
    }

    pub fn local(&self, x: f64) -> Result<&LocalOperator, ModelError> {
        let x_l = self.regions[0].x_lo;
        let x_r = self.regions[self.regions.len() - 1].x_hi;
        if !(x >= x_l && x <= x_r) {
            return Err(ModelError::OutOfDomain { x, x_l, x_r });
        }
        Ok(self
            .regions
            .iter()
            .find(|r| x <= r.x_hi)
            .unwrap_or(&self.regions[self.regions.len() - 1]))
    }

    pub fn collision_diag(&self, x: f64) -> Result<&[f64], ModelError> {
        Ok(&self.local(x)?.collision)
    }

    pub fn row_scale(&self, x: f64) -> Result<&[f64], ModelError> {
        Ok(&self.local(x)?.row_scale)
    }

    pub fn residual(&self, phi: &[f64], dphi_dx: &[f64], x: f64) -> Result<Vec<f64>, ModelError> {
        let size = self.n_moments();
        for v in [phi, dphi_dx] {
            if v.len() != size {
                return Err(ModelError::LengthMismatch {
                    expected: size,
                    got: v.len(),
                });
            }
        }
        let local = self.local(x)?;
        let mut out = vec![0.0; size];
        local.residual_into(&self.streaming, phi, dphi_dx, x, &mut out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn asymptotic(eps: f64, alpha: f64, scaling: ScalingMode) -> SlabProblem {
        let region = MaterialRegion::new(
            0.0,
            10.0,
            1.0,
            0.0,
            manufactured_source_polynomial(alpha),
        )
        .unwrap();
        SlabProblem::new(
            vec![region],
            1,
            BoundaryKind::Vacuum,
            BoundaryKind::Vacuum,
            scaling,
            Some(EpsilonScaling::new(eps, alpha).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn streaming_p1_and_p3() {
        let a1 = streaming_matrix(1).unwrap();
        assert_eq!(a1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 / 3.0, 0.0]));
        let a3 = streaming_matrix(3).unwrap();
        let row1: Vec<f64> = a3.row(1).iter().copied().collect();
        assert_eq!(row1, vec![1.0 / 3.0, 0.0, 2.0 / 3.0, 0.0]);
        let row3: Vec<f64> = a3.row(3).iter().copied().collect();
        assert_eq!(row3, vec![0.0, 0.0, 3.0 / 7.0, 0.0]);
    }

    #[test]
    fn invalid_orders_rejected() {
        for n in [0, 2, 4] {
            assert_eq!(streaming_matrix(n), Err(ModelError::InvalidOrder(n)));
            assert!(marshak_matrix(n, Side::Left).is_err());
            assert!(reflective_rows(n).is_err());
        }
    }

    #[test]
    fn streaming_recursion_is_exact() {
        for order in (1..=15).step_by(2) {
            let a = streaming_matrix(order).unwrap();
            for n in 1..order {
                assert_eq!(a[(n, n - 1)], n as f64 / (2 * n + 1) as f64);
                assert_eq!(a[(n, n + 1)], (n + 1) as f64 / (2 * n + 1) as f64);
            }
            // rows of the three-term recursion sum to one, except the truncated last row
            for n in 0..order {
                assert!((a.row(n).sum() - 1.0).abs() < 1e-15);
            }
            assert!(a.row(order).sum() < 1.0);
        }
    }

    #[test]
    fn marshak_values() {
        let left = marshak_matrix(1, Side::Left).unwrap();
        assert_eq!(left, DMatrix::from_row_slice(1, 2, &[0.25, 0.5]));
        let right = marshak_matrix(1, Side::Right).unwrap();
        assert_eq!(right, DMatrix::from_row_slice(1, 2, &[0.25, -0.5]));
        let m3 = marshak_matrix(3, Side::Left).unwrap();
        assert_eq!(m3.shape(), (2, 4));
        assert_abs_diff_eq!(m3[(0, 2)], 5.0 / 16.0, epsilon = 1e-16);
    }

    #[test]
    fn marshak_sides_mirror() {
        for order in (1..=9).step_by(2) {
            let l = marshak_matrix(order, Side::Left).unwrap();
            let r = marshak_matrix(order, Side::Right).unwrap();
            for m in 0..l.nrows() {
                for n in 0..l.ncols() {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    assert_eq!(r[(m, n)], sign * l[(m, n)]);
                }
            }
        }
    }

    #[test]
    fn reflective_selects_odd_moments() {
        assert_eq!(reflective_rows(1).unwrap(), DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        let r3 = reflective_rows(3).unwrap();
        assert_eq!(r3[(0, 1)], 1.0);
        assert_eq!(r3[(1, 3)], 1.0);
        assert_eq!(r3.sum(), 2.0);
        let even = nalgebra::DVector::from_vec(vec![2.0, 0.0, -1.0, 0.0]);
        assert_eq!((r3 * even).norm(), 0.0);
    }

    #[test]
    fn analytic_reference_values() {
        assert_eq!(analytic_diffusion_reference(0.0), 0.0);
        assert_eq!(analytic_diffusion_reference(10.0), 0.0);
        assert_eq!(analytic_diffusion_reference(5.0), 37.5);
        assert_eq!(manufactured_source(3.0, 0.0), 1.0);
        assert_abs_diff_eq!(manufactured_source(5.0, 1e-2), 1.375, epsilon = 1e-15);
        let poly = manufactured_source_polynomial(1e-2);
        assert_abs_diff_eq!(poly.eval(5.0), 1.375, epsilon = 1e-14);
    }

    #[test]
    fn residual_zero_for_zero_state() {
        let mut p = asymptotic(1e-3, 1e-2, ScalingMode::Unscaled);
        p.regions[0].source = Polynomial::zero();
        let op = p.operator().unwrap();
        assert_eq!(op.residual(&[0.0, 0.0], &[0.0, 0.0], 4.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn residual_p1_epsilon_form() {
        let (eps, alpha) = (1e-2, 1e-2);
        let x = 3.0;
        let phi = [2.0, -0.5];
        let dphi = [0.7, 1.3];
        let q = manufactured_source(x, alpha);

        let op = asymptotic(eps, alpha, ScalingMode::Unscaled).operator().unwrap();
        let r = op.residual(&phi, &dphi, x).unwrap();
        assert_abs_diff_eq!(r[0], dphi[1] + eps * alpha * phi[0] - eps * q, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1], dphi[0] / 3.0 + phi[1] / eps, epsilon = 1e-12);

        let op = asymptotic(eps, alpha, ScalingMode::Diffusive).operator().unwrap();
        let tau = alpha.sqrt() * eps;
        assert_eq!(op.row_scale(x).unwrap(), &[1.0, tau]);
        let rs = op.residual(&phi, &dphi, x).unwrap();
        assert_abs_diff_eq!(rs[0], r[0], epsilon = 1e-15);
        assert_abs_diff_eq!(rs[1], tau * r[1], epsilon = 1e-14);
    }

    #[test]
    fn residual_out_of_domain() {
        let op = asymptotic(1e-2, 1e-2, ScalingMode::Unscaled).operator().unwrap();
        assert!(matches!(
            op.residual(&[0.0, 0.0], &[0.0, 0.0], 10.5),
            Err(ModelError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn region_wise_tau() {
        let absorber = MaterialRegion::new(0.0, 2.0, 2.0, 2.0, Polynomial::constant(1.0)).unwrap();
        let scatterer = MaterialRegion::new(2.0, 10.0, 100.0, 1e-4, Polynomial::zero()).unwrap();
        let p = SlabProblem::new(
            vec![absorber, scatterer],
            3,
            BoundaryKind::Reflective,
            BoundaryKind::Vacuum,
            ScalingMode::Diffusive,
            None,
        )
        .unwrap();
        assert_eq!(p.coefficients(0).tau, 1.0);
        assert_abs_diff_eq!(p.coefficients(1).tau, 1e-3, epsilon = 1e-15);
        assert_eq!(p.region_index(2.0).unwrap(), 0);
        assert_eq!(p.region_index(2.0 + 1e-12).unwrap(), 1);
        assert_eq!(p.interfaces(), vec![2.0]);
    }

    #[test]
    fn problem_validation() {
        let a = MaterialRegion::new(0.0, 1.0, 1.0, 0.5, Polynomial::zero()).unwrap();
        let b = MaterialRegion::new(1.5, 2.0, 1.0, 0.5, Polynomial::zero()).unwrap();
        let err = SlabProblem::new(
            vec![a.clone(), b],
            1,
            BoundaryKind::Vacuum,
            BoundaryKind::Vacuum,
            ScalingMode::Unscaled,
            None,
        );
        assert_eq!(err, Err(ModelError::NotContiguous(1.0)));
        let err = SlabProblem::new(
            vec![a],
            2,
            BoundaryKind::Vacuum,
            BoundaryKind::Vacuum,
            ScalingMode::Unscaled,
            None,
        );
        assert_eq!(err, Err(ModelError::InvalidOrder(2)));
        assert!(MaterialRegion::new(1.0, 0.0, 1.0, 0.5, Polynomial::zero()).is_err());
        assert!(MaterialRegion::new(0.0, 1.0, 1.0, 1.5, Polynomial::zero()).is_err());
        assert!(MaterialRegion::new(0.0, 1.0, 0.0, 0.0, Polynomial::zero()).is_err());
        assert!(MaterialRegion::new(0.0, 1.0, 1.0, 0.5, Polynomial(vec![0.0, -1.0])).is_err());
    }

    #[test]
    fn to_physical_folds_epsilon() {
        let p = asymptotic(1e-2, 1e-2, ScalingMode::Unscaled).to_physical();
        assert!(p.eps.is_none());
        assert_abs_diff_eq!(p.regions[0].sigma_t, 100.0);
        assert_abs_diff_eq!(p.regions[0].sigma_a, 1e-4);
        assert_abs_diff_eq!(p.regions[0].source.eval(5.0), 1.375e-2, epsilon = 1e-15);
    }

    #[test]
    fn polynomial_integral_and_range() {
        let p = Polynomial(vec![1.0, 15.0, -1.5]);
        assert_abs_diff_eq!(p.integral(0.0, 10.0), 10.0 + 750.0 - 500.0, epsilon = 1e-12);
        let (lo, hi) = p.range_on(0.0, 10.0);
        assert_eq!(lo, 1.0);
        assert_eq!(hi, 1.0 + 37.5);
    }

    proptest! {
        #[test]
        fn residual_is_linear_without_source(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            v in prop::collection::vec(-5.0f64..5.0, 16),
            x in 0.0f64..10.0,
            diffusive in any::<bool>(),
        ) {
            let mode = if diffusive { ScalingMode::Diffusive } else { ScalingMode::Unscaled };
            let mut p = asymptotic(1e-3, 1e-2, mode).with_order(3).unwrap();
            p.regions[0].source = Polynomial::zero();
            let op = p.operator().unwrap();
            let (p1, d1, p2, d2) = (&v[0..4], &v[4..8], &v[8..12], &v[12..16]);
            let combo = |u: &[f64], w: &[f64]| -> Vec<f64> {
                u.iter().zip(w).map(|(s, t)| a * s + b * t).collect()
            };
            let lhs = op.residual(&combo(p1, p2), &combo(d1, d2), x).unwrap();
            let r1 = op.residual(p1, d1, x).unwrap();
            let r2 = op.residual(p2, d2, x).unwrap();
            for n in 0..4 {
                let rhs = a * r1[n] + b * r2[n];
                prop_assert!((lhs[n] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }

        #[test]
        fn manufactured_pair_solves_diffusion(x in 0.0f64..10.0, alpha in 0.0f64..1.0) {
            // -(1/3) φ0'' + α φ0 = Q with φ0'' = -3
            let lhs = 1.0 + alpha * analytic_diffusion_reference(x);
            prop_assert!((lhs - manufactured_source(x, alpha)).abs() < 1e-12);
        }
    }
}
