//! The two benchmark slabs used throughout: the manufactured diffusive-limit
//! problem and the absorber/scatterer interface problem.

use crate::pn_model::{
    manufactured_source_polynomial, BoundaryKind, EpsilonScaling, MaterialRegion, ModelError, Polynomial,
    ScalingMode, SlabProblem,
};

pub const ASYMPTOTIC_ALPHA: f64 = 1e-2;
/// Peak of the analytic diffusion solution, reached at x = 5.
pub const ASYMPTOTIC_PEAK: f64 = 37.5;

/// `[0, 10]`, σ_t = 1/ε, σ_a = αε, source ε(1 + αφ_0), vacuum on both sides.
pub fn asymptotic(epsilon: f64, alpha: f64, order_n: usize, scaling: ScalingMode) -> Result<SlabProblem, ModelError> {
    let eps = EpsilonScaling::new(epsilon, alpha)?;
    SlabProblem::new(
        vec![MaterialRegion::new(
            0.0,
            10.0,
            eps.sigma_t(),
            eps.sigma_a(),
            manufactured_source_polynomial(alpha),
        )?],
        order_n,
        BoundaryKind::Vacuum,
        BoundaryKind::Vacuum,
        scaling,
        Some(eps),
    )
}

/// Pure absorber on (0, 2) with unit source, thick weak absorber on (2, 10);
/// reflective at x = 0, vacuum at x = 10.
pub fn interface(order_n: usize, scaling: ScalingMode) -> Result<SlabProblem, ModelError> {
    SlabProblem::new(
        vec![
            MaterialRegion::new(0.0, 2.0, 2.0, 2.0, Polynomial::constant(1.0))?,
            MaterialRegion::new(2.0, 10.0, 100.0, 1e-4, Polynomial::zero())?,
        ],
        order_n,
        BoundaryKind::Reflective,
        BoundaryKind::Vacuum,
        scaling,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptotic_coefficients() {
        let p = asymptotic(1e-3, ASYMPTOTIC_ALPHA, 1, ScalingMode::Diffusive).unwrap();
        let c = p.coefficients(0);
        assert!((c.sigma_t - 1e3).abs() < 1e-9);
        assert!((c.sigma_a - 1e-5).abs() < 1e-18);
        assert!((c.tau - 1e-4).abs() < 1e-18);
        assert!((p.source_at(5.0).unwrap() - 1e-3 * 1.375).abs() < 1e-15);
    }

    #[test]
    fn interface_layout() {
        let p = interface(3, ScalingMode::Diffusive).unwrap();
        assert_eq!(p.interfaces(), vec![2.0]);
        assert_eq!(p.coefficients(0).tau, 1.0);
        assert!((p.coefficients(1).tau - 1e-3).abs() < 1e-15);
    }
}
