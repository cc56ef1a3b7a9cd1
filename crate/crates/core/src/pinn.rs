//! Physics-informed network solver for the moment system.
//!
//! The network maps x to all N+1 moments. Its loss is the mean squared
//! (row-scaled) P_N residual at Sobol collocation points plus a weighted
//! boundary penalty at the two slab ends.

use std::time::Instant;

use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neuralnet::{
    lbfgs_minimize, Activation, Adam, BatchOutput, InputMap, LbfgsConfig, LbfgsStatus, LossSeed, MlpNetwork,
    NetError, ParamVector,
};
use crate::pn_model::{ModelError, PnOperator, Side, SlabProblem};
use crate::quasirandom::{map_to_domain, sobol_points, SobolError};
use crate::solution::{FluxSolution, SolutionError};

#[derive(Debug, Error)]
pub enum PinnError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Sobol(#[from] SobolError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("network has {got} outputs, the P_{order} system needs {expected}")]
    OutputWidth { order: usize, expected: usize, got: usize },
    #[error("non-finite loss at step {step} (seed {seed})")]
    NonFinite { seed: u64, step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("ensemble is empty or mixes different problems")]
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Adam { lr: f64, max_steps: usize },
    Lbfgs { memory: usize, max_iters: usize, tol: f64 },
}

/// Fixed per-moment factors multiplying the raw network outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputScale {
    Unit,
    /// Magnitudes estimated from the problem data, see [`characteristic_scale`].
    Characteristic,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PinnConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
    pub n_interior_points: usize,
    pub boundary_weight: f64,
    pub optimizer: Optimizer,
    pub seeds: Vec<u64>,
    pub log_every: usize,
    pub output_scale: OutputScale,
    /// Measure the interior residual in units of the peak source magnitude.
    pub source_normalized: bool,
}

impl Default for PinnConfig {
    fn default() -> Self {
        PinnConfig {
            hidden_layers: 5,
            hidden_width: 50,
            activation: Activation::Relu,
            n_interior_points: 300,
            boundary_weight: 1.0,
            optimizer: Optimizer::Adam {
                lr: 2.5e-4,
                max_steps: 50_000,
            },
            seeds: vec![0, 1, 2],
            log_every: 100,
            output_scale: OutputScale::Characteristic,
            source_normalized: true,
        }
    }
}

impl PinnConfig {
    pub fn n_restarts(&self) -> usize {
        self.seeds.len()
    }

    pub fn validate(&self) -> Result<(), PinnError> {
        let bad = |m: &str| Err(PinnError::Config(m.to_string()));
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return bad("network needs at least one hidden layer of nonzero width");
        }
        if self.n_interior_points == 0 {
            return bad("need at least one interior point");
        }
        if !(self.boundary_weight >= 0.0) || !self.boundary_weight.is_finite() {
            return bad("boundary weight must be finite and nonnegative");
        }
        if self.seeds.is_empty() {
            return bad("need at least one seed");
        }
        if self.log_every == 0 {
            return bad("log_every must be positive");
        }
        match self.optimizer {
            Optimizer::Adam { lr, max_steps } if !(lr > 0.0) || max_steps == 0 => bad("Adam needs lr > 0 and max_steps > 0"),
            Optimizer::Lbfgs { memory, max_iters, .. } if memory == 0 || max_iters == 0 => {
                bad("L-BFGS needs memory > 0 and max_iters > 0")
            }
            _ => Ok(()),
        }
    }
}

/// Rough magnitude of each moment of the solution.
///
/// φ_0 is bounded by the source over the removal rate, where removal is the
/// larger of absorption and diffusive leakage `8 / (3 σ_t W²)` across the
/// slab width `W`. Higher moments follow Fick's law across each region,
/// capped at the φ_0 scale.
pub fn characteristic_scale(problem: &SlabProblem) -> Vec<f64> {
    let phys = problem.to_physical();
    let width = phys.width();
    let mut phi0: f64 = 0.0;
    let mut fick: f64 = 0.0;
    for r in &phys.regions {
        let (lo, hi) = r.source.range_on(r.x_lo, r.x_hi);
        let q = lo.abs().max(hi.abs());
        let removal = r.sigma_a.max(8.0 / (3.0 * r.sigma_t * width * width));
        phi0 = phi0.max(q / removal);
        fick = fick.max((1.0 / (3.0 * r.sigma_t * (r.x_hi - r.x_lo))).min(1.0));
    }
    if phi0 == 0.0 {
        phi0 = 1.0;
    }
    let mut scale = vec![phi0 * fick; problem.n_moments()];
    scale[0] = phi0;
    scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub interior: f64,
    pub boundary: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.interior + self.boundary
    }
}

/// Collocation loss for one problem.
#[derive(Debug, Clone)]
pub struct PinnLoss {
    op: PnOperator,
    interior: Vec<f64>,
    region_of: Vec<usize>,
    source: Vec<f64>,
    boundary: Vec<(f64, DMatrix<f64>)>,
    boundary_weight: f64,
    output_scale: Vec<f64>,
    interior_weight: f64,
}

impl PinnLoss {
    /// Interior points are the first `n_points` Sobol points mapped onto the slab.
    pub fn new(problem: &SlabProblem, n_points: usize, boundary_weight: f64, output_scale: Vec<f64>) -> Result<Self, PinnError> {
        let unit: Vec<f64> = sobol_points(1, n_points)?.into_iter().map(|p| p[0]).collect();
        let points = map_to_domain(&unit, problem.x_l(), problem.x_r())?;
        Self::with_points(problem, points, boundary_weight, output_scale)
    }

    pub fn with_points(
        problem: &SlabProblem,
        points: Vec<f64>,
        boundary_weight: f64,
        output_scale: Vec<f64>,
    ) -> Result<Self, PinnError> {
        let op = PnOperator::new(problem)?;
        if output_scale.len() != op.n_moments() {
            return Err(PinnError::OutputWidth {
                order: op.order_n(),
                expected: op.n_moments(),
                got: output_scale.len(),
            });
        }
        let mut region_of = Vec::with_capacity(points.len());
        let mut source = Vec::with_capacity(points.len());
        for &x in &points {
            let r = problem.region_index(x)?;
            region_of.push(r);
            source.push(op.regions()[r].source.eval(x));
        }
        let boundary = vec![
            (problem.x_l(), problem.boundary_rows(Side::Left)?),
            (problem.x_r(), problem.boundary_rows(Side::Right)?),
        ];
        Ok(PinnLoss {
            op,
            interior: points,
            region_of,
            source,
            boundary,
            boundary_weight,
            output_scale,
            interior_weight: 1.0,
        })
    }

    /// Divides the interior residual by `magnitude` (squared in the loss).
    pub fn with_residual_unit(mut self, magnitude: f64) -> Self {
        self.interior_weight = 1.0 / (magnitude * magnitude);
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.interior
    }

    pub fn output_scale(&self) -> &[f64] {
        &self.output_scale
    }

    fn batch(&self) -> Vec<f64> {
        let mut xs = self.interior.clone();
        xs.extend(self.boundary.iter().map(|(x, _)| *x));
        xs
    }

    fn check(&self, net: &MlpNetwork) -> Result<(), PinnError> {
        if net.outputs() != self.op.n_moments() {
            return Err(PinnError::OutputWidth {
                order: self.op.order_n(),
                expected: self.op.n_moments(),
                got: net.outputs(),
            });
        }
        Ok(())
    }

    /// Loss parts and sensitivities with respect to the raw network outputs.
    fn seed(&self, out: &BatchOutput) -> (LossParts, LossSeed) {
        let m = self.op.n_moments();
        let a = self.op.streaming();
        let s = &self.output_scale;
        let n_in = self.interior.len();
        let mut d_values = Array2::zeros(out.values.raw_dim());
        let mut d_slopes = Array2::zeros(out.slopes.raw_dim());
        let mut interior = 0.0;
        let mut r = vec![0.0; m];
        let inv_n = self.interior_weight / n_in as f64;
        for i in 0..n_in {
            let local = &self.op.regions()[self.region_of[i]];
            for n in 0..m {
                let mut v = local.collision[n] * s[n] * out.values[(i, n)];
                if n >= 1 {
                    v += a[(n, n - 1)] * s[n - 1] * out.slopes[(i, n - 1)];
                }
                if n + 1 < m {
                    v += a[(n, n + 1)] * s[n + 1] * out.slopes[(i, n + 1)];
                }
                if n == 0 {
                    v -= self.source[i];
                }
                r[n] = local.row_scale[n] * v;
                interior += r[n] * r[n];
            }
            for n in 0..m {
                let g = 2.0 * inv_n * r[n] * local.row_scale[n];
                d_values[(i, n)] += g * local.collision[n] * s[n];
                if n >= 1 {
                    d_slopes[(i, n - 1)] += g * a[(n, n - 1)] * s[n - 1];
                }
                if n + 1 < m {
                    d_slopes[(i, n + 1)] += g * a[(n, n + 1)] * s[n + 1];
                }
            }
        }
        interior *= inv_n;
        let mut boundary = 0.0;
        let w = self.boundary_weight / self.boundary.len() as f64;
        for (j, (_, rows)) in self.boundary.iter().enumerate() {
            let i = n_in + j;
            for row in 0..rows.nrows() {
                let b: f64 = (0..m).map(|k| rows[(row, k)] * s[k] * out.values[(i, k)]).sum();
                boundary += w * b * b;
                for k in 0..m {
                    d_values[(i, k)] += 2.0 * w * b * rows[(row, k)] * s[k];
                }
            }
        }
        let parts = LossParts { interior, boundary };
        (
            parts,
            LossSeed {
                value: parts.total(),
                d_values,
                d_slopes,
            },
        )
    }

    pub fn evaluate(&self, net: &MlpNetwork) -> Result<LossParts, PinnError> {
        self.check(net)?;
        Ok(self.seed(&net.forward_batch(&self.batch())).0)
    }

    pub fn value_and_gradient(&self, net: &MlpNetwork) -> Result<(LossParts, ParamVector), PinnError> {
        self.check(net)?;
        let mut parts = None;
        let (_, grad) = net.loss_gradient(&self.batch(), |out| {
            let (p, seed) = self.seed(out);
            parts = Some(p);
            seed
        });
        Ok((parts.expect("loss closure ran"), grad))
    }

    /// Scaled network moments at `grid`, as `moments[n][g]`.
    pub fn predict(&self, net: &MlpNetwork, grid: &[f64]) -> Vec<Vec<f64>> {
        let out = net.forward_batch(grid);
        (0..self.op.n_moments())
            .map(|n| out.values.column(n).iter().map(|v| v * self.output_scale[n]).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub interior: f64,
    pub boundary: f64,
}

impl LossRecord {
    pub fn total(&self) -> f64 {
        self.interior + self.boundary
    }
}

#[derive(Debug, Clone)]
pub struct TrainedPinn {
    pub network: MlpNetwork,
    pub output_scale: Vec<f64>,
    pub loss_history: Vec<LossRecord>,
    pub best: LossRecord,
    pub seed: u64,
    pub config: PinnConfig,
    pub problem: SlabProblem,
    pub lbfgs_status: Option<LbfgsStatus>,
    pub seconds: f64,
}

impl TrainedPinn {
    pub fn predict(&self, grid: &[f64]) -> Result<FluxSolution, PinnError> {
        let out = self.network.forward_batch(grid);
        let moments = (0..self.output_scale.len())
            .map(|n| out.values.column(n).iter().map(|v| v * self.output_scale[n]).collect())
            .collect();
        Ok(FluxSolution::new(grid.to_vec(), moments, format!("pinn seed {}", self.seed))?)
    }
}

pub fn build_loss(problem: &SlabProblem, config: &PinnConfig) -> Result<PinnLoss, PinnError> {
    config.validate()?;
    let scale = match &config.output_scale {
        OutputScale::Unit => vec![1.0; problem.n_moments()],
        OutputScale::Characteristic => characteristic_scale(problem),
        OutputScale::Fixed(v) => v.clone(),
    };
    let loss = PinnLoss::new(problem, config.n_interior_points, config.boundary_weight, scale)?;
    Ok(if config.source_normalized {
        loss.with_residual_unit(source_magnitude(problem))
    } else {
        loss
    })
}

/// Peak |q(x)| over the slab, ε-factor included; 1 for a source-free slab.
pub fn source_magnitude(problem: &SlabProblem) -> f64 {
    let peak = (0..problem.regions.len())
        .map(|i| {
            let r = &problem.regions[i];
            let (lo, hi) = r.source.range_on(r.x_lo, r.x_hi);
            problem.coefficients(i).source_factor * lo.abs().max(hi.abs())
        })
        .fold(0.0, f64::max);
    if peak > 0.0 {
        peak
    } else {
        1.0
    }
}

pub fn initial_network(problem: &SlabProblem, config: &PinnConfig, seed: u64) -> Result<MlpNetwork, PinnError> {
    Ok(MlpNetwork::new(
        config.hidden_layers,
        config.hidden_width,
        problem.n_moments(),
        config.activation,
        seed,
    )?
    .with_input_map(InputMap::unit_interval(problem.x_l(), problem.x_r())))
}

/// Trains one network from the seeded initialization.
///
/// `progress` sees every recorded loss entry.
pub fn train_with_progress<P>(
    problem: &SlabProblem,
    config: &PinnConfig,
    seed: u64,
    mut progress: P,
) -> Result<TrainedPinn, PinnError>
where
    P: FnMut(&LossRecord),
{
    let started = Instant::now();
    let loss = build_loss(problem, config)?;
    let mut net = initial_network(problem, config, seed)?;
    let mut history = Vec::new();
    let mut lbfgs_status = None;
    let record = |step: usize, p: LossParts| LossRecord {
        step,
        interior: p.interior,
        boundary: p.boundary,
    };
    let best = match config.optimizer {
        Optimizer::Adam { lr, max_steps } => {
            let mut adam = Adam::new(lr, net.param_count());
            let mut params = net.params();
            let mut best = (f64::INFINITY, params.clone(), record(0, LossParts { interior: f64::NAN, boundary: f64::NAN }));
            for step in 0..=max_steps {
                let (parts, grad) = loss.value_and_gradient(&net)?;
                if !parts.total().is_finite() || !grad.is_finite() {
                    return Err(PinnError::NonFinite { seed, step });
                }
                if parts.total() < best.0 {
                    best = (parts.total(), params.clone(), record(step, parts));
                }
                if step % config.log_every == 0 || step == max_steps {
                    let r = record(step, parts);
                    progress(&r);
                    history.push(r);
                }
                if step == max_steps {
                    break;
                }
                adam.step(&mut params, &grad);
                net.set_params(&params)?;
            }
            net.set_params(&best.1)?;
            best.2
        }
        Optimizer::Lbfgs { memory, max_iters, tol } => {
            let cfg = LbfgsConfig {
                memory,
                max_iters,
                grad_tol: tol,
                ..LbfgsConfig::default()
            };
            let start = loss.evaluate(&net)?;
            let r0 = record(0, start);
            progress(&r0);
            history.push(r0);
            let mut scratch = net.clone();
            let mut probe = net.clone();
            let mut failure = None;
            let result = lbfgs_minimize(
                net.params().0,
                |theta| {
                    let p = ParamVector(theta.to_vec());
                    if scratch.set_params(&p).is_err() {
                        return (f64::NAN, vec![0.0; theta.len()]);
                    }
                    match loss.value_and_gradient(&scratch) {
                        Ok((parts, g)) => (parts.total(), g.0),
                        Err(_) => (f64::NAN, vec![0.0; theta.len()]),
                    }
                },
                &cfg,
                |iter, _, theta| {
                    if iter % config.log_every == 0 {
                        if probe.set_params(&ParamVector(theta.to_vec())).is_ok() {
                            if let Ok(parts) = loss.evaluate(&probe) {
                                let r = record(iter, parts);
                                progress(&r);
                                history.push(r);
                            }
                        }
                    }
                },
            );
            if result.status == LbfgsStatus::NonFinite {
                failure = Some(result.iterations);
            }
            if let Some(step) = failure {
                return Err(PinnError::NonFinite { seed, step });
            }
            lbfgs_status = Some(result.status);
            net.set_params(&ParamVector(result.params))?;
            let parts = loss.evaluate(&net)?;
            let last = record(result.iterations, parts);
            if history.last().map(|h| h.step) != Some(last.step) {
                progress(&last);
                history.push(last);
            }
            last
        }
    };
    Ok(TrainedPinn {
        network: net,
        output_scale: loss.output_scale().to_vec(),
        loss_history: history,
        best,
        seed,
        config: config.clone(),
        problem: problem.clone(),
        lbfgs_status,
        seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn train(problem: &SlabProblem, config: &PinnConfig, seed: u64) -> Result<TrainedPinn, PinnError> {
    train_with_progress(problem, config, seed, |_| {})
}

/// Pointwise mean of the members' moment predictions.
pub fn ensemble_predict(trained: &[TrainedPinn], grid: &[f64]) -> Result<FluxSolution, PinnError> {
    let first = trained.first().ok_or(PinnError::Ensemble)?;
    if trained.iter().any(|t| t.problem != first.problem) {
        return Err(PinnError::Ensemble);
    }
    let mut sum: Option<Vec<Vec<f64>>> = None;
    for t in trained {
        let p = t.predict(grid)?;
        match &mut sum {
            None => sum = Some(p.moments),
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(&p.moments) {
                    for (u, v) in a.iter_mut().zip(b) {
                        *u += v;
                    }
                }
            }
        }
    }
    let k = trained.len() as f64;
    let moments = sum
        .unwrap()
        .into_iter()
        .map(|m| m.into_iter().map(|v| v / k).collect())
        .collect();
    Ok(FluxSolution::new(grid.to_vec(), moments, "pinn ensemble")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::pn_model::ScalingMode;

    #[test]
    fn default_config_is_valid() {
        let c = PinnConfig::default();
        c.validate().unwrap();
        assert_eq!(c.n_restarts(), 3);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = PinnConfig::default();
        c.seeds.clear();
        assert!(c.validate().is_err());
        let c = PinnConfig {
            optimizer: Optimizer::Adam { lr: 0.0, max_steps: 10 },
            ..PinnConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn output_width_mismatch_is_an_error() {
        let p = cases::asymptotic(1e-2, 1e-2, 1, ScalingMode::Diffusive).unwrap();
        let loss = build_loss(&p, &PinnConfig::default()).unwrap();
        let net = MlpNetwork::new(2, 4, 4, Activation::Tanh, 0).unwrap();
        assert!(matches!(loss.evaluate(&net), Err(PinnError::OutputWidth { .. })));
    }

    #[test]
    fn characteristic_scale_of_benchmarks() {
        let p = cases::asymptotic(1e-2, 1e-2, 1, ScalingMode::Diffusive).unwrap();
        let s = characteristic_scale(&p);
        // source peak 1.375 ε over leakage 8 ε / 300
        assert!((s[0] - 1.375 * 300.0 / 8.0).abs() < 1e-9);
        assert!((s[1] - s[0] / 3000.0).abs() < 1e-12);
        let q = cases::interface(3, ScalingMode::Unscaled).unwrap();
        let s = characteristic_scale(&q);
        assert_eq!(s[0], 0.5);
        assert!((s[3] - 0.5 / 12.0).abs() < 1e-15);
    }
}
