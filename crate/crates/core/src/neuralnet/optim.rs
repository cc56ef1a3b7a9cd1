use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ParamVector;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

impl Adam {
    pub fn new(lr: f64, len: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            first: vec![0.0; len],
            second: vec![0.0; len],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second
    }

    pub fn step(&mut self, params: &mut ParamVector, grad: &ParamVector) {
        assert_eq!(params.len(), self.first.len(), "parameter length changed");
        assert_eq!(grad.len(), self.first.len(), "gradient length mismatch");
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grad.0[i];
            self.first[i] = flush(self.beta1 * self.first[i] + (1.0 - self.beta1) * g);
            self.second[i] = flush(self.beta2 * self.second[i] + (1.0 - self.beta2) * g * g);
            let m_hat = self.first[i] / c1;
            let v_hat = self.second[i] / c2;
            params.0[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Subnormal moments of idle parameters decay for thousands of steps and
/// make every update pay the slow-path cost; their effect on θ is below rounding.
fn flush(v: f64) -> f64 {
    if v.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once the gradient norm falls to this value.
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 10,
            max_iters: 1000,
            grad_tol: 1e-8,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: LbfgsStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

struct Trial {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
    slope: f64,
}

/// Minimizer of the cubic through two points with known slopes, safeguarded
/// to stay inside the bracket.
fn cubic_step(a: &Trial, b: &Trial) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha { (a.alpha, b.alpha) } else { (b.alpha, a.alpha) };
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    let width = hi - lo;
    let fallback = 0.5 * (lo + hi);
    if disc < 0.0 || !disc.is_finite() {
        return fallback;
    }
    let d2 = disc.sqrt() * (b.alpha - a.alpha).signum();
    let step = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    if !step.is_finite() {
        return fallback;
    }
    step.clamp(lo + 0.1 * width, hi - 0.1 * width)
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
    evaluations: usize,
    best: Option<Trial>,
}

impl<F> LineSearch<'_, F>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    fn eval(&mut self, alpha: f64) -> Trial {
        self.evaluations += 1;
        let (mut value, grad) = (self.f)(&axpy(self.x, alpha, self.dir));
        if !value.is_finite() {
            value = f64::INFINITY;
        }
        let slope = if value.is_finite() { dot(&grad, self.dir) } else { f64::NAN };
        let trial = Trial {
            alpha,
            value,
            grad,
            slope,
        };
        if value < self.best.as_ref().map_or(self.f0, |b| b.value) {
            self.best = Some(Trial {
                grad: trial.grad.clone(),
                ..trial
            });
        }
        trial
    }

    fn armijo_fails(&self, t: &Trial) -> bool {
        t.value > self.f0 + self.c1 * t.alpha * self.slope0
    }

    fn curvature_holds(&self, t: &Trial) -> bool {
        t.slope.abs() <= -self.c2 * self.slope0
    }

    fn search(&mut self, alpha_init: f64) -> Option<Trial> {
        let mut prev = Trial {
            alpha: 0.0,
            value: self.f0,
            grad: Vec::new(),
            slope: self.slope0,
        };
        let mut alpha = alpha_init;
        let mut first = true;
        while self.evaluations < self.budget {
            let t = self.eval(alpha);
            if !t.value.is_finite() {
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if self.armijo_fails(&t) || (!first && t.value >= prev.value) {
                return self.zoom(prev, t);
            }
            if self.curvature_holds(&t) {
                return Some(t);
            }
            if t.slope >= 0.0 {
                return self.zoom(t, prev);
            }
            first = false;
            alpha *= 2.0;
            prev = t;
        }
        None
    }

    fn zoom(&mut self, mut lo: Trial, mut hi: Trial) -> Option<Trial> {
        while self.evaluations < self.budget {
            let alpha = if hi.slope.is_finite() && lo.slope.is_finite() && !lo.grad.is_empty() {
                cubic_step(&lo, &hi)
            } else {
                0.5 * (lo.alpha + hi.alpha)
            };
            if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1.0) {
                return None;
            }
            let t = self.eval(alpha);
            if self.armijo_fails(&t) || t.value >= lo.value {
                hi = t;
            } else {
                if self.curvature_holds(&t) {
                    return Some(t);
                }
                if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = t;
            }
        }
        None
    }
}

/// L-BFGS (two-loop recursion) with a strong-Wolfe line search.
///
/// `f` returns the objective and its gradient. `observe` is called once per
/// accepted iterate with `(iteration, value, params)`. A failed line search
/// ends the run with the best point seen so far.
pub fn lbfgs_minimize<F, O>(
    initial: Vec<f64>,
    mut f: F,
    config: &LbfgsConfig,
    mut observe: O,
) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    O: FnMut(usize, f64, &[f64]),
{
    let mut x = initial;
    let (mut fx, mut gx) = f(&x);
    let mut evaluations = 1;
    if !fx.is_finite() || gx.iter().any(|g| !g.is_finite()) {
        return LbfgsResult {
            grad_norm: f64::NAN,
            value: fx,
            params: x,
            iterations: 0,
            evaluations,
            status: LbfgsStatus::NonFinite,
        };
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);
    let mut status = LbfgsStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < config.max_iters {
        if norm(&gx) <= config.grad_tol {
            status = LbfgsStatus::Converged;
            break;
        }
        // two-loop recursion
        let mut q = gx.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map_or(1.0, |(s, y, _)| dot(s, y) / dot(y, y));
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope0 = dot(&gx, &dir);
        if !(slope0 < 0.0) {
            history.clear();
            dir = gx.iter().map(|g| -g).collect();
            slope0 = dot(&gx, &dir);
        }
        let alpha_init = if history.is_empty() {
            (1.0 / norm(&gx)).min(1.0)
        } else {
            1.0
        };

        let mut ls = LineSearch {
            f: &mut f,
            x: &x,
            dir: &dir,
            f0: fx,
            slope0,
            c1: config.c1,
            c2: config.c2,
            budget: config.max_line_search,
            evaluations: 0,
            best: None,
        };
        let accepted = ls.search(alpha_init);
        evaluations += ls.evaluations;
        let trial = match accepted {
            Some(t) => t,
            None => {
                if let Some(best) = ls.best.take() {
                    x = axpy(&x, best.alpha, &dir);
                    fx = best.value;
                    gx = best.grad;
                    iterations += 1;
                    observe(iterations, fx, &x);
                }
                status = LbfgsStatus::LineSearchFailed;
                break;
            }
        };
        let s: Vec<f64> = dir.iter().map(|d| trial.alpha * d).collect();
        let y: Vec<f64> = trial.grad.iter().zip(&gx).map(|(a, b)| a - b).collect();
        x = axpy(&x, trial.alpha, &dir);
        fx = trial.value;
        gx = trial.grad;
        iterations += 1;
        observe(iterations, fx, &x);
        if gx.iter().any(|g| !g.is_finite()) {
            status = LbfgsStatus::NonFinite;
            break;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
    }
    if status == LbfgsStatus::MaxIterations && norm(&gx) <= config.grad_tol {
        status = LbfgsStatus::Converged;
    }
    LbfgsResult {
        grad_norm: norm(&gx),
        value: fx,
        params: x,
        iterations,
        evaluations,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let mut adam = Adam::new(1e-3, 4);
        let mut p = ParamVector(vec![1.0, -2.0, 0.5, 3.0]);
        let before = p.clone();
        let g = ParamVector(vec![0.3, -1e-3, 50.0, -7.0]);
        adam.step(&mut p, &g);
        for i in 0..4 {
            let moved = p.0[i] - before.0[i];
            assert!((moved + 1e-3 * g.0[i].signum()).abs() < 1e-3 * 1e-4);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params_and_decays_moments() {
        let mut adam = Adam::new(1e-3, 2);
        let mut p = ParamVector(vec![1.0, 2.0]);
        adam.step(&mut p, &ParamVector(vec![1.0, -1.0]));
        let m_before = adam.first_moment().to_vec();
        let v_before = adam.second_moment().to_vec();
        let frozen = ParamVector(vec![5.0, 6.0]);
        let mut q = frozen.clone();
        let mut fresh = Adam::new(1e-3, 2);
        fresh.step(&mut q, &ParamVector::zeros(2));
        assert_eq!(q, frozen);
        adam.step(&mut p, &ParamVector::zeros(2));
        for i in 0..2 {
            assert!((adam.first_moment()[i] - 0.9 * m_before[i]).abs() < 1e-15);
            assert!((adam.second_moment()[i] - 0.999 * v_before[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_minimizes_scalar_quadratic() {
        let mut adam = Adam::new(2.5e-4, 1);
        let mut p = ParamVector(vec![1.0]);
        let mut reached = None;
        for step in 0..100_000 {
            let g = ParamVector(vec![2.0 * p.0[0]]);
            adam.step(&mut p, &g);
            if p.0[0].abs() < 1e-3 {
                reached = Some(step);
                break;
            }
        }
        assert!(reached.is_some(), "final theta {}", p.0[0]);
    }

    fn quadratic(x: &[f64]) -> (f64, Vec<f64>) {
        // f = sum_i (i+1)/2 (x_i - i)^2 + 0.1 sum_i x_i x_{i+1}
        let n = x.len();
        let mut f = 0.0;
        let mut g = vec![0.0; n];
        for i in 0..n {
            let d = x[i] - i as f64;
            f += 0.5 * (i + 1) as f64 * d * d;
            g[i] += (i + 1) as f64 * d;
            if i + 1 < n {
                f += 0.1 * x[i] * x[i + 1];
                g[i] += 0.1 * x[i + 1];
                g[i + 1] += 0.1 * x[i];
            }
        }
        (f, g)
    }

    #[test]
    fn lbfgs_solves_convex_quadratic() {
        // closed form: H x = b with H tridiagonal(0.1, i+1, 0.1), b_i = (i+1) i
        let n = 10;
        let h = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (i + 1) as f64
            } else if i.abs_diff(j) == 1 {
                0.1
            } else {
                0.0
            }
        });
        let b = nalgebra::DVector::from_fn(n, |i, _| ((i + 1) * i) as f64);
        let exact = h.lu().solve(&b).unwrap();
        let config = LbfgsConfig {
            max_iters: 30,
            grad_tol: 1e-12,
            ..Default::default()
        };
        let res = lbfgs_minimize(vec![0.0; n], quadratic, &config, |_, _, _| {});
        assert!(res.iterations <= 30);
        for i in 0..n {
            assert!((res.params[i] - exact[i]).abs() < 1e-8, "{res:?}");
        }
    }

    #[test]
    fn lbfgs_stops_at_minimum() {
        let res = lbfgs_minimize(vec![0.0, 1.0, 2.0], quadratic_shift, &LbfgsConfig::default(), |_, _, _| {});
        assert_eq!(res.iterations, 0);
        assert_eq!(res.status, LbfgsStatus::Converged);
    }

    fn quadratic_shift(x: &[f64]) -> (f64, Vec<f64>) {
        let f = x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum();
        let g = x.iter().enumerate().map(|(i, v)| 2.0 * (v - i as f64)).collect();
        (f, g)
    }

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn lbfgs_rosenbrock() {
        // oracle: plain gradient descent run long reaches the same point
        let mut gd = vec![-1.2, 1.0];
        for _ in 0..400_000 {
            let (_, g) = rosenbrock(&gd);
            gd[0] -= 1e-3 * g[0];
            gd[1] -= 1e-3 * g[1];
        }
        let config = LbfgsConfig {
            max_iters: 200,
            grad_tol: 1e-10,
            ..Default::default()
        };
        let res = lbfgs_minimize(vec![-1.2, 1.0], rosenbrock, &config, |_, _, _| {});
        assert!(res.iterations <= 200);
        for i in 0..2 {
            assert!((res.params[i] - 1.0).abs() < 1e-4);
            assert!((res.params[i] - gd[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn lbfgs_observer_sees_monotone_values() {
        let mut values = Vec::new();
        lbfgs_minimize(vec![-1.2, 1.0], rosenbrock, &LbfgsConfig::default(), |_, f, _| values.push(f));
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn lbfgs_flags_nonfinite_start() {
        let res = lbfgs_minimize(vec![0.0], |_| (f64::NAN, vec![0.0]), &LbfgsConfig::default(), |_, _, _| {});
        assert_eq!(res.status, LbfgsStatus::NonFinite);
    }
}
