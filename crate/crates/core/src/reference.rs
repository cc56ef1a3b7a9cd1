//! Monte Carlo slab transport with track-length flux tallies.
//!
//! Histories are grouped in fixed-size chunks that run in parallel and are
//! merged in chunk order. Every history draws from its own ChaCha stream keyed
//! by `(seed, history index)`, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pn_model::{BoundaryKind, ModelError, SlabProblem};
use crate::solution::{FluxSolution, SolutionError};

pub use crate::pn_model::analytic_diffusion_reference;

const CHUNK: u64 = 256;

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("total source strength is zero")]
    NoSource,
    #[error("source is negative somewhere in [{0}, {1}]")]
    NegativeSource(f64, f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite tally in cell {0}")]
    NonFinite(usize),
    #[error("grid does not match the tally cell centers")]
    GridMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Absorption {
    /// Weight reduction at collisions plus Russian roulette.
    ImplicitCapture,
    /// Absorption terminates the history.
    Analog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_histories: u64,
    pub rng_seed: u64,
    pub weight_cutoff: f64,
    /// Tally cell edges, strictly increasing, spanning the slab.
    pub tally_edges: Vec<f64>,
    pub absorption: Absorption,
}

impl McConfig {
    pub fn new(n_histories: u64, rng_seed: u64, tally_edges: Vec<f64>) -> Self {
        McConfig {
            n_histories,
            rng_seed,
            weight_cutoff: 1e-3,
            tally_edges,
            absorption: Absorption::ImplicitCapture,
        }
    }

    fn validate(&self, problem: &SlabProblem) -> Result<(), McError> {
        let bad = |m: &str| Err(McError::Config(m.into()));
        if self.n_histories == 0 {
            return bad("need at least one history");
        }
        if !(self.weight_cutoff > 0.0 && self.weight_cutoff < 1.0) {
            return bad("weight cutoff must lie in (0, 1)");
        }
        let e = &self.tally_edges;
        if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("tally edges must be strictly increasing with at least one cell");
        }
        if e[0] < problem.x_l() || e[e.len() - 1] > problem.x_r() {
            return bad("tally edges extend outside the slab");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McTally {
    pub edges: Vec<f64>,
    /// Cell-averaged scalar flux.
    pub flux: Vec<f64>,
    pub stderr: Vec<f64>,
    pub leakage_left: f64,
    pub leakage_right: f64,
    pub absorption: f64,
    /// Mean over histories of (absorbed + leaked) weight; 1 for exact balance.
    pub balance: f64,
    pub balance_stderr: f64,
    pub source_strength: f64,
    pub n_histories: u64,
    pub collisions: u64,
}

impl McTally {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

struct Region {
    lo: f64,
    hi: f64,
    sigma_t: f64,
    sigma_s: f64,
}

struct Sampler {
    regions: Vec<Region>,
    /// Cumulative source strength per region.
    cumulative: Vec<f64>,
    bounds: Vec<(f64, f64, f64)>,
    sources: Vec<crate::pn_model::Polynomial>,
    total: f64,
    left: BoundaryKind,
    right: BoundaryKind,
}

impl Sampler {
    fn new(problem: &SlabProblem) -> Result<Self, McError> {
        let phys = problem.to_physical();
        let mut cumulative = Vec::new();
        let mut bounds = Vec::new();
        let mut total = 0.0;
        for r in &phys.regions {
            let (lo, hi) = r.source.range_on(r.x_lo, r.x_hi);
            if lo < 0.0 {
                return Err(McError::NegativeSource(r.x_lo, r.x_hi));
            }
            total += r.source.integral(r.x_lo, r.x_hi);
            cumulative.push(total);
            bounds.push((r.x_lo, r.x_hi, hi));
        }
        if !(total > 0.0) {
            return Err(McError::NoSource);
        }
        Ok(Sampler {
            regions: phys
                .regions
                .iter()
                .map(|r| Region {
                    lo: r.x_lo,
                    hi: r.x_hi,
                    sigma_t: r.sigma_t,
                    sigma_s: r.sigma_s(),
                })
                .collect(),
            cumulative,
            bounds,
            sources: phys.regions.iter().map(|r| r.source.clone()).collect(),
            total,
            left: phys.bc_left,
            right: phys.bc_right,
        })
    }

    fn source_position<R: Rng>(&self, rng: &mut R) -> (usize, f64) {
        let u = rng.gen::<f64>() * self.total;
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.regions.len() - 1);
        let (lo, hi, peak) = self.bounds[k];
        loop {
            let x = lo + rng.gen::<f64>() * (hi - lo);
            if rng.gen::<f64>() * peak <= self.sources[k].eval(x) {
                return (k, x);
            }
        }
    }
}

#[derive(Clone)]
struct Accumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    leak_left: f64,
    leak_right: f64,
    absorbed: f64,
    balance: f64,
    balance_sq: f64,
    collisions: u64,
}

impl Accumulator {
    fn new(cells: usize) -> Self {
        Accumulator {
            sum: vec![0.0; cells],
            sum_sq: vec![0.0; cells],
            leak_left: 0.0,
            leak_right: 0.0,
            absorbed: 0.0,
            balance: 0.0,
            balance_sq: 0.0,
            collisions: 0,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.leak_left += other.leak_left;
        self.leak_right += other.leak_right;
        self.absorbed += other.absorbed;
        self.balance += other.balance;
        self.balance_sq += other.balance_sq;
        self.collisions += other.collisions;
    }
}

/// Per-history scratch tally, cleared through the list of touched cells.
struct HistoryTally {
    score: Vec<f64>,
    touched: Vec<usize>,
}

impl HistoryTally {
    fn add(&mut self, cell: usize, v: f64) {
        if self.score[cell] == 0.0 {
            self.touched.push(cell);
        }
        self.score[cell] += v;
    }

    fn flush(&mut self, acc: &mut Accumulator) {
        for &c in &self.touched {
            let v = self.score[c];
            acc.sum[c] += v;
            acc.sum_sq[c] += v * v;
            self.score[c] = 0.0;
        }
        self.touched.clear();
    }
}

/// Adds `weight × path length` of the flight from `x0` to `x1` to every cell it crosses.
fn score_track(edges: &[f64], tally: &mut HistoryTally, x0: f64, x1: f64, weight_over_mu: f64) {
    let (a, b) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
    let cells = edges.len() - 1;
    if b <= edges[0] || a >= edges[cells] {
        return;
    }
    let mut c = edges.partition_point(|&e| e <= a).saturating_sub(1).min(cells - 1);
    while c < cells && edges[c] < b {
        let overlap = b.min(edges[c + 1]) - a.max(edges[c]);
        if overlap > 0.0 {
            tally.add(c, overlap * weight_over_mu);
        }
        c += 1;
    }
}

fn run_history(sampler: &Sampler, config: &McConfig, index: u64, tally: &mut HistoryTally, acc: &mut Accumulator) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index);
    let edges = &config.tally_edges;
    let (mut region, mut x) = sampler.source_position(&mut rng);
    let mut mu: f64 = 2.0 * rng.gen::<f64>() - 1.0;
    let mut w = 1.0;
    let mut removed = 0.0;
    let last = sampler.regions.len() - 1;
    loop {
        if mu == 0.0 {
            mu = 2.0 * rng.gen::<f64>() - 1.0;
            continue;
        }
        let r = &sampler.regions[region];
        let flight = -(1.0 - rng.gen::<f64>()).ln() / r.sigma_t;
        let to_edge = if mu > 0.0 { (r.hi - x) / mu } else { (r.lo - x) / mu };
        if flight < to_edge {
            let nx = x + flight * mu;
            score_track(edges, tally, x, nx, w / mu.abs());
            x = nx;
            acc.collisions += 1;
            match config.absorption {
                Absorption::ImplicitCapture => {
                    let survive = r.sigma_s / r.sigma_t;
                    removed += w * (1.0 - survive);
                    w *= survive;
                    if w == 0.0 {
                        break;
                    }
                    if w < config.weight_cutoff {
                        if rng.gen::<f64>() < 0.5 {
                            w *= 2.0;
                        } else {
                            // the roulette loss is not an absorption; it only enters the balance noise
                            break;
                        }
                    }
                }
                Absorption::Analog => {
                    if rng.gen::<f64>() * r.sigma_t >= r.sigma_s {
                        removed += w;
                        break;
                    }
                }
            }
            mu = 2.0 * rng.gen::<f64>() - 1.0;
        } else {
            let nx = if mu > 0.0 { r.hi } else { r.lo };
            score_track(edges, tally, x, nx, w / mu.abs());
            x = nx;
            if mu > 0.0 && region < last {
                region += 1;
            } else if mu < 0.0 && region > 0 {
                region -= 1;
            } else {
                let kind = if mu > 0.0 { sampler.right } else { sampler.left };
                match kind {
                    BoundaryKind::Reflective => mu = -mu,
                    BoundaryKind::Vacuum => {
                        if mu > 0.0 {
                            acc.leak_right += w;
                        } else {
                            acc.leak_left += w;
                        }
                        removed += w;
                        break;
                    }
                }
            }
        }
    }
    acc.absorbed += removed;
    tally.flush(acc);
    acc.balance += removed;
    acc.balance_sq += removed * removed;
}

/// Fixed-source simulation of `problem` in physical cross sections.
pub fn mc_simulate(problem: &SlabProblem, config: &McConfig) -> Result<McTally, McError> {
    config.validate(problem)?;
    let sampler = Sampler::new(problem)?;
    let cells = config.tally_edges.len() - 1;
    let chunks = config.n_histories.div_ceil(CHUNK);
    let partials: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(cells);
            let mut tally = HistoryTally {
                score: vec![0.0; cells],
                touched: Vec::new(),
            };
            let end = ((c + 1) * CHUNK).min(config.n_histories);
            for h in c * CHUNK..end {
                run_history(&sampler, config, h, &mut tally, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(cells);
    for p in &partials {
        total.merge(p);
    }
    let n = config.n_histories as f64;
    let s = sampler.total;
    let mut flux = Vec::with_capacity(cells);
    let mut stderr = Vec::with_capacity(cells);
    for c in 0..cells {
        let width = config.tally_edges[c + 1] - config.tally_edges[c];
        let mean = total.sum[c] / n;
        let var = if n > 1.0 {
            ((total.sum_sq[c] / n - mean * mean) * n / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let f = s * mean / width;
        let e = s * (var / n).sqrt() / width;
        if !f.is_finite() || !e.is_finite() {
            return Err(McError::NonFinite(c));
        }
        flux.push(f);
        stderr.push(e);
    }
    let bmean = total.balance / n;
    let bvar = if n > 1.0 {
        ((total.balance_sq / n - bmean * bmean) * n / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let absorbed = total.absorbed - total.leak_left - total.leak_right;
    Ok(McTally {
        edges: config.tally_edges.clone(),
        flux,
        stderr,
        leakage_left: s * total.leak_left / n,
        leakage_right: s * total.leak_right / n,
        absorption: s * absorbed / n,
        balance: bmean,
        balance_stderr: (bvar / n).sqrt(),
        source_strength: s,
        n_histories: config.n_histories,
        collisions: total.collisions,
    })
}

/// Tally as a one-moment solution on the cell centers, errors attached.
pub fn mc_to_solution(tally: &McTally) -> Result<FluxSolution, McError> {
    let s = FluxSolution::new(tally.centers(), vec![tally.flux.clone()], "monte carlo")?;
    Ok(s.with_stderr(tally.stderr.clone())?)
}

/// Like [`mc_to_solution`], checking that `grid` holds the cell centers.
pub fn mc_to_solution_on(tally: &McTally, grid: &[f64]) -> Result<FluxSolution, McError> {
    let centers = tally.centers();
    if grid.len() != centers.len() || grid.iter().zip(&centers).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
        return Err(McError::GridMismatch);
    }
    mc_to_solution(tally)
}

/// Width-weighted average of `tally` onto coarser `edges`, which must be a
/// subset of the tally edges.
pub fn coarsen(tally: &McTally, edges: &[f64]) -> Result<Vec<f64>, McError> {
    let widths = tally.widths();
    let mut out = Vec::with_capacity(edges.len().saturating_sub(1));
    for w in edges.windows(2) {
        let i0 = tally.edges.iter().position(|&e| e == w[0]).ok_or(McError::GridMismatch)?;
        let i1 = tally.edges.iter().position(|&e| e == w[1]).ok_or(McError::GridMismatch)?;
        let total: f64 = (i0..i1).map(|c| tally.flux[c] * widths[c]).sum();
        out.push(total / (w[1] - w[0]));
    }
    Ok(out)
}
