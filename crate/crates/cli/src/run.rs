//! Executing case files: reference, solver runs, sweeps and artifacts.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pnlab::lsfe::{solve_problem, Mesh1D};
use pnlab::pinn::{ensemble_predict, train, TrainedPinn};
use pnlab::pn_model::{analytic_diffusion_reference, ScalingMode};
use pnlab::reference::{mc_simulate, mc_to_solution, McConfig, McTally};
use pnlab::solution::{uniform_grid, FluxSolution};

use crate::case::{CaseFile, ReferenceSpec, SolverKind};
use crate::metric::{compute_error, error_from_values, format_percent, ErrorReport};
use crate::plot::{svg_plot, Series};
use crate::HarnessError;

#[derive(Debug, Clone)]
pub struct Reference {
    pub solution: FluxSolution,
    pub tally: Option<McTally>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionError {
    pub x_lo: f64,
    pub x_hi: f64,
    pub xi_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "lowercase")]
pub enum RunDetail {
    Lsfe {
        elements: usize,
        factorization: String,
        relative_residual: f64,
    },
    Pinn {
        seeds: Vec<u64>,
        best_loss: Vec<f64>,
        best_step: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub scaling: ScalingMode,
    /// Ensemble mean for the PINN, on the reference grid.
    pub solution: FluxSolution,
    pub members: Vec<FluxSolution>,
    pub error: ErrorReport,
    pub member_errors: Vec<f64>,
    pub region_errors: Vec<RegionError>,
    pub detail: RunDetail,
    pub seconds: f64,
}

impl SolverRun {
    pub fn label(&self) -> String {
        format!("{} {}", self.solver.label(), self.scaling.label())
    }

    fn file_stem(&self) -> String {
        format!("{}_{}", self.solver.label(), self.scaling.label())
    }
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub case: CaseFile,
    pub reference: Reference,
    pub runs: Vec<SolverRun>,
}

impl CaseRun {
    pub fn get(&self, solver: SolverKind, scaling: ScalingMode) -> Option<&SolverRun> {
        self.runs.iter().find(|r| r.solver == solver && r.scaling == scaling)
    }
}

/// Analytic values on `G` equidistant points, or a Monte Carlo tally on `G` cells.
pub fn reference_solution(case: &CaseFile) -> Result<Reference, HarnessError> {
    let start = Instant::now();
    let problem = case.problem(ScalingMode::Unscaled)?;
    let (solution, tally) = match &case.reference {
        ReferenceSpec::Analytic => {
            let grid = uniform_grid(problem.x_l(), problem.x_r(), case.grid_points);
            let values = grid.iter().map(|&x| analytic_diffusion_reference(x)).collect();
            (FluxSolution::new(grid, vec![values], "analytic")?, None)
        }
        ReferenceSpec::Mc {
            histories,
            seed,
            weight_cutoff,
        } => {
            let mut cfg = McConfig::new(
                *histories,
                *seed,
                uniform_grid(problem.x_l(), problem.x_r(), case.grid_points + 1),
            );
            cfg.weight_cutoff = *weight_cutoff;
            let tally = mc_simulate(&problem, &cfg)?;
            (mc_to_solution(&tally)?, Some(tally))
        }
    };
    Ok(Reference {
        solution,
        tally,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn region_errors(case: &CaseFile, solution: &FluxSolution, reference: &FluxSolution) -> Result<Vec<RegionError>, HarnessError> {
    let problem = case.problem(ScalingMode::Unscaled)?;
    Ok(problem
        .regions
        .iter()
        .map(|r| {
            let idx: Vec<usize> = (0..reference.grid.len())
                .filter(|&g| reference.grid[g] >= r.x_lo && reference.grid[g] <= r.x_hi)
                .collect();
            let s: Vec<f64> = idx.iter().map(|&g| solution.phi0()[g]).collect();
            let f: Vec<f64> = idx.iter().map(|&g| reference.phi0()[g]).collect();
            RegionError {
                x_lo: r.x_lo,
                x_hi: r.x_hi,
                xi_rel: error_from_values(&s, &f, "", "").ok().map(|e| e.xi_rel),
            }
        })
        .collect())
}

/// One solver in one scaling mode, evaluated on the reference grid.
pub fn run_solver(
    case: &CaseFile,
    solver: SolverKind,
    scaling: ScalingMode,
    reference: &FluxSolution,
) -> Result<SolverRun, HarnessError> {
    let start = Instant::now();
    let problem = case.problem(scaling)?;
    let grid = &reference.grid;
    let label = format!("{} {}", solver.label(), scaling.label());
    let (solution, members, detail) = match solver {
        SolverKind::Lsfe => {
            let mesh = Mesh1D::conforming(&problem, case.lsfe.elements)?;
            let result = solve_problem(&problem, &mesh)?;
            let detail = RunDetail::Lsfe {
                elements: mesh.n_elements(),
                factorization: format!("{:?}", result.report.factorization).to_lowercase(),
                relative_residual: result.report.relative_residual,
            };
            (result.evaluate(grid, &label)?, Vec::new(), detail)
        }
        SolverKind::Pinn => {
            let trained: Vec<TrainedPinn> = case
                .pinn
                .seeds
                .par_iter()
                .map(|&s| train(&problem, &case.pinn, s))
                .collect::<Result<_, _>>()?;
            let mut mean = ensemble_predict(&trained, grid)?;
            mean.label = label.clone();
            let members = trained.iter().map(|t| t.predict(grid)).collect::<Result<Vec<_>, _>>()?;
            let detail = RunDetail::Pinn {
                seeds: trained.iter().map(|t| t.seed).collect(),
                best_loss: trained.iter().map(|t| t.best.total()).collect(),
                best_step: trained.iter().map(|t| t.best.step).collect(),
            };
            (mean, members, detail)
        }
    };
    let error = compute_error(&solution, reference, grid)?;
    let member_errors = members
        .iter()
        .map(|m| compute_error(m, reference, grid).map(|e| e.xi_rel))
        .collect::<Result<_, _>>()?;
    Ok(SolverRun {
        solver,
        scaling,
        region_errors: region_errors(case, &solution, reference)?,
        solution,
        members,
        error,
        member_errors,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Every (solver, scaling) pair of the case, in declaration order.
pub fn run_case(case: &CaseFile) -> Result<CaseRun, HarnessError> {
    case.validate()?;
    let reference = reference_solution(case)?;
    let jobs: Vec<(SolverKind, ScalingMode)> = case
        .solvers
        .iter()
        .flat_map(|&s| case.scalings.iter().map(move |&m| (s, m)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(s, m)| run_solver(case, s, m, &reference.solution))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CaseRun {
        case: case.clone(),
        reference,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub xi_rel: f64,
    pub percent: String,
    pub xi_rel_pointwise: f64,
    pub member_xi_rel: Vec<f64>,
    pub region_xi_rel: Vec<RegionError>,
    pub max_abs_phi0: f64,
    pub detail: RunDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub created_unix: u64,
    pub reference_seconds: f64,
    pub run_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub case: String,
    pub case_toml: String,
    pub reference: String,
    pub histories: Option<u64>,
    pub files: Vec<String>,
    pub results: Vec<RunSummary>,
    pub timing: Timing,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_solution(path: &Path, s: &FluxSolution) -> Result<(), HarnessError> {
    Ok(s.write_csv(fs::File::create(path)?)?)
}

/// Writes CSVs, `errors.json`, `plot.svg` and `manifest.json` under `dir`.
pub fn write_artifacts(run: &CaseRun, dir: &Path) -> Result<Manifest, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut files = vec!["case.toml".to_string(), "reference.csv".to_string()];
    fs::write(dir.join("case.toml"), run.case.to_toml()?)?;
    write_solution(&dir.join("reference.csv"), &run.reference.solution)?;
    for r in &run.runs {
        let name = format!("{}.csv", r.file_stem());
        write_solution(&dir.join(&name), &r.solution)?;
        files.push(name);
        for (k, m) in r.members.iter().enumerate() {
            let name = format!("{}_member{}.csv", r.file_stem(), k);
            write_solution(&dir.join(&name), m)?;
            files.push(name);
        }
    }
    let results: Vec<RunSummary> = run
        .runs
        .iter()
        .map(|r| RunSummary {
            label: r.label(),
            xi_rel: r.error.xi_rel,
            percent: r.error.percent(),
            xi_rel_pointwise: r.error.xi_rel_pointwise,
            member_xi_rel: r.member_errors.clone(),
            region_xi_rel: r.region_errors.clone(),
            max_abs_phi0: r.solution.max_abs_phi0(),
            detail: r.detail.clone(),
        })
        .collect();
    let errors: Vec<&ErrorReport> = run.runs.iter().map(|r| &r.error).collect();
    fs::write(dir.join("errors.json"), serde_json::to_string_pretty(&errors)?)?;
    files.push("errors.json".into());
    fs::write(dir.join("plot.svg"), case_plot(run))?;
    files.push("plot.svg".into());
    let manifest = Manifest {
        case: run.case.name.clone(),
        case_toml: run.case.to_toml()?,
        reference: run.reference.solution.label.clone(),
        histories: run.reference.tally.as_ref().map(|t| t.n_histories),
        files,
        results,
        timing: Timing {
            created_unix: unix_now(),
            reference_seconds: run.reference.seconds,
            run_seconds: run.runs.iter().map(|r| r.seconds).collect(),
        },
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn case_plot(run: &CaseRun) -> String {
    let r = &run.reference.solution;
    let mut series = vec![Series {
        label: r.label.clone(),
        x: r.grid.clone(),
        y: r.phi0().to_vec(),
    }];
    series.extend(run.runs.iter().map(|s| Series {
        label: format!("{} ({})", s.label(), s.error.percent()),
        x: s.solution.grid.clone(),
        y: s.solution.phi0().to_vec(),
    }));
    svg_plot(&run.case.name, &series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub solver: SolverKind,
    pub scaling: ScalingMode,
    pub xi_rel: f64,
    pub max_abs_phi0: f64,
    pub seconds: f64,
}

/// `run_case` at every ε; rows ordered by ε, then solver, then scaling.
pub fn sweep_epsilon(case: &CaseFile, eps: &[f64]) -> Result<Vec<SweepRow>, HarnessError> {
    let cases = eps.iter().map(|&e| case.with_epsilon(e)).collect::<Result<Vec<_>, _>>()?;
    let runs = cases.par_iter().map(run_case).collect::<Result<Vec<_>, _>>()?;
    Ok(eps
        .iter()
        .zip(&runs)
        .flat_map(|(&e, run)| {
            run.runs.iter().map(move |r| SweepRow {
                epsilon: e,
                solver: r.solver,
                scaling: r.scaling,
                xi_rel: r.error.xi_rel,
                max_abs_phi0: r.solution.max_abs_phi0(),
                seconds: r.seconds,
            })
        })
        .collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "solver", "scaling", "xi_rel", "percent", "max_abs_phi0"])?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.epsilon),
            r.solver.label().to_string(),
            r.scaling.label().to_string(),
            r.xi_rel.to_string(),
            format_percent(r.xi_rel),
            r.max_abs_phi0.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Tally CSV with columns `x_center, phi0, stderr`.
pub fn write_tally_csv<W: Write>(tally: &McTally, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_center", "phi0", "stderr"])?;
    for ((x, f), e) in tally.centers().iter().zip(&tally.flux).zip(&tally.stderr) {
        w.write_record([x.to_string(), f.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a solution CSV or a tally CSV.
pub fn read_any_csv<R: Read>(mut input: R, label: &str) -> Result<FluxSolution, HarnessError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    if text.starts_with("x_center") {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let (mut grid, mut phi, mut err) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, HarnessError> {
                rec.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| HarnessError::Case(format!("bad tally row {:?}", rec)))
            };
            grid.push(num(0)?);
            phi.push(num(1)?);
            err.push(num(2)?);
        }
        return Ok(FluxSolution::new(grid, vec![phi], label)?.with_stderr(err)?);
    }
    Ok(FluxSolution::read_csv(text.as_bytes(), label)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McManifest {
    pub case: String,
    pub seed: u64,
    pub histories: u64,
    pub collisions: u64,
    pub balance: f64,
    pub balance_stderr: f64,
    pub leakage_left: f64,
    pub leakage_right: f64,
    pub absorption: f64,
    pub created_unix: u64,
    pub seconds: f64,
}

/// Monte Carlo tally for the case problem, independent of its reference setting.
pub fn mc_case(case: &CaseFile, histories: u64, seed: u64) -> Result<(McTally, McManifest), HarnessError> {
    let start = Instant::now();
    let problem = case.problem(ScalingMode::Unscaled)?;
    let mut cfg = McConfig::new(
        histories,
        seed,
        uniform_grid(problem.x_l(), problem.x_r(), case.grid_points + 1),
    );
    if let ReferenceSpec::Mc { weight_cutoff, .. } = case.reference {
        cfg.weight_cutoff = weight_cutoff;
    }
    let tally = mc_simulate(&problem, &cfg)?;
    let manifest = McManifest {
        case: case.name.clone(),
        seed,
        histories,
        collisions: tally.collisions,
        balance: tally.balance,
        balance_stderr: tally.balance_stderr,
        leakage_left: tally.leakage_left,
        leakage_right: tally.leakage_right,
        absorption: tally.absorption,
        created_unix: unix_now(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((tally, manifest))
}

/// `$PNLAB_OUTPUT_DIR`, else `pnlab-out`.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os("PNLAB_OUTPUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("pnlab-out"))
}
