use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pnlab_cli::case::CaseFile;
use pnlab_cli::metric::{compute_error, format_percent};
use pnlab_cli::plot::{svg_plot, Series};
use pnlab_cli::run::{
    default_output_dir, mc_case, read_any_csv, run_case, sweep_epsilon, write_artifacts, write_sweep_csv,
    write_tally_csv,
};
use pnlab_cli::HarnessError;
use pnlab::solution::uniform_grid;

/// Slab P_N transport experiments.
#[derive(Parser)]
#[command(name = "pnlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver of a case against its reference.
    Run {
        /// Case file path or bundled case name.
        case: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: $PNLAB_OUTPUT_DIR or ./pnlab-out].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a case for several ε values and tabulate the errors.
    Sweep {
        case: String,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative error of one solution CSV against another.
    Error {
        solution: PathBuf,
        reference: PathBuf,
        /// Compare on this many equidistant points instead of the reference grid.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Monte Carlo tally for the problem of a case.
    Mc {
        case: String,
        #[arg(long, default_value_t = 100_000)]
        histories: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay φ0 from solution CSVs in one SVG.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
}

fn load(case: &str, seed: Option<u64>) -> Result<CaseFile, HarnessError> {
    let c = CaseFile::load(case)?;
    Ok(match seed {
        Some(s) => c.with_seed(s),
        None => c,
    })
}

fn out_dir(out: Option<PathBuf>, case: &CaseFile) -> PathBuf {
    out.or_else(|| case.output_dir.clone())
        .unwrap_or_else(default_output_dir)
        .join(&case.name)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { case, seed, out } => {
            let case = load(&case, seed)?;
            let dir = out_dir(out, &case);
            let run = run_case(&case)?;
            write_artifacts(&run, &dir)?;
            for r in &run.runs {
                println!("{:<16} xi_rel {:>7}", r.label(), r.error.percent());
            }
            println!("artifacts in {}", dir.display());
        }
        Command::Sweep { case, eps, seed, out } => {
            let case = load(&case, seed)?;
            let dir = out_dir(out, &case);
            let rows = sweep_epsilon(&case, &eps)?;
            fs::create_dir_all(&dir)?;
            write_sweep_csv(&rows, fs::File::create(dir.join("sweep.csv"))?)?;
            write_sweep_csv(&rows, std::io::stdout())?;
        }
        Command::Error {
            solution,
            reference,
            points,
        } => {
            let s = read_any_csv(fs::File::open(&solution)?, &stem(&solution))?;
            let r = read_any_csv(fs::File::open(&reference)?, &stem(&reference))?;
            let grid = match points {
                Some(g) => uniform_grid(r.grid[0], r.grid[r.grid.len() - 1], g),
                None => r.grid.clone(),
            };
            let report = compute_error(&s, &r, &grid)?;
            eprintln!("xi_rel {}", format_percent(report.xi_rel));
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Mc {
            case,
            histories,
            seed,
            out,
        } => {
            let case = load(&case, None)?;
            let dir = out_dir(out, &case);
            fs::create_dir_all(&dir)?;
            let (tally, manifest) = mc_case(&case, histories, seed)?;
            write_tally_csv(&tally, fs::File::create(dir.join("tally.csv"))?)?;
            fs::write(dir.join("mc_manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
            println!("{}", serde_json::to_string_pretty(&manifest)?);
        }
        Command::Plot { csv, output } => {
            let series = csv
                .iter()
                .map(|p| {
                    let s = read_any_csv(fs::File::open(p)?, &stem(p))?;
                    Ok(Series {
                        label: s.label.clone(),
                        x: s.grid.clone(),
                        y: s.phi0().to_vec(),
                    })
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            fs::write(&output, svg_plot(&stem(&output), &series))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
