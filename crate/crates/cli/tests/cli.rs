use std::process::Command;

use pnlab::pn_model::ScalingMode;
use pnlab::solution::{uniform_grid, FluxSolution};
use pnlab_cli::case::{CaseFile, ReferenceSpec, SolverKind};
use pnlab_cli::run::{case_plot, read_any_csv, run_case, sweep_epsilon, write_artifacts, write_sweep_csv, Manifest};

fn lsfe_case() -> CaseFile {
    let mut c = CaseFile::bundled("asymptotic_eps2").unwrap().unwrap();
    c.solvers = vec![SolverKind::Lsfe];
    c
}

fn small_interface() -> CaseFile {
    let mut c = CaseFile::bundled("interface").unwrap().unwrap();
    c.solvers = vec![SolverKind::Lsfe];
    c.reference = ReferenceSpec::Mc {
        histories: 3000,
        seed: 5,
        weight_cutoff: 1e-3,
    };
    c.grid_points = 40;
    c
}

#[test]
fn lsfe_sweep_follows_the_table_ordering() {
    let rows = sweep_epsilon(&lsfe_case(), &[1e-2, 1e-3, 1e-4]).unwrap();
    assert_eq!(rows.len(), 6);
    let col = |m: ScalingMode| -> Vec<f64> { rows.iter().filter(|r| r.scaling == m).map(|r| r.xi_rel).collect() };
    let (u, s) = (col(ScalingMode::Unscaled), col(ScalingMode::Diffusive));
    assert!(u[0] < u[1] && u[1] < u[2], "{u:?}");
    assert!(s.iter().zip(&u).all(|(a, b)| a < b));
    let one = sweep_epsilon(&lsfe_case(), &[1e-3]).unwrap();
    assert_eq!(one.len(), 2);
    let mut buf = Vec::new();
    write_sweep_csv(&one, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("epsilon,solver,scaling,xi_rel,percent,max_abs_phi0"));
}

#[test]
fn sweep_needs_an_epsilon() {
    assert!(sweep_epsilon(&small_interface(), &[1e-2]).is_err());
}

#[test]
fn artifacts_are_reproducible() {
    let case = small_interface();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_case(&case).unwrap();
    let rb = run_case(&case).unwrap();
    let mut ma: Manifest = write_artifacts(&ra, a.path()).unwrap();
    let mb: Manifest = write_artifacts(&rb, b.path()).unwrap();
    ma.timing = mb.timing.clone();
    assert_eq!(ma, mb);
    for f in &ma.files {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        assert_eq!(x, y, "{f} differs");
    }
    assert_eq!(case_plot(&ra), case_plot(&rb));
    let reference = read_any_csv(std::fs::File::open(a.path().join("reference.csv")).unwrap(), "r").unwrap();
    assert_eq!(reference.grid.len(), 40);
    assert!(reference.stderr.is_some());
    assert_eq!(ra.runs.len(), 2);
    assert_eq!(ra.runs[0].region_errors.len(), 2);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pnlab"))
}

#[test]
fn error_and_plot_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let grid = uniform_grid(0.0, 10.0, 11);
    let r = FluxSolution::new(grid.clone(), vec![grid.iter().map(|x| 1.0 + x).collect()], "r").unwrap();
    let s = FluxSolution::new(grid.clone(), vec![grid.iter().map(|x| 1.02 * (1.0 + x)).collect()], "s").unwrap();
    r.write_csv(std::fs::File::create(dir.path().join("r.csv")).unwrap()).unwrap();
    s.write_csv(std::fs::File::create(dir.path().join("s.csv")).unwrap()).unwrap();
    let out = bin().arg("error").arg(dir.path().join("s.csv")).arg(dir.path().join("r.csv")).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["xi_rel"].as_f64().unwrap() - 0.02).abs() < 1e-12);
    assert_eq!(report["grid_size"], 11);
    let svg = dir.path().join("p.svg");
    let out = bin().arg("plot").arg(dir.path().join("s.csv")).arg(dir.path().join("r.csv")).arg("-o").arg(&svg).output().unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 2);
}

#[test]
fn failures_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nunknown = 3\n").unwrap();
    let out = bin().arg("run").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "case");
    let out = bin().args(["run", "no_such_case"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn mc_subcommand_writes_tally_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["mc", "interface", "--histories", "2000", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tally = std::fs::read_to_string(dir.path().join("interface/tally.csv")).unwrap();
    assert!(tally.starts_with("x_center,phi0,stderr"));
    assert_eq!(tally.lines().count(), 201);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("interface/mc_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["histories"], 2000);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("c.toml");
    std::fs::write(&case, small_interface().to_toml().unwrap()).unwrap();
    let out = bin().arg("run").arg(&case).env("PNLAB_OUTPUT_DIR", dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("interface/manifest.json").exists());
    assert!(dir.path().join("interface/plot.svg").exists());
}
