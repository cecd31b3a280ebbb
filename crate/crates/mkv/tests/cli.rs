//! End-to-end checks of the `mkv` binary: exit codes, subcommand outputs and
//! the config diagnostics.

use std::fs;
use std::path::Path;
use std::process::Command;

fn mkv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mkv"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path
}

const BURGERS: &str = "\
[model]
kind = burgers
[noise]
alpha = 2.0
[grid]
d = 1
half_width = 8.0
n = 256
[initial]
kind = gaussian
sigma = 1.0
[solver]
horizon = 0.2
mesh_m = 12
picard_tol = 1e-7
fixed_segments = 1
p0 = 2.0
eta = 0.1
[output]
seed = 7
";

#[test]
fn check_reports_and_strict_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BURGERS);

    let out = mkv().args(["check", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("c1: true"), "{text}");
    assert!(text.contains("well_posed: true"));

    // a failing tuple under --strict exits 3
    let bad = BURGERS.replace("eta = 0.1", "eta = 0.1\nr = 2.0");
    let cfg = write_config(dir.path(), &bad);
    let out = mkv().args(["check", "--strict", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_errors_exit_one_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();

    let cfg = write_config(dir.path(), &BURGERS.replace("alpha = 2.0", "alpha = 0.8"));
    let out = mkv().args(["check", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("alpha must lie in (1, 2]"), "{err}");

    let cfg = write_config(dir.path(), &format!("{BURGERS}viscosity = 1\n"));
    let out = mkv().args(["check", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown key"), "{err}");

    // beta = -1 without the divergence bound only warns
    let cfg = write_config(dir.path(), &BURGERS.replace("eta = 0.1", "eta = 0.1\nbeta = -1"));
    let out = mkv().args(["check", "--config"]).arg(&cfg).output().unwrap();
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("(C2) unavailable"), "{err}");
}

#[test]
fn fp_solve_then_besov_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), BURGERS);

    let out = mkv()
        .args(["fp-solve", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("diagnostics.csv").exists());
    assert!(out_dir.join("summary.txt").exists());
    let diag = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("s,mass,min_value,weighted_norm,picard_iters,drift_sup"));
    for line in diag.lines().skip(1) {
        let mass: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((mass - 1.0).abs() < 1e-3, "mass column drifted: {line}");
    }

    // besov norm of the final snapshot
    let density = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("density_"))
        .max()
        .unwrap();
    let besov_cfg = write_config(
        dir.path(),
        &format!("[besov]\nfield = {}\ngamma = 0.0\nell = 2.0\nm = inf\n", density.display()),
    );
    let out = mkv().args(["besov", "--config"]).arg(&besov_cfg).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("norm,gamma,ell,m,tail_estimate"), "{text}");

    // compare a field with itself: zero distances, exit 0
    let cmp_cfg = write_config(
        dir.path(),
        &format!("[compare]\na = {p}\nb = {p}\n", p = density.display()),
    );
    let out = mkv().args(["compare", "--config"]).arg(&cmp_cfg).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("l1: 0.0"), "{text}");
}

#[test]
fn kernels_subcommand_writes_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("k");
    let cfg = write_config(
        dir.path(),
        "[model]\nkind = vortex2d\ncutoff = 3.0\n[noise]\nalpha = 2.0\n[grid]\nd = 2\nhalf_width = 8.0\nn = 64\n",
    );
    let out = mkv()
        .args(["kernels", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("kernel_b.csv").exists());
    assert!(out_dir.join("kernel_div.csv").exists());
    let b = fs::read_to_string(out_dir.join("kernel_b.csv")).unwrap();
    assert!(b.starts_with("x1,x2,v1,v2"));
}

#[test]
fn particles_outputs_are_seed_stable() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{BURGERS}[particles]\nn = 300\ndt = 0.01\nhorizon = 0.1\nsnapshot_every = 10\n");
    let cfg = write_config(dir.path(), &body);
    let d1 = dir.path().join("a");
    let d2 = dir.path().join("b");
    for d in [&d1, &d2] {
        let out = mkv()
            .args(["particles", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(d)
            .args(["--seed", "99"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(d1.join("positions_0000.csv")).unwrap();
    let b = fs::read(d2.join("positions_0000.csv")).unwrap();
    assert_eq!(a, b);

    let usage = mkv().args(["orbit", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
}
