//! Experiment orchestration: translate a parsed config into module calls,
//! write the output files, and map outcomes to process exit codes
//! (0 ok, 1 config/usage error, 2 blow-up or numerical failure,
//! 3 strict check failure).

use std::fs;
use std::path::{Path, PathBuf};

use crate::besov::{thermic_norm, BesovIndex, ThermicQuad};
use crate::conditions::{evaluate_conditions, LebesgueBesovIndices};
use crate::config::{child_seed, ExperimentConfig};
use crate::error::{Error, Result};
use crate::grid::{scalar_from_csv, scalar_to_csv, vector_to_csv, GridSpec, ScalarField};
use crate::kernels::{build_kernel, KernelKind, KernelSpec};
use crate::particles::{compare_to_pde, simulate, ParticleConfig};
use crate::solver::{solve_mild, SolveStatus, SolverConfig};
use crate::stable::{SpectralMeasure, StableParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_STRICT_FAIL: i32 = 3;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
    pub force: bool,
    pub seed: Option<u64>,
}

/// Cap on internal parallelism from the environment; the current
/// implementation is single-threaded, so any positive value is honored.
pub fn thread_cap() -> Result<usize> {
    match std::env::var("MKV_THREADS") {
        Err(_) => Ok(1),
        Ok(v) if v == "auto" => Ok(1),
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::Config(format!("MKV_THREADS must be a positive integer, got `{v}`"))),
    }
}

pub fn grid_from_config(cfg: &ExperimentConfig) -> Result<GridSpec> {
    let d = cfg.require_int("grid", "d")? as usize;
    let l = cfg.require_real("grid", "half_width")?;
    let n = cfg.require_int("grid", "n")? as usize;
    GridSpec::new(d, l, n)
}

pub fn noise_from_config(cfg: &ExperimentConfig, d: usize) -> Result<StableParams> {
    let alpha = cfg.require_real("noise", "alpha")?;
    let c = cfg.get_real("noise", "diffusivity").unwrap_or(0.5);
    let measure = match cfg.get_text("noise", "measure").as_deref() {
        None | Some("isotropic") => SpectralMeasure::Isotropic,
        Some("cylindrical") => SpectralMeasure::Cylindrical,
        Some(other) => return Err(Error::Config(format!("unknown noise measure `{other}`"))),
    };
    StableParams::new(d, alpha, measure, c)
}

pub fn kernel_from_config(cfg: &ExperimentConfig, grid: &GridSpec) -> Result<KernelSpec> {
    let kind = cfg.require_text("model", "kind")?;
    let eps = cfg.get_real("model", "epsilon").unwrap_or(0.0);
    let cutoff = cfg.get_real("model", "cutoff").unwrap_or(3.0);
    let kind = match kind.as_str() {
        "burgers" => KernelKind::BurgersDirac,
        "vortex2d" => KernelKind::BiotSavart2D { cutoff },
        "keller_segel" => KernelKind::KellerSegel {
            chi: cfg.get_real("model", "chi").unwrap_or(1.0),
            cutoff,
        },
        "none" => KernelKind::Custom(crate::grid::VectorField::zeros(grid.clone())),
        other => return Err(Error::Config(format!("model `{other}` has no gridded kernel"))),
    };
    KernelSpec::new(kind, eps)
}

pub fn initial_from_config(cfg: &ExperimentConfig, grid: &GridSpec) -> Result<ScalarField> {
    match cfg.get_text("initial", "kind").as_deref().unwrap_or("gaussian") {
        "gaussian" => {
            let center = cfg.get_real("initial", "center").unwrap_or(0.0);
            let sigma = cfg.get_real("initial", "sigma").unwrap_or(1.0);
            if !(sigma > 0.0) {
                return Err(Error::Config("initial sigma must be positive".into()));
            }
            let mut f = ScalarField::from_fn(grid.clone(), |x| {
                let r2: f64 = x.iter().map(|v| (v - center) * (v - center)).sum();
                (-r2 / (2.0 * sigma * sigma)).exp()
            });
            f.normalize_mass()?;
            Ok(f)
        }
        "file" => {
            let path = cfg.require_text("initial", "path")?;
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::Io(format!("reading initial density `{path}`: {e}")))?;
            let mut f = scalar_from_csv(&text)?;
            if f.grid != *grid {
                return Err(Error::GridMismatch);
            }
            f.normalize_mass()?;
            Ok(f)
        }
        other => Err(Error::Config(format!("unknown initial kind `{other}`"))),
    }
}

pub fn indices_from_config(cfg: &ExperimentConfig) -> Result<LebesgueBesovIndices> {
    let d = cfg.require_int("grid", "d")? as usize;
    let alpha = cfg.require_real("noise", "alpha")?;
    Ok(LebesgueBesovIndices {
        r: cfg.get_real("solver", "r").unwrap_or(f64::INFINITY),
        p: cfg.get_real("solver", "p").unwrap_or(1.0),
        q: cfg.get_real("solver", "q").unwrap_or(f64::INFINITY),
        beta: cfg.get_real("solver", "beta").unwrap_or(0.0),
        p0: cfg.get_real("solver", "p0").unwrap_or(2.0),
        q0: cfg.get_real("solver", "q0").unwrap_or(f64::INFINITY),
        beta0: cfg.get_real("solver", "beta0").unwrap_or(0.0),
        d,
        alpha,
        eta: cfg.get_real("solver", "eta").unwrap_or(0.01),
        has_div_bound: cfg.get_bool("solver", "has_div_bound").unwrap_or(false),
    })
}

pub fn solver_from_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SolverConfig> {
    let grid = grid_from_config(cfg)?;
    let noise = noise_from_config(cfg, grid.dim())?;
    let kernel = kernel_from_config(cfg, &grid)?;
    let mu0 = initial_from_config(cfg, &grid)?;
    let indices = indices_from_config(cfg)?;
    let fixed = cfg.get_int("solver", "fixed_segments").unwrap_or(0);
    Ok(SolverConfig {
        t_start: cfg.get_real("solver", "t_start").unwrap_or(0.0),
        horizon: cfg.require_real("solver", "horizon")?,
        mesh_m: cfg.get_int("solver", "mesh_m").unwrap_or(24) as usize,
        grading: cfg.get_real("solver", "grading").unwrap_or(2.0),
        picard_tol: cfg.get_real("solver", "picard_tol").unwrap_or(1e-7),
        picard_max: cfg.get_int("solver", "picard_max").unwrap_or(60) as usize,
        kernel,
        noise,
        indices,
        mu0,
        blowup_factor: cfg.get_real("solver", "blowup_factor").unwrap_or(1000.0),
        theta_frac: cfg.get_real("solver", "theta_frac").unwrap_or(0.9),
        fixed_segments: if fixed > 0 { Some(fixed as usize) } else { None },
        quad: ThermicQuad::default(),
        record_iterates: true,
        force: opts.force,
    })
}

fn out_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PathBuf> {
    let dir = match &opts.out_dir {
        Some(d) => d.clone(),
        None => PathBuf::from(cfg.get_text("output", "dir").unwrap_or_else(|| "out".into())),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn master_seed(cfg: &ExperimentConfig, opts: &RunOptions) -> u64 {
    opts.seed.unwrap_or_else(|| cfg.get_int("output", "seed").unwrap_or(42) as u64)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

/// `check`: evaluate the well-posedness conditions; one `key: value` line per
/// field.
pub fn run_check(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(i32, String)> {
    let idx = indices_from_config(cfg)?;
    let rep = evaluate_conditions(&idx)?;
    let mut out = String::new();
    for w in &cfg.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out.push_str(&format!("intrinsic_index: {:.6}\n", rep.intrinsic_index));
    for (name, v) in [
        ("c0", rep.c0),
        ("c0_s", rep.c0_s),
        ("c1", rep.c1),
        ("c2", rep.c2),
        ("c1_s", rep.c1_s),
        ("c2_s", rep.c2_s),
    ] {
        out.push_str(&format!("{name}: {v}\n"));
    }
    if let Some(reason) = &rep.c2_reason {
        out.push_str(&format!("c2_reason: {reason}\n"));
    }
    out.push_str(&format!("zeta0: {:.6}\n", rep.zeta0));
    out.push_str(&format!("gamma: {:.6}\n", rep.gamma));
    out.push_str(&format!("theta: {:.6}\n", rep.theta));
    out.push_str(&format!("eta_max: {:.6}\n", rep.eta_max));
    out.push_str(&format!("margin: {:.6}\n", rep.margin));
    match rep.r0_window {
        Some((lo, hi)) => out.push_str(&format!("r0_window: ({lo:.6}, {hi:.6})\n")),
        None => out.push_str("r0_window: empty\n"),
    }
    out.push_str(&format!("binding_branch: {:?}\n", rep.binding_branch));
    out.push_str(&format!("well_posed: {}\n", rep.well_posed()));
    out.push_str(&format!("strongly_well_posed: {}\n", rep.strongly_well_posed()));
    let code = if opts.strict && !rep.well_posed() { EXIT_STRICT_FAIL } else { EXIT_OK };
    Ok((code, out))
}

/// `kernels`: write the kernel field and its divergence.
pub fn run_kernels(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(i32, String)> {
    let grid = grid_from_config(cfg)?;
    let spec = kernel_from_config(cfg, &grid)?;
    let (b, div_b) = build_kernel(&spec, &grid)?;
    let dir = out_dir(cfg, opts)?;
    write(&dir.join("kernel_b.csv"), &vector_to_csv(&b))?;
    write(&dir.join("kernel_div.csv"), &scalar_to_csv(&div_b))?;
    Ok((EXIT_OK, format!("kernel written to {} (eps = {})\n", dir.display(), spec.resolve_epsilon(&grid))))
}

/// `besov`: thermic norm of a field CSV, one CSV row on stdout.
pub fn run_besov(cfg: &ExperimentConfig, _opts: &RunOptions) -> Result<(i32, String)> {
    let path = cfg.require_text("besov", "field")?;
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Io(format!("reading field `{path}`: {e}")))?;
    let field = scalar_from_csv(&text)?;
    let idx = BesovIndex::new(
        cfg.get_real("besov", "gamma").unwrap_or(0.0),
        cfg.get_real("besov", "ell").unwrap_or(2.0),
        cfg.get_real("besov", "m").unwrap_or(f64::INFINITY),
    )?;
    let r = thermic_norm(&field, idx, &ThermicQuad::default())?;
    Ok((
        EXIT_OK,
        format!(
            "norm,gamma,ell,m,tail_estimate\n{:.12e},{},{},{},{:.3e}\n",
            r.value, idx.gamma, idx.ell, idx.m, r.tail_fraction
        ),
    ))
}

/// `fp-solve`: run the mild solver, write snapshots, diagnostics and summary.
pub fn run_fp_solve(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(i32, String)> {
    let solver_cfg = solver_from_config(cfg, opts)?;
    let dir = out_dir(cfg, opts)?;
    let traj = solve_mild(&solver_cfg)?;

    let mut diag = String::from("s,mass,min_value,weighted_norm,picard_iters,drift_sup\n");
    for d in &traj.diags {
        diag.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e}\n",
            d.s, d.mass, d.min_value, d.weighted_norm, d.picard_iters, d.drift_sup
        ));
    }
    write(&dir.join("diagnostics.csv"), &diag)?;

    let n_snap = cfg.get_int("solver", "snapshots").unwrap_or(4).max(1) as usize;
    let count = traj.densities.len();
    if count > 0 {
        let stride = (count / n_snap).max(1);
        let mut snap_no = 0usize;
        for (i, f) in traj.densities.iter().enumerate() {
            if (i + 1) % stride == 0 || i + 1 == count {
                write(&dir.join(format!("density_{snap_no:04}.csv")), &scalar_to_csv(f))?;
                snap_no += 1;
            }
        }
    }

    let boundary = traj.final_density().map(|f| f.boundary_mass()).unwrap_or(0.0);
    let status_line = match traj.status {
        SolveStatus::Converged => "converged".to_string(),
        SolveStatus::Blowup(s) => format!("blowup at s = {s:.6}"),
        SolveStatus::MaxIters(s) => format!("picard stalled at s = {s:.6}"),
    };
    let summary = format!(
        "status: {status_line}\nstamps: {}\nsegments: {}\ntheta: {:.6}\ngamma: {:.6}\nweighted_norm: {:.6e}\nmax_residual: {:.3e}\nescaped_mass: {:.3e}\n",
        traj.stamps.len(),
        traj.segments.len(),
        traj.theta,
        traj.gamma,
        traj.weighted_norm(),
        traj.max_residual(),
        boundary,
    );
    write(&dir.join("summary.txt"), &summary)?;

    let code = if traj.converged() { EXIT_OK } else { EXIT_NUMERICAL };
    Ok((code, format!("fp-solve: {status_line}; outputs in {}\n", dir.display())))
}

/// `particles`: run the Euler scheme, write positions and KDE fields, and
/// compare with a PDE density when one is supplied.
pub fn run_particles(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(i32, String)> {
    let grid = grid_from_config(cfg)?;
    let noise = noise_from_config(cfg, grid.dim())?;
    let kernel = kernel_from_config(cfg, &grid)?;
    let mu0 = initial_from_config(cfg, &grid)?;
    let seed = child_seed(master_seed(cfg, opts), "particles");
    let bandwidth = cfg.get_real("particles", "bandwidth").filter(|&b| b > 0.0);
    let pcfg = ParticleConfig {
        n_particles: cfg.require_int("particles", "n")? as usize,
        dt: cfg.require_real("particles", "dt")?,
        horizon: cfg
            .get_real("particles", "horizon")
            .or_else(|| cfg.get_real("solver", "horizon"))
            .ok_or_else(|| Error::Config("missing [particles] horizon".into()))?,
        kernel,
        noise,
        mu0,
        seed,
        bandwidth,
        snapshot_every: cfg.get_int("particles", "snapshot_every").unwrap_or(10) as usize,
    };
    let out = simulate(&pcfg)?;
    let dir = out_dir(cfg, opts)?;
    let d = grid.dim();
    for (i, snap) in out.snapshots.iter().enumerate() {
        let mut pos = String::from("id");
        for axis in 0..d {
            pos.push_str(&format!(",x{}", axis + 1));
        }
        pos.push('\n');
        for (pid, chunk) in snap.positions.chunks(d).enumerate() {
            pos.push_str(&pid.to_string());
            for v in chunk {
                pos.push_str(&format!(",{v:.16e}"));
            }
            pos.push('\n');
        }
        write(&dir.join(format!("positions_{i:04}.csv")), &pos)?;
        write(&dir.join(format!("kde_{i:04}.csv")), &scalar_to_csv(&snap.kde))?;
    }
    let mut msg = format!(
        "particles: {} snapshots, bandwidth {:.4}; outputs in {}\n",
        out.snapshots.len(),
        out.bandwidth,
        dir.display()
    );
    if let Some(pde_path) = cfg.get_text("particles", "compare") {
        let text = fs::read_to_string(&pde_path)
            .map_err(|e| Error::Io(format!("reading PDE density `{pde_path}`: {e}")))?;
        let pde = scalar_from_csv(&text)?;
        let (l1, sup) = compare_to_pde(&out.final_snapshot().kde, &pde)?;
        let report = format!("l1: {l1:.6e}\nsup: {sup:.6e}\n");
        write(&dir.join("comparison.txt"), &report)?;
        msg.push_str(&report);
    }
    Ok((EXIT_OK, msg))
}

/// `compare`: grid L1/sup distance between two field CSVs.
pub fn run_compare(cfg: &ExperimentConfig, _opts: &RunOptions) -> Result<(i32, String)> {
    let a_path = cfg.require_text("compare", "a")?;
    let b_path = cfg.require_text("compare", "b")?;
    let a = scalar_from_csv(
        &fs::read_to_string(&a_path).map_err(|e| Error::Io(format!("reading `{a_path}`: {e}")))?,
    )?;
    let b = scalar_from_csv(
        &fs::read_to_string(&b_path).map_err(|e| Error::Io(format!("reading `{b_path}`: {e}")))?,
    )?;
    let (l1, sup) = compare_to_pde(&a, &b)?;
    Ok((EXIT_OK, format!("l1: {l1:.6e}\nsup: {sup:.6e}\n")))
}

/// Dispatch a subcommand; returns the exit code and the text for stdout.
pub fn run(subcommand: &str, cfg: &ExperimentConfig, opts: &RunOptions) -> (i32, String) {
    let _ = match thread_cap() {
        Ok(n) => n,
        Err(e) => return (EXIT_ERROR, format!("error: {e}\n")),
    };
    let result = match subcommand {
        "check" => run_check(cfg, opts),
        "fp-solve" => run_fp_solve(cfg, opts),
        "particles" => run_particles(cfg, opts),
        "besov" => run_besov(cfg, opts),
        "kernels" => run_kernels(cfg, opts),
        "compare" => run_compare(cfg, opts),
        other => Err(Error::Config(format!(
            "unknown subcommand `{other}` (expected check|fp-solve|particles|besov|kernels|compare)"
        ))),
    };
    match result {
        Ok((code, msg)) => (code, msg),
        Err(Error::Numerical(s, m)) => (EXIT_NUMERICAL, format!("numerical failure at {s}: {m}\n")),
        Err(e) => (EXIT_ERROR, format!("error: {e}\n")),
    }
}
