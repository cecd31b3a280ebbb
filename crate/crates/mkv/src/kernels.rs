//! The singular interaction kernels of the concrete models — the Burgers
//! half-Dirac, the truncated 2-D Biot-Savart kernel and the truncated
//! Keller-Segel attraction — their divergence fields, Gaussian mollification,
//! and the Cole-Hopf reference solution used as an independent oracle for the
//! diffusive Burgers equation.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::spectral;

/// Which singular kernel to build.
#[derive(Debug, Clone)]
pub enum KernelKind {
    /// `b = (1/2) delta_0` in one dimension.
    BurgersDirac,
    /// `b(x) = K(x) 1*_{B(0,R)}(x)` with `K(x) = (-x2, x1) / (2 pi |x|^2)`.
    BiotSavart2D { cutoff: f64 },
    /// `b(x) = -chi x / (c_d |x|^d) 1*_{B(0,R)}(x)`, attractive.
    KellerSegel { chi: f64, cutoff: f64 },
    /// A caller-supplied gridded kernel.
    Custom(VectorField),
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Mollification scale; `0` selects the grid default `4h`.
    pub epsilon: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, epsilon: f64) -> Result<Self> {
        match &kind {
            KernelKind::BiotSavart2D { cutoff } => {
                if !(*cutoff > 0.0) {
                    return Err(Error::Parameter("cutoff radius must be positive".into()));
                }
            }
            KernelKind::KellerSegel { chi, cutoff } => {
                if !(*chi > 0.0) || !(*cutoff > 0.0) {
                    return Err(Error::Parameter("need chi > 0 and cutoff > 0".into()));
                }
            }
            _ => {}
        }
        if !(epsilon >= 0.0) {
            return Err(Error::Parameter("epsilon must be >= 0".into()));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            KernelKind::BurgersDirac => Some(1),
            KernelKind::BiotSavart2D { .. } => Some(2),
            KernelKind::KellerSegel { .. } => None, // any d >= 2
            KernelKind::Custom(f) => Some(f.grid.dim()),
        }
    }

    pub fn resolve_epsilon(&self, grid: &GridSpec) -> f64 {
        if self.epsilon > 0.0 {
            self.epsilon
        } else {
            4.0 * grid.spacing()
        }
    }
}

/// Mollified ball indicator: 1 on `|x| <= R`, cosine taper on `(R, R+1)`,
/// 0 beyond `R + 1`.
pub fn smooth_cutoff(radius: f64, r: f64) -> f64 {
    if r <= radius {
        1.0
    } else if r >= radius + 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * (r - radius)).cos())
    }
}

/// Normalizing constant of the Poisson-kernel gradient: `c_2 = 2 pi`,
/// `c_3 = 4 pi`.
pub fn poisson_constant(d: usize) -> Result<f64> {
    match d {
        2 => Ok(2.0 * PI),
        3 => Ok(4.0 * PI),
        _ => Err(Error::Parameter(format!("Poisson constant only provided for d = 2, 3, got {d}"))),
    }
}

/// Closed-form (unmollified) kernel value away from the singularity.
pub fn kernel_value(kind: &KernelKind, x: &[f64]) -> Result<Vec<f64>> {
    match kind {
        KernelKind::BurgersDirac => {
            Err(Error::Parameter("the Burgers Dirac kernel has no pointwise values".into()))
        }
        KernelKind::BiotSavart2D { cutoff } => {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let c = smooth_cutoff(*cutoff, r2.sqrt());
            Ok(vec![-x[1] / (2.0 * PI * r2) * c, x[0] / (2.0 * PI * r2) * c])
        }
        KernelKind::KellerSegel { chi, cutoff } => {
            let d = x.len();
            let cd = poisson_constant(d)?;
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let c = smooth_cutoff(*cutoff, r);
            Ok(x.iter().map(|v| -chi * v / (cd * r.powi(d as i32)) * c).collect())
        }
        KernelKind::Custom(_) => {
            Err(Error::Parameter("custom kernels are gridded, not closed-form".into()))
        }
    }
}

/// Fourier transform of the isotropic Gaussian mollifier of width `sigma`.
fn gaussian_multiplier(sigma: f64) -> impl Fn(&[f64]) -> f64 {
    move |xi: &[f64]| {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        (-0.5 * sigma * sigma * r2).exp()
    }
}

/// Gaussian mollification `b * g_eps` of every component, spectrally.
pub fn mollify_kernel(b: &VectorField, eps: f64) -> Result<VectorField> {
    if !(eps >= 2.0 * b.grid.spacing()) {
        return Err(Error::Resolution(
            format!("mollification scale {eps} below 2h = {}", 2.0 * b.grid.spacing()),
            b.grid.points_per_dim().next_power_of_two() * 2,
        ));
    }
    let mult = gaussian_multiplier(eps);
    let table = spectral::symbol_table(&b.grid, &mult);
    let mut comps = Vec::with_capacity(b.components.len());
    for c in 0..b.components.len() {
        let field = b.component_field(c);
        let mut spec = spectral::forward(&field);
        for (s, m) in spec.iter_mut().zip(&table) {
            *s *= *m;
        }
        comps.push(spectral::inverse(&b.grid, &spec).values);
    }
    VectorField::from_components(b.grid.clone(), comps)
}

/// Build the gridded, eps-regularized kernel together with its spectral
/// divergence field.
///
/// The point singularity is handled twice: the radial denominator is
/// regularized algebraically at scale `eps/3` before sampling, and the sampled
/// field is then convolved with a Gaussian of width `eps/2`.
pub fn build_kernel(spec: &KernelSpec, grid: &GridSpec) -> Result<(VectorField, ScalarField)> {
    if let Some(d) = spec.dim() {
        if d != grid.dim() {
            return Err(Error::Parameter(format!(
                "kernel dimension {d} does not match grid dimension {}",
                grid.dim()
            )));
        }
    }
    if grid.dim() < 2 {
        if let KernelKind::KellerSegel { .. } = spec.kind {
            return Err(Error::Parameter("Keller-Segel requires d >= 2".into()));
        }
    }
    let h = grid.spacing();
    let eps = spec.resolve_epsilon(grid);
    if eps < 2.0 * h {
        return Err(Error::Resolution(
            format!("mollification scale {eps} below 2h = {}", 2.0 * h),
            grid.points_per_dim().next_power_of_two() * 2,
        ));
    }

    let b = match &spec.kind {
        KernelKind::BurgersDirac => {
            // half a unit Dirac, synthesized in Fourier space: exact mass 1/2
            let mult = gaussian_multiplier(eps);
            let field = spectral::synthesize(grid, |xi| Complex64::new(0.5 * mult(xi), 0.0));
            VectorField { grid: grid.clone(), components: vec![field.values] }
        }
        KernelKind::BiotSavart2D { cutoff } => {
            check_cutoff_fits(grid, *cutoff)?;
            let e_in = eps / 3.0;
            let raw = VectorField::from_fn(grid.clone(), |x, axis| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let c = smooth_cutoff(*cutoff, r2.sqrt());
                let den = 2.0 * PI * (r2 + e_in * e_in);
                let k = [-x[1] / den, x[0] / den];
                k[axis] * c
            });
            mollify_half(&raw, eps)?
        }
        KernelKind::KellerSegel { chi, cutoff } => {
            check_cutoff_fits(grid, *cutoff)?;
            let d = grid.dim();
            let cd = poisson_constant(d)?;
            let e_in = eps / 3.0;
            let chi = *chi;
            let raw = VectorField::from_fn(grid.clone(), |x, axis| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let c = smooth_cutoff(*cutoff, r2.sqrt());
                let reg = (r2 + e_in * e_in).sqrt();
                -chi * x[axis] / (cd * reg.powi(d as i32)) * c
            });
            mollify_half(&raw, eps)?
        }
        KernelKind::Custom(field) => {
            if field.grid != *grid {
                return Err(Error::GridMismatch);
            }
            mollify_half(field, eps)?
        }
    };
    let div = spectral::divergence(&b);
    Ok((b, div))
}

/// Gaussian smoothing at width `eps/2`, the second half of the double
/// regularization.
fn mollify_half(b: &VectorField, eps: f64) -> Result<VectorField> {
    let mult = gaussian_multiplier(eps / 2.0);
    let table = spectral::symbol_table(&b.grid, &mult);
    let mut comps = Vec::with_capacity(b.components.len());
    for c in 0..b.components.len() {
        let mut spec = spectral::forward(&b.component_field(c));
        for (s, m) in spec.iter_mut().zip(&table) {
            *s *= *m;
        }
        comps.push(spectral::inverse(&b.grid, &spec).values);
    }
    VectorField::from_components(b.grid.clone(), comps)
}

fn check_cutoff_fits(grid: &GridSpec, cutoff: f64) -> Result<()> {
    if cutoff + 1.0 >= grid.half_width() {
        return Err(Error::Parameter(format!(
            "cutoff support radius {} does not fit inside the box of half width {}",
            cutoff + 1.0,
            grid.half_width()
        )));
    }
    Ok(())
}

/// Exact solution of the diffusive Burgers equation
/// `d_s u + (1/2) d_x u^2 - (1/2) d_xx u = 0` via the Cole-Hopf transform
/// `u = -d_x log(G_s * exp(-int u0))`.
///
/// Deliberately avoids the spectral pipeline: plain real-space quadrature on
/// an extended line, so it can serve as an independent oracle.
pub fn cole_hopf_reference(u0: &ScalarField, s: f64, grid: &GridSpec) -> Result<ScalarField> {
    if u0.grid.dim() != 1 || grid.dim() != 1 {
        return Err(Error::Parameter("the Cole-Hopf oracle is one-dimensional".into()));
    }
    if u0.grid != *grid {
        return Err(Error::GridMismatch);
    }
    if !(s > 0.0) {
        return Err(Error::Parameter("time must be positive".into()));
    }
    let mass = u0.integral();
    if (mass - 1.0).abs() > 1e-6 || u0.min_value() < -1e-12 {
        return Err(Error::Parameter(format!(
            "initial datum must be a probability density (mass {mass})"
        )));
    }
    let n = grid.points_per_dim();
    let h = grid.spacing();
    let l = grid.half_width();

    // cumulative distribution of u0 by the trapezoid rule
    let mut cdf = vec![0.0f64; n];
    for j in 1..n {
        cdf[j] = cdf[j - 1] + 0.5 * h * (u0.values[j - 1] + u0.values[j]);
    }
    let total = cdf[n - 1] + 0.5 * h * (u0.values[n - 1] + u0.values[0]);

    // extended source line so the heat quadrature sees the constant tails
    let sigma = s.sqrt(); // nu = 1/2: G_s has variance s
    let pad = (8.0 * sigma / h).ceil() as usize + 2;
    let ext = n + 2 * pad;
    let phi0: Vec<f64> = (0..ext)
        .map(|i| {
            let val = if i < pad {
                0.0
            } else if i >= pad + n {
                total
            } else {
                cdf[i - pad]
            };
            (-val).exp()
        })
        .collect();

    let gauss = |z: f64| (-z * z / (2.0 * s)).exp() / (2.0 * PI * s).sqrt();
    let dgauss = |z: f64| -z / s * gauss(z);

    let mut out = vec![0.0f64; n];
    let reach = pad as isize;
    for j in 0..n {
        let mut phi = 0.0;
        let mut dphi = 0.0;
        let xj = -l + h * j as f64;
        // source index i maps to position -L + h (i - pad)
        let lo = (j as isize - reach).max(-(pad as isize));
        let hi = (j as isize + reach).min((n + pad) as isize - 1);
        for i in lo..=hi {
            let yi = -l + h * i as f64;
            let w = phi0[(i + pad as isize) as usize];
            phi += gauss(xj - yi) * w;
            dphi += dgauss(xj - yi) * w;
        }
        out[j] = -dphi / phi;
    }
    ScalarField::from_values(grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::{thermic_norm, BesovIndex, ThermicQuad};

    #[test]
    fn cutoff_profile() {
        assert_eq!(smooth_cutoff(2.0, 1.0), 1.0);
        assert_eq!(smooth_cutoff(2.0, 3.0), 0.0);
        assert!((smooth_cutoff(2.0, 2.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn biot_savart_closed_form() {
        let k = KernelKind::BiotSavart2D { cutoff: 3.0 };
        let v = kernel_value(&k, &[1.0, 0.0]).unwrap();
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn keller_segel_closed_form() {
        let k = KernelKind::KellerSegel { chi: 1.0, cutoff: 3.0 };
        let v = kernel_value(&k, &[1.0, 0.0]).unwrap();
        assert!((v[0] + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(v[1].abs() < 1e-15);
    }

    #[test]
    fn burgers_kernel_mass_is_half() {
        let grid = GridSpec::new(1, 8.0, 512).unwrap();
        let spec = KernelSpec::new(KernelKind::BurgersDirac, 0.0).unwrap();
        let (b, _) = build_kernel(&spec, &grid).unwrap();
        let mass = b.component_field(0).integral();
        assert!((mass - 0.5).abs() < 1e-6, "mass {mass}");
    }

    #[test]
    fn biot_savart_divergence_vanishes_inside() {
        let grid = GridSpec::new(2, 8.0, 512).unwrap();
        let spec = KernelSpec::new(KernelKind::BiotSavart2D { cutoff: 3.0 }, 0.0).unwrap();
        let (b, div) = build_kernel(&spec, &grid).unwrap();
        let mut x = [0.0f64; 3];
        let mut worst = 0.0f64;
        for (flat, v) in div.values.iter().enumerate() {
            grid.position(flat, &mut x);
            if (x[0] * x[0] + x[1] * x[1]).sqrt() < 3.0 {
                worst = worst.max(v.abs());
            }
        }
        assert!(worst < 1e-3, "sup divergence inside the ball: {worst}");
        // antisymmetry on the symmetric grid
        let n = grid.points_per_dim();
        let at = |i: usize, j: usize, c: usize| b.components[c][i * n + j];
        for (i, j) in [(100, 37), (200, 417), (31, 77)] {
            let (mi, mj) = ((n - i) % n, (n - j) % n);
            for c in 0..2 {
                assert!((at(i, j, c) + at(mi, mj, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn keller_segel_divergence_concentrates_at_origin() {
        let grid = GridSpec::new(2, 8.0, 512).unwrap();
        let chi = 1.3;
        for &eps_mult in &[8.0, 4.0] {
            let eps = eps_mult * grid.spacing();
            let spec =
                KernelSpec::new(KernelKind::KellerSegel { chi, cutoff: 3.0 }, eps).unwrap();
            let (_, div) = build_kernel(&spec, &grid).unwrap();
            let mut x = [0.0f64; 3];
            let mut charge = 0.0;
            for (flat, v) in div.values.iter().enumerate() {
                grid.position(flat, &mut x);
                if (x[0] * x[0] + x[1] * x[1]).sqrt() < 2.0 * eps {
                    charge += v;
                }
            }
            charge *= grid.cell_volume();
            // the attractive kernel makes the origin a sink: the concentrated
            // divergence charge is -chi
            assert!(charge < 0.0, "origin must be a sink, got {charge}");
            assert!(
                (charge.abs() - chi).abs() < 0.05 * chi,
                "eps = {eps}: |charge| {} vs chi {chi}",
                charge.abs()
            );
        }
    }

    #[test]
    fn mollification_l2_and_besov_families() {
        let grid = GridSpec::new(1, 8.0, 1024).unwrap();
        let h = grid.spacing();

        // smooth kernel: mollification converges in L2 monotonically
        let smooth = VectorField::from_fn(grid.clone(), |x, _| (-x[0] * x[0]).exp());
        let mut dists = Vec::new();
        for &e in &[16.0 * h, 8.0 * h, 4.0 * h, 2.0 * h] {
            let m = mollify_kernel(&smooth, e).unwrap();
            dists.push(m.l2_distance(&smooth).unwrap());
        }
        assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");

        // Burgers Dirac family: B^0_{1,inf} norms bounded within 2x across halvings
        let q = ThermicQuad::default();
        let idx = BesovIndex::new(0.0, 1.0, f64::INFINITY).unwrap();
        let mut norms = Vec::new();
        for &e in &[16.0 * h, 8.0 * h, 4.0 * h] {
            let spec = KernelSpec::new(KernelKind::BurgersDirac, e).unwrap();
            let (b, _) = build_kernel(&spec, &grid).unwrap();
            norms.push(thermic_norm(&b.component_field(0), idx, &q).unwrap().value);
        }
        let spread = norms.iter().cloned().fold(0.0f64, f64::max)
            / norms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 2.0, "norms {norms:?}");
    }

    #[test]
    fn keller_segel_mollification_converges_below_beta() {
        // |b - b^eps| in B^{beta~}_{p,inf} with beta~ = -1.2 < beta = -1
        // decreases across eps halvings
        let grid = GridSpec::new(2, 8.0, 256).unwrap();
        let h = grid.spacing();
        let q = ThermicQuad::default();
        let idx = BesovIndex::new(-1.2, 2.0, f64::INFINITY).unwrap();
        let reference = {
            let spec = KernelSpec::new(KernelKind::KellerSegel { chi: 1.0, cutoff: 3.0 }, 2.0 * h)
                .unwrap();
            build_kernel(&spec, &grid).unwrap().0
        };
        let mut dists = Vec::new();
        for &e in &[16.0 * h, 8.0 * h, 4.0 * h] {
            let spec =
                KernelSpec::new(KernelKind::KellerSegel { chi: 1.0, cutoff: 3.0 }, e).unwrap();
            let (b, _) = build_kernel(&spec, &grid).unwrap();
            let mut norm = 0.0;
            for c in 0..2 {
                let diff = b.component_field(c).sub(&reference.component_field(c)).unwrap();
                norm += thermic_norm(&diff, idx, &q).unwrap().value;
            }
            dists.push(norm);
        }
        assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");
    }

    #[test]
    fn cole_hopf_oracle_behaviour() {
        let grid = GridSpec::new(1, 8.0, 512).unwrap();
        let mut u0 = ScalarField::from_fn(grid.clone(), |x| {
            (-x[0] * x[0] / 2.0).exp() / (2.0 * PI).sqrt()
        });
        u0.normalize_mass().unwrap();

        // continuity at s -> 0+
        let early = cole_hopf_reference(&u0, 0.005, &grid).unwrap();
        assert!(early.sup_distance(&u0).unwrap() < 5e-3);

        // conservation
        for &s in &[0.1, 0.5] {
            let u = cole_hopf_reference(&u0, s, &grid).unwrap();
            assert!((u.integral() - 1.0).abs() < 1e-6, "s = {s}");
        }

        // the positive drift skews the bulk rightward
        let u = cole_hopf_reference(&u0, 0.5, &grid).unwrap();
        let mut x = [0.0f64; 3];
        let mean: f64 = u
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| {
                grid.position(j, &mut x);
                x[0] * v
            })
            .sum::<f64>()
            * grid.cell_volume();
        assert!(mean > 0.01, "mean {mean}");

        // non-normalized input rejected
        let bad = u0.scaled(2.0);
        assert!(cole_hopf_reference(&bad, 0.1, &grid).is_err());
    }
}
