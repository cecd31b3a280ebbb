//! The symmetric non-degenerate alpha-stable driving noise: Fourier symbols,
//! transition densities and their gradients on the grid, and increment
//! sampling.
//!
//! The symbol convention is `psi(xi) = c * integral |zeta . xi|^alpha w(d zeta)`
//! with `c` the diffusivity prefactor (default 1/2, so that `alpha = 2`
//! reproduces the standard Brownian setting).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::spectral;

/// Truncation tolerance backing the Nyquist adequacy check.
const TRUNCATION_TOL: f64 = 1e-12;

/// Spherical part of the Levy measure.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralMeasure {
    /// Uniform measure: `psi(xi) = c |xi|^alpha`.
    Isotropic,
    /// Independent stable components: atoms at `+-e_i` with weight 1/2 each.
    Cylindrical,
    /// Finite symmetric list of (unit direction, weight) pairs.
    Atoms(Vec<(Vec<f64>, f64)>),
}

#[derive(Debug, Clone)]
pub struct StableParams {
    alpha: f64,
    measure: SpectralMeasure,
    diffusivity: f64,
    dim: usize,
    /// Bounds of `psi(lambda)/(c |lambda|^alpha)` over unit directions.
    ratio_bounds: (f64, f64),
}

impl StableParams {
    pub fn isotropic(dim: usize, alpha: f64, diffusivity: f64) -> Result<Self> {
        Self::new(dim, alpha, SpectralMeasure::Isotropic, diffusivity)
    }

    pub fn new(dim: usize, alpha: f64, measure: SpectralMeasure, diffusivity: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Parameter(format!("alpha must lie in (1, 2], got {alpha}")));
        }
        if !(diffusivity.is_finite() && diffusivity > 0.0) {
            return Err(Error::Parameter(format!("diffusivity must be positive, got {diffusivity}")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        let measure = match measure {
            SpectralMeasure::Atoms(atoms) => {
                Self::validate_atoms(dim, &atoms)?;
                SpectralMeasure::Atoms(atoms)
            }
            m => m,
        };
        let mut params = Self { alpha, measure, diffusivity, dim, ratio_bounds: (1.0, 1.0) };
        params.ratio_bounds = params.scan_ratio_bounds()?;
        Ok(params)
    }

    fn validate_atoms(dim: usize, atoms: &[(Vec<f64>, f64)]) -> Result<()> {
        if atoms.is_empty() {
            return Err(Error::Parameter("atom list is empty".into()));
        }
        for (zeta, w) in atoms {
            if zeta.len() != dim {
                return Err(Error::Parameter("atom direction has wrong dimension".into()));
            }
            let norm: f64 = zeta.iter().map(|z| z * z).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Parameter(format!("atom direction is not unit length ({norm})")));
            }
            if !(*w > 0.0) {
                return Err(Error::Parameter("atom weight must be positive".into()));
            }
        }
        // symmetry: every (zeta, w) must have a (-zeta, w) partner
        for (zeta, w) in atoms {
            let found = atoms.iter().any(|(z2, w2)| {
                (w2 - w).abs() <= 1e-12 * w.max(*w2)
                    && zeta.iter().zip(z2).all(|(a, b)| (a + b).abs() < 1e-9)
            });
            if !found {
                return Err(Error::Parameter(
                    "atoms are not symmetric: missing mirrored atom of equal weight".into(),
                ));
            }
        }
        Ok(())
    }

    /// Sample unit directions and bound `psi/(c|.|^alpha)` from below and above;
    /// rejects degenerate measures (discrete form of the non-degeneracy
    /// assumption on the spherical part).
    fn scan_ratio_bounds(&self) -> Result<(f64, f64)> {
        let dirs = unit_directions(self.dim);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for dir in &dirs {
            let r = self.symbol(dir) / self.diffusivity;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !(lo > 1e-9) {
            return Err(Error::Parameter(
                "degenerate spectral measure: min over unit directions of the symbol vanishes".into(),
            ));
        }
        Ok((lo, hi))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ellipticity constant: smallest `kappa >= 1` with
    /// `kappa^-1 |l|^a <= psi(l)/c <= kappa |l|^a`.
    pub fn kappa(&self) -> f64 {
        let (lo, hi) = self.ratio_bounds;
        (1.0 / lo).max(hi).max(1.0)
    }

    /// The Fourier symbol `psi(xi) >= 0`.
    pub fn symbol(&self, xi: &[f64]) -> f64 {
        let c = self.diffusivity;
        match &self.measure {
            SpectralMeasure::Isotropic => {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                c * r2.powf(self.alpha / 2.0)
            }
            SpectralMeasure::Cylindrical => {
                c * xi.iter().map(|x| x.abs().powf(self.alpha)).sum::<f64>()
            }
            SpectralMeasure::Atoms(atoms) => {
                c * atoms
                    .iter()
                    .map(|(zeta, w)| {
                        let dot: f64 = zeta.iter().zip(xi).map(|(a, b)| a * b).sum();
                        w * dot.abs().powf(self.alpha)
                    })
                    .sum::<f64>()
            }
        }
    }

    /// Symbol tabulated over all grid modes.
    pub fn symbol_table(&self, grid: &GridSpec) -> Vec<f64> {
        spectral::symbol_table(grid, |xi| self.symbol(xi))
    }

    /// Smallest power-of-two N making `exp(-t psi)` decay below the truncation
    /// tolerance at the Nyquist frequency.
    fn minimal_n(&self, t: f64, grid: &GridSpec) -> usize {
        let (lo, _) = self.ratio_bounds;
        let needed = (1.0 / TRUNCATION_TOL).ln() / (t * self.diffusivity * lo);
        let xi_req = needed.powf(1.0 / self.alpha);
        let n_req = (xi_req * 2.0 * grid.half_width() / PI).ceil() as usize;
        n_req.next_power_of_two().max(16)
    }

    fn check_resolved(&self, t: f64, grid: &GridSpec) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch);
        }
        if !(t > 0.0) {
            return Err(Error::Parameter(format!("time must be positive, got {t}")));
        }
        let (lo, _) = self.ratio_bounds;
        let decay = (-t * self.diffusivity * lo * grid.nyquist().powf(self.alpha)).exp();
        if decay > TRUNCATION_TOL {
            return Err(Error::Resolution(
                format!("exp(-t psi(xi_max)) = {decay:.3e} at t = {t}"),
                self.minimal_n(t, grid),
            ));
        }
        Ok(())
    }

    /// Transition density `p_t` on the grid via the inverse transform of
    /// `exp(-t psi)`.
    pub fn density(&self, t: f64, grid: &GridSpec) -> Result<ScalarField> {
        self.check_resolved(t, grid)?;
        Ok(spectral::synthesize(grid, |xi| {
            Complex64::new((-t * self.symbol(xi)).exp(), 0.0)
        }))
    }

    /// Gradient of the transition density via the `i xi` multiplier.
    pub fn density_gradient(&self, t: f64, grid: &GridSpec) -> Result<VectorField> {
        self.check_resolved(t, grid)?;
        let p = self.density(t, grid)?;
        Ok(spectral::gradient(&p))
    }

    /// `n` i.i.d. increments of the process over a step `dt`, flattened
    /// row-major as `n x d`. Deterministic given the seed.
    pub fn sample_increments(&self, dt: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Parameter("need at least one increment".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut out = vec![0.0f64; n * self.dim];
        self.fill_increments(dt, &mut rng, &mut out);
        Ok(out)
    }

    /// Fill a preallocated `n x d` buffer from a caller-owned stream.
    pub fn fill_increments(&self, dt: f64, rng: &mut ChaCha12Rng, out: &mut [f64]) {
        let d = self.dim;
        let n = out.len() / d;
        let c = self.diffusivity;
        match &self.measure {
            SpectralMeasure::Isotropic => {
                let scale = (c * dt).powf(1.0 / self.alpha);
                for i in 0..n {
                    let amp = if self.alpha >= 2.0 - 1e-12 {
                        // Brownian limit: the subordinator degenerates to 1
                        (2.0f64).sqrt()
                    } else {
                        (2.0 * sample_positive_stable(self.alpha / 2.0, rng)).sqrt()
                    };
                    for a in 0..d {
                        out[i * d + a] = scale * amp * sample_std_normal(rng);
                    }
                }
            }
            SpectralMeasure::Cylindrical => {
                // one symmetric draw per +-e_a pair, total pair weight 1
                for i in 0..n {
                    for a in 0..d {
                        out[i * d + a] = (c * dt).powf(1.0 / self.alpha)
                            * sample_symmetric_stable(self.alpha, rng);
                    }
                }
            }
            SpectralMeasure::Atoms(atoms) => {
                for i in 0..n {
                    for a in 0..d {
                        out[i * d + a] = 0.0;
                    }
                    for (zeta, w) in atoms {
                        let s = (c * w * dt).powf(1.0 / self.alpha)
                            * sample_symmetric_stable(self.alpha, rng);
                        for a in 0..d {
                            out[i * d + a] += s * zeta[a];
                        }
                    }
                }
            }
        }
    }
}

fn unit_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..720)
            .map(|k| {
                let th = PI * k as f64 / 360.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci sphere
            let m = 2048;
            let golden = PI * (3.0 - 5.0f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
    }
}

fn clamp_open01(u: f64) -> f64 {
    u.clamp(1e-12, 1.0 - 1e-12)
}

fn sample_std_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1 = clamp_open01(rng.gen::<f64>());
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Kanter's representation of a positive `s`-stable amplitude, `s` in (0, 1),
/// normalized so `E exp(-u A) = exp(-u^s)`.
fn sample_positive_stable(s: f64, rng: &mut impl Rng) -> f64 {
    let u = clamp_open01(rng.gen::<f64>()) * PI;
    let w = -clamp_open01(rng.gen::<f64>()).ln();
    let s1 = (s * u).sin() / u.sin().powf(1.0 / s);
    let s2 = (((1.0 - s) * u).sin() / w).powf((1.0 - s) / s);
    s1 * s2
}

/// Chambers-Mallows-Stuck draw of a standard symmetric alpha-stable variable
/// with characteristic function `exp(-|xi|^alpha)`.
fn sample_symmetric_stable(alpha: f64, rng: &mut impl Rng) -> f64 {
    if alpha >= 2.0 - 1e-12 {
        return (2.0f64).sqrt() * sample_std_normal(rng);
    }
    let v = PI * (clamp_open01(rng.gen::<f64>()) - 0.5);
    let w = -clamp_open01(rng.gen::<f64>()).ln();
    let num = (alpha * v).sin();
    let den = v.cos().powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    num / den * tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis_atoms_2d() -> SpectralMeasure {
        SpectralMeasure::Atoms(vec![
            (vec![1.0, 0.0], 0.5),
            (vec![-1.0, 0.0], 0.5),
            (vec![0.0, 1.0], 0.5),
            (vec![0.0, -1.0], 0.5),
        ])
    }

    #[test]
    fn symbol_values() {
        let p = StableParams::isotropic(2, 2.0, 0.5).unwrap();
        assert!((p.symbol(&[1.0, 0.0]) - 0.5).abs() < 1e-15);
        assert_eq!(p.symbol(&[0.0, 0.0]), 0.0);
        assert_eq!(p.symbol(&[1.0, -2.0]), p.symbol(&[-1.0, 2.0]));

        let c = 0.37;
        let atoms = StableParams::new(2, 1.5, axis_atoms_2d(), c).unwrap();
        // axis atoms of weight 1/2: psi(e1) = c (1/2 + 1/2) = c
        assert!((atoms.symbol(&[1.0, 0.0]) - c).abs() < 1e-15);
        assert!(atoms.kappa() >= 1.0);
    }

    #[test]
    fn degenerate_atoms_rejected() {
        let only_e1 = SpectralMeasure::Atoms(vec![(vec![1.0, 0.0], 0.5), (vec![-1.0, 0.0], 0.5)]);
        assert!(StableParams::new(2, 1.5, only_e1, 0.5).is_err());
        let asym = SpectralMeasure::Atoms(vec![(vec![1.0, 0.0], 0.5), (vec![0.0, 1.0], 0.5)]);
        assert!(StableParams::new(2, 1.5, asym, 0.5).is_err());
    }

    #[test]
    fn gaussian_density_matches_closed_form() {
        let grid = GridSpec::new(1, 8.0, 256).unwrap();
        let p = StableParams::isotropic(1, 2.0, 0.5).unwrap();
        let rho = p.density(1.0, &grid).unwrap();
        let exact = ScalarField::from_fn(grid, |x| (-x[0] * x[0] / 2.0).exp() / (2.0 * PI).sqrt());
        assert!(rho.sup_distance(&exact).unwrap() < 1e-8);
    }

    #[test]
    fn stable_self_similarity() {
        // p_t(x) = t^{-1/a} p_1(t^{-1/a} x): compare the grid density at time t
        // with the rescaled-grid density at time 1
        let n = 256;
        let alpha = 1.5;
        let p = StableParams::isotropic(1, alpha, 0.5).unwrap();
        for &t in &[0.5f64, 2.0] {
            let lam = t.powf(-1.0 / alpha);
            let grid_t = GridSpec::new(1, 8.0, n).unwrap();
            let grid_1 = GridSpec::new(1, 8.0 * lam, n).unwrap();
            let pt = p.density(t, &grid_t).unwrap();
            let p1 = p.density(1.0, &grid_1).unwrap();
            let mut worst = 0.0f64;
            for j in 0..n {
                worst = worst.max((pt.values[j] - lam * p1.values[j]).abs());
            }
            assert!(worst < 1e-6, "t={t}: {worst}");
        }
    }

    #[test]
    fn density_mass_and_positivity() {
        let grid = GridSpec::new(2, 8.0, 128).unwrap();
        let p = StableParams::new(2, 1.5, axis_atoms_2d(), 0.5).unwrap();
        let rho = p.density(0.7, &grid).unwrap();
        assert!((rho.integral() - 1.0).abs() < 1e-6);
        assert!(rho.min_value() > -1e-6);
    }

    #[test]
    fn under_resolved_grid_is_reported() {
        let grid = GridSpec::new(1, 8.0, 16).unwrap();
        let p = StableParams::isotropic(1, 1.5, 0.5).unwrap();
        match p.density(0.001, &grid) {
            Err(Error::Resolution(_, n_min)) => assert!(n_min > 16),
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn semigroup_property() {
        let grid = GridSpec::new(1, 8.0, 256).unwrap();
        let p = StableParams::isotropic(1, 1.5, 0.5).unwrap();
        let p1 = p.density(0.4, &grid).unwrap();
        let p2 = p.density(0.8, &grid).unwrap();
        let conv = spectral::convolve(&p1, &p1);
        assert!(conv.sup_distance(&p2).unwrap() < 1e-6);
    }

    #[test]
    fn gradient_matches_gaussian_and_integrates_to_zero() {
        let grid = GridSpec::new(1, 8.0, 256).unwrap();
        let p = StableParams::isotropic(1, 2.0, 0.5).unwrap();
        let g = p.density_gradient(1.0, &grid).unwrap();
        let exact = ScalarField::from_fn(grid.clone(), |x| {
            -x[0] * (-x[0] * x[0] / 2.0).exp() / (2.0 * PI).sqrt()
        });
        let got = g.component_field(0);
        assert!(got.sup_distance(&exact).unwrap() < 1e-7);
        assert!(got.integral().abs() < 1e-8);
        // odd symmetry on the symmetric grid: x_j and -x_j are both nodes for j>0
        let n = grid.points_per_dim();
        for j in 1..n {
            let mirrored = got.values[n - j];
            assert!((got.values[j] + mirrored).abs() < 1e-12);
        }
    }

    #[test]
    fn increments_deterministic_and_gaussian_variance() {
        let p = StableParams::isotropic(2, 2.0, 0.5).unwrap();
        let a = p.sample_increments(0.1, 1000, 7).unwrap();
        let b = p.sample_increments(0.1, 1000, 7).unwrap();
        assert_eq!(a, b);

        let n = 100_000;
        let dt = 0.1;
        let cdt2 = 2.0 * 0.5 * dt; // target per-component variance
        let xs = p.sample_increments(dt, n, 11).unwrap();
        for axis in 0..2 {
            let var: f64 = xs.chunks(2).map(|z| z[axis] * z[axis]).sum::<f64>() / n as f64;
            let se = cdt2 * (2.0 / n as f64).sqrt();
            assert!(
                (var - cdt2).abs() < 3.0 * se,
                "axis {axis}: var {var} vs {cdt2} (se {se})"
            );
        }
    }

    #[test]
    fn increments_match_symbol_via_empirical_cf() {
        let n = 100_000;
        let dt = 0.3;
        for measure in [SpectralMeasure::Isotropic, axis_atoms_2d()] {
            let p = StableParams::new(2, 1.5, measure, 0.5).unwrap();
            let xs = p.sample_increments(dt, n, 5).unwrap();
            let xi = [1.0, 0.0];
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for z in xs.chunks(2) {
                let c = (xi[0] * z[0] + xi[1] * z[1]).cos();
                mean += c;
                m2 += c * c;
            }
            mean /= n as f64;
            m2 /= n as f64;
            let target = (-dt * p.symbol(&xi)).exp();
            let se = ((m2 - mean * mean) / n as f64).sqrt();
            assert!(
                (mean - target).abs() < 3.0 * se.max(1e-4),
                "cf {mean} vs {target} (se {se})"
            );
        }
    }
}
