//! Numerical Besov norms through the thermic characterization
//! `|f| = |F^-1(phi F f)|_{L^ell} + T(f)`, where `T` integrates weighted
//! `L^ell` norms of heat-semigroup derivatives `d^n_v p_v * f` over
//! `v in (v_min, 1]`, plus checkers for the convolution, duality and lift
//! inequalities and the heat-kernel norm scaling.
//!
//! The reference semigroup is the isotropic stable one with unit prefactor and
//! configurable index (default 2); all inequality checks are bounded-ratio
//! diagnostics, never exact constants.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{lebesgue_norm, GridSpec, ScalarField};
use crate::spectral;
use crate::stable::StableParams;

/// `(gamma, ell, m)` triple indexing `B^gamma_{ell,m}`; use `f64::INFINITY`
/// for the sup cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovIndex {
    pub gamma: f64,
    pub ell: f64,
    pub m: f64,
}

impl BesovIndex {
    pub fn new(gamma: f64, ell: f64, m: f64) -> Result<Self> {
        if !(ell >= 1.0) || !(m >= 1.0) {
            return Err(Error::Parameter(format!(
                "integrability indices must be >= 1 (or inf), got ell={ell}, m={m}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::Parameter("gamma must be finite".into()));
        }
        Ok(Self { gamma, ell, m })
    }
}

/// Conjugate exponent with the `1/inf = 0` convention.
pub fn conjugate(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if (p - 1.0).abs() < 1e-12 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Quadrature settings for the `v`-integral of the thermic norm.
#[derive(Debug, Clone, Copy)]
pub struct ThermicQuad {
    /// Log-spaced nodes on `(v_min, 1]`; at least 8.
    pub nodes: usize,
    /// Lower cutoff; defaults to `(h/L)^2`, the squared relative grid scale.
    pub v_min: Option<f64>,
    /// Reference semigroup index `alpha~` in (1, 2].
    pub ref_alpha: f64,
}

impl Default for ThermicQuad {
    fn default() -> Self {
        Self { nodes: 64, v_min: None, ref_alpha: 2.0 }
    }
}

/// A measured norm plus quadrature diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct NormResult {
    pub value: f64,
    pub low_freq: f64,
    pub thermic: f64,
    /// Contribution share of the smallest-`v` node; large values flag a
    /// non-converged quadrature.
    pub tail_fraction: f64,
    pub tail_converged: bool,
}

fn low_freq_bump(grid: &GridSpec) -> Vec<f64> {
    let xi0 = grid.nyquist() / 2.0;
    spectral::symbol_table(grid, |xi| {
        let r2: f64 = xi.iter().map(|x| x * x).sum::<f64>() / (xi0 * xi0);
        if r2 < 1.0 {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    })
}

fn smallest_int_above(x: f64) -> u32 {
    let mut n = x.floor() as i64 + 1;
    if n < 0 {
        n = 0;
    }
    n as u32
}

struct ThermicCtx {
    psi: Vec<f64>,
    phi: Vec<f64>,
    v_nodes: Vec<f64>,
    du: f64,
    cell: f64,
    vol_factor: f64,
}

fn thermic_ctx(grid: &GridSpec, quad: &ThermicQuad) -> Result<ThermicCtx> {
    if quad.nodes < 8 {
        return Err(Error::Parameter("thermic quadrature needs at least 8 nodes".into()));
    }
    if !(quad.ref_alpha > 1.0 && quad.ref_alpha <= 2.0) {
        return Err(Error::Parameter("reference alpha must lie in (1, 2]".into()));
    }
    let v_min = quad.v_min.unwrap_or_else(|| {
        let rel = grid.spacing() / grid.half_width();
        rel * rel
    });
    if !(v_min > 0.0 && v_min < 1.0) {
        return Err(Error::Parameter(format!("v_min must lie in (0, 1), got {v_min}")));
    }
    let a = quad.ref_alpha;
    let psi = spectral::symbol_table(grid, |xi| {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        r2.powf(a / 2.0)
    });
    let phi = low_freq_bump(grid);
    let lo = v_min.ln();
    let k = quad.nodes;
    let du = -lo / k as f64;
    let v_nodes: Vec<f64> = (1..=k).map(|i| (lo + du * i as f64).exp()).collect();
    Ok(ThermicCtx {
        psi,
        phi,
        v_nodes,
        du,
        cell: grid.cell_volume(),
        vol_factor: (2.0 * grid.half_width()).powi(grid.dim() as i32),
    })
}

fn spectral_lebesgue_norm(
    grid: &GridSpec,
    spec: &[Complex64],
    mult: impl Fn(usize) -> f64,
    ell: f64,
    ctx: &ThermicCtx,
) -> f64 {
    if (ell - 2.0).abs() < 1e-12 {
        // Parseval: no inverse transform needed
        let sum: f64 = spec
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let m = mult(i);
                m * m * z.norm_sqr()
            })
            .sum();
        (sum / ctx.vol_factor).sqrt()
    } else {
        let modulated: Vec<Complex64> =
            spec.iter().enumerate().map(|(i, z)| z * mult(i)).collect();
        let g = spectral::inverse(grid, &modulated);
        lebesgue_norm(&g.values, ctx.cell, ell)
    }
}

/// The thermic Besov norm of a field.
pub fn thermic_norm(f: &ScalarField, idx: BesovIndex, quad: &ThermicQuad) -> Result<NormResult> {
    let grid = &f.grid;
    let ctx = thermic_ctx(grid, quad)?;
    let spec = spectral::forward(f);

    let low_freq = spectral_lebesgue_norm(grid, &spec, |i| ctx.phi[i], idx.ell, &ctx);

    let n = smallest_int_above(idx.gamma / quad.ref_alpha);
    let weight_exp = n as f64 - idx.gamma / quad.ref_alpha;

    let mut terms = Vec::with_capacity(ctx.v_nodes.len());
    for &v in &ctx.v_nodes {
        let norm = spectral_lebesgue_norm(
            grid,
            &spec,
            |i| {
                let p = ctx.psi[i];
                let deriv = if n == 0 { 1.0 } else { (-p).powi(n as i32) };
                deriv * (-v * p).exp()
            },
            idx.ell,
            &ctx,
        );
        terms.push(v.powf(weight_exp) * norm);
    }

    let (thermic, tail_fraction) = if idx.m.is_infinite() {
        let max = terms.iter().copied().fold(0.0f64, f64::max);
        let tail = if max > 0.0 { terms[0] / max } else { 0.0 };
        (max, tail)
    } else {
        // trapezoid in u = ln v over the nodes
        let m = idx.m;
        let k = terms.len();
        let mut total = 0.0;
        let mut first = 0.0;
        for (i, t) in terms.iter().enumerate() {
            let w = if i == 0 || i + 1 == k { 0.5 * ctx.du } else { ctx.du };
            let contrib = w * t.powf(m);
            total += contrib;
            if i == 0 {
                first = contrib;
            }
        }
        let tail = if total > 0.0 { first / total } else { 0.0 };
        (total.powf(1.0 / m), tail)
    };

    Ok(NormResult {
        value: low_freq + thermic,
        low_freq,
        thermic,
        tail_fraction,
        tail_converged: tail_fraction < 1e-3,
    })
}

/// Weighted trajectory norm `sup_s (s - t)^theta |f(s)|_B`.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNormSpec {
    pub theta: f64,
    pub t_origin: f64,
    pub space: BesovIndex,
}

pub fn weighted_sup_norm(
    stamps: &[f64],
    fields: &[ScalarField],
    spec: &WeightedNormSpec,
    quad: &ThermicQuad,
) -> Result<f64> {
    if stamps.is_empty() || stamps.len() != fields.len() {
        return Err(Error::Parameter("trajectory is empty or ragged".into()));
    }
    if stamps.iter().any(|s| *s <= spec.t_origin) {
        return Err(Error::Parameter("all stamps must lie strictly after t_origin".into()));
    }
    let mut best = 0.0f64;
    for (s, f) in stamps.iter().zip(fields) {
        let norm = thermic_norm(f, spec.space, quad)?.value;
        best = best.max((s - spec.t_origin).powf(spec.theta) * norm);
    }
    Ok(best)
}

/// Ratio form of the convolution inequality
/// `|f*g|_{B^gamma_{ell,m}} <= c |f|_{B^{gamma-delta}_{ell1,m1}} |g|_{B^delta_{ell2,m2}}`.
#[allow(clippy::too_many_arguments)]
pub fn check_young(
    f: &ScalarField,
    g: &ScalarField,
    target: BesovIndex,
    delta: f64,
    ell1: f64,
    ell2: f64,
    m1: f64,
    m2: f64,
    quad: &ThermicQuad,
) -> Result<f64> {
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    if (1.0 + inv(target.ell) - inv(ell1) - inv(ell2)).abs() > 1e-9 {
        return Err(Error::Parameter(
            "Young exponents must satisfy 1 + 1/ell = 1/ell1 + 1/ell2".into(),
        ));
    }
    if inv(m1) + 1e-12 < (inv(target.m) - inv(m2)).max(0.0) {
        return Err(Error::Parameter(
            "Young summability indices must satisfy 1/m1 >= max(1/m - 1/m2, 0)".into(),
        ));
    }
    let conv = spectral::convolve(f, g);
    let num = thermic_norm(&conv, target, quad)?.value;
    let nf = thermic_norm(f, BesovIndex::new(target.gamma - delta, ell1, m1)?, quad)?.value;
    let ng = thermic_norm(g, BesovIndex::new(delta, ell2, m2)?, quad)?.value;
    let den = nf * ng;
    if num == 0.0 && den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Ratio form of the duality pairing `|int f g| <= |f|_B |g|_B'`.
pub fn check_duality(
    f: &ScalarField,
    g: &ScalarField,
    idx: BesovIndex,
    quad: &ThermicQuad,
) -> Result<f64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let pairing: f64 = f.grid.cell_volume()
        * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>();
    let dual = BesovIndex::new(-idx.gamma, conjugate(idx.ell), conjugate(idx.m))?;
    let nf = thermic_norm(f, idx, quad)?.value;
    let ng = thermic_norm(g, dual, quad)?.value;
    let den = nf * ng;
    if pairing.abs() == 0.0 && den == 0.0 {
        return Ok(0.0);
    }
    Ok(pairing.abs() / den)
}

/// Least-squares fit of `log |d^a p_t|_B` against `log t`.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub norms: Vec<(f64, f64)>,
}

/// Measures the heat-kernel norm decay exponent; the contract is
/// `slope ~ -(gamma/alpha + (d/alpha)(1 - 1/ell) + a/alpha)`.
pub fn heat_kernel_norm_scaling(
    params: &StableParams,
    grid: &GridSpec,
    idx: BesovIndex,
    derivative_order: u8,
    times: &[f64],
    quad: &ThermicQuad,
) -> Result<SlopeFit> {
    if times.len() < 4 {
        return Err(Error::Parameter("need at least 4 geometrically spaced times".into()));
    }
    let mut pts = Vec::new();
    for &t in times {
        let field = match derivative_order {
            0 => params.density(t, grid)?,
            1 => params.density_gradient(t, grid)?.component_field(0),
            _ => return Err(Error::Parameter("derivative order must be 0 or 1".into())),
        };
        let norm = thermic_norm(&field, idx, quad)?.value;
        if norm.is_finite() && norm > 0.0 {
            pts.push((t, norm));
        }
    }
    if pts.len() < 4 {
        return Err(Error::Parameter("degenerate fit: fewer than 4 valid norms".into()));
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let x = t.ln();
        let y = v.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    Ok(SlopeFit { slope, intercept, norms: pts })
}

/// Predicted heat-kernel norm decay exponent from the norm bound.
pub fn heat_kernel_exponent(alpha: f64, d: usize, gamma: f64, ell: f64, a: u8) -> f64 {
    let inv_ell = if ell.is_infinite() { 0.0 } else { 1.0 / ell };
    -(gamma / alpha + d as f64 / alpha * (1.0 - inv_ell) + a as f64 / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(n: usize) -> GridSpec {
        GridSpec::new(1, 8.0, n).unwrap()
    }

    fn gaussian(grid: &GridSpec, sigma: f64) -> ScalarField {
        let mut f = ScalarField::from_fn(grid.clone(), |x| {
            (-x[0] * x[0] / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
        });
        f.normalize_mass().unwrap();
        f
    }

    fn ref_heat_kernel(grid: &GridSpec, v: f64) -> ScalarField {
        // reference semigroup has unit prefactor: variance 2v
        gaussian(grid, (2.0 * v).sqrt())
    }

    #[test]
    fn norm_of_zero_is_zero() {
        let f = ScalarField::zeros(grid1(64));
        let r = thermic_norm(&f, BesovIndex::new(0.0, f64::INFINITY, f64::INFINITY).unwrap(), &ThermicQuad::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn homogeneity_and_triangle() {
        let g = grid1(256);
        let f = gaussian(&g, 0.7);
        let idx = BesovIndex::new(0.3, 2.0, 1.0).unwrap();
        let q = ThermicQuad::default();
        let n1 = thermic_norm(&f, idx, &q).unwrap().value;
        let n3 = thermic_norm(&f.scaled(-3.0), idx, &q).unwrap().value;
        assert!((n3 - 3.0 * n1).abs() < 1e-12 * n3);

        let h = gaussian(&g, 0.3);
        let nh = thermic_norm(&h, idx, &q).unwrap().value;
        let mut sum = f.clone();
        for (a, b) in sum.values.iter_mut().zip(&h.values) {
            *a += b;
        }
        let ns = thermic_norm(&sum, idx, &q).unwrap().value;
        assert!(ns <= n1 + nh + 1e-9);
    }

    #[test]
    fn quadrature_self_convergence_on_heat_kernel() {
        let g = grid1(256);
        let f = ref_heat_kernel(&g, 1.0);
        let idx = BesovIndex::new(0.0, f64::INFINITY, f64::INFINITY).unwrap();
        let coarse = thermic_norm(&f, idx, &ThermicQuad { nodes: 32, ..Default::default() })
            .unwrap()
            .value;
        let fine = thermic_norm(&f, idx, &ThermicQuad { nodes: 64, ..Default::default() })
            .unwrap()
            .value;
        assert!(fine.is_finite() && fine > 0.0);
        assert!((coarse - fine).abs() < 0.05 * fine, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn dirac_family_embedding_contrast() {
        // probability measures are uniformly in B^{-d/ell'}_{ell, inf} while
        // their B^0 norms blow up as the family concentrates
        let g = GridSpec::new(1, 8.0, 2048).unwrap();
        let q = ThermicQuad::default();
        let bounded_idx = BesovIndex::new(-0.5, 2.0, f64::INFINITY).unwrap();
        let growing_idx = BesovIndex::new(0.0, 2.0, f64::INFINITY).unwrap();
        let mut bounded = Vec::new();
        let mut growing = Vec::new();
        for &eps in &[0.1, 0.05, 0.025] {
            let f = gaussian(&g, eps);
            bounded.push(thermic_norm(&f, bounded_idx, &q).unwrap().value);
            growing.push(thermic_norm(&f, growing_idx, &q).unwrap().value);
        }
        let bratio = bounded.iter().cloned().fold(0.0f64, f64::max)
            / bounded.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(bratio < 2.0, "bounded family ratio {bratio}");
        // strict growth at every halving in the non-embedding space
        assert!(growing[1] > growing[0] && growing[2] > growing[1], "{growing:?}");
        let gratio = growing[2] / growing[0];
        assert!(gratio > bratio, "growth {gratio} should exceed bounded variation {bratio}");
    }

    #[test]
    fn weighted_trajectory_norm() {
        let g = grid1(128);
        let q = ThermicQuad::default();
        let spec = WeightedNormSpec {
            theta: 0.45,
            t_origin: 0.0,
            space: BesovIndex::new(0.0, 2.0, f64::INFINITY).unwrap(),
        };
        let f = gaussian(&g, 0.7);
        let norm = thermic_norm(&f, spec.space, &q).unwrap().value;

        // singleton trajectory: (s - t)^theta times the snapshot norm
        let got = weighted_sup_norm(&[0.3], &[f.clone()], &spec, &q).unwrap();
        assert!((got - 0.3f64.powf(0.45) * norm).abs() < 1e-12 * got);

        // theta = 0: plain sup of the norms
        let flat = WeightedNormSpec { theta: 0.0, ..spec };
        let g2 = gaussian(&g, 0.4);
        let n2 = thermic_norm(&g2, spec.space, &q).unwrap().value;
        let got = weighted_sup_norm(&[0.1, 0.9], &[f.clone(), g2], &flat, &q).unwrap();
        assert!((got - norm.max(n2)).abs() < 1e-12 * got);

        // zero trajectory
        let zero = ScalarField::zeros(g);
        assert_eq!(weighted_sup_norm(&[1.0], &[zero], &spec, &q).unwrap(), 0.0);

        // stamps must lie strictly after the origin
        assert!(weighted_sup_norm(&[0.0], &[f], &spec, &q).is_err());
    }

    #[test]
    fn heat_kernel_slopes() {
        let g = grid1(1024);
        let p = StableParams::isotropic(1, 2.0, 0.5).unwrap();
        let q = ThermicQuad::default();
        let times = [0.05, 0.1, 0.2, 0.4];
        // (gamma, ell, a) = (0, 1, 1): slope -1/2
        let fit = heat_kernel_norm_scaling(
            &p,
            &g,
            BesovIndex::new(0.0, 1.0, f64::INFINITY).unwrap(),
            1,
            &times,
            &q,
        )
        .unwrap();
        let expect = heat_kernel_exponent(2.0, 1, 0.0, 1.0, 1);
        assert!(
            (fit.slope - expect).abs() < 0.1 * expect.abs(),
            "slope {} vs {}",
            fit.slope,
            expect
        );
        // (0, 1, 0): flat
        let flat = heat_kernel_norm_scaling(
            &p,
            &g,
            BesovIndex::new(0.0, 1.0, f64::INFINITY).unwrap(),
            0,
            &times,
            &q,
        )
        .unwrap();
        assert!(flat.slope.abs() < 0.05, "flat slope {}", flat.slope);
    }

    #[test]
    fn young_ratio_behaviour() {
        let g = grid1(256);
        let q = ThermicQuad::default();
        let f = ref_heat_kernel(&g, 1.0);
        let idx = BesovIndex::new(0.0, 1.0, f64::INFINITY).unwrap();
        // 1 + 1/1 = 1/1 + 1/1
        let r = check_young(&f, &f, idx, 0.0, 1.0, 1.0, 1.0, f64::INFINITY, &q).unwrap();
        assert!(r.is_finite() && r > 0.0 && r < 10.0, "ratio {r}");

        // sharpening mollifier family keeps the ratio stable
        let mut ratios = Vec::new();
        for &eps in &[0.2, 0.1, 0.05] {
            let m = gaussian(&g, eps);
            ratios.push(check_young(&f, &m, idx, 0.0, 1.0, 1.0, 1.0, f64::INFINITY, &q).unwrap());
        }
        let spread = ratios.iter().cloned().fold(0.0f64, f64::max)
            / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 2.0, "ratios {ratios:?}");

        let zero = ScalarField::zeros(g.clone());
        assert_eq!(
            check_young(&zero, &f, idx, 0.0, 1.0, 1.0, 1.0, f64::INFINITY, &q).unwrap(),
            0.0
        );
        // invalid split rejected
        assert!(check_young(&f, &f, idx, 0.0, 2.0, 3.0, 1.0, f64::INFINITY, &q).is_err());
    }

    #[test]
    fn duality_ratio() {
        let g = grid1(256);
        let q = ThermicQuad::default();
        let f = ref_heat_kernel(&g, 1.0);
        let idx = BesovIndex::new(0.3, 2.0, 1.0).unwrap();
        let r = check_duality(&f, &f, idx, &q).unwrap();
        assert!(r <= 1.05, "duality ratio {r}");

        // disjoint supports: numerator vanishes
        let left = ScalarField::from_fn(g.clone(), |x| if x[0] < -2.0 { 1.0 } else { 0.0 });
        let right = ScalarField::from_fn(g.clone(), |x| if x[0] > 2.0 { 1.0 } else { 0.0 });
        let r2 = check_duality(&left, &right, idx, &q).unwrap();
        assert!(r2.abs() < 1e-12);

        let zero = ScalarField::zeros(g);
        assert_eq!(check_duality(&zero, &f, idx, &q).unwrap(), 0.0);
    }

    #[test]
    fn embedding_monotonicity_and_lift_on_corpus() {
        let g = grid1(256);
        let q = ThermicQuad::default();
        let corpus: Vec<ScalarField> = vec![
            ref_heat_kernel(&g, 0.5),
            gaussian(&g, 0.3),
            ScalarField::from_fn(g.clone(), |x| (0.9 * x[0]).sin() * (-x[0] * x[0] / 4.0).exp()),
            ScalarField::from_fn(g.clone(), |x| 1.0 / (1.0 + x[0] * x[0])),
        ];
        // (E2): gamma0 - d/l0 >= gamma1 - d/l1, l0 <= l1 => |f|_1 <= C |f|_0
        let src = BesovIndex::new(0.5, 1.0, 1.0).unwrap();
        let dst = BesovIndex::new(-0.6, 2.0, 2.0).unwrap(); // 0.5-1 >= -0.6-0.5
        let mut c_embed = 0.0f64;
        for f in &corpus {
            let a = thermic_norm(f, src, &q).unwrap().value;
            let b = thermic_norm(f, dst, &q).unwrap().value;
            c_embed = c_embed.max(b / a);
        }
        assert!(c_embed.is_finite() && c_embed < 100.0, "embedding constant {c_embed}");

        // (E1): |f|_{B^0_{l,inf}} <= C |f|_{L^l} <= C' |f|_{B^0_{l,1}}
        let b0inf = BesovIndex::new(0.0, 2.0, f64::INFINITY).unwrap();
        let b01 = BesovIndex::new(0.0, 2.0, 1.0).unwrap();
        let mut c1 = 0.0f64;
        let mut c2 = 0.0f64;
        for f in &corpus {
            let l2 = f.lebesgue_norm(2.0);
            c1 = c1.max(thermic_norm(f, b0inf, &q).unwrap().value / l2);
            c2 = c2.max(l2 / thermic_norm(f, b01, &q).unwrap().value);
        }
        assert!(c1 < 100.0 && c2 < 100.0, "E1 constants {c1} {c2}");

        // lift (L): |f'|_{B^{gamma-1}} <= C |f|_{B^gamma}
        let up = BesovIndex::new(0.4, 2.0, 1.0).unwrap();
        let down = BesovIndex::new(-0.6, 2.0, 1.0).unwrap();
        let mut c_lift = 0.0f64;
        for f in &corpus {
            let grad = spectral::gradient(f).component_field(0);
            let a = thermic_norm(f, up, &q).unwrap().value;
            let b = thermic_norm(&grad, down, &q).unwrap().value;
            c_lift = c_lift.max(b / a);
        }
        assert!(c_lift.is_finite() && c_lift < 100.0, "lift constant {c_lift}");
    }
}
