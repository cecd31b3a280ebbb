//! FFT plumbing with the continuum Fourier convention
//! `F(xi) = h^d sum_j f_j exp(-i xi x_j)` on the periodic grid, so that
//! multiplier operators, analytic symbols and convolutions compose without
//! extra scale factors.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::{GridSpec, ScalarField, VectorField};

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(PlanCache::default());
}

#[derive(Default)]
struct PlanCache {
    planner: Option<FftPlanner<f64>>,
    plans: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        let mut cache = cache.borrow_mut();
        if let Some(p) = cache.plans.get(&(n, forward)) {
            return p.clone();
        }
        if cache.planner.is_none() {
            cache.planner = Some(FftPlanner::new());
        }
        let dir = if forward { FftDirection::Forward } else { FftDirection::Inverse };
        let p = cache.planner.as_mut().unwrap().plan_fft(n, dir);
        cache.plans.insert((n, forward), p.clone());
        p
    })
}

/// Apply 1-D FFTs along every axis of a flattened row-major `d`-cube.
fn fft_all_axes(grid: &GridSpec, data: &mut [Complex64], forward: bool) {
    let n = grid.points_per_dim();
    let d = grid.dim();
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::default(); n];
    // axis = d-1 is contiguous; others need a strided gather/scatter
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let lines = grid.len() / n;
        for line in 0..lines {
            // base index of this line: distribute `line` over the other axes
            let block = line / stride;
            let offset = line % stride;
            let base = block * stride * n + offset;
            if stride == 1 {
                fft.process(&mut data[base..base + n]);
            } else {
                for (j, s) in scratch.iter_mut().enumerate() {
                    *s = data[base + j * stride];
                }
                fft.process(&mut scratch);
                for (j, s) in scratch.iter().enumerate() {
                    data[base + j * stride] = *s;
                }
            }
        }
    }
}

/// Phase `(-1)^(k1+...+kd)` translating between index-0-based DFTs and the
/// grid origin at `-L`.
fn apply_origin_phase(grid: &GridSpec, data: &mut [Complex64]) {
    let n = grid.points_per_dim();
    let d = grid.dim();
    let mut idx = [0usize; 3];
    for (flat, v) in data.iter_mut().enumerate() {
        let mut f = flat;
        let mut parity = 0usize;
        for _ in 0..d {
            idx[0] = f % n;
            parity += idx[0];
            f /= n;
        }
        if parity % 2 == 1 {
            *v = -*v;
        }
    }
}

/// Forward transform of a real field: returns `F(xi_k)` in DFT layout.
pub fn forward(field: &ScalarField) -> Vec<Complex64> {
    let mut data: Vec<Complex64> =
        field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_all_axes(&field.grid, &mut data, true);
    let scale = field.grid.cell_volume();
    apply_origin_phase(&field.grid, &mut data);
    for v in &mut data {
        *v *= scale;
    }
    data
}

/// Inverse transform back to a real field (imaginary part discarded).
pub fn inverse(grid: &GridSpec, spectrum: &[Complex64]) -> ScalarField {
    let mut data = spectrum.to_vec();
    apply_origin_phase(grid, &mut data);
    fft_all_axes(grid, &mut data, false);
    let scale = 1.0 / (2.0 * grid.half_width()).powi(grid.dim() as i32);
    let values = data.iter().map(|v| v.re * scale).collect();
    ScalarField { grid: grid.clone(), values }
}

/// Visit every mode: `f(flat_index, xi)` with `xi` the signed frequency vector.
pub fn for_each_mode(grid: &GridSpec, mut f: impl FnMut(usize, &[f64])) {
    let n = grid.points_per_dim();
    let d = grid.dim();
    let freqs: Vec<f64> = (0..n).map(|k| grid.freq(k)).collect();
    let mut xi = [0.0f64; 3];
    for flat in 0..grid.len() {
        let mut rem = flat;
        for axis in (0..d).rev() {
            xi[axis] = freqs[rem % n];
            rem /= n;
        }
        f(flat, &xi[..d]);
    }
}

/// Tabulate a real function of frequency over all modes.
pub fn symbol_table(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for_each_mode(grid, |flat, xi| out[flat] = f(xi));
    out
}

/// Synthesize a real field from an analytic Fourier transform `xi -> F(xi)`.
pub fn synthesize(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> ScalarField {
    let mut spec = vec![Complex64::default(); grid.len()];
    for_each_mode(grid, |flat, xi| spec[flat] = f(xi));
    inverse(grid, &spec)
}

/// Spatial convolution `f * g` via Fourier multiplication.
pub fn convolve(f: &ScalarField, g: &ScalarField) -> ScalarField {
    debug_assert_eq!(f.grid, g.grid);
    let mut ff = forward(f);
    let gg = forward(g);
    for (a, b) in ff.iter_mut().zip(&gg) {
        *a *= *b;
    }
    inverse(&f.grid, &ff)
}

/// Convolve with a cached spectrum.
pub fn convolve_spectrum(f: &ScalarField, g_hat: &[Complex64]) -> ScalarField {
    let mut ff = forward(f);
    for (a, b) in ff.iter_mut().zip(g_hat) {
        *a *= *b;
    }
    inverse(&f.grid, &ff)
}

/// Gradient via the `i xi_a` multiplier; the Nyquist line is zeroed per axis so
/// the output of the odd multiplier stays real-symmetric.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = &f.grid;
    let spec = forward(f);
    let n = grid.points_per_dim();
    let d = grid.dim();
    let mut comps = Vec::with_capacity(d);
    for axis in 0..d {
        let mut g = vec![Complex64::default(); grid.len()];
        for (flat, v) in spec.iter().enumerate() {
            let mut rem = flat;
            let mut k_axis = 0usize;
            for a in (0..d).rev() {
                let k = rem % n;
                if a == axis {
                    k_axis = k;
                }
                rem /= n;
            }
            if k_axis == n / 2 {
                continue; // Nyquist
            }
            let xi = grid.freq(k_axis);
            g[flat] = Complex64::new(0.0, xi) * v;
        }
        comps.push(inverse(grid, &g).values);
    }
    VectorField { grid: grid.clone(), components: comps }
}

/// Divergence of a vector field via `i xi . F`.
pub fn divergence(f: &VectorField) -> ScalarField {
    let grid = &f.grid;
    let n = grid.points_per_dim();
    let d = grid.dim();
    let mut acc = vec![Complex64::default(); grid.len()];
    for axis in 0..d {
        let spec = forward(&f.component_field(axis));
        for (flat, v) in spec.iter().enumerate() {
            let mut rem = flat;
            let mut k_axis = 0usize;
            for a in (0..d).rev() {
                let k = rem % n;
                if a == axis {
                    k_axis = k;
                }
                rem /= n;
            }
            if k_axis == n / 2 {
                continue;
            }
            let xi = grid.freq(k_axis);
            acc[flat] += Complex64::new(0.0, xi) * v;
        }
    }
    inverse(grid, &acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn forward_matches_analytic_gaussian() {
        let grid = GridSpec::new(1, 8.0, 256).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |x| (-x[0] * x[0] / 2.0).exp() / (2.0 * PI).sqrt());
        let spec = forward(&f);
        // hat f(xi) = exp(-xi^2/2)
        for k in 0..256 {
            let xi = grid.freq(k);
            let expect = (-xi * xi / 2.0).exp();
            if expect > 1e-14 {
                assert!((spec[k].re - expect).abs() < 1e-12, "k={k}");
                assert!(spec[k].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_and_convolution() {
        let grid = GridSpec::new(2, 4.0, 32).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |x| (x[0] * 0.7).cos() * (-x[1] * x[1]).exp());
        let back = inverse(&grid, &forward(&f));
        assert!(f.sup_distance(&back).unwrap() < 1e-12);

        // convolution with a delta-like unit-mass spike returns ~f smoothed; use
        // instead a Gaussian pair whose convolution is known in closed form
        let g1 = ScalarField::from_fn(grid.clone(), |x| {
            (-(x[0] * x[0] + x[1] * x[1]) / 0.5).exp() / (0.5 * PI)
        });
        let g2 = g1.clone();
        let conv = convolve(&g1, &g2);
        // variance adds: sigma^2 = 0.25 each => 0.5 total
        let expect = ScalarField::from_fn(grid, |x| {
            (-(x[0] * x[0] + x[1] * x[1]) / 1.0).exp() / PI
        });
        // limited by the Gaussian's own spectral truncation at N=32
        assert!(conv.sup_distance(&expect).unwrap() < 1e-7);
    }

    #[test]
    fn gradient_of_sine_is_cosine() {
        let grid = GridSpec::new(1, PI, 64).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |x| (3.0 * x[0]).sin());
        let g = gradient(&f);
        let expect = ScalarField::from_fn(grid, |x| 3.0 * (3.0 * x[0]).cos());
        let got = g.component_field(0);
        assert!(got.sup_distance(&expect).unwrap() < 1e-10);
    }
}
