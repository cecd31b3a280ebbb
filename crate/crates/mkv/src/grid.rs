//! Uniform periodic grids over `[-L, L)^d` and the scalar/vector fields
//! that live on them.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Hard cap on the total number of grid points (`N^d`).
const MAX_POINTS: usize = 1 << 24;

/// A uniform periodic grid on `[-L, L)^d` with `n` points per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    d: usize,
    half_width: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(d: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Grid(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Grid(format!("half width must be positive, got {half_width}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("points per dim must be a power of two >= 16, got {n}")));
        }
        if n.checked_pow(d as u32).map_or(true, |total| total > MAX_POINTS) {
            return Err(Error::Grid(format!("grid {n}^{d} exceeds the {MAX_POINTS}-point budget")));
        }
        Ok(Self { d, half_width, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    /// Grid spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Total number of points `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Coordinate of index `j` along one axis: `-L + j h`.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + self.spacing() * j as f64
    }

    /// Signed frequency of DFT index `k` along one axis: `pi k_signed / L`.
    pub fn freq(&self, k: usize) -> f64 {
        let ks = if k <= self.n / 2 { k as isize } else { k as isize - self.n as isize };
        std::f64::consts::PI * ks as f64 / self.half_width
    }

    /// Largest resolved frequency magnitude `pi N / (2L)`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / (2.0 * self.half_width)
    }

    /// Decompose a flat row-major index into per-axis indices.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize; 3]) {
        for axis in (0..self.d).rev() {
            out[axis] = flat % self.n;
            flat /= self.n;
        }
    }

    /// Flat row-major index from per-axis indices (periodic wrap).
    pub fn ravel_wrapped(&self, idx: &[isize]) -> usize {
        let n = self.n as isize;
        let mut flat = 0usize;
        for axis in 0..self.d {
            let j = idx[axis].rem_euclid(n) as usize;
            flat = flat * self.n + j;
        }
        flat
    }

    /// Position of a flat index.
    pub fn position(&self, flat: usize, out: &mut [f64; 3]) {
        let mut idx = [0usize; 3];
        self.unravel(flat, &mut idx);
        for axis in 0..self.d {
            out[axis] = self.coord(idx[axis]);
        }
    }

    /// Wrap a point onto the fundamental domain `[-L, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let span = 2.0 * self.half_width;
        let mut y = (x + self.half_width).rem_euclid(span) - self.half_width;
        if y >= self.half_width {
            y -= span;
        }
        y
    }

    /// Minimum-image difference on the torus.
    pub fn min_image(&self, dx: f64) -> f64 {
        self.wrap(dx)
    }
}

/// Real scalar field on a grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        let len = grid.len();
        Self { grid, values: vec![0.0; len] }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Grid("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// Sample a pointwise function of position.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        let mut x = [0.0f64; 3];
        for (flat, v) in values.iter_mut().enumerate() {
            grid.position(flat, &mut x);
            *v = f(&x[..grid.dim()]);
        }
        Self { grid, values }
    }

    /// `h^d * sum(values)`, the discrete integral.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Discrete `L^ell` norm; `ell = inf` gives the sup norm.
    pub fn lebesgue_norm(&self, ell: f64) -> f64 {
        lebesgue_norm(&self.values, self.grid.cell_volume(), ell)
    }

    /// Rescale in place so the discrete integral is exactly one.
    pub fn normalize_mass(&mut self) -> Result<()> {
        let mass = self.integral();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Grid(format!("cannot normalize field with mass {mass}")));
        }
        for v in &mut self.values {
            *v /= mass;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let h = self.grid.cell_volume();
        Ok(h * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Mass sitting in the outer shell `|x|_inf > 0.9 L`; a proxy for how much
    /// of the solution has reached the periodic boundary.
    pub fn boundary_mass(&self) -> f64 {
        let cut = 0.9 * self.grid.half_width();
        let mut x = [0.0f64; 3];
        let h = self.grid.cell_volume();
        let mut acc = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            self.grid.position(flat, &mut x);
            if x[..self.grid.dim()].iter().any(|c| c.abs() > cut) {
                acc += v.abs();
            }
        }
        acc * h
    }
}

/// Real vector field on a grid, one flat array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let len = grid.len();
        let d = grid.dim();
        Self { grid, components: vec![vec![0.0; len]; d] }
    }

    pub fn from_components(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Grid("component shape does not match grid".into()));
        }
        if components.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Grid("field contains non-finite values".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let d = grid.dim();
        let mut components = vec![vec![0.0; grid.len()]; d];
        let mut x = [0.0f64; 3];
        for flat in 0..grid.len() {
            grid.position(flat, &mut x);
            for (axis, comp) in components.iter_mut().enumerate() {
                comp[flat] = f(&x[..d], axis);
            }
        }
        Self { grid, components }
    }

    pub fn component_field(&self, axis: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.components[axis].clone() }
    }

    /// Pointwise Euclidean magnitude, reduced with `max`.
    pub fn sup_magnitude(&self) -> f64 {
        let mut best = 0.0f64;
        for flat in 0..self.grid.len() {
            let mut s = 0.0;
            for comp in &self.components {
                s += comp[flat] * comp[flat];
            }
            best = best.max(s.sqrt());
        }
        best
    }

    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let h = self.grid.cell_volume();
        let mut acc = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            for (x, y) in a.iter().zip(b) {
                acc += (x - y) * (x - y);
            }
        }
        Ok((h * acc).sqrt())
    }
}

pub(crate) fn lebesgue_norm(values: &[f64], cell: f64, ell: f64) -> f64 {
    if ell.is_infinite() {
        values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    } else if (ell - 1.0).abs() < 1e-12 {
        cell * values.iter().map(|v| v.abs()).sum::<f64>()
    } else if (ell - 2.0).abs() < 1e-12 {
        (cell * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    } else {
        (cell * values.iter().map(|v| v.abs().powf(ell)).sum::<f64>()).powf(1.0 / ell)
    }
}

fn fmt_float(x: f64, out: &mut String) {
    // 17 significant digits round-trips every f64
    let _ = write!(out, "{:.16e}", x);
}

/// Serialize a scalar field as `x1,...,xd,value` rows, row-major.
pub fn scalar_to_csv(field: &ScalarField) -> String {
    let d = field.grid.dim();
    let mut out = String::new();
    for axis in 0..d {
        let _ = write!(out, "x{},", axis + 1);
    }
    out.push_str("value\n");
    let mut x = [0.0f64; 3];
    for (flat, v) in field.values.iter().enumerate() {
        field.grid.position(flat, &mut x);
        for c in x.iter().take(d) {
            fmt_float(*c, &mut out);
            out.push(',');
        }
        fmt_float(*v, &mut out);
        out.push('\n');
    }
    out
}

/// Serialize a vector field as `x1,...,xd,v1,...,vd` rows, row-major.
pub fn vector_to_csv(field: &VectorField) -> String {
    let d = field.grid.dim();
    let mut out = String::new();
    for axis in 0..d {
        let _ = write!(out, "x{},", axis + 1);
    }
    for axis in 0..d {
        let _ = write!(out, "v{}", axis + 1);
        out.push(if axis + 1 == d { '\n' } else { ',' });
    }
    let mut x = [0.0f64; 3];
    for flat in 0..field.grid.len() {
        field.grid.position(flat, &mut x);
        for c in x.iter().take(d) {
            fmt_float(*c, &mut out);
            out.push(',');
        }
        for axis in 0..d {
            fmt_float(field.components[axis][flat], &mut out);
            out.push(if axis + 1 == d { '\n' } else { ',' });
        }
    }
    out
}

/// Parse a scalar field CSV produced by [`scalar_to_csv`], reconstructing the grid
/// from the coordinate columns.
pub fn scalar_from_csv(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty field CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let d = cols.len().saturating_sub(1);
    if d == 0 || cols.last() != Some(&"value") {
        return Err(Error::Io(format!("unrecognized field header `{header}`")));
    }
    let mut values = Vec::new();
    let mut first_coords: Vec<Vec<f64>> = vec![Vec::new(); d];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != d + 1 {
            return Err(Error::Io(format!("line {}: expected {} columns", lineno + 2, d + 1)));
        }
        for axis in 0..d {
            let c: f64 = parts[axis]
                .parse()
                .map_err(|_| Error::Io(format!("line {}: bad coordinate", lineno + 2)))?;
            first_coords[axis].push(c);
        }
        let v: f64 = parts[d]
            .parse()
            .map_err(|_| Error::Io(format!("line {}: bad value", lineno + 2)))?;
        values.push(v);
    }
    let total = values.len();
    let n = (0..=24)
        .map(|k| 1usize << k)
        .find(|nn| nn.pow(d as u32) == total)
        .ok_or_else(|| Error::Io(format!("row count {total} is not a power-of-two grid in d={d}")))?;
    let min_x = first_coords[0].iter().copied().fold(f64::INFINITY, f64::min);
    let grid = GridSpec::new(d, -min_x, n)?;
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = GridSpec::new(1, 8.0, 32).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coord(0), -8.0);
        assert_eq!(g.coord(16), 0.0);
        assert_eq!(g.freq(0), 0.0);
        assert!((g.freq(1) - std::f64::consts::PI / 8.0).abs() < 1e-15);
        assert!(g.freq(31) < 0.0);
        assert!(GridSpec::new(1, 8.0, 24).is_err());
        assert!(GridSpec::new(4, 8.0, 32).is_err());
        assert!(GridSpec::new(3, 8.0, 512).is_err()); // 512^3 over budget
    }

    #[test]
    fn wrap_and_min_image() {
        let g = GridSpec::new(1, 8.0, 32).unwrap();
        assert_eq!(g.wrap(8.0), -8.0);
        assert!((g.wrap(9.0) - -7.0).abs() < 1e-12);
        assert!((g.min_image(15.0) - -1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = GridSpec::new(2, 4.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] - 0.3 * x[1]).sin());
        let text = scalar_to_csv(&f);
        let back = scalar_from_csv(&text).unwrap();
        assert_eq!(back.grid, f.grid);
        let err = f.sup_distance(&back).unwrap();
        assert!(err == 0.0, "round trip not byte exact: {err}");
    }
}
