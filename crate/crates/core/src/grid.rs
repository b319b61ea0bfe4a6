//! Periodic grid, spectral differentiation, quadrature and norms.
//!
//! The real line is replaced by a large torus `[center - L/2, center + L/2)`.
//! Every operator here is a Fourier multiplier or a periodic rectangle rule,
//! both spectrally accurate for smooth, well-localized data.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{GkdvError, Result};

/// Uniform periodic grid with its FFT plans and wavenumber table.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    center: f64,
    dx: f64,
    wavenumbers: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("center", &self.center)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length && self.center == other.center
    }
}

impl Grid {
    pub fn new(n: usize, length: f64, center: f64) -> Result<Self> {
        if n < 2 {
            return Err(GkdvError::Domain(format!("grid needs at least 2 points, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) || !center.is_finite() {
            return Err(GkdvError::Domain(format!(
                "grid length must be finite and positive (length = {length}, center = {center})"
            )));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let wavenumbers = (0..n).map(|j| 2.0 * PI * signed_index(j, n) as f64 / length).collect();
        Ok(Self {
            n,
            length,
            center,
            dx: length / n as f64,
            wavenumbers,
            fft,
            ifft,
        })
    }

    /// Convenience constructor returning a shareable handle.
    pub fn shared(n: usize, length: f64, center: f64) -> Result<Arc<Self>> {
        Self::new(n, length, center).map(Arc::new)
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Left edge of the periodic window (included).
    pub fn x_min(&self) -> f64 {
        self.center - 0.5 * self.length
    }

    /// Right edge of the periodic window (excluded, identified with `x_min`).
    pub fn x_max(&self) -> f64 {
        self.center + 0.5 * self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min() + j as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumbers `k_j = 2π m_j / L` in FFT order. For even `n` the Nyquist
    /// entry is stored as `-π n / L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the unpaired Nyquist mode, if the grid has one.
    pub fn nyquist_index(&self) -> Option<usize> {
        self.n.is_multiple_of(2).then_some(self.n / 2)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min() && x <= self.x_max()
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        buf
    }

    /// Inverse transform (normalized by `1/n`) keeping the real part.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.fft.process(buf);
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.ifft.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }
}

/// Signed frequency index of FFT slot `j` on an `n`-point grid.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n.div_ceil(2) {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Samples of `u(t, ·)` on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(GkdvError::Shape {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_points()).map(|j| f(grid.x(j))).collect();
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            time: self.time,
        }
    }

    /// Same grid and time stamp, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.time)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// Pointwise sum; grids must agree.
    pub fn add(&self, other: &Field) -> Result<Self> {
        ensure_same_grid(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        self.with_values(values)
    }

    /// Reflection `x - center ↦ -(x - center)`, exact on the periodic grid.
    pub fn reflected(&self) -> Self {
        let n = self.values.len();
        let values = (0..n).map(|j| self.values[(n - j) % n]).collect();
        Self {
            grid: self.grid.clone(),
            values,
            time: self.time,
        }
    }

    /// Circular shift by a whole number of samples (positive moves right).
    pub fn shifted_samples(&self, shift: isize) -> Self {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|j| self.values[(j - shift).rem_euclid(n) as usize])
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            time: self.time,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn ensure_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid.as_ref() != b.grid.as_ref() {
        return Err(GkdvError::Domain("fields live on different grids".into()));
    }
    Ok(())
}

fn ensure_finite(f: &Field) -> Result<()> {
    if let Some(j) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(GkdvError::InvalidField(format!(
            "non-finite sample {} at index {j}",
            f.values[j]
        )));
    }
    Ok(())
}

fn apply_multiplier(f: &Field, multiplier: impl Fn(usize, f64) -> Complex64) -> Field {
    let grid = f.grid();
    let mut spec = grid.forward(&f.values);
    for (j, (c, &k)) in spec.iter_mut().zip(grid.wavenumbers()).enumerate() {
        *c *= multiplier(j, k);
    }
    Field {
        grid: grid.clone(),
        values: grid.inverse(&spec),
        time: f.time,
    }
}

/// Fourier symbol `(i k)^order` on this grid. Odd orders drop the unpaired
/// Nyquist mode, whose derivative has no real representative.
pub(crate) fn derivative_symbol(grid: &Grid, order: u32) -> Vec<Complex64> {
    let nyq = grid.nyquist_index();
    grid.wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            if order % 2 == 1 && Some(j) == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k).powu(order)
            }
        })
        .collect()
}

/// `∂ₓ^order f` by Fourier multiplication, `order ∈ {1, 2, 3}`.
pub fn spectral_derivative(f: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(GkdvError::Domain(format!(
            "derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    ensure_finite(f)?;
    let symbol = derivative_symbol(f.grid(), order);
    Ok(apply_multiplier(f, |j, _| symbol[j]))
}

/// `D^s f` with symbol `|k|^s`. The Nyquist mode keeps `|k_N|^s` as a real
/// factor; `s = 0` returns the field unchanged.
pub fn fractional_derivative(f: &Field, s: f64) -> Result<Field> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(GkdvError::Domain(format!(
            "fractional order must be finite and >= 0, got {s}"
        )));
    }
    ensure_finite(f)?;
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(apply_multiplier(f, |_, k| {
        Complex64::new(if k == 0.0 { 0.0 } else { k.abs().powf(s) }, 0.0)
    }))
}

/// Periodic rectangle rule `dx Σ f_j`.
pub fn integrate(f: &Field) -> f64 {
    f.grid.dx() * f.values.iter().sum::<f64>()
}

/// Rectangle rule restricted to samples with `x` in `[lo, hi]`.
pub(crate) fn integrate_window(f: &Field, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let grid = f.grid();
    let mut acc = 0.0;
    for (j, &v) in f.values.iter().enumerate() {
        let x = grid.x(j);
        if x >= lo && x <= hi {
            acc += g(v);
        }
    }
    acc * grid.dx()
}

/// `∫_lo^hi g(f)` with each sample standing for its cell
/// `[x_j - dx/2, x_j + dx/2)`, weighted by the part of the cell inside
/// `[lo, hi]`. Continuous in both endpoints; infinite endpoints allowed.
pub(crate) fn integrate_cells(f: &Field, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let grid = f.grid();
    let dx = grid.dx();
    let mut acc = 0.0;
    for (j, &v) in f.values.iter().enumerate() {
        let c = grid.x(j);
        let overlap = (c + 0.5 * dx).min(hi) - (c - 0.5 * dx).max(lo);
        if overlap > 0.0 {
            acc += overlap * g(v);
        }
    }
    acc
}

/// Closed interval `[lo, hi]` of the physical domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn centered(center: f64, half_width: f64) -> Self {
        Self::new(center - half_width, center + half_width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    L2,
    Lq(f64),
    Sup,
    GradL2,
    /// Inhomogeneous `H^s`: `sqrt(‖f‖² + ‖D^s f‖²)`.
    Hs(f64),
    LocalizedL2(Interval),
    LocalizedLq(f64, Interval),
}

fn check_interval(grid: &Grid, iv: Interval) -> Result<()> {
    if !(iv.lo <= iv.hi) || !grid.contains(iv.lo) || !grid.contains(iv.hi) {
        return Err(GkdvError::Domain(format!(
            "interval [{}, {}] is not inside the domain [{}, {}]",
            iv.lo,
            iv.hi,
            grid.x_min(),
            grid.x_max()
        )));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) {
        return Err(GkdvError::Domain(format!("Lq norm needs q >= 1, got {q}")));
    }
    Ok(())
}

pub fn norm(f: &Field, kind: NormKind) -> Result<f64> {
    ensure_finite(f)?;
    let dx = f.grid.dx();
    let value = match kind {
        NormKind::L2 => (dx * f.values.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        NormKind::Lq(q) => {
            check_q(q)?;
            (dx * f.values.iter().map(|v| v.abs().powf(q)).sum::<f64>()).powf(1.0 / q)
        }
        NormKind::Sup => f.max_abs(),
        NormKind::GradL2 => norm(&spectral_derivative(f, 1)?, NormKind::L2)?,
        NormKind::Hs(s) => {
            if !(s >= 0.0) {
                return Err(GkdvError::Domain(format!("H^s needs s >= 0, got {s}")));
            }
            let l2 = norm(f, NormKind::L2)?;
            let ds = norm(&fractional_derivative(f, s)?, NormKind::L2)?;
            (l2 * l2 + ds * ds).sqrt()
        }
        NormKind::LocalizedL2(iv) => {
            check_interval(&f.grid, iv)?;
            integrate_window(f, iv.lo, iv.hi, |v| v * v).sqrt()
        }
        NormKind::LocalizedLq(q, iv) => {
            check_q(q)?;
            check_interval(&f.grid, iv)?;
            integrate_window(f, iv.lo, iv.hi, |v| v.abs().powf(q)).powf(1.0 / q)
        }
    };
    Ok(value)
}

/// `∫ f²` over the outer `fraction` of the window (half on each side).
pub fn boundary_mass(f: &Field, fraction: f64) -> f64 {
    let grid = f.grid();
    let band = 0.5 * fraction * grid.length();
    let lo = grid.x_min() + band;
    let hi = grid.x_max() - band;
    let dx = grid.dx();
    f.values
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let x = grid.x(*j);
            x < lo || x >= hi
        })
        .map(|(_, v)| v * v)
        .sum::<f64>()
        * dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn periodic(n: usize) -> Arc<Grid> {
        Grid::shared(n, 2.0 * PI, PI).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::new(64, 10.0, 1.0).unwrap();
        assert_abs_diff_eq!(g.dx() * 64.0, 10.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.x(0), -4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.x(3), -4.0 + 3.0 * g.dx(), epsilon = 1e-14);
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        for j in 1..32 {
            assert_abs_diff_eq!(k[64 - j], -k[j], epsilon = 1e-14);
        }
        assert_eq!(g.nyquist_index(), Some(32));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1, 1.0, 0.0).is_err());
        assert!(Grid::new(8, 0.0, 0.0).is_err());
        assert!(Grid::new(8, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn derivative_of_sine() {
        let g = periodic(64);
        let f = Field::from_fn(g, f64::sin);
        let d = spectral_derivative(&f, 1).unwrap();
        for (j, v) in d.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, f.grid().x(j).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = periodic(32);
        let f = Field::from_fn(g, |_| 1.0);
        for order in 1..=3 {
            let d = spectral_derivative(&f, order).unwrap();
            assert!(d.max_abs() < 1e-14);
        }
    }

    #[test]
    fn second_derivative_of_sech2() {
        let g = Grid::shared(1024, 80.0, 0.0).unwrap();
        let sech2 = |x: f64| 1.0 / (x / 2.0).cosh().powi(2);
        // (sech²(x/2))'' = ½ sech²(x/2) (2 - 3 sech²(x/2))
        let exact = |x: f64| 0.5 * sech2(x) * (2.0 - 3.0 * sech2(x));
        let f = Field::from_fn(g.clone(), sech2);
        let d = spectral_derivative(&f, 2).unwrap();
        let err = d
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| (v - exact(g.x(j))).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "sup error {err}");
    }

    #[test]
    fn derivative_rejects_nonfinite_and_bad_order() {
        let g = periodic(8);
        let mut vals = vec![0.0; 8];
        vals[3] = f64::NAN;
        let f = Field::new(g.clone(), vals, 0.0).unwrap();
        assert!(matches!(spectral_derivative(&f, 1), Err(GkdvError::InvalidField(_))));
        assert!(spectral_derivative(&Field::zeros(g), 4).is_err());
    }

    #[test]
    fn fractional_single_mode() {
        let g = periodic(64);
        let f = Field::from_fn(g, |x| (2.0 * x).sin());
        let d = fractional_derivative(&f, 0.5).unwrap();
        for (j, v) in d.values().iter().enumerate() {
            let x = f.grid().x(j);
            assert_abs_diff_eq!(*v, 2f64.sqrt() * (2.0 * x).sin(), epsilon = 1e-12);
        }
        let same = fractional_derivative(&f, 0.0).unwrap();
        assert_eq!(same.values(), f.values());
        assert!(fractional_derivative(&f, -0.1).is_err());
    }

    #[test]
    fn fractional_nyquist_convention() {
        // cos(π x / dx) alternates ±1 and lives purely on the Nyquist mode.
        let g = Grid::shared(16, 16.0, 8.0).unwrap();
        let f = Field::from_fn(g.clone(), |x| (PI * x).cos());
        let d = fractional_derivative(&f, 0.5).unwrap();
        let k_nyq = PI;
        for (a, b) in d.values().iter().zip(f.values()) {
            assert_abs_diff_eq!(*a, k_nyq.sqrt() * b, epsilon = 1e-12);
        }
        // first derivative drops the Nyquist mode entirely
        let d1 = spectral_derivative(&f, 1).unwrap();
        assert!(d1.max_abs() < 1e-12);
    }

    #[test]
    fn quadrature_examples() {
        let g = periodic(64);
        let f = Field::from_fn(g, |x| x.sin().powi(2));
        assert_abs_diff_eq!(integrate(&f), PI, epsilon = 1e-12);
        let h = Field::from_fn(Grid::shared(10, 7.5, 0.0).unwrap(), |_| 1.0);
        assert_abs_diff_eq!(integrate(&h), 7.5, epsilon = 1e-12);
    }

    #[test]
    fn norms_of_zero_and_constants() {
        let g = Grid::shared(100, 10.0, 0.0).unwrap();
        let z = Field::zeros(g.clone());
        let iv = Interval::new(-1.0, 1.0);
        for kind in [
            NormKind::L2,
            NormKind::Lq(3.0),
            NormKind::Sup,
            NormKind::GradL2,
            NormKind::Hs(0.5),
            NormKind::LocalizedL2(iv),
            NormKind::LocalizedLq(4.0, iv),
        ] {
            assert_eq!(norm(&z, kind).unwrap(), 0.0);
        }
        // endpoints between samples: 30 rectangles of width 0.1
        let one = Field::from_fn(g, |_| 1.0);
        let v = norm(&one, NormKind::LocalizedL2(Interval::new(-1.55, 1.45))).unwrap();
        assert_abs_diff_eq!(v, 3f64.sqrt(), epsilon = 1e-12);
        assert!(norm(&one, NormKind::LocalizedL2(Interval::new(-6.0, 0.0))).is_err());
        assert!(norm(&one, NormKind::Lq(0.5)).is_err());
    }

    #[test]
    fn reflection_and_shift() {
        let g = Grid::shared(8, 8.0, 0.0).unwrap();
        let f = Field::from_fn(g, |x| x);
        let r = f.reflected();
        // x_0 = -4 is its own mirror image on the torus
        assert_eq!(r.values()[0], -4.0);
        assert_eq!(r.values()[1], 3.0);
        let s = f.shifted_samples(1);
        assert_eq!(s.values()[1], f.values()[0]);
        assert_eq!(s.values()[0], f.values()[7]);
    }
}
