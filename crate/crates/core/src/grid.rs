//! Periodic grids on `[-L, L)^n`, sampling, transforms and quadrature.
//!
//! Fourier convention: `f^(xi) = \int f(x) e^{-2 pi i x.xi} dx`, discretized by the
//! rectangle rule. Frequencies are `k / (2L)` for `k` in `[-M/2, M/2)` and spectra
//! are stored in centered order (index `q = k + M/2`, axis 0 slowest).

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{Neumaier, NeumaierComplex};

/// A point of `R^n` with `n <= 2`; unused coordinates are zero.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialBox {
    n: usize,
    half_width: f64,
}

impl SpatialBox {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Grid("dimension must be at least 1".into()));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Grid(format!("half width must be positive, got {half_width}")));
        }
        Ok(Self { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: SpatialBox,
    points_per_axis: usize,
    spacing: f64,
}

pub fn make_grid(n: usize, half_width: f64, points_per_axis: usize) -> Result<Grid> {
    if !(1..=2).contains(&n) {
        return Err(Error::Grid(format!("dimension {n} outside {{1, 2}}")));
    }
    if !points_per_axis.is_power_of_two() {
        return Err(Error::Grid(format!("M = {points_per_axis} is not a power of two")));
    }
    if points_per_axis < 8 {
        return Err(Error::Grid(format!("M = {points_per_axis} is below the minimum of 8")));
    }
    let domain = SpatialBox::new(n, half_width)?;
    Ok(Grid { domain, points_per_axis, spacing: 2.0 * half_width / points_per_axis as f64 })
}

impl Grid {
    pub fn domain(&self) -> SpatialBox {
        self.domain
    }

    pub fn n(&self) -> usize {
        self.domain.n
    }

    pub fn half_width(&self) -> f64 {
        self.domain.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of grid points, `M^n`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.n() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `dx^n`, the rectangle-rule weight.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.n() as i32)
    }

    pub fn frequency_spacing(&self) -> f64 {
        1.0 / (2.0 * self.half_width())
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width() + i as f64 * self.spacing
    }

    pub fn axis_indices(&self, j: usize) -> [usize; 2] {
        if self.n() == 1 {
            [j, 0]
        } else {
            [j / self.points_per_axis, j % self.points_per_axis]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.n() == 1 {
            idx[0]
        } else {
            idx[0] * self.points_per_axis + idx[1]
        }
    }

    pub fn point(&self, j: usize) -> Point {
        let idx = self.axis_indices(j);
        let mut p = [0.0; 2];
        for (a, pa) in p.iter_mut().enumerate().take(self.n()) {
            *pa = self.coord(idx[a]);
        }
        p
    }

    /// Signed integer frequency `k` of a centered axis index.
    pub fn freq_k(&self, q: usize) -> i64 {
        q as i64 - (self.points_per_axis / 2) as i64
    }

    /// Continuous frequency of a flat centered spectrum index.
    pub fn frequency(&self, q: usize) -> Point {
        let idx = self.axis_indices(q);
        let mut xi = [0.0; 2];
        for (a, x) in xi.iter_mut().enumerate().take(self.n()) {
            *x = self.freq_k(idx[a]) as f64 * self.frequency_spacing();
        }
        xi
    }

    /// Reduce an integer frequency into `[-M/2, M/2)`.
    pub fn wrap_k(&self, k: i64) -> i64 {
        let m = self.points_per_axis as i64;
        (k + m / 2).rem_euclid(m) - m / 2
    }

    /// Grid index of the point nearest to `x` (per axis, no wrap), if `x` lies in the box.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0usize; 2];
        for a in 0..self.n() {
            let t = ((x[a] + self.half_width()) / self.spacing).round();
            if t < 0.0 || t >= self.points_per_axis as f64 {
                return None;
            }
            idx[a] = t as usize;
        }
        Some(self.flat_index(idx))
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Arc<[Complex64]>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(Self { grid, values: values.into() })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values: values.into() }
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_vec_unchecked(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise modulus, stored as a real-valued function.
    pub fn abs(&self) -> Self {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(other.values.iter()).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_vec_unchecked(self.grid, values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Periodic translation by whole cells: `out(x + shift*dx) = self(x)`.
    pub fn shift_cells(&self, shift: [isize; 2]) -> Self {
        let m = self.grid.points_per_axis as isize;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (j, &v) in self.values.iter().enumerate() {
            let idx = self.grid.axis_indices(j);
            let mut t = [0usize; 2];
            for a in 0..self.grid.n() {
                t[a] = (idx[a] as isize + shift[a]).rem_euclid(m) as usize;
            }
            out[self.grid.flat_index(t)] = v;
        }
        Self::from_vec_unchecked(self.grid, out)
    }
}

pub fn sample(f: impl Fn(&[f64]) -> Complex64, grid: &Grid) -> SampledFunction {
    let n = grid.n();
    let values = (0..grid.len()).map(|j| f(&grid.point(j)[..n])).collect();
    SampledFunction::from_vec_unchecked(*grid, values)
}

pub fn sample_real(f: impl Fn(&[f64]) -> f64, grid: &Grid) -> SampledFunction {
    sample(|x| Complex64::new(f(x), 0.0), grid)
}

/// Like [`sample`], but an evaluator failure aborts with the offending point.
pub fn try_sample(
    f: impl Fn(&[f64]) -> std::result::Result<Complex64, String>,
    grid: &Grid,
) -> Result<SampledFunction> {
    let n = grid.n();
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let x = grid.point(j);
        let v = f(&x[..n]).map_err(|message| Error::Evaluator { point: x[..n].to_vec(), message })?;
        values.push(v);
    }
    Ok(SampledFunction::from_vec_unchecked(*grid, values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coefficients: Arc<[Complex64]>,
}

impl Spectrum {
    pub fn new(grid: Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coefficients.len()
            )));
        }
        Ok(Self { grid, coefficients: coefficients.into() })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, coefficients: Vec<Complex64>) -> Self {
        Self { grid, coefficients: coefficients.into() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Flat index of the zero frequency.
    pub fn zero_index(&self) -> usize {
        let h = self.grid.points_per_axis / 2;
        self.grid.flat_index([h, h])
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

fn transpose_square(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

/// Unnormalized in-place transform along every axis of a row-major `m^n` array.
pub(crate) fn fft_in_place(data: &mut [Complex64], n: usize, m: usize, inverse: bool) {
    let fft = plan(m, inverse);
    fft.process(data);
    if n == 2 {
        transpose_square(data, m);
        fft.process(data);
        transpose_square(data, m);
    }
}

fn parity_sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign `(-1)^{k_0 + k_1}` and raw FFT position of a centered index.
fn centered_to_raw(grid: &Grid, q: usize) -> (f64, usize) {
    let m = grid.points_per_axis as i64;
    let idx = grid.axis_indices(q);
    let mut ksum = 0i64;
    let mut raw = [0usize; 2];
    for a in 0..grid.n() {
        let k = grid.freq_k(idx[a]);
        ksum += k;
        raw[a] = k.rem_euclid(m) as usize;
    }
    (parity_sign(ksum), grid.flat_index(raw))
}

pub fn dft(f: &SampledFunction) -> Spectrum {
    let grid = *f.grid();
    let mut buf = f.values().to_vec();
    fft_in_place(&mut buf, grid.n(), grid.points_per_axis, false);
    let w = grid.cell_volume();
    let coeffs = (0..grid.len())
        .map(|q| {
            let (sign, raw) = centered_to_raw(&grid, q);
            buf[raw] * (sign * w)
        })
        .collect();
    Spectrum::from_vec_unchecked(grid, coeffs)
}

pub fn idft(s: &Spectrum) -> SampledFunction {
    let grid = *s.grid();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (q, &c) in s.coefficients().iter().enumerate() {
        let (sign, raw) = centered_to_raw(&grid, q);
        buf[raw] = c * sign;
    }
    fft_in_place(&mut buf, grid.n(), grid.points_per_axis, true);
    let w = grid.frequency_spacing().powi(grid.n() as i32);
    for v in buf.iter_mut() {
        *v *= w;
    }
    SampledFunction::from_vec_unchecked(grid, buf)
}

/// Discrete `L^p` quasinorm; `p = f64::INFINITY` gives the max modulus.
pub fn lp_quasinorm(f: &SampledFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::Exponent(format!("p must be positive, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let mut acc = Neumaier::new();
    for v in f.values() {
        acc.add(v.norm().powf(p));
    }
    Ok((acc.value() * f.grid().cell_volume()).powf(1.0 / p))
}

pub fn pointwise_product(f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    f.zip_with(g, |a, b| a * b)
}

/// Rectangle-rule integral over the whole box.
pub fn integrate(f: &SampledFunction) -> Complex64 {
    let mut acc = NeumaierComplex::new();
    for &v in f.values() {
        acc.add(v);
    }
    acc.value() * f.grid().cell_volume()
}
