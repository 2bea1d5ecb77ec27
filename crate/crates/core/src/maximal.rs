//! Smooth, Hardy–Littlewood and power maximal functions on a grid.
//!
//! The supremum over scales is taken over a dyadic [`ScaleLadder`]. `M_phi` uses
//! circular convolution with the periodized bump; the Hardy–Littlewood operator
//! integrates over `B(x, r)` intersected with the box (no wrap) and keeps the
//! `1/r^n` normalization.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{fft_in_place, lp_quasinorm, Grid, SampledFunction};
use crate::sum::Neumaier;

const REFERENCE_POINTS: usize = 1 << 16;

/// `phi(x) = c_n exp(1/(|x|^2 - 1))` on the open unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    n: usize,
    c_n: f64,
}

fn raw_bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (1.0 / (r2 - 1.0)).exp()
    } else {
        0.0
    }
}

pub fn make_bump(n: usize) -> Result<BumpProfile> {
    let h = 1.0 / REFERENCE_POINTS as f64;
    let mut acc = Neumaier::new();
    // midpoint rule on the radius; the integrand is flat at both ends
    for i in 0..REFERENCE_POINTS {
        let r = (i as f64 + 0.5) * h;
        let shell = match n {
            1 => 2.0,
            2 => 2.0 * std::f64::consts::PI * r,
            _ => return Err(Error::Grid(format!("dimension {n} outside {{1, 2}}"))),
        };
        acc.add(shell * raw_bump(r * r) * h);
    }
    Ok(BumpProfile { n, c_n: 1.0 / acc.value() })
}

impl BumpProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn normalization(&self) -> f64 {
        self.c_n
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c_n * raw_bump(x.iter().map(|t| t * t).sum())
    }

    pub fn sup(&self) -> f64 {
        self.c_n * (-1.0f64).exp()
    }

    /// Discrete `phi_t` on the torus, indexed by circular offset, with unit discrete mass.
    fn periodized_kernel(&self, grid: &Grid, t: f64) -> Vec<f64> {
        let n = grid.n();
        let m = grid.points_per_axis();
        let h = grid.spacing();
        let period = 2.0 * grid.half_width();
        let images = (t / period).ceil() as i64 + 1;
        let mut k = vec![0.0; grid.len()];
        let offset = |i: usize| -> f64 {
            let d = if i < m / 2 { i as f64 } else { i as f64 - m as f64 };
            d * h
        };
        for (j, kv) in k.iter_mut().enumerate() {
            let idx = grid.axis_indices(j);
            let mut s = 0.0;
            if n == 1 {
                for a in -images..=images {
                    let y = (offset(idx[0]) + a as f64 * period) / t;
                    s += raw_bump(y * y);
                }
            } else {
                for a in -images..=images {
                    let y0 = (offset(idx[0]) + a as f64 * period) / t;
                    if y0.abs() >= 1.0 {
                        continue;
                    }
                    for b in -images..=images {
                        let y1 = (offset(idx[1]) + b as f64 * period) / t;
                        s += raw_bump(y0 * y0 + y1 * y1);
                    }
                }
            }
            *kv = s;
        }
        let mass: f64 = k.iter().sum::<f64>() * grid.cell_volume();
        for v in k.iter_mut() {
            *v /= mass;
        }
        k
    }

    /// `C` with `(phi_t * |f|)(x) <= C t^{-n} \int_{B(x,t)} |f|` for the discrete kernels
    /// of every ladder scale, away from wrap-around.
    pub fn domination_constant(&self, grid: &Grid, ladder: &ScaleLadder) -> f64 {
        ladder
            .scales()
            .iter()
            .map(|&t| {
                let k = self.periodized_kernel(grid, t);
                k.iter().fold(0.0f64, |a, &b| a.max(b)) * t.powi(grid.n() as i32)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleLadder {
    scales: Vec<f64>,
}

impl ScaleLadder {
    /// `t_k = 2^k dx` until `t_k >= 2L`; half steps insert `2^{k + 1/2} dx`.
    pub fn new(grid: &Grid, half_steps: bool) -> Self {
        let h = grid.spacing();
        let top = 2.0 * grid.half_width();
        let mut scales = Vec::new();
        let mut k = 0;
        loop {
            let t = h * 2f64.powi(k);
            scales.push(t);
            if t >= top * (1.0 - 1e-12) {
                break;
            }
            if half_steps {
                scales.push(t * std::f64::consts::SQRT_2);
            }
            k += 1;
        }
        Self { scales }
    }

    pub fn from_scales(mut scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() || scales.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Precondition("ladder scales must be positive and finite".into()));
        }
        scales.sort_by(f64::total_cmp);
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn mid(&self) -> f64 {
        self.scales[self.scales.len() / 2]
    }
}

fn circular_convolve(data: &[Complex64], kernel: &[f64], n: usize, m: usize, cell: f64) -> Vec<Complex64> {
    let mut a = data.to_vec();
    let mut b: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut a, n, m, false);
    fft_in_place(&mut b, n, m, false);
    let norm = cell / (m.pow(n as u32) as f64);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y * norm;
    }
    fft_in_place(&mut a, n, m, true);
    a
}

/// `phi_t * f` for one scale, on the torus.
pub fn smooth_average(f: &SampledFunction, phi: &BumpProfile, t: f64) -> Result<SampledFunction> {
    let grid = *f.grid();
    if phi.n() != grid.n() {
        return Err(Error::Precondition(format!("bump dimension {} on a {}-d grid", phi.n(), grid.n())));
    }
    let k = phi.periodized_kernel(&grid, t);
    let out = circular_convolve(f.values(), &k, grid.n(), grid.points_per_axis(), grid.cell_volume());
    SampledFunction::new(grid, out)
}

pub fn smooth_maximal(f: &SampledFunction, phi: &BumpProfile, ladder: &ScaleLadder) -> Result<SampledFunction> {
    let grid = *f.grid();
    let mut best = vec![0.0f64; grid.len()];
    for &t in ladder.scales() {
        let avg = smooth_average(f, phi, t)?;
        for (b, v) in best.iter_mut().zip(avg.values()) {
            *b = b.max(v.norm());
        }
    }
    SampledFunction::from_real(grid, best)
}

/// Weight of a cell at distance `dist` from the center of a ball of radius `r` (in cells).
fn ball_weight(dist2: f64, r: f64) -> f64 {
    let r2 = r * r;
    let tol = 1e-9 * r2.max(1.0);
    if dist2 < r2 - tol {
        1.0
    } else if dist2 <= r2 + tol {
        0.5
    } else {
        0.0
    }
}

/// Each cell counts with the length of its overlap with `[-r, r]`, so the measure of
/// an interior ball is exactly `2r`; for integer `r` this is the half-weight boundary rule.
fn ball_integrals_1d(abs: &[f64], r_cells: f64, cell: f64) -> Vec<f64> {
    let m = abs.len();
    let mut prefix = vec![0.0; m + 1];
    for (i, v) in abs.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let window = |lo: i64, hi: i64| -> f64 {
        let lo = lo.clamp(0, m as i64) as usize;
        let hi = hi.clamp(0, m as i64) as usize;
        if hi > lo {
            prefix[hi] - prefix[lo]
        } else {
            0.0
        }
    };
    let full = (r_cells - 0.5 + 1e-12).floor().max(0.0) as i64;
    let partial = (r_cells - (full as f64 + 0.5)).clamp(0.0, 1.0);
    (0..m as i64)
        .map(|i| {
            let mut s = window(i - full, i + full + 1);
            if partial > 1e-12 {
                for j in [i - full - 1, i + full + 1] {
                    if (0..m as i64).contains(&j) {
                        s += partial * abs[j as usize];
                    }
                }
            }
            (s * cell).max(0.0)
        })
        .collect()
}

fn ball_integrals_2d(abs: &[f64], m: usize, r_cells: f64, cell: f64) -> Vec<f64> {
    let p = 2 * m;
    let mut a = vec![Complex64::new(0.0, 0.0); p * p];
    for i in 0..m {
        for j in 0..m {
            a[i * p + j] = Complex64::new(abs[i * m + j], 0.0);
        }
    }
    let reach = (r_cells.floor() as i64).min(m as i64 - 1);
    let mut b = vec![Complex64::new(0.0, 0.0); p * p];
    for di in -reach..=reach {
        for dj in -reach..=reach {
            let w = ball_weight((di * di + dj * dj) as f64, r_cells);
            if w > 0.0 {
                let ri = di.rem_euclid(p as i64) as usize;
                let rj = dj.rem_euclid(p as i64) as usize;
                b[ri * p + rj] = Complex64::new(w, 0.0);
            }
        }
    }
    fft_in_place(&mut a, 2, p, false);
    fft_in_place(&mut b, 2, p, false);
    let norm = cell / (p * p) as f64;
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y * norm;
    }
    fft_in_place(&mut a, 2, p, true);
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = a[i * p + j].re.max(0.0);
        }
    }
    out
}

/// `sup_r r^{-n} \int_{B(x,r) \cap box} |f|` over the ladder radii.
pub fn hl_maximal(f: &SampledFunction, ladder: &ScaleLadder) -> Result<SampledFunction> {
    let grid = *f.grid();
    let m = grid.points_per_axis();
    let h = grid.spacing();
    let abs: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let mut best = vec![0.0f64; grid.len()];
    for &r in ladder.scales() {
        let integrals = match grid.n() {
            1 => ball_integrals_1d(&abs, r / h, grid.cell_volume()),
            _ => ball_integrals_2d(&abs, m, r / h, grid.cell_volume()),
        };
        let scale = r.powi(grid.n() as i32);
        for (b, v) in best.iter_mut().zip(&integrals) {
            *b = b.max(v / scale);
        }
    }
    SampledFunction::from_real(grid, best)
}

/// `M(|f|^r)^{1/r}`.
pub fn power_maximal(f: &SampledFunction, r: f64, ladder: &ScaleLadder) -> Result<SampledFunction> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Exponent(format!("power maximal needs finite r >= 1, got {r}")));
    }
    if r == 1.0 {
        return hl_maximal(f, ladder);
    }
    let powered = f.map(|v| Complex64::new(v.norm().powf(r), 0.0));
    Ok(hl_maximal(&powered, ladder)?.map(|v| Complex64::new(v.re.powf(1.0 / r), 0.0)))
}

/// `|| M_phi f ||_{L^p}`.
pub fn hp_quasinorm(f: &SampledFunction, p: f64, phi: &BumpProfile, ladder: &ScaleLadder) -> Result<f64> {
    if !(p > 0.0) || p.is_infinite() {
        return Err(Error::Exponent(format!("H^p exponent must be in (0, inf), got {p}")));
    }
    let mf = smooth_maximal(f, phi, ladder)?;
    let top = mf.max_abs();
    if top == 0.0 {
        return Ok(0.0);
    }
    // scale out the sup so that power-of-two rescalings of f commute exactly
    Ok(top * lp_quasinorm(&mf.scale(1.0 / top), p)?)
}
