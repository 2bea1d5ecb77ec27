//! Cubes, (p, infinity)-atoms with vanishing moments, and finite atomic sums.
//!
//! An atom on `Q` is a boundary-flat bump `w(u) = prod exp(-1/(1-u_i^2))` in the
//! normalized coordinates `u = 2(x-c)/l`, times a random Legendre polynomial of
//! degree `N+2`, minus its projection onto `span{w P_beta : |beta| <= N}` so that
//! every moment up to order `N` vanishes on the grid. Values are scaled to sup 1/2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample, Grid, SampledFunction};
use crate::sum::{Neumaier, NeumaierComplex};
use crate::symbols::multi_indices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dilation {
    Star,
    StarStar,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if center.is_empty() || center.len() > 2 {
            return Err(Error::Precondition(format!("cube dimension {} outside {{1, 2}}", center.len())));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Precondition(format!("cube side must be positive, got {side}")));
        }
        Ok(Self { center, side })
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.n() as i32)
    }

    pub fn scaled(&self, factor: f64) -> Cube {
        Cube { center: self.center.clone(), side: self.side * factor }
    }

    /// `3 sqrt(n) Q`.
    pub fn star(&self) -> Cube {
        self.scaled(3.0 * (self.n() as f64).sqrt())
    }

    /// `9n Q`.
    pub fn starstar(&self) -> Cube {
        self.scaled(9.0 * self.n() as f64)
    }

    /// Closed cube membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.center.iter().zip(x).all(|(c, xi)| (xi - c).abs() <= 0.5 * self.side)
    }

    /// Dilation of both center and side about the origin.
    pub fn dilated_about_origin(&self, factor: f64) -> Cube {
        Cube { center: self.center.iter().map(|c| c * factor).collect(), side: self.side * factor }
    }

    pub fn translated(&self, shift: &[f64]) -> Cube {
        Cube { center: self.center.iter().zip(shift).map(|(c, s)| c + s).collect(), side: self.side }
    }

    /// The whole grid box as a cube.
    pub fn of_box(grid: &Grid) -> Cube {
        Cube { center: vec![0.0; grid.n()], side: 2.0 * grid.half_width() }
    }
}

pub fn dilate_cube(q: &Cube, which: Dilation) -> Cube {
    match which {
        Dilation::Star => q.star(),
        Dilation::StarStar => q.starstar(),
    }
}

/// Sampled indicator of the closed cube.
pub fn indicator(q: &Cube, grid: &Grid) -> SampledFunction {
    sample(|x| Complex64::new(if q.contains(x) { 1.0 } else { 0.0 }, 0.0), grid)
}

#[derive(Debug, Clone)]
pub struct Atom {
    cube: Option<Cube>,
    values: SampledFunction,
    p: f64,
    moment_order: Option<usize>,
    seed: Option<u64>,
}

impl Atom {
    /// `None` for (infinity, infinity)-atoms, whose cube is the whole box.
    pub fn cube(&self) -> Option<&Cube> {
        self.cube.as_ref()
    }

    pub fn support_cube(&self) -> Cube {
        self.cube.clone().unwrap_or_else(|| Cube::of_box(self.values.grid()))
    }

    pub fn values(&self) -> &SampledFunction {
        &self.values
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn moment_order(&self) -> Option<usize> {
        self.moment_order
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_infinity_atom(&self) -> bool {
        self.cube.is_none()
    }
}

fn legendre(max_deg: usize, u: f64) -> Vec<f64> {
    let mut p = vec![0.0; max_deg + 1];
    p[0] = 1.0;
    if max_deg >= 1 {
        p[1] = u;
    }
    for k in 1..max_deg {
        p[k + 1] = ((2 * k + 1) as f64 * u * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}

fn bump_weight(u: &[f64]) -> f64 {
    u.iter().map(|&t| (-1.0 / (1.0 - t * t)).exp()).product()
}

const GRAM_RESIDUAL: f64 = 1e-9;
const MOMENT_TOL: f64 = 1e-8;
const MIN_CELLS: f64 = 16.0;

/// Allowed size of `|\int (x-c)^alpha a dx|` for an atom on `q`.
pub fn moment_tolerance(q: &Cube, order: usize) -> f64 {
    MOMENT_TOL * q.volume() * (0.5 * q.side).powi(order as i32)
}

fn check_geometry(q: &Cube, grid: &Grid) -> Result<()> {
    if q.n() != grid.n() {
        return Err(Error::Precondition(format!("cube dimension {} but grid dimension {}", q.n(), grid.n())));
    }
    if q.side / grid.spacing() < MIN_CELLS - 1e-9 {
        return Err(Error::Atom(format!(
            "cube side {} spans {:.2} cells, at least {MIN_CELLS} required",
            q.side,
            q.side / grid.spacing()
        )));
    }
    let reach = 0.5 * q.starstar().side + q.side;
    if q.center.iter().any(|c| c.abs() + reach > grid.half_width()) {
        return Err(Error::Atom(format!(
            "starstar of cube at {:?} (side {}) does not fit in the box with margin",
            q.center, q.side
        )));
    }
    Ok(())
}

/// Build a (p, infinity)-atom supported in `q` with moments up to `big_n` removed.
pub fn make_atom(q: &Cube, p: f64, big_n: usize, seed: u64, grid: &Grid) -> Result<Atom> {
    build_atom(q, p, big_n, seed, grid, true)
}

/// Same random profile with the moment projection skipped (negative control).
pub fn make_unprojected_atom(q: &Cube, p: f64, big_n: usize, seed: u64, grid: &Grid) -> Result<Atom> {
    build_atom(q, p, big_n, seed, grid, false)
}

fn build_atom(q: &Cube, p: f64, big_n: usize, seed: u64, grid: &Grid, project: bool) -> Result<Atom> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::Exponent(format!("atom exponent must be positive, got {p}")));
    }
    if p.is_infinite() {
        return Err(Error::Atom("p = infinity atoms live on the whole box; use make_infinity_atom".into()));
    }
    check_geometry(q, grid)?;
    let n = grid.n();
    let half = 0.5 * q.side;

    // interior points and their normalized coordinates
    let mut support: Vec<(usize, [f64; 2])> = Vec::new();
    for j in 0..grid.len() {
        let x = grid.point(j);
        let mut u = [0.0; 2];
        let mut inside = true;
        for a in 0..n {
            u[a] = (x[a] - q.center[a]) / half;
            inside &= u[a].abs() < 1.0;
        }
        if inside {
            support.push((j, u));
        }
    }

    let deg = big_n + 2;
    let full_basis = multi_indices(n, deg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = full_basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();

    let legendre_rows: Vec<[Vec<f64>; 2]> = support
        .iter()
        .map(|(_, u)| [legendre(deg, u[0]), if n == 2 { legendre(deg, u[1]) } else { vec![1.0] }])
        .collect();
    let basis_value = |row: &[Vec<f64>; 2], beta: &[usize]| -> f64 {
        if n == 1 {
            row[0][beta[0]]
        } else {
            row[0][beta[0]] * row[1][beta[1]]
        }
    };
    let weights: Vec<f64> = support.iter().map(|(_, u)| bump_weight(&u[..n])).collect();
    let mut f: Vec<f64> = legendre_rows
        .iter()
        .zip(&weights)
        .map(|(row, w)| w * full_basis.iter().zip(&coeffs).map(|(b, c)| c * basis_value(row, b)).sum::<f64>())
        .collect();

    if project {
        let basis = multi_indices(n, big_n);
        let k = basis.len();
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for (ai, alpha) in basis.iter().enumerate() {
            let mut r = Neumaier::new();
            for (row, &fv) in legendre_rows.iter().zip(&f) {
                r.add(basis_value(row, alpha) * fv);
            }
            rhs[ai] = r.value();
            for (bi, beta) in basis.iter().enumerate().skip(ai) {
                let mut g = Neumaier::new();
                for (row, &w) in legendre_rows.iter().zip(&weights) {
                    g.add(basis_value(row, alpha) * w * basis_value(row, beta));
                }
                gram[(ai, bi)] = g.value();
                gram[(bi, ai)] = g.value();
            }
        }
        let c = gram
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Atom(format!("singular moment system for cube {:?}", q)))?;
        let resid = (&gram * &c - &rhs).norm();
        let scale = gram.norm() * c.norm() + rhs.norm();
        if !(resid <= GRAM_RESIDUAL * scale) {
            return Err(Error::Atom(format!("moment system residual {resid:e} exceeds {GRAM_RESIDUAL:e}")));
        }
        for ((fv, row), &w) in f.iter_mut().zip(&legendre_rows).zip(&weights) {
            let corr: f64 = basis.iter().enumerate().map(|(bi, b)| c[bi] * basis_value(row, b)).sum();
            *fv -= w * corr;
        }
    }

    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(sup > 0.0) {
        return Err(Error::Atom("atom profile vanished identically".into()));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for ((j, _), fv) in support.iter().zip(&f) {
        values[*j] = Complex64::new(0.5 * fv / sup, 0.0);
    }
    let values = SampledFunction::new(*grid, values)?;

    if project {
        let ms = moments(&values, big_n, q);
        for (alpha, m) in multi_indices(n, big_n).iter().zip(&ms) {
            let order: usize = alpha.iter().sum();
            if m.norm() > moment_tolerance(q, order) {
                return Err(Error::Atom(format!(
                    "moment {alpha:?} = {:e} exceeds tolerance {:e}",
                    m.norm(),
                    moment_tolerance(q, order)
                )));
            }
        }
    }
    Ok(Atom { cube: Some(q.clone()), values, p, moment_order: project.then_some(big_n), seed: Some(seed) })
}

/// (infinity, infinity)-atom: any sampled function with `sup |f| <= 1`, no moments.
pub fn make_infinity_atom(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Result<Atom> {
    let values = sample(f, grid);
    let sup = values.max_abs();
    if !(sup <= 1.0) {
        return Err(Error::Atom(format!("sup |f| = {sup} exceeds 1")));
    }
    Ok(Atom { cube: None, values, p: f64::INFINITY, moment_order: None, seed: None })
}

/// Rectangle-rule moments `\int_window (x - c)^alpha f dx` about the window center `c`,
/// for all `|alpha| <= max_degree` in the order of [`multi_indices`].
pub fn moments(f: &SampledFunction, max_degree: usize, window: &Cube) -> Vec<Complex64> {
    let grid = f.grid();
    let n = grid.n();
    let alphas = multi_indices(n, max_degree);
    let mut acc = vec![NeumaierComplex::new(); alphas.len()];
    for (j, &v) in f.values().iter().enumerate() {
        let x = grid.point(j);
        if !window.contains(&x[..n]) {
            continue;
        }
        let d: Vec<f64> = (0..n).map(|a| x[a] - window.center[a]).collect();
        for (alpha, s) in alphas.iter().zip(acc.iter_mut()) {
            let mono: f64 = alpha.iter().zip(&d).map(|(&e, &t)| t.powi(e as i32)).product();
            s.add(v * mono);
        }
    }
    acc.iter().map(|s| s.value() * grid.cell_volume()).collect()
}

#[derive(Debug, Clone)]
pub struct FiniteAtomicSum {
    entries: Vec<(f64, Atom)>,
    realized: SampledFunction,
    majorant: SampledFunction,
}

impl FiniteAtomicSum {
    pub fn from_atoms(grid: &Grid, entries: Vec<(f64, Atom)>) -> Result<Self> {
        let mut realized = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut majorant = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (lambda, atom) in &entries {
            if !(*lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::Precondition(format!("coefficient {lambda} must be finite and nonnegative")));
            }
            grid.check_same(atom.values().grid())?;
            for (r, v) in realized.iter_mut().zip(atom.values().values()) {
                *r += v * *lambda;
            }
            let chi = indicator(&atom.support_cube(), grid);
            for (mj, c) in majorant.iter_mut().zip(chi.values()) {
                *mj += c * *lambda;
            }
        }
        for (j, (r, mj)) in realized.iter().zip(&majorant).enumerate() {
            if r.norm() > mj.re * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!("|realized| exceeds majorant at grid index {j}")));
            }
        }
        Ok(Self {
            entries,
            realized: SampledFunction::new(*grid, realized)?,
            majorant: SampledFunction::new(*grid, majorant)?,
        })
    }

    pub fn entries(&self) -> &[(f64, Atom)] {
        &self.entries
    }

    pub fn realized(&self) -> &SampledFunction {
        &self.realized
    }

    pub fn majorant(&self) -> &SampledFunction {
        &self.majorant
    }
}

/// Atomic sum from `(lambda, cube, seed)` entries, all atoms with the same `p` and `N`.
pub fn make_atomic_sum(entries: &[(f64, Cube, u64)], p: f64, big_n: usize, grid: &Grid) -> Result<FiniteAtomicSum> {
    let atoms = entries
        .iter()
        .map(|(lambda, q, seed)| Ok((*lambda, make_atom(q, p, big_n, *seed, grid)?)))
        .collect::<Result<Vec<_>>>()?;
    FiniteAtomicSum::from_atoms(grid, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lp_quasinorm, make_grid, sample_real};

    #[test]
    fn dilations() {
        let q = Cube::new(vec![0.0], 1.0).unwrap();
        assert_eq!(dilate_cube(&q, Dilation::Star).side, 3.0);
        assert_eq!(dilate_cube(&q, Dilation::StarStar).side, 9.0);
        let q2 = Cube::new(vec![0.0, 1.0], 2.0).unwrap();
        assert!((dilate_cube(&q2, Dilation::Star).side - 6.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(dilate_cube(&q2, Dilation::StarStar).side, 36.0);
    }

    #[test]
    fn mean_zero_atom() {
        let g = make_grid(1, 8.0, 256).unwrap();
        let q = Cube::new(vec![0.5], 1.0).unwrap();
        for seed in 0..5 {
            let a = make_atom(&q, 1.0, 0, seed, &g).unwrap();
            assert_eq!(a.values().max_abs(), 0.5);
            assert!(moments(a.values(), 0, &q)[0].norm() <= 1e-8 * q.volume());
        }
    }

    #[test]
    fn five_moments_vanish_on_64_cells() {
        let g = make_grid(1, 16.0, 1024).unwrap();
        let q = Cube::new(vec![-1.0], 2.0).unwrap();
        let a = make_atom(&q, 0.5, 4, 42, &g).unwrap();
        // independent check with raw powers about the center
        for k in 0..=4 {
            let m: f64 = (0..g.len())
                .map(|j| (g.point(j)[0] + 1.0).powi(k) * a.values().values()[j].re)
                .sum::<f64>()
                * g.spacing();
            assert!(m.abs() <= moment_tolerance(&q, k as usize), "k={k} m={m}");
        }
    }

    #[test]
    fn support_is_inside_cube() {
        let g = make_grid(2, 16.0, 512).unwrap();
        let q = Cube::new(vec![0.25, -0.5], 1.0).unwrap();
        let a = make_atom(&q, 1.0, 2, 9, &g).unwrap();
        for (j, v) in a.values().values().iter().enumerate() {
            let x = g.point(j);
            if v.norm() > 0.0 {
                assert!(q.contains(&x));
            }
        }
    }

    #[test]
    fn seeds_give_different_atoms() {
        let g = make_grid(1, 8.0, 512).unwrap();
        let q = Cube::new(vec![0.0], 1.0).unwrap();
        let a = make_atom(&q, 1.0, 2, 1, &g).unwrap();
        let b = make_atom(&q, 1.0, 2, 2, &g).unwrap();
        let d = lp_quasinorm(&a.values().sub(b.values()).unwrap(), 2.0).unwrap();
        assert!(d > 0.01 * lp_quasinorm(a.values(), 2.0).unwrap());
        let a2 = make_atom(&q, 1.0, 2, 1, &g).unwrap();
        assert_eq!(a.values(), a2.values());
    }

    #[test]
    fn whole_cell_translation_is_exact() {
        let g = make_grid(1, 8.0, 256).unwrap();
        let q = Cube::new(vec![0.5], 1.0).unwrap();
        let a = make_atom(&q, 1.0, 2, 3, &g).unwrap();
        let shifted = make_atom(&q.translated(&[5.0 * g.spacing()]), 1.0, 2, 3, &g).unwrap();
        assert_eq!(a.values().shift_cells([5, 0]), *shifted.values());
    }

    #[test]
    fn geometry_guards() {
        let g = make_grid(1, 8.0, 64).unwrap();
        assert!(make_atom(&Cube::new(vec![0.0], 1.0).unwrap(), 1.0, 0, 0, &g).is_err());
        let g = make_grid(1, 8.0, 1024).unwrap();
        assert!(make_atom(&Cube::new(vec![5.0], 1.0).unwrap(), 1.0, 0, 0, &g).is_err());
        assert!(make_atom(&Cube::new(vec![0.0], 1.0).unwrap(), f64::INFINITY, 0, 0, &g).is_err());
    }

    #[test]
    fn infinity_atoms() {
        let g = make_grid(1, 8.0, 64).unwrap();
        assert!(make_infinity_atom(&g, |_| Complex64::new(1.0, 0.0)).is_ok());
        assert!(make_infinity_atom(&g, |_| Complex64::new(2.0, 0.0)).is_err());
        let a = make_infinity_atom(&g, |x| Complex64::new(0.9 * (3.0 * x[0]).sin(), 0.0)).unwrap();
        assert!(a.is_infinity_atom());
        assert_eq!(a.support_cube().side, 16.0);
    }

    #[test]
    fn moments_examples() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let w = Cube::new(vec![0.0], 2.0).unwrap();
        let boxf = sample_real(|x| if x[0].abs() <= 0.5 { 1.0 } else { 0.0 }, &g);
        assert!((moments(&boxf, 0, &w)[0].re - 5.0 * g.spacing()).abs() < 1e-14);
        let odd = sample_real(|x| x[0], &g);
        assert!(moments(&odd, 0, &w)[0].norm() < 1e-14);
    }

    #[test]
    fn atomic_sums() {
        let g = make_grid(1, 8.0, 512).unwrap();
        let q = Cube::new(vec![0.0], 1.0).unwrap();
        let s = make_atomic_sum(&[(1.0, q.clone(), 4)], 1.0, 1, &g).unwrap();
        assert_eq!(s.realized(), make_atom(&q, 1.0, 1, 4, &g).unwrap().values());
        assert_eq!(s.majorant(), &indicator(&q, &g));
        let empty = make_atomic_sum(&[], 1.0, 1, &g).unwrap();
        assert_eq!(empty.realized().max_abs(), 0.0);
        assert_eq!(empty.majorant().max_abs(), 0.0);
    }

    #[test]
    fn majorant_quasinorm_matches_quadrature() {
        let g = make_grid(1, 16.0, 2048).unwrap();
        let cubes: Vec<(f64, Cube, u64)> = (0..5)
            .map(|k| (2f64.powi(-k), Cube::new(vec![-4.0 + 2.0 * k as f64], 2f64.powi(-(k % 3))).unwrap(), k as u64))
            .collect();
        let s = make_atomic_sum(&cubes, 0.5, 1, &g).unwrap();
        let direct: f64 = (0..g.len())
            .map(|j| {
                let x = g.point(j);
                cubes.iter().filter(|(_, q, _)| q.contains(&x[..1])).map(|(l, _, _)| l).sum::<f64>().sqrt()
            })
            .sum::<f64>()
            * g.spacing();
        assert!((lp_quasinorm(s.majorant(), 0.5).unwrap() - direct * direct).abs() < 1e-12 * direct * direct);
    }
}
