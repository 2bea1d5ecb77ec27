//! Application of general, product and mixed multilinear operators.
//!
//! The general path groups the frequency sum by output frequency `eta`:
//! `g(eta) = dxi^{n(m-1)} sum sigma(xi_1..xi_m) f^_1(xi_1)...f^_m(xi_m)` with the last
//! frequency fixed to `eta - (xi_1 + ... + xi_{m-1})`, wrapped into the grid. Each
//! `g(eta)` is a compensated sum in lexicographic order, so the result does not
//! depend on how output frequencies are distributed over workers.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dft, idft, Grid, SampledFunction, Spectrum};
use crate::stencil::central_weights;
use crate::sum::NeumaierComplex;
use crate::symbols::{KindTag, MixedTerm, ProductTerm, Symbol, SymbolKind};

pub const DEFAULT_BUDGET: u64 = 1 << 26;

pub type OutputSpectrum = Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "radius", rename_all = "lowercase")]
pub enum Cutoff {
    None,
    /// Frequencies with `|xi_j| > R` are dropped.
    Sharp(f64),
    /// C-infinity taper: 1 for `|xi_j| <= R/2`, 0 for `|xi_j| >= R`.
    Smooth(f64),
}

fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

impl Cutoff {
    pub fn weight(&self, xi: &[f64]) -> f64 {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        match *self {
            Cutoff::None => 1.0,
            Cutoff::Sharp(radius) => {
                if r <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            Cutoff::Smooth(radius) => 1.0 - smoothstep((r - 0.5 * radius) / (0.5 * radius)),
        }
    }
}

/// `M / (8L)`: keeps every input inside `|k| <= M/4`.
pub fn default_cutoff_radius(grid: &Grid) -> f64 {
    grid.points_per_axis() as f64 / (8.0 * grid.half_width())
}

#[derive(Debug, Clone)]
pub struct MultilinearOperator {
    symbol: Symbol,
    grid: Grid,
    cutoff: Cutoff,
    budget: u64,
}

impl MultilinearOperator {
    pub fn new(symbol: Symbol, grid: Grid) -> Result<Self> {
        if symbol.dim() != grid.n() {
            return Err(Error::Arity { expected: grid.n(), got: symbol.dim() });
        }
        Ok(Self { symbol, grid, cutoff: Cutoff::None, budget: DEFAULT_BUDGET })
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn arity(&self) -> usize {
        self.symbol.arity()
    }
}

fn check_inputs(grid: &Grid, arity: usize, inputs: &[&SampledFunction]) -> Result<()> {
    if inputs.len() != arity {
        return Err(Error::Arity { expected: arity, got: inputs.len() });
    }
    for f in inputs {
        grid.check_same(f.grid())?;
    }
    Ok(())
}

fn filtered_spectrum(f: &SampledFunction, cutoff: Cutoff) -> Vec<Complex64> {
    let s = dft(f);
    let grid = f.grid();
    let n = grid.n();
    s.coefficients()
        .iter()
        .enumerate()
        .map(|(q, &c)| match cutoff {
            Cutoff::None => c,
            _ => c * cutoff.weight(&grid.frequency(q)[..n]),
        })
        .collect()
}

/// Integer frequency vectors of the flat centered indices.
fn k_table(grid: &Grid) -> Vec<[i64; 2]> {
    (0..grid.len())
        .map(|q| {
            let idx = grid.axis_indices(q);
            [grid.freq_k(idx[0]), if grid.n() == 2 { grid.freq_k(idx[1]) } else { 0 }]
        })
        .collect()
}

fn k_to_flat(grid: &Grid, k: [i64; 2]) -> usize {
    let h = (grid.points_per_axis() / 2) as i64;
    let i0 = (grid.wrap_k(k[0]) + h) as usize;
    let i1 = if grid.n() == 2 { (grid.wrap_k(k[1]) + h) as usize } else { 0 };
    grid.flat_index([i0, i1])
}

fn check_budget(grid: &Grid, m: usize, budget: u64) -> Result<()> {
    let calls = (grid.len() as u128).pow(m as u32);
    if calls > budget as u128 {
        return Err(Error::CostBudget { calls, budget });
    }
    Ok(())
}

/// Exhaustive grouped frequency sum for already transformed (and filtered) inputs.
fn general_spectrum(symbol: &Symbol, grid: &Grid, spectra: &[Vec<Complex64>]) -> Vec<Complex64> {
    let m = spectra.len();
    let n = grid.n();
    let p = grid.len();
    let ks = k_table(grid);
    let dxi = grid.frequency_spacing();
    let xis: Vec<[f64; 2]> = ks.iter().map(|k| [k[0] as f64 * dxi, k[1] as f64 * dxi]).collect();
    let scale = dxi.powi((n * (m - 1)) as i32);

    (0..p)
        .into_par_iter()
        .map(|eta| {
            let keta = ks[eta];
            let mut acc = NeumaierComplex::new();
            let mut xi = [0.0f64; 6];
            let mut idx = vec![0usize; m.saturating_sub(1)];
            loop {
                let mut prod = Complex64::new(1.0, 0.0);
                let mut ksum = [0i64; 2];
                for (j, &q) in idx.iter().enumerate() {
                    prod *= spectra[j][q];
                    ksum[0] += ks[q][0];
                    ksum[1] += ks[q][1];
                    xi[j * n..(j + 1) * n].copy_from_slice(&xis[q][..n]);
                }
                if prod != Complex64::new(0.0, 0.0) {
                    let last = k_to_flat(grid, [keta[0] - ksum[0], keta[1] - ksum[1]]);
                    let fl = spectra[m - 1][last];
                    if fl != Complex64::new(0.0, 0.0) {
                        xi[(m - 1) * n..m * n].copy_from_slice(&xis[last][..n]);
                        acc.add(symbol.eval(&xi[..m * n]) * prod * fl);
                    }
                }
                // odometer over the m-1 free indices, last slot fastest
                let mut pos = idx.len();
                loop {
                    if pos == 0 {
                        return acc.value() * scale;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < p {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        })
        .collect()
}

fn apply_general_parts(
    symbol: &Symbol,
    grid: &Grid,
    cutoff: Cutoff,
    budget: u64,
    inputs: &[&SampledFunction],
) -> Result<(SampledFunction, OutputSpectrum)> {
    check_inputs(grid, symbol.arity(), inputs)?;
    check_budget(grid, symbol.arity(), budget)?;
    let spectra: Vec<Vec<Complex64>> = inputs.iter().map(|f| filtered_spectrum(f, cutoff)).collect();
    let g = Spectrum::from_vec_unchecked(*grid, general_spectrum(symbol, grid, &spectra));
    Ok((idft(&g), g))
}

/// Direct evaluation of the frequency sum through the symbol's evaluator.
pub fn apply_general(op: &MultilinearOperator, inputs: &[&SampledFunction]) -> Result<(SampledFunction, OutputSpectrum)> {
    apply_general_parts(&op.symbol, &op.grid, op.cutoff, op.budget, inputs)
}

/// Literal frequency sum at the given points: every tuple, no wrapping, no transforms.
pub fn apply_oracle(op: &MultilinearOperator, inputs: &[&SampledFunction], x_points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let grid = op.grid;
    check_inputs(&grid, op.arity(), inputs)?;
    if x_points.len() > 16 {
        return Err(Error::Precondition(format!("oracle limited to 16 points, got {}", x_points.len())));
    }
    let n = grid.n();
    let m = op.arity();
    let p = grid.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    let freqs: Vec<[f64; 2]> = (0..p).map(|q| grid.frequency(q)).collect();
    let spectra: Vec<Vec<Complex64>> = inputs
        .iter()
        .map(|f| {
            freqs
                .iter()
                .map(|xi| {
                    let mut acc = NeumaierComplex::new();
                    for (j, &v) in f.values().iter().enumerate() {
                        let x = grid.point(j);
                        acc.add(v * Complex64::from_polar(1.0, -two_pi * (x[0] * xi[0] + x[1] * xi[1])));
                    }
                    acc.value() * grid.cell_volume() * op.cutoff.weight(&xi[..n])
                })
                .collect()
        })
        .collect();
    let weight = grid.frequency_spacing().powi((n * m) as i32);
    let mut out = Vec::with_capacity(x_points.len());
    for x in x_points {
        if x.len() != n {
            return Err(Error::Arity { expected: n, got: x.len() });
        }
        let mut acc = NeumaierComplex::new();
        let mut idx = vec![0usize; m];
        let mut xi = [0.0f64; 6];
        'tuples: loop {
            let mut prod = Complex64::new(1.0, 0.0);
            let mut phase = 0.0;
            for (j, &q) in idx.iter().enumerate() {
                prod *= spectra[j][q];
                xi[j * n..(j + 1) * n].copy_from_slice(&freqs[q][..n]);
                phase += (0..n).map(|a| x[a] * freqs[q][a]).sum::<f64>();
            }
            acc.add(op.symbol.eval(&xi[..m * n]) * prod * Complex64::from_polar(1.0, two_pi * phase));
            let mut pos = m;
            loop {
                if pos == 0 {
                    break 'tuples;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < p {
                    break;
                }
                idx[pos] = 0;
            }
        }
        out.push(acc.value() * weight);
    }
    Ok(out)
}

/// Linear multiplier `T_sigma f = (sigma f^)^vee` by one transform round trip.
pub fn apply_linear(symbol: &Symbol, f: &SampledFunction, cutoff: Cutoff) -> Result<SampledFunction> {
    if symbol.arity() != 1 {
        return Err(Error::Arity { expected: 1, got: symbol.arity() });
    }
    let grid = *f.grid();
    let n = grid.n();
    let spec = filtered_spectrum(f, cutoff);
    let coeffs = spec.iter().enumerate().map(|(q, &c)| c * symbol.eval(&grid.frequency(q)[..n])).collect();
    Ok(idft(&Spectrum::from_vec_unchecked(grid, coeffs)))
}

fn accumulate_terms(grid: &Grid, terms: Vec<SampledFunction>) -> SampledFunction {
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for t in &terms {
        for (a, v) in acc.iter_mut().zip(t.values()) {
            *a += v;
        }
    }
    SampledFunction::from_vec_unchecked(*grid, acc)
}

/// `sum_rho coeff_rho prod_j T_{sigma_j^rho}(f_j)`.
pub fn apply_product(terms: &[ProductTerm], inputs: &[&SampledFunction], cutoff: Cutoff) -> Result<SampledFunction> {
    let first = inputs.first().ok_or(Error::Arity { expected: 1, got: 0 })?;
    let grid = *first.grid();
    for t in terms {
        check_inputs(&grid, t.factors.len(), inputs)?;
        if let Some(f) = t.factors.iter().find(|f| f.arity() != 1) {
            return Err(Error::Arity { expected: 1, got: f.arity() });
        }
    }
    let mut keys: Vec<(usize, String)> = Vec::new();
    for t in terms {
        for (j, f) in t.factors.iter().enumerate() {
            let key = (j, f.name().to_string());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    let lookup: HashMap<(usize, String), &Symbol> = terms
        .iter()
        .flat_map(|t| t.factors.iter().enumerate().map(|(j, f)| ((j, f.name().to_string()), f)))
        .collect();
    let linear: Vec<SampledFunction> =
        keys.par_iter().map(|k| apply_linear(lookup[k], inputs[k.0], cutoff)).collect::<Result<_>>()?;
    let cache: HashMap<&(usize, String), &SampledFunction> = keys.iter().zip(&linear).collect();
    let outs: Vec<SampledFunction> = terms
        .par_iter()
        .map(|t| {
            let mut acc = vec![Complex64::new(t.coeff, 0.0); grid.len()];
            for (j, f) in t.factors.iter().enumerate() {
                let lin = cache[&(j, f.name().to_string())];
                for (a, v) in acc.iter_mut().zip(lin.values()) {
                    *a *= v;
                }
            }
            SampledFunction::from_vec_unchecked(grid, acc)
        })
        .collect();
    Ok(accumulate_terms(&grid, outs))
}

/// `sum_rho coeff_rho prod_g T_{sigma_{I_g}}((f_l)_{l in I_g})`, each group through the general path.
pub fn apply_mixed(
    terms: &[MixedTerm],
    inputs: &[&SampledFunction],
    cutoff: Cutoff,
    budget: u64,
) -> Result<SampledFunction> {
    let first = inputs.first().ok_or(Error::Arity { expected: 1, got: 0 })?;
    let grid = *first.grid();
    for t in terms {
        check_inputs(&grid, t.partition.arity(), inputs)?;
    }
    let outs: Vec<SampledFunction> = terms
        .par_iter()
        .map(|t| -> Result<SampledFunction> {
            let mut acc: Option<Vec<Complex64>> = None;
            for (g, sym) in t.partition.groups().iter().zip(t.partition.symbols()) {
                let group_inputs: Vec<&SampledFunction> = g.iter().map(|&l| inputs[l]).collect();
                let (out, _) = apply_general_parts(sym, &grid, cutoff, budget, &group_inputs)?;
                acc = Some(match acc {
                    None => out.values().to_vec(),
                    Some(mut a) => {
                        for (x, v) in a.iter_mut().zip(out.values()) {
                            *x *= v;
                        }
                        a
                    }
                });
            }
            let mut a = acc.expect("partition has at least one group");
            for x in a.iter_mut() {
                *x *= t.coeff;
            }
            Ok(SampledFunction::from_vec_unchecked(grid, a))
        })
        .collect::<Result<_>>()?;
    Ok(accumulate_terms(&grid, outs))
}

/// Apply along the structural fast path of the symbol's kind. A mixed symbol with a
/// single unit-coefficient term and a single group goes straight to the general path
/// on its group symbol.
pub fn apply(op: &MultilinearOperator, inputs: &[&SampledFunction]) -> Result<(SampledFunction, OutputSpectrum)> {
    match op.symbol.kind() {
        SymbolKind::General => apply_general(op, inputs),
        SymbolKind::Product(terms) => {
            let out = apply_product(terms, inputs, op.cutoff)?;
            let spec = dft(&out);
            Ok((out, spec))
        }
        SymbolKind::Mixed(terms) => {
            if op.symbol.effective_kind_tag() == KindTag::General && terms[0].coeff == 1.0 {
                let sym = &terms[0].partition.symbols()[0];
                let group = &terms[0].partition.groups()[0];
                let ordered: Vec<&SampledFunction> = group.iter().map(|&l| inputs[l]).collect();
                check_inputs(&op.grid, op.arity(), inputs)?;
                return apply_general_parts(sym, &op.grid, op.cutoff, op.budget, &ordered);
            }
            let out = apply_mixed(terms, inputs, op.cutoff, op.budget)?;
            let spec = dft(&out);
            Ok((out, spec))
        }
    }
}

const MOMENT_HALF_WIDTH: usize = 4;

/// `\int x^alpha T dx = (-2 pi i)^{-|alpha|} d^alpha g(0)`, the derivative taken with
/// 9-point central stencils on the frequency lattice (order at most 4 per axis).
pub fn spectral_moment(g: &OutputSpectrum, alpha: &[usize]) -> Result<Complex64> {
    let grid = g.grid();
    let n = grid.n();
    if alpha.len() != n {
        return Err(Error::Arity { expected: n, got: alpha.len() });
    }
    if alpha.iter().any(|&a| a > 4) {
        return Err(Error::Precondition("moment order per axis limited to 4".into()));
    }
    if grid.points_per_axis() < 2 * MOMENT_HALF_WIDTH + 2 {
        return Err(Error::Precondition("grid too small for the moment stencil".into()));
    }
    let order: usize = alpha.iter().sum();
    if order == 0 {
        return Ok(g.coefficients()[g.zero_index()]);
    }
    let w = central_weights(MOMENT_HALF_WIDTH, 4);
    let h = (grid.points_per_axis() / 2) as i64;
    let hw = MOMENT_HALF_WIDTH as i64;
    let dxi = grid.frequency_spacing();
    let axis_weights = |a: usize| -> Vec<(i64, f64)> {
        let d = alpha[a];
        (-hw..=hw).map(|o| (o, w[d][(o + hw) as usize] / dxi.powi(d as i32))).collect()
    };
    let w0 = axis_weights(0);
    let mut acc = NeumaierComplex::new();
    if n == 1 {
        for &(o, c) in &w0 {
            acc.add(g.coefficients()[(h + o) as usize] * c);
        }
    } else {
        let w1 = axis_weights(1);
        for &(o0, c0) in &w0 {
            for &(o1, c1) in &w1 {
                let q = grid.flat_index([(h + o0) as usize, (h + o1) as usize]);
                acc.add(g.coefficients()[q] * (c0 * c1));
            }
        }
    }
    let factor = Complex64::new(0.0, -2.0 * std::f64::consts::PI).powu(order as u32);
    Ok(acc.value() / factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, pointwise_product, sample, sample_real};
    use crate::symbols::{builtin_symbol, constant_one, sigma1_like};

    fn bump(c: f64, w: f64) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| {
            let u = (x[0] - c) / w;
            if u.abs() < 1.0 {
                (-1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        }
    }

    fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm())) / scale
    }

    #[test]
    fn constant_symbol_gives_pointwise_product() {
        let g = make_grid(1, 4.0, 64).unwrap();
        let f = sample_real(bump(0.3, 1.5), &g);
        let h = sample(|x| Complex64::new(x[0].cos(), 0.2 * x[0]), &g);
        let op = MultilinearOperator::new(constant_one(2, 1), g).unwrap();
        let (out, _) = apply_general(&op, &[&f, &h]).unwrap();
        let want = pointwise_product(&f, &h).unwrap();
        assert!(max_rel(out.values(), want.values()) < 1e-10);
    }

    #[test]
    fn zero_input_gives_zero() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let f = sample_real(bump(0.0, 1.0), &g);
        let z = SampledFunction::zeros(g);
        let op = MultilinearOperator::new(builtin_symbol("sigma1").unwrap(), g).unwrap();
        let (out, _) = apply_general(&op, &[&z, &f, &f]).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn general_matches_oracle_on_sigma1() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let f1 = sample_real(bump(-0.5, 1.5), &g);
        let f2 = sample_real(bump(0.25, 2.0), &g);
        let f3 = sample(|x| Complex64::new(bump(0.0, 2.5)(x), 0.3 * bump(1.0, 1.0)(x)), &g);
        let op = MultilinearOperator::new(builtin_symbol("sigma1").unwrap(), g).unwrap();
        let (out, _) = apply_general(&op, &[&f1, &f2, &f3]).unwrap();
        let js = [0usize, 7, 13, 16, 30];
        let pts: Vec<Vec<f64>> = js.iter().map(|&j| vec![g.point(j)[0]]).collect();
        let oracle = apply_oracle(&op, &[&f1, &f2, &f3], &pts).unwrap();
        let got: Vec<Complex64> = js.iter().map(|&j| out.values()[j]).collect();
        assert!(max_rel(&got, &oracle) < 1e-10);
    }

    #[test]
    fn oracle_of_constant_symbol_on_constants() {
        let g = make_grid(1, 2.0, 16).unwrap();
        let one = sample_real(|_| 1.0, &g);
        let op = MultilinearOperator::new(constant_one(2, 1), g).unwrap();
        let v = apply_oracle(&op, &[&one, &one], &[vec![0.0], vec![0.75]]).unwrap();
        for z in v {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = make_grid(1, 4.0, 512).unwrap();
        let f = SampledFunction::zeros(g);
        let op = MultilinearOperator::new(builtin_symbol("sigma1").unwrap(), g).unwrap();
        assert!(matches!(apply_general(&op, &[&f, &f, &f]), Err(Error::CostBudget { .. })));
    }

    #[test]
    fn product_and_general_agree_on_sigma3() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let fs: Vec<SampledFunction> = [-0.5, 0.2, 0.7].iter().map(|&c| sample_real(bump(c, 1.7), &g)).collect();
        let refs: Vec<&SampledFunction> = fs.iter().collect();
        let s3 = builtin_symbol("sigma3").unwrap();
        let op = MultilinearOperator::new(s3.clone(), g).unwrap();
        let (general, _) = apply_general(&op, &refs).unwrap();
        let SymbolKind::Product(terms) = s3.kind() else { panic!() };
        let product = apply_product(terms, &refs, Cutoff::None).unwrap();
        assert!(max_rel(product.values(), general.values()) < 1e-9);
    }

    #[test]
    fn cancelling_product_terms_vanish() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let f = sample_real(bump(0.0, 1.0), &g);
        let one = constant_one(1, 1);
        let t = ProductTerm { coeff: 1.0, factors: vec![one.clone(), one.clone()] };
        let neg = ProductTerm { coeff: -1.0, ..t.clone() };
        assert_eq!(apply_product(&[t, neg], &[&f, &f], Cutoff::None).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn mixed_sigma4_matches_general() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let fs: Vec<SampledFunction> = [-0.3, 0.4, 0.0].iter().map(|&c| sample_real(bump(c, 1.9), &g)).collect();
        let refs: Vec<&SampledFunction> = fs.iter().collect();
        let s4 = builtin_symbol("sigma4").unwrap();
        let op = MultilinearOperator::new(s4.clone(), g).unwrap();
        let (general, _) = apply_general(&op, &refs).unwrap();
        let (mixed, _) = apply(&op, &refs).unwrap();
        assert!(max_rel(mixed.values(), general.values()) < 1e-9);
    }

    #[test]
    fn degenerate_partition_is_general() {
        let g = make_grid(1, 4.0, 64).unwrap();
        let f = sample_real(bump(0.1, 1.3), &g);
        let h = sample_real(bump(-0.4, 0.9), &g);
        let s = sigma1_like("b", 2, 1);
        let mixed = crate::symbols::Symbol::mixed(
            "b_mixed",
            vec![MixedTerm {
                coeff: 1.0,
                partition: crate::symbols::Partition::new(vec![vec![0, 1]], vec![s.clone()], 2).unwrap(),
            }],
        )
        .unwrap();
        let a = apply(&MultilinearOperator::new(s, g).unwrap(), &[&f, &h]).unwrap();
        let b = apply(&MultilinearOperator::new(mixed.clone(), g).unwrap(), &[&f, &h]).unwrap();
        assert_eq!(a.0, b.0);
        let SymbolKind::Mixed(terms) = mixed.kind() else { panic!() };
        let c = apply_mixed(terms, &[&f, &h], Cutoff::None, DEFAULT_BUDGET).unwrap();
        assert_eq!(a.0, c);
    }

    #[test]
    fn singleton_groups_with_unit_symbols_give_products() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let fs: Vec<SampledFunction> = [-0.3, 0.4, 0.0].iter().map(|&c| sample_real(bump(c, 1.9), &g)).collect();
        let refs: Vec<&SampledFunction> = fs.iter().collect();
        let one = constant_one(1, 1);
        let term = MixedTerm {
            coeff: 1.0,
            partition: crate::symbols::Partition::new(vec![vec![0], vec![1], vec![2]], vec![one.clone(), one.clone(), one], 3)
                .unwrap(),
        };
        let out = apply_mixed(&[term], &refs, Cutoff::None, DEFAULT_BUDGET).unwrap();
        let want = pointwise_product(&pointwise_product(&fs[0], &fs[1]).unwrap(), &fs[2]).unwrap();
        assert!(max_rel(out.values(), want.values()) < 1e-12);
    }

    #[test]
    fn spectral_moment_zero_is_dc() {
        let g = make_grid(1, 4.0, 64).unwrap();
        let f = sample_real(bump(0.5, 1.0), &g);
        let s = dft(&f);
        assert_eq!(spectral_moment(&s, &[0]).unwrap(), s.coefficients()[s.zero_index()]);
    }

    #[test]
    fn spectral_moment_matches_quadrature() {
        let g = make_grid(1, 32.0, 1024).unwrap();
        let f = sample_real(|x| (-(x[0] - 0.7).powi(2)).exp(), &g);
        let s = dft(&f);
        for d in 1..=3usize {
            let quad: f64 = (0..g.len()).map(|j| g.point(j)[0].powi(d as i32) * f.values()[j].re).sum::<f64>() * g.spacing();
            let sm = spectral_moment(&s, &[d]).unwrap();
            assert!((sm.re - quad).abs() < 1e-5 * (1.0 + quad.abs()), "d={d} {sm} vs {quad}");
            assert!(sm.im.abs() < 1e-8);
        }
    }

    #[test]
    fn smooth_cutoff_profile() {
        let c = Cutoff::Smooth(2.0);
        assert_eq!(c.weight(&[0.9]), 1.0);
        assert_eq!(c.weight(&[2.0]), 0.0);
        assert!((c.weight(&[1.5]) - 0.5).abs() < 1e-12);
        assert_eq!(Cutoff::Sharp(1.0).weight(&[1.01]), 0.0);
    }
}
