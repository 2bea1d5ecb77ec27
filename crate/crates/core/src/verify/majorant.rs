//! Local estimates, pointwise majorants of `M_phi T(a)` and the Fefferman–Stein
//! type inequality for sums of cube maximal functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atoms::{indicator, Atom, Cube};
use crate::error::{Error, Result};
use crate::grid::{lp_quasinorm, Grid, SampledFunction};
use crate::maximal::{hl_maximal, power_maximal, smooth_maximal, BumpProfile, ScaleLadder};
use crate::operators::{apply, apply_general, apply_linear, MultilinearOperator};
use crate::symbols::{KindTag, SymbolKind};
use crate::verify::indices::IndexData;

/// Where a majorant formula is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    OutsideStarStar,
    Everywhere,
    InsideStarStar,
}

impl Region {
    fn admits(&self, q1_starstar: &Cube, x: &[f64]) -> bool {
        match self {
            Region::OutsideStarStar => !q1_starstar.contains(x),
            Region::Everywhere => true,
            Region::InsideStarStar => q1_starstar.contains(x),
        }
    }
}

/// `M chi_Q` for each cube.
pub fn cube_maximals(cubes: &[Cube], grid: &Grid, ladder: &ScaleLadder) -> Result<Vec<SampledFunction>> {
    cubes.iter().map(|q| hl_maximal(&indicator(q, grid), ladder)).collect()
}

/// Minimum of `f` over the grid points of the closed cube `q` (the nearest point if none).
pub fn inf_over(f: &SampledFunction, q: &Cube) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let mut best = f64::INFINITY;
    for (j, v) in f.values().iter().enumerate() {
        if q.contains(&grid.point(j)[..n]) {
            best = best.min(v.re);
        }
    }
    if best.is_infinite() {
        if let Some(j) = grid.nearest_index(&q.center) {
            best = f.values()[j].re;
        }
    }
    best
}

fn smallest(atoms: &[&Atom]) -> usize {
    let mut k = 0;
    for (i, a) in atoms.iter().enumerate() {
        if a.support_cube().side < atoms[k].support_cube().side {
            k = i;
        }
    }
    k
}

fn outputs(op: &MultilinearOperator, atoms: &[&Atom]) -> Result<SampledFunction> {
    if atoms.len() != op.arity() {
        return Err(Error::Arity { expected: op.arity(), got: atoms.len() });
    }
    let inputs: Vec<&SampledFunction> = atoms.iter().map(|a| a.values()).collect();
    Ok(apply(op, &inputs)?.0)
}

fn restricted_norm(f: &SampledFunction, q: &Cube, r: f64) -> Result<f64> {
    let grid = *f.grid();
    let n = grid.n();
    let vals = f
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| if q.contains(&grid.point(j)[..n]) { *v } else { Complex64::new(0.0, 0.0) })
        .collect();
    lp_quasinorm(&SampledFunction::new(grid, vals)?, r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub r: f64,
    /// `|| T chi_{Q1**} ||_r`.
    pub lhs_a: f64,
    /// `|| M(T) chi_{Q1**} ||_r`.
    pub lhs_b: f64,
    pub rhs: f64,
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub vacuous: bool,
}

/// Local `L^r` bound on the doubled-star cube of the smallest atom:
/// `|Q1|^{1/r} prod_l inf_{Q1*} M chi_{Q_l}^{(n+N+1)/(mn)}`.
pub fn check_local_estimate(
    op: &MultilinearOperator,
    atoms: &[&Atom],
    r: f64,
    big_n: usize,
    ladder: &ScaleLadder,
) -> Result<LocalReport> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::Exponent(format!("local estimate needs r in (1, inf), got {r}")));
    }
    let t = outputs(op, atoms)?;
    let grid = *op.grid();
    let n = grid.n();
    let m = atoms.len();
    let q1 = atoms[smallest(atoms)].support_cube();
    let window = q1.starstar();
    let lhs_a = restricted_norm(&t, &window, r)?;
    let lhs_b = restricted_norm(&hl_maximal(&t, ladder)?, &window, r)?;
    let cubes: Vec<Cube> = atoms.iter().map(|a| a.support_cube()).collect();
    let e = (n + big_n + 1) as f64 / (m * n) as f64;
    let star = q1.star();
    let mut rhs = q1.volume().powf(1.0 / r);
    for mq in cube_maximals(&cubes, &grid, ladder)? {
        rhs *= inf_over(&mq, &star).powf(e);
    }
    let vacuous = lhs_a == 0.0 && lhs_b == 0.0;
    let (ratio_a, ratio_b) = if vacuous { (0.0, 0.0) } else { (lhs_a / rhs, lhs_b / rhs) };
    Ok(LocalReport { r, lhs_a, lhs_b, rhs, ratio_a, ratio_b, vacuous })
}

/// Right-hand side of the kind-specific pointwise majorant and the region where it is asserted.
pub fn majorant_field(
    op: &MultilinearOperator,
    atoms: &[&Atom],
    idx: &IndexData,
    ladder: &ScaleLadder,
) -> Result<(SampledFunction, Region)> {
    let grid = *op.grid();
    let n = grid.n();
    let m = atoms.len();
    if m != op.arity() || idx.m() != m {
        return Err(Error::Arity { expected: op.arity(), got: m });
    }
    let cubes: Vec<Cube> = atoms.iter().map(|a| a.support_cube()).collect();
    let mchi = cube_maximals(&cubes, &grid, ladder)?;
    let k1 = smallest(atoms);
    let star = cubes[k1].star();
    let e = idx.decay_exponent();
    let near = (n + idx.s + 1) as f64 / n as f64;
    let len = grid.len();
    let mut rhs = vec![0.0f64; len];

    let kind = op.symbol().effective_kind_tag();
    let region = match kind {
        KindTag::General => {
            let tail = (idx.big_n as f64 - idx.s as f64) / (m * n) as f64;
            let c: f64 = mchi.iter().map(|f| inf_over(f, &star).powf(tail)).product();
            for (j, out) in rhs.iter_mut().enumerate() {
                let far: f64 = mchi.iter().map(|f| f.values()[j].re.powf(e)).product();
                *out = far + mchi[k1].values()[j].re.powf(near) * c;
            }
            Region::OutsideStarStar
        }
        KindTag::Product => {
            let SymbolKind::Product(terms) = op.symbol().kind() else {
                return Err(Error::Precondition("product majorant on a non-product symbol".into()));
            };
            for term in terms {
                // B_l = M chi_{Q_l}^e (1 + M^(m) T_{sigma_l}(a_l))
                let mut b = Vec::with_capacity(m);
                for (l, factor) in term.factors.iter().enumerate() {
                    let tl = apply_linear(factor, atoms[l].values(), op.cutoff())?;
                    let pm = power_maximal(&tl, m as f64, ladder)?;
                    let vals: Vec<f64> = mchi[l]
                        .values()
                        .iter()
                        .zip(pm.values())
                        .map(|(c, p)| c.re.powf(e) * (1.0 + p.re))
                        .collect();
                    b.push(SampledFunction::from_real(grid, vals)?);
                }
                let c: f64 = b.iter().map(|f| inf_over(f, &star)).product();
                for (j, out) in rhs.iter_mut().enumerate() {
                    let far: f64 = b.iter().map(|f| f.values()[j].re).product();
                    *out += term.coeff.abs() * (far + mchi[k1].values()[j].re.powf(near) * c);
                }
            }
            Region::Everywhere
        }
        KindTag::Mixed => {
            let SymbolKind::Mixed(terms) = op.symbol().kind() else {
                return Err(Error::Precondition("mixed majorant on a non-mixed symbol".into()));
            };
            for term in terms {
                let groups = term.partition.groups();
                let big_g = groups.len() as f64;
                let mut acc = vec![1.0f64; len];
                for (g, sym) in groups.iter().zip(term.partition.symbols()) {
                    let lg = g
                        .iter()
                        .copied()
                        .min_by(|&a, &b| cubes[a].side.total_cmp(&cubes[b].side))
                        .expect("groups are nonempty");
                    let group_op = MultilinearOperator::new(sym.clone(), grid)?
                        .with_cutoff(op.cutoff())
                        .with_budget(op.budget());
                    let group_inputs: Vec<&SampledFunction> = g.iter().map(|&l| atoms[l].values()).collect();
                    let (tg, _) = apply_general(&group_op, &group_inputs)?;
                    let pm = power_maximal(&tg, big_g, ladder)?;
                    let eg = e * g.len() as f64;
                    for (j, a) in acc.iter_mut().enumerate() {
                        let first = mchi[lg].values()[j].re.powf(eg) * pm.values()[j].re;
                        let second: f64 = g.iter().map(|&l| mchi[l].values()[j].re.powf(e)).product();
                        *a *= first + second;
                    }
                }
                for (out, a) in rhs.iter_mut().zip(&acc) {
                    *out += term.coeff.abs() * a;
                }
            }
            Region::InsideStarStar
        }
    };
    Ok((SampledFunction::from_real(grid, rhs)?, region))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantReport {
    pub kind: KindTag,
    pub region: Region,
    pub sup_ratio: f64,
    pub lhs_max: f64,
    pub region_points: usize,
    pub excluded_points: usize,
    pub vacuous: bool,
}

/// `sup M_phi T(a) / RHS` over the region of the kind's majorant, skipping points where
/// the RHS is below `1e3` times the noise floor `1e2 eps max(M_phi T)`.
pub fn check_pointwise_majorant(
    op: &MultilinearOperator,
    atoms: &[&Atom],
    idx: &IndexData,
    phi: &BumpProfile,
    ladder: &ScaleLadder,
) -> Result<MajorantReport> {
    let grid = *op.grid();
    let n = grid.n();
    let t = outputs(op, atoms)?;
    let lhs = smooth_maximal(&t, phi, ladder)?;
    let (rhs, region) = majorant_field(op, atoms, idx, ladder)?;
    let q1 = atoms[smallest(atoms)].support_cube().starstar();
    let lhs_max = lhs.max_abs();
    let threshold = 1e3 * 1e2 * f64::EPSILON * lhs_max;
    let mut sup: f64 = 0.0;
    let mut region_points = 0;
    let mut excluded_points = 0;
    for (j, (l, r)) in lhs.values().iter().zip(rhs.values()).enumerate() {
        if !region.admits(&q1, &grid.point(j)[..n]) {
            continue;
        }
        region_points += 1;
        if r.re < threshold || r.re <= 0.0 {
            excluded_points += 1;
            continue;
        }
        sup = sup.max(l.re / r.re);
    }
    Ok(MajorantReport {
        kind: op.symbol().effective_kind_tag(),
        region,
        sup_ratio: sup,
        lhs_max,
        region_points,
        excluded_points,
        vacuous: lhs_max == 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsReport {
    pub gamma: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub vacuous: bool,
}

/// `|| sum lambda_k (M chi_{Q_k})^gamma ||_p / || sum lambda_k chi_{Q_k} ||_p`.
pub fn check_fs_inequality(
    cubes: &[Cube],
    lambdas: &[f64],
    gamma: f64,
    p: f64,
    grid: &Grid,
    ladder: &ScaleLadder,
) -> Result<FsReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Exponent(format!("p must be in (0, inf), got {p}")));
    }
    if !(gamma > 1.0f64.max(1.0 / p)) {
        return Err(Error::Exponent(format!("gamma = {gamma} must exceed max(1, 1/p) = {}", 1.0f64.max(1.0 / p))));
    }
    if cubes.len() != lambdas.len() {
        return Err(Error::Arity { expected: cubes.len(), got: lambdas.len() });
    }
    if lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::Precondition("coefficients must be finite and nonnegative".into()));
    }
    let mut left = vec![0.0f64; grid.len()];
    let mut right = vec![0.0f64; grid.len()];
    for (q, &lambda) in cubes.iter().zip(lambdas) {
        if lambda == 0.0 {
            continue;
        }
        let chi = indicator(q, grid);
        let mchi = hl_maximal(&chi, ladder)?;
        for ((a, b), (c, mc)) in left.iter_mut().zip(right.iter_mut()).zip(chi.values().iter().zip(mchi.values())) {
            *a += lambda * mc.re.powf(gamma);
            *b += lambda * c.re;
        }
    }
    let lhs = lp_quasinorm(&SampledFunction::from_real(*grid, left)?, p)?;
    let rhs = lp_quasinorm(&SampledFunction::from_real(*grid, right)?, p)?;
    let vacuous = rhs == 0.0;
    Ok(FsReport { gamma, p, lhs, rhs, ratio: if vacuous { 0.0 } else { lhs / rhs }, vacuous })
}
