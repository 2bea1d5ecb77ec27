//! Random finite atomic sums and the boundedness ratio
//! `|| T(f_1, ..., f_m) ||_{H^p} / prod_l || sum_k lambda_{l,k} chi_{Q_{l,k}} ||_{p_l}`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::atoms::{make_atom, make_infinity_atom, Cube, FiniteAtomicSum};
use crate::error::{Error, Result};
use crate::grid::{lp_quasinorm, Grid, SampledFunction};
use crate::maximal::{hp_quasinorm, BumpProfile, ScaleLadder};
use crate::operators::{apply, MultilinearOperator};
use crate::verify::indices::{exponent_list, IndexData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDraw {
    pub lambda: f64,
    pub cube: Cube,
    pub seed: u64,
}

/// One input slot: atoms for finite `p_l`, a single Gaussian (infinity, infinity)-atom
/// `0.5 exp(-|x|^2 / w^2)` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SlotDraw {
    Atoms {
        #[serde(with = "exponent_scalar")]
        p: f64,
        big_n: usize,
        atoms: Vec<AtomDraw>,
    },
    Bounded {
        width: f64,
    },
}

mod exponent_scalar {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::exponent_list::serialize(std::slice::from_ref(v), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v = super::exponent_list::deserialize(d)?;
        v.first().copied().ok_or_else(|| serde::de::Error::custom("empty exponent"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawParams {
    pub max_atoms: usize,
    pub min_level: i32,
    pub max_level: i32,
    /// Room left for dilating every cube about the origin by this factor.
    pub dilation: f64,
}

/// Largest admissible per-axis `|center|` for a cube of side `ell`. After dilation by `d`
/// the cube must keep its `Q**` plus a margin inside the box, and the union of all
/// supports drawn this way has diameter at most `L/4`.
pub fn center_bound(grid: &Grid, ell: f64, d: f64) -> f64 {
    let l = grid.half_width();
    let n = grid.n() as f64;
    let reach = (4.5 * n + 1.0) * ell * d;
    let cluster = l / (8.0 * n.sqrt() * d) - 0.5 * ell;
    ((l - reach) / d).min(cluster)
}

/// Grid-aligned random cube of side `2^level`.
pub fn draw_cube(rng: &mut impl Rng, grid: &Grid, level: i32, d: f64) -> Result<Cube> {
    let ell = 2f64.powi(level);
    let bound = center_bound(grid, ell, d);
    if bound < 0.0 {
        return Err(Error::Precondition(format!("a cube of side {ell} does not fit after dilation by {d}")));
    }
    let cells = (bound / grid.spacing()).floor() as i64;
    let center = (0..grid.n()).map(|_| rng.gen_range(-cells..=cells) as f64 * grid.spacing()).collect();
    Cube::new(center, ell)
}

pub fn draw_slot(rng: &mut impl Rng, grid: &Grid, p: f64, big_n: usize, params: &DrawParams) -> Result<SlotDraw> {
    if p.is_infinite() {
        return Ok(SlotDraw::Bounded { width: rng.gen_range(0.5..1.0) });
    }
    let count = rng.gen_range(1..=params.max_atoms.max(1));
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        let level = rng.gen_range(params.min_level..=params.max_level);
        let cube = draw_cube(rng, grid, level, params.dilation)?;
        let lambda = 1.0 - rng.gen::<f64>();
        atoms.push(AtomDraw { lambda, cube, seed: rng.gen() });
    }
    Ok(SlotDraw::Atoms { p, big_n, atoms })
}

impl SlotDraw {
    /// Every cube and the Gaussian width scaled about the origin by `d`.
    pub fn dilated(&self, d: f64) -> SlotDraw {
        match self {
            SlotDraw::Atoms { p, big_n, atoms } => SlotDraw::Atoms {
                p: *p,
                big_n: *big_n,
                atoms: atoms
                    .iter()
                    .map(|a| AtomDraw { lambda: a.lambda, cube: a.cube.dilated_about_origin(d), seed: a.seed })
                    .collect(),
            },
            SlotDraw::Bounded { width } => SlotDraw::Bounded { width: width * d },
        }
    }

    pub fn exponent(&self) -> f64 {
        match self {
            SlotDraw::Atoms { p, .. } => *p,
            SlotDraw::Bounded { .. } => f64::INFINITY,
        }
    }

    pub fn realize(&self, grid: &Grid) -> Result<FiniteAtomicSum> {
        match self {
            SlotDraw::Atoms { p, big_n, atoms } => {
                let built = atoms
                    .iter()
                    .map(|a| Ok((a.lambda, make_atom(&a.cube, *p, *big_n, a.seed, grid)?)))
                    .collect::<Result<Vec<_>>>()?;
                FiniteAtomicSum::from_atoms(grid, built)
            }
            SlotDraw::Bounded { width } => {
                let w2 = width * width;
                let a = make_infinity_atom(grid, |x| {
                    Complex64::new(0.5 * (-x.iter().map(|t| t * t).sum::<f64>() / w2).exp(), 0.0)
                })?;
                FiniteAtomicSum::from_atoms(grid, vec![(1.0, a)])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessRatio {
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when both sides vanish.
    pub ratio: Option<f64>,
}

pub fn boundedness_ratio(
    op: &MultilinearOperator,
    idx: &IndexData,
    sums: &[FiniteAtomicSum],
    phi: &BumpProfile,
    ladder: &ScaleLadder,
) -> Result<BoundednessRatio> {
    if sums.len() != op.arity() || idx.m() != op.arity() {
        return Err(Error::Arity { expected: op.arity(), got: sums.len() });
    }
    let inputs: Vec<&SampledFunction> = sums.iter().map(|s| s.realized()).collect();
    let (t, _) = apply(op, &inputs)?;
    let lhs = hp_quasinorm(&t, idx.p, phi, ladder)?;
    let mut rhs = 1.0;
    for (s, &p) in sums.iter().zip(&idx.exponents) {
        rhs *= lp_quasinorm(s.majorant(), p)?;
    }
    let ratio = if rhs == 0.0 { None } else { Some(lhs / rhs) };
    Ok(BoundednessRatio { lhs, rhs, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleInvariance {
    pub factor: f64,
    pub base: BoundednessRatio,
    pub dilated: BoundednessRatio,
    /// `|ratio(dilated) - ratio(base)| / ratio(base)`.
    pub deviation: Option<f64>,
}

/// Compare the boundedness ratio of the drawn sums with that of their dilates by `factor`.
/// Only meaningful for symbols homogeneous of degree zero.
pub fn scale_invariance_test(
    op: &MultilinearOperator,
    idx: &IndexData,
    slots: &[SlotDraw],
    factor: f64,
    phi: &BumpProfile,
    ladder: &ScaleLadder,
) -> Result<ScaleInvariance> {
    if !op.symbol().is_homogeneous() {
        return Err(Error::Precondition(format!(
            "symbol `{}` is not homogeneous of degree zero; scale invariance does not apply",
            op.symbol().name()
        )));
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Precondition(format!("dilation factor {factor} must be positive")));
    }
    let grid = *op.grid();
    let realize = |ss: &[SlotDraw]| -> Result<Vec<FiniteAtomicSum>> {
        ss.iter()
            .map(|s| {
                s.realize(&grid).map_err(|e| match e {
                    Error::Atom(msg) => Error::Precondition(format!("scale out of resolvable range: {msg}")),
                    other => other,
                })
            })
            .collect()
    };
    let base = boundedness_ratio(op, idx, &realize(slots)?, phi, ladder)?;
    let dilated = if factor == 1.0 {
        base
    } else {
        let d: Vec<SlotDraw> = slots.iter().map(|s| s.dilated(factor)).collect();
        boundedness_ratio(op, idx, &realize(&d)?, phi, ladder)?
    };
    let deviation = match (base.ratio, dilated.ratio) {
        (Some(a), Some(b)) if a > 0.0 => Some((b - a).abs() / a),
        _ => None,
    };
    Ok(ScaleInvariance { factor, base, dilated, deviation })
}
