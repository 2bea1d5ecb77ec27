//! Vanishing moments of `T(a_1, ..., a_m)` up to order `s`.

use serde::{Deserialize, Serialize};

use crate::atoms::Atom;
use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::operators::{apply, spectral_moment, MultilinearOperator};
use crate::sum::{Neumaier, NeumaierComplex};
use crate::symbols::multi_indices;

pub const DEFAULT_CANCELLATION_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResidual {
    pub alpha: Vec<usize>,
    /// Moment read off the output spectrum at the origin, normalized.
    pub spectral: f64,
    /// Windowed quadrature of `x^alpha T`, normalized.
    pub spatial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub s: usize,
    pub l1_norm: f64,
    pub scale: f64,
    pub residuals: Vec<MomentResidual>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub vacuous: bool,
    pub pass: bool,
}

/// Spatial moments over the window where `|T|` exceeds `1e-13` of its maximum.
fn spatial_moment(t: &SampledFunction, alpha: &[usize]) -> f64 {
    let grid = t.grid();
    let floor = 1e-13 * t.max_abs();
    let mut acc = NeumaierComplex::new();
    for (j, v) in t.values().iter().enumerate() {
        if v.norm() <= floor {
            continue;
        }
        let x = grid.point(j);
        let mono: f64 = alpha.iter().enumerate().map(|(a, &e)| x[a].powi(e as i32)).product();
        acc.add(v * mono);
    }
    (acc.value() * grid.cell_volume()).norm()
}

/// Residuals normalized by `||T||_1 * l^|alpha|`, `l` the smallest cube side.
pub fn check_cancellation(op: &MultilinearOperator, atoms: &[&Atom], s: usize, tolerance: f64) -> Result<CancellationReport> {
    if atoms.len() != op.arity() {
        return Err(Error::Arity { expected: op.arity(), got: atoms.len() });
    }
    if s > 4 {
        return Err(Error::Precondition(format!("moment order {s} beyond the stencil range")));
    }
    let inputs: Vec<&SampledFunction> = atoms.iter().map(|a| a.values()).collect();
    let (t, g) = apply(op, &inputs)?;
    let grid = op.grid();
    let mut l1 = Neumaier::new();
    for v in t.values() {
        l1.add(v.norm());
    }
    let l1 = l1.value() * grid.cell_volume();
    let scale = atoms.iter().map(|a| a.support_cube().side).fold(f64::INFINITY, f64::min);
    if l1 == 0.0 {
        return Ok(CancellationReport {
            s,
            l1_norm: 0.0,
            scale,
            residuals: Vec::new(),
            max_residual: 0.0,
            tolerance,
            vacuous: true,
            pass: true,
        });
    }
    let mut residuals = Vec::new();
    for alpha in multi_indices(grid.n(), s) {
        let order: usize = alpha.iter().sum();
        let norm = l1 * scale.powi(order as i32);
        residuals.push(MomentResidual {
            spectral: spectral_moment(&g, &alpha)?.norm() / norm,
            spatial: spatial_moment(&t, &alpha) / norm,
            alpha,
        });
    }
    let max_residual = residuals.iter().map(|r| r.spectral.max(r.spatial)).fold(0.0, f64::max);
    Ok(CancellationReport {
        s,
        l1_norm: l1,
        scale,
        residuals,
        max_residual,
        tolerance,
        vacuous: false,
        pass: max_residual < tolerance,
    })
}
