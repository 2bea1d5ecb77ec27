//! Far-field decay of `T(a_1, ..., a_m)` away from the cubes in `Lambda`.

use serde::{Deserialize, Serialize};

use crate::atoms::Atom;
use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::operators::{apply, MultilinearOperator};

pub const SLOPE_SLACK: f64 = 0.75;
pub const RATIO_SPREAD: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub y: Vec<f64>,
    pub distance: f64,
    pub value: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    Pass,
    Fail,
    BelowNoiseFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub big_n: usize,
    pub bound: f64,
    pub slope: f64,
    pub stderr: f64,
    pub probes: Vec<DecayProbe>,
    pub excluded: usize,
    pub ratio_sup: f64,
    pub ratio_median: f64,
    pub verdict: DecayVerdict,
}

impl DecayReport {
    pub fn pass(&self) -> bool {
        self.verdict == DecayVerdict::Pass
    }
}

/// Least-squares line through `(x, y)`: slope and its standard error.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if xs.len() <= 2 {
        return (slope, 0.0);
    }
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (slope, (rss / (k - 2.0) / sxx).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Fit `log |T(y)|` against `log sum_{k in Lambda} |y - c_k|` over the probes.
/// `lambda` holds zero-based atom indices; `big_n` is the moment order the bound uses.
pub fn check_decay_lemma(
    op: &MultilinearOperator,
    atoms: &[&Atom],
    lambda: &[usize],
    probes: &[Vec<f64>],
    big_n: usize,
) -> Result<DecayReport> {
    let inputs: Vec<&SampledFunction> = atoms.iter().map(|a| a.values()).collect();
    let (t, _) = apply(op, &inputs)?;
    decay_from_output(&t, atoms, lambda, probes, big_n)
}

/// Same as [`check_decay_lemma`] on an already computed output.
pub fn decay_from_output(
    t: &SampledFunction,
    atoms: &[&Atom],
    lambda: &[usize],
    probes: &[Vec<f64>],
    big_n: usize,
) -> Result<DecayReport> {
    let grid = *t.grid();
    let n = grid.n();
    if lambda.is_empty() || lambda.iter().any(|&k| k >= atoms.len()) {
        return Err(Error::Precondition("Lambda must name at least one of the atoms".into()));
    }
    let cubes: Vec<_> = lambda.iter().map(|&k| atoms[k].support_cube()).collect();
    let ell = cubes.iter().map(|q| q.side).fold(f64::INFINITY, f64::min);
    let mut samples = Vec::new();
    for y in probes {
        if y.len() != n {
            return Err(Error::Arity { expected: n, got: y.len() });
        }
        if let Some(q) = cubes.iter().find(|q| q.star().contains(y)) {
            return Err(Error::Precondition(format!("probe {y:?} lies inside the star of the cube at {:?}", q.center)));
        }
        if y.iter().any(|c| c.abs() > grid.half_width() - 4.0 * ell) {
            return Err(Error::Precondition(format!("probe {y:?} is within 4l of the boundary")));
        }
        let j = grid
            .nearest_index(y)
            .ok_or_else(|| Error::Precondition(format!("probe {y:?} outside the grid")))?;
        let x = grid.point(j);
        let distance: f64 = cubes
            .iter()
            .map(|q| (0..n).map(|a| (x[a] - q.center[a]).powi(2)).sum::<f64>().sqrt())
            .sum();
        samples.push((x[..n].to_vec(), distance, t.values()[j].norm()));
    }
    let d_min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let d_max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if samples.len() < 3 || d_max < 4.0 * d_min * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "probes must span two octaves in distance, got [{d_min}, {d_max}]"
        )));
    }

    let exponent = (n + big_n + 1) as f64;
    let bound = -exponent;
    let floor = 1e2 * f64::EPSILON * t.max_abs();
    let mut kept = Vec::new();
    let mut excluded = 0;
    for (y, distance, value) in samples {
        if value <= floor {
            excluded += 1;
            continue;
        }
        let rhs = (ell / distance).powf(exponent);
        kept.push(DecayProbe { y, distance, value, rhs, ratio: value / rhs });
    }
    let spans = |ps: &[DecayProbe]| {
        let lo = ps.iter().map(|p| p.distance).fold(f64::INFINITY, f64::min);
        let hi = ps.iter().map(|p| p.distance).fold(0.0, f64::max);
        ps.len() >= 3 && hi >= 4.0 * lo * (1.0 - 1e-12)
    };
    if !spans(&kept) {
        return Ok(DecayReport {
            big_n,
            bound,
            slope: f64::NAN,
            stderr: f64::NAN,
            probes: kept,
            excluded,
            ratio_sup: f64::NAN,
            ratio_median: f64::NAN,
            verdict: DecayVerdict::BelowNoiseFloor,
        });
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.distance.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.value.ln()).collect();
    let (slope, stderr) = fit_slope(&xs, &ys);
    let ratios: Vec<f64> = kept.iter().map(|p| p.ratio).collect();
    let ratio_sup = ratios.iter().copied().fold(0.0, f64::max);
    let ratio_median = median(&ratios);
    let finite = ratio_sup.is_finite() && ratio_sup <= RATIO_SPREAD * ratio_median;
    let verdict = if slope <= bound + SLOPE_SLACK && finite { DecayVerdict::Pass } else { DecayVerdict::Fail };
    Ok(DecayReport { big_n, bound, slope, stderr, probes: kept, excluded, ratio_sup, ratio_median, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x).collect();
        let (s, e) = fit_slope(&xs, &ys);
        assert!((s + 3.0).abs() < 1e-14 && e < 1e-12);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
