//! Experiment configuration, per-trial records and the ensemble runner.
//!
//! Every trial is a pure function of the configuration, the check and the trial
//! index: its random stream is seeded from `(master seed, check, index)`, so any
//! record can be recomputed in isolation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atoms::{make_atom, make_infinity_atom, Atom, Cube};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid};
use crate::maximal::{make_bump, BumpProfile, ScaleLadder};
use crate::operators::{default_cutoff_radius, Cutoff, MultilinearOperator};
use crate::symbols::{parse_partition, resolve_symbol, KindTag, MixedTerm, Partition, Symbol};
use crate::verify::boundedness::{boundedness_ratio, draw_cube, draw_slot, scale_invariance_test, DrawParams, SlotDraw};
use crate::verify::cancellation::{check_cancellation, DEFAULT_CANCELLATION_TOL};
use crate::verify::decay::{decay_from_output, median, DecayVerdict};
use crate::verify::indices::{
    exponent_list, index_arithmetic, require_finite_for_product, validate_for_symbol, IndexData,
};
use crate::verify::majorant::{check_fs_inequality, check_local_estimate, check_pointwise_majorant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorConfig {
    /// `None` keeps the symbol's own structure.
    pub kind: Option<KindTag>,
    pub symbol: String,
    pub power: u32,
    /// One-based groups such as `12|3`; builds a single-term mixed symbol.
    pub partition: Option<String>,
    pub group_symbols: Vec<String>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { kind: None, symbol: "sigma1_bilinear".into(), power: 1, partition: None, group_symbols: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicesConfig {
    #[serde(with = "exponent_list")]
    pub p: Vec<f64>,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
}

impl Default for IndicesConfig {
    fn default() -> Self {
        Self { p: vec![1.0, 1.0], n: 1, big_n: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffMode {
    None,
    Sharp,
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
    pub cutoff: CutoffMode,
    /// Defaults to `M / (8L)`.
    pub cutoff_radius: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: 16.0, points: 4096, cutoff: CutoffMode::Smooth, cutoff_radius: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_atoms: usize,
    pub min_level: i32,
    pub max_level: i32,
    /// Dilation factor of the scale-invariance companion; 1 disables it.
    pub dilation: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { trials: 50, seed: 1, max_atoms: 8, min_level: -3, max_level: 0, dilation: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub cancellation: f64,
    pub local_r: f64,
    /// Allowed `max / median` of an ensemble of ratios.
    pub spread: f64,
    pub dilation: f64,
    pub fs_gamma: Option<f64>,
    pub fs_cubes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cancellation: DEFAULT_CANCELLATION_TOL,
            local_r: 2.0,
            spread: 100.0,
            dilation: 0.2,
            fs_gamma: None,
            fs_cubes: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderConfig {
    pub half_steps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChecksConfig {
    pub boundedness: bool,
    pub cancellation: bool,
    pub local: bool,
    pub majorant: bool,
    pub fs: bool,
    pub decay: bool,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self { boundedness: true, cancellation: false, local: false, majorant: false, fs: false, decay: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub operator: OperatorConfig,
    pub indices: IndicesConfig,
    pub grid: GridConfig,
    pub ensemble: EnsembleConfig,
    pub tolerances: Tolerances,
    pub ladder: LadderConfig,
    pub checks: ChecksConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Boundedness,
    Cancellation,
    Local,
    Majorant,
    Fs,
    Decay,
}

impl Check {
    pub const ALL: [Check; 6] =
        [Check::Boundedness, Check::Cancellation, Check::Local, Check::Majorant, Check::Fs, Check::Decay];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Boundedness => "boundedness",
            Check::Cancellation => "cancellation",
            Check::Local => "local",
            Check::Majorant => "majorant",
            Check::Fs => "fs",
            Check::Decay => "decay",
        }
    }

    pub fn parse(text: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == text)
    }

    fn id(&self) -> u64 {
        *self as u64 + 1
    }
}

impl ExperimentConfig {
    pub fn enabled_checks(&self) -> Vec<Check> {
        let c = &self.checks;
        Check::ALL
            .into_iter()
            .filter(|k| match k {
                Check::Boundedness => c.boundedness,
                Check::Cancellation => c.cancellation,
                Check::Local => c.local,
                Check::Majorant => c.majorant,
                Check::Fs => c.fs,
                Check::Decay => c.decay,
            })
            .collect()
    }

    pub fn build_grid(&self) -> Result<Grid> {
        make_grid(self.indices.n, self.grid.half_width, self.grid.points)
    }

    pub fn build_symbol(&self) -> Result<Symbol> {
        let m = self.indices.p.len();
        let op = &self.operator;
        if let Some(text) = &op.partition {
            let groups = parse_partition(text)?;
            let names: Vec<String> = if op.group_symbols.is_empty() && groups.len() == 1 {
                vec![op.symbol.clone()]
            } else {
                op.group_symbols.clone()
            };
            if names.len() != groups.len() {
                return Err(Error::Partition(format!("{} groups but {} group symbols", groups.len(), names.len())));
            }
            let symbols = groups
                .iter()
                .zip(&names)
                .map(|(g, name)| resolve_symbol(name, g.len()))
                .collect::<Result<Vec<_>>>()?;
            let partition = Partition::new(groups, symbols, m)?;
            let sym = Symbol::mixed(format!("mixed[{text}]"), vec![MixedTerm { coeff: 1.0, partition }])?;
            if matches!(op.kind, Some(KindTag::Product)) {
                return Err(Error::Partition("a partition describes a mixed operator, not a product one".into()));
            }
            return Ok(sym);
        }
        let spec = if op.power > 1 { format!("{}^{}", op.symbol, op.power) } else { op.symbol.clone() };
        let sym = resolve_symbol(&spec, m)?;
        match op.kind {
            None => Ok(sym),
            Some(KindTag::General) => Ok(sym.as_general()),
            Some(tag) if tag == sym.kind_tag() => Ok(sym),
            Some(tag) => Err(Error::Precondition(format!(
                "symbol `{}` has no {tag:?} structure to run on",
                sym.name()
            ))),
        }
    }

    pub fn index_data(&self) -> Result<IndexData> {
        index_arithmetic(&self.indices.p, self.indices.n, self.indices.p.len(), self.indices.big_n)
    }

    pub fn cutoff(&self, grid: &Grid) -> Cutoff {
        let r = self.grid.cutoff_radius.unwrap_or_else(|| default_cutoff_radius(grid));
        match self.grid.cutoff {
            CutoffMode::None => Cutoff::None,
            CutoffMode::Sharp => Cutoff::Sharp(r),
            CutoffMode::Smooth => Cutoff::Smooth(r),
        }
    }

    pub fn draw_params(&self) -> DrawParams {
        DrawParams {
            max_atoms: self.ensemble.max_atoms,
            min_level: self.ensemble.min_level,
            max_level: self.ensemble.max_level,
            dilation: self.ensemble.dilation.max(1.0),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Everything a trial needs, built once from the configuration.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub grid: Grid,
    pub op: MultilinearOperator,
    pub idx: IndexData,
    pub phi: BumpProfile,
    pub ladder: ScaleLadder,
}

impl Context {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let grid = config.build_grid()?;
        if config.operator.kind == Some(KindTag::Product) {
            require_finite_for_product(&config.indices.p)?;
        }
        let symbol = config.build_symbol()?;
        let idx = config.index_data()?;
        validate_for_symbol(&idx, &symbol)?;
        if config.ensemble.min_level > config.ensemble.max_level {
            return Err(Error::Precondition("min_level exceeds max_level".into()));
        }
        if config.ensemble.max_atoms == 0 {
            return Err(Error::Precondition("max_atoms must be at least 1".into()));
        }
        let op = MultilinearOperator::new(symbol, grid)?.with_cutoff(config.cutoff(&grid));
        Ok(Self {
            config: config.clone(),
            grid,
            op,
            idx,
            phi: make_bump(grid.n())?,
            ladder: ScaleLadder::new(&grid, config.ladder.half_steps),
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, check: Check, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(check.id().wrapping_mul(0x1_0000_0000).wrapping_add(index as u64)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub check: Check,
    pub index: usize,
    pub seed: u64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    pub flags: Vec<String>,
    pub extra: BTreeMap<String, Option<f64>>,
    pub inputs: serde_json::Value,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl TrialRecord {
    fn new(check: Check, index: usize, seed: u64) -> Self {
        Self {
            trial_id: format!("{}-{index:04}", check.name()),
            check,
            index,
            seed,
            lhs: None,
            rhs: None,
            ratio: None,
            flags: Vec::new(),
            extra: BTreeMap::new(),
            inputs: serde_json::Value::Null,
        }
    }

    fn set(&mut self, key: &str, v: f64) {
        self.extra.insert(key.to_string(), finite(v));
    }

    pub fn failed(&self) -> bool {
        self.flags.iter().any(|f| f == "fail" || f.starts_with("error"))
    }

    pub fn errored(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with("error"))
    }

    /// Bitwise comparison of every recorded number.
    pub fn bit_identical(&self, other: &TrialRecord) -> bool {
        fn same(a: &Option<f64>, b: &Option<f64>) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
                (None, None) => true,
                _ => false,
            }
        }
        self.trial_id == other.trial_id
            && self.check == other.check
            && self.index == other.index
            && self.seed == other.seed
            && same(&self.lhs, &other.lhs)
            && same(&self.rhs, &other.rhs)
            && same(&self.ratio, &other.ratio)
            && self.flags == other.flags
            && self.extra.len() == other.extra.len()
            && self.extra.iter().zip(&other.extra).all(|((ka, a), (kb, b))| ka == kb && same(a, b))
            && self.inputs == other.inputs
    }
}

/// Random atom for slot `l` on a cube drawn from the ensemble levels.
fn draw_atom(ctx: &Context, rng: &mut ChaCha8Rng, l: usize) -> Result<(Atom, serde_json::Value)> {
    let p = ctx.idx.exponents[l];
    if p.is_infinite() {
        let width: f64 = rng.gen_range(0.5..1.0);
        let a = make_infinity_atom(&ctx.grid, |x| {
            Complex64::new(0.5 * (-x.iter().map(|t| t * t).sum::<f64>() / (width * width)).exp(), 0.0)
        })?;
        return Ok((a, serde_json::json!({ "type": "bounded", "width": width })));
    }
    let level = rng.gen_range(ctx.config.ensemble.min_level..=ctx.config.ensemble.max_level);
    let cube = draw_cube(rng, &ctx.grid, level, 1.0)?;
    let seed: u64 = rng.gen();
    let a = make_atom(&cube, p, ctx.idx.big_n, seed, &ctx.grid)?;
    Ok((a, serde_json::json!({ "type": "atom", "cube": cube, "seed": seed })))
}

fn draw_atoms(ctx: &Context, rng: &mut ChaCha8Rng) -> Result<(Vec<Atom>, serde_json::Value)> {
    let mut atoms = Vec::new();
    let mut inputs = Vec::new();
    for l in 0..ctx.op.arity() {
        let (a, v) = draw_atom(ctx, rng, l)?;
        atoms.push(a);
        inputs.push(v);
    }
    Ok((atoms, serde_json::Value::Array(inputs)))
}

/// Ratios below this (relative to the RHS) are treated as discretization noise.
pub const NOISE_FLOOR: f64 = 1e2 * f64::EPSILON;

/// Distances, in units of the cube side, of the decay probes.
pub const DECAY_PROBES: [f64; 5] = [2.0, 3.0, 4.0, 6.0, 8.0];

/// Bounded step `0.5 tanh((2L/pi) sin(pi x / L))`, smooth and periodic on the box.
pub fn step_atom(grid: &Grid) -> Result<Atom> {
    let l = grid.half_width();
    let kappa = 2.0 * l / std::f64::consts::PI;
    make_infinity_atom(grid, |x| Complex64::new(0.5 * (kappa * (std::f64::consts::PI * x[0] / l).sin()).tanh(), 0.0))
}

fn trial_body(ctx: &Context, check: Check, rec: &mut TrialRecord) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(rec.seed);
    let cfg = &ctx.config;
    match check {
        Check::Boundedness => {
            let params = cfg.draw_params();
            let slots = ctx
                .idx
                .exponents
                .iter()
                .map(|&p| draw_slot(&mut rng, &ctx.grid, p, ctx.idx.big_n, &params))
                .collect::<Result<Vec<SlotDraw>>>()?;
            rec.inputs = serde_json::to_value(&slots).expect("draws serialize");
            let factor = cfg.ensemble.dilation;
            let base = if factor != 1.0 && ctx.op.symbol().is_homogeneous() {
                let si = scale_invariance_test(&ctx.op, &ctx.idx, &slots, factor, &ctx.phi, &ctx.ladder)?;
                rec.set("dilation", factor);
                rec.set("dilated_lhs", si.dilated.lhs);
                rec.set("dilated_rhs", si.dilated.rhs);
                rec.extra.insert("dilated_ratio".into(), si.dilated.ratio.and_then(finite));
                let floor = |r: Option<f64>| r.is_some_and(|v| v < NOISE_FLOOR);
                if floor(si.base.ratio) || floor(si.dilated.ratio) {
                    rec.flags.push("below_noise_floor".into());
                    rec.extra.insert("raw_deviation".into(), si.deviation.and_then(finite));
                } else {
                    rec.extra.insert("deviation".into(), si.deviation.and_then(finite));
                    if si.deviation.is_some_and(|d| d > cfg.tolerances.dilation) {
                        rec.flags.push("dilation_unstable".into());
                    }
                }
                si.base
            } else {
                let sums = slots.iter().map(|s| s.realize(&ctx.grid)).collect::<Result<Vec<_>>>()?;
                boundedness_ratio(&ctx.op, &ctx.idx, &sums, &ctx.phi, &ctx.ladder)?
            };
            rec.lhs = finite(base.lhs);
            rec.rhs = finite(base.rhs);
            rec.ratio = base.ratio.and_then(finite);
            if base.ratio.is_none() {
                rec.flags.push("vacuous".into());
            }
        }
        Check::Cancellation => {
            let (atoms, inputs) = draw_atoms(ctx, &mut rng)?;
            rec.inputs = inputs;
            let refs: Vec<&Atom> = atoms.iter().collect();
            let rep = check_cancellation(&ctx.op, &refs, ctx.idx.s, cfg.tolerances.cancellation)?;
            rec.lhs = finite(rep.max_residual);
            rec.rhs = finite(rep.tolerance);
            rec.ratio = finite(rep.max_residual / rep.tolerance);
            rec.set("l1_norm", rep.l1_norm);
            for r in &rep.residuals {
                let tag: String = r.alpha.iter().map(|a| a.to_string()).collect();
                rec.set(&format!("spectral_{tag}"), r.spectral);
                rec.set(&format!("spatial_{tag}"), r.spatial);
            }
            if rep.vacuous {
                rec.flags.push("vacuous".into());
            }
            if !rep.pass {
                rec.flags.push("fail".into());
            }
        }
        Check::Local => {
            let (atoms, inputs) = draw_atoms(ctx, &mut rng)?;
            rec.inputs = inputs;
            let refs: Vec<&Atom> = atoms.iter().collect();
            let rep = check_local_estimate(&ctx.op, &refs, cfg.tolerances.local_r, ctx.idx.big_n, &ctx.ladder)?;
            rec.lhs = finite(rep.lhs_a);
            rec.rhs = finite(rep.rhs);
            rec.ratio = finite(rep.ratio_a);
            rec.set("lhs_maximal", rep.lhs_b);
            rec.set("ratio_maximal", rep.ratio_b);
            if rep.vacuous {
                rec.flags.push("vacuous".into());
            }
        }
        Check::Majorant => {
            let (atoms, inputs) = draw_atoms(ctx, &mut rng)?;
            rec.inputs = inputs;
            let refs: Vec<&Atom> = atoms.iter().collect();
            let rep = check_pointwise_majorant(&ctx.op, &refs, &ctx.idx, &ctx.phi, &ctx.ladder)?;
            rec.lhs = finite(rep.lhs_max);
            rec.ratio = finite(rep.sup_ratio);
            rec.set("region_points", rep.region_points as f64);
            rec.set("excluded_points", rep.excluded_points as f64);
            rec.flags.push(format!("region:{}", serde_json::to_value(rep.region).expect("enum").as_str().unwrap_or("")));
            if rep.vacuous {
                rec.flags.push("vacuous".into());
            }
        }
        Check::Fs => {
            let p = ctx.idx.p;
            let gamma = cfg.tolerances.fs_gamma.unwrap_or(1.0f64.max(1.0 / p) + 0.5);
            let count = rng.gen_range(1..=cfg.tolerances.fs_cubes.max(1));
            let mut cubes: Vec<Cube> = Vec::with_capacity(count);
            let mut lambdas = Vec::with_capacity(count);
            for _ in 0..count {
                let level = rng.gen_range(cfg.ensemble.min_level..=cfg.ensemble.max_level);
                cubes.push(draw_cube(&mut rng, &ctx.grid, level, 1.0)?);
                lambdas.push(1.0 - rng.gen::<f64>());
            }
            rec.inputs = serde_json::json!({ "cubes": cubes, "lambdas": lambdas, "gamma": gamma });
            let rep = check_fs_inequality(&cubes, &lambdas, gamma, p, &ctx.grid, &ctx.ladder)?;
            rec.lhs = finite(rep.lhs);
            rec.rhs = finite(rep.rhs);
            rec.ratio = finite(rep.ratio);
            if rep.vacuous {
                rec.flags.push("vacuous".into());
            }
        }
        Check::Decay => {
            if ctx.idx.exponents[0].is_infinite() {
                return Err(Error::Precondition("the decay check needs a finite p_1".into()));
            }
            let ell = 2f64.powi(cfg.ensemble.max_level);
            let seed: u64 = rng.gen();
            let cube = Cube::new(vec![0.0; ctx.grid.n()], ell)?;
            let a1 = make_atom(&cube, ctx.idx.exponents[0], ctx.idx.big_n, seed, &ctx.grid)?;
            let step = step_atom(&ctx.grid)?;
            let mut atoms: Vec<&Atom> = vec![&a1];
            atoms.extend(std::iter::repeat_n(&step, ctx.op.arity() - 1));
            rec.inputs = serde_json::json!({ "cube": cube, "seed": seed, "others": "step" });
            let inputs: Vec<_> = atoms.iter().map(|a| a.values()).collect();
            let (t, _) = crate::operators::apply(&ctx.op, &inputs)?;
            let probes: Vec<Vec<f64>> = DECAY_PROBES
                .iter()
                .map(|d| {
                    let mut y = vec![0.0; ctx.grid.n()];
                    y[0] = d * ell;
                    y
                })
                .collect();
            let rep = decay_from_output(&t, &atoms, &[0], &probes, ctx.idx.big_n)?;
            rec.lhs = finite(rep.slope);
            rec.rhs = finite(rep.bound);
            rec.ratio = finite(rep.ratio_sup);
            rec.set("stderr", rep.stderr);
            rec.set("ratio_median", rep.ratio_median);
            for (k, p) in rep.probes.iter().enumerate() {
                rec.set(&format!("probe{k}_log_distance"), p.distance.ln());
                rec.set(&format!("probe{k}_log_value"), p.value.ln());
            }
            match rep.verdict {
                DecayVerdict::Pass => {}
                DecayVerdict::Fail => rec.flags.push("fail".into()),
                DecayVerdict::BelowNoiseFloor => rec.flags.push("below_noise_floor".into()),
            }
        }
    }
    Ok(())
}

/// Recompute one trial from the context alone.
pub fn run_trial(ctx: &Context, check: Check, index: usize) -> TrialRecord {
    let seed = trial_seed(ctx.config.ensemble.seed, check, index);
    let mut rec = TrialRecord::new(check, index, seed);
    if let Err(e) = trial_body(ctx, check, &mut rec) {
        rec.flags.push(format!("error: {e}"));
    }
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: Check,
    pub trials: usize,
    pub counted: usize,
    pub vacuous: usize,
    pub below_noise_floor: usize,
    pub errors: usize,
    pub failures: usize,
    pub sup_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub max_deviation: Option<f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

pub fn summarize(check: Check, records: &[TrialRecord], tol: &Tolerances) -> CheckSummary {
    let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.check == check).collect();
    let ratios: Vec<f64> = mine.iter().filter_map(|r| r.ratio).collect();
    let sup = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let med = median(&ratios);
    let deviations: Vec<f64> = mine.iter().filter_map(|r| r.extra.get("deviation").copied().flatten()).collect();
    let max_dev = deviations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let errors = mine.iter().filter(|r| r.errored()).count();
    let failures = mine.iter().filter(|r| r.flags.iter().any(|f| f == "fail")).count();
    let vacuous = mine.iter().filter(|r| r.flags.iter().any(|f| f == "vacuous")).count();
    let below_floor = mine.iter().filter(|r| r.flags.iter().any(|f| f == "below_noise_floor")).count();
    let mut notes = Vec::new();
    let finite_sup = ratios.is_empty() || sup.is_finite();
    let mut pass = errors == 0 && failures == 0 && finite_sup;
    if errors > 0 {
        notes.push(format!("{errors} trial(s) aborted"));
    }
    if failures > 0 {
        notes.push(format!("{failures} trial(s) failed"));
    }
    if below_floor > 0 {
        notes.push(format!("{below_floor} trial(s) below the noise floor, excluded from deviation statistics"));
    }
    match check {
        Check::Boundedness => {
            if !deviations.is_empty() && max_dev > tol.dilation {
                pass = false;
                notes.push(format!("max dilation deviation {max_dev:.3e} above {}", tol.dilation));
            }
        }
        Check::Local => {
            if !ratios.is_empty() && med > 0.0 && sup > tol.spread * med {
                pass = false;
                notes.push(format!("sup/median {:.3e} above {}", sup / med, tol.spread));
            }
        }
        _ => {}
    }
    CheckSummary {
        check,
        trials: mine.len(),
        counted: ratios.len(),
        vacuous,
        below_noise_floor: below_floor,
        errors,
        failures,
        sup_ratio: (!ratios.is_empty()).then_some(sup).and_then(finite),
        median_ratio: finite(med),
        max_deviation: (!deviations.is_empty()).then_some(max_dev).and_then(finite),
        pass,
        notes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<CheckSummary>,
    pub pass: bool,
}

/// All enabled checks, `ensemble.trials` trials each, in parallel on the current pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let ctx = Context::new(config)?;
    let jobs: Vec<(Check, usize)> = config
        .enabled_checks()
        .into_iter()
        .flat_map(|c| (0..config.ensemble.trials).map(move |i| (c, i)))
        .collect();
    let trials: Vec<TrialRecord> = jobs.par_iter().map(|&(c, i)| run_trial(&ctx, c, i)).collect();
    let summary: Vec<CheckSummary> =
        config.enabled_checks().into_iter().map(|c| summarize(c, &trials, &config.tolerances)).collect();
    let pass = summary.iter().all(|s| s.pass);
    Ok(ExperimentReport {
        provenance: Provenance { config_hash: config.hash(), version: env!("CARGO_PKG_VERSION").to_string() },
        trials,
        summary,
        pass,
    })
}
