use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hardylab_core::symbols::{
    builtin_symbol, cm_structural_check_on, plane_samples, plane_vanishing_order, power_symbol, Symbol,
};
use hardylab_core::verify::harness::{
    run_experiment, run_trial, Check, CheckSummary, Context, ExperimentConfig, TrialRecord,
};
use serde::{Deserialize, Serialize};

use crate::config::load_config;
use crate::output::{decay_points, plot_data, ratio_histogram, summary_csv, to_json};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Outcome of a command that did not reach a verdict.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

// ---------------------------------------------------------------- verify-symbol

const PLANE_TOL: f64 = 1e-12;
const PLANE_SAMPLES: usize = 200;

/// `name`, `name^k`, or a file whose first non-comment line is one of those.
pub fn resolve_symbol_arg(arg: &str) -> Result<Symbol, UsageError> {
    let path = Path::new(arg);
    let spec = if path.is_file() {
        let text = fs::read_to_string(path)?;
        text.lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .ok_or_else(|| UsageError(format!("{arg}: no symbol name in file")))?
            .to_string()
    } else {
        arg.to_string()
    };
    let (base, power) = match spec.split_once('^') {
        Some((b, k)) => (b.to_string(), k.trim().parse::<u32>().map_err(|_| UsageError(format!("bad power in `{spec}`")))?),
        None => (spec.clone(), 1),
    };
    Ok(power_symbol(&builtin_symbol(&base)?, power)?)
}

pub struct VerifySymbolArgs {
    pub symbol: String,
    pub orders: usize,
    pub shells: (i32, i32),
    pub directions: usize,
    pub require_plane_vanishing: bool,
}

pub fn verify_symbol(args: &VerifySymbolArgs, out: &mut impl Write) -> Result<i32, UsageError> {
    let sym = resolve_symbol_arg(&args.symbol)?;
    let (lo, hi) = args.shells;
    if lo > hi {
        return Err(UsageError(format!("empty shell range {lo}:{hi}")));
    }
    let reports = cm_structural_check_on(&sym, args.orders, args.directions, 2, lo..=hi)?;
    let mut all_pass = true;
    writeln!(out, "symbol {} (arity {}, {:?})", sym.name(), sym.arity(), sym.kind_tag())?;
    for comp in &reports {
        writeln!(out, "component {} (arity {})", comp.component, comp.arity)?;
        let head: Vec<String> = (lo..=hi).map(|k| format!("2^{k}")).collect();
        writeln!(out, "  {:<10} {} {:>10} verdict", "alpha", head.iter().map(|h| format!("{h:>10}")).collect::<String>(), "wide")?;
        for s in &comp.shells {
            let alpha: String = s.alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
            let cells: String = s.sups.iter().map(|v| format!("{v:>10.3e}")).collect();
            let verdict = if s.stable { "PASS" } else { "FAIL" };
            all_pass &= s.stable;
            writeln!(out, "  {:<10} {cells} {:>10.3e} {verdict}", format!("({alpha})"), s.wide_sup)?;
        }
    }
    if sym.arity() > 1 {
        let samples = plane_samples(sym.arity(), sym.dim(), PLANE_SAMPLES, 5);
        let plane = plane_vanishing_order(&sym, 0, &samples)?;
        let vanishes = plane.max_residual() < PLANE_TOL;
        let verdict = match (vanishes, args.require_plane_vanishing) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        if args.require_plane_vanishing {
            all_pass &= vanishes;
        }
        writeln!(out, "plane sum xi_j = 0: max |sigma| = {:.3e} over {PLANE_SAMPLES} points {verdict}", plane.max_residual())?;
    } else if args.require_plane_vanishing {
        return Err(UsageError("plane vanishing needs arity at least 2".into()));
    }
    writeln!(out, "{}", if all_pass { "PASS" } else { "FAIL" })?;
    Ok(if all_pass { EXIT_PASS } else { EXIT_FAIL })
}

// ---------------------------------------------------------------- run

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: String,
    pub output_dir: String,
    pub started: f64,
    pub finished: Option<f64>,
    pub version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub jobs: usize,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<CheckSummary>,
    pub pass: bool,
}

pub struct RunArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub jobs: usize,
}

/// Exclusive creation of `<out>`; refuses a non-empty existing directory.
fn create_output_dir(out: &Path) -> Result<(), UsageError> {
    if out.exists() {
        let empty = out.is_dir() && fs::read_dir(out)?.next().is_none();
        if !empty {
            return Err(UsageError(format!("output directory {} exists and is not empty", out.display())));
        }
        return Ok(());
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::create_dir(out)?;
    Ok(())
}

/// Files are written under a temporary name and renamed into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn mark_failed(out: &Path, reason: &str) {
    let _ = fs::write(out.join("FAILED"), format!("{reason}\n"));
}

pub fn run(args: &RunArgs, log: &mut impl Write) -> Result<i32, UsageError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.ensemble.seed = seed;
    }
    Context::new(&cfg)?;
    create_output_dir(&args.out)?;
    let mut manifest = RunManifest {
        config_path: args.config.display().to_string(),
        output_dir: args.out.display().to_string(),
        started: now(),
        finished: None,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        master_seed: cfg.ensemble.seed,
        jobs: args.jobs,
        config: cfg.clone(),
    };
    write_atomic(&args.out.join("manifest.json"), &to_json(&manifest)?)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let report = match pool.install(|| run_experiment(&cfg)) {
        Ok(r) => r,
        Err(e) => {
            mark_failed(&args.out, &format!("error: {e}"));
            return Err(e.into());
        }
    };
    manifest.finished = Some(now());
    let full = RunReport {
        manifest,
        config: cfg.clone(),
        trials: report.trials,
        summary: report.summary,
        pass: report.pass,
    };
    write_atomic(&args.out.join("report.json"), &to_json(&full)?)?;
    write_atomic(&args.out.join("summary.csv"), &summary_csv(&full.trials))?;
    for check in cfg.enabled_checks() {
        let hist = ratio_histogram(&full.trials, check);
        let name = format!("{}_ratio_histogram.dat", check.name());
        write_atomic(&args.out.join(name), &plot_data("log10_ratio", "count", &hist))?;
    }
    if cfg.checks.decay {
        let mut rows = Vec::new();
        for t in full.trials.iter().filter(|t| t.check == Check::Decay) {
            rows.extend(decay_points(t));
        }
        write_atomic(&args.out.join("decay_slope.dat"), &plot_data("log_distance", "log_abs_T", &rows))?;
    }
    for s in &full.summary {
        let sup = s.sup_ratio.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        let verdict = if s.pass { "PASS" } else { "FAIL" };
        writeln!(log, "{:<13} trials {:>4}  errors {:>3}  sup ratio {sup:>10}  {verdict}", s.check.name(), s.trials, s.errors)?;
        for note in &s.notes {
            writeln!(log, "  {note}")?;
        }
    }
    if full.pass {
        Ok(EXIT_PASS)
    } else {
        mark_failed(&args.out, "one or more checks failed");
        Ok(EXIT_FAIL)
    }
}

// ---------------------------------------------------------------- replay

pub fn replay(report_path: &Path, trial_id: &str, log: &mut impl Write) -> Result<i32, UsageError> {
    let text = fs::read(report_path).map_err(|e| UsageError(format!("cannot read {}: {e}", report_path.display())))?;
    let report: RunReport = serde_json::from_slice(&text)?;
    let Some(recorded) = report.trials.iter().find(|t| t.trial_id == trial_id) else {
        return Err(UsageError(format!("no trial `{trial_id}` in {}", report_path.display())));
    };
    let ctx = Context::new(&report.config)?;
    let fresh = run_trial(&ctx, recorded.check, recorded.index);
    if fresh.bit_identical(recorded) {
        writeln!(log, "{trial_id}: bit-identical")?;
        return Ok(EXIT_PASS);
    }
    writeln!(log, "{trial_id}: MISMATCH")?;
    let show = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_else(|| "null".into());
    for (name, a, b) in [
        ("lhs", recorded.lhs, fresh.lhs),
        ("rhs", recorded.rhs, fresh.rhs),
        ("ratio", recorded.ratio, fresh.ratio),
    ] {
        if a.map(f64::to_bits) != b.map(f64::to_bits) {
            writeln!(log, "  {name}: recorded {} recomputed {}", show(a), show(b))?;
        }
    }
    if recorded.seed != fresh.seed {
        writeln!(log, "  seed: recorded {} recomputed {}", recorded.seed, fresh.seed)?;
    }
    if recorded.flags != fresh.flags {
        writeln!(log, "  flags: recorded {:?} recomputed {:?}", recorded.flags, fresh.flags)?;
    }
    for (k, v) in &fresh.extra {
        let old = recorded.extra.get(k).copied().flatten();
        if old.map(f64::to_bits) != v.map(f64::to_bits) {
            writeln!(log, "  {k}: recorded {} recomputed {}", show(old), show(*v))?;
        }
    }
    if recorded.inputs != fresh.inputs {
        writeln!(log, "  inputs differ")?;
    }
    Ok(EXIT_FAIL)
}
