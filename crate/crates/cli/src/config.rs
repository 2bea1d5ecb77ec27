//! INI-style experiment configuration.
//!
//! ```text
//! [operator]
//! symbol = sigma1_bilinear
//! [indices]
//! p = 1, 1
//! [grid]
//! half_width = 16
//! points = 4096
//! ```

use std::path::Path;
use std::str::FromStr;

use hardylab_core::symbols::KindTag;
use hardylab_core::verify::harness::{CutoffMode, ExperimentConfig};
use hardylab_core::verify::indices::parse_exponent;
use ini::Ini;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

fn num<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| ConfigError(format!("[{section}] {key}: cannot parse `{v}`")))
}

fn boolean(section: &str, key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => err(format!("[{section}] {key}: expected a boolean, got `{v}`")),
    }
}

fn optional(v: &str) -> Option<&str> {
    let t = v.trim();
    (!t.is_empty() && !t.eq_ignore_ascii_case("none") && !t.eq_ignore_ascii_case("default")).then_some(t)
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let ini = Ini::load_from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))?;
    let mut cfg = ExperimentConfig::default();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return err(format!("key `{k}` outside any section"));
            }
            continue;
        };
        let s = section.trim().to_ascii_lowercase();
        for (key, value) in props.iter() {
            set(&mut cfg, &s, key.trim(), value)?;
        }
    }
    Ok(cfg)
}

fn set(cfg: &mut ExperimentConfig, s: &str, key: &str, v: &str) -> Result<()> {
    match (s, key) {
        ("operator", "symbol") => cfg.operator.symbol = v.trim().to_string(),
        ("operator", "kind") => {
            cfg.operator.kind = match v.trim().to_ascii_lowercase().as_str() {
                "general" => Some(KindTag::General),
                "product" => Some(KindTag::Product),
                "mixed" => Some(KindTag::Mixed),
                "auto" | "" => None,
                other => return err(format!("[operator] kind: unknown kind `{other}`")),
            }
        }
        ("operator", "power") => cfg.operator.power = num(s, key, v)?,
        ("operator", "partition") => cfg.operator.partition = optional(v).map(str::to_string),
        ("operator", "group_symbols") => cfg.operator.group_symbols = list(v),
        ("indices", "p") => {
            cfg.indices.p = list(v)
                .iter()
                .map(|t| parse_exponent(t).map_err(|e| ConfigError(format!("[indices] p: {e}"))))
                .collect::<Result<_>>()?
        }
        ("indices", "n") => cfg.indices.n = num(s, key, v)?,
        ("indices", "N") => cfg.indices.big_n = optional(v).map(|t| num(s, key, t)).transpose()?,
        ("grid", "half_width" | "L") => cfg.grid.half_width = num(s, key, v)?,
        ("grid", "points" | "M") => cfg.grid.points = num(s, key, v)?,
        ("grid", "cutoff") => {
            cfg.grid.cutoff = match v.trim().to_ascii_lowercase().as_str() {
                "none" | "off" => CutoffMode::None,
                "sharp" => CutoffMode::Sharp,
                "smooth" => CutoffMode::Smooth,
                other => return err(format!("[grid] cutoff: expected none, sharp or smooth, got `{other}`")),
            }
        }
        ("grid", "cutoff_radius") => cfg.grid.cutoff_radius = optional(v).map(|t| num(s, key, t)).transpose()?,
        ("ensemble", "trials") => cfg.ensemble.trials = num(s, key, v)?,
        ("ensemble", "seed") => cfg.ensemble.seed = num(s, key, v)?,
        ("ensemble", "max_atoms") => cfg.ensemble.max_atoms = num(s, key, v)?,
        ("ensemble", "min_level") => cfg.ensemble.min_level = num(s, key, v)?,
        ("ensemble", "max_level") => cfg.ensemble.max_level = num(s, key, v)?,
        ("ensemble", "dilation") => cfg.ensemble.dilation = num(s, key, v)?,
        ("tolerances", "cancellation") => cfg.tolerances.cancellation = num(s, key, v)?,
        ("tolerances", "local_r") => cfg.tolerances.local_r = num(s, key, v)?,
        ("tolerances", "spread") => cfg.tolerances.spread = num(s, key, v)?,
        ("tolerances", "dilation") => cfg.tolerances.dilation = num(s, key, v)?,
        ("tolerances", "fs_gamma") => cfg.tolerances.fs_gamma = optional(v).map(|t| num(s, key, t)).transpose()?,
        ("tolerances", "fs_cubes") => cfg.tolerances.fs_cubes = num(s, key, v)?,
        ("ladder", "half_steps") => cfg.ladder.half_steps = boolean(s, key, v)?,
        ("checks", "boundedness") => cfg.checks.boundedness = boolean(s, key, v)?,
        ("checks", "cancellation") => cfg.checks.cancellation = boolean(s, key, v)?,
        ("checks", "local") => cfg.checks.local = boolean(s, key, v)?,
        ("checks", "majorant") => cfg.checks.majorant = boolean(s, key, v)?,
        ("checks", "fs") => cfg.checks.fs = boolean(s, key, v)?,
        ("checks", "decay") => cfg.checks.decay = boolean(s, key, v)?,
        ("operator" | "indices" | "grid" | "ensemble" | "tolerances" | "ladder" | "checks", _) => {
            return err(format!("[{s}] unknown key `{key}`"))
        }
        _ => return err(format!("unknown section [{s}]")),
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
