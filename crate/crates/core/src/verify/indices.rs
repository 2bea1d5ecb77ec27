//! Hölder exponent bookkeeping: `1/p = sum 1/p_l`, the moment order `s` and the
//! atom moment order `N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::{KindTag, Symbol, SymbolKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexData {
    #[serde(with = "exponent_list")]
    pub exponents: Vec<f64>,
    pub n: usize,
    pub p: f64,
    pub s: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n_overridden: bool,
}

impl IndexData {
    pub fn m(&self) -> usize {
        self.exponents.len()
    }

    /// `(n + N + 1) / (m n)`, the per-cube decay exponent of the majorants.
    pub fn decay_exponent(&self) -> f64 {
        (self.n + self.big_n + 1) as f64 / (self.m() * self.n) as f64
    }
}

pub fn index_arithmetic(exponents: &[f64], n: usize, m: usize, n_override: Option<usize>) -> Result<IndexData> {
    if exponents.len() != m {
        return Err(Error::Index(format!("{} exponents given for an {m}-linear operator", exponents.len())));
    }
    if !(1..=2).contains(&n) {
        return Err(Error::Index(format!("dimension {n} outside {{1, 2}}")));
    }
    if let Some(bad) = exponents.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::Index(format!("exponent {bad} outside (0, inf]")));
    }
    let inv: f64 = exponents.iter().map(|p| 1.0 / p).sum();
    if inv == 0.0 {
        return Err(Error::Index("all exponents are infinite, so p = inf; the estimates need 0 < p < inf".into()));
    }
    let p = 1.0 / inv;
    let s = (n as f64 * (inv - 1.0) + 1e-12).floor().max(0.0) as usize;
    let default_n = m * (n + 1 + 2 * s);
    Ok(IndexData {
        exponents: exponents.to_vec(),
        n,
        p,
        s,
        big_n: n_override.unwrap_or(default_n),
        n_overridden: n_override.is_some(),
    })
}

/// Product type is unbounded as soon as one exponent is infinite.
pub fn require_finite_for_product(exponents: &[f64]) -> Result<()> {
    if exponents.iter().any(|p| p.is_infinite()) {
        return Err(Error::Index(
            "product type needs every p_l finite; one can not expect the mapping property if some p_l = inf".into(),
        ));
    }
    Ok(())
}

/// Type-specific admissibility of the exponents for `symbol`.
pub fn validate_for_symbol(idx: &IndexData, symbol: &Symbol) -> Result<()> {
    if symbol.arity() != idx.m() {
        return Err(Error::Arity { expected: idx.m(), got: symbol.arity() });
    }
    match (symbol.effective_kind_tag(), symbol.kind()) {
        (KindTag::Product, _) => require_finite_for_product(&idx.exponents)?,
        (KindTag::Mixed, SymbolKind::Mixed(terms)) => {
            for (t, term) in terms.iter().enumerate() {
                for g in term.partition.groups() {
                    if g.iter().all(|&l| idx.exponents[l].is_infinite()) {
                        return Err(Error::Index(format!(
                            "term {t}: group {:?} has no finite exponent",
                            g.iter().map(|l| l + 1).collect::<Vec<_>>()
                        )));
                    }
                }
            }
        }
        _ => {}
    }
    Ok(())
}

/// Exponent lists with `inf` written as the string "inf".
pub mod exponent_list {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|p| if p.is_infinite() { Repr::Text("inf".into()) } else { Repr::Num(*p) })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Num(p) => Ok(p),
                Repr::Text(t) => super::parse_exponent(&t).map_err(D::Error::custom),
            })
            .collect()
    }
}

/// `"2"`, `"0.5"`, `"inf"`, `"infinity"` or `"∞"`.
pub fn parse_exponent(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => t.parse::<f64>().map_err(|_| format!("cannot parse exponent `{t}`")),
    }
}
