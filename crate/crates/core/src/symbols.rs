//! m-linear multiplier symbols: evaluators, structural metadata and the
//! Coifman-Meyer / plane-vanishing diagnostics.
//!
//! Evaluators take the flattened frequency tuple `(xi_1, ..., xi_m)`, each
//! `xi_j` occupying `n` consecutive slots.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct Symbol {
    name: String,
    arity: usize,
    dim: usize,
    evaluator: Evaluator,
    kind: SymbolKind,
    homogeneous: bool,
    singular_at_origin: bool,
}

#[derive(Clone, Debug)]
pub enum SymbolKind {
    General,
    Product(Vec<ProductTerm>),
    Mixed(Vec<MixedTerm>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    General,
    Product,
    Mixed,
}

/// One rank-one term `coeff * prod_j sigma_j(xi_j)`.
#[derive(Clone, Debug)]
pub struct ProductTerm {
    pub coeff: f64,
    pub factors: Vec<Symbol>,
}

/// One term `coeff * prod_g sigma_{I_g}((xi_l)_{l in I_g})`.
#[derive(Clone, Debug)]
pub struct MixedTerm {
    pub coeff: f64,
    pub partition: Partition,
}

#[derive(Clone, Debug)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
    symbols: Vec<Symbol>,
}

impl Partition {
    /// `groups` hold zero-based input indices; `symbols[g]` has arity `groups[g].len()`.
    pub fn new(groups: Vec<Vec<usize>>, symbols: Vec<Symbol>, m: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Partition("no groups".into()));
        }
        if groups.len() != symbols.len() {
            return Err(Error::Partition(format!("{} groups but {} group symbols", groups.len(), symbols.len())));
        }
        let mut seen = vec![false; m];
        for (g, sym) in groups.iter().zip(&symbols) {
            if g.is_empty() {
                return Err(Error::Partition("empty group".into()));
            }
            for &l in g {
                if l >= m {
                    return Err(Error::Partition(format!("index {} outside 1..={m}", l + 1)));
                }
                if seen[l] {
                    return Err(Error::Partition(format!("index {} appears twice", l + 1)));
                }
                seen[l] = true;
            }
            if sym.arity() != g.len() {
                return Err(Error::Arity { expected: g.len(), got: sym.arity() });
            }
        }
        if let Some(l) = seen.iter().position(|s| !s) {
            return Err(Error::Partition(format!("index {} not covered", l + 1)));
        }
        Ok(Self { groups, symbols })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn arity(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

/// Parse `"12|3"` or `"{1,2},{3}"` style partitions (one-based) into zero-based groups.
pub fn parse_partition(text: &str) -> Result<Vec<Vec<usize>>> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let groups: Vec<&str> = if cleaned.contains('|') {
        cleaned.split('|').collect()
    } else {
        cleaned.split("},{").collect()
    };
    let mut out = Vec::new();
    for g in groups {
        let g = g.trim_matches(|c| c == '{' || c == '}');
        let items: Vec<&str> = if g.contains(',') { g.split(',').collect() } else { g.split("").filter(|s| !s.is_empty()).collect() };
        let mut idx = Vec::new();
        for it in items {
            let v: usize = it.parse().map_err(|_| Error::Partition(format!("bad index `{it}` in `{text}`")))?;
            if v == 0 {
                return Err(Error::Partition("indices are one-based".into()));
            }
            idx.push(v - 1);
        }
        out.push(idx);
    }
    Ok(out)
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("dim", &self.dim)
            .field("kind", &self.kind_tag())
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

impl Symbol {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        dim: usize,
        evaluator: Evaluator,
        kind: SymbolKind,
        homogeneous: bool,
        singular_at_origin: bool,
    ) -> Result<Self> {
        if arity == 0 || !(1..=2).contains(&dim) {
            return Err(Error::Arity { expected: 1, got: arity });
        }
        match &kind {
            SymbolKind::General => {}
            SymbolKind::Product(terms) => {
                for t in terms {
                    if t.factors.len() != arity {
                        return Err(Error::Arity { expected: arity, got: t.factors.len() });
                    }
                    for f in &t.factors {
                        if f.arity() != 1 {
                            return Err(Error::Arity { expected: 1, got: f.arity() });
                        }
                    }
                }
            }
            SymbolKind::Mixed(terms) => {
                for t in terms {
                    if t.partition.arity() != arity {
                        return Err(Error::Partition(format!(
                            "partition covers {} indices, symbol arity is {arity}",
                            t.partition.arity()
                        )));
                    }
                }
            }
        }
        Ok(Self { name: name.into(), arity, dim, evaluator, kind, homogeneous, singular_at_origin })
    }

    /// A general-kind symbol from a closure.
    pub fn general(
        name: impl Into<String>,
        arity: usize,
        dim: usize,
        homogeneous: bool,
        singular_at_origin: bool,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(name, arity, dim, Arc::new(f), SymbolKind::General, homogeneous, singular_at_origin)
    }

    /// Real-valued general-kind symbol.
    pub fn general_real(
        name: impl Into<String>,
        arity: usize,
        dim: usize,
        homogeneous: bool,
        singular_at_origin: bool,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::general(name, arity, dim, homogeneous, singular_at_origin, move |x| Complex64::new(f(x), 0.0))
    }

    /// Product-kind symbol whose evaluator is the literal sum of its rank-one terms.
    pub fn product(name: impl Into<String>, terms: Vec<ProductTerm>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Partition("no product terms".into()))?;
        let arity = first.factors.len();
        let dim = first.factors.first().map(|f| f.dim()).unwrap_or(1);
        let eval_terms = terms.clone();
        let evaluator: Evaluator = Arc::new(move |xi: &[f64]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &eval_terms {
                let mut p = Complex64::new(t.coeff, 0.0);
                for (j, f) in t.factors.iter().enumerate() {
                    p *= f.eval(&xi[j * dim..(j + 1) * dim]);
                }
                acc += p;
            }
            acc
        });
        let homogeneous = terms.iter().all(|t| t.factors.iter().all(|f| f.homogeneous));
        let singular = terms.iter().any(|t| t.factors.iter().any(|f| f.singular_at_origin));
        Self::new(name, arity, dim, evaluator, SymbolKind::Product(terms), homogeneous, singular)
    }

    /// Mixed-kind symbol whose evaluator is the literal sum over terms of group products.
    pub fn mixed(name: impl Into<String>, terms: Vec<MixedTerm>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Partition("no mixed terms".into()))?;
        let arity = first.partition.arity();
        let dim = first.partition.symbols()[0].dim();
        let eval_terms = terms.clone();
        let evaluator: Evaluator = Arc::new(move |xi: &[f64]| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut buf = [0.0f64; 6];
            for t in &eval_terms {
                let mut p = Complex64::new(t.coeff, 0.0);
                for (g, sym) in t.partition.groups().iter().zip(t.partition.symbols()) {
                    for (slot, &l) in g.iter().enumerate() {
                        buf[slot * dim..(slot + 1) * dim].copy_from_slice(&xi[l * dim..(l + 1) * dim]);
                    }
                    p *= sym.eval(&buf[..g.len() * dim]);
                }
                acc += p;
            }
            acc
        });
        let homogeneous = terms.iter().all(|t| t.partition.symbols().iter().all(|s| s.homogeneous));
        let singular = terms.iter().any(|t| t.partition.symbols().iter().any(|s| s.singular_at_origin));
        Self::new(name, arity, dim, evaluator, SymbolKind::Mixed(terms), homogeneous, singular)
    }

    /// Same metadata, different evaluator (used for alternative algebraic forms).
    pub fn with_evaluator(&self, name: impl Into<String>, evaluator: Evaluator) -> Self {
        Self { name: name.into(), evaluator, ..self.clone() }
    }

    /// Same evaluator evaluated through the general path.
    pub fn as_general(&self) -> Self {
        Self { kind: SymbolKind::General, ..self.clone() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn kind_tag(&self) -> KindTag {
        match self.kind {
            SymbolKind::General => KindTag::General,
            SymbolKind::Product(_) => KindTag::Product,
            SymbolKind::Mixed(_) => KindTag::Mixed,
        }
    }

    /// Kind after collapsing a single-term, single-group mixed structure to general.
    pub fn effective_kind_tag(&self) -> KindTag {
        match &self.kind {
            SymbolKind::Mixed(terms) if terms.len() == 1 && terms[0].partition.group_count() == 1 => KindTag::General,
            _ => self.kind_tag(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn is_singular_at_origin(&self) -> bool {
        self.singular_at_origin
    }

    #[inline]
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        if self.singular_at_origin && xi.iter().all(|&x| x == 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        (self.evaluator)(xi)
    }

    /// The symbols on which the Coifman-Meyer condition is imposed: the symbol
    /// itself for general kind, factors for product kind, group symbols for mixed kind.
    pub fn cm_components(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        let mut push = |s: &Symbol| {
            if !out.iter().any(|o| o.name == s.name && o.arity == s.arity) {
                out.push(s.clone());
            }
        };
        match &self.kind {
            SymbolKind::General => push(self),
            SymbolKind::Product(terms) => terms.iter().flat_map(|t| &t.factors).for_each(&mut push),
            SymbolKind::Mixed(terms) => terms.iter().flat_map(|t| t.partition.symbols()).for_each(&mut push),
        }
        out
    }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `|xi_1 + ... + xi_m|^2 / (|xi_1|^2 + ... + |xi_m|^2)`; `sigma1` for `m = 3, n = 1`.
pub fn sigma1_like(name: &str, m: usize, n: usize) -> Symbol {
    Symbol::general_real(name, m, n, true, true, move |xi| {
        let mut num = 0.0;
        for a in 0..n {
            let s: f64 = (0..m).map(|j| xi[j * n + a]).sum();
            num += s * s;
        }
        let den: f64 = xi.iter().map(|x| x * x).sum();
        num / den
    })
    .expect("valid arity")
}

pub fn constant_one(m: usize, n: usize) -> Symbol {
    Symbol::general_real("constant_one", m, n, true, false, |_| 1.0).expect("valid arity")
}

fn linear(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Symbol {
    Symbol::general_real(name, 1, 1, false, false, move |x| f(x[0])).expect("valid arity")
}

fn bilinear(name: &str, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Symbol {
    Symbol::general_real(name, 2, 1, false, false, move |x| f(x[0], x[1])).expect("valid arity")
}

fn sigma2() -> Symbol {
    let w1 = |x: f64| (1.0 + x * x).powf(-1.5);
    let w23 = |a: f64, b: f64| (1.0 + a * a + b * b).powf(-1.5);
    let a3 = linear("xi^3/(1+xi^2)^1.5", move |x| x * x * x * w1(x));
    let a0 = linear("1/(1+xi^2)^1.5", move |x| w1(x));
    let a1 = linear("xi/(1+xi^2)^1.5", move |x| x * w1(x));
    let b0 = bilinear("1/(1+|eta|^2)^1.5", move |a, b| w23(a, b));
    let b2 = bilinear("eta1^3/(1+|eta|^2)^1.5", move |a, b| a * a * a * w23(a, b));
    let b3 = bilinear("eta2^3/(1+|eta|^2)^1.5", move |a, b| b * b * b * w23(a, b));
    let b23 = bilinear("eta1*eta2/(1+|eta|^2)^1.5", move |a, b| a * b * w23(a, b));
    let groups = || vec![vec![0], vec![1, 2]];
    let term = |coeff: f64, f: &Symbol, g: &Symbol| MixedTerm {
        coeff,
        partition: Partition::new(groups(), vec![f.clone(), g.clone()], 3).expect("valid partition"),
    };
    Symbol::mixed(
        "sigma2",
        vec![term(1.0, &a3, &b0), term(1.0, &a0, &b2), term(1.0, &a0, &b3), term(-3.0, &a1, &b23)],
    )
    .expect("valid mixed symbol")
}

fn sigma2_factored() -> Symbol {
    let base = sigma2();
    base.with_evaluator(
        "sigma2_factored",
        Arc::new(|x: &[f64]| {
            let (a, b, c) = (x[0], x[1], x[2]);
            let num = (a + b + c) * (a * a + b * b + c * c - a * b - b * c - c * a);
            real(num / ((1.0 + a * a).powf(1.5) * (1.0 + b * b + c * c).powf(1.5)))
        }),
    )
}

fn sigma3() -> Symbol {
    let f = |p: i32| linear(&format!("xi^{p}/(1+xi^2)^2"), move |x| x.powi(p) / (1.0 + x * x).powi(2));
    let (f1, f2, f4) = (f(1), f(2), f(4));
    let term = |coeff: f64, a: &Symbol, b: &Symbol, c: &Symbol| ProductTerm {
        coeff,
        factors: vec![a.clone(), b.clone(), c.clone()],
    };
    Symbol::product(
        "sigma3",
        vec![
            term(1.0, &f4, &f2, &f1),
            term(-1.0, &f4, &f1, &f2),
            term(-1.0, &f2, &f4, &f1),
            term(1.0, &f1, &f4, &f2),
            term(1.0, &f2, &f1, &f4),
            term(-1.0, &f1, &f2, &f4),
        ],
    )
    .expect("valid product symbol")
}

fn sigma3_factored() -> Symbol {
    sigma3().with_evaluator(
        "sigma3_factored",
        Arc::new(|x: &[f64]| {
            let (a, b, c) = (x[0], x[1], x[2]);
            let num = -a * b * c * (a - b) * (b - c) * (c - a) * (a + b + c);
            let den = (1.0 + a * a).powi(2) * (1.0 + b * b).powi(2) * (1.0 + c * c).powi(2);
            real(num / den)
        }),
    )
}

fn sigma4() -> Symbol {
    let g12 = Symbol::general_real("xi1*xi2/(xi1^2+xi2^2+(xi1+xi2)^2)", 2, 1, true, true, |x| {
        let (a, b) = (x[0], x[1]);
        a * b / (a * a + b * b + (a + b) * (a + b))
    })
    .expect("valid arity");
    let h = Symbol::general_real("xi1*xi2/(xi1^2+xi2^2+xi3^2)", 3, 1, true, true, |x| {
        x[0] * x[1] / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    })
    .expect("valid arity");
    let t1 = MixedTerm {
        coeff: 1.0,
        partition: Partition::new(vec![vec![0, 1], vec![2]], vec![g12, constant_one(1, 1)], 3).expect("valid"),
    };
    let t2 = MixedTerm { coeff: -1.0, partition: Partition::new(vec![vec![0, 1, 2]], vec![h], 3).expect("valid") };
    Symbol::mixed("sigma4", vec![t1, t2]).expect("valid mixed symbol")
}

fn canonical_name(name: &str) -> String {
    name.trim().replace('σ', "sigma").to_ascii_lowercase()
}

/// The trilinear example symbols, `constant_one` (arity 3), and the bilinear analogue
/// `sigma1_bilinear = (xi_1+xi_2)^2/(xi_1^2+xi_2^2)`.
pub fn builtin_symbol(name: &str) -> Result<Symbol> {
    match canonical_name(name).as_str() {
        "sigma1" => Ok(sigma1_like("sigma1", 3, 1)),
        "sigma2" => Ok(sigma2()),
        "sigma2_factored" => Ok(sigma2_factored()),
        "sigma3" => Ok(sigma3()),
        "sigma3_factored" => Ok(sigma3_factored()),
        "sigma4" => Ok(sigma4()),
        "constant_one" | "one" => Ok(constant_one(3, 1)),
        "sigma1_bilinear" => Ok(sigma1_like("sigma1_bilinear", 2, 1)),
        _ => Err(Error::UnknownSymbol(name.to_string())),
    }
}

pub const BUILTIN_NAMES: [&str; 8] =
    ["sigma1", "sigma2", "sigma2_factored", "sigma3", "sigma3_factored", "sigma4", "constant_one", "sigma1_bilinear"];

/// Resolve `name` or `name^k`; `constant_one` takes the requested arity.
pub fn resolve_symbol(spec: &str, arity: usize) -> Result<Symbol> {
    let (base, power) = match spec.split_once('^') {
        Some((b, k)) => {
            let k: u32 = k.trim().parse().map_err(|_| Error::UnknownSymbol(spec.to_string()))?;
            (b, k)
        }
        None => (spec, 1),
    };
    let sym = if matches!(canonical_name(base).as_str(), "constant_one" | "one") {
        constant_one(arity, 1)
    } else {
        builtin_symbol(base)?
    };
    if sym.arity() != arity {
        return Err(Error::Arity { expected: arity, got: sym.arity() });
    }
    power_symbol(&sym, power)
}

/// Pointwise `k`-th power. Flags are kept; the result is general kind.
pub fn power_symbol(sym: &Symbol, k: u32) -> Result<Symbol> {
    if k == 0 {
        return Err(Error::Precondition("power must be positive".into()));
    }
    if k == 1 {
        return Ok(sym.clone());
    }
    let inner = sym.clone();
    let name = format!("{}^{k}", sym.name());
    Symbol::new(
        name,
        sym.arity(),
        sym.dim(),
        Arc::new(move |xi: &[f64]| inner.eval(xi).powu(k)),
        SymbolKind::General,
        sym.is_homogeneous(),
        sym.is_singular_at_origin(),
    )
}

fn l1_of_blocks(xi: &[f64], n: usize) -> f64 {
    xi.chunks(n).map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt()).sum()
}

/// All multi-indices of length `dim` with total order `<= max_order`, graded.
pub fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=max_order {
        let mut cur = vec![0usize; dim];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, left: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for v in (0..=left).rev() {
        cur[pos] = v;
        fill(out, cur, pos + 1, left - v);
    }
    cur[pos] = 0;
}

const FD_REL_STEP: f64 = 1e-4;

/// Central finite-difference estimate of `d^alpha sigma` at `xi`, `|alpha| <= 2`.
pub fn partial_derivative(sym: &Symbol, alpha: &[usize], xi: &[f64]) -> Result<Complex64> {
    let dims = sym.arity() * sym.dim();
    if alpha.len() != dims || xi.len() != dims {
        return Err(Error::Arity { expected: dims, got: alpha.len().min(xi.len()) });
    }
    let order: usize = alpha.iter().sum();
    if order > 2 {
        return Err(Error::Precondition(format!("derivative order {order} exceeds 2")));
    }
    let s = l1_of_blocks(xi, sym.dim());
    if s == 0.0 {
        return Err(Error::StencilAtOrigin(xi.to_vec()));
    }
    let h = FD_REL_STEP * s;
    let active: Vec<(usize, usize)> = alpha.iter().enumerate().filter(|(_, &a)| a > 0).map(|(i, &a)| (i, a)).collect();
    let weights = |a: usize| -> &'static [(i32, f64)] {
        match a {
            1 => &[(-1, -0.5), (1, 0.5)],
            _ => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut point = xi.to_vec();
    let mut eval_at = |offsets: &[(usize, i32)], w: f64| -> Result<Complex64> {
        point.copy_from_slice(xi);
        for &(i, o) in offsets {
            point[i] += o as f64 * h;
        }
        if point.iter().all(|&x| x == 0.0) {
            return Err(Error::StencilAtOrigin(xi.to_vec()));
        }
        Ok(sym.eval(&point) * w)
    };
    match active.as_slice() {
        [] => acc += eval_at(&[], 1.0)?,
        [(i, a)] => {
            for &(o, w) in weights(*a) {
                acc += eval_at(&[(*i, o)], w)?;
            }
        }
        [(i, a), (j, b)] => {
            for &(o1, w1) in weights(*a) {
                for &(o2, w2) in weights(*b) {
                    acc += eval_at(&[(*i, o1), (*j, o2)], w1 * w2)?;
                }
            }
        }
        _ => unreachable!("order <= 2"),
    }
    Ok(acc / h.powi(order as i32))
}

/// `sup_samples |d^alpha sigma(xi)| * (|xi_1| + ... + |xi_m|)^{|alpha|}`.
pub fn cm_condition_ratio(sym: &Symbol, alpha: &[usize], samples: &[Vec<f64>]) -> Result<f64> {
    let order: usize = alpha.iter().sum();
    let mut sup = 0.0f64;
    for xi in samples {
        let d = partial_derivative(sym, alpha, xi)?;
        let s = l1_of_blocks(xi, sym.dim());
        sup = sup.max(d.norm() * s.powi(order as i32));
    }
    Ok(sup)
}

/// Unit directions in `R^{mn}`: the diagonals `+-(1,...,1)/sqrt(mn)`, the coordinate
/// axes, and `extra` seeded random directions.
pub fn direction_set(m: usize, n: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = m * n;
    let mut out = Vec::with_capacity(2 * d + 2 + extra);
    let diag = 1.0 / (d as f64).sqrt();
    out.push(vec![diag; d]);
    out.push(vec![-diag; d]);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < 2 * d + 2 + extra {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 {
            out.push(v.into_iter().map(|x| x / r).collect());
        }
    }
    out
}

pub fn shell(directions: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
    directions.iter().map(|d| d.iter().map(|x| x * radius).collect()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShellReport {
    pub alpha: Vec<usize>,
    pub shell_exponents: Vec<i32>,
    pub sups: Vec<f64>,
    pub core_sup: f64,
    pub wide_sup: f64,
    pub stable: bool,
}

const ZERO_FLOOR: f64 = 1e-12;
const SHELL_TOL: f64 = 0.1;

/// Per-shell suprema over shells `2^k`, `k in core`, plus the widened range `wide`.
/// Stable when the widened sup agrees with the core sup within 10%, and, for
/// homogeneous symbols, when all core per-shell sups agree within 10%.
pub fn shell_stability(
    sym: &Symbol,
    alpha: &[usize],
    directions: &[Vec<f64>],
    core: std::ops::RangeInclusive<i32>,
    wide: std::ops::RangeInclusive<i32>,
) -> Result<ShellReport> {
    let mut shell_exponents = Vec::new();
    let mut sups = Vec::new();
    for k in core.clone() {
        shell_exponents.push(k);
        sups.push(cm_condition_ratio(sym, alpha, &shell(directions, 2f64.powi(k)))?);
    }
    let core_sup = sups.iter().cloned().fold(0.0, f64::max);
    let mut wide_sup = core_sup;
    for k in wide {
        if !core.contains(&k) {
            wide_sup = wide_sup.max(cm_condition_ratio(sym, alpha, &shell(directions, 2f64.powi(k)))?);
        }
    }
    let close = |a: f64, b: f64| a.max(b) <= ZERO_FLOOR || (a - b).abs() <= SHELL_TOL * a.max(b);
    let mut stable = core_sup.is_finite() && wide_sup.is_finite() && close(core_sup, wide_sup);
    if sym.is_homogeneous() {
        let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
        stable &= close(lo, core_sup);
    }
    Ok(ShellReport { alpha: alpha.to_vec(), shell_exponents, sups, core_sup, wide_sup, stable })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentReport {
    pub component: String,
    pub arity: usize,
    pub shells: Vec<ShellReport>,
}

impl ComponentReport {
    pub fn stable(&self) -> bool {
        self.shells.iter().all(|s| s.stable)
    }
}

/// Coifman-Meyer check of every structural component for `|alpha| <= max_order`
/// over shells `2^-4..2^4` (widened range `2^-6..2^6`).
pub fn cm_structural_check(sym: &Symbol, max_order: usize, extra_directions: usize, seed: u64) -> Result<Vec<ComponentReport>> {
    cm_structural_check_on(sym, max_order, extra_directions, seed, -4..=4)
}

pub fn cm_structural_check_on(
    sym: &Symbol,
    max_order: usize,
    extra_directions: usize,
    seed: u64,
    core: std::ops::RangeInclusive<i32>,
) -> Result<Vec<ComponentReport>> {
    let wide = (core.start() - 2)..=(core.end() + 2);
    let mut out = Vec::new();
    for comp in sym.cm_components() {
        let dirs = direction_set(comp.arity(), comp.dim(), extra_directions, seed);
        let mut shells = Vec::new();
        for alpha in multi_indices(comp.arity() * comp.dim(), max_order) {
            shells.push(shell_stability(&comp, &alpha, &dirs, core.clone(), wide.clone())?);
        }
        out.push(ComponentReport { component: comp.name().to_string(), arity: comp.arity(), shells });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneReport {
    /// `residuals[k]`: max over samples of `|d_nu^k sigma| * (sum |xi_j|)^k`.
    pub residuals: Vec<f64>,
}

impl PlaneReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Transverse vanishing on `sum xi_j = 0`, probed along `(e_a, ..., e_a)/sqrt(m)` for each
/// coordinate `a`, derivative orders `0..=order` (at most 2).
pub fn plane_vanishing_order(sym: &Symbol, order: usize, samples: &[Vec<f64>]) -> Result<PlaneReport> {
    if order > 2 {
        return Err(Error::Precondition(format!("transverse order {order} exceeds 2")));
    }
    let (m, n) = (sym.arity(), sym.dim());
    let mut residuals = vec![0.0f64; order + 1];
    let mut point = vec![0.0; m * n];
    for xi in samples {
        if xi.len() != m * n {
            return Err(Error::Arity { expected: m * n, got: xi.len() });
        }
        let s = l1_of_blocks(xi, n);
        if s == 0.0 {
            return Err(Error::Precondition("plane sample at the origin".into()));
        }
        let h = FD_REL_STEP * s;
        let step = 1.0 / (m as f64).sqrt();
        for a in 0..n {
            let mut at = |t: f64| {
                point.copy_from_slice(xi);
                for j in 0..m {
                    point[j * n + a] += t * step;
                }
                sym.eval(&point)
            };
            let f0 = at(0.0);
            residuals[0] = residuals[0].max(f0.norm());
            if order >= 1 {
                let (fp, fm) = (at(h), at(-h));
                residuals[1] = residuals[1].max(((fp - fm) / (2.0 * h)).norm() * s);
                if order >= 2 {
                    residuals[2] = residuals[2].max(((fp - f0 * 2.0 + fm) / (h * h)).norm() * s * s);
                }
            }
        }
    }
    Ok(PlaneReport { residuals })
}

/// `max |a - b| / (1 + |a|)` over the samples.
pub fn forms_agree(a: &Symbol, b: &Symbol, samples: &[Vec<f64>]) -> Result<f64> {
    if a.arity() != b.arity() || a.dim() != b.dim() {
        return Err(Error::Arity { expected: a.arity(), got: b.arity() });
    }
    let mut worst = 0.0f64;
    for xi in samples {
        let (va, vb) = (a.eval(xi), b.eval(xi));
        worst = worst.max((va - vb).norm() / (1.0 + va.norm()));
    }
    Ok(worst)
}

/// Random tuples with coordinates in `[-1, 1]` times a dyadic scale in `2^[-4, 4]`.
pub fn random_samples(m: usize, n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let scale = 2f64.powf(rng.gen_range(-4.0..4.0));
            (0..m * n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
        })
        .collect()
}

/// Random points of the plane `sum_j xi_j = 0` (componentwise), away from the origin.
pub fn plane_samples(m: usize, n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let scale = 2f64.powf(rng.gen_range(-4.0..4.0));
        let mut xi = vec![0.0; m * n];
        for a in 0..n {
            let mut last = 0.0;
            for j in 0..m - 1 {
                let v = scale * rng.gen_range(-1.0..1.0);
                xi[j * n + a] = v;
                last -= v;
            }
            xi[(m - 1) * n + a] = last;
        }
        if l1_of_blocks(&xi, n) > 1e-3 * scale {
            out.push(xi);
        }
    }
    out
}
