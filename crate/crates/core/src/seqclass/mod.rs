//! Norm engines for the six sequence classes.
//!
//! Every class norm depends only on the multiset of nonzero entries of the
//! n-sequence, never on how they are indexed. The engines therefore flatten the
//! input into a sorted list of entries first, which makes permutation
//! invariance exact and lets the same code serve every order `n`.

mod cohen;
mod mid;
mod mixed;
mod weak;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mutation::{active, Mutation};
use crate::nseq::NSeq;
use crate::optim::OptBudget;
use crate::spaces::{lr_norm, Exponent, Functional};

pub use mixed::MixedFactorization;

/// Default number of functionals kept by the mid engine.
pub const DEFAULT_MID_TRUNCATION: usize = 8;

fn default_trunc() -> usize {
    DEFAULT_MID_TRUNCATION
}

/// Which sequence-class norm to evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE", try_from = "RawSpec")]
pub enum ClassSpec {
    /// `sup ‖x_j‖`.
    Linf,
    /// `(Σ ‖x_j‖^p)^{1/p}`.
    Lp { p: f64 },
    /// `sup_{φ ∈ B_{E'}} (Σ |φ(x_j)|^p)^{1/p}`.
    Weak { p: f64 },
    /// Supremum of `|Σ φ_j(x_j)|` over families with weak `ℓ_{p'}` norm at most one.
    Cohen { p: f64 },
    /// Supremum of `(Σ_n Σ_j |φ_n(x_j)|^p)^{1/p}` over at most `trunc`
    /// functionals with weak `ℓ_p` norm at most one.
    Mid {
        p: f64,
        #[serde(default = "default_trunc")]
        trunc: usize,
    },
    /// Infimum of `‖τ‖_r ‖x⁰‖_{w,s}` over factorizations `x = τ x⁰`, `1/r = 1/q - 1/s`.
    Mixed { s: f64, q: f64 },
}

/// Flat form of a spec; parsing through it keeps field positions in errors.
#[derive(Deserialize)]
struct RawSpec {
    kind: SpecKind,
    p: Option<f64>,
    s: Option<f64>,
    q: Option<f64>,
    trunc: Option<usize>,
}

#[derive(Deserialize)]
#[serde(rename_all = "UPPERCASE")]
enum SpecKind {
    Linf,
    Lp,
    Weak,
    Cohen,
    Mid,
    Mixed,
}

impl TryFrom<RawSpec> for ClassSpec {
    type Error = String;
    fn try_from(r: RawSpec) -> std::result::Result<Self, String> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("missing field `{name}`"));
        Ok(match r.kind {
            SpecKind::Linf => ClassSpec::Linf,
            SpecKind::Lp => ClassSpec::Lp { p: need(r.p, "p")? },
            SpecKind::Weak => ClassSpec::Weak { p: need(r.p, "p")? },
            SpecKind::Cohen => ClassSpec::Cohen { p: need(r.p, "p")? },
            SpecKind::Mid => ClassSpec::Mid { p: need(r.p, "p")?, trunc: r.trunc.unwrap_or_else(default_trunc) },
            SpecKind::Mixed => ClassSpec::Mixed { s: need(r.s, "s")?, q: need(r.q, "q")? },
        })
    }
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassSpec::Linf => f.write_str("LINF"),
            ClassSpec::Lp { p } => write!(f, "LP(p={p})"),
            ClassSpec::Weak { p } => write!(f, "WEAK(p={p})"),
            ClassSpec::Cohen { p } => write!(f, "COHEN(p={p})"),
            ClassSpec::Mid { p, trunc } => write!(f, "MID(p={p},N={trunc})"),
            ClassSpec::Mixed { s, q } => write!(f, "MIXED(s={s},q={q})"),
        }
    }
}

impl ClassSpec {
    pub fn lp(p: f64) -> Self {
        ClassSpec::Lp { p }
    }

    pub fn weak(p: f64) -> Self {
        ClassSpec::Weak { p }
    }

    pub fn cohen(p: f64) -> Self {
        ClassSpec::Cohen { p }
    }

    pub fn mid(p: f64) -> Self {
        ClassSpec::Mid { p, trunc: DEFAULT_MID_TRUNCATION }
    }

    pub fn mixed(s: f64, q: f64) -> Self {
        ClassSpec::Mixed { s, q }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClassSpec::Linf => "LINF",
            ClassSpec::Lp { .. } => "LP",
            ClassSpec::Weak { .. } => "WEAK",
            ClassSpec::Cohen { .. } => "COHEN",
            ClassSpec::Mid { .. } => "MID",
            ClassSpec::Mixed { .. } => "MIXED",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_ge1 = |name: &str, v: f64| {
            if v.is_finite() && v >= 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in [1, inf), got {v}")))
            }
        };
        match *self {
            ClassSpec::Linf => Ok(()),
            ClassSpec::Lp { p } | ClassSpec::Weak { p } => finite_ge1("p", p),
            ClassSpec::Cohen { p } => {
                if p.is_finite() && p > 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("COHEN needs 1 < p < inf, got {p}")))
                }
            }
            ClassSpec::Mid { p, trunc } => {
                finite_ge1("p", p)?;
                if trunc == 0 {
                    return Err(Error::invalid("MID truncation must be at least 1"));
                }
                Ok(())
            }
            ClassSpec::Mixed { s, q } => {
                finite_ge1("s", s)?;
                finite_ge1("q", q)?;
                if q > s {
                    return Err(Error::invalid(format!("MIXED needs q <= s, got s={s}, q={q}")));
                }
                Ok(())
            }
        }
    }

    /// The exponent `r` of the multiplier space in the mixed class.
    pub fn mixed_multiplier_exponent(s: f64, q: f64) -> Exponent {
        if s == q {
            Exponent::Infinity
        } else {
            Exponent::Finite(q * s / (s - q))
        }
    }

    /// The strong scalar class `ℓ_t` that this class reduces to over the
    /// scalar field. Used for the multiple-regular pairing.
    pub fn scalar_exponent(&self) -> Exponent {
        match *self {
            ClassSpec::Linf => Exponent::Infinity,
            ClassSpec::Lp { p } | ClassSpec::Weak { p } | ClassSpec::Cohen { p } | ClassSpec::Mid { p, .. } => {
                Exponent::Finite(p)
            }
            ClassSpec::Mixed { q, .. } => Exponent::Finite(q),
        }
    }
}

/// How a reported value relates to the true norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Exact,
    LowerBound,
    UpperBound,
}

/// Evidence attached to a norm value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// A norm-one functional attaining the weak value.
    Functional { functional: Functional },
    /// One functional per entry, with weak `ℓ_{p'}` norm at most one.
    Family { family: NSeq },
    /// Finitely many functionals with weak `ℓ_p` norm at most one.
    Functionals { functionals: Vec<Functional> },
    Factorization(MixedFactorization),
}

/// A class-norm value together with its certification mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub spec: ClassSpec,
    pub value: f64,
    pub mode: Mode,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl NormResult {
    pub(crate) fn exact(spec: &ClassSpec, value: f64) -> Self {
        NormResult { spec: spec.clone(), value, mode: Mode::Exact, converged: true, truncation: None, witness: None }
    }

    pub(crate) fn with_witness(mut self, w: Option<Witness>) -> Self {
        self.witness = w;
        self
    }
}

/// Requested evaluation path for the weak engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    /// Vertex enumeration of the dual ball; fails on non-polytope balls.
    Exact,
    /// Multi-start ascent, even when enumeration would be possible.
    Opt,
    /// Exact when available, otherwise ascent.
    Auto,
}

/// The nonzero entries of an n-sequence, scaled to unit maximum norm and
/// sorted lexicographically.
pub(crate) struct Entries {
    pub rows: Vec<Vec<f64>>,
    /// Flat position in the source sequence of each row.
    pub origin: Vec<usize>,
    /// The largest entry norm; the rows are the entries divided by it.
    pub scale: f64,
}

impl Entries {
    pub fn of(x: &NSeq) -> Entries {
        let scale = x.max_entry_norm();
        let mut items: Vec<(usize, Vec<f64>)> = x
            .entries()
            .enumerate()
            .filter(|(_, e)| e.iter().any(|&v| v != 0.0))
            .map(|(i, e)| (i, e.iter().map(|v| v / scale).collect()))
            .collect();
        items.sort_by(|a, b| lex_cmp(&a.1, &b.1).then(a.0.cmp(&b.0)));
        let (origin, rows) = items.into_iter().unzip();
        Entries { rows, origin, scale }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Evaluates class norms with a fixed budget and, optionally, a planted defect.
#[derive(Clone, Debug, Default)]
pub struct Engine {
    pub budget: OptBudget,
    pub mutation: Option<Mutation>,
}

impl Engine {
    pub fn new(budget: OptBudget) -> Self {
        Self { budget, mutation: None }
    }

    pub fn with_mutation(mut self, mutation: Option<Mutation>) -> Self {
        self.mutation = mutation;
        self
    }

    /// Dispatches to the engine for `spec`.
    pub fn norm(&self, spec: &ClassSpec, x: &NSeq) -> Result<NormResult> {
        spec.validate()?;
        self.budget.validate()?;
        let e = Entries::of(x);
        match *spec {
            ClassSpec::Linf => Ok(NormResult::exact(spec, e.scale)),
            ClassSpec::Lp { p } => Ok(NormResult::exact(spec, self.strong(&e, x, p))),
            ClassSpec::Weak { p } => weak::weak(self, spec, &e, x, p, Strategy::Auto),
            ClassSpec::Cohen { p } => cohen::cohen(self, spec, &e, x, p),
            ClassSpec::Mid { p, trunc } => mid::mid(self, spec, &e, x, p, trunc),
            ClassSpec::Mixed { s, q } => mixed::mixed(self, spec, &e, x, s, q),
        }
    }

    /// The weak norm with an explicit evaluation path.
    pub fn weak(&self, x: &NSeq, p: f64, strategy: Strategy) -> Result<NormResult> {
        let spec = ClassSpec::Weak { p };
        spec.validate()?;
        self.budget.validate()?;
        weak::weak(self, &spec, &Entries::of(x), x, p, strategy)
    }

    fn strong(&self, e: &Entries, x: &NSeq, p: f64) -> f64 {
        let p = if active(self.mutation, Mutation::LpWrongExponent) { 1.0 } else { p };
        strong_lp(e, x, p)
    }
}

/// `(Σ ‖x_j‖^p)^{1/p}` over the canonical entries.
pub(crate) fn strong_lp(e: &Entries, x: &NSeq, p: f64) -> f64 {
    if e.is_empty() {
        return 0.0;
    }
    let norms: Vec<f64> = e.rows.iter().map(|r| x.space().norm_unchecked(r)).collect();
    e.scale * lr_norm(Exponent::Finite(p), &norms)
}

/// Evaluates `spec` on `x`.
pub fn class_norm(spec: &ClassSpec, x: &NSeq, budget: &OptBudget) -> Result<NormResult> {
    Engine::new(budget.clone()).norm(spec, x)
}

/// The weak `ℓ_p` norm with an explicit strategy.
pub fn weak_norm(x: &NSeq, p: f64, strategy: Strategy, budget: &OptBudget) -> Result<NormResult> {
    Engine::new(budget.clone()).weak(x, p, strategy)
}

/// The Cohen strongly `p`-summable norm.
pub fn cohen_norm(x: &NSeq, p: f64, budget: &OptBudget) -> Result<NormResult> {
    class_norm(&ClassSpec::Cohen { p }, x, budget)
}

/// The mid `p`-summable norm with `trunc` functionals.
pub fn mid_norm(x: &NSeq, p: f64, trunc: usize, budget: &OptBudget) -> Result<NormResult> {
    class_norm(&ClassSpec::Mid { p, trunc }, x, budget)
}

/// The mixed `(s, q)`-summable norm.
pub fn mixed_norm(x: &NSeq, s: f64, q: f64, budget: &OptBudget) -> Result<NormResult> {
    class_norm(&ClassSpec::Mixed { s, q }, x, budget)
}

#[cfg(test)]
mod tests;
