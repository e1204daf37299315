//! Moving engine witnesses between related sequences.
//!
//! A lower-bound engine on the large side of an inequality can undershoot and
//! fake a violation. When the small side's witness can be transported to the
//! large side, its value there is an independent lower bound, and the check
//! uses the larger of the two. Upper bounds from mixed factorizations are
//! transported the other way.

use crate::error::Result;
use crate::nseq::NSeq;
use crate::operators::LinearOp;
use crate::seqclass::{ClassSpec, Engine, MixedFactorization, Strategy, Witness};
use crate::spaces::{dot, lr_norm, Exponent, Functional};

/// The value a lower-bound witness certifies on `y`, or `None` when the
/// witness does not apply.
pub(crate) fn certify_lower(clean: &Engine, spec: &ClassSpec, w: &Witness, y: &NSeq) -> Option<f64> {
    let space = y.space();
    match (spec, w) {
        (ClassSpec::Weak { p }, Witness::Functional { functional }) if functional.host() == space => {
            let n = functional.dual_norm();
            (n > 0.0).then(|| power_root(y, std::slice::from_ref(functional), *p) / n)
        }
        (ClassSpec::Mid { p, .. }, Witness::Functionals { functionals }) => {
            if functionals.is_empty() || functionals.iter().any(|f| f.host() != space) {
                return None;
            }
            let vecs: Vec<Vec<f64>> = functionals.iter().map(|f| f.coefficients().to_vec()).collect();
            let fam = NSeq::from_vectors(&space.dual(), &vecs).ok()?;
            let width = clean.weak(&fam, *p, Strategy::Auto).ok()?.value;
            (width > 0.0).then(|| power_root(y, functionals, *p) / width)
        }
        (ClassSpec::Cohen { p }, Witness::Family { family }) => {
            if family.shape() != y.shape() || family.space() != &space.dual() {
                return None;
            }
            let width = clean.weak(family, p / (p - 1.0), Strategy::Auto).ok()?.value;
            let pairing: f64 = family.entries().zip(y.entries()).map(|(f, v)| dot(f, v)).sum();
            (width > 0.0).then(|| pairing.abs() / width)
        }
        _ => None,
    }
}

/// `(Σ_k Σ_j |φ_k(y_j)|^p)^{1/p}`.
fn power_root(y: &NSeq, fs: &[Functional], p: f64) -> f64 {
    let vals: Vec<f64> =
        fs.iter().flat_map(|f| y.entries().map(move |v| dot(f.coefficients(), v))).collect();
    lr_norm(Exponent::Finite(p), &vals)
}

/// Pulls functionals on `u.target` back to `u.source` through `uᵀ`.
pub(crate) fn pullback(w: &Witness, u: &LinearOp) -> Option<Witness> {
    let back = |f: &Functional| -> Option<Functional> {
        (f.host() == u.target()).then(|| Functional::new(u.source(), u.transpose_apply(f.coefficients()).ok()?).ok())?
    };
    match w {
        Witness::Functional { functional } => Some(Witness::Functional { functional: back(functional)? }),
        Witness::Functionals { functionals } => {
            Some(Witness::Functionals { functionals: functionals.iter().map(back).collect::<Option<_>>()? })
        }
        Witness::Family { family } => {
            if family.space() != &u.target().dual() {
                return None;
            }
            let mapped =
                family.map_entries(&u.source().dual(), |f| u.transpose_apply(f).expect("checked dimension")).ok()?;
            Some(Witness::Family { family: mapped })
        }
        Witness::Factorization(_) => None,
    }
}

/// Applies `reindex` to a Cohen family; functionals carry over unchanged.
pub(crate) fn reindex(w: &Witness, reindex: impl Fn(&NSeq) -> Result<NSeq>) -> Option<Witness> {
    match w {
        Witness::Family { family } => Some(Witness::Family { family: reindex(family).ok()? }),
        Witness::Factorization(_) => None,
        other => Some(other.clone()),
    }
}

/// `‖τ‖_r · ‖x⁰‖_{w,s}` for a mixed factorization carried to another sequence.
pub(crate) fn certify_upper(clean: &Engine, spec: &ClassSpec, tau: &NSeq, x0: &NSeq) -> Option<f64> {
    let ClassSpec::Mixed { s, q } = *spec else { return None };
    let r = ClassSpec::mixed_multiplier_exponent(s, q);
    let weak = clean.weak(x0, s, Strategy::Auto).ok()?.value;
    Some(lr_norm(r, tau.data()) * weak)
}

/// The factorization behind a mixed result.
pub(crate) fn factorization(w: &Option<Witness>) -> Option<&MixedFactorization> {
    match w {
        Some(Witness::Factorization(f)) => Some(f),
        _ => None,
    }
}
