use super::{ClassSpec, Engine, Entries, Mode, NormResult, Strategy, Witness};
use crate::error::{Error, Result};
use crate::mutation::{active, Mutation};
use crate::nseq::NSeq;
use crate::optim::max_power_sum;
use crate::spaces::Functional;

/// Best functional and value for the weak norm of the normalized rows.
pub(super) struct WeakSolution {
    /// `sup_φ Σ |φ(row_j)|^p` (not rooted, unscaled).
    pub power: f64,
    pub functional: Vec<f64>,
    pub exact: bool,
    pub converged: bool,
}

pub(super) fn solve(engine: &Engine, e: &Entries, x: &NSeq, p: f64, strategy: Strategy) -> Result<WeakSolution> {
    let dual = x.space().dual();
    let polytope = dual.ball_is_polytope() && dual.ball_vertices_up_to_sign().is_some();
    let ascent_only = match strategy {
        Strategy::Exact if !polytope => {
            return Err(Error::Strategy(format!(
                "exact weak norm needs a polytope dual ball, {} has none",
                x.space()
            )))
        }
        Strategy::Exact | Strategy::Auto => false,
        Strategy::Opt => true,
    };
    let r = max_power_sum(&dual, &e.rows, None, p, &engine.budget, 0x5745_414b, ascent_only);
    Ok(WeakSolution { power: r.value, functional: r.point, exact: r.exact, converged: r.converged })
}

pub(super) fn weak(
    engine: &Engine,
    spec: &ClassSpec,
    e: &Entries,
    x: &NSeq,
    p: f64,
    strategy: Strategy,
) -> Result<NormResult> {
    let p = if active(engine.mutation, Mutation::WeakWrongExponent) { 2.0 * p } else { p };
    if e.is_empty() {
        if strategy == Strategy::Exact && !x.space().dual().ball_is_polytope() {
            solve(engine, e, x, p, strategy)?;
        }
        return Ok(NormResult::exact(spec, 0.0));
    }
    let sol = solve(engine, e, x, p, strategy)?;
    let value = e.scale * sol.power.powf(1.0 / p);
    let functional = Functional::new(x.space(), sol.functional)?;
    Ok(NormResult {
        spec: spec.clone(),
        value,
        mode: if sol.exact { Mode::Exact } else { Mode::LowerBound },
        converged: sol.converged,
        truncation: None,
        witness: Some(Witness::Functional { functional }),
    })
}
