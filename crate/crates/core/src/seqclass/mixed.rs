//! The mixed class norm `inf ‖τ‖_r ‖x/τ‖_{w,s}`.
//!
//! With `z_j = τ_j^{-s}` the constraint `‖x/τ‖_{w,s} <= 1` reads
//! `Σ_j |φ(x_j)|^s z_j <= 1` for every `φ` in the dual ball, which is linear in
//! `z`; minimizing `‖τ‖_r` subject to `z_j τ_j^s >= 1` is then a convex
//! program. The reported value is always recomputed from an explicit
//! factorization, so it is an upper bound whenever the weak norm of `x⁰` is
//! evaluated exactly.

use serde::{Deserialize, Serialize};

use super::weak;
use super::{ClassSpec, Engine, Entries, Mode, NormResult, Strategy, Witness};
use crate::conic::{Affine, ConicProgram};
use crate::error::{Error, Result};
use crate::mutation::{active, Mutation};
use crate::nseq::NSeq;
use crate::optim::{max_power_sum, power_sum_peaks};
use crate::spaces::{lr_norm, Exponent, FiniteSpace};

const MAX_ROUNDS: usize = 40;
const NEW_PER_ROUND: usize = 8;

/// A representation `x = τ · x⁰` certifying an upper bound for the mixed norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedFactorization {
    /// Scalar multipliers, zero off the support of `x`.
    pub tau: NSeq,
    pub x0: NSeq,
    /// `‖τ‖_r · ‖x⁰‖_{w,s}`.
    pub value: f64,
}

impl MixedFactorization {
    /// The entrywise product `τ · x⁰`.
    pub fn reconstruct(&self) -> Result<NSeq> {
        if self.tau.shape() != self.x0.shape() {
            return Err(Error::invalid("factorization shapes differ"));
        }
        let d = self.x0.dim();
        let data = self
            .x0
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| self.tau.data()[i / d] * v)
            .collect();
        NSeq::from_flat(self.x0.shape().clone(), self.x0.space(), data)
    }
}

pub(super) fn mixed(engine: &Engine, spec: &ClassSpec, e: &Entries, x: &NSeq, s: f64, q: f64) -> Result<NormResult> {
    let w = if active(engine.mutation, Mutation::MixedWrongExponent) { q } else { s };
    let r = ClassSpec::mixed_multiplier_exponent(s, q);
    if e.is_empty() {
        return Ok(NormResult::exact(spec, 0.0));
    }
    let ones = vec![1.0; e.len()];
    if s == q {
        let wr = weak::weak(engine, &ClassSpec::Weak { p: q }, e, x, q, Strategy::Auto)?;
        let fact = factorization(x, e, &ones, r, wr.value)?;
        return Ok(NormResult {
            spec: spec.clone(),
            value: wr.value,
            mode: wr.mode,
            converged: wr.converged,
            truncation: None,
            witness: Some(Witness::Factorization(fact)),
        });
    }
    let space = x.space();
    let norms: Vec<f64> = e.rows.iter().map(|row| space.norm_unchecked(row)).collect();
    let Exponent::Finite(rf) = r else { unreachable!("s > q gives a finite multiplier exponent") };
    if space.is_scalar() || e.len() == 1 {
        // Hölder: ‖x‖_t = inf ‖τ‖_r ‖x/τ‖_w with 1/t = 1/r + 1/w, attained at τ = |x|^{t/r}.
        let t = 1.0 / (1.0 / rf + 1.0 / w);
        let tau: Vec<f64> = norms.iter().map(|n| n.powf(t / rf)).collect();
        let value = e.scale * lr_norm(Exponent::Finite(t), &norms);
        let fact = factorization(x, e, &tau, r, value)?;
        return Ok(NormResult::exact(spec, value).with_witness(Some(Witness::Factorization(fact))));
    }

    let (solved, converged) = match solve_program(engine, space, &e.rows, w, rf) {
        Ok((tau, conv)) => (Some(tau), conv),
        Err(Error::Solver(_)) => (None, false),
        Err(err) => return Err(err),
    };
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if let Some(t) = solved {
        if t.iter().all(|v| *v > 0.0 && v.is_finite()) {
            candidates.push(t);
        }
    }
    candidates.push(ones);
    for theta in [0.5, q / s, 1.0, 1.0 - q / s] {
        candidates.push(norms.iter().map(|n| n.powf(theta)).collect());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for tau in candidates {
        let v = evaluate(engine, space, &e.rows, &tau, w, rf);
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, tau));
        }
    }
    let (v, tau) = best.expect("at least one candidate");
    let value = e.scale * v;
    let fact = factorization(x, e, &tau, r, value)?;
    Ok(NormResult {
        spec: spec.clone(),
        value,
        mode: Mode::UpperBound,
        converged,
        truncation: None,
        witness: Some(Witness::Factorization(fact)),
    })
}

/// `‖τ‖_r · ‖(x_j/τ_j)‖_{w,s}` on the normalized rows.
fn evaluate(engine: &Engine, space: &FiniteSpace, rows: &[Vec<f64>], tau: &[f64], w: f64, r: f64) -> f64 {
    let scaled: Vec<Vec<f64>> = rows.iter().zip(tau).map(|(row, t)| row.iter().map(|v| v / t).collect()).collect();
    let weak = max_power_sum(&space.dual(), &scaled, None, w, &engine.budget, 0x4D58, false).value.powf(1.0 / w);
    lr_norm(Exponent::Finite(r), tau) * weak
}

fn factorization(x: &NSeq, e: &Entries, tau: &[f64], r: Exponent, value: f64) -> Result<MixedFactorization> {
    let _ = r;
    let mut t = NSeq::zeros(x.shape().clone(), &FiniteSpace::scalar())?;
    let mut x0 = NSeq::zeros(x.shape().clone(), x.space())?;
    for (&flat, &tj) in e.origin.iter().zip(tau) {
        let idx = x.shape().multi_index(flat);
        t.set_entry(&idx, &[tj])?;
        let v: Vec<f64> = x.flat_entry(flat).iter().map(|c| c / tj).collect();
        x0.set_entry(&idx, &v)?;
    }
    Ok(MixedFactorization { tau: t, x0, value })
}

/// Solves for the multipliers, generating dual-ball atoms by cutting planes
/// when the dual ball is curved.
fn solve_program(engine: &Engine, space: &FiniteSpace, rows: &[Vec<f64>], w: f64, r: f64) -> Result<(Vec<f64>, bool)> {
    let m = rows.len();
    let dual = space.dual();
    let (mut atoms, polytope) = match dual.ball_vertices_up_to_sign() {
        Some(v) if v.len() <= 512 => (v, true),
        _ => (rows.iter().map(|row| dual.support_point(row)).collect::<Vec<_>>(), false),
    };
    let mut tau = vec![1.0; m];
    for round in 0..MAX_ROUNDS {
        let mut prog = ConicProgram::new();
        let z0 = prog.add_vars(m);
        let t0 = prog.add_vars(m);
        let t = prog.add_vars(1);
        prog.set_cost(t, 1.0);
        for phi in &atoms {
            let terms: Vec<(usize, f64)> = rows
                .iter()
                .enumerate()
                .map(|(j, row)| (z0 + j, -crate::spaces::dot(phi, row).abs().powf(w)))
                .filter(|&(_, c)| c != 0.0)
                .collect();
            prog.nonneg(Affine { terms, constant: 1.0 });
        }
        for j in 0..m {
            prog.pow(Affine::var(z0 + j), Affine::var(t0 + j), Affine::constant(1.0), 1.0 / (1.0 + w));
        }
        if r == 2.0 {
            let mut es = vec![Affine::var(t)];
            es.extend((0..m).map(|j| Affine::var(t0 + j)));
            prog.soc(&es);
        } else {
            let rho = prog.add_vars(m);
            let mut terms: Vec<(usize, f64)> = (0..m).map(|j| (rho + j, 1.0)).collect();
            terms.push((t, -1.0));
            prog.eq(Affine { terms, constant: 0.0 });
            for j in 0..m {
                prog.pow(Affine::var(rho + j), Affine::var(t), Affine::var(t0 + j), 1.0 / r);
            }
        }
        let sol = prog.solve(engine.budget.tolerance)?;
        tau = sol.x[t0..t0 + m].to_vec();
        if polytope {
            return Ok((tau, sol.accurate));
        }
        let z: Vec<f64> = sol.x[z0..z0 + m].iter().map(|v| v.max(0.0)).collect();
        let peaks = power_sum_peaks(&dual, rows, Some(&z), w, &engine.budget, 0x4D50 + round as u64);
        if peaks.first().map_or(true, |(value, _, _)| *value <= 1.0 + 1e-7) {
            return Ok((tau, sol.accurate));
        }
        atoms.extend(
            peaks.into_iter().take(NEW_PER_ROUND).filter(|(value, _, _)| *value > 1.0 + 1e-7).map(|(_, point, _)| point),
        );
    }
    Ok((tau, false))
}
