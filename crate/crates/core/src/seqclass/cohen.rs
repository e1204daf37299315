//! The Cohen class norm, evaluated as the projective tensor norm of the entry
//! matrix in `ℓ_p^M ⊗ E` with a dual certificate.

use nalgebra::DMatrix;

use super::{strong_lp, ClassSpec, Engine, Entries, Mode, NormResult, Witness};
use crate::conic::{Affine, ConicProgram};
use crate::error::{Error, Result};
use crate::mutation::{active, Mutation};
use crate::nseq::NSeq;
use crate::optim::power_sum_peaks;
use crate::spaces::{dot, lr_norm, Exponent, FiniteSpace};

const MAX_ROUNDS: usize = 40;
const NEW_PER_ROUND: usize = 8;
/// Relative duality gap at which column generation stops.
const GAP: f64 = 1e-6;
/// Directions whose weight falls below this fraction of the objective are dropped.
const PRUNE: f64 = 1e-3;

pub(super) fn cohen(engine: &Engine, spec: &ClassSpec, e: &Entries, x: &NSeq, p: f64) -> Result<NormResult> {
    let p = if active(engine.mutation, Mutation::CohenDroppedConjugation) { p / (p - 1.0) } else { p };
    if e.is_empty() {
        return Ok(NormResult::exact(spec, 0.0));
    }
    let space = x.space();
    let exact = |value: f64, family: Vec<Vec<f64>>| -> Result<NormResult> {
        Ok(NormResult::exact(spec, value).with_witness(Some(Witness::Family { family: family_nseq(x, e, family)? })))
    };
    if space.is_scalar() || e.len() == 1 {
        return exact(strong_lp(e, x, p), holder_family(space, &e.rows, p));
    }
    if space.exponent().is_one() {
        let (v, fam) = l1_columns(&e.rows, p);
        return exact(e.scale * v, fam);
    }
    if space.exponent() == Exponent::Finite(2.0) && p == 2.0 {
        let (v, fam) = nuclear(&e.rows);
        return exact(e.scale * v, fam);
    }

    let holder = holder_family(space, &e.rows, p);
    let proj = projective(engine, space, &e.rows, p)?;
    let holder_value = strong_lp(e, x, p) / e.scale;
    let (mut lower, family) = if proj.lower >= holder_value { (proj.lower, proj.family) } else { (holder_value, holder) };
    lower = lower.min(proj.upper.max(holder_value));
    Ok(NormResult {
        spec: spec.clone(),
        value: e.scale * lower,
        mode: Mode::LowerBound,
        converged: proj.upper - lower <= 1e-6 * proj.upper,
        truncation: None,
        witness: Some(Witness::Family { family: family_nseq(x, e, family)? }),
    })
}

/// Places one dual vector per canonical row back at its source index.
fn family_nseq(x: &NSeq, e: &Entries, family: Vec<Vec<f64>>) -> Result<NSeq> {
    let mut out = NSeq::zeros(x.shape().clone(), &x.space().dual())?;
    for (phi, &flat) in family.iter().zip(&e.origin) {
        let idx = x.shape().multi_index(flat);
        out.set_entry(&idx, phi)?;
    }
    Ok(out)
}

/// `φ_j = ‖x_j‖^{p-1} n_j / ‖x‖_p^{p-1}` with `n_j` norming `x_j`; its weak
/// `ℓ_{p'}` norm is at most its strong one, which is 1.
fn holder_family(space: &FiniteSpace, rows: &[Vec<f64>], p: f64) -> Vec<Vec<f64>> {
    let norms: Vec<f64> = rows.iter().map(|r| space.norm_unchecked(r)).collect();
    let total = lr_norm(Exponent::Finite(p), &norms);
    rows.iter()
        .zip(&norms)
        .map(|(r, &n)| {
            let c = (n / total).powf(p - 1.0);
            space.dual().support_point(r).into_iter().map(|v| c * v).collect()
        })
        .collect()
}

/// `ℓ_p^M ⊗_π ℓ_1^d = ℓ_1^d(ℓ_p^M)`: the sum of the column `ℓ_p` norms.
fn l1_columns(rows: &[Vec<f64>], p: f64) -> (f64, Vec<Vec<f64>>) {
    let d = rows[0].len();
    let cols: Vec<Vec<f64>> = (0..d).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    let norms: Vec<f64> = cols.iter().map(|c| lr_norm(Exponent::Finite(p), c)).collect();
    let family = rows
        .iter()
        .map(|r| {
            (0..d)
                .map(|i| {
                    if norms[i] == 0.0 {
                        0.0
                    } else {
                        r[i].signum() * (r[i].abs() / norms[i]).powf(p - 1.0)
                    }
                })
                .collect()
        })
        .collect();
    (norms.iter().sum(), family)
}

/// The trace norm, with `U Vᵀ` as its dual certificate.
fn nuclear(rows: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let (m, d) = (rows.len(), rows[0].len());
    let mat = DMatrix::from_fn(m, d, |j, i| rows[j][i]);
    let svd = mat.svd(true, true);
    let phi = svd.u.as_ref().expect("u requested") * svd.v_t.as_ref().expect("v_t requested");
    let family = (0..m).map(|j| (0..d).map(|i| phi[(j, i)]).collect()).collect();
    (svd.singular_values.sum(), family)
}

struct Projective {
    lower: f64,
    upper: f64,
    family: Vec<Vec<f64>>,
}

/// `min Σ_k ‖a_k‖_p` subject to `Σ_k a_k b_kᵀ = X`, over unit directions
/// `b_k` of `E`. Polytope balls use all vertices; otherwise directions are
/// generated from the most violated dual constraint.
fn projective(engine: &Engine, space: &FiniteSpace, rows: &[Vec<f64>], p: f64) -> Result<Projective> {
    let d = space.dim();
    let pc = p / (p - 1.0);
    let (mut dirs, polytope) = match space.ball_vertices_up_to_sign() {
        Some(v) if v.len() <= 512 => (v, true),
        _ => {
            let mut v: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    e
                })
                .collect();
            for r in rows {
                let n = space.norm_unchecked(r);
                v.push(r.iter().map(|x| x / n).collect());
            }
            (v, false)
        }
    };

    let mut best = Projective { lower: 0.0, upper: f64::INFINITY, family: vec![vec![0.0; d]; rows.len()] };
    for round in 0..MAX_ROUNDS {
        let (objective, phi, weights) = match solve_decomposition(rows, &dirs, p, engine.budget.tolerance) {
            Ok(sol) => sol,
            Err(Error::Solver(_)) => break,
            Err(err) => return Err(err),
        };
        if !polytope {
            let keep: Vec<bool> = weights.iter().map(|&t| t > PRUNE * objective).collect();
            let mut k = 0;
            dirs.retain(|_| {
                k += 1;
                keep[k - 1]
            });
        }
        best.upper = best.upper.min(objective);
        let peaks = power_sum_peaks(space, &phi, None, pc, &engine.budget, 0xC0E4 + round as u64);
        let Some((top, _, _)) = peaks.first() else { break };
        let width = top.max(0.0).powf(1.0 / pc);
        let pairing: f64 = phi.iter().zip(rows).map(|(f, r)| dot(f, r)).sum();
        if width > 0.0 && pairing.abs() / width > best.lower {
            best.lower = pairing.abs() / width;
            let c = pairing.signum() / width;
            best.family = phi.iter().map(|f| f.iter().map(|v| c * v).collect()).collect();
        }
        if polytope || width <= 1.0 + 1e-9 || best.upper - best.lower <= GAP * best.upper {
            break;
        }
        for (f, b, _) in peaks.into_iter().take(NEW_PER_ROUND) {
            if f.powf(1.0 / pc) > 1.0 + 1e-9 {
                let n = space.norm_unchecked(&b);
                dirs.push(b.iter().map(|v| v / n).collect());
            }
        }
    }
    Ok(best)
}

/// Returns the optimal value, the equality duals as rows and the per-direction weights `t_k`.
fn solve_decomposition(rows: &[Vec<f64>], dirs: &[Vec<f64>], p: f64, tolerance: f64) -> Result<(f64, Vec<Vec<f64>>, Vec<f64>)> {
    let (m, d) = (rows.len(), rows[0].len());
    let mut prog = ConicProgram::new();
    let mut a = Vec::with_capacity(dirs.len());
    let mut t = Vec::with_capacity(dirs.len());
    for _ in dirs {
        a.push(prog.add_vars(m));
        let tk = prog.add_vars(1);
        prog.set_cost(tk, 1.0);
        t.push(tk);
    }
    let mut eq_rows = vec![vec![0usize; d]; m];
    for (j, row) in rows.iter().enumerate() {
        for i in 0..d {
            let terms = dirs
                .iter()
                .enumerate()
                .filter(|(_, b)| b[i] != 0.0)
                .map(|(k, b)| (a[k] + j, b[i]))
                .collect();
            eq_rows[j][i] = prog.eq(Affine { terms, constant: -row[i] });
        }
    }
    for k in 0..dirs.len() {
        if p == 2.0 {
            let mut es = vec![Affine::var(t[k])];
            es.extend((0..m).map(|j| Affine::var(a[k] + j)));
            prog.soc(&es);
        } else {
            let rho = prog.add_vars(m);
            let mut terms: Vec<(usize, f64)> = (0..m).map(|j| (rho + j, 1.0)).collect();
            terms.push((t[k], -1.0));
            prog.eq(Affine { terms, constant: 0.0 });
            for j in 0..m {
                prog.pow(Affine::var(rho + j), Affine::var(t[k]), Affine::var(a[k] + j), 1.0 / p);
            }
        }
    }
    let sol = prog.solve(tolerance)?;
    let phi = eq_rows.iter().map(|r| r.iter().map(|&row| sol.z[row]).collect()).collect();
    let weights = t.iter().map(|&k| sol.x[k]).collect();
    Ok((sol.objective, phi, weights))
}
