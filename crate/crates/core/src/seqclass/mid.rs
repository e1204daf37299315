//! The mid class norm.
//!
//! A family `(φ_n)` with weak `ℓ_p` norm at most one is encoded as a measure
//! `μ` on normalized functionals `ψ`, via `φ_a = μ_a^{1/p} ψ_a`. The objective
//! and the constraints `Σ_a μ_a |ψ_a(b)|^p <= 1` are then linear in `μ`, so the
//! problem is a linear program over measures. Atoms are priced by maximizing
//! `F(ψ) / G_y(ψ)` and, on curved balls, constraint points are generated from
//! the most violated `b`.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use super::weak;
use super::{strong_lp, ClassSpec, Engine, Entries, Mode, NormResult, Strategy, Witness};
use crate::conic::{Affine, ConicProgram};
use crate::error::Result;
use crate::nseq::NSeq;
use crate::optim::{gaussian_vec, max_power_sum, power_sum, power_sum_peaks};
use crate::spaces::{dot, lr_norm, Exponent, FiniteSpace, Functional};

const MAX_ROUNDS: usize = 30;
const MAX_ARRANGEMENT: usize = 20_000;
const NEW_PER_ROUND: usize = 4;
const ASCENT_ITERATIONS: usize = 100;
/// The column generation stops once the objective has not moved for this many rounds.
const STALL_ROUNDS: usize = 3;

pub(super) fn mid(engine: &Engine, spec: &ClassSpec, e: &Entries, x: &NSeq, p: f64, trunc: usize) -> Result<NormResult> {
    let space = x.space();
    let d = space.dim();
    let exact = |value: f64, functionals: Vec<Vec<f64>>| -> Result<NormResult> {
        let fs = functionals.into_iter().map(|c| Functional::new(space, c)).collect::<Result<Vec<_>>>()?;
        let mut r = NormResult::exact(spec, value).with_witness(Some(Witness::Functionals { functionals: fs }));
        r.truncation = Some(trunc);
        Ok(r)
    };
    if e.is_empty() {
        return exact(0.0, Vec::new());
    }
    let strong = strong_lp(e, x, p);
    if space.is_scalar() {
        return exact(strong, vec![vec![1.0]]);
    }
    if trunc >= d
        && ((space.exponent() == Exponent::Finite(2.0) && p == 2.0) || (space.exponent().is_one() && p == 1.0))
    {
        return exact(strong, unit_vectors(d));
    }

    let wsol = weak::solve(engine, e, x, p, Strategy::Auto)?;
    let weak_value = wsol.power.powf(1.0 / p);
    if trunc == 1 {
        let mut r = NormResult {
            spec: spec.clone(),
            value: e.scale * weak_value,
            mode: if wsol.exact { Mode::Exact } else { Mode::LowerBound },
            converged: wsol.converged,
            truncation: Some(1),
            witness: None,
        };
        r.witness = Some(Witness::Functionals { functionals: vec![Functional::new(space, wsol.functional)?] });
        return Ok(r);
    }

    let lp = measure_lp(engine, space, &e.rows, p, &wsol.functional)?;
    let (family_value, family) = truncated_family(engine, space, &e.rows, p, &lp, trunc);
    let (mut value, family) = if family_value >= weak_value {
        (family_value, family)
    } else {
        (weak_value, vec![wsol.functional.clone()])
    };
    value = value.min(strong / e.scale);
    let functionals = family.into_iter().map(|c| Functional::new(space, c)).collect::<Result<Vec<_>>>()?;
    Ok(NormResult {
        spec: spec.clone(),
        value: e.scale * value,
        mode: Mode::LowerBound,
        converged: lp.converged,
        truncation: Some(trunc),
        witness: Some(Witness::Functionals { functionals }),
    })
}

struct MeasureLp {
    atoms: Vec<Vec<f64>>,
    mu: Vec<f64>,
    converged: bool,
}

fn unit_vectors(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            v
        })
        .collect()
}

fn normalized(v: &[f64], exponent: Exponent) -> Option<Vec<f64>> {
    let n = lr_norm(exponent, v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

fn measure_lp(engine: &Engine, space: &FiniteSpace, rows: &[Vec<f64>], p: f64, seed: &[f64]) -> Result<MeasureLp> {
    let d = space.dim();
    let dual = space.dual();
    let (mut cons, polytope) = match space.ball_vertices_up_to_sign() {
        Some(v) if v.len() <= 512 => (v, true),
        _ => {
            let mut v = unit_vectors(d);
            v.extend(rows.iter().filter_map(|r| normalized(r, space.exponent())));
            (v, false)
        }
    };
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    let push_atom = |atoms: &mut Vec<Vec<f64>>, a: &[f64]| {
        if let Some(a) = normalized(a, dual.exponent()) {
            if !atoms.iter().any(|b| b == &a) {
                atoms.push(a);
            }
        }
    };
    if let Some(vs) = dual.ball_vertices_up_to_sign().filter(|v| v.len() <= 512) {
        for v in &vs {
            push_atom(&mut atoms, v);
        }
    }
    for r in rows {
        push_atom(&mut atoms, &dual.support_point(r));
    }
    push_atom(&mut atoms, seed);

    let mut rng = engine.budget.rng(&[0x4D49_44, rows.len() as u64, d as u64]);
    let mut mu = Vec::new();
    let mut converged = false;
    let mut history: Vec<f64> = Vec::new();
    for round in 0..MAX_ROUNDS {
        let f: Vec<f64> = atoms.iter().map(|a| power_sum(rows, None, p, a)).collect();
        let mut prog = ConicProgram::new();
        let m0 = prog.add_vars(atoms.len());
        for (a, fa) in f.iter().enumerate() {
            prog.set_cost(m0 + a, -fa);
        }
        let cons_rows: Vec<usize> = cons
            .iter()
            .map(|b| {
                let terms = atoms
                    .iter()
                    .enumerate()
                    .map(|(a, psi)| (m0 + a, -dot(psi, b).abs().powf(p)))
                    .filter(|&(_, c)| c != 0.0)
                    .collect();
                prog.nonneg(Affine { terms, constant: 1.0 })
            })
            .collect();
        for a in 0..atoms.len() {
            prog.nonneg(Affine::var(m0 + a));
        }
        let sol = prog.solve(engine.budget.tolerance)?;
        mu = sol.x[m0..m0 + atoms.len()].iter().map(|v| v.max(0.0)).collect();
        let y: Vec<f64> = cons_rows.iter().map(|&r| sol.z[r].max(0.0)).collect();

        let mut changed = false;
        if !polytope {
            let peaks = power_sum_peaks(space, &atoms, Some(&mu), p, &engine.budget, 0x4D43 + round as u64);
            for (value, point, _) in peaks.into_iter().take(NEW_PER_ROUND) {
                if value > 1.0 + 1e-6 {
                    if let Some(b) = normalized(&point, space.exponent()) {
                        if !cons.iter().any(|c| (dot(c, &b).abs() - 1.0).abs() < 1e-9) {
                            cons.push(b);
                            changed = true;
                        }
                    }
                }
            }
        }
        let priced = price(rows, &cons, &y, p, &atoms, &mu, &mut rng, engine.budget.iterations.min(ASCENT_ITERATIONS));
        for (psi, ratio) in priced.into_iter().take(NEW_PER_ROUND) {
            if ratio <= 1.0 + 1e-7 {
                break;
            }
            if let Some(a) = normalized(&psi, dual.exponent()) {
                if !atoms.iter().any(|b| b == &a) {
                    atoms.push(a);
                    changed = true;
                }
            }
        }
        history.push(-sol.objective);
        let stalled = history.len() > STALL_ROUNDS && {
            let old = history[history.len() - 1 - STALL_ROUNDS];
            (history[history.len() - 1] - old).abs() <= 1e-7 * old.abs()
        };
        if !changed || stalled {
            converged = true;
            break;
        }
    }
    Ok(MeasureLp { atoms, mu, converged })
}

fn ratio_of(rows: &[Vec<f64>], cons: &[Vec<f64>], y: &[f64], p: f64, psi: &[f64]) -> f64 {
    let f = power_sum(rows, None, p, psi);
    let g = power_sum(cons, Some(y), p, psi);
    if g <= 1e-300 {
        if f > 0.0 {
            f64::MAX
        } else {
            0.0
        }
    } else {
        f / g
    }
}

/// Candidate maximizers of `F(ψ)/G_y(ψ)`, distinct up to sign and sorted by
/// decreasing ratio. For `p = 1` the ratio is linear-fractional on each cell
/// of the hyperplane arrangement of the entries and the active constraint
/// points, so it suffices to scan the arrangement's rays.
#[allow(clippy::too_many_arguments)]
fn price(
    rows: &[Vec<f64>],
    cons: &[Vec<f64>],
    y: &[f64],
    p: f64,
    atoms: &[Vec<f64>],
    mu: &[f64],
    rng: &mut ChaCha8Rng,
    iterations: usize,
) -> Vec<(Vec<f64>, f64)> {
    let d = rows[0].len();
    let ymax = y.iter().copied().fold(0.0, f64::max);
    let active: Vec<(Vec<f64>, f64)> =
        cons.iter().zip(y).filter(|(_, &w)| w > 1e-9 * ymax).map(|(b, &w)| (b.clone(), w)).collect();
    let acons: Vec<Vec<f64>> = active.iter().map(|(b, _)| b.clone()).collect();
    let ay: Vec<f64> = active.iter().map(|(_, w)| *w).collect();

    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    let consider = |psi: Vec<f64>, found: &mut Vec<(Vec<f64>, f64)>| {
        let r = ratio_of(rows, &acons, &ay, p, &psi);
        if r > 0.0 && !found.iter().any(|(q, _)| dot(q, &psi).abs() > 1.0 - 1e-9) {
            found.push((psi, r));
        }
    };

    let mut normals: Vec<Vec<f64>> = rows.to_vec();
    normals.extend(acons.iter().cloned());
    let rays = if binomial(normals.len(), d - 1) <= MAX_ARRANGEMENT { arrangement_rays(&normals, d) } else { Vec::new() };
    if p == 1.0 && !rays.is_empty() {
        for ray in rays {
            consider(ray, &mut found);
        }
    } else {
        let mut starts: Vec<Vec<f64>> = Vec::new();
        for (a, m) in atoms.iter().zip(mu) {
            if *m > 0.0 {
                starts.push(a.clone());
            }
        }
        starts.extend(rows.iter().cloned());
        for _ in 0..8 {
            starts.push(gaussian_vec(rng, d));
        }
        for s in starts {
            let (psi, _) = ratio_ascent(rows, &acons, &ay, p, s, iterations);
            consider(psi, &mut found);
        }
        if p == 1.0 {
            for ray in rays {
                consider(ray, &mut found);
            }
        }
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1));
    found
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Normalized vectors orthogonal to each `(d-1)`-subset of `normals` that has
/// full rank (generalized cross products).
fn arrangement_rays(normals: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let k = d - 1;
    let n = normals.len();
    if k == 0 {
        return vec![vec![1.0]];
    }
    let mut out = Vec::new();
    if n < k {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if let Some(v) = cross(normals, &idx, d) {
            out.push(v);
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn cross(normals: &[Vec<f64>], idx: &[usize], d: usize) -> Option<Vec<f64>> {
    let mut v = vec![0.0; d];
    for (c, vc) in v.iter_mut().enumerate() {
        let minor = DMatrix::from_fn(d - 1, d - 1, |r, col| {
            let src = if col < c { col } else { col + 1 };
            normals[idx[r]][src]
        });
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        *vc = sign * minor.determinant();
    }
    let n = lr_norm(Exponent::Finite(2.0), &v);
    (n > 1e-12).then(|| v.iter().map(|x| x / n).collect())
}

fn grad(vecs: &[Vec<f64>], w: Option<&[f64]>, p: f64, psi: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; psi.len()];
    for (j, v) in vecs.iter().enumerate() {
        let c = dot(v, psi);
        if c == 0.0 {
            continue;
        }
        let coef = w.map_or(1.0, |w| w[j]) * p * c.signum() * c.abs().powf(p - 1.0);
        for (gi, vi) in g.iter_mut().zip(v) {
            *gi += coef * vi;
        }
    }
    g
}

/// Ascent of `log F - log G` on the Euclidean sphere with adaptive steps.
fn ratio_ascent(rows: &[Vec<f64>], cons: &[Vec<f64>], y: &[f64], p: f64, start: Vec<f64>, iterations: usize) -> (Vec<f64>, f64) {
    let Some(mut psi) = normalized(&start, Exponent::Finite(2.0)) else {
        return (start, 0.0);
    };
    let mut r = ratio_of(rows, cons, y, p, &psi);
    if r == f64::MAX || r == 0.0 {
        return (psi, r);
    }
    let mut step = 0.25;
    for _ in 0..iterations {
        let f = power_sum(rows, None, p, &psi);
        let g = power_sum(cons, Some(y), p, &psi);
        let gf = grad(rows, None, p, &psi);
        let gg = grad(cons, Some(y), p, &psi);
        let mut dir: Vec<f64> = gf.iter().zip(&gg).map(|(a, b)| a / f - b / g).collect();
        let radial = dot(&dir, &psi);
        dir.iter_mut().zip(&psi).for_each(|(d, s)| *d -= radial * s);
        let Some(dir) = normalized(&dir, Exponent::Finite(2.0)) else { break };
        let mut moved = false;
        while step > 1e-12 {
            let cand: Vec<f64> = psi.iter().zip(&dir).map(|(s, d)| s + step * d).collect();
            let cand = normalized(&cand, Exponent::Finite(2.0)).expect("nonzero step");
            let rc = ratio_of(rows, cons, y, p, &cand);
            if rc > r {
                psi = cand;
                r = rc;
                step = (step * 1.5).min(1.0);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved || r == f64::MAX {
            break;
        }
    }
    (psi, r)
}

/// Keeps the `trunc` heaviest atoms of the measure and rescales the family to
/// weak norm one using the exact (or best found) weak norm.
fn truncated_family(
    engine: &Engine,
    space: &FiniteSpace,
    rows: &[Vec<f64>],
    p: f64,
    lp: &MeasureLp,
    trunc: usize,
) -> (f64, Vec<Vec<f64>>) {
    let mut weighted: Vec<(f64, Vec<f64>)> = lp
        .atoms
        .iter()
        .zip(&lp.mu)
        .filter(|(_, &m)| m > 0.0)
        .map(|(a, &m)| {
            let c = m.powf(1.0 / p);
            let phi: Vec<f64> = a.iter().map(|v| c * v).collect();
            (power_sum(rows, None, p, &phi), phi)
        })
        .collect();
    weighted.sort_by(|a, b| b.0.total_cmp(&a.0));
    weighted.truncate(trunc);
    if weighted.is_empty() {
        return (0.0, Vec::new());
    }
    let family: Vec<Vec<f64>> = weighted.iter().map(|(_, f)| f.clone()).collect();
    let total: f64 = weighted.iter().map(|(v, _)| v).sum();
    let w = max_power_sum(space, &family, None, p, &engine.budget, 0x4D57, false).value.powf(1.0 / p);
    if w <= 0.0 {
        return (0.0, Vec::new());
    }
    let family = family.into_iter().map(|f| f.into_iter().map(|v| v / w).collect()).collect();
    (total.powf(1.0 / p) / w, family)
}
