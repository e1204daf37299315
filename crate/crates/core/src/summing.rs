//! Lower bounds for the multiple summing norm of a multilinear operator,
//! obtained by maximizing the ratio of output to input class norms over
//! finite input sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nseq::{NSeq, Shape};
use crate::operators::{compose, LinearOp, MultiOp};
use crate::optim::{derive_seed, gaussian_vec, pattern_search, OptBudget};
use crate::seqclass::{ClassSpec, Engine, Mode};
use crate::spaces::FiniteSpace;

/// Default cap on each input sequence length.
pub const DEFAULT_SHAPE_CAP: usize = 4;

/// Largest number of structured sign or vertex seeds tried per shape.
const MAX_PATTERN_SEEDS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummingProblem {
    pub operator: MultiOp,
    pub input_specs: Vec<ClassSpec>,
    pub output_spec: ClassSpec,
    /// Maximum length of each input sequence; `DEFAULT_SHAPE_CAP` per input when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_caps: Option<Vec<usize>>,
    #[serde(default)]
    pub budget: OptBudget,
}

impl SummingProblem {
    pub fn new(operator: MultiOp, input_specs: Vec<ClassSpec>, output_spec: ClassSpec) -> Self {
        Self { operator, input_specs, output_spec, shape_caps: None, budget: OptBudget::default() }
    }

    pub fn with_caps(mut self, caps: Vec<usize>) -> Self {
        self.shape_caps = Some(caps);
        self
    }

    pub fn with_budget(mut self, budget: OptBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn caps(&self) -> Vec<usize> {
        self.shape_caps.clone().unwrap_or_else(|| vec![DEFAULT_SHAPE_CAP; self.operator.arity()])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.operator.arity();
        check_dim(n, self.input_specs.len())?;
        let caps = self.caps();
        check_dim(n, caps.len())?;
        if caps.iter().any(|&c| c == 0) {
            return Err(Error::invalid("shape caps must be positive"));
        }
        for s in &self.input_specs {
            s.validate()?;
        }
        self.output_spec.validate()?;
        self.budget.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummingEstimate {
    /// A lower bound for the summing norm, equal to the ratio at `witnesses`.
    pub value: f64,
    /// Input sequences attaining `value`, each scaled to unit class norm.
    pub witnesses: Vec<NSeq>,
    /// Modes of the output norm followed by the input norms at the witnesses.
    pub modes: Vec<Mode>,
    pub converged: bool,
}

/// The ratio together with the modes and convergence of the norms involved.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioDetail {
    pub value: f64,
    pub output_norm: f64,
    pub input_norms: Vec<f64>,
    pub modes: Vec<Mode>,
    pub converged: bool,
}

/// `‖(T(x^{(1)}_{j_1},…))‖_{out} / Π_i ‖x^{(i)}‖_{in_i}`.
pub fn ratio(
    op: &MultiOp,
    xs: &[NSeq],
    input_specs: &[ClassSpec],
    output_spec: &ClassSpec,
    budget: &OptBudget,
) -> Result<f64> {
    Ok(ratio_detail(&Engine::new(budget.clone()), op, xs, input_specs, output_spec)?.value)
}

pub fn ratio_detail(
    engine: &Engine,
    op: &MultiOp,
    xs: &[NSeq],
    input_specs: &[ClassSpec],
    output_spec: &ClassSpec,
) -> Result<RatioDetail> {
    check_dim(op.arity(), input_specs.len())?;
    let mut modes = Vec::with_capacity(xs.len() + 1);
    let mut converged = true;
    let mut input_norms = Vec::with_capacity(xs.len());
    let mut denominator = 1.0;
    for (i, (x, spec)) in xs.iter().zip(input_specs).enumerate() {
        let r = engine.norm(spec, x)?;
        if r.value <= 0.0 {
            return Err(Error::invalid(format!("input {i} has zero class norm")));
        }
        converged &= r.converged;
        input_norms.push(r.value);
        denominator *= r.value;
        modes.push(r.mode);
    }
    let out = engine.norm(output_spec, &op.apply_batch(xs)?)?;
    converged &= out.converged;
    modes.insert(0, out.mode);
    Ok(RatioDetail { value: out.value / denominator, output_norm: out.value, input_norms, modes, converged })
}

struct Trial {
    value: f64,
    xs: Vec<NSeq>,
    converged: bool,
}

/// Maximizes the ratio over every shape up to the caps, starting from unit
/// vector singletons, Gaussian entries and (for scalar inputs) sign patterns.
pub fn estimate_lower(prob: &SummingProblem) -> Result<SummingEstimate> {
    estimate_lower_with(&Engine::new(prob.budget.clone()), prob)
}

pub(crate) fn estimate_lower_with(engine: &Engine, prob: &SummingProblem) -> Result<SummingEstimate> {
    prob.validate()?;
    let op = &prob.operator;
    let caps = prob.caps();
    let budget = &prob.budget;
    let sources = op.sources().to_vec();

    let shapes: Vec<Vec<usize>> = Shape::new(caps.clone())?.indices().map(|m| m.iter().map(|k| k + 1).collect()).collect();
    let mut seeds: Vec<Vec<Vec<f64>>> = Vec::new();
    for m in &shapes {
        seeds.extend(shape_seeds(op, m, budget));
    }

    let sweeps = (budget.iterations / 10).max(1);
    let trials: Vec<Option<Trial>> = seeds
        .par_iter()
        .map(|seed| {
            let lens: Vec<usize> = seed.iter().map(Vec::len).collect();
            let objective = |flat: &[f64]| -> f64 {
                let xs = unflatten(&sources, &lens, flat);
                match ratio_detail(engine, op, &xs, &prob.input_specs, &prob.output_spec) {
                    Ok(r) if r.value.is_finite() => r.value,
                    _ => f64::NEG_INFINITY,
                }
            };
            let flat: Vec<f64> = seed.iter().flatten().copied().collect();
            if objective(&flat) == f64::NEG_INFINITY {
                return None;
            }
            let scale = flat.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
            let (best, _) = pattern_search(objective, flat, 0.25 * scale, sweeps, 1e-6 * scale);
            let xs = unflatten(&sources, &lens, &best);
            let r = ratio_detail(engine, op, &xs, &prob.input_specs, &prob.output_spec).ok()?;
            Some(Trial { value: r.value, xs, converged: r.converged })
        })
        .collect();

    let mut best: Option<Trial> = None;
    for t in trials.into_iter().flatten() {
        if best.as_ref().map_or(true, |b| t.value > b.value) {
            best = Some(t);
        }
    }
    let Some(best) = best else {
        return Err(Error::invalid("no admissible input sequences under the caps"));
    };

    // Renormalize each witness to unit class norm and recompute.
    let mut witnesses = Vec::with_capacity(best.xs.len());
    for (x, spec) in best.xs.iter().zip(&prob.input_specs) {
        let n = engine.norm(spec, x)?.value;
        witnesses.push(x.scaled(1.0 / n));
    }
    let detail = ratio_detail(engine, op, &witnesses, &prob.input_specs, &prob.output_spec)?;
    Ok(SummingEstimate {
        value: detail.value,
        witnesses,
        modes: detail.modes,
        converged: best.converged && detail.converged,
    })
}

fn unflatten(sources: &[FiniteSpace], lens: &[usize], flat: &[f64]) -> Vec<NSeq> {
    let mut out = Vec::with_capacity(sources.len());
    let mut at = 0;
    for (s, &len) in sources.iter().zip(lens) {
        let shape = Shape::new(vec![len / s.dim()]).expect("positive length");
        out.push(NSeq::from_flat(shape, s, flat[at..at + len].to_vec()).expect("consistent length"));
        at += len;
    }
    out
}

/// Starting inputs for one shape, each given as the flattened entries of
/// every input sequence.
fn shape_seeds(op: &MultiOp, m: &[usize], budget: &OptBudget) -> Vec<Vec<Vec<f64>>> {
    let sources = op.sources();
    let mut seeds: Vec<Vec<Vec<f64>>> = Vec::new();

    if m.iter().all(|&k| k == 1) {
        // Vertex (or basis) singletons, then multilinear ascent from each.
        let per: Vec<Vec<Vec<f64>>> = sources
            .iter()
            .map(|s| match s.ball_vertices_up_to_sign() {
                Some(v) if v.len() <= 16 => v,
                _ => basis(s.dim()),
            })
            .collect();
        for combo in product(&per, MAX_PATTERN_SEEDS) {
            seeds.push(singleton_ascent(op, combo, budget));
        }
    }

    if sources.iter().all(FiniteSpace::is_scalar) {
        let per: Vec<Vec<Vec<f64>>> = m.iter().map(|&k| sign_patterns(k)).collect();
        seeds.extend(product(&per, MAX_PATTERN_SEEDS));
    }

    let mut rng = budget.rng(&[0x5355_4D, derive_seed(&m.iter().map(|&k| k as u64).collect::<Vec<_>>())]);
    for _ in 0..budget.starts.div_ceil(8) {
        seeds.push(sources.iter().zip(m).map(|(s, &k)| gaussian_vec(&mut rng, k * s.dim())).collect());
    }
    seeds
}

fn basis(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// `±1` vectors of length `k` with a positive first entry.
fn sign_patterns(k: usize) -> Vec<Vec<f64>> {
    (0..1usize << (k - 1)).map(|bits| (0..k).map(|i| if i > 0 && bits >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect()).collect()
}

/// The first `cap` elements of the Cartesian product, in lexicographic order.
fn product(per: &[Vec<Vec<f64>>], cap: usize) -> Vec<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for options in per {
        let mut next = Vec::new();
        'outer: for prefix in &out {
            for o in options {
                let mut p = prefix.clone();
                p.push(o.clone());
                next.push(p);
                if next.len() >= cap {
                    break 'outer;
                }
            }
        }
        out = next;
    }
    out
}

/// Block ascent of `‖T(x_1,…,x_n)‖` over the product of unit balls: each
/// block moves to the support point of its partial functional.
fn singleton_ascent(op: &MultiOp, mut xs: Vec<Vec<f64>>, budget: &OptBudget) -> Vec<Vec<f64>> {
    let target = op.target();
    let value = |xs: &[Vec<f64>]| {
        let args: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        target.norm_unchecked(&op.apply_unchecked(&args))
    };
    let mut f = value(&xs);
    for _ in 0..budget.iterations {
        let before = f;
        for i in 0..xs.len() {
            let args: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
            let psi = target.dual().support_point(&op.apply_unchecked(&args));
            let d = op.sources()[i].dim();
            let g: Vec<f64> = (0..d)
                .map(|k| {
                    let mut e = vec![0.0; d];
                    e[k] = 1.0;
                    let mut a: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
                    a[i] = &e;
                    crate::spaces::dot(&psi, &op.apply_unchecked(&a))
                })
                .collect();
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let cand = op.sources()[i].support_point(&g);
            let old = std::mem::replace(&mut xs[i], cand);
            let nf = value(&xs);
            if nf < f {
                xs[i] = old;
            } else {
                f = nf;
            }
        }
        if f <= before * (1.0 + budget.tolerance) {
            break;
        }
    }
    xs.into_iter().map(|x| if x.iter().all(|&v| v == 0.0) { vec![1.0; x.len()] } else { x }).collect()
}

/// Outcome of the witness-level ideal inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealCheck {
    /// `ratio(t∘T∘(u_i), X)`.
    pub lhs: f64,
    /// `‖t‖ Π ‖u_i‖ ratio(T, (u_i X_i))`.
    pub rhs: f64,
    /// `rhs - lhs`, nonnegative when the inequality holds.
    pub margin: f64,
    /// True when some image `u_i X_i` vanishes and the inequality is empty.
    pub vacuous: bool,
    pub modes: Vec<Mode>,
}

impl IdealCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.vacuous || self.margin >= -tol
    }
}

/// `ratio(t∘T∘(u_1,…,u_n), X) <= ‖t‖ Π‖u_i‖ ratio(T, (u_i X_i))`.
#[allow(clippy::too_many_arguments)]
pub fn ideal_witness_check(
    t: &LinearOp,
    op: &MultiOp,
    us: &[LinearOp],
    xs: &[NSeq],
    input_specs: &[ClassSpec],
    output_spec: &ClassSpec,
    budget: &OptBudget,
) -> Result<IdealCheck> {
    ideal_witness_check_with(&Engine::new(budget.clone()), t, op, us, xs, input_specs, output_spec)
}

pub(crate) fn ideal_witness_check_with(
    engine: &Engine,
    t: &LinearOp,
    op: &MultiOp,
    us: &[LinearOp],
    xs: &[NSeq],
    input_specs: &[ClassSpec],
    output_spec: &ClassSpec,
) -> Result<IdealCheck> {
    let composed = compose(t, op, us)?;
    let images: Vec<NSeq> = us.iter().zip(xs).map(|(u, x)| u.apply_nseq(x)).collect::<Result<_>>()?;
    if images.iter().any(NSeq::is_zero) {
        return Ok(IdealCheck { lhs: 0.0, rhs: 0.0, margin: 0.0, vacuous: true, modes: Vec::new() });
    }
    let left = ratio_detail(engine, &composed, xs, input_specs, output_spec)?;
    let right = ratio_detail(engine, op, &images, input_specs, output_spec)?;
    let norms: f64 =
        t.opnorm_with(&engine.budget).value * us.iter().map(|u| u.opnorm_with(&engine.budget).value).product::<f64>();
    let rhs = norms * right.value;
    let mut modes = left.modes;
    modes.extend(right.modes);
    Ok(IdealCheck { lhs: left.value, rhs, margin: rhs - left.value, vacuous: false, modes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{finite_type, product_op};
    use crate::spaces::Functional;

    fn small() -> OptBudget {
        OptBudget { starts: 8, iterations: 100, ..OptBudget::default() }
    }

    #[test]
    fn ratio_of_product_on_singletons() {
        let one = NSeq::scalars(vec![1], vec![1.0]).unwrap();
        let specs = [ClassSpec::lp(1.0), ClassSpec::lp(1.0)];
        let r = ratio(&product_op(2).unwrap(), &[one.clone(), one], &specs, &ClassSpec::lp(1.0), &small()).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn ratio_is_scale_invariant_and_rejects_zero_inputs() {
        let x = NSeq::scalars(vec![2], vec![1.0, -2.0]).unwrap();
        let y = NSeq::scalars(vec![3], vec![0.5, 1.0, 3.0]).unwrap();
        let specs = [ClassSpec::weak(2.0), ClassSpec::weak(1.0)];
        let out = ClassSpec::lp(2.0);
        let op = product_op(2).unwrap();
        let a = ratio(&op, &[x.clone(), y.clone()], &specs, &out, &small()).unwrap();
        let b = ratio(&op, &[x.scaled(3.0), y.scaled(0.25)], &specs, &out, &small()).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let z = NSeq::scalars(vec![1], vec![0.0]).unwrap();
        assert!(ratio(&op, &[z, y], &specs, &out, &small()).is_err());
    }

    #[test]
    fn identity_product_has_norm_one() {
        let specs = vec![ClassSpec::weak(2.0), ClassSpec::weak(2.0)];
        let prob = SummingProblem::new(product_op(2).unwrap(), specs, ClassSpec::lp(2.0)).with_caps(vec![3, 3]).with_budget(small());
        let est = estimate_lower(&prob).unwrap();
        assert!(est.value >= 1.0 - 1e-3 && est.value <= 1.0 + 1e-9, "{}", est.value);
        let again = ratio(&prob.operator, &est.witnesses, &prob.input_specs, &prob.output_spec, &prob.budget).unwrap();
        assert!((again - est.value).abs() <= 1e-9);
    }

    #[test]
    fn zero_operator_estimates_zero() {
        let op = MultiOp::zero(vec![FiniteSpace::scalar(); 2], &FiniteSpace::scalar()).unwrap();
        let prob = SummingProblem::new(op, vec![ClassSpec::weak(1.0); 2], ClassSpec::lp(1.0)).with_caps(vec![2, 2]).with_budget(small());
        assert_eq!(estimate_lower(&prob).unwrap().value, 0.0);
    }

    #[test]
    fn rank_one_singletons_reach_one() {
        // Oracle: sup over the ℓ_2 ball of |φ(x)| is ‖φ‖ = 1, so singletons reach 1.
        let e = FiniteSpace::l2(2);
        let s = 0.5f64.sqrt();
        let phi = Functional::new(&e, vec![s, s]).unwrap();
        let psi = Functional::new(&e, vec![0.6, -0.8]).unwrap();
        let op = finite_type(&[phi, psi], &FiniteSpace::scalar(), &[1.0]).unwrap();
        let prob = SummingProblem::new(op, vec![ClassSpec::weak(2.0); 2], ClassSpec::lp(2.0)).with_caps(vec![1, 1]).with_budget(small());
        let est = estimate_lower(&prob).unwrap();
        assert!(est.value >= 1.0 - 1e-9, "{}", est.value);
    }

    #[test]
    fn ideal_check_with_identities_is_tight() {
        let e = FiniteSpace::l1(2);
        let op = MultiOp::new(vec![e.clone(), e.clone()], &FiniteSpace::scalar(), vec![1.0, -1.0, 0.5, 2.0]).unwrap();
        let x = NSeq::from_vectors(&e, &[vec![1.0, 0.5], vec![-0.2, 1.0]]).unwrap();
        let specs = [ClassSpec::weak(1.0), ClassSpec::weak(2.0)];
        let id = LinearOp::identity(&e);
        let k = LinearOp::identity(&FiniteSpace::scalar());
        let c = ideal_witness_check(&k, &op, &[id.clone(), id.clone()], &[x.clone(), x.clone()], &specs, &ClassSpec::lp(1.0), &small()).unwrap();
        assert!(c.margin.abs() <= 1e-12);
        let c2 = ideal_witness_check(&k.scaled(2.0), &op, &[id.clone(), id], &[x.clone(), x], &specs, &ClassSpec::lp(1.0), &small()).unwrap();
        assert!((c2.lhs - 2.0 * c.lhs).abs() <= 1e-12 && c2.margin.abs() <= 1e-12);
    }
}
