//! One sampler per property. Each draws an instance from its seed and turns
//! the property into clauses `small <= large`.

use serde_json::{json, Value};

use super::gen::Gen;
use super::witness::{certify_lower, certify_upper, factorization, pullback, reindex};
use super::{CheckConfig, PropertyId, Scope};
use crate::error::{Error, Result};
use crate::nseq::{diagonal, fix_index, outer_scalars, permute, NSeq, Permutation, Shape};
use crate::operators::{
    permutations, poly_restrict, poly_scalar_extend_with, product_op, symmetrize_with, LinearOp, MultiOp,
};
use crate::seqclass::{ClassSpec, Engine, Mode, NormResult};
use crate::spaces::{lr_norm, FiniteSpace};
use crate::summing::{estimate_lower_with, SummingProblem};

/// Allowed error in coefficient identities that involve no optimization.
const IDENTITY_TOL: f64 = 1e-12;
/// How far below one the `‖I_n‖` estimate may land.
const IN_NORM_SLACK: f64 = 1e-3;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Clause {
    pub margin: f64,
    pub tol: f64,
}

pub(crate) struct Sample {
    pub inputs: Value,
    pub clauses: Vec<Clause>,
}

/// A norm value with whether it may sit on the small (`low`) or large
/// (`high`) side of an inequality without an optimizer tolerance.
#[derive(Clone, Copy, Debug)]
struct Side {
    value: f64,
    low: bool,
    high: bool,
}

impl Side {
    fn exact(value: f64) -> Self {
        Side { value, low: true, high: true }
    }

    fn of(r: &NormResult) -> Self {
        Side { value: r.value, low: r.mode != Mode::UpperBound, high: r.mode != Mode::LowerBound }
    }

    fn times(self, other: Side) -> Side {
        Side { value: self.value * other.value, low: self.low && other.low, high: self.high && other.high }
    }
}

struct Ctx<'a> {
    cfg: &'a CheckConfig,
    engine: Engine,
    clean: Engine,
    gen: Gen,
    index: usize,
}

pub(crate) fn sample(id: PropertyId, cfg: &CheckConfig, group: usize, index: usize, seed: u64) -> Result<Sample> {
    let mut ctx = Ctx {
        cfg,
        engine: Engine::new(cfg.budget.clone()).with_mutation(cfg.mutation),
        clean: Engine::new(cfg.budget.clone()),
        gen: Gen::new(seed),
        index,
    };
    let n_spaces = cfg.spaces.len();
    let space = cfg.spaces[index % n_spaces].clone();
    match id.scope() {
        Scope::Engine => {
            let grid = cfg.engines[group].grid();
            let spec = grid[(index / n_spaces) % grid.len()].clone();
            match id {
                PropertyId::UnitNorm => ctx.unit_norm(&spec, &space),
                PropertyId::LinfEmbed => ctx.linf_embed(&spec, &space),
                PropertyId::Symmetry => ctx.symmetry(&spec, &space),
                PropertyId::FinDet => ctx.fin_det(&spec, &space),
                PropertyId::LinearStability => ctx.linear_stability(&spec, &space),
                PropertyId::SeqCompat => ctx.seq_compat(&spec, &space),
                PropertyId::DownRegular => ctx.down_regular(&spec, &space),
                PropertyId::MultipleRegular => ctx.multiple_regular(&spec, &space),
                _ => unreachable!("engine-scoped property"),
            }
        }
        Scope::Preset => {
            let grid = cfg.presets[group].grid();
            let (input, output) = grid[(index / n_spaces) % grid.len()].clone();
            match id {
                PropertyId::Mult1 => ctx.mult1(&input, &output),
                PropertyId::InNormOne => ctx.in_norm_one(&input, &output),
                PropertyId::IdealIneq => ctx.ideal_ineq(&input, &output, &space),
                PropertyId::Ch1 => ctx.ch1(&input, &output, &space),
                PropertyId::Ch2 => ctx.ch2(&input, &output, &space),
                PropertyId::Ch3 => ctx.ch3(&input, &output, &space),
                PropertyId::Ch4 => ctx.ch4(&input, &output, &space),
                _ => unreachable!("preset-scoped property"),
            }
        }
        Scope::Global => ctx.lemma_pa(&space),
    }
}

/// Places the entries of `sub` into a zero sequence of shape `bounds` at
/// `place(sub index)`.
fn embed(sub: &NSeq, bounds: &[usize], place: impl Fn(&[usize]) -> Vec<usize>) -> Result<NSeq> {
    let mut out = NSeq::zeros(Shape::new(bounds.to_vec())?, sub.space())?;
    for (f, idx) in sub.shape().indices().enumerate() {
        out.set_entry(&place(&idx), sub.flat_entry(f))?;
    }
    Ok(out)
}

fn with_axis(idx: &[usize], axis: usize, k: usize) -> Vec<usize> {
    let mut v = idx.to_vec();
    v.insert(axis, k);
    v
}

/// `(Σ_j λ_j f_{…,j,…})`, contracting the axis `axis` against `λ`.
fn contract(f: &NSeq, lambda: &[f64], axis: usize) -> Result<NSeq> {
    let mut bounds = f.bounds().to_vec();
    bounds.remove(axis);
    let mut out = NSeq::zeros(Shape::new(bounds)?, f.space())?;
    let d = f.dim();
    for (flat, idx) in out.shape().clone().indices().enumerate() {
        let mut acc = vec![0.0; d];
        for (j, &l) in lambda.iter().enumerate() {
            for (a, v) in acc.iter_mut().zip(f.entry(&with_axis(&idx, axis, j))?) {
                *a += l * v;
            }
        }
        out.set_entry(&out.shape().multi_index(flat), &acc)?;
    }
    Ok(out)
}

fn scalar_seq(values: &[f64]) -> NSeq {
    NSeq::scalars(vec![values.len()], values.to_vec()).expect("nonempty")
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

impl Ctx<'_> {
    fn norm(&self, spec: &ClassSpec, x: &NSeq) -> Result<NormResult> {
        self.engine.norm(spec, x)
    }

    fn leq(&self, small: Side, large: Side) -> Clause {
        let scale = 1.0_f64.max(small.value.abs()).max(large.value.abs());
        let margin = (large.value - small.value) / scale;
        let tol = if small.low && large.high { self.cfg.tolerances.exact } else { self.cfg.tolerances.optimized };
        Clause { margin: if margin.is_nan() { f64::NEG_INFINITY } else { margin }, tol }
    }

    fn eq(&self, a: Side, b: Side) -> [Clause; 2] {
        [self.leq(a, b), self.leq(b, a)]
    }

    fn identity(&self, err: f64) -> Clause {
        Clause { margin: if err.is_nan() { f64::NEG_INFINITY } else { -err }, tol: IDENTITY_TOL }
    }

    fn order(&mut self, min: usize) -> usize {
        let hi = self.cfg.max_order.max(min);
        self.gen.range(min, hi)
    }

    fn random_nseq(&mut self, space: &FiniteSpace, order: usize) -> NSeq {
        let bounds = self.gen.bounds(order, self.cfg.max_len);
        self.gen.nseq(space, &bounds)
    }

    fn random_space(&mut self, max_dim: usize) -> FiniteSpace {
        let k = self.gen.range(0, self.cfg.spaces.len() - 1);
        let base = self.cfg.spaces[k].clone();
        self.gen.resized(&base, max_dim)
    }

    /// `‖sub‖ <= ‖full‖` where `sub` collects some entries of `full`. `up`
    /// carries a family on `sub` to `full`; `down` carries a factorization
    /// of `full` to `sub`.
    fn sub_vs_full(
        &self,
        spec: &ClassSpec,
        sub: &NSeq,
        full: &NSeq,
        up: impl Fn(&NSeq) -> Result<NSeq>,
        down: impl Fn(&NSeq) -> Result<NSeq>,
    ) -> Result<(Side, Side)> {
        let rs = self.norm(spec, sub)?;
        let rf = self.norm(spec, full)?;
        let (mut small, mut large) = (Side::of(&rs), Side::of(&rf));
        if !large.high {
            if let Some(c) = rs.witness.as_ref().and_then(|w| reindex(w, &up)).and_then(|w| certify_lower(&self.clean, spec, &w, full)) {
                large = Side { value: large.value.max(c), low: large.low, high: true };
            }
        }
        if !small.low {
            if let Some(f) = factorization(&rf.witness) {
                if let (Ok(tau), Ok(x0)) = (down(&f.tau), down(&f.x0)) {
                    if let Some(c) = certify_upper(&self.clean, spec, &tau, &x0) {
                        small = Side { value: small.value.min(c), low: true, high: small.high };
                    }
                }
            }
        }
        Ok((small, large))
    }

    /// `(‖u x‖, ‖x‖)`, with witnesses moved across `u` where needed.
    fn stable(&self, spec: &ClassSpec, u: &LinearOp, x: &NSeq, ux: &NSeq) -> Result<(Side, Side)> {
        let ri = self.norm(spec, ux)?;
        let rx = self.norm(spec, x)?;
        let (mut small, mut large) = (Side::of(&ri), Side::of(&rx));
        if !large.high {
            if let Some(c) = ri.witness.as_ref().and_then(|w| pullback(w, u)).and_then(|w| certify_lower(&self.clean, spec, &w, x)) {
                large = Side { value: large.value.max(c), low: large.low, high: true };
            }
        }
        if !small.low {
            if let Some(f) = factorization(&rx.witness) {
                if let Some(c) = certify_upper(&self.clean, spec, &f.tau, &u.apply_nseq(&f.x0)?) {
                    small = Side { value: small.value.min(c), low: true, high: small.high };
                }
            }
        }
        Ok((small, large))
    }

    /// `(‖(λ_{j_axis} a_{…})‖, ‖a‖)` where `big` is the scaled sequence.
    fn regular(&self, spec: &ClassSpec, a: &NSeq, big: &NSeq, lambda: &[f64], axis: usize) -> Result<(Side, Side)> {
        let rb = self.norm(spec, big)?;
        let ra = self.norm(spec, a)?;
        let (mut small, mut large) = (Side::of(&rb), Side::of(&ra));
        if !large.high {
            let carried = rb.witness.as_ref().and_then(|w| reindex(w, |f| contract(f, lambda, axis)));
            if let Some(c) = carried.and_then(|w| certify_lower(&self.clean, spec, &w, a)) {
                large = Side { value: large.value.max(c), low: large.low, high: true };
            }
        }
        if let (false, ClassSpec::Mixed { s, q }, Some(f)) = (small.low, spec, factorization(&ra.witness)) {
            // Hölder split λ = σ μ with ‖σ‖_r ‖μ‖_s = ‖λ‖_q.
            let (sigma, mu): (Vec<f64>, Vec<f64>) = if s == q {
                (vec![1.0; lambda.len()], lambda.to_vec())
            } else {
                let r = q * s / (s - q);
                lambda.iter().map(|&l| (l.abs().powf(q / r), l.signum() * l.abs().powf(q / s))).unzip()
            };
            let tau = crate::nseq::scale_axis(&f.tau, &sigma, axis)?;
            let x0 = crate::nseq::scale_axis(&f.x0, &mu, axis)?;
            if let Some(c) = certify_upper(&self.clean, spec, &tau, &x0) {
                small = Side { value: small.value.min(c), low: true, high: small.high };
            }
        }
        Ok((small, large))
    }

    fn unit_norm(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let (bounds, index, v) = if self.index == 0 {
            let mut e = vec![0.0; space.dim()];
            e[0] = 1.0;
            (vec![1], vec![0], e)
        } else {
            let n = self.order(1);
            let bounds = self.gen.bounds(n, self.cfg.max_len);
            let index: Vec<usize> = bounds.iter().map(|&b| self.gen.range(0, b - 1)).collect();
            (bounds, index, self.gen.nonzero_vec(space.dim()))
        };
        let x = crate::nseq::unit_nseq(Shape::new(bounds)?, space, &index, &v)?;
        let r = self.norm(spec, &x)?;
        let expect = Side::exact(space.norm(&v)?);
        Ok(Sample { inputs: json!({ "spec": spec, "x": x }), clauses: self.eq(Side::of(&r), expect).to_vec() })
    }

    fn linf_embed(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let x = if self.index == 0 {
            NSeq::zeros(Shape::new(vec![1])?, space)?
        } else {
            let n = self.order(1);
            self.random_nseq(space, n)
        };
        let norms: Vec<f64> = x.entries().map(|e| space.norm(e)).collect::<Result<_>>()?;
        let sup = Side::exact(norms.iter().fold(0.0_f64, |m, &v| m.max(v)));
        let sum = Side::exact(norms.iter().sum());
        let r = Side::of(&self.norm(spec, &x)?);
        Ok(Sample { inputs: json!({ "spec": spec, "x": x }), clauses: vec![self.leq(sup, r), self.leq(r, sum)] })
    }

    fn symmetry(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let n = self.order(1);
        let x = if self.index == 0 {
            NSeq::zeros(Shape::new(vec![1; n])?, space)?
        } else {
            self.random_nseq(space, n)
        };
        let all = permutations(n);
        let sigma = Permutation::new(all[self.gen.range(0, all.len() - 1)].clone())?;
        let y = permute(&x, &sigma)?;
        let a = Side::of(&self.norm(spec, &x)?);
        let b = Side::of(&self.norm(spec, &y)?);
        Ok(Sample {
            inputs: json!({ "spec": spec, "x": x, "sigma": sigma.images() }),
            clauses: self.eq(b, a).to_vec(),
        })
    }

    fn fin_det(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let n = self.order(1);
        let x = if self.index == 0 {
            NSeq::zeros(Shape::new(vec![1; n])?, space)?
        } else {
            self.random_nseq(space, n)
        };
        let keep: Vec<usize> = x.bounds().iter().map(|&b| self.gen.range(1, b)).collect();
        let t = x.truncated(&keep)?;
        let full_bounds = x.bounds().to_vec();
        let (small, large) =
            self.sub_vs_full(spec, &t, &x, |f| f.padded(&full_bounds), |f| f.truncated(&keep))?;
        let padded_bounds: Vec<usize> = full_bounds.iter().map(|&b| b + 1).collect();
        let p = x.padded(&padded_bounds)?;
        let rp = Side::of(&self.norm(spec, &p)?);
        let rx = Side::of(&self.norm(spec, &x)?);
        let mut clauses = vec![self.leq(small, large)];
        clauses.extend(self.eq(rp, rx));
        Ok(Sample { inputs: json!({ "spec": spec, "x": x, "keep": keep }), clauses })
    }

    fn seq_compat(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let n = self.order(1);
        let x = if self.index == 0 {
            NSeq::zeros(Shape::new(vec![1; n])?, space)?
        } else {
            self.random_nseq(space, n)
        };
        let dg = diagonal(&x);
        let bounds = x.bounds().to_vec();
        let (small, large) = self.sub_vs_full(
            spec,
            &dg,
            &x,
            |f| embed(f, &bounds, |idx| vec![idx[0]; n]),
            |f| Ok(diagonal(f)),
        )?;
        Ok(Sample { inputs: json!({ "spec": spec, "x": x }), clauses: vec![self.leq(small, large)] })
    }

    fn down_regular(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let n = self.order(2);
        let x = if self.index == 0 {
            NSeq::zeros(Shape::new(vec![1; n])?, space)?
        } else {
            self.random_nseq(space, n)
        };
        let axis = self.gen.range(0, n - 1);
        let k = self.gen.range(0, x.bounds()[axis] - 1);
        let sub = fix_index(&x, axis, k)?;
        let bounds = x.bounds().to_vec();
        let (small, large) = self.sub_vs_full(
            spec,
            &sub,
            &x,
            |f| embed(f, &bounds, |idx| with_axis(idx, axis, k)),
            |f| fix_index(f, axis, k),
        )?;
        Ok(Sample {
            inputs: json!({ "spec": spec, "x": x, "axis": axis, "index": k }),
            clauses: vec![self.leq(small, large)],
        })
    }

    fn multiple_regular(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let n = self.order(2);
        let a = if self.index == 0 {
            NSeq::zeros(Shape::new(vec![1; n - 1])?, space)?
        } else {
            self.random_nseq(space, n - 1)
        };
        let len = self.gen.range(1, self.cfg.max_len);
        let lambda = self.gen.scalars(len);
        let axis = self.gen.range(0, n - 1);
        let big = crate::nseq::scale_axis(&a, &lambda, axis)?;
        let (small, large) = self.regular(spec, &a, &big, &lambda, axis)?;
        let lam = Side::exact(lr_norm(spec.scalar_exponent(), &lambda));
        Ok(Sample {
            inputs: json!({ "spec": spec, "a": a, "lambda": lambda, "axis": axis }),
            clauses: vec![self.leq(small, lam.times(large))],
        })
    }

    fn linear_stability(&mut self, spec: &ClassSpec, space: &FiniteSpace) -> Result<Sample> {
        let n = self.order(1);
        let x = self.random_nseq(space, n);
        let target = self.random_space(4);
        let u = if self.index == 0 { LinearOp::zero(space, &target) } else { self.gen.linear(space, &target) };
        let ux = u.apply_nseq(&x)?;
        let (small, large) = self.stable(spec, &u, &x, &ux)?;
        let op = u.opnorm_with(&self.cfg.budget);
        let opn = Side { value: op.value, low: true, high: op.exact };
        Ok(Sample { inputs: json!({ "spec": spec, "u": u, "x": x }), clauses: vec![self.leq(small, opn.times(large))] })
    }

    fn mult1(&mut self, input: &ClassSpec, output: &ClassSpec) -> Result<Sample> {
        let n = self.order(1);
        let mut factors: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let len = self.gen.range(1, self.cfg.max_len);
                self.gen.scalars(len)
            })
            .collect();
        if self.index == 0 {
            factors[0] = vec![0.0; factors[0].len()];
        }
        let outer = outer_scalars(&factors)?;
        let left = Side::of(&self.norm(output, &outer)?);
        let mut right = Side::exact(1.0);
        for f in &factors {
            right = right.times(Side::of(&self.norm(input, &scalar_seq(f))?));
        }
        Ok(Sample {
            inputs: json!({ "input": input, "output": output, "factors": factors }),
            clauses: vec![self.leq(left, right)],
        })
    }

    fn in_norm_one(&mut self, input: &ClassSpec, output: &ClassSpec) -> Result<Sample> {
        let n = self.order(1);
        let op = product_op(n)?;
        let xs: Vec<NSeq> = (0..n)
            .map(|_| {
                let len = self.gen.range(1, self.cfg.max_len);
                scalar_seq(&self.gen.scalars(len))
            })
            .collect();
        let out = Side::of(&self.norm(output, &op.apply_batch(&xs)?)?);
        let mut denominator = Side::exact(1.0);
        for x in &xs {
            denominator = denominator.times(Side::of(&self.norm(input, x)?));
        }
        let mut clauses = vec![self.leq(out, denominator)];

        let cs: Vec<f64> = (0..n).map(|_| self.gen.gauss()).collect();
        if cs.iter().all(|&c| c != 0.0) {
            let singles: Vec<NSeq> = cs.iter().map(|&c| scalar_seq(&[c])).collect();
            let out1 = Side::of(&self.norm(output, &op.apply_batch(&singles)?)?);
            let mut den1 = Side::exact(1.0);
            for x in &singles {
                den1 = den1.times(Side::of(&self.norm(input, x)?));
            }
            clauses.extend(self.eq(out1, den1));
        }

        let mut inputs = json!({ "input": input, "output": output, "xs": xs });
        if self.index % 25 == 1 {
            let m = n.min(2);
            let mut budget = self.cfg.budget.clone();
            budget.starts = budget.starts.min(16);
            budget.iterations = budget.iterations.min(200);
            let prob = SummingProblem::new(product_op(m)?, vec![input.clone(); m], output.clone())
                .with_caps(vec![2; m])
                .with_budget(budget);
            let est = estimate_lower_with(&self.engine, &prob)?;
            let v = Side { value: est.value, low: true, high: false };
            clauses.push(self.leq(v, Side::exact(1.0)));
            clauses.push(Clause { margin: est.value - (1.0 - IN_NORM_SLACK), tol: 0.0 });
            inputs["estimate"] = json!(est.value);
        }
        Ok(Sample { inputs, clauses })
    }

    fn ideal_ineq(&mut self, input: &ClassSpec, output: &ClassSpec, base: &FiniteSpace) -> Result<Sample> {
        let n = 2;
        let es: Vec<FiniteSpace> = (0..n).map(|_| self.random_space(3)).collect();
        let hs: Vec<FiniteSpace> = (0..n).map(|_| self.gen.resized(base, 3)).collect();
        let f = self.random_space(3);
        let g = self.random_space(3);
        let t_op = if self.index == 0 {
            MultiOp::zero(es.clone(), &f)?
        } else {
            self.gen.multi(es.clone(), &f)
        };
        let t = self.gen.linear(&f, &g);
        let us: Vec<LinearOp> = hs.iter().zip(&es).map(|(h, e)| self.gen.linear(h, e)).collect();
        let xs: Vec<NSeq> = hs.iter().map(|h| self.random_nseq(h, 1)).collect();
        let inputs = json!({
            "input": input, "output": output, "T": t_op, "t": t, "u": us, "X": xs,
        });
        let images: Vec<NSeq> = us.iter().zip(&xs).map(|(u, x)| u.apply_nseq(x)).collect::<Result<_>>()?;
        if images.iter().any(NSeq::is_zero) {
            return Ok(Sample { inputs, clauses: Vec::new() });
        }
        let y = t_op.apply_batch(&images)?;
        let z = crate::operators::compose(&t, &t_op, &us)?.apply_batch(&xs)?;
        let (out_small, out_large) = self.stable(output, &t, &y, &z)?;
        let mut lhs = out_small;
        let mut rhs = out_large.times(self.opnorm_side(&t));
        for ((u, x), ux) in us.iter().zip(&xs).zip(&images) {
            let (s, l) = self.stable(input, u, x, ux)?;
            lhs = lhs.times(s);
            rhs = rhs.times(l).times(self.opnorm_side(u));
        }
        Ok(Sample { inputs, clauses: vec![self.leq(lhs, rhs)] })
    }

    fn opnorm_side(&self, u: &LinearOp) -> Side {
        let op = u.opnorm_with(&self.cfg.budget);
        Side { value: op.value, low: true, high: op.exact }
    }

    /// Down-regular step of the restriction argument: `‖(T_a(X…))‖ <= ‖(T(a, X…))‖`,
    /// plus `‖(a)‖_{in} = ‖a‖`.
    fn restriction_clauses(
        &self,
        input: &ClassSpec,
        output: &ClassSpec,
        op: &MultiOp,
        a: &[f64],
        xs: &[NSeq],
    ) -> Result<Vec<Clause>> {
        let e1 = &op.sources()[0];
        let single = NSeq::from_vectors(e1, &[a.to_vec()])?;
        let mut args = vec![single.clone()];
        args.extend(xs.iter().cloned());
        let full = op.apply_batch(&args)?;
        let sub = op.restrict(a, 0)?.apply_batch(xs)?;
        let bounds = full.bounds().to_vec();
        let (small, large) = self.sub_vs_full(
            output,
            &sub,
            &full,
            |f| embed(f, &bounds, |idx| with_axis(idx, 0, 0)),
            |f| fix_index(f, 0, 0),
        )?;
        let mut clauses = vec![self.leq(small, large)];
        if a.iter().any(|&v| v != 0.0) {
            let ra = Side::of(&self.norm(input, &single)?);
            clauses.extend(self.eq(ra, Side::exact(e1.norm(a)?)));
        }
        Ok(clauses)
    }

    fn ch1(&mut self, input: &ClassSpec, output: &ClassSpec, base: &FiniteSpace) -> Result<Sample> {
        let n = self.order(2);
        let es: Vec<FiniteSpace> = (0..n).map(|_| self.gen.resized(base, 3)).collect();
        let f = self.random_space(3);
        let op = if self.index == 0 { MultiOp::zero(es.clone(), &f)? } else { self.gen.multi(es.clone(), &f) };
        let a = self.gen.nonzero_vec(es[0].dim());
        let xs: Vec<NSeq> = es[1..].iter().map(|e| self.random_nseq(e, 1)).collect();
        let clauses = self.restriction_clauses(input, output, &op, &a, &xs)?;
        Ok(Sample { inputs: json!({ "input": input, "output": output, "T": op, "a": a, "X": xs }), clauses })
    }

    fn ch2(&mut self, input: &ClassSpec, output: &ClassSpec, base: &FiniteSpace) -> Result<Sample> {
        let m = self.order(2);
        let e = self.gen.resized(base, 3);
        let f = self.random_space(3);
        let t = if self.index == 0 { MultiOp::zero(vec![e.clone(); m], &f)? } else { self.gen.multi(vec![e.clone(); m], &f) };
        let p = symmetrize_with(&t, self.cfg.mutation)?;
        let x = self.gen.vec(e.dim());
        let diag_t = t.apply(&vec![x.as_slice(); m])?;
        let mut clauses = vec![self.identity(rel_error(&p.evaluate(&x)?, &diag_t))];
        let a = self.gen.nonzero_vec(e.dim());
        let pa = poly_restrict(&p, &a)?;
        let check = p.symmetric_op().restrict(&a, 0)?;
        clauses.push(self.identity(rel_error(pa.symmetric_op().coefficients(), check.coefficients())));
        let xs: Vec<NSeq> = (1..m).map(|_| self.random_nseq(&e, 1)).collect();
        clauses.extend(self.restriction_clauses(input, output, p.symmetric_op(), &a, &xs)?);
        Ok(Sample { inputs: json!({ "input": input, "output": output, "T": t, "a": a, "x": x, "X": xs }), clauses })
    }

    fn ch3(&mut self, input: &ClassSpec, output: &ClassSpec, base: &FiniteSpace) -> Result<Sample> {
        let n = self.gen.range(1, self.cfg.max_order.saturating_sub(1).max(1));
        let es: Vec<FiniteSpace> = (0..=n).map(|_| self.gen.resized(base, 3)).collect();
        let f = self.random_space(3);
        let sources = es[..n].to_vec();
        let op = if self.index == 0 { MultiOp::zero(sources.clone(), &f)? } else { self.gen.multi(sources, &f) };
        let gamma = self.gen.functional(&es[n]);
        let xs: Vec<NSeq> = es.iter().map(|e| self.random_nseq(e, 1)).collect();
        let inputs = json!({ "input": input, "output": output, "T": op, "gamma": gamma, "X": xs });
        let lambda: Vec<f64> = xs[n].entries().map(|v| gamma.apply(v)).collect::<Result<_>>()?;
        let big = op.extend_by_functional(&gamma).apply_batch(&xs)?;
        let y = op.apply_batch(&xs[..n])?;
        let (small, large) = self.regular(output, &y, &big, &lambda, n)?;
        let lam = Side::of(&self.norm(input, &scalar_seq(&lambda))?);
        Ok(Sample { inputs, clauses: vec![self.leq(small, lam.times(large))] })
    }

    fn ch4(&mut self, input: &ClassSpec, output: &ClassSpec, base: &FiniteSpace) -> Result<Sample> {
        let m = self.gen.range(1, self.cfg.max_order.saturating_sub(1).max(1));
        let e = self.gen.resized(base, 3);
        let f = self.random_space(3);
        let t = if self.index == 0 { MultiOp::zero(vec![e.clone(); m], &f)? } else { self.gen.multi(vec![e.clone(); m], &f) };
        let p = symmetrize_with(&t, self.cfg.mutation)?;
        let phi = self.gen.functional(&e);
        let q = poly_scalar_extend_with(&p, &phi, self.cfg.mutation)?;
        let x = self.gen.vec(e.dim());
        let px: Vec<f64> = p.evaluate(&x)?.iter().map(|v| phi.apply(&x).expect("matching dimension") * v).collect();
        let mut clauses = vec![self.identity(rel_error(&q.evaluate(&x)?, &px))];

        let xs: Vec<NSeq> = (0..=m).map(|_| self.random_nseq(&e, 1)).collect();
        let left = Side::of(&self.norm(output, &q.symmetric_op().apply_batch(&xs)?)?);
        let mut right = Side { value: 0.0, low: true, high: true };
        for k in 0..=m {
            let lambda: Vec<f64> = xs[k].entries().map(|v| phi.apply(v)).collect::<Result<_>>()?;
            let lam = Side::of(&self.norm(input, &scalar_seq(&lambda))?);
            let rest: Vec<NSeq> = xs.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, x)| x.clone()).collect();
            let term = lam.times(Side::of(&self.norm(output, &p.symmetric_op().apply_batch(&rest)?)?));
            right = Side { value: right.value + term.value, low: right.low && term.low, high: right.high && term.high };
        }
        right.value /= (m + 1) as f64;
        clauses.push(self.leq(left, right));
        Ok(Sample {
            inputs: json!({ "input": input, "output": output, "T": t, "phi": phi, "x": x, "X": xs }),
            clauses,
        })
    }

    fn lemma_pa(&mut self, base: &FiniteSpace) -> Result<Sample> {
        let m = self.order(2);
        let e = self.gen.resized(base, 3);
        let f = self.random_space(3);
        let t = self.gen.multi(vec![e.clone(); m], &f);
        let p = symmetrize_with(&t, self.cfg.mutation)?;
        let a = if self.index == 0 { vec![0.0; e.dim()] } else { self.gen.vec(e.dim()) };
        let pa = poly_restrict(&p, &a)?;
        let mut clauses = Vec::with_capacity(m);
        for axis in 0..m {
            let check = p.symmetric_op().restrict(&a, axis)?;
            clauses.push(self.identity(rel_error(pa.symmetric_op().coefficients(), check.coefficients())));
        }
        if pa.degree() != m - 1 {
            return Err(Error::invalid("restriction changed the degree incorrectly"));
        }
        Ok(Sample { inputs: json!({ "T": t, "a": a }), clauses })
    }
}
