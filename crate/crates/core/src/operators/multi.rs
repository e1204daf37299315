use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::LinearOp;
use crate::error::{check_dim, Error, Result};
use crate::json;
use crate::nseq::{NSeq, Shape};
use crate::spaces::{FiniteSpace, Functional};

/// An n-linear map `E_1 × … × E_n → F`.
///
/// Coefficients are stored row-major over the axes `(d_1, …, d_n, d_F)`, so
/// `T(x_1,…,x_n)_f = Σ c[k_1,…,k_n,f] x_1[k_1] ⋯ x_n[k_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiOp {
    sources: Vec<FiniteSpace>,
    target: FiniteSpace,
    coefficients: Vec<f64>,
}

impl MultiOp {
    pub fn new(sources: Vec<FiniteSpace>, target: &FiniteSpace, coefficients: Vec<f64>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::Arity("a multilinear operator needs at least one source".into()));
        }
        let len = sources.iter().map(FiniteSpace::dim).product::<usize>() * target.dim();
        check_dim(len, coefficients.len())?;
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self { sources, target: target.clone(), coefficients })
    }

    pub fn zero(sources: Vec<FiniteSpace>, target: &FiniteSpace) -> Result<Self> {
        let len = sources.iter().map(FiniteSpace::dim).product::<usize>() * target.dim();
        Self::new(sources, target, vec![0.0; len])
    }

    pub fn sources(&self) -> &[FiniteSpace] {
        &self.sources
    }

    pub fn target(&self) -> &FiniteSpace {
        &self.target
    }

    pub fn arity(&self) -> usize {
        self.sources.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Axis lengths `(d_1, …, d_n, d_F)`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.sources.iter().map(FiniteSpace::dim).collect();
        dims.push(self.target.dim());
        dims
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { coefficients: self.coefficients.iter().map(|v| c * v).collect(), ..self.clone() }
    }

    pub fn apply(&self, xs: &[&[f64]]) -> Result<Vec<f64>> {
        check_dim(self.arity(), xs.len())?;
        for (x, s) in xs.iter().zip(&self.sources) {
            check_dim(s.dim(), x.len())?;
        }
        Ok(self.apply_unchecked(xs))
    }

    /// Contracts the leading axis with each argument in turn.
    pub(crate) fn apply_unchecked(&self, xs: &[&[f64]]) -> Vec<f64> {
        let mut cur = self.coefficients.clone();
        for x in xs {
            let rest = cur.len() / x.len();
            let mut next = vec![0.0; rest];
            for (k, &xk) in x.iter().enumerate() {
                if xk == 0.0 {
                    continue;
                }
                for (n, c) in next.iter_mut().zip(&cur[k * rest..(k + 1) * rest]) {
                    *n += xk * c;
                }
            }
            cur = next;
        }
        cur
    }

    /// `(T(x^{(1)}_{j_1}, …, x^{(n)}_{j_n}))_{j_1,…,j_n}` for order-1 inputs.
    pub fn apply_batch(&self, xs: &[NSeq]) -> Result<NSeq> {
        check_dim(self.arity(), xs.len())?;
        for (i, (x, s)) in xs.iter().zip(&self.sources).enumerate() {
            if x.order() != 1 {
                return Err(Error::invalid(format!("input {i} has order {}, expected 1", x.order())));
            }
            if x.space() != s {
                return Err(Error::invalid(format!("input {i} lives in {}, expected {s}", x.space())));
            }
        }
        let bounds: Vec<usize> = xs.iter().map(|x| x.len()).collect();
        let shape = Shape::new(bounds)?;
        let mut data = Vec::with_capacity(shape.size() * self.target.dim());
        for idx in shape.indices() {
            let args: Vec<&[f64]> = xs.iter().zip(&idx).map(|(x, &j)| x.flat_entry(j)).collect();
            data.extend(self.apply_unchecked(&args));
        }
        NSeq::from_flat(shape, &self.target, data)
    }

    /// Multiplies axis `axis` of the coefficient tensor by `m` (`new × old`).
    fn mode_product(&self, axis: usize, m: &[Vec<f64>]) -> Vec<f64> {
        let dims = self.dims();
        let old = dims[axis];
        let new = m.len();
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();
        let mut out = vec![0.0; outer * new * inner];
        for o in 0..outer {
            for (a, row) in m.iter().enumerate() {
                for (b, &w) in row.iter().enumerate().take(old) {
                    if w == 0.0 {
                        continue;
                    }
                    let src = &self.coefficients[(o * old + b) * inner..(o * old + b + 1) * inner];
                    let dst = &mut out[(o * new + a) * inner..(o * new + a + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        out
    }

    /// `T_a`: the (n-1)-linear map with `a` inserted at position `axis`.
    pub fn restrict(&self, a: &[f64], axis: usize) -> Result<MultiOp> {
        if self.arity() < 2 {
            return Err(Error::Arity("restrict needs arity >= 2".into()));
        }
        if axis >= self.arity() {
            return Err(Error::OutOfBounds(format!("axis {axis} of an arity-{} operator", self.arity())));
        }
        check_dim(self.sources[axis].dim(), a.len())?;
        let coefficients = self.mode_product(axis, &[a.to_vec()]);
        let mut sources = self.sources.clone();
        sources.remove(axis);
        MultiOp::new(sources, &self.target, coefficients)
    }

    /// `(x_1, …, x_{n+1}) ↦ γ(x_{n+1}) T(x_1, …, x_n)`.
    pub fn extend_by_functional(&self, gamma: &Functional) -> MultiOp {
        let e = gamma.coefficients();
        let df = self.target.dim();
        let outer = self.coefficients.len() / df;
        let mut coefficients = Vec::with_capacity(self.coefficients.len() * e.len());
        for o in 0..outer {
            let block = &self.coefficients[o * df..(o + 1) * df];
            for &g in e {
                coefficients.extend(block.iter().map(|c| g * c));
            }
        }
        let mut sources = self.sources.clone();
        sources.push(gamma.host().clone());
        MultiOp { sources, target: self.target.clone(), coefficients }
    }

    /// The coefficient tensor with its input axes permuted: the result at
    /// `(k_1,…,k_n)` is `self` at `(k_{σ(1)},…,k_{σ(n)})`.
    pub(crate) fn permuted_coefficients(&self, sigma: &[usize]) -> Vec<f64> {
        let dims = self.dims();
        let n = self.arity();
        let mut new_dims = dims.clone();
        for (k, &sk) in sigma.iter().enumerate() {
            new_dims[sk] = dims[k];
        }
        let shape = Shape::new(new_dims[..n].to_vec()).expect("nonempty");
        let src_shape = Shape::new(dims[..n].to_vec()).expect("nonempty");
        let df = self.target.dim();
        let mut out = vec![0.0; self.coefficients.len()];
        let mut src = vec![0; n];
        for (f, j) in shape.indices().enumerate() {
            for (k, slot) in src.iter_mut().enumerate() {
                *slot = j[sigma[k]];
            }
            let s = src_shape.flat_index(&src).expect("in bounds");
            out[f * df..(f + 1) * df].copy_from_slice(&self.coefficients[s * df..(s + 1) * df]);
        }
        out
    }
}

/// `t ∘ T ∘ (u_1, …, u_n)`.
pub fn compose(t: &LinearOp, op: &MultiOp, us: &[LinearOp]) -> Result<MultiOp> {
    check_dim(op.arity(), us.len())?;
    if t.source() != op.target() {
        return Err(Error::invalid(format!("cannot chain {} into {}", op.target(), t.source())));
    }
    let mut cur = op.clone();
    for (i, u) in us.iter().enumerate() {
        if u.target() != &op.sources[i] {
            return Err(Error::invalid(format!("u_{i} maps into {}, T expects {}", u.target(), op.sources[i])));
        }
        let ut: Vec<Vec<f64>> = (0..u.source().dim()).map(|g| u.matrix().iter().map(|r| r[g]).collect()).collect();
        let coefficients = cur.mode_product(i, &ut);
        let mut sources = cur.sources.clone();
        sources[i] = u.source().clone();
        cur = MultiOp { sources, target: cur.target.clone(), coefficients };
    }
    let coefficients = cur.mode_product(op.arity(), t.matrix());
    MultiOp::new(cur.sources, t.target(), coefficients)
}

/// `B(x_1, …, x_n) = φ_1(x_1) ⋯ φ_n(x_n) b`.
pub fn finite_type(phis: &[Functional], target: &FiniteSpace, b: &[f64]) -> Result<MultiOp> {
    check_dim(target.dim(), b.len())?;
    let mut coefficients = vec![1.0];
    for phi in phis {
        coefficients = coefficients.iter().flat_map(|c| phi.coefficients().iter().map(move |v| c * v)).collect();
    }
    coefficients = coefficients.iter().flat_map(|c| b.iter().map(move |v| c * v)).collect();
    MultiOp::new(phis.iter().map(|p| p.host().clone()).collect(), target, coefficients)
}

/// `I_n(λ_1, …, λ_n) = λ_1 ⋯ λ_n` on the scalar field.
pub fn product_op(n: usize) -> Result<MultiOp> {
    MultiOp::new(vec![FiniteSpace::scalar(); n], &FiniteSpace::scalar(), vec![1.0])
}

#[derive(Serialize, Deserialize)]
struct RawMulti {
    sources: Vec<FiniteSpace>,
    target: FiniteSpace,
    coefficients: Value,
}

impl Serialize for MultiOp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawMulti {
            sources: self.sources.clone(),
            target: self.target.clone(),
            coefficients: json::nest(&self.coefficients, &self.dims()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultiOp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMulti::deserialize(deserializer)?;
        let mut dims: Vec<usize> = raw.sources.iter().map(FiniteSpace::dim).collect();
        dims.push(raw.target.dim());
        let data = json::flatten(&raw.coefficients, &dims, "coefficients").map_err(serde::de::Error::custom)?;
        MultiOp::new(raw.sources, &raw.target, data).map_err(serde::de::Error::custom)
    }
}
