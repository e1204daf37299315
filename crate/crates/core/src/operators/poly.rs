use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MultiOp;
use crate::error::{check_dim, Error, Result};
use crate::mutation::{active, Mutation};
use crate::spaces::{FiniteSpace, Functional};

/// An n-homogeneous polynomial `P(x) = P̌(x, …, x)`, stored through its
/// symmetric n-linear operator `P̌`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    op: MultiOp,
}

impl Polynomial {
    /// Wraps `op`, which must already be symmetric in its inputs (to 1e-12).
    pub fn from_symmetric(op: MultiOp) -> Result<Self> {
        equal_sources(&op)?;
        let n = op.arity();
        for sigma in permutations(n) {
            let p = op.permuted_coefficients(&sigma);
            if p.iter().zip(op.coefficients()).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
                return Err(Error::invalid("coefficient tensor is not symmetric"));
            }
        }
        Ok(Self { op })
    }

    pub fn degree(&self) -> usize {
        self.op.arity()
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.op.sources()[0]
    }

    pub fn target(&self) -> &FiniteSpace {
        self.op.target()
    }

    /// The symmetric n-linear operator `P̌`.
    pub fn symmetric_op(&self) -> &MultiOp {
        &self.op
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.space().dim(), x.len())?;
        let args = vec![x; self.degree()];
        Ok(self.op.apply_unchecked(&args))
    }
}

fn equal_sources(op: &MultiOp) -> Result<&FiniteSpace> {
    let first = &op.sources()[0];
    if op.sources().iter().any(|s| s != first) {
        return Err(Error::invalid("a polynomial needs all sources equal"));
    }
    Ok(first)
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The polynomial whose symmetric operator is the average of `T` over all
/// permutations of its inputs.
pub fn symmetrize(t: &MultiOp) -> Result<Polynomial> {
    symmetrize_with(t, None)
}

pub(crate) fn symmetrize_with(t: &MultiOp, mutation: Option<Mutation>) -> Result<Polynomial> {
    let space = equal_sources(t)?.clone();
    let n = t.arity();
    let mut sum = vec![0.0; t.coefficients().len()];
    for sigma in permutations(n) {
        for (s, c) in sum.iter_mut().zip(t.permuted_coefficients(&sigma)) {
            *s += c;
        }
    }
    let divisor = if active(mutation, Mutation::SymmetrizeMissingDivisor) { 1.0 } else { factorial(n) };
    sum.iter_mut().for_each(|s| *s /= divisor);
    Ok(Polynomial { op: MultiOp::new(vec![space; n], t.target(), sum)? })
}

/// `P_a`, whose symmetric operator is `P̌` with `a` in the first slot.
pub fn poly_restrict(p: &Polynomial, a: &[f64]) -> Result<Polynomial> {
    if p.degree() < 2 {
        return Err(Error::Arity("restricting a polynomial needs degree >= 2".into()));
    }
    Ok(Polynomial { op: p.op.restrict(a, 0)? })
}

/// `φP`, with `(φP)^∨(x_1,…,x_{n+1}) = Σ_i φ(x_i) P̌(x_1,…,x̂_i,…,x_{n+1}) / (n+1)`.
pub fn poly_scalar_extend(p: &Polynomial, phi: &Functional) -> Result<Polynomial> {
    poly_scalar_extend_with(p, phi, None)
}

pub(crate) fn poly_scalar_extend_with(p: &Polynomial, phi: &Functional, mutation: Option<Mutation>) -> Result<Polynomial> {
    if phi.host() != p.space() {
        return Err(Error::invalid(format!("functional acts on {}, polynomial on {}", phi.host(), p.space())));
    }
    let n = p.degree();
    // φ ⊗ P̌ carries φ in the last slot; moving it to slot i gives the i-th term.
    let ext = p.op.extend_by_functional(phi);
    let mut sum = vec![0.0; ext.coefficients().len()];
    for i in 0..=n {
        let mut sigma: Vec<usize> = (0..=n).collect();
        sigma.swap(i, n);
        for (s, c) in sum.iter_mut().zip(ext.permuted_coefficients(&sigma)) {
            *s += c;
        }
    }
    let divisor = if active(mutation, Mutation::ScalarExtendFactorialDivisor) { factorial(n + 1) } else { (n + 1) as f64 };
    sum.iter_mut().for_each(|s| *s /= divisor);
    Ok(Polynomial { op: MultiOp::new(vec![p.space().clone(); n + 1], p.target(), sum)? })
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut v = serde_json::to_value(&self.op).map_err(serde::ser::Error::custom)?;
        v["degree"] = self.degree().into();
        v.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let mut v = serde_json::Value::deserialize(deserializer)?;
        let degree = v
            .as_object_mut()
            .and_then(|o| o.remove("degree"))
            .and_then(|d| d.as_u64())
            .ok_or_else(|| serde::de::Error::custom("degree: missing or not an integer"))?;
        let op: MultiOp = serde_json::from_value(v).map_err(serde::de::Error::custom)?;
        if op.arity() as u64 != degree {
            return Err(serde::de::Error::custom(format!("degree: {degree} but {} sources", op.arity())));
        }
        Polynomial::from_symmetric(op).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::product_op;

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(1).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn symmetrize_averages_with_transpose() {
        let e = FiniteSpace::l2(2);
        let t = MultiOp::new(vec![e.clone(), e.clone()], &FiniteSpace::scalar(), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let p = symmetrize(&t).unwrap();
        assert_eq!(p.symmetric_op().coefficients(), &[0.0, 0.5, 0.5, 0.0]);
        assert_eq!(symmetrize(p.symmetric_op()).unwrap(), p);
        let i3 = product_op(3).unwrap();
        assert_eq!(symmetrize(&i3).unwrap().symmetric_op(), &i3);
    }

    #[test]
    fn restrict_contracts_first_slot() {
        let e = FiniteSpace::l2(2);
        let t = MultiOp::new(vec![e.clone(), e.clone()], &FiniteSpace::scalar(), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let p = symmetrize(&t).unwrap();
        let pa = poly_restrict(&p, &[1.0, 0.0]).unwrap();
        assert_eq!(pa.evaluate(&[3.0, 4.0]).unwrap(), vec![2.0]);
        assert!(poly_restrict(&p, &[0.0, 0.0]).unwrap().symmetric_op().is_zero());
        assert!(matches!(poly_restrict(&pa, &[1.0, 0.0]), Err(Error::Arity(_))));
    }

    #[test]
    fn scalar_extension_of_identity_is_the_product() {
        let k = FiniteSpace::scalar();
        let p = symmetrize(&product_op(1).unwrap()).unwrap();
        let id = Functional::new(&k, vec![1.0]).unwrap();
        let q = poly_scalar_extend(&p, &id).unwrap();
        assert_eq!(q.symmetric_op(), &product_op(2).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let p = symmetrize(&product_op(2).unwrap()).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"degree\":2"));
        assert_eq!(serde_json::from_str::<Polynomial>(&s).unwrap(), p);
    }
}
