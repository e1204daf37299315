//! Finitely supported vector-valued n-sequences.
//!
//! An [`NSeq`] stores the block `(x_{j_1,…,j_n})` with `j_i < m_i` densely, in
//! row-major order; every index outside the block is an implicit zero. All
//! indices in this module are zero-based.

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{check_dim, Error, Result};
use crate::json;
use crate::spaces::FiniteSpace;

/// Default cap on `Π m_i · d`, the number of stored reals.
pub const DEFAULT_ELEMENT_CAP: usize = 1_000_000;

/// The bounds `(m_1, …, m_n)` of an n-sequence block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    bounds: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;
    fn try_from(bounds: Vec<usize>) -> Result<Self> {
        Shape::new(bounds)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.bounds
    }
}

impl Shape {
    pub fn new(bounds: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("an n-sequence needs order n >= 1"));
        }
        if bounds.iter().any(|&m| m == 0) {
            return Err(Error::invalid(format!("all bounds must be >= 1, got {bounds:?}")));
        }
        Ok(Self { bounds })
    }

    pub fn order(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    /// Number of index tuples in the block.
    pub fn size(&self) -> usize {
        self.bounds.iter().product()
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() {
            return Err(Error::OutOfBounds(format!(
                "index {index:?} has {} components, shape has order {}",
                index.len(),
                self.order()
            )));
        }
        let mut flat = 0;
        for (&k, &m) in index.iter().zip(&self.bounds) {
            if k >= m {
                return Err(Error::OutOfBounds(format!("index {index:?} outside bounds {:?}", self.bounds)));
            }
            flat = flat * m + k;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order()];
        for (slot, &m) in idx.iter_mut().zip(&self.bounds).rev() {
            *slot = flat % m;
            flat /= m;
        }
        idx
    }

    /// Iterates over all index tuples in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.size()).map(|f| self.multi_index(f))
    }
}

/// A permutation `σ` of `{0, …, n-1}`, stored by its images `σ(k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::invalid(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        if n == 0 {
            return Err(Error::invalid("empty permutation"));
        }
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        let mut v: Vec<usize> = (0..n).collect();
        if a >= n || b >= n {
            return Err(Error::OutOfBounds(format!("transposition ({a} {b}) on {n} points")));
        }
        v.swap(a, b);
        Ok(Self(v))
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (k, &s) in self.0.iter().enumerate() {
            inv[s] = k;
        }
        Self(inv)
    }
}

/// A finitely supported n-sequence with entries in a [`FiniteSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct NSeq {
    shape: Shape,
    space: FiniteSpace,
    data: Vec<f64>,
}

impl NSeq {
    pub fn zeros(shape: Shape, space: &FiniteSpace) -> Result<Self> {
        Self::zeros_with_cap(shape, space, DEFAULT_ELEMENT_CAP)
    }

    pub fn zeros_with_cap(shape: Shape, space: &FiniteSpace, cap: usize) -> Result<Self> {
        let total = shape
            .size()
            .checked_mul(space.dim())
            .filter(|&t| t <= cap)
            .ok_or_else(|| Error::invalid(format!("shape {:?} x dim {} exceeds the cap {cap}", shape.bounds(), space.dim())))?;
        Ok(Self { shape, space: space.clone(), data: vec![0.0; total] })
    }

    /// Builds from a flat row-major buffer of `Π m_i · d` reals.
    pub fn from_flat(shape: Shape, space: &FiniteSpace, data: Vec<f64>) -> Result<Self> {
        let mut x = Self::zeros(shape, space)?;
        check_dim(x.data.len(), data.len())?;
        x.data = data;
        Ok(x)
    }

    /// An order-1 sequence `(v_0, v_1, …)`.
    pub fn from_vectors(space: &FiniteSpace, vectors: &[Vec<f64>]) -> Result<Self> {
        let shape = Shape::new(vec![vectors.len()])?;
        let mut data = Vec::with_capacity(vectors.len() * space.dim());
        for v in vectors {
            check_dim(space.dim(), v.len())?;
            data.extend_from_slice(v);
        }
        Self::from_flat(shape, space, data)
    }

    /// A scalar-valued n-sequence.
    pub fn scalars(bounds: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        Self::from_flat(Shape::new(bounds)?, &FiniteSpace::scalar(), values)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn bounds(&self) -> &[usize] {
        self.shape.bounds()
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Number of index tuples (not reals).
    pub fn len(&self) -> usize {
        self.shape.size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn entry(&self, index: &[usize]) -> Result<&[f64]> {
        let f = self.shape.flat_index(index)?;
        Ok(self.flat_entry(f))
    }

    pub fn set_entry(&mut self, index: &[usize], v: &[f64]) -> Result<()> {
        check_dim(self.dim(), v.len())?;
        let f = self.shape.flat_index(index)?;
        let d = self.dim();
        self.data[f * d..(f + 1) * d].copy_from_slice(v);
        Ok(())
    }

    pub fn flat_entry(&self, flat: usize) -> &[f64] {
        let d = self.dim();
        &self.data[flat * d..(flat + 1) * d]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim())
    }

    /// Entries that are not identically zero.
    pub fn nonzero_entries(&self) -> Vec<&[f64]> {
        self.entries().filter(|e| e.iter().any(|&x| x != 0.0)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// `sup_j ‖x_j‖`, the `ℓ_∞` norm.
    pub fn max_entry_norm(&self) -> f64 {
        self.entries().map(|e| self.space.norm_unchecked(e)).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> NSeq {
        NSeq { shape: self.shape.clone(), space: self.space.clone(), data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn add(&self, other: &NSeq) -> Result<NSeq> {
        if self.shape != other.shape || self.space != other.space {
            return Err(Error::invalid("cannot add n-sequences of different shapes or spaces"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(NSeq { shape: self.shape.clone(), space: self.space.clone(), data })
    }

    /// Applies `f` to every entry, producing a sequence in `target`.
    pub fn map_entries<F>(&self, target: &FiniteSpace, mut f: F) -> Result<NSeq>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut data = Vec::with_capacity(self.len() * target.dim());
        for e in self.entries() {
            let y = f(e);
            check_dim(target.dim(), y.len())?;
            data.extend(y);
        }
        NSeq::from_flat(self.shape.clone(), target, data)
    }

    /// Zeroes every entry outside the leading block `keep` (same shape).
    pub fn truncated(&self, keep: &[usize]) -> Result<NSeq> {
        check_dim(self.order(), keep.len())?;
        let mut out = self.clone();
        let d = self.dim();
        for f in 0..self.len() {
            let idx = self.shape.multi_index(f);
            if idx.iter().zip(keep).any(|(j, k)| j >= k) {
                out.data[f * d..(f + 1) * d].iter_mut().for_each(|x| *x = 0.0);
            }
        }
        Ok(out)
    }

    /// The same sequence stored in a larger block; the new slots are zero.
    pub fn padded(&self, bounds: &[usize]) -> Result<NSeq> {
        check_dim(self.order(), bounds.len())?;
        if bounds.iter().zip(self.bounds()).any(|(b, m)| b < m) {
            return Err(Error::invalid("padding bounds must dominate the current bounds"));
        }
        let mut out = NSeq::zeros(Shape::new(bounds.to_vec())?, &self.space)?;
        for f in 0..self.len() {
            let idx = self.shape.multi_index(f);
            out.set_entry(&idx, self.flat_entry(f))?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("n-sequences serialize")
    }
}

impl Serialize for NSeq {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut dims = self.bounds().to_vec();
        dims.push(self.dim());
        RawNSeq {
            order: self.order(),
            bounds: self.bounds().to_vec(),
            space: self.space.clone(),
            entries: json::nest(&self.data, &dims),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawNSeq::deserialize(deserializer)?;
        NSeq::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RawNSeq {
    order: usize,
    bounds: Vec<usize>,
    space: FiniteSpace,
    entries: Value,
}

impl TryFrom<RawNSeq> for NSeq {
    type Error = Error;
    fn try_from(raw: RawNSeq) -> Result<Self> {
        if raw.order != raw.bounds.len() {
            return Err(Error::json(format!(
                "order: {} does not match bounds of length {}",
                raw.order,
                raw.bounds.len()
            )));
        }
        let mut dims = raw.bounds.clone();
        dims.push(raw.space.dim());
        let data = json::flatten(&raw.entries, &dims, "entries")?;
        NSeq::from_flat(Shape::new(raw.bounds)?, &raw.space, data)
    }
}

/// `v` at index `k` and zero elsewhere.
pub fn unit_nseq(shape: Shape, space: &FiniteSpace, index: &[usize], v: &[f64]) -> Result<NSeq> {
    let mut x = NSeq::zeros(shape, space)?;
    x.set_entry(index, v)?;
    Ok(x)
}

/// `(x_{j_{σ(1)},…,j_{σ(n)}})`: the result at `j` is `x` at `(j_{σ(0)}, …, j_{σ(n-1)})`.
pub fn permute(x: &NSeq, sigma: &Permutation) -> Result<NSeq> {
    check_dim(x.order(), sigma.order())?;
    let s = sigma.images();
    let mut bounds = vec![0; x.order()];
    for (k, &sk) in s.iter().enumerate() {
        bounds[sk] = x.bounds()[k];
    }
    let mut out = NSeq::zeros(Shape::new(bounds)?, x.space())?;
    let mut src = vec![0; x.order()];
    for f in 0..out.len() {
        let j = out.shape.multi_index(f);
        for (k, slot) in src.iter_mut().enumerate() {
            *slot = j[s[k]];
        }
        let v = x.entry(&src)?.to_vec();
        let d = out.dim();
        out.data[f * d..(f + 1) * d].copy_from_slice(&v);
    }
    Ok(out)
}

/// The order-1 sequence `(x_{j,…,j})`.
pub fn diagonal(x: &NSeq) -> NSeq {
    let m = *x.bounds().iter().min().expect("order >= 1");
    let mut out = NSeq::zeros(Shape::new(vec![m]).expect("m >= 1"), x.space()).expect("smaller than input");
    for j in 0..m {
        let idx = vec![j; x.order()];
        let v = x.entry(&idx).expect("diagonal index in bounds").to_vec();
        out.set_entry(&[j], &v).expect("in bounds");
    }
    out
}

/// The (n-1)-sequence obtained by fixing index `axis` to `k`.
pub fn fix_index(x: &NSeq, axis: usize, k: usize) -> Result<NSeq> {
    if x.order() < 2 {
        return Err(Error::Arity("fix_index needs order >= 2".into()));
    }
    if axis >= x.order() {
        return Err(Error::OutOfBounds(format!("axis {axis} of an order-{} sequence", x.order())));
    }
    if k >= x.bounds()[axis] {
        return Err(Error::OutOfBounds(format!("index {k} on axis {axis} with bound {}", x.bounds()[axis])));
    }
    let mut bounds = x.bounds().to_vec();
    bounds.remove(axis);
    let mut out = NSeq::zeros(Shape::new(bounds)?, x.space())?;
    for f in 0..out.len() {
        let mut idx = out.shape.multi_index(f);
        idx.insert(axis, k);
        let v = x.entry(&idx)?.to_vec();
        out.set_entry(&out.shape.multi_index(f), &v)?;
    }
    Ok(out)
}

/// `(λ_{j_i} a_{j_1,…,ĵ_i,…,j_n})`: inserts a new axis at position `axis`.
pub fn scale_axis(a: &NSeq, lambda: &[f64], axis: usize) -> Result<NSeq> {
    if axis > a.order() {
        return Err(Error::OutOfBounds(format!("axis {axis} for an order-{} sequence", a.order())));
    }
    let mut bounds = a.bounds().to_vec();
    bounds.insert(axis, lambda.len());
    let mut out = NSeq::zeros(Shape::new(bounds)?, a.space())?;
    let d = a.dim();
    for f in 0..out.len() {
        let mut idx = out.shape.multi_index(f);
        let j = idx.remove(axis);
        let src = a.entry(&idx)?;
        for (t, &s) in out.data[f * d..(f + 1) * d].iter_mut().zip(src) {
            *t = lambda[j] * s;
        }
    }
    Ok(out)
}

/// The scalar n-sequence `(λ^{(1)}_{j_1} ⋯ λ^{(n)}_{j_n})`.
pub fn outer_scalars(factors: &[Vec<f64>]) -> Result<NSeq> {
    if factors.is_empty() {
        return Err(Error::invalid("outer product of zero factors"));
    }
    let shape = Shape::new(factors.iter().map(|f| f.len()).collect())?;
    let mut out = NSeq::zeros(shape, &FiniteSpace::scalar())?;
    for f in 0..out.len() {
        let idx = out.shape.multi_index(f);
        out.data[f] = idx.iter().zip(factors).map(|(&j, l)| l[j]).product();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abcd() -> NSeq {
        NSeq::scalars(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn unit_sequences() {
        let e = unit_nseq(Shape::new(vec![2, 2]).unwrap(), &FiniteSpace::scalar(), &[0, 0], &[1.0]).unwrap();
        assert_eq!(e.data(), &[1.0, 0.0, 0.0, 0.0]);
        let s = FiniteSpace::l2(2);
        let x = unit_nseq(Shape::new(vec![3]).unwrap(), &s, &[1], &[1.0, 0.0]).unwrap();
        assert_eq!(x.data(), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let z = unit_nseq(Shape::new(vec![1, 1, 1]).unwrap(), &FiniteSpace::scalar(), &[0, 0, 0], &[0.0]).unwrap();
        assert!(z.is_zero());
        assert!(unit_nseq(Shape::new(vec![2]).unwrap(), &s, &[2], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn transpose_and_inverse() {
        let x = abcd();
        let t = Permutation::transposition(2, 0, 1).unwrap();
        assert_eq!(permute(&x, &t).unwrap().data(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(permute(&x, &Permutation::identity(2)).unwrap(), x);
        let y = NSeq::scalars(vec![2, 3, 1], (0..6).map(f64::from).collect()).unwrap();
        let s = Permutation::new(vec![2, 0, 1]).unwrap();
        let back = permute(&permute(&y, &s).unwrap(), &s.inverse()).unwrap();
        assert_eq!(back, y);
        assert!(permute(&x, &Permutation::identity(3)).is_err());
    }

    #[test]
    fn permute_follows_index_rule() {
        let y = NSeq::scalars(vec![2, 3, 4], (0..24).map(f64::from).collect()).unwrap();
        let s = Permutation::new(vec![1, 2, 0]).unwrap();
        let p = permute(&y, &s).unwrap();
        for j in p.shape().indices() {
            let src: Vec<usize> = (0..3).map(|k| j[s.images()[k]]).collect();
            assert_eq!(p.entry(&j).unwrap(), y.entry(&src).unwrap());
        }
    }

    #[test]
    fn diagonal_examples() {
        assert_eq!(diagonal(&abcd()).data(), &[1.0, 4.0]);
        let x = NSeq::scalars(vec![3], vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(diagonal(&x), x);
        let e12 = unit_nseq(Shape::new(vec![2, 2]).unwrap(), &FiniteSpace::scalar(), &[0, 1], &[1.0]).unwrap();
        assert_eq!(diagonal(&e12).data(), &[0.0, 0.0]);
    }

    #[test]
    fn fix_index_examples() {
        assert_eq!(fix_index(&abcd(), 0, 0).unwrap().data(), &[1.0, 2.0]);
        assert_eq!(fix_index(&abcd(), 1, 1).unwrap().data(), &[2.0, 4.0]);
        let e11 = unit_nseq(Shape::new(vec![2, 2]).unwrap(), &FiniteSpace::scalar(), &[0, 0], &[1.0]).unwrap();
        assert!(fix_index(&e11, 0, 1).unwrap().is_zero());
        assert!(fix_index(&abcd(), 0, 2).is_err());
        assert!(fix_index(&NSeq::scalars(vec![2], vec![1.0, 2.0]).unwrap(), 0, 0).is_err());
    }

    #[test]
    fn scale_axis_examples() {
        let s = FiniteSpace::l2(2);
        let a = NSeq::from_vectors(&s, &[vec![1.0, 2.0]]).unwrap();
        let out = scale_axis(&a, &[1.0, 1.0], 0).unwrap();
        assert_eq!(out.bounds(), &[2, 1]);
        assert_eq!(out.data(), &[1.0, 2.0, 1.0, 2.0]);
        assert!(scale_axis(&a, &[0.0, 0.0], 1).unwrap().is_zero());
        let b = abcd();
        let lam = [2.0, -1.0, 0.5];
        for axis in 0..3 {
            let big = scale_axis(&b, &lam, axis).unwrap();
            for (k, l) in lam.iter().enumerate() {
                assert_eq!(fix_index(&big, axis, k).unwrap(), b.scaled(*l));
            }
        }
    }

    #[test]
    fn outer_scalar_examples() {
        assert_eq!(outer_scalars(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap().data(), &[1.0, 0.0, 0.0, 0.0]);
        let o = outer_scalars(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(o.bounds(), &[1, 1, 1]);
        assert_eq!(o.data(), &[1.0]);
        assert_eq!(outer_scalars(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap().data(), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn truncate_and_pad() {
        let x = NSeq::scalars(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(x.truncated(&[1, 2]).unwrap().data(), &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let p = x.padded(&[3, 3]).unwrap();
        assert_eq!(p.entry(&[1, 2]).unwrap(), &[6.0]);
        assert_eq!(p.entry(&[2, 0]).unwrap(), &[0.0]);
    }

    #[test]
    fn element_cap_is_enforced() {
        let shape = Shape::new(vec![100, 100]).unwrap();
        assert!(NSeq::zeros_with_cap(shape.clone(), &FiniteSpace::l2(3), 10_000).is_err());
        assert!(NSeq::zeros_with_cap(shape, &FiniteSpace::l2(1), 10_000).is_ok());
    }

    #[test]
    fn json_layout() {
        let x = NSeq::scalars(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let v = x.to_json();
        assert_eq!(v["order"], 2);
        assert_eq!(v["entries"], serde_json::json!([[[1.0], [0.0]], [[0.0], [1.0]]]));
        let parsed: NSeq = serde_json::from_str(
            r#"{"order":2,"bounds":[2,2],"space":{"dim":1,"exponent":2.0},"entries":[[1,0],[0,1]]}"#,
        )
        .unwrap();
        assert_eq!(parsed, x);
        let bad = serde_json::from_str::<NSeq>(
            r#"{"order":2,"bounds":[2,2],"space":{"dim":1,"exponent":2.0},"entries":[[1,0],[0]]}"#,
        );
        assert!(bad.unwrap_err().to_string().contains("entries[1]"));
    }
}
