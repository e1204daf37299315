use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nseq::NSeq;
use crate::optim::{gaussian_vec, OptBudget};
use crate::spaces::{dot, Exponent, FiniteSpace};

/// A linear map `source → target`, stored as a `target.dim × source.dim` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinear")]
pub struct LinearOp {
    source: FiniteSpace,
    target: FiniteSpace,
    matrix: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawLinear {
    source: FiniteSpace,
    target: FiniteSpace,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<RawLinear> for LinearOp {
    type Error = Error;
    fn try_from(raw: RawLinear) -> Result<Self> {
        LinearOp::new(&raw.source, &raw.target, raw.matrix)
    }
}

/// An operator norm together with whether it was computed exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpNorm {
    pub value: f64,
    pub exact: bool,
}

impl LinearOp {
    pub fn new(source: &FiniteSpace, target: &FiniteSpace, matrix: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(target.dim(), matrix.len())?;
        for row in &matrix {
            check_dim(source.dim(), row.len())?;
        }
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { source: source.clone(), target: target.clone(), matrix })
    }

    pub fn from_fn(source: &FiniteSpace, target: &FiniteSpace, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let matrix = (0..target.dim()).map(|i| (0..source.dim()).map(|j| f(i, j)).collect()).collect();
        Self { source: source.clone(), target: target.clone(), matrix }
    }

    pub fn identity(space: &FiniteSpace) -> Self {
        Self::from_fn(space, space, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zero(source: &FiniteSpace, target: &FiniteSpace) -> Self {
        Self::from_fn(source, target, |_, _| 0.0)
    }

    /// The formal identity matrix between two spaces of equal dimension.
    pub fn embedding(source: &FiniteSpace, target: &FiniteSpace) -> Result<Self> {
        check_dim(source.dim(), target.dim())?;
        Ok(Self::from_fn(source, target, |i, j| if i == j { 1.0 } else { 0.0 }))
    }

    pub fn source(&self) -> &FiniteSpace {
        &self.source
    }

    pub fn target(&self) -> &FiniteSpace {
        &self.target
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn scaled(&self, c: f64) -> Self {
        let matrix = self.matrix.iter().map(|r| r.iter().map(|v| c * v).collect()).collect();
        Self { matrix, ..self.clone() }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.source.dim(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|r| dot(r, x)).collect()
    }

    /// `ψ ↦ ψ ∘ u`, the transpose acting on target functionals.
    pub fn transpose_apply(&self, psi: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.target.dim(), psi.len())?;
        Ok(self.transpose_unchecked(psi))
    }

    fn transpose_unchecked(&self, psi: &[f64]) -> Vec<f64> {
        (0..self.source.dim()).map(|j| self.matrix.iter().zip(psi).map(|(r, p)| r[j] * p).sum()).collect()
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &LinearOp) -> Result<LinearOp> {
        if inner.target != self.source {
            return Err(Error::invalid(format!("cannot chain {} into {}", inner.target, self.source)));
        }
        Ok(Self::from_fn(&inner.source, &self.target, |i, j| {
            (0..self.source.dim()).map(|k| self.matrix[i][k] * inner.matrix[k][j]).sum()
        }))
    }

    /// Applies the map to every entry of `x`.
    pub fn apply_nseq(&self, x: &NSeq) -> Result<NSeq> {
        if x.space() != &self.source {
            return Err(Error::invalid(format!("sequence lives in {}, map acts on {}", x.space(), self.source)));
        }
        x.map_entries(&self.target, |v| self.apply_unchecked(v))
    }

    /// `‖u‖ = sup_{‖x‖ <= 1} ‖u x‖` with the default budget.
    pub fn opnorm(&self) -> OpNorm {
        self.opnorm_with(&OptBudget::default())
    }

    /// Exact when the source ball or the target dual ball is a polytope, or
    /// when both spaces are Euclidean; a multi-start lower bound otherwise.
    pub fn opnorm_with(&self, budget: &OptBudget) -> OpNorm {
        if let Some(verts) = self.source.ball_vertices_up_to_sign() {
            let value = verts.iter().map(|v| self.target.norm_unchecked(&self.apply_unchecked(v))).fold(0.0, f64::max);
            return OpNorm { value, exact: true };
        }
        let tdual = self.target.dual();
        if let Some(verts) = tdual.ball_vertices_up_to_sign() {
            let sdual = self.source.dual();
            let value = verts.iter().map(|psi| sdual.norm_unchecked(&self.transpose_unchecked(psi))).fold(0.0, f64::max);
            return OpNorm { value, exact: true };
        }
        let two = Exponent::Finite(2.0);
        if self.source.exponent() == two && self.target.exponent() == two {
            let m = DMatrix::from_fn(self.target.dim(), self.source.dim(), |i, j| self.matrix[i][j]);
            return OpNorm { value: m.singular_values().max(), exact: true };
        }
        OpNorm { value: self.ascent(budget), exact: false }
    }

    /// Alternates `ψ ← norming(u x)`, `x ← argmax_{B} <uᵀψ, ·>`; each step
    /// does not decrease `‖u x‖`.
    fn ascent(&self, budget: &OptBudget) -> f64 {
        let tdual = self.target.dual();
        let mut starts: Vec<Vec<f64>> = self.matrix.iter().map(|r| self.source.support_point(r)).collect();
        let mut rng = budget.rng(&[0x4F50, self.source.dim() as u64, self.target.dim() as u64]);
        for _ in 0..budget.starts {
            starts.push(self.source.support_point(&gaussian_vec(&mut rng, self.source.dim())));
        }
        let mut best = 0.0_f64;
        for mut x in starts {
            let mut f = self.target.norm_unchecked(&self.apply_unchecked(&x));
            for _ in 0..budget.iterations {
                let psi = tdual.support_point(&self.apply_unchecked(&x));
                let nx = self.source.support_point(&self.transpose_unchecked(&psi));
                let nf = self.target.norm_unchecked(&self.apply_unchecked(&nx));
                if nf <= f * (1.0 + budget.tolerance * 1e-3) {
                    f = f.max(nf);
                    break;
                }
                x = nx;
                f = nf;
            }
            best = best.max(f);
        }
        best
    }
}
