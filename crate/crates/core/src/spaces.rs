//! Finite-dimensional model spaces `ℓ_r^d`, their duals, and the geometry of
//! their unit balls.
//!
//! Every supremum-type norm in the crate reduces to maximizing a convex
//! function over the unit ball of some `ℓ_r^d`. For `r ∈ {1, ∞}` (and for
//! `d = 1`) that ball is a polytope and the maximum is attained at one of its
//! finitely many vertices; otherwise the crate falls back to iterative ascent
//! driven by [`FiniteSpace::support_point`].

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Largest vertex count enumerated by the exact paths.
pub const MAX_ENUMERATED_VERTICES: usize = 1 << 16;

/// An exponent in `[1, ∞]`, with `∞` kept as its own variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_infinite() && r > 0.0 {
            Ok(Exponent::Infinity)
        } else if r.is_finite() && r >= 1.0 {
            Ok(Exponent::Finite(r))
        } else {
            Err(Error::invalid(format!("exponent must lie in [1, inf], got {r}")))
        }
    }

    /// The conjugate exponent `r'` with `1/r + 1/r' = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(r) if r == 1.0 => Exponent::Infinity,
            Exponent::Finite(r) => Exponent::Finite(r / (r - 1.0)),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(r) => r,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_one(self) -> bool {
        self == Exponent::Finite(1.0)
    }

    pub fn is_infinite(self) -> bool {
        self == Exponent::Infinity
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(r) => write!(f, "{r}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(r) => serializer.serialize_f64(*r),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(r) => Exponent::new(r).map_err(de::Error::custom),
            Raw::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
                other => other
                    .parse::<f64>()
                    .map_err(|_| de::Error::custom(format!("unrecognized exponent {s:?}")))
                    .and_then(|r| Exponent::new(r).map_err(de::Error::custom)),
            },
        }
    }
}

/// The normed space `ℓ_r^d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct FiniteSpace {
    dim: usize,
    exponent: Exponent,
    #[serde(default)]
    label: String,
}

#[derive(Deserialize)]
struct RawSpace {
    dim: usize,
    exponent: Exponent,
    #[serde(default)]
    label: String,
}

impl TryFrom<RawSpace> for FiniteSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        FiniteSpace::new(raw.dim, raw.exponent, raw.label)
    }
}

impl PartialEq for FiniteSpace {
    /// Labels are cosmetic; two spaces are equal when their geometry is.
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.exponent == other.exponent
    }
}

impl fmt::Display for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.label.is_empty() {
            write!(f, "l_{}^{}", self.exponent, self.dim)
        } else {
            write!(f, "{} = l_{}^{}", self.label, self.exponent, self.dim)
        }
    }
}

impl FiniteSpace {
    pub fn new(dim: usize, exponent: Exponent, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("space dimension must be at least 1"));
        }
        if let Exponent::Finite(r) = exponent {
            Exponent::new(r)?;
        }
        Ok(Self { dim, exponent, label: label.into() })
    }

    /// `ℓ_r^d` with a finite exponent. Panics on `dim == 0` or `r < 1`.
    pub fn lr(dim: usize, r: f64) -> Self {
        Self::new(dim, Exponent::new(r).expect("valid exponent"), "").expect("valid space")
    }

    pub fn l1(dim: usize) -> Self {
        Self::lr(dim, 1.0)
    }

    pub fn l2(dim: usize) -> Self {
        Self::lr(dim, 2.0)
    }

    pub fn linf(dim: usize) -> Self {
        Self::new(dim, Exponent::Infinity, "").expect("valid space")
    }

    /// The scalar field as a one-dimensional space.
    pub fn scalar() -> Self {
        Self::new(1, Exponent::Finite(2.0), "K").expect("valid space")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_scalar(&self) -> bool {
        self.dim == 1
    }

    /// `ℓ_{r'}^d`, the dual space under the standard pairing.
    pub fn dual(&self) -> FiniteSpace {
        let label = if self.label.is_empty() { String::new() } else { format!("{}'", self.label) };
        FiniteSpace { dim: self.dim, exponent: self.exponent.conjugate(), label }
    }

    /// Whether the unit ball of this space is a polytope.
    pub fn ball_is_polytope(&self) -> bool {
        self.dim == 1 || matches!(self.exponent, Exponent::Infinity) || self.exponent.is_one()
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        Ok(self.norm_unchecked(v))
    }

    pub(crate) fn norm_unchecked(&self, v: &[f64]) -> f64 {
        lr_norm(self.exponent, v)
    }

    /// Norm of `f` regarded as an element of the dual space.
    pub fn dual_norm(&self, f: &[f64]) -> Result<f64> {
        check_dim(self.dim, f.len())?;
        Ok(lr_norm(self.exponent.conjugate(), f))
    }

    /// A point `b` of the unit ball maximizing `<g, b>`; the maximum equals the
    /// dual norm of `g`. Returns the zero vector for `g = 0`.
    pub(crate) fn support_point(&self, g: &[f64]) -> Vec<f64> {
        let d = g.len();
        if g.iter().all(|&x| x == 0.0) {
            return vec![0.0; d];
        }
        if d == 1 {
            return vec![g[0].signum()];
        }
        match self.exponent {
            Exponent::Infinity => g.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect(),
            Exponent::Finite(r) if r == 1.0 => {
                let mut best = 0;
                for i in 1..d {
                    if g[i].abs() > g[best].abs() {
                        best = i;
                    }
                }
                let mut b = vec![0.0; d];
                b[best] = g[best].signum();
                b
            }
            Exponent::Finite(r) => {
                let rc = r / (r - 1.0);
                let gn = lr_norm(Exponent::Finite(rc), g);
                g.iter()
                    .map(|&x| x.signum() * (x.abs() / gn).powf(rc - 1.0))
                    .collect()
            }
        }
    }

    /// All vertices of the unit ball, or `None` when the ball is not a polytope
    /// or has more than [`MAX_ENUMERATED_VERTICES`] vertices.
    pub fn ball_vertices(&self) -> Option<Vec<Vec<f64>>> {
        let half = self.ball_vertices_up_to_sign()?;
        let mut out = Vec::with_capacity(2 * half.len());
        for v in half {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            out.push(v);
            out.push(neg);
        }
        Some(out)
    }

    /// One representative of each antipodal pair of vertices.
    pub(crate) fn ball_vertices_up_to_sign(&self) -> Option<Vec<Vec<f64>>> {
        let d = self.dim;
        if d == 1 {
            return Some(vec![vec![1.0]]);
        }
        match self.exponent {
            Exponent::Finite(r) if r == 1.0 => Some(
                (0..d)
                    .map(|i| {
                        let mut e = vec![0.0; d];
                        e[i] = 1.0;
                        e
                    })
                    .collect(),
            ),
            Exponent::Infinity => {
                if d > 17 || (1usize << (d - 1)) > MAX_ENUMERATED_VERTICES {
                    return None;
                }
                Some(
                    (0..(1usize << (d - 1)))
                        .map(|mask| {
                            let mut v = vec![1.0; d];
                            for (i, x) in v.iter_mut().enumerate().skip(1) {
                                if mask & (1 << (i - 1)) != 0 {
                                    *x = -1.0;
                                }
                            }
                            v
                        })
                        .collect(),
                )
            }
            Exponent::Finite(_) => None,
        }
    }
}

pub(crate) fn lr_norm(exponent: Exponent, v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    match exponent {
        Exponent::Infinity => m,
        Exponent::Finite(r) if r == 1.0 => v.iter().map(|x| x.abs()).sum(),
        Exponent::Finite(r) if r == 2.0 => m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt(),
        Exponent::Finite(r) => m * v.iter().map(|x| (x.abs() / m).powf(r)).sum::<f64>().powf(1.0 / r),
    }
}

/// A linear functional on a [`FiniteSpace`], stored by its coefficients in the
/// standard pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    coefficients: Vec<f64>,
    host: FiniteSpace,
}

impl Functional {
    pub fn new(host: &FiniteSpace, coefficients: Vec<f64>) -> Result<Self> {
        check_dim(host.dim(), coefficients.len())?;
        Ok(Self { coefficients, host: host.clone() })
    }

    pub fn zero(host: &FiniteSpace) -> Self {
        Self { coefficients: vec![0.0; host.dim()], host: host.clone() }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// The space this functional acts on.
    pub fn host(&self) -> &FiniteSpace {
        &self.host
    }

    pub fn dual_norm(&self) -> f64 {
        lr_norm(self.host.exponent().conjugate(), &self.coefficients)
    }

    pub fn apply(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.coefficients.len(), v.len())?;
        Ok(dot(&self.coefficients, v))
    }

    /// A norm-one functional `φ` with `φ(v) = ‖v‖`.
    pub fn norming(host: &FiniteSpace, v: &[f64]) -> Result<Self> {
        check_dim(host.dim(), v.len())?;
        Ok(Self { coefficients: host.dual().support_point(v), host: host.clone() })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖v‖` in `space`.
pub fn norm(space: &FiniteSpace, v: &[f64]) -> Result<f64> {
    space.norm(v)
}

/// The pairing `f(v) = Σ f_i v_i`.
pub fn pair(f: &Functional, v: &[f64]) -> Result<f64> {
    f.apply(v)
}

/// Raised when a dual unit ball has no finite vertex description.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("the dual unit ball of {space} is not a polytope")]
pub struct NotPolytope {
    pub space: String,
}

/// The extreme points of the dual unit ball `B_{E'}`.
///
/// For `ℓ_∞^d` these are the `2d` signed basis vectors, for `ℓ_1^d` the `2^d`
/// sign vectors; Euclidean-type balls are rejected.
pub fn dual_extreme_points(space: &FiniteSpace) -> std::result::Result<Vec<Functional>, NotPolytope> {
    space
        .dual()
        .ball_vertices()
        .map(|vs| vs.into_iter().map(|c| Functional { coefficients: c, host: space.clone() }).collect())
        .ok_or_else(|| NotPolytope { space: space.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        assert_eq!(FiniteSpace::l2(2).norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(FiniteSpace::l1(2).norm(&[1.0, -1.0]).unwrap(), 2.0);
        assert_eq!(FiniteSpace::linf(3).norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            FiniteSpace::l2(2).norm(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn pair_examples() {
        let e = FiniteSpace::l2(2);
        let f = Functional::new(&e, vec![1.0, 0.0]).unwrap();
        assert_eq!(pair(&f, &[3.0, 4.0]).unwrap(), 3.0);
        let z = Functional::zero(&e);
        assert_eq!(pair(&z, &[7.0, -2.0]).unwrap(), 0.0);
        let g = Functional::new(&e, vec![1.0, 1.0]).unwrap();
        assert_eq!(pair(&g, &[1.0, -1.0]).unwrap(), 0.0);
        assert!(pair(&g, &[1.0]).is_err());
    }

    #[test]
    fn extreme_points_of_dual_balls() {
        let pts = dual_extreme_points(&FiniteSpace::linf(2)).unwrap();
        let mut c: Vec<Vec<f64>> = pts.iter().map(|f| f.coefficients().to_vec()).collect();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(c, vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0], vec![1.0, 0.0]]);

        let pts = dual_extreme_points(&FiniteSpace::l1(2)).unwrap();
        let mut c: Vec<Vec<f64>> = pts.iter().map(|f| f.coefficients().to_vec()).collect();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(c, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);

        assert!(dual_extreme_points(&FiniteSpace::l2(3)).is_err());
        assert_eq!(dual_extreme_points(&FiniteSpace::l1(5)).unwrap().len(), 32);
        assert_eq!(dual_extreme_points(&FiniteSpace::linf(5)).unwrap().len(), 10);
    }

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinity);
        assert_eq!(Exponent::Infinity.conjugate(), Exponent::Finite(1.0));
        assert_eq!(Exponent::Finite(2.0).conjugate(), Exponent::Finite(2.0));
        assert!(Exponent::new(0.5).is_err());
    }

    #[test]
    fn support_point_attains_dual_norm() {
        for space in [FiniteSpace::l1(3), FiniteSpace::l2(3), FiniteSpace::linf(3), FiniteSpace::lr(3, 3.0)] {
            let g = [0.3, -1.2, 0.7];
            let b = space.support_point(&g);
            assert!(space.norm(&b).unwrap() <= 1.0 + 1e-12);
            let dn = space.dual_norm(&g).unwrap();
            assert!((dot(&g, &b) - dn).abs() < 1e-12, "{space}");
        }
    }

    #[test]
    fn json_descriptor() {
        let s: FiniteSpace = serde_json::from_str(r#"{"dim": 3, "exponent": "inf", "label": "E1"}"#).unwrap();
        assert_eq!(s, FiniteSpace::linf(3));
        assert_eq!(s.label(), "E1");
        let t: FiniteSpace = serde_json::from_str(r#"{"dim": 2, "exponent": 2.0, "label": "F"}"#).unwrap();
        assert_eq!(t, FiniteSpace::l2(2));
        assert!(serde_json::from_str::<FiniteSpace>(r#"{"dim": 0, "exponent": 2.0}"#).is_err());
        let back: FiniteSpace = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
