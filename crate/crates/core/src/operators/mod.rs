//! Linear and multilinear maps between model spaces, and homogeneous
//! polynomials through their symmetric multilinear operators.

mod linear;
mod multi;
mod poly;

pub use linear::{LinearOp, OpNorm};
pub use multi::{compose, finite_type, product_op, MultiOp};
pub use poly::{poly_restrict, poly_scalar_extend, symmetrize, Polynomial};

pub(crate) use poly::{permutations, poly_scalar_extend_with, symmetrize_with};
