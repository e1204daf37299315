//! Homogeneous polynomials through their symmetric multilinear operators:
//! symmetrization, restriction P_a and the product φ·P.
//!
//!     cargo run --example polynomials

use sumnorm::operators::{poly_restrict, poly_scalar_extend, symmetrize, MultiOp};
use sumnorm::spaces::{FiniteSpace, Functional};

fn main() -> sumnorm::error::Result<()> {
    let e = FiniteSpace::l2(2);
    let k = FiniteSpace::scalar();
    // T((x, y), (u, v)) = x·v, whose symmetrization is (xv + yu) / 2.
    let t = MultiOp::new(vec![e.clone(), e.clone()], &k, vec![0.0, 1.0, 0.0, 0.0])?;
    let p = symmetrize(&t)?;
    println!("P̌ coefficients: {:?}", p.symmetric_op().coefficients());
    println!("P(1, 2) = {:?}", p.evaluate(&[1.0, 2.0])?);

    let a = [1.0, 0.0];
    let pa = poly_restrict(&p, &a)?;
    println!("P_a for a = {a:?}: {:?}", pa.symmetric_op().coefficients());
    for axis in 0..2 {
        println!("  P̌ with a in slot {axis}: {:?}", p.symmetric_op().restrict(&a, axis)?.coefficients());
    }

    let phi = Functional::new(&e, vec![1.0, 1.0])?;
    let q = poly_scalar_extend(&p, &phi)?;
    for x in [[1.0, 2.0], [-0.5, 3.0]] {
        let lhs = q.evaluate(&x)?[0];
        let rhs = phi.apply(&x)? * p.evaluate(&x)?[0];
        println!("(φP)({x:?}) = {lhs:.6}, φ(x)P(x) = {rhs:.6}");
    }
    Ok(())
}
