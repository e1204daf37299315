//! Index manipulations on n-sequences and the monotonicity they satisfy:
//! fixing an index, scaling along a new axis, and taking the diagonal.
//!
//!     cargo run --example sequence_ops

use sumnorm::nseq::{diagonal, fix_index, outer_scalars, permute, scale_axis, NSeq, Permutation};
use sumnorm::optim::OptBudget;
use sumnorm::seqclass::{class_norm, ClassSpec};

fn main() -> sumnorm::error::Result<()> {
    let b = OptBudget::default();
    let spec = ClassSpec::weak(2.0);
    let x = NSeq::scalars(vec![2, 3], vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.0])?;
    let n = |y: &NSeq| class_norm(&spec, y, &b).map(|r| r.value);

    println!("‖x‖ = {:.6}", n(&x)?);
    println!("‖x transposed‖ = {:.6}", n(&permute(&x, &Permutation::transposition(2, 0, 1)?)?)?);
    for k in 0..2 {
        println!("row {k}: ‖fix_index‖ = {:.6}", n(&fix_index(&x, 0, k)?)?);
    }
    println!("diagonal {:?}: norm {:.6}", diagonal(&x).data(), n(&diagonal(&x))?);

    let a = NSeq::scalars(vec![3], vec![1.0, 0.5, -1.0])?;
    let lambda = [2.0, -1.0];
    let scaled = scale_axis(&a, &lambda, 0)?;
    let bound = class_norm(&spec, &NSeq::scalars(vec![2], lambda.to_vec())?, &b)?.value * n(&a)?;
    println!("‖scale_axis(a, λ)‖ = {:.6} <= ‖λ‖‖a‖ = {:.6}", n(&scaled)?, bound);

    let outer = outer_scalars(&[vec![1.0, 1.0], vec![1.0, -1.0]])?;
    println!("outer product {:?}", outer.data());
    Ok(())
}
