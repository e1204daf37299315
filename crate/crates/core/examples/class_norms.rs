//! Every class norm of one ℓ_2^2-valued 2-sequence, with its certification mode.
//!
//!     cargo run --example class_norms

use sumnorm::nseq::{NSeq, Shape};
use sumnorm::optim::OptBudget;
use sumnorm::seqclass::{class_norm, ClassSpec};
use sumnorm::spaces::FiniteSpace;

fn main() -> sumnorm::error::Result<()> {
    let space = FiniteSpace::l2(2);
    // x_{j1,j2} for j1, j2 in {1, 2}, each entry a vector in ℓ_2^2.
    let data = vec![1.0, 0.0, 0.5, 0.5, 0.0, -1.0, 2.0, 1.0];
    let x = NSeq::from_flat(Shape::new(vec![2, 2])?, &space, data)?;
    let budget = OptBudget::default();

    println!("{:<18} {:>12}  mode", "class", "value");
    for spec in [
        ClassSpec::Linf,
        ClassSpec::lp(1.0),
        ClassSpec::lp(2.0),
        ClassSpec::weak(1.0),
        ClassSpec::weak(2.0),
        ClassSpec::mid(2.0),
        ClassSpec::cohen(2.0),
        ClassSpec::mixed(4.0, 2.0),
    ] {
        let r = class_norm(&spec, &x, &budget)?;
        println!("{:<18} {:>12.8}  {:?}", spec.to_string(), r.value, r.mode);
    }
    Ok(())
}
