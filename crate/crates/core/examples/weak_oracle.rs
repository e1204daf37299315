//! The weak ℓ_p norm: vertex enumeration of the dual ball against multi-start
//! ascent, and the functional that attains the value.
//!
//!     cargo run --example weak_oracle

use sumnorm::nseq::NSeq;
use sumnorm::optim::OptBudget;
use sumnorm::seqclass::{weak_norm, Strategy, Witness};
use sumnorm::spaces::{dual_extreme_points, FiniteSpace};

fn main() -> sumnorm::error::Result<()> {
    let budget = OptBudget::default();
    let l1 = FiniteSpace::l1(3);
    let rows = vec![vec![1.0, -2.0, 0.5], vec![0.0, 1.0, 1.0], vec![-1.5, 0.25, 2.0]];
    let x = NSeq::from_vectors(&l1, &rows)?;

    let verts = dual_extreme_points(&l1).expect("ℓ_1 has a polytope dual ball");
    println!("dual ball of ℓ_1^3 has {} vertices", verts.len());
    for p in [1.0, 2.0, 4.0] {
        let exact = weak_norm(&x, p, Strategy::Exact, &budget)?;
        let opt = weak_norm(&x, p, Strategy::Opt, &budget)?;
        println!("p = {p}: exact {:.10} ({:?}), ascent {:.10} ({:?})", exact.value, exact.mode, opt.value, opt.mode);
        if let Some(Witness::Functional { functional }) = &exact.witness {
            println!("        attained at φ = {:?}", functional.coefficients());
        }
    }

    // On ℓ_2 with p = 2 the weak norm is the largest singular value.
    let x2 = NSeq::from_vectors(&FiniteSpace::l2(2), &[vec![3.0, 0.0], vec![0.0, 4.0]])?;
    let r = weak_norm(&x2, 2.0, Strategy::Auto, &budget)?;
    println!("weak_2 of diag(3, 4) on ℓ_2^2: {:.10} ({:?})", r.value, r.mode);
    Ok(())
}
