//! Upper bounds for the mixed (s, q) norm through explicit factorizations
//! x = τ·x⁰, checked by reconstructing x.
//!
//!     cargo run --example mixed_factorization

use sumnorm::nseq::NSeq;
use sumnorm::optim::OptBudget;
use sumnorm::seqclass::{class_norm, mixed_norm, weak_norm, ClassSpec, Strategy, Witness};
use sumnorm::spaces::FiniteSpace;

fn main() -> sumnorm::error::Result<()> {
    let budget = OptBudget::default();
    let x = NSeq::from_vectors(
        &FiniteSpace::l2(2),
        &[vec![2.0, 0.0], vec![0.0, 0.5], vec![1.0, 1.0], vec![0.1, -0.2]],
    )?;
    for (s, q) in [(2.0, 2.0), (4.0, 2.0), (2.0, 1.0), (4.0, 1.0)] {
        let m = mixed_norm(&x, s, q, &budget)?;
        let weak = weak_norm(&x, s, Strategy::Auto, &budget)?.value;
        let strong = class_norm(&ClassSpec::lp(q), &x, &budget)?.value;
        println!("(s, q) = ({s}, {q}): {weak:.6} <= {:.6} ({:?}) <= {strong:.6}", m.value, m.mode);
        if let Some(Witness::Factorization(f)) = &m.witness {
            let back = f.reconstruct()?;
            let err = back.data().iter().zip(x.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("    τ = {:?}, reconstruction error {err:.1e}", f.tau.data());
        }
    }
    Ok(())
}
