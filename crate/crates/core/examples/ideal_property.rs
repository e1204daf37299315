//! The composition inequality ‖t∘T∘(u_1, u_2)‖ <= ‖t‖‖T‖‖u_1‖‖u_2‖ checked
//! at the level of individual witness sequences.
//!
//!     cargo run --example ideal_property

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sumnorm::nseq::NSeq;
use sumnorm::operators::{LinearOp, MultiOp};
use sumnorm::optim::OptBudget;
use sumnorm::seqclass::ClassSpec;
use sumnorm::spaces::FiniteSpace;
use sumnorm::summing::ideal_witness_check;

fn main() -> sumnorm::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut g = move || -> f64 { rng.sample(StandardNormal) };
    let (e1, e2, f) = (FiniteSpace::l1(2), FiniteSpace::linf(2), FiniteSpace::l2(2));
    let (g1, g2, h) = (FiniteSpace::l2(3), FiniteSpace::l1(2), FiniteSpace::linf(3));
    let budget = OptBudget::default();

    for trial in 0..5 {
        let coeffs: Vec<f64> = (0..8).map(|_| g()).collect();
        let t_op = MultiOp::new(vec![e1.clone(), e2.clone()], &f, coeffs)?;
        let t = LinearOp::from_fn(&f, &h, |_, _| g());
        let u1 = LinearOp::from_fn(&g1, &e1, |_, _| g());
        let u2 = LinearOp::from_fn(&g2, &e2, |_, _| g());
        let x1 = NSeq::from_vectors(&g1, &[(0..3).map(|_| g()).collect(), (0..3).map(|_| g()).collect()])?;
        let x2 = NSeq::from_vectors(&g2, &[(0..2).map(|_| g()).collect()])?;
        let check = ideal_witness_check(
            &t,
            &t_op,
            &[u1, u2],
            &[x1, x2],
            &[ClassSpec::weak(2.0), ClassSpec::weak(2.0)],
            &ClassSpec::lp(2.0),
            &budget,
        )?;
        println!("trial {trial}: lhs {:.6} <= rhs {:.6} (margin {:.3e}, pass {})", check.lhs, check.rhs, check.margin, check.passes(1e-9));
    }
    Ok(())
}
