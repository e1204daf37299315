//! Lower bounds for multiple summing norms by maximizing the ratio of output
//! to input class norms.
//!
//!     cargo run --example summing_estimate

use sumnorm::operators::{finite_type, product_op};
use sumnorm::optim::OptBudget;
use sumnorm::seqclass::ClassSpec;
use sumnorm::spaces::{FiniteSpace, Functional};
use sumnorm::summing::{estimate_lower, ratio, SummingProblem};

fn main() -> sumnorm::error::Result<()> {
    // The product λμ on the scalar field. With output exponent below the input
    // one the ratio keeps growing with the caps: 3 = √(3·3) here.
    for (q, p) in [(1.0, 1.0), (2.0, 2.0), (1.0, 2.0), (2.0, 1.0)] {
        let prob = SummingProblem::new(product_op(2)?, vec![ClassSpec::weak(q); 2], ClassSpec::lp(p)).with_caps(vec![3, 3]);
        let est = estimate_lower(&prob)?;
        let again = ratio(&prob.operator, &est.witnesses, &prob.input_specs, &prob.output_spec, &prob.budget)?;
        println!("I_2, weak {q} -> ℓ_{p}: >= {:.6} (recomputed {:.6}, converged {})", est.value, again, est.converged);
    }

    // A rank-one bilinear map φ(x)ψ(y)·b on ℓ_1^2 × ℓ_∞^2.
    let phi = Functional::new(&FiniteSpace::l1(2), vec![1.0, -1.0])?;
    let psi = Functional::new(&FiniteSpace::linf(2), vec![0.5, 0.5])?;
    let t = finite_type(&[phi, psi], &FiniteSpace::l2(2), &[0.6, 0.8])?;
    let prob = SummingProblem::new(t, vec![ClassSpec::weak(2.0); 2], ClassSpec::lp(2.0))
        .with_caps(vec![2, 2])
        .with_budget(OptBudget { starts: 32, ..OptBudget::default() });
    let est = estimate_lower(&prob)?;
    println!("rank-one map: >= {:.6}, witness lengths {:?}", est.value, est.witnesses.iter().map(|w| w.len()).collect::<Vec<_>>());
    Ok(())
}
