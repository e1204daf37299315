//! Runs the property suite, then again with a deliberately broken engine to
//! show a detected failure and its replay.
//!
//!     cargo run --release --example verify_suite [samples]

use sumnorm::mutation::Mutation;
use sumnorm::verify::{replay, run_suite, CheckConfig};

fn main() -> sumnorm::error::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let cfg = CheckConfig::default().with_seed(7).with_samples(samples);
    let report = run_suite(&cfg)?;
    print!("{}", report.to_table());
    println!("runtime {:.1}s\n", report.runtime.as_secs_f64());

    let broken = cfg.with_mutation(Some(Mutation::WeakWrongExponent));
    let report = run_suite(&broken)?;
    print!("{}", report.to_table());
    if let Some(cx) = report.properties.iter().find_map(|r| r.counterexample.as_ref()) {
        let again = replay(&broken, cx)?;
        println!("\n{} failed in group {} sample {}: margin {:.4e}, replay {:.4e}", cx.property, cx.group, cx.sample, cx.margin, again.margin);
    }
    Ok(())
}
