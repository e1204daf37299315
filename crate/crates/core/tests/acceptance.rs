//! Acceptance criteria 1 to 11, each reported as one PASS/FAIL line.
//!
//! `ACCEPTANCE_ONLY=2,5` restricts the run to the listed criteria.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sumnorm::mutation::Mutation;
use sumnorm::nseq::{outer_scalars, NSeq, Shape};
use sumnorm::operators::{product_op, LinearOp, MultiOp};
use sumnorm::optim::OptBudget;
use sumnorm::seqclass::{class_norm, mixed_norm, weak_norm, ClassSpec, Mode, Strategy};
use sumnorm::spaces::FiniteSpace;
use sumnorm::summing::{estimate_lower, SummingProblem};
use sumnorm::verify::{check, replay, run_properties, run_suite, CheckConfig, CheckReport, PropertyId};

type Outcome = Result<String, String>;

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xACCE_0000 + tag)
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// `(Σ|v|^p)^{1/p}`, written out independently of the library.
fn lp(values: &[f64], p: f64) -> f64 {
    values.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn expect_pass(report: &CheckReport, floor: Option<f64>) -> Outcome {
    let mut bad = Vec::new();
    let mut detail = Vec::new();
    for r in &report.properties {
        detail.push(format!("{} n={} worst={:.1e}", r.property, r.samples, r.worst_margin));
        if !r.passed || floor.is_some_and(|f| r.worst_margin < f) {
            bad.push(format!("{}: {} failures, worst margin {:.3e} ({})", r.property, r.failures, r.worst_margin, r.worst_group));
        }
    }
    if bad.is_empty() {
        Ok(detail.join("; "))
    } else {
        Err(bad.join("; "))
    }
}

fn axiom_suite() -> Outcome {
    let cfg = CheckConfig::default().with_seed(1).with_samples(200);
    let ids = [PropertyId::UnitNorm, PropertyId::LinfEmbed, PropertyId::Symmetry, PropertyId::FinDet];
    expect_pass(&run_properties(&ids, &cfg).map_err(|e| e.to_string())?, None)
}

/// Brute force over the `2^d` sign vectors of the `ℓ_∞^d` ball.
fn weak_on_l1_by_signs(rows: &[Vec<f64>], p: f64) -> f64 {
    let d = rows[0].len();
    (0..1u32 << d)
        .map(|mask| {
            let vals: Vec<f64> = rows
                .iter()
                .map(|x| x.iter().enumerate().map(|(i, &c)| if mask >> i & 1 == 1 { c } else { -c }).sum())
                .collect();
            lp(&vals, p)
        })
        .fold(0.0, f64::max)
}

fn weak_oracle() -> Outcome {
    let mut r = rng(2);
    let b = OptBudget::default();
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let d = r.gen_range(1..=8);
        let m = r.gen_range(1..=5);
        let p = [1.0, 2.0, 4.0][case % 3];
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| gauss(&mut r)).collect()).collect();
        let x = NSeq::from_vectors(&FiniteSpace::l1(d), &rows).map_err(|e| e.to_string())?;
        let opt = weak_norm(&x, p, Strategy::Opt, &b).map_err(|e| e.to_string())?.value;
        let exact = weak_norm(&x, p, Strategy::Exact, &b).map_err(|e| e.to_string())?.value;
        let signs = weak_on_l1_by_signs(&rows, p);
        if rel(exact, signs) > 1e-12 {
            return Err(format!("case {case}: EXACT {exact} vs sign enumeration {signs}"));
        }
        worst = worst.max(rel(opt, exact));
    }
    if worst <= 1e-6 {
        Ok(format!("100 cases, max relative error {worst:.1e}"))
    } else {
        Err(format!("max relative error {worst:.3e} > 1e-6"))
    }
}

fn scalar_collapse() -> Outcome {
    let mut r = rng(3);
    let b = OptBudget::default();
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let order = 1 + case % 3;
        let bounds: Vec<usize> = (0..order).map(|_| r.gen_range(1..=3)).collect();
        let len = bounds.iter().product();
        let vals: Vec<f64> = (0..len).map(|_| gauss(&mut r)).collect();
        let x = NSeq::scalars(bounds, vals.clone()).map_err(|e| e.to_string())?;
        let p = [1.5, 2.0, 4.0][case % 3];
        let oracle = lp(&vals, p);
        for spec in [ClassSpec::weak(p), ClassSpec::cohen(p), ClassSpec::mid(p)] {
            let v = class_norm(&spec, &x, &b).map_err(|e| e.to_string())?.value;
            worst = worst.max(rel(v, oracle));
            if rel(v, oracle) > 1e-6 {
                return Err(format!("case {case} {spec}: {v} vs {oracle}"));
            }
        }
    }
    Ok(format!("300 evaluations, max relative error {worst:.1e}"))
}

fn mixed_degeneration() -> Outcome {
    let mut r = rng(4);
    let b = OptBudget::default();
    let spaces = [FiniteSpace::scalar(), FiniteSpace::l1(3), FiniteSpace::linf(3), FiniteSpace::l2(3)];
    let mut gap_low = f64::INFINITY;
    let mut gap_high = f64::INFINITY;
    for case in 0..100 {
        let space = &spaces[case % 4];
        let order = 1 + case % 2;
        let bounds: Vec<usize> = (0..order).map(|_| r.gen_range(1..=3)).collect();
        let len = bounds.iter().product::<usize>() * space.dim();
        let data: Vec<f64> = (0..len).map(|_| gauss(&mut r)).collect();
        let x = NSeq::from_flat(Shape::new(bounds).unwrap(), space, data).map_err(|e| e.to_string())?;
        let q = [1.0, 2.0][case % 2];
        let equal = mixed_norm(&x, q, q, &b).map_err(|e| e.to_string())?;
        let weak_q = weak_norm(&x, q, Strategy::Auto, &b).map_err(|e| e.to_string())?;
        if equal.value != weak_q.value || equal.mode != weak_q.mode {
            return Err(format!("case {case}: s=q={q} gives {} ({:?}) vs weak {}", equal.value, equal.mode, weak_q.value));
        }
        let s: f64 = [2.0f64, 4.0][case / 2 % 2].max(2.0 * q);
        let m = mixed_norm(&x, s, q, &b).map_err(|e| e.to_string())?;
        let w = weak_norm(&x, s, Strategy::Auto, &b).map_err(|e| e.to_string())?.value;
        let strong = class_norm(&ClassSpec::lp(q), &x, &b).map_err(|e| e.to_string())?.value;
        gap_low = gap_low.min(m.value - (w - 1e-9));
        gap_high = gap_high.min(strong + 1e-4 - m.value);
        if m.mode == Mode::LowerBound || m.value < w - 1e-9 || m.value > strong + 1e-4 {
            return Err(format!("case {case} (s={s}, q={q}): {w} <= {} <= {strong} fails", m.value));
        }
    }
    Ok(format!("100 samples, slack to weak {gap_low:.1e}, slack to strong {gap_high:.1e}"))
}

fn identity_product() -> Outcome {
    let mut lines = Vec::new();
    for (q, p) in [(1.0, 1.0), (2.0, 2.0), (1.0, 2.0)] {
        let prob = SummingProblem::new(product_op(2).unwrap(), vec![ClassSpec::weak(q); 2], ClassSpec::lp(p))
            .with_caps(vec![3, 3]);
        let est = estimate_lower(&prob).map_err(|e| e.to_string())?;
        if !(est.value >= 1.0 - 1e-3 && est.value <= 1.0 + 1e-9) {
            return Err(format!("(q,p)=({q},{p}): estimate {}", est.value));
        }
        lines.push(format!("({q},{p})->{:.9}", est.value));
    }
    let mut r = rng(5);
    let b = OptBudget::default();
    let mut worst = f64::INFINITY;
    for k in 0..500 {
        let (q, p) = [(1.0, 1.0), (2.0, 2.0), (1.0, 2.0), (2.0, 4.0)][k % 4];
        let n = 2 + k % 2;
        let factors: Vec<Vec<f64>> =
            (0..n).map(|_| (0..r.gen_range(1..=3)).map(|_| gauss(&mut r)).collect()).collect();
        let outer = outer_scalars(&factors).map_err(|e| e.to_string())?;
        let lhs = class_norm(&ClassSpec::lp(p), &outer, &b).map_err(|e| e.to_string())?.value;
        let rhs: f64 = factors.iter().map(|f| lp(f, q)).product();
        worst = worst.min(rhs + 1e-9 - lhs);
        if lhs > rhs + 1e-9 {
            return Err(format!("mult-1 sample {k}: {lhs} > {rhs}"));
        }
    }
    lines.push(format!("mult-1 500 samples, min slack {worst:.1e}"));
    Ok(lines.join(", "))
}

fn as_multi(u: &LinearOp) -> MultiOp {
    let (s, t) = (u.source(), u.target());
    let mut c = Vec::with_capacity(s.dim() * t.dim());
    for i in 0..s.dim() {
        for row in u.matrix() {
            c.push(row[i]);
        }
    }
    MultiOp::new(vec![s.clone()], t, c).unwrap()
}

fn linear_stability() -> Outcome {
    let cfg = CheckConfig::default().with_seed(6).with_samples(100);
    let report = check(PropertyId::LinearStability, &cfg).map_err(|e| e.to_string())?;
    let per_witness = expect_pass(&report, None)?;

    let mut r = rng(6);
    let kinds: [fn(usize) -> FiniteSpace; 3] = [FiniteSpace::l1, FiniteSpace::l2, FiniteSpace::linf];
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let src = kinds[r.gen_range(0..3)](r.gen_range(1..=4));
        let tgt = kinds[r.gen_range(0..3)](r.gen_range(1..=4));
        let u = LinearOp::from_fn(&src, &tgt, |_, _| gauss(&mut r));
        let op = u.opnorm();
        let p = [1.0, 2.0, 4.0][k % 3];
        let budget = OptBudget { starts: 64, iterations: 200, seed: k as u64, tolerance: 1e-8 };
        let prob = SummingProblem::new(as_multi(&u), vec![ClassSpec::weak(p)], ClassSpec::weak(p))
            .with_caps(vec![2])
            .with_budget(budget);
        let est = estimate_lower(&prob).map_err(|e| e.to_string())?;
        if est.value > op.value * (1.0 + 1e-9) + 1e-12 && op.exact {
            return Err(format!("map {k}: ratio {} exceeds opnorm {}", est.value, op.value));
        }
        let frac = if op.value > 0.0 { est.value / op.value } else { 1.0 };
        worst = worst.min(frac);
        if frac < 0.99 {
            return Err(format!("map {k} ({src} -> {tgt}, p={p}): sup ratio {} < 0.99 * {}", est.value, op.value));
        }
    }
    Ok(format!("{per_witness}; WEAK sup ratio / opnorm >= {worst:.4} over 100 maps"))
}

fn ideal_inequality() -> Outcome {
    let cfg = CheckConfig::default().with_seed(7).with_samples(200);
    expect_pass(&check(PropertyId::IdealIneq, &cfg).map_err(|e| e.to_string())?, Some(-1e-9))
}

fn coherence() -> Outcome {
    let base = CheckConfig::default().with_seed(8);
    let mut parts = Vec::new();
    for (ids, samples) in [
        (&[PropertyId::Ch1, PropertyId::Ch3][..], 200),
        (&[PropertyId::LemmaPa][..], 100),
        (&[PropertyId::Ch2, PropertyId::Ch4][..], 100),
    ] {
        let report = run_properties(ids, &base.clone().with_samples(samples)).map_err(|e| e.to_string())?;
        parts.push(expect_pass(&report, None)?);
    }
    Ok(parts.join("; "))
}

fn regularity() -> Outcome {
    let cfg = CheckConfig::default().with_seed(9).with_samples(200);
    let ids = [PropertyId::DownRegular, PropertyId::MultipleRegular];
    expect_pass(&run_properties(&ids, &cfg).map_err(|e| e.to_string())?, Some(-1e-4))
}

fn mutation_sensitivity() -> Outcome {
    let mut lines = Vec::new();
    for m in Mutation::ALL {
        let cfg = CheckConfig::default().with_seed(10).with_samples(8).with_mutation(Some(m));
        let report = run_suite(&cfg).map_err(|e| e.to_string())?;
        let failing: Vec<_> = report.properties.iter().filter(|r| !r.passed).collect();
        let Some(first) = failing.first() else {
            return Err(format!("{m:?} not detected"));
        };
        let cx = first.counterexample.as_ref().ok_or_else(|| format!("{m:?}: failure without counterexample"))?;
        let again = replay(&cfg, cx).map_err(|e| e.to_string())?;
        if again.passed || again.margin != cx.margin {
            return Err(format!("{m:?}: replay gave margin {} vs {}", again.margin, cx.margin));
        }
        let names: Vec<String> = failing.iter().map(|r| r.property.to_string()).collect();
        lines.push(format!("{m:?} -> {}", names.join(",")));
    }
    Ok(lines.join("; "))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("sumnorm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let json = dir.join(format!("report-{tag}.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_sumnorm"))
            .args(["verify", "--suite", "all", "--seed", "7", "--output"])
            .arg(&json)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
        Ok((out.stdout, std::fs::read(&json).map_err(|e| e.to_string())?))
    };
    let a = run("a")?;
    let b = run("b")?;
    let _ = std::fs::remove_dir_all(&dir);
    if a != b {
        return Err("reports differ between runs".into());
    }
    Ok(format!("table {} bytes and JSON {} bytes identical", a.0.len(), a.1.len()))
}

#[test]
fn acceptance_criteria() {
    println!();
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "axiom suite", axiom_suite),
        (2, "weak norm oracle equivalence", weak_oracle),
        (3, "scalar collapses", scalar_collapse),
        (4, "mixed degeneration", mixed_degeneration),
        (5, "identity product norm", identity_product),
        (6, "linear stability", linear_stability),
        (7, "ideal inequality", ideal_inequality),
        (8, "coherence", coherence),
        (9, "regularity", regularity),
        (10, "mutation sensitivity", mutation_sensitivity),
        (11, "determinism", determinism),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n:>2} {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                println!("FAIL criterion {n:>2} {name} ({secs:.1}s): {why}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
