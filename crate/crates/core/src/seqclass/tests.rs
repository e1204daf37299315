use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::nseq::{unit_nseq, Shape};
use crate::spaces::FiniteSpace;

fn budget() -> OptBudget {
    OptBudget::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn gauss_rows(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows[0].len();
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

/// `max_{σ ∈ {±1}^d} (Σ_j |⟨σ, x_j⟩|^p)^{1/p}`: the weak norm on `ℓ_1^d`.
fn weak_l1_bruteforce(rows: &[Vec<f64>], p: f64) -> f64 {
    let d = rows[0].len();
    (0..1u32 << d)
        .map(|mask| {
            let s: f64 = rows
                .iter()
                .map(|x| {
                    let v: f64 = x.iter().enumerate().map(|(i, &c)| if mask >> i & 1 == 1 { c } else { -c }).sum();
                    v.abs().powf(p)
                })
                .sum();
            s.powf(1.0 / p)
        })
        .fold(0.0, f64::max)
}

#[test]
fn lp_of_scalar_identity_block() {
    let x = NSeq::scalars(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let r = class_norm(&ClassSpec::lp(2.0), &x, &budget()).unwrap();
    assert_eq!(r.mode, Mode::Exact);
    assert!(close(r.value, 2f64.sqrt(), 1e-12));
}

#[test]
fn weak_one_on_scalars_is_absolute_sum() {
    let x = NSeq::scalars(vec![4], vec![1.5, -2.0, 0.0, 0.25]).unwrap();
    let r = class_norm(&ClassSpec::weak(1.0), &x, &budget()).unwrap();
    assert_eq!(r.mode, Mode::Exact);
    assert!(close(r.value, 3.75, 1e-12));
}

#[test]
fn unit_sequences_have_norm_one() {
    let space = FiniteSpace::l2(3);
    let v = [0.6, 0.0, 0.8];
    let e = unit_nseq(Shape::new(vec![2, 3]).unwrap(), &space, &[1, 2], &v).unwrap();
    for spec in [
        ClassSpec::Linf,
        ClassSpec::lp(3.0),
        ClassSpec::weak(2.0),
        ClassSpec::cohen(4.0),
        ClassSpec::mid(1.0),
        ClassSpec::mixed(4.0, 2.0),
    ] {
        let r = class_norm(&spec, &e, &budget()).unwrap();
        assert!(close(r.value, 1.0, 1e-6), "{spec}: {}", r.value);
    }
}

#[test]
fn weak_identity_rows_on_l2() {
    let space = FiniteSpace::l2(2);
    let id = NSeq::from_vectors(&space, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let r = weak_norm(&id, 2.0, Strategy::Opt, &budget()).unwrap();
    assert!(close(r.value, 1.0, 1e-6));
    let rep = NSeq::from_vectors(&space, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let r = weak_norm(&rep, 2.0, Strategy::Auto, &budget()).unwrap();
    assert!(close(r.value, 2f64.sqrt(), 1e-9));
}

#[test]
fn weak_exact_on_linf_enumerates_four_vertices() {
    let space = FiniteSpace::linf(2);
    let x = NSeq::from_vectors(&space, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let r = weak_norm(&x, 1.0, Strategy::Exact, &budget()).unwrap();
    assert_eq!(r.mode, Mode::Exact);
    assert!(close(r.value, 1.0, 1e-12));
}

#[test]
fn weak_exact_refuses_round_balls() {
    let x = NSeq::from_vectors(&FiniteSpace::l2(2), &[vec![1.0, 0.0]]).unwrap();
    assert!(matches!(weak_norm(&x, 2.0, Strategy::Exact, &budget()), Err(Error::Strategy(_))));
}

#[test]
fn weak_opt_and_exact_match_sign_enumeration_on_l1() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..30 {
        let d = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=5);
        let p = [1.0, 2.0, 4.0][case % 3];
        let rows = gauss_rows(&mut rng, m, d);
        let x = NSeq::from_vectors(&FiniteSpace::l1(d), &rows).unwrap();
        let oracle = weak_l1_bruteforce(&rows, p);
        let exact = weak_norm(&x, p, Strategy::Exact, &budget()).unwrap();
        let opt = weak_norm(&x, p, Strategy::Opt, &budget()).unwrap();
        assert!(close(exact.value, oracle, 1e-12), "exact {} vs {oracle}", exact.value);
        assert!(opt.value <= oracle * (1.0 + 1e-12));
        assert!(close(opt.value, oracle, 1e-6), "opt {} vs {oracle}", opt.value);
    }
}

#[test]
fn weak_two_on_l2_is_spectral_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let rows = gauss_rows(&mut rng, 4, 3);
        let x = NSeq::from_vectors(&FiniteSpace::l2(3), &rows).unwrap();
        let spectral = matrix(&rows).singular_values().max();
        let r = weak_norm(&x, 2.0, Strategy::Auto, &budget()).unwrap();
        assert!(close(r.value, spectral, 1e-9), "{} vs {spectral}", r.value);
    }
}

#[test]
fn cohen_two_on_l2_is_nuclear_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..6 {
        let rows = gauss_rows(&mut rng, 3, 3);
        let x = NSeq::from_vectors(&FiniteSpace::l2(3), &rows).unwrap();
        let nuclear: f64 = matrix(&rows).singular_values().iter().sum();
        let r = cohen_norm(&x, 2.0, &budget()).unwrap();
        assert!(close(r.value, nuclear, 1e-6), "{} vs {nuclear}", r.value);
    }
}

#[test]
fn mid_two_on_l2_is_frobenius() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..6 {
        let rows = gauss_rows(&mut rng, 3, 2);
        let x = NSeq::from_vectors(&FiniteSpace::l2(2), &rows).unwrap();
        let frob = matrix(&rows).norm();
        let r = mid_norm(&x, 2.0, DEFAULT_MID_TRUNCATION, &budget()).unwrap();
        assert!(close(r.value, frob, 1e-6), "{} vs {frob}", r.value);
    }
}

#[test]
fn scalar_classes_collapse_to_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for case in 0..20 {
        let bounds = vec![2, 3, 2][..1 + case % 3].to_vec();
        let len: usize = bounds.iter().product();
        let vals: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let x = NSeq::scalars(bounds, vals.clone()).unwrap();
        for p in [1.5, 2.0, 4.0] {
            let oracle = vals.iter().map(|v: &f64| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
            for spec in [ClassSpec::weak(p), ClassSpec::cohen(p), ClassSpec::mid(p)] {
                let r = class_norm(&spec, &x, &budget()).unwrap();
                assert!(close(r.value, oracle, 1e-9), "{spec}: {} vs {oracle}", r.value);
            }
        }
    }
}

#[test]
fn single_entry_classes_give_the_vector_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for space in [FiniteSpace::l1(3), FiniteSpace::l2(3), FiniteSpace::linf(3)] {
        let v: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        let x = NSeq::from_vectors(&space, &[v.clone()]).unwrap();
        let n = space.norm(&v).unwrap();
        for spec in [ClassSpec::cohen(3.0), ClassSpec::mid(2.0), ClassSpec::weak(4.0)] {
            let r = class_norm(&spec, &x, &budget()).unwrap();
            assert!(close(r.value, n, 1e-6), "{spec} on {:?}: {} vs {n}", space.exponent(), r.value);
        }
    }
}

#[test]
fn zero_sequences_have_norm_zero() {
    let x = NSeq::zeros(Shape::new(vec![2, 2]).unwrap(), &FiniteSpace::l2(2)).unwrap();
    for spec in [ClassSpec::cohen(2.0), ClassSpec::mid(3.0), ClassSpec::mixed(4.0, 2.0), ClassSpec::weak(1.0)] {
        assert_eq!(class_norm(&spec, &x, &budget()).unwrap().value, 0.0, "{spec}");
    }
}

#[test]
fn mixed_single_point_matches_tau_grid() {
    // One support point: ‖τ‖_r · weak_s(x/τ) = τ · (1/τ) for every τ > 0.
    let x = unit_nseq(Shape::new(vec![1]).unwrap(), &FiniteSpace::scalar(), &[0], &[1.0]).unwrap();
    let grid = (1..=200).map(|k| k as f64 / 40.0).map(|t| t * (1.0 / t)).fold(f64::INFINITY, f64::min);
    let r = mixed_norm(&x, 4.0, 2.0, &budget()).unwrap();
    assert!(close(r.value, grid, 1e-9), "{} vs {grid}", r.value);
}

#[test]
fn mixed_equal_exponents_is_weak() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rows = gauss_rows(&mut rng, 4, 3);
    let x = NSeq::from_vectors(&FiniteSpace::l1(3), &rows).unwrap();
    let w = weak_norm(&x, 2.0, Strategy::Auto, &budget()).unwrap();
    let m = mixed_norm(&x, 2.0, 2.0, &budget()).unwrap();
    assert_eq!(m.mode, Mode::Exact);
    assert_eq!(m.value, w.value);
}

#[test]
fn mixed_lies_between_weak_and_strong() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for (s, q) in [(4.0, 2.0), (2.0, 1.0), (4.0, 1.0)] {
        let rows = gauss_rows(&mut rng, 3, 2);
        let x = NSeq::from_vectors(&FiniteSpace::l2(2), &rows).unwrap();
        let m = mixed_norm(&x, s, q, &budget()).unwrap();
        let w = weak_norm(&x, s, Strategy::Auto, &budget()).unwrap().value;
        let strong = class_norm(&ClassSpec::lp(q), &x, &budget()).unwrap().value;
        assert_eq!(m.mode, Mode::UpperBound);
        assert!(m.value >= w - 1e-9 && m.value <= strong + 1e-4, "{w} <= {} <= {strong}", m.value);
        let f = match &m.witness {
            Some(Witness::Factorization(f)) => f,
            other => panic!("expected a factorization, got {other:?}"),
        };
        let back = f.reconstruct().unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let x = NSeq::scalars(vec![1], vec![1.0]).unwrap();
    for spec in [ClassSpec::cohen(1.0), ClassSpec::mixed(2.0, 4.0), ClassSpec::lp(0.5)] {
        assert!(matches!(class_norm(&spec, &x, &budget()), Err(Error::InvalidInput(_))), "{spec}");
    }
}

#[test]
fn spec_json_round_trip() {
    for spec in [ClassSpec::Linf, ClassSpec::weak(2.0), ClassSpec::mid(3.0), ClassSpec::mixed(4.0, 2.0)] {
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ClassSpec>(&text).unwrap(), spec);
    }
    let s: ClassSpec = serde_json::from_str(r#"{"kind":"MIXED","s":4,"q":2}"#).unwrap();
    assert_eq!(s, ClassSpec::mixed(4.0, 2.0));
    assert!(serde_json::from_str::<ClassSpec>(r#"{"kind":"WEAK"}"#).is_err());
}
