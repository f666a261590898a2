use narrowlab::defect::narrowness_defect;
use narrowlab::dyadic::{split_set, DyadicFunction, DyadicSet};
use narrowlab::gentle::{mean_zero_combination, two_point_residual, type_p_residual};
use narrowlab::haar::{analyze, synthesize};
use narrowlab::operators::LinearOperator;
use narrowlab::report::Report;
use narrowlab::sign::finite_rank_near_sign;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn function(max_depth: u32) -> impl Strategy<Value = DyadicFunction> {
    (0..=max_depth).prop_flat_map(|d| {
        prop::collection::vec(-10.0..10.0f64, 1usize << d)
            .prop_map(move |v| DyadicFunction::new(d, v).unwrap())
    })
}

fn set(depth: u32) -> impl Strategy<Value = DyadicSet> {
    prop::collection::vec(any::<bool>(), 1usize << depth).prop_map(move |m| DyadicSet::new(depth, m).unwrap())
}

fn sign(depth: u32) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::sample::select(vec![-1.0, 0.0, 1.0]), 1usize << depth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn haar_round_trip(f in function(9)) {
        let back = synthesize(&analyze(&f));
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn haar_parseval(f in function(9)) {
        let energy = analyze(&f).parseval_energy();
        let direct = f.lp_norm_pow(2.0).unwrap();
        prop_assert!((energy - direct).abs() <= 1e-10 * (1.0 + direct));
    }

    #[test]
    fn refine_keeps_norms(f in function(6), extra in 0u32..4, p in 1.0..4.0f64) {
        let g = f.refine(f.depth() + extra).unwrap();
        prop_assert!((g.lp_norm(p).unwrap() - f.lp_norm(p).unwrap()).abs() <= 1e-12 * (1.0 + f.lp_norm(p).unwrap()));
        prop_assert!((g.mean() - f.mean()).abs() <= 1e-12 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn set_algebra(a in set(6), b in set(6)) {
        let (u, i) = (a.union(&b), a.intersection(&b));
        prop_assert!((u.measure() + i.measure() - a.measure() - b.measure()).abs() < 1e-15);
        prop_assert!(a.difference(&b).is_disjoint(&b));
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert_eq!(DyadicSet::from_hex(6, &a.to_hex()).unwrap(), a.clone());
        let fine = a.refine(9).unwrap();
        prop_assert_eq!(fine.coarsen(6).unwrap(), a.clone());
        prop_assert!(fine.natural_depth() <= 6);
    }

    #[test]
    fn split_gives_equal_disjoint_pieces(a in set(5), log_n in 0u32..4, seed in any::<u64>()) {
        prop_assume!(!a.is_empty());
        let n = 1usize << log_n;
        let pieces = split_set(&a, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(pieces.len(), n);
        let mut union = DyadicSet::empty(pieces[0].depth());
        for piece in &pieces {
            prop_assert!((piece.measure() - a.measure() / n as f64).abs() < 1e-15);
            prop_assert!(piece.is_disjoint(&union));
            union = union.union(piece);
        }
        prop_assert_eq!(union, a.refine(pieces[0].depth()).unwrap());
    }

    #[test]
    fn two_point_inequality(p in 1.0001..=2.0f64, a in 1e-3..1e3f64, t in -1.0..=1.0f64) {
        prop_assert!(two_point_residual(p, a, a * t).unwrap() >= -1e-12 * a.powf(p).max(1.0));
    }

    #[test]
    fn type_p_on_signs(p in 1.0..=2.0f64, u in sign(6), v in sign(6)) {
        let u = DyadicFunction::new(6, u).unwrap();
        let v = DyadicFunction::new(6, v).unwrap();
        prop_assert!(type_p_residual(p, &u, &v).unwrap() >= -1e-12);
    }

    #[test]
    fn combination_is_mean_zero(values in prop::collection::vec(-1.0..1.0f64, 64), cut in 1usize..63) {
        let left = DyadicFunction::from_fn(6, |i| if i < cut { values[i] } else { 0.0 });
        let right = DyadicFunction::from_fn(6, |i| if i >= cut { values[i] } else { 0.0 });
        if let Ok(c) = mean_zero_combination(&[left, right], 10) {
            prop_assert!(c.x.mean().abs() <= 1e-12);
            let x = c.x.refine(10).unwrap();
            let orig = DyadicFunction::new(6, values.clone()).unwrap().refine(10).unwrap();
            for (a, b) in x.values().iter().zip(orig.values()) {
                prop_assert!((a.abs() - b.abs()).abs() <= 1e-15);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn near_sign_guarantees(w in prop::collection::vec(-1.0..1.0f64, 128), u in prop::collection::vec(-1.0..1.0f64, 2)) {
        let w = DyadicFunction::new(7, w).unwrap();
        let f = LinearOperator::finite_rank(2.0, 2.0, 7, &[w], &[u]).unwrap();
        let out = finite_rank_near_sign(&f, &DyadicSet::full(7), 7).unwrap();
        let x = out.witness.sign();
        prop_assert!(x.is_sign());
        prop_assert!(x.mean().abs() <= out.mean_bound + 1e-15);
        prop_assert!(f.image_norm(x).unwrap() <= out.norm_bound * (1.0 + 1e-12));
    }

    #[test]
    fn defect_returns_mean_zero_sign_on_set(a in set(4), seed in any::<u64>()) {
        prop_assume!(!a.is_empty());
        let t = LinearOperator::s_pr(1.5, 2.0, 6).unwrap();
        let out = narrowness_defect(&t, &a, 4, seed).unwrap();
        let working = a.refine(6).unwrap();
        prop_assert_eq!(out.best.support(), &working);
        prop_assert_eq!(out.best.mean(), 0.0);
        let x = out.best.sign();
        prop_assert!((out.ratio - t.image_norm(x).unwrap() / x.lp_norm(1.5).unwrap()).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn report_floats_round_trip(v in prop::collection::vec(-1e300..1e300f64, 1..8), tiny in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let mut r = Report::new("floats", 0);
        r.measure("v", &v).unwrap();
        r.check_le("tiny", tiny, 0.0);
        prop_assert_eq!(Report::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}

#[test]
fn report_survives_json() {
    let mut r = Report::new("demo", 3);
    r.param("p", 1.5).unwrap().measure("x", [0.25, 0.5]).unwrap();
    r.check_le("fine", 1.0, 2.0).check_ge("bad", 1.0, 2.0);
    let back = Report::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
    assert!(!back.all_passed());
    assert!(Report::from_json(&r.to_json().unwrap().replace("narrowlab-report/1", "other/9")).is_err());
}
