//! Property tests for the conservation laws and symmetries the estimators
//! lean on.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;

use infinimix::interval::{rat, IntervalSet};
use infinimix::lattice::{JumpLaw, LatticeMeasure};
use infinimix::maps::PiecewiseMap;
use infinimix::observables::{GlobalObservable, LocalObservable};
use infinimix::transfer::TransferEngine;
use infinimix::volume::{pull_back_set, window_average, Window};

fn rw_params() -> impl Strategy<Value = (i64, i64)> {
    (-4i64..=1, 2i64..=5).prop_map(|(k1, span)| (k1, k1 + span))
}

fn small_rationals() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-9i64..=9, 1i64..=9), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preimage_weights_sum_to_one((k1, k2) in rw_params(), y in -30.0f64..30.0) {
        let map = PiecewiseMap::random_walk(k1, k2).unwrap();
        let sum: f64 = map.preimages(y).unwrap().iter().map(|(_, w)| w).sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn convolution_conserves_mass_and_contracts(
        (k1, k2) in rw_params(),
        masses in small_rationals(),
        offset in -5i64..=5,
        steps in 1usize..12,
    ) {
        let law = JumpLaw::uniform(k1, k2).unwrap();
        let rats: Vec<BigRational> = masses
            .iter()
            .map(|&(n, d)| BigRational::new(n.into(), d.into()))
            .collect();
        let g = LatticeMeasure::from_masses(offset, &rats);
        let mut cur = g.clone();
        let mut prev_tv = g.total_variation();
        for _ in 0..steps {
            cur = cur.convolve(&law);
            prop_assert_eq!(cur.total_mass(), g.total_mass());
            let tv = cur.total_variation();
            prop_assert!(tv <= prev_tv);
            prev_tv = tv;
        }
    }

    #[test]
    fn transfer_preserves_positivity(
        (k1, k2) in rw_params(),
        masses in prop::collection::vec(0i64..=9, 1..6),
        steps in 1usize..10,
    ) {
        let law = JumpLaw::uniform(k1, k2).unwrap();
        let rats: Vec<BigRational> = masses
            .iter()
            .map(|&n| BigRational::new(n.into(), 1.into()))
            .collect();
        let mut cur = LatticeMeasure::from_masses(0, &rats);
        for _ in 0..steps {
            cur = cur.convolve(&law);
            prop_assert!(cur.cells().all(|(_, m)| !m.is_negative()));
        }
    }

    #[test]
    fn boole_pointwise_positivity_and_parity(x in 0.05f64..8.0, n in 1usize..5) {
        let engine = TransferEngine::preimage_sum(std::sync::Arc::new(PiecewiseMap::boole()));
        let g = LocalObservable::indicator(-3.0, 3.0, true).unwrap();
        let plus = engine.eval_pointwise(&g, n, x).unwrap();
        let minus = engine.eval_pointwise(&g, n, -x).unwrap();
        prop_assert!(plus.value >= 0.0);
        prop_assert!((plus.value - minus.value).abs() < 1e-10);
    }

    #[test]
    fn window_average_respects_bound_norm(lo in -50.0f64..49.0, len in 0.5f64..30.0) {
        let f = GlobalObservable::sign();
        let w = Window::new(lo, lo + len).unwrap();
        let avg = window_average(&f, &w).unwrap();
        prop_assert!(avg.abs() <= f.bound_norm() + 1e-9);
    }

    #[test]
    fn pullback_preserves_window_measure_and_symmdiff_range(
        (k1, k2) in rw_params(),
        m in 2i64..40,
        steps in 1usize..4,
    ) {
        let map = PiecewiseMap::random_walk(k1, k2).unwrap();
        let v = IntervalSet::interval(rat(-(m as f64)), rat(m as f64));
        let pulled = pull_back_set(&map, &v, steps).unwrap();
        // measure preservation on sets, exactly
        prop_assert_eq!(pulled.measure(), v.measure());
        // the symmetric-difference ratio always lies in [0, 2]
        let ratio = v.symmetric_difference_measure(&pulled) / v.measure();
        prop_assert!(!ratio.is_negative());
        prop_assert!(ratio <= rat(2.0));
    }

    #[test]
    fn observable_combination_is_pointwise_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        x in -20.0f64..20.0,
    ) {
        let f = GlobalObservable::sign();
        let g = GlobalObservable::cosine(2).unwrap();
        let combo = GlobalObservable::combination(vec![(a, f.clone()), (b, g.clone())]);
        let want = a * f.eval(x) + b * g.eval(x);
        prop_assert!((combo.eval(x) - want).abs() <= 1e-12);
    }

    #[test]
    fn lattice_projection_is_contractive_and_idempotent(
        vals in prop::collection::vec(-2.0f64..2.0, 1..5),
        cell in -10i64..10,
    ) {
        let step = GlobalObservable::lattice_step(
            infinimix::observables::StepFn {
                offset: 0,
                values: vals,
                left_tail: 0.25,
                right_tail: -0.5,
            },
            "prop-step".into(),
        );
        let proj = step.project_to_lattice();
        let (a, _) = step.cell_mean(cell).unwrap();
        let (b, _) = proj.cell_mean(cell).unwrap();
        prop_assert_eq!(a, b); // projection fixes step observables
        prop_assert!(b.abs() <= step.bound_norm() + 1e-12);
    }

    #[test]
    fn lattice_form_total_variation_matches_l1(
        c1 in 0.1f64..2.0,
        c2 in -2.0f64..-0.1,
        a in -3i64..3,
    ) {
        let g = LocalObservable::combination(vec![
            (c1, LocalObservable::indicator(a as f64, (a + 1) as f64, false).unwrap()),
            (c2, LocalObservable::indicator((a + 2) as f64, (a + 3) as f64, false).unwrap()),
        ])
        .unwrap();
        let tv = g.lattice_form().unwrap().total_variation().to_f64().unwrap();
        prop_assert!((tv - g.l1_norm()).abs() < 1e-12);
        prop_assert!((g.integral() - (c1 + c2)).abs() < 1e-12);
    }

    #[test]
    fn quotient_orbit_consistent_with_lift(
        x_bits in 0u32..(1 << 20),
        n in 1usize..15,
    ) {
        let x = x_bits as f64 / (1u64 << 20) as f64;
        let map = PiecewiseMap::random_walk(-1, 2).unwrap();
        let q = map.quotient(1).unwrap();
        let lift = map.iterate(x + 3.0, n).unwrap();
        let circle = q.iterate(x, n).unwrap();
        let diff = (lift - lift.floor() - circle).abs();
        prop_assert!(diff < 1e-9 || (1.0 - diff).abs() < 1e-9);
    }
}
