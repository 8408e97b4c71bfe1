//! Property tests for the structural invariants of maps, words and metrics.

use distort_core::circle::{c0_distance, distance, BumpTranslation, FourierLift, Primitive};
use distort_core::flows::{f_flow, g_flow};
use distort_core::generators::GeneratorSet;
use distort_core::rotation::rotation_number;
use distort_core::smooth::{Plateau, Smoothstep};
use distort_core::word::{GenId, Letter, Word};
use distort_core::{Diffeo, MetricConfig};
use proptest::prelude::*;
use std::sync::OnceLock;

fn gens() -> &'static GeneratorSet {
    static G: OnceLock<GeneratorSet> = OnceLock::new();
    G.get_or_init(|| GeneratorSet::golden().expect("default generators"))
}

/// Cheap building blocks; flows are left to [`flow_map`].
/// Fourier coefficients stay below `1/(2π·2·6)` so the lifts are diffeomorphisms.
fn piece() -> impl Strategy<Value = Diffeo> {
    prop_oneof![
        (-1.0f64..1.0).prop_map(Diffeo::rotation),
        (-3i64..=3).prop_map(|k| gens().f1.pow(k)),
        (-3i64..=3).prop_map(|k| gens().f2.pow(k)),
        (0.05f64..0.25, 0.05f64..0.25, -0.01f64..0.01).prop_map(|(a, w, s)| {
            let (b, c) = (a + w, a + w + 0.1);
            let bump = Plateau::new(a, b, c, c + w, Smoothstep::Standard);
            Diffeo::primitive(Primitive::BumpTranslation(BumpTranslation::new(bump, s).expect("small shift")))
        }),
        (prop::collection::vec(-0.01f64..0.01, 3), prop::collection::vec(-0.01f64..0.01, 3), -0.5f64..0.5)
            .prop_map(|(c, s, k)| Diffeo::primitive(Primitive::Fourier(FourierLift::new(k, c, s)))),
    ]
}

fn composite() -> impl Strategy<Value = Diffeo> {
    prop::collection::vec(piece(), 1..5).prop_map(|v| Diffeo::chain(&v))
}

fn flow_map() -> impl Strategy<Value = Diffeo> {
    (any::<bool>(), -0.3f64..0.3).prop_map(|(f, t)| if f { f_flow(t) } else { g_flow(t) })
}

fn word() -> impl Strategy<Value = Word> {
    let letter = (0usize..5, any::<bool>()).prop_map(|(g, s)| Letter::new(GenId::ALL[g], if s { 1 } else { -1 }));
    prop::collection::vec(letter, 0..24).prop_map(|letters| Word { letters })
}

/// Generators that are cheap to evaluate, standing in for `F4`, `F5`.
fn alphabet() -> [Diffeo; 5] {
    let g = gens();
    [g.f1.clone(), g.f2.clone(), g.f3.clone(), Diffeo::rotation(0.1), g.f2.conjugate_by(&Diffeo::rotation(0.3))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_round_trip(f in composite(), x in 0.0f64..1.0) {
        let y = f.eval_inverse(x).unwrap();
        let back = f.eval(y).unwrap().value();
        let err = (back - x).abs().min(1.0 - (back - x).abs());
        prop_assert!(err < 1e-11, "{err:e}");
    }

    #[test]
    fn flow_round_trip(f in flow_map(), x in 0.0f64..1.0) {
        let y = f.eval_inverse(x).unwrap();
        let back = f.eval(y).unwrap().value();
        let err = (back - x).abs().min(1.0 - (back - x).abs());
        prop_assert!(err < 1e-11, "{err:e}");
    }

    #[test]
    fn lift_is_equivariant(f in composite(), x in 0.0f64..1.0, k in -3i32..=3) {
        let base = f.lift(x).unwrap();
        let shifted = f.lift(x + k as f64).unwrap();
        prop_assert!((shifted - base - k as f64).abs() < 1e-12);
    }

    #[test]
    fn derivative_is_positive(f in composite()) {
        for i in 0..256 {
            let (_, d) = f.lift_jet(i as f64 / 256.0).unwrap();
            prop_assert!(d > 0.0 && d.is_finite());
        }
    }

    #[test]
    fn metric_axioms(f in composite(), g in composite(), h in composite()) {
        let cfg = MetricConfig::with_order(3, 256);
        let fg = distance(&f, &g, &cfg).unwrap();
        let gf = distance(&g, &f, &cfg).unwrap();
        let fh = distance(&f, &h, &cfg).unwrap();
        let hg = distance(&h, &g, &cfg).unwrap();
        prop_assert_eq!(distance(&f, &f, &cfg).unwrap(), 0.0);
        prop_assert!((fg - gf).abs() < 1e-15);
        prop_assert!(fg >= 0.0);
        prop_assert!(fg <= fh + hg + 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity(f in composite()) {
        let id = Diffeo::identity();
        prop_assert!(c0_distance(&f.after(&f.inverse()), &id, 512).unwrap() < 1e-11);
        prop_assert!(c0_distance(&f.inverse().after(&f), &id, 512).unwrap() < 1e-11);
    }

    #[test]
    fn power_zero_is_identity(f in composite()) {
        prop_assert!(f.pow(0).is_identity());
    }

    #[test]
    fn word_length_counts_letters(w in word()) {
        prop_assert_eq!(w.len(), w.letters.len());
        prop_assert_eq!(w.counts().iter().sum::<usize>(), w.len());
        prop_assert!(w.reduced().len() <= w.len());
        prop_assert_eq!(w.reduced().len() % 2, w.len() % 2);
    }

    #[test]
    fn word_inverse_reverses_and_flips(w in word()) {
        let inv = w.inverse();
        prop_assert_eq!(inv.len(), w.len());
        for (a, b) in w.letters.iter().rev().zip(&inv.letters) {
            prop_assert_eq!(a.gen, b.gen);
            prop_assert_eq!(a.sign, -b.sign);
        }
        prop_assert_eq!(inv.inverse(), w.clone());
        prop_assert!(w.clone().then(&inv).reduced().is_empty());
    }

    #[test]
    fn word_compact_form_round_trips(w in word()) {
        let back = Word::parse_compact(&w.to_compact()).unwrap();
        prop_assert_eq!(back, w);
    }

    #[test]
    fn word_map_composes_left_to_right(u in word(), v in word()) {
        let a = alphabet();
        let joined = u.clone().then(&v).to_diffeo(&a);
        let composed = u.to_diffeo(&a).after(&v.to_diffeo(&a));
        prop_assert!(c0_distance(&joined, &composed, 128).unwrap() < 1e-12);
        let cancel = u.clone().then(&u.inverse()).to_diffeo(&a);
        prop_assert!(c0_distance(&cancel, &Diffeo::identity(), 128).unwrap() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rotation_number_of_powers(alpha in 0.0f64..1.0, q in 1i64..=100) {
        let r = rotation_number(&Diffeo::rotation(alpha).pow(q), 1024).unwrap().value;
        let expected = (q as f64 * alpha).rem_euclid(1.0);
        let err = (r - expected).abs().min(1.0 - (r - expected).abs());
        prop_assert!(err < 1e-8, "{err:e}");
    }

    #[test]
    fn rotation_number_is_conjugacy_invariant(alpha in 0.0f64..1.0, u in composite()) {
        let f = Diffeo::rotation(alpha).after(&gens().f2);
        let r0 = rotation_number(&f, 1 << 17).unwrap().value;
        let r1 = rotation_number(&f.conjugate_by(&u), 1 << 17).unwrap().value;
        let err = (r0 - r1).abs().min(1.0 - (r0 - r1).abs());
        prop_assert!(err < 1e-8, "{err:e}");
    }

    #[test]
    fn flows_are_supported_inside(s in -0.3f64..0.3, x in 0.0f64..1.0) {
        prop_assume!(!(0.2..=0.8).contains(&x));
        for f in [f_flow(s), g_flow(s)] {
            let y = f.lift(x).unwrap();
            prop_assert!((y - x).abs() < 1e-12);
        }
    }

    #[test]
    fn flows_are_additive(s in -0.2f64..0.2, t in -0.2f64..0.2, x in 0.0f64..1.0) {
        let split = f_flow(s).after(&f_flow(t)).lift(x).unwrap();
        let whole = f_flow(s + t).lift(x).unwrap();
        prop_assert!((split - whole).abs() < 1e-10);
    }

    #[test]
    fn small_flow_commutators_move_forward(t in 1e-4f64..0.05, x in 0.0f64..1.0) {
        let c = f_flow(t).commutator(&g_flow(t));
        prop_assert!(c.lift(x).unwrap() >= x - 1e-12);
    }
}
