use num_complex::Complex64 as C64;
use proptest::prelude::*;

use schlesinger_core::orbit::{from_chart, preferred_chart, to_chart, transition, ChartCoords, ChartId};
use schlesinger_core::sampling;
use schlesinger_core::sl2::{bracket, conjugate, killing, Sl2Element};
use schlesinger_core::{chart_select, invariants, lift, reduce};

fn complex() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn element() -> impl Strategy<Value = Sl2Element> {
    (complex(), complex(), complex()).prop_map(|(a, b, c)| Sl2Element::new(a, b, c))
}

fn chart() -> impl Strategy<Value = ChartId> {
    prop_oneof![Just(ChartId::Primary), Just(ChartId::Secondary)]
}

proptest! {
    #[test]
    fn bracket_is_ad_invariant(a in element(), b in element(), c in element()) {
        // <[a, b], c> = <a, [b, c]>
        let lhs = killing(bracket(a, b), c);
        let rhs = killing(a, bracket(b, c));
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn killing_is_conjugation_invariant(a in element(), b in element(), seed in any::<u64>()) {
        let g = sampling::random_group(&mut sampling::rng(seed));
        let (ga, gb) = (conjugate(&g, a), conjugate(&g, b));
        let scale = 1.0 + a.norm() * b.norm() * 100.0;
        prop_assert!((killing(ga, gb) - killing(a, b)).norm() <= 1e-10 * scale);
    }

    #[test]
    fn chart_roundtrip(ch in chart(), p in complex(), q in complex(), root in complex()) {
        let c = ChartCoords { chart: ch, p, q };
        let pt = from_chart(c, root);
        prop_assert!(pt.quadric_residual() <= 1e-12);
        let back = to_chart(&pt, ch).unwrap();
        let scale = 1.0 + p.norm().max(q.norm());
        prop_assert!((back.p - p).norm() <= 1e-10 * scale);
        prop_assert!((back.q - q).norm() <= 1e-10 * scale);
        prop_assume!(p.norm() > 1e-3);
        let other = from_chart(transition(c, root).unwrap(), root);
        prop_assert!((other.affine() - pt.affine()).norm() <= 1e-9 * (1.0 + pt.affine().norm()));
        let pref = preferred_chart(&pt).unwrap();
        prop_assert!(pref.p.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn reduction_roundtrips(seed in any::<u64>(), n in 3usize..=6) {
        let mut rng = sampling::rng(seed);
        let cfg = sampling::random_configuration(&mut rng, n);
        let (spec, score) = chart_select(&cfg).unwrap();
        prop_assert!(score > 0.0);
        let r = reduce(&cfg, &spec).unwrap();
        let back = lift(&r).unwrap();
        prop_assert!(invariants(&back).relative_distance(&invariants(&cfg)) <= 1e-8);
        prop_assert!(reduce(&back, &spec).unwrap().distance(&r) <= 1e-9);
    }
}
