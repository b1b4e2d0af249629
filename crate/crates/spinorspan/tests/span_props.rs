mod common;

use proptest::prelude::*;
use spinorspan::multiplets::GammaSpec;
use spinorspan::span::{verify_span, SpanConfig};

fn config(w: i32) -> SpanConfig {
    SpanConfig {
        weight_max: w,
        coherence_weight: 3,
        ..SpanConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    /// Both legs of the untwisted span verify for any Γ.
    #[test]
    fn untwisted_span_for_any_gamma(g in common::gamma(3, 2)) {
        let rep = verify_span("random", &g, None, config(3)).unwrap();
        prop_assert!(rep.passed, "{}", serde_json::to_string(&rep).unwrap());
    }

    /// Every Maurer–Cartan twist of T3 gives a verified twisted span.
    #[test]
    fn twisted_t3_span(q in common::t3_twist()) {
        let rep = verify_span("T3", &GammaSpec::t3(), Some(&q), config(4)).unwrap();
        prop_assert!(rep.passed, "{}", serde_json::to_string(&rep).unwrap());
    }
}

/// A zero twist runs the same pipeline and yields the same report.
#[test]
fn zero_twist_matches_untwisted() {
    for g in [GammaSpec::t1(), GammaSpec::t2()] {
        let zero = vec![spinorspan::Scalar::ZERO; g.n_odd];
        let a = verify_span("x", &g, None, config(4)).unwrap();
        let b = verify_span("x", &g, Some(&zero), config(4)).unwrap();
        assert_eq!(a, b);
    }
}
