mod common;

use std::rc::Rc;

use proptest::prelude::*;
use spinorspan::homology::{
    verify_retract, BlockRetract, LinearFn, PerturbedRetract, Retract, SmallSide,
};
use spinorspan::linalg::{dense_matrix, dense_rank};
use spinorspan::multiplets::{GammaSpec, Multiplet, Superspace};
use spinorspan::span::{SpanConfig, SpanContext, TensorTrickRetract};
use spinorspan::{Bidegree, Derivation, FreeSCAlgebra, Monomial, Poly, Scalar};

fn as_fn(alg: &FreeSCAlgebra, d: Derivation) -> LinearFn {
    let alg = alg.clone();
    Rc::new(move |m: &Monomial| d.act(&alg, &Poly::monomial(m.clone(), Scalar::ONE)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Block retracts satisfy the strong retract identities, and their
    /// cohomology agrees with rank-nullity on dense matrices.
    #[test]
    fn canonical_multiplet_cohomology(g in common::gamma(3, 2)) {
        let space = Superspace::new(&g, vec![]);
        let c = Multiplet::canonical(&space, 3).complex(false);
        let r = BlockRetract::build(c.clone(), SmallSide::Classes { prefix: vec![] });
        let rep = verify_retract(&r);
        prop_assert!(rep.passed(), "{:?}", rep.failed_identities());
        let table = r.table();
        let empty = Vec::new();
        for (b, here) in &c.bases {
            let below = c.bases.get(&Bidegree::new(b.degree - 1, b.weight)).unwrap_or(&empty);
            let above = c.bases.get(&Bidegree::new(b.degree + 1, b.weight)).unwrap_or(&empty);
            let out = dense_rank(dense_matrix(here, above, |m| c.d(m)));
            let inc = dense_rank(dense_matrix(below, here, |m| c.d(m)));
            prop_assert_eq!(table.dim(*b), here.len() - out - inc, "bidegree {}", b);
        }
    }
}

/// Perturbing by `x` and then by `y` gives the same retract as perturbing
/// by `x + y` at once.
#[test]
fn perturbation_composes() {
    let q = [Scalar::ZERO, Scalar::ONE, Scalar::int(-1)];
    let w = 4;
    let cx = SpanContext::new(
        &GammaSpec::t3(),
        Some(&q),
        SpanConfig {
            weight_max: w,
            ..SpanConfig::default()
        },
    )
    .unwrap();
    let alg = &cx.space.alg;
    let cap = 2 * w as usize + 2;
    let x = cx.d_tilde.clone();
    let y = cx.space.d1().plus(&cx.space.rho_q(&q));
    let base: Rc<dyn Retract> = Rc::new(TensorTrickRetract::new(&cx.space, w));
    let once = PerturbedRetract::new(base.clone(), as_fn(alg, x.plus(&y)), cap, "test").unwrap();
    let first: Rc<dyn Retract> =
        Rc::new(PerturbedRetract::new(base, as_fn(alg, x), cap, "test").unwrap());
    let twice = PerturbedRetract::new(first, as_fn(alg, y), cap, "test").unwrap();
    assert!(verify_retract(&once).passed());
    assert!(verify_retract(&twice).passed());
    assert_eq!(once.small_basis(), twice.small_basis());
    for m in once.small_basis() {
        assert_eq!(once.d_small(m), twice.d_small(m));
        assert_eq!(once.i(m), twice.i(m));
    }
    for m in once.big_basis() {
        assert_eq!(once.p(m), twice.p(m));
        assert_eq!(once.h(m), twice.h(m));
    }
}
