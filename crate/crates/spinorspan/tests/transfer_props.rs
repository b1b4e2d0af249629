mod common;

use std::rc::Rc;

use proptest::prelude::*;
use spinorspan::homology::{BlockRetract, ChainComplex, Retract, SmallSide};
use spinorspan::linfty::{linear_index, LInfty};
use spinorspan::multiplets::{strict_ocha, supertranslation, GammaSpec, Multiplet, Superspace};
use spinorspan::ocha::{closed_basis, open_words, OchaOps, StrictOcha};
use spinorspan::span::component_fields;
use spinorspan::transfer::OchaTransfer;
use spinorspan::{FreeSCAlgebra, Monomial, Poly, Scalar};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Component fields: the transferred open structure is A∞ and its
    /// binary product is `p m (i ⊗ i)`.
    #[test]
    fn component_fields_are_coherent(g in common::gamma(3, 2)) {
        let (coherence, binary, _) = component_fields(&g, 3, 3, 3).unwrap();
        prop_assert!(coherence.passed, "{:?}", coherence.failures);
        prop_assert!(binary.passed, "{:?}", binary.failures);
        prop_assert!(coherence.checked > 0 && binary.checked > 0);
    }
}

/// With `h = 0` every tree with more than one vertex vanishes and the
/// transfer is the strict structure itself.
#[test]
fn zero_homotopy_gives_the_strict_structure() {
    let g = GammaSpec::t1();
    let space = Superspace::new(&g, vec![]);
    let t = supertranslation(&g);
    let alg = space.alg.clone();
    let basis = space.basis(2);
    let bases = alg
        .basis_by_bidegree(&spinorspan::TruncationWindow::weights(2))
        .unwrap();
    let zero = ChainComplex::new(alg.clone(), bases, Rc::new(|_: &Monomial| Poly::zero()));
    let r = BlockRetract::build(zero, SmallSide::Monomials);
    let a2 = alg.clone();
    let a3 = alg.clone();
    let sp = space.clone();
    let strict = StrictOcha {
        closed: &t,
        open: alg.clone(),
        d: Box::new(|_| Poly::zero()),
        product: Box::new(move |x, y| match a2.mul_monomials(x, y) {
            Some((neg, m)) => Poly::monomial(m, Scalar::sign(neg)),
            None => Poly::zero(),
        }),
        action: Box::new(move |c, x| {
            sp.rho(linear_index(c))
                .act(&a3, &Poly::monomial(x.clone(), Scalar::ONE))
        }),
    };
    let tr = OchaTransfer::new(&strict, &r);
    let closed = closed_basis(&t);
    let words = open_words(&alg, &basis, 2, 2);
    let mut seen = 0;
    for o in words.iter().take(40) {
        for cl in [
            vec![],
            vec![closed[0].clone()],
            vec![closed[0].clone(), closed[1].clone()],
        ] {
            for (tree, v) in tr.tree_terms(&cl, o) {
                if tree.vertices() > 1 {
                    assert!(v.is_zero(), "{tree}");
                }
                seen += 1;
            }
            let strict_value: Poly = strict
                .n(&cl, o)
                .terms()
                .filter(|(m, _)| r.small_basis().contains(m))
                .map(|(m, c)| (m.clone(), *c))
                .collect();
            assert_eq!(tr.n(&cl, o), strict_value);
        }
    }
    assert!(seen > 0);
}

/// Open-only slots of the OCHA transfer do not see the closed sector.
#[test]
fn open_slots_ignore_the_closed_sector() {
    let g = GammaSpec::t2();
    let space = Superspace::new(&g, vec![]);
    let full = Multiplet::canonical(&space, 4);
    let t = supertranslation(&g);
    let none = LInfty::abelian(FreeSCAlgebra::empty());
    let with = strict_ocha(&t, &full);
    let without = strict_ocha(&none, &full);
    let d0 = Multiplet::canonical_d0(&space, 4);
    let r = BlockRetract::build(d0.complex(false), SmallSide::Classes { prefix: Vec::new() });
    let (a, b) = (
        OchaTransfer::new(&with, &r),
        OchaTransfer::new(&without, &r),
    );
    let mut nonzero = 0;
    for q in 1..=3 {
        for o in open_words(r.small(), r.small_basis(), q, 3) {
            let v = a.n(&[], &o);
            nonzero += usize::from(!v.is_zero());
            assert_eq!(v, b.n(&[], &o));
        }
    }
    assert!(nonzero > 0);
}
