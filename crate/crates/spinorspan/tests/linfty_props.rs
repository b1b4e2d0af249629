mod common;

use proptest::prelude::*;
use spinorspan::linfty::{brackets_to_ce, ce_to_brackets, dual_basis, twist_linfty};
use spinorspan::multiplets::{supertranslation, GammaSpec};
use spinorspan::ocha::{check_homotopy_jacobi, closed_basis, ClosedOnly};
use spinorspan::tate::{tate_resolve, TateState};
use spinorspan::{Bidegree, Derivation, FreeSCAlgebra, Generator, Poly, Scalar};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn supertranslation_round_trip(g in common::gamma(3, 3)) {
        let t = supertranslation(&g);
        let ce = TateState::stage_one(&g, 2, 1).ce;
        let images = brackets_to_ce(&t, &ce);
        let names: Vec<String> = (0..t.dim()).map(|a| t.basis.generator(a).name.clone()).collect();
        let back = ce_to_brackets(&ce, |j| images[j].clone(), dual_basis(&ce, &names), 3);
        prop_assert_eq!(back.constants(), t.constants());
        prop_assert!(check_homotopy_jacobi(&ClosedOnly::new(&t), &closed_basis(&t), 3).passed());
    }

    /// Twisting by a Maurer–Cartan element keeps homotopy Jacobi; twisting
    /// by zero changes nothing.
    #[test]
    fn twisting_t_tilde(q in common::t3_twist()) {
        let s = tate_resolve(&GammaSpec::t3(), 4, 4);
        let t = s.t_tilde(6);
        let zero = twist_linfty(&t, &Poly::zero(), 6).unwrap();
        prop_assert_eq!(zero.constants(), t.constants());
        let qv: Poly = q.iter().enumerate().map(|(a, c)| (t.element(a), *c)).filter(|(_, c)| !c.is_zero()).collect();
        let tq = twist_linfty(&t, &qv, 3).unwrap();
        prop_assert!(tq.is_flat());
        prop_assert!(check_homotopy_jacobi(&ClosedOnly::new(&tq), &closed_basis(&tq), 3).passed());
    }

    /// A constant term in `d` is exactly the curvature.
    #[test]
    fn curvature_is_the_constant_part(c1 in -2i64..=2, c2 in -2i64..=2, s in -2i64..=2) {
        let alg = FreeSCAlgebra::new(vec![
            Generator::new("a1", -1, 0),
            Generator::new("a2", -1, 0),
            Generator::new("b", 0, 1),
            Generator::new("c", 1, 1),
        ])
        .unwrap();
        let one = alg.one();
        let images = vec![one.scaled(Scalar::int(c1)), one.scaled(Scalar::int(c2)), alg.var("c").scaled(Scalar::int(s)), Poly::zero()];
        let d = Derivation::from_vec(&alg, Bidegree::new(1, 0), images).unwrap();
        let names: Vec<String> = ["A1", "A2", "B", "C"].iter().map(|s| s.to_string()).collect();
        let basis = dual_basis(&alg, &names);
        let l = ce_to_brackets(&alg, |j| d.image(j).cloned().unwrap_or_else(Poly::zero), basis.clone(), 2);
        let want: Poly = [(0, c1), (1, c2)]
            .iter()
            .filter(|(_, c)| *c != 0)
            .map(|&(k, c)| (basis.unit_monomial().with_exp(k, 1), Scalar::int(c)))
            .collect();
        prop_assert_eq!(&l.curvature, &want);
        prop_assert_eq!(l.is_flat(), c1 == 0 && c2 == 0);
    }
}
