mod common;

use proptest::prelude::*;
use spinorspan::homology::on;
use spinorspan::multiplets::{supertranslation, GammaSpec, Multiplet, PureSpinorRing, Superspace};
use spinorspan::{Monomial, Poly, Scalar};

const W: i32 = 3;

fn act(m: &Multiplet, k: usize, p: &Poly) -> Poly {
    on(|x| m.action(k, x), p)
}

fn mono(m: &Monomial) -> Poly {
    Poly::monomial(m.clone(), Scalar::ONE)
}

/// `ρ` is a strict module structure commuting with `𝒟`, acting by
/// derivations of the product.
fn check_strict_module(m: &Multiplet, g: &GammaSpec) -> Result<(), TestCaseError> {
    let t = supertranslation(g);
    let odd = |k: usize| t.basis.generator(k).is_odd();
    for x in m.basis() {
        let xp = mono(x);
        for a in 0..t.dim() {
            let lhs = on(|y| m.differential(y), &act(m, a, &xp));
            let rhs = act(m, a, &on(|y| m.differential(y), &xp));
            prop_assert_eq!(
                &lhs,
                &rhs.scaled(Scalar::sign(odd(a))),
                "[D, rho({})] on {}",
                a,
                m.alg().fmt_monomial(x)
            );
            for b in 0..t.dim() {
                let ab = act(m, a, &act(m, b, &xp));
                let ba = act(m, b, &act(m, a, &xp));
                let comm = ab.minus(&ba.scaled(Scalar::sign(odd(a) && odd(b))));
                let bracket = t.ell_indices(&[a, b]);
                let want = bracket.terms().fold(Poly::zero(), |acc, (e, c)| {
                    acc.plus(&act(m, spinorspan::linfty::linear_index(e), &xp).scaled(*c))
                });
                prop_assert_eq!(comm, want);
            }
        }
    }
    Ok(())
}

fn check_leibniz(
    m: &Multiplet,
    op: impl Fn(&Monomial) -> Poly,
    op_odd: bool,
) -> Result<(), TestCaseError> {
    let bs = m.basis();
    for x in bs.iter().step_by(3) {
        for y in bs.iter().step_by(5) {
            let xy = m.product(x, y);
            if m.alg().bidegree(x).weight + m.alg().bidegree(y).weight > W {
                continue;
            }
            let lhs = on(&op, &xy);
            let mut rhs = on(|u| m.product(u, y), &op(x));
            let sign = Scalar::sign(op_odd && m.alg().is_odd_monomial(x));
            rhs.add_scaled(&on(|v| m.product(x, v), &op(y)), sign);
            prop_assert_eq!(lhs, rhs);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn canonical_multiplet_is_a_strict_module(g in common::gamma(3, 2)) {
        let m = Multiplet::canonical(&Superspace::new(&g, vec![]), W);
        prop_assert!(m.square_zero().passed());
        check_strict_module(&m, &g)?;
        let t = supertranslation(&g);
        for a in 0..t.dim() {
            check_leibniz(&m, |x| m.action(a, x), t.basis.generator(a).is_odd())?;
        }
        check_leibniz(&m, |x| m.differential(x), true)?;
    }

    #[test]
    fn twisting_keeps_a_derivation(q in common::t3_twist()) {
        let g = GammaSpec::t3();
        let m = Multiplet::canonical(&Superspace::new(&g, vec![]), W).twisted(&q).unwrap();
        prop_assert!(m.square_zero().passed());
        check_leibniz(&m, |x| m.differential(x), true)?;
    }

    /// Standard monomials counted by the echelon match dense ranks.
    #[test]
    fn hilbert_function_matches_dense_ranks(g in common::gamma(3, 3)) {
        let ring = PureSpinorRing::new(&Superspace::new(&g, vec![]), 5);
        prop_assert_eq!(ring.hilbert(), ring.hilbert_dense());
    }
}

#[test]
fn non_mc_twist_is_rejected() {
    let m = Multiplet::canonical(&Superspace::new(&GammaSpec::t2(), vec![]), W);
    assert!(m.twisted(&[Scalar::ONE, Scalar::ZERO]).is_err());
}
