mod common;

use proptest::prelude::*;
use spinorspan::linfty::brackets_to_ce;
use spinorspan::multiplets::GammaSpec;
use spinorspan::ocha::{check_homotopy_jacobi, closed_basis, ClosedOnly};
use spinorspan::tate::{extract_n, hilbert_function, tate_resolve, TateState};
use spinorspan::{Bidegree, Poly};

fn stage_counts(s: &TateState) -> Vec<Vec<(Bidegree, usize)>> {
    s.log.iter().map(|l| l.counts.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// After the last stage run, `H^0` is the ring and the negative
    /// cohomology below the edge is gone; `d` has bidegree `(1, 0)`.
    #[test]
    fn resolution_invariants(g in common::gamma(3, 3)) {
        let w = 4;
        let s = tate_resolve(&g, w, 3);
        prop_assert_eq!(s.dense_hilbert(0), hilbert_function(&g, w));
        prop_assert_eq!(s.h0_hilbert(), hilbert_function(&g, w));
        let top = if s.closed { s.stage + 1 } else { s.stage };
        for j in 1..top {
            prop_assert!(s.dense_hilbert(-(j as i32)).iter().all(|&d| d == 0), "H^-{}", j);
        }
        for i in 0..s.ce.len() {
            let target = s.ce.generator(i).bidegree + Bidegree::new(1, 0);
            for (m, _) in s.d.image(i).map(Poly::terms).into_iter().flatten() {
                prop_assert_eq!(s.ce.bidegree(m), target);
            }
        }
    }

    /// Relabelling the spinor indices changes representatives, not the
    /// graded shape of `n` or the validity of its brackets.
    #[test]
    fn ideal_is_independent_of_labels(perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let g = GammaSpec::t3();
        let h = common::relabel(&g, &perm);
        let (a, b) = (tate_resolve(&g, 5, 4), tate_resolve(&h, 5, 4));
        prop_assert_eq!(stage_counts(&a), stage_counts(&b));
        let (na, nb) = (extract_n(&a, 3), extract_n(&b, 3));
        prop_assert_eq!(na.n.dim(), nb.n.dim());
        prop_assert!(na.report.passed() && nb.report.passed());
        for s in [&a, &b] {
            let t = s.t_tilde(3);
            prop_assert!(check_homotopy_jacobi(&ClosedOnly::new(&t), &closed_basis(&t), 3).passed());
        }
    }
}

/// Reading brackets off `d` and writing them back is the identity.
#[test]
fn brackets_round_trip_through_cochains() {
    for g in [GammaSpec::t1(), GammaSpec::t2(), GammaSpec::t3()] {
        let s = tate_resolve(&g, 6, 5);
        let t = s.t_tilde(8);
        let images = brackets_to_ce(&t, &s.ce);
        for (i, img) in images.iter().enumerate() {
            let want = s.d.image(i).cloned().unwrap_or_else(Poly::zero);
            assert_eq!(img, &want, "generator {}", s.ce.generator(i).name);
        }
    }
}

#[test]
fn t2_counts() {
    let s = tate_resolve(&GammaSpec::t2(), 6, 4);
    let counts: Vec<usize> = s.log.iter().map(|l| l.total()).collect();
    assert_eq!(counts, vec![3, 2, 3, 6]);
    assert_eq!(s.remaining, vec![(Bidegree::new(-4, 6), 11)]);
    assert!(s.require_trusted(-4).is_ok());
    assert!(s.require_trusted(-5).is_err());
}
