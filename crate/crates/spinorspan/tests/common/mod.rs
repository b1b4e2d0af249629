#![allow(dead_code)]

use proptest::prelude::*;
use spinorspan::multiplets::{GammaEntry, GammaSpec};
use spinorspan::Scalar;

/// Symmetric Γ with small integer entries, mostly zero.
pub fn gamma(max_odd: usize, max_even: usize) -> impl Strategy<Value = GammaSpec> {
    (1..=max_odd, 0..=max_even).prop_flat_map(|(n_odd, n_even)| {
        let pairs = n_odd * (n_odd + 1) / 2;
        proptest::collection::vec(prop_oneof![3 => Just(0i64), 2 => -1i64..=2], pairs * n_even)
            .prop_map(move |cs| {
                let mut entries = Vec::new();
                let mut k = 0;
                for mu in 0..n_even {
                    for a in 0..n_odd {
                        for b in a..n_odd {
                            if cs[k] != 0 {
                                entries.push(GammaEntry {
                                    alpha: a + 1,
                                    beta: b + 1,
                                    mu: mu + 1,
                                    coeff: Scalar::int(cs[k]),
                                });
                            }
                            k += 1;
                        }
                    }
                }
                GammaSpec::from_entries(n_odd, n_even, &entries).expect("symmetric by construction")
            })
    })
}

/// Γ with the odd indices relabelled by `perm`.
pub fn relabel(g: &GammaSpec, perm: &[usize]) -> GammaSpec {
    let mut entries = Vec::new();
    for mu in 0..g.n_even {
        for a in 0..g.n_odd {
            for b in a..g.n_odd {
                let c = g.coeff(mu, a, b);
                if !c.is_zero() {
                    entries.push(GammaEntry {
                        alpha: perm[a] + 1,
                        beta: perm[b] + 1,
                        mu: mu + 1,
                        coeff: c,
                    });
                }
            }
        }
    }
    GammaSpec::from_entries(g.n_odd, g.n_even, &entries).expect("relabelling keeps symmetry")
}

/// Maurer–Cartan twists of T3: `λ1 = 0` kills both quadrics.
pub fn t3_twist() -> impl Strategy<Value = Vec<Scalar>> {
    (-2i64..=2, -2i64..=2)
        .prop_filter("nonzero", |(s, t)| *s != 0 || *t != 0)
        .prop_map(|(s, t)| vec![Scalar::ZERO, Scalar::int(s), Scalar::int(t)])
}
