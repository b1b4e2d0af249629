//! The two legs of the span
//!
//! ```text
//! A•(O_Y)  <--  A•(C•(t̃))  -->  C•(n)
//! ```
//!
//! both built as perturbed strong retracts of `A•(C•(t̃))` with the twisted
//! differential `𝒟̃_Q`, together with every check made on them.

use std::collections::BTreeMap;
use std::rc::Rc;

use serde::Serialize;

use crate::grading::{AlgebraMap, Bidegree, Derivation, FreeSCAlgebra, Monomial, Poly};
use crate::homology::{
    apply_i, cohomology, verify_retract, BlockRetract, ChainComplex, CohomologyTable,
    HomologyError, LinearFn, PerturbedRetract, Retract, RetractReport, SmallSide, TensorRetract,
};
use crate::linfty::{ce_to_brackets, dual_basis, twist_unchecked, LInfty};
use crate::multiplets::{
    check_twist, complex_on, strict_ocha, supertranslation, window_square_zero, GammaSpec,
    Multiplet, MultipletError, PureSpinorRing, Superspace,
};
use crate::ocha::{
    check_homotopy_jacobi, check_ocha_coherence, check_open_relations, closed_basis, ClosedOnly,
    CoherenceReport, Memo, OchaOps, Twisted,
};
use crate::scalar::Scalar;
use crate::tate::{extract_n, tate_resolve, TateState};
use crate::transfer::{binary_closed_form, forbidden_shape, OchaTransfer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpanError {
    #[error(transparent)]
    Multiplet(#[from] MultipletError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(
        "window exhausted: negative cohomology of the resolution remains at ({degree},{weight})"
    )]
    WindowExhausted { degree: i32, weight: i32 },
}

/// Window and cutoffs for a span computation.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SpanConfig {
    pub degree_min: i32,
    pub degree_max: i32,
    pub weight_max: i32,
    pub arity_max: usize,
    /// Total arity for OCHA coherence checks.
    pub coherence_arity: usize,
    /// Weight bound on open words in coherence checks.
    pub coherence_weight: i32,
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig {
            degree_min: -4,
            degree_max: 2,
            weight_max: 6,
            arity_max: 4,
            coherence_arity: 3,
            coherence_weight: 4,
        }
    }
}

/// One named check with its sample size and the first few failures.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct Check {
    pub passed: bool,
    pub checked: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

const KEEP: usize = 5;

impl Check {
    fn new() -> Check {
        Check {
            passed: true,
            ..Check::default()
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.passed = false;
            if self.failures.len() < KEEP {
                self.failures.push(detail());
            }
        }
    }

    pub(crate) fn from_bool(ok: bool, detail: impl FnOnce() -> String) -> Check {
        let mut c = Check::new();
        c.record(ok, detail);
        c
    }

    fn from_retract(r: &RetractReport) -> Check {
        let mut c = Check::new();
        for id in &r.identities {
            c.checked += id.checked;
            if id.failures > 0 {
                c.passed = false;
                c.failures.push(format!(
                    "{}: {}",
                    id.identity,
                    id.first_failure.clone().unwrap_or_default()
                ));
            }
        }
        c
    }

    fn from_coherence(r: &CoherenceReport) -> Check {
        Check {
            passed: r.passed(),
            checked: r.checked,
            failures: r
                .violations
                .iter()
                .take(KEEP)
                .map(|v| {
                    format!(
                        "({}; {}) -> {}",
                        v.closed.join(","),
                        v.open.join(","),
                        v.residual
                    )
                })
                .collect(),
        }
    }

    fn from_square_zero(r: &crate::grading::SquareZeroReport) -> Check {
        Check {
            passed: r.passed(),
            checked: r.checked,
            failures: r
                .violations
                .iter()
                .take(KEEP)
                .map(|(m, v)| format!("{m} -> {v}"))
                .collect(),
        }
    }
}

/// Named checks of one leg plus informational values.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct LegReport {
    pub checks: BTreeMap<String, Check>,
    pub info: BTreeMap<String, serde_json::Value>,
}

impl LegReport {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|(_, c)| !c.passed)
            .map(|(k, _)| k.clone())
            .collect()
    }

    fn put(&mut self, name: &str, c: Check) {
        self.checks.insert(name.to_string(), c);
    }

    fn info(&mut self, name: &str, v: impl Serialize) {
        self.info.insert(
            name.to_string(),
            serde_json::to_value(v).expect("serializable"),
        );
    }
}

/// Everything both legs share: the resolution, superspace with the `w`'s,
/// `t`, the twist, and the differential `𝒟̃`.
pub struct SpanContext {
    pub gamma: GammaSpec,
    pub config: SpanConfig,
    pub q: Vec<Scalar>,
    pub tate: TateState,
    pub space: Superspace,
    pub t: LInfty,
    /// `d_t̃` on superspace.
    pub d_tilde: Derivation,
    /// `𝒟̃`, untwisted.
    pub tilde: Multiplet,
    /// `𝒟̃_Q`.
    pub tilde_q: Multiplet,
    pub canonical_q: Multiplet,
}

impl SpanContext {
    /// Resolve to stage `weight_max`, which exhausts all negative cohomology
    /// of weight at most `weight_max`.
    pub fn new(
        gamma: &GammaSpec,
        q: Option<&[Scalar]>,
        config: SpanConfig,
    ) -> Result<SpanContext, SpanError> {
        let q: Vec<Scalar> = match q {
            Some(q) => {
                if q.len() != gamma.n_odd {
                    return Err(MultipletError::TwistLength {
                        expected: gamma.n_odd,
                        found: q.len(),
                    }
                    .into());
                }
                q.to_vec()
            }
            None => vec![Scalar::ZERO; gamma.n_odd],
        };
        check_twist(gamma, &q)?;
        let w = config.weight_max;
        let tate = tate_resolve(gamma, w, w.max(1) as usize);
        if let Some((b, _)) = tate.remaining.first() {
            return Err(SpanError::WindowExhausted {
                degree: b.degree,
                weight: b.weight,
            });
        }
        let space = Superspace::new(gamma, tate.w_generators());
        let map = AlgebraMap::by_name(&tate.ce, &space.alg);
        let mut images = vec![Poly::zero(); space.alg.len()];
        for i in 0..tate.ce.len() {
            let j = space
                .alg
                .index_of(&tate.ce.generator(i).name)
                .expect("tate generators live in superspace");
            if let Some(p) = tate.d.image(i) {
                images[j] = map.apply(&space.alg, p);
            }
        }
        let d_tilde =
            Derivation::from_vec(&space.alg, Bidegree::new(1, 0), images).expect("homogeneous");
        let tilde = Multiplet::tilde(&space, &d_tilde, w);
        let tilde_q = tilde.twisted(&q)?;
        let canonical_q = Multiplet::canonical(&Superspace::new(gamma, vec![]), w).twisted(&q)?;
        Ok(SpanContext {
            gamma: gamma.clone(),
            config,
            q,
            t: supertranslation(gamma),
            tate,
            space,
            d_tilde,
            tilde,
            tilde_q,
            canonical_q,
        })
    }

    pub fn is_twisted(&self) -> bool {
        self.q.iter().any(|c| !c.is_zero())
    }

    pub fn q_vector(&self) -> Poly {
        self.q
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(a, c)| (self.t.element(a), *c))
            .collect()
    }

    fn derivation_fn(&self, d: Derivation) -> LinearFn {
        let alg = self.space.alg.clone();
        Rc::new(move |m: &Monomial| d.act(&alg, &Poly::monomial(m.clone(), Scalar::ONE)))
    }

    fn basis(&self) -> Vec<Monomial> {
        self.space.basis(self.config.weight_max)
    }

    fn w2(&self, m: &Monomial) -> i32 {
        self.space.alg.aux_weight(m, "w2")
    }

    fn fmt(&self, p: &Poly) -> String {
        self.space.alg.fmt_poly(p)
    }

    fn cap(&self) -> usize {
        2 * self.config.weight_max as usize + 2
    }

    /// Trusted degree window intersected with the configured one.
    fn window_blocks(&self, t: &CohomologyTable) -> BTreeMap<Bidegree, usize> {
        t.dims
            .iter()
            .filter(|(b, d)| {
                **d > 0 && b.degree >= self.config.degree_min && b.degree <= self.config.degree_max
            })
            .map(|(b, d)| (*b, *d))
            .collect()
    }

    fn complex(&self, m: &Multiplet) -> ChainComplex {
        m.complex(self.is_twisted())
    }
}

/// Left leg: a retract of `A•(C•(t̃))` onto `A•(O_Y)`.
pub struct LeftLeg {
    pub retract: PerturbedRetract,
    pub ring: Rc<PureSpinorRing>,
}

pub fn build_left_leg(cx: &SpanContext) -> Result<LeftLeg, SpanError> {
    let w = cx.config.weight_max;
    let space = &cx.space;
    let ce_basis: Vec<Monomial> = cx.basis().into_iter().filter(|m| space.is_ce(m)).collect();
    let inner_complex = complex_on(
        &space.alg,
        &ce_basis,
        cx.derivation_fn(cx.d_tilde.clone()),
        false,
    );
    let inner = BlockRetract::build(inner_complex, SmallSide::Monomials);
    let table = inner.table();
    if let Some((b, _)) = table.dims.iter().find(|(b, d)| b.degree < 0 && **d > 0) {
        return Err(SpanError::WindowExhausted {
            degree: b.degree,
            weight: b.weight,
        });
    }
    let ring = Rc::new(PureSpinorRing::new(space, w));
    let small: Vec<Monomial> = cx
        .basis()
        .into_iter()
        .filter(|m| space.is_superspace_lambda(m) && ring.is_standard(m))
        .collect();
    let tensor = TensorRetract::new(Rc::new(inner), space.n_superspace(), cx.basis(), small);
    let x = space
        .d0()
        .plus(&space.d1())
        .plus(&space.dv())
        .plus(&space.rho_q(&cx.q));
    let retract = PerturbedRetract::new(Rc::new(tensor), cx.derivation_fn(x), cx.cap(), "w2")?;
    Ok(LeftLeg { retract, ring })
}

/// `x`, `θ`, `λ` monomials of the free superspace as monomials of the
/// canonical multiplet's algebra (same leading generators).
fn to_canonical(cx: &SpanContext, p: &Poly) -> Poly {
    let n = cx.canonical_q.alg().len();
    p.terms()
        .map(|(m, c)| {
            debug_assert!(m.exps()[n..].iter().all(|&e| e == 0));
            (Monomial::from_exps(m.exps()[..n].to_vec()), *c)
        })
        .collect()
}

pub fn verify_left_leg(cx: &SpanContext, leg: &LeftLeg) -> LegReport {
    let mut rep = LegReport::default();
    let r = &leg.retract;
    let big = r.big_basis().to_vec();
    let small = r.small_basis().to_vec();
    rep.info("big_dim", big.len());
    rep.info("small_dim", small.len());

    rep.put(
        "retract_identities",
        Check::from_retract(&verify_retract(r)),
    );
    rep.put(
        "base_retract_identities",
        Check::from_retract(&verify_retract(r.base().as_ref())),
    );

    // (a) induced differential is the canonical twisted one
    let mut a = Check::new();
    for c in &small {
        let got = to_canonical(cx, &r.d_small(c));
        let want = cx.canonical_q.differential(&Monomial::from_exps(
            c.exps()[..cx.canonical_q.alg().len()].to_vec(),
        ));
        a.record(got == want, || {
            format!(
                "{}: {} vs {}",
                cx.space.alg.fmt_monomial(c),
                cx.fmt(&r.d_small(c)),
                cx.canonical_q.alg().fmt_poly(&want)
            )
        });
    }
    rep.put("induced_differential", a);

    // (b) no higher corrections
    let mut b = Check::new();
    for m in &big {
        let corr = r.p_corrections(m);
        b.record(corr.iter().all(Poly::is_zero), || {
            format!("p corrections on {}", cx.space.alg.fmt_monomial(m))
        });
    }
    for c in &small {
        let terms = r.d_small_terms(c);
        b.record(terms.iter().skip(1).all(Poly::is_zero), || {
            format!("d corrections on {}", cx.space.alg.fmt_monomial(c))
        });
    }
    rep.put("no_higher_corrections", b);

    // (d) w2 bookkeeping
    let mut h_ideal = Check::new();
    let mut p_kills = Check::new();
    let mut ops_preserve = Check::new();
    for m in &big {
        let h = r.base().h(m);
        h_ideal.record(h.terms().all(|(t, _)| cx.w2(t) >= 1), || {
            format!("h({}) = {}", cx.space.alg.fmt_monomial(m), cx.fmt(&h))
        });
        if cx.w2(m) >= 1 {
            let p = r.p(m);
            p_kills.record(p.is_zero(), || {
                format!("p({}) = {}", cx.space.alg.fmt_monomial(m), cx.fmt(&p))
            });
        }
        for k in 0..cx.t.dim() {
            let v = cx.tilde.action(k, m);
            let w = cx.w2(m);
            ops_preserve.record(v.terms().all(|(t, _)| cx.w2(t) == w), || {
                format!(
                    "rho({}) on {}",
                    cx.t.basis.generator(k).name,
                    cx.space.alg.fmt_monomial(m)
                )
            });
        }
    }
    let half: Vec<&Monomial> = big
        .iter()
        .filter(|m| cx.space.alg.bidegree(m).weight * 2 <= cx.config.weight_max)
        .collect();
    for a in &half {
        for b in &half {
            let v = cx.tilde.product(a, b);
            let w = cx.w2(a) + cx.w2(b);
            ops_preserve.record(v.terms().all(|(t, _)| cx.w2(t) == w), || {
                format!(
                    "product {} {}",
                    cx.space.alg.fmt_monomial(a),
                    cx.space.alg.fmt_monomial(b)
                )
            });
        }
    }
    rep.put("w2_h_in_ideal", h_ideal);
    rep.put("w2_p_kills_ideal", p_kills);
    rep.put("w2_operations_preserve", ops_preserve);

    // (c) transferred OCHA
    let source_strict = strict_ocha(&cx.t, &cx.tilde);
    let source = Twisted {
        inner: &source_strict,
        q: cx.q_vector(),
        depth: 2,
    };
    let transfer = OchaTransfer::new(&source, r);
    let memo = Memo::new(&transfer);
    let canonical_plain = cx.canonical_q_untwisted();
    let canonical_strict = strict_ocha(&cx.t, &canonical_plain);
    let canonical = Twisted {
        inner: &canonical_strict,
        q: cx.q_vector(),
        depth: 2,
    };
    let cb = closed_basis(&cx.t);
    let ob: Vec<Monomial> = small
        .iter()
        .filter(|m| cx.space.alg.bidegree(m).weight <= cx.config.coherence_weight)
        .cloned()
        .collect();
    let mut forbidden = Check::new();
    let mut strict_entries = Check::new();
    let total = cx.config.coherence_arity;
    let cws = crate::ocha::closed_words(&memo, &cb, total);
    for qn in 1..=total {
        let ows = crate::ocha::open_words(&cx.space.alg, &ob, qn, cx.config.coherence_weight);
        for cw in cws
            .iter()
            .chain(std::iter::once(&Vec::new()))
            .filter(|c| c.len() + qn <= total)
        {
            let p = cw.len();
            for o in &ows {
                if forbidden_shape(p, qn) {
                    for (tree, v) in transfer.tree_terms(cw, o) {
                        forbidden.record(v.is_zero(), || {
                            format!(
                                "tree {tree} on ({:?}; {:?}) = {}",
                                cw.len(),
                                o.len(),
                                cx.fmt(&v)
                            )
                        });
                    }
                } else if p + qn >= 2 {
                    let got = to_canonical(cx, &memo.n(cw, o));
                    let oc: Vec<Monomial> = o
                        .iter()
                        .map(|m| {
                            Monomial::from_exps(m.exps()[..cx.canonical_q.alg().len()].to_vec())
                        })
                        .collect();
                    let want = canonical.n(cw, &oc);
                    strict_entries.record(got == want, || {
                        format!(
                            "n'_{{{p},{qn}}} on {:?}: {} vs {}",
                            o.iter()
                                .map(|m| cx.space.alg.fmt_monomial(m))
                                .collect::<Vec<_>>(),
                            cx.canonical_q.alg().fmt_poly(&got),
                            cx.canonical_q.alg().fmt_poly(&want)
                        )
                    });
                }
            }
        }
    }
    rep.put("forbidden_trees_vanish", forbidden);
    rep.put("strict_entries_match", strict_entries);
    let coh = check_ocha_coherence(&memo, &cb, &ob, total, cx.config.coherence_weight);
    rep.put("transferred_ocha_coherence", Check::from_coherence(&coh));

    // (e) cohomology isomorphism in the window
    let big_table = cohomology(&cx.complex(&cx.tilde_q));
    let small_complex = {
        let alg = cx.space.alg.clone();
        let rr: &PerturbedRetract = r;
        let d: Vec<(Monomial, Poly)> = small.iter().map(|c| (c.clone(), rr.d_small(c))).collect();
        let table: BTreeMap<Monomial, Poly> = d.into_iter().collect();
        let f: LinearFn =
            Rc::new(move |m: &Monomial| table.get(m).cloned().unwrap_or_else(Poly::zero));
        complex_on(&alg, &small, f, cx.is_twisted())
    };
    let small_table = cohomology(&small_complex);
    let (bt, st) = (cx.window_blocks(&big_table), cx.window_blocks(&small_table));
    rep.put(
        "cohomology_iso",
        Check::from_bool(bt == st, || format!("{bt:?} vs {st:?}")),
    );
    rep.info("cohomology", dims_json(&st));
    rep
}

impl SpanContext {
    fn canonical_q_untwisted(&self) -> Multiplet {
        let mut m = self.canonical_q.clone();
        m.d = self
            .canonical_q
            .space
            .d0()
            .plus(&self.canonical_q.space.d1());
        m
    }
}

fn dims_json(t: &BTreeMap<Bidegree, usize>) -> BTreeMap<String, usize> {
    t.iter()
        .filter(|(_, d)| **d > 0)
        .map(|(b, d)| (format!("{},{}", b.degree, b.weight), *d))
        .collect()
}

/// Strong retract of `(A•(C•(t̃)), λ∂θ + v∂x)` onto `C[w]`, built pair by
/// pair: `(θ^α, λ^α)` then `(x^μ, v^μ)`, with `h` acting on the first pair
/// that is not trivial.
pub struct TensorTrickRetract {
    space: Superspace,
    d: Derivation,
    big_basis: Vec<Monomial>,
    small_basis: Vec<Monomial>,
    pairs: Vec<(usize, usize)>,
}

impl TensorTrickRetract {
    pub fn new(space: &Superspace, weight_max: i32) -> TensorTrickRetract {
        let big_basis = space.basis(weight_max);
        let small_basis = big_basis
            .iter()
            .filter(|m| space.is_pure_extra(m))
            .cloned()
            .collect();
        let mut pairs: Vec<(usize, usize)> = (0..space.gamma.n_odd)
            .map(|a| (space.th(a), space.lam(a)))
            .collect();
        pairs.extend((0..space.gamma.n_even).map(|mu| (space.x(mu), space.v(mu))));
        TensorTrickRetract {
            space: space.clone(),
            d: space.d0().plus(&space.dv()),
            big_basis,
            small_basis,
            pairs,
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Factor index of each generator: pairs first, then the `w`'s as one factor.
    pub fn factor_of(&self, i: usize) -> usize {
        self.pairs
            .iter()
            .position(|&(a, b)| a == i || b == i)
            .unwrap_or(self.pairs.len())
    }

    fn alg(&self) -> &FreeSCAlgebra {
        &self.space.alg
    }

    /// The part of `m` in the pair `k` and the rest.
    fn split(&self, m: &Monomial, k: usize) -> (Monomial, Monomial) {
        let (a, b) = self.pairs[k];
        let mut f = vec![0u8; m.len()];
        f[a] = m.exp(a);
        f[b] = m.exp(b);
        let mut r = m.exps().to_vec();
        r[a] = 0;
        r[b] = 0;
        (Monomial::from_exps(f), Monomial::from_exps(r))
    }

    /// Homotopy of one pair on its factor.
    fn h_pair(&self, k: usize, f: &Monomial) -> Poly {
        let (a, b) = self.pairs[k];
        let (ea, eb) = (f.exp(a), f.exp(b));
        let alg = self.alg();
        if k < self.space.gamma.n_odd {
            // (θ, λ): h(λ^n) = λ^{n-1} θ
            if ea == 0 && eb >= 1 {
                let m = alg.unit_monomial().with_exp(b, eb - 1).with_exp(a, 1);
                return Poly::monomial(m, Scalar::ONE);
            }
            Poly::zero()
        } else {
            // (x, v): h(x^n v) = x^{n+1} / (n+1)
            if eb == 1 {
                let m = alg.unit_monomial().with_exp(a, ea + 1);
                return Poly::monomial(m, Scalar::new(1, ea as i64 + 1));
            }
            Poly::zero()
        }
    }
}

impl Retract for TensorTrickRetract {
    fn big(&self) -> &FreeSCAlgebra {
        &self.space.alg
    }
    fn small(&self) -> &FreeSCAlgebra {
        &self.space.alg
    }
    fn big_basis(&self) -> &[Monomial] {
        &self.big_basis
    }
    fn small_basis(&self) -> &[Monomial] {
        &self.small_basis
    }
    fn d_big(&self, m: &Monomial) -> Poly {
        self.d
            .act(self.alg(), &Poly::monomial(m.clone(), Scalar::ONE))
    }
    fn d_small(&self, _m: &Monomial) -> Poly {
        Poly::zero()
    }
    fn i(&self, m: &Monomial) -> Poly {
        Poly::monomial(m.clone(), Scalar::ONE)
    }
    fn p(&self, m: &Monomial) -> Poly {
        if self.space.is_pure_extra(m) {
            Poly::monomial(m.clone(), Scalar::ONE)
        } else {
            Poly::zero()
        }
    }
    fn h(&self, m: &Monomial) -> Poly {
        let Some(k) = (0..self.pairs.len()).find(|&k| {
            let (a, b) = self.pairs[k];
            m.exp(a) > 0 || m.exp(b) > 0
        }) else {
            return Poly::zero();
        };
        let (f, rest) = self.split(m, k);
        // m = sign * f * rest, with f moved to the front
        let (neg, prod) = self
            .alg()
            .mul_monomials(&f, &rest)
            .expect("m is a nonzero monomial");
        debug_assert_eq!(&prod, m);
        let hf = self.h_pair(k, &f);
        self.alg()
            .mul_poly_mono(&hf, &rest)
            .scaled(Scalar::sign(neg))
    }
}

/// Right leg: a retract of `A•(C•(t̃))` onto `C•(n)`.
pub struct RightLeg {
    pub base: Rc<TensorTrickRetract>,
    pub retract: PerturbedRetract,
}

pub fn build_right_leg(cx: &SpanContext) -> Result<RightLeg, SpanError> {
    let base = Rc::new(TensorTrickRetract::new(&cx.space, cx.config.weight_max));
    let x = cx.space.d1().plus(&cx.d_tilde).plus(&cx.space.rho_q(&cx.q));
    let retract = PerturbedRetract::new(
        base.clone(),
        cx.derivation_fn(x),
        cx.cap(),
        "x, v and λ counts",
    )?;
    Ok(RightLeg { base, retract })
}

/// `d_t̃(m)|_{λ = q, v = 0}`, projected to pure `w` monomials.
///
/// The right leg produces this with `q = -Q`: its homotopy satisfies
/// `id - IP = dH + Hd`, so every order of the perturbation series picks up
/// a minus sign.
pub fn d_n_q(cx: &SpanContext, m: &Monomial, q: &[Scalar]) -> Poly {
    let s = &cx.space;
    let mut images: Vec<Poly> = (0..s.alg.len()).map(|i| s.alg.var_at(i)).collect();
    for mu in 0..cx.gamma.n_even {
        images[s.x(mu)] = Poly::zero();
        images[s.v(mu)] = Poly::zero();
    }
    for a in 0..cx.gamma.n_odd {
        images[s.th(a)] = Poly::zero();
        images[s.lam(a)] = s.alg.one().scaled(q[a]);
    }
    let map = AlgebraMap::new(images);
    map.apply(
        &s.alg,
        &cx.d_tilde
            .act(&s.alg, &Poly::monomial(m.clone(), Scalar::ONE)),
    )
}

/// `((-1)^n/n!) P (Q^α ∂_λα)^n d_t̃ I`.
pub fn b_n_closed_form(cx: &SpanContext, m: &Monomial, n: usize) -> Poly {
    let s = &cx.space;
    let mut images = vec![Poly::zero(); s.alg.len()];
    for a in 0..cx.gamma.n_odd {
        images[s.lam(a)] = s.alg.one().scaled(cx.q[a]);
    }
    let q_d = Derivation::from_vec(&s.alg, Bidegree::new(0, -1), images).expect("homogeneous");
    let mut v = cx
        .d_tilde
        .act(&s.alg, &Poly::monomial(m.clone(), Scalar::ONE));
    for _ in 0..n {
        v = q_d.act(&s.alg, &v);
    }
    let c = Scalar::factorial(n).recip() * Scalar::sign(n % 2 == 1);
    v.filter(|t| s.is_pure_extra(t)).scaled(c)
}

/// `n` with the differential transferred along the right leg, read off as
/// an L∞ algebra on the duals of the `w`'s.
pub fn transferred_n(cx: &SpanContext, leg: &RightLeg, arity_max: usize) -> LInfty {
    let s = &cx.space;
    let start = s.extra(0);
    let n_ce = FreeSCAlgebra::new(cx.tate.w_generators()).expect("distinct");
    let names: Vec<String> = cx.tate.dual_names()[cx.tate.w_start()..].to_vec();
    let images: Vec<Poly> = (0..n_ce.len())
        .map(|j| {
            let g = s.alg.unit_monomial().with_exp(start + j, 1);
            leg.retract
                .d_small(&g)
                .terms()
                .map(|(m, c)| (Monomial::from_exps(m.exps()[start..].to_vec()), *c))
                .collect()
        })
        .collect();
    ce_to_brackets(
        &n_ce,
        |j| images[j].clone(),
        dual_basis(&n_ce, &names),
        arity_max,
    )
}

/// `n_q`: twist `t̃` by `q` and restrict to `n`.
pub fn twisted_ideal(cx: &SpanContext, q: &[Scalar], arity_max: usize) -> (LInfty, usize) {
    let depth = arity_max + cx.config.weight_max as usize;
    let tt = cx.tate.t_tilde(depth);
    let q: Poly = q
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(a, c)| (tt.element(a), *c))
        .collect();
    let twisted = twist_unchecked(&tt, &q, arity_max);
    let keep: Vec<usize> = cx.tate.w_indices().collect();
    let (n, leaks) = twisted.restrict(&keep);
    (n, leaks.len())
}

pub fn verify_right_leg(cx: &SpanContext, leg: &RightLeg) -> LegReport {
    let mut rep = LegReport::default();
    let r = &leg.retract;
    let s = &cx.space;
    let alg = &s.alg;
    let small = r.small_basis().to_vec();
    rep.info("big_dim", r.big_basis().len());
    rep.info("small_dim", small.len());
    rep.put(
        "base_retract_identities",
        Check::from_retract(&verify_retract(leg.base.as_ref())),
    );
    rep.put(
        "retract_identities",
        Check::from_retract(&verify_retract(r)),
    );

    // multiplicativity of the base retract
    let base = leg.base.as_ref();
    let mut p_alg = Check::new();
    let mut h_der = Check::new();
    for m in base.big_basis() {
        // split m at every factor boundary: m = sign * a * b
        let nf = base.pairs().len() + 1;
        for k in 1..nf {
            let mut ea = m.exps().to_vec();
            let mut eb = m.exps().to_vec();
            for i in 0..m.len() {
                if base.factor_of(i) < k {
                    eb[i] = 0;
                } else {
                    ea[i] = 0;
                }
            }
            let (a, b) = (Monomial::from_exps(ea), Monomial::from_exps(eb));
            if a.is_one() || b.is_one() {
                continue;
            }
            let (neg, _) = alg.mul_monomials(&a, &b).expect("nonzero");
            let sign = Scalar::sign(neg);
            let pa = base.p(&a);
            let pb = base.p(&b);
            let lhs = base.p(m).scaled(sign);
            let rhs = alg.mul(&pa, &pb);
            p_alg.record(lhs == rhs, || format!("P on {}", alg.fmt_monomial(m)));
            // H(ab) = H(a) b + (-1)^{|a|} IP(a) H(b)
            let lhs = base.h(m).scaled(sign);
            let mut rhs = alg.mul(&base.h(&a), &Poly::monomial(b.clone(), Scalar::ONE));
            let ipa = apply_i(base, &pa);
            rhs.add_scaled(
                &alg.mul(&ipa, &base.h(&b)),
                Scalar::sign(alg.bidegree(&a).is_odd()),
            );
            h_der.record(lhs == rhs, || {
                format!(
                    "H on {} = {} * {}",
                    alg.fmt_monomial(m),
                    alg.fmt_monomial(&a),
                    alg.fmt_monomial(&b)
                )
            });
        }
    }
    rep.put("base_p_algebra_map", p_alg);
    rep.put("base_h_derivation", h_der);

    // d_n^Q against d_{n_Q}
    let mut dnq = Check::new();
    let mut max_n = 0usize;
    let mut bn = Check::new();
    let mut nonzero_corrections = 0usize;
    let minus_q: Vec<Scalar> = cx.q.iter().map(|c| -*c).collect();
    let mut parity = Check::new();
    for c in &small {
        let got = r.d_small(c);
        let want = d_n_q(cx, c, &minus_q);
        // (-1)^weight is an automorphism of t̃ sending Q to -Q
        let plus = d_n_q(cx, c, &cx.q);
        let flipped: Poly = plus
            .terms()
            .map(|(m, k)| {
                (
                    m.clone(),
                    *k * Scalar::sign((alg.bidegree(m).weight + alg.bidegree(c).weight) % 2 != 0),
                )
            })
            .collect();
        parity.record(flipped == want, || {
            format!(
                "{}: {} vs {}",
                alg.fmt_monomial(c),
                cx.fmt(&flipped),
                cx.fmt(&want)
            )
        });
        dnq.record(got == want, || {
            format!(
                "{}: {} vs {}",
                alg.fmt_monomial(c),
                cx.fmt(&got),
                cx.fmt(&want)
            )
        });
        let terms = r.d_small_terms(c);
        let top = terms.len().max(cx.config.weight_max as usize + 1);
        for n in 0..top {
            let it = terms.get(n).cloned().unwrap_or_else(Poly::zero);
            let cf = b_n_closed_form(cx, c, n);
            if n > 0 && !it.is_zero() {
                nonzero_corrections += 1;
                max_n = max_n.max(n);
            }
            bn.record(it == cf, || {
                format!(
                    "b_{n} on {}: {} vs {}",
                    alg.fmt_monomial(c),
                    cx.fmt(&it),
                    cx.fmt(&cf)
                )
            });
        }
    }
    rep.put("d_n_q_equals_d_nq", dnq);
    rep.put("weight_parity_intertwines_q", parity);
    rep.put("b_n_closed_form", bn);
    rep.info("q_corrections_nonzero", nonzero_corrections);
    rep.info("q_corrections_max_order", max_n);

    // terms of d_t̃(w) involving v, which P kills
    let mut v_terms = 0usize;
    let mut mixed = 0usize;
    for i in cx.tate.w_indices() {
        let j = s.extra(i - cx.tate.w_start());
        if let Some(p) = cx.d_tilde.image(j) {
            for (m, _) in p.terms() {
                let has_v = (0..cx.gamma.n_even).any(|mu| m.exp(s.v(mu)) > 0);
                let has_l = (0..cx.gamma.n_odd).any(|a| m.exp(s.lam(a)) > 0);
                if has_v {
                    v_terms += 1;
                    if has_l {
                        mixed += 1;
                    }
                }
            }
        }
    }
    rep.info("d_tilde_terms_with_v", v_terms);
    rep.info("d_tilde_terms_mixing_lambda_and_v", mixed);

    // n from the transferred differential, and n_Q from twisting t̃
    let n_tr = transferred_n(cx, leg, cx.config.arity_max);
    let (n_q, leaks) = twisted_ideal(cx, &minus_q, cx.config.arity_max);
    let same = n_tr.entries().collect::<Vec<_>>() == n_q.entries().collect::<Vec<_>>()
        && n_tr.curvature == n_q.curvature;
    rep.put(
        "n_q_structure_constants",
        Check::from_bool(same && leaks == 0, || {
            format!(
                "{} vs {} brackets, {leaks} leaks",
                n_tr.entries().count(),
                n_q.entries().count()
            )
        }),
    );
    rep.info("n_dim", n_tr.dim());
    rep.info("n_brackets", n_tr.entries().count());
    let ops = ClosedOnly::new(&n_tr);
    let jac = check_homotopy_jacobi(&ops, &closed_basis(&n_tr), cx.config.arity_max);
    rep.put("n_homotopy_jacobi", Check::from_coherence(&jac));
    let sq: Vec<Monomial> = small.clone();
    rep.put(
        "d_n_q_square_zero",
        Check::from_square_zero(&window_square_zero(alg, &sq, |m| r.d_small(m))),
    );

    // transferred OCHA on C•(n)
    let source_strict = strict_ocha(&cx.t, &cx.tilde);
    let source = Twisted {
        inner: &source_strict,
        q: cx.q_vector(),
        depth: 2,
    };
    let transfer = OchaTransfer::new(&source, r);
    let memo = Memo::new(&transfer);
    let cb = closed_basis(&cx.t);
    let ob: Vec<Monomial> = small
        .iter()
        .filter(|m| alg.bidegree(m).weight <= cx.config.coherence_weight)
        .cloned()
        .collect();
    let total = cx.config.coherence_arity;
    let coh = check_ocha_coherence(&memo, &cb, &ob, total, cx.config.coherence_weight);
    rep.put("transferred_ocha_coherence", Check::from_coherence(&coh));
    let mut product = Check::new();
    let mut higher = 0usize;
    for qn in 2..=total {
        for o in crate::ocha::open_words(alg, &ob, qn, cx.config.coherence_weight) {
            let v = memo.n(&[], &o);
            if qn == 2 {
                let want = binary_closed_form(&source, r, &o[0], &o[1]);
                product.record(v == want, || {
                    format!(
                        "n'_2 on {}",
                        o.iter()
                            .map(|m| alg.fmt_monomial(m))
                            .collect::<Vec<_>>()
                            .join(",")
                    )
                });
                // the product of C•(n) itself, with the suspension sign
                let strict = alg
                    .mul(
                        &Poly::monomial(o[0].clone(), Scalar::ONE),
                        &Poly::monomial(o[1].clone(), Scalar::ONE),
                    )
                    .scaled(Scalar::sign(
                        (alg.bidegree(&o[0]).degree - 1).rem_euclid(2) == 1,
                    ));
                product.record(v == strict, || {
                    format!(
                        "n'_2 is not the product on {}",
                        o.iter()
                            .map(|m| alg.fmt_monomial(m))
                            .collect::<Vec<_>>()
                            .join(",")
                    )
                });
            } else if !v.is_zero() {
                higher += 1;
            }
        }
    }
    rep.put("transferred_product", product);
    rep.info("nonzero_higher_products", higher);

    // cohomology isomorphism in the window
    let big_table = cohomology(&cx.complex(&cx.tilde_q));
    let small_complex = {
        let table: BTreeMap<Monomial, Poly> =
            small.iter().map(|c| (c.clone(), r.d_small(c))).collect();
        let f: LinearFn =
            Rc::new(move |m: &Monomial| table.get(m).cloned().unwrap_or_else(Poly::zero));
        complex_on(alg, &small, f, cx.is_twisted())
    };
    let small_table = cohomology(&small_complex);
    let (bt, st) = (cx.window_blocks(&big_table), cx.window_blocks(&small_table));
    rep.put(
        "cohomology_iso",
        Check::from_bool(bt == st, || format!("{bt:?} vs {st:?}")),
    );
    rep.info("cohomology", dims_json(&st));

    // perturbed I', P' multiplicativity, reported only
    let mut i_mult = true;
    for a in &ob {
        for b in &ob {
            if alg.bidegree(a).weight + alg.bidegree(b).weight > cx.config.coherence_weight {
                continue;
            }
            if let Some((neg, ab)) = alg.mul_monomials(a, b) {
                let lhs = r.i(&ab).scaled(Scalar::sign(neg));
                let rhs = alg.mul(&r.i(a), &r.i(b));
                if lhs != rhs {
                    i_mult = false;
                }
            }
        }
    }
    rep.info("perturbed_i_multiplicative", i_mult);
    rep
}

/// Curvature of `𝒟̃_Q` read as an L∞ algebra on the duals of all superspace
/// generators.
pub fn curvature(cx: &SpanContext) -> (Poly, Poly, FreeSCAlgebra) {
    let s = &cx.space;
    let names: Vec<String> = s
        .alg
        .generators()
        .iter()
        .map(|g| {
            let n = &g.name;
            if let Some(k) = n.strip_prefix("th") {
                format!("d{k}[-1]")
            } else if let Some(k) = n.strip_prefix('x') {
                format!("e{k}[-1]")
            } else if let Some(k) = n.strip_prefix('l') {
                format!("d{k}")
            } else if let Some(k) = n.strip_prefix('v') {
                format!("e{k}")
            } else {
                n.replacen('w', "n", 1)
            }
        })
        .collect();
    let basis = dual_basis(&s.alg, &names);
    let d = cx.tilde_q.d.clone();
    let l = ce_to_brackets(
        &s.alg,
        |j| d.image(j).cloned().unwrap_or_else(Poly::zero),
        basis.clone(),
        0,
    );
    let expected: Poly =
        cx.q.iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(a, c)| (basis.unit_monomial().with_exp(s.th(a), 1), *c))
            .collect();
    (l.curvature, expected, basis)
}

/// Full report of a span computation.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct SpanReport {
    pub name: String,
    pub twist: Vec<Scalar>,
    pub window: SpanConfig,
    pub stages: usize,
    pub differentials: BTreeMap<String, Check>,
    pub left: LegReport,
    pub right: LegReport,
    pub curvature: Check,
    pub passed: bool,
}

/// Every constructed differential squares to zero on the window.
pub fn differential_checks(cx: &SpanContext) -> BTreeMap<String, Check> {
    let mut out = BTreeMap::new();
    let w = cx.config.weight_max;
    let canon_space = Superspace::new(&cx.gamma, vec![]);
    let c = Multiplet::canonical(&canon_space, w);
    out.insert("D".into(), Check::from_square_zero(&c.square_zero()));
    out.insert(
        "D_Q".into(),
        Check::from_square_zero(&cx.canonical_q.square_zero()),
    );
    out.insert(
        "d_tilde".into(),
        Check::from_square_zero(&cx.tilde.square_zero()),
    );
    out.insert(
        "d_tilde_Q".into(),
        Check::from_square_zero(&cx.tilde_q.square_zero()),
    );
    let tate = &cx.tate;
    let ce_basis: Vec<Monomial> = tate.bases().into_values().flatten().collect();
    out.insert(
        "d_t_tilde".into(),
        Check::from_square_zero(&window_square_zero(&tate.ce, &ce_basis, |m| {
            tate.d
                .act(&tate.ce, &Poly::monomial(m.clone(), Scalar::ONE))
        })),
    );
    let t_ce = {
        let base = crate::tate::TateState::stage_one(&cx.gamma, w, 1);
        let b: Vec<Monomial> = base.bases().into_values().flatten().collect();
        window_square_zero(&base.ce, &b, |m| {
            base.d
                .act(&base.ce, &Poly::monomial(m.clone(), Scalar::ONE))
        })
    };
    out.insert("d_t".into(), Check::from_square_zero(&t_ce));
    let ideal = extract_n(tate, cx.config.arity_max);
    let n_ce = FreeSCAlgebra::new(tate.w_generators()).expect("distinct");
    let dn = crate::linfty::brackets_to_ce(&ideal.n, &n_ce);
    let dn = Derivation::from_vec(&n_ce, Bidegree::new(1, 0), dn).expect("homogeneous");
    let nb = n_ce
        .window_basis(&crate::grading::TruncationWindow::weights(w))
        .expect("positive weights");
    out.insert(
        "d_n".into(),
        Check::from_square_zero(&window_square_zero(&n_ce, &nb, |m| {
            dn.act(&n_ce, &Poly::monomial(m.clone(), Scalar::ONE))
        })),
    );
    out
}

pub fn verify_span(
    name: &str,
    gamma: &GammaSpec,
    q: Option<&[Scalar]>,
    config: SpanConfig,
) -> Result<SpanReport, SpanError> {
    let cx = SpanContext::new(gamma, q, config.clone())?;
    let left = build_left_leg(&cx)?;
    let right = build_right_leg(&cx)?;
    let left_rep = verify_left_leg(&cx, &left);
    let mut right_rep = verify_right_leg(&cx, &right);
    let mut differentials = differential_checks(&cx);
    let rr: &PerturbedRetract = &right.retract;
    let sq = window_square_zero(&cx.space.alg, rr.small_basis(), |m| rr.d_small(m));
    differentials.insert("d_n_Q".into(), Check::from_square_zero(&sq));
    right_rep.checks.remove("d_n_q_square_zero");
    let (got, want, basis) = curvature(&cx);
    let curvature = Check::from_bool(got == want, || {
        format!("{} vs {}", basis.fmt_poly(&got), basis.fmt_poly(&want))
    });
    let passed = left_rep.passed()
        && right_rep.passed()
        && curvature.passed
        && differentials.values().all(|c| c.passed);
    Ok(SpanReport {
        name: name.to_string(),
        twist: cx.q.clone(),
        window: config,
        stages: cx.tate.stage,
        differentials,
        left: left_rep,
        right: right_rep,
        curvature,
        passed,
    })
}

/// Component fields: the canonical multiplet retracted onto the cohomology
/// of `λ∂θ`, perturbed by the rest of `𝒟`. Returns the A∞ coherence of the
/// transferred open structure and the arity-two closed-form check.
pub fn component_fields(
    gamma: &GammaSpec,
    weight_max: i32,
    arity_max: usize,
    word_weight: i32,
) -> Result<(Check, Check, usize), SpanError> {
    let space = Superspace::new(gamma, vec![]);
    let full = Multiplet::canonical(&space, weight_max);
    let d0 = Multiplet::canonical_d0(&space, weight_max);
    let inner = BlockRetract::build(d0.complex(false), SmallSide::Classes { prefix: Vec::new() });
    let small_dim = inner.small_basis().len();
    let ring = full.ring.clone().expect("canonical has a ring");
    let alg = space.alg.clone();
    let d1 = space.d1();
    let x: LinearFn = Rc::new(move |m: &Monomial| {
        ring.nf(&d1.act(&alg, &Poly::monomial(m.clone(), Scalar::ONE)))
    });
    let r = PerturbedRetract::new(Rc::new(inner), x, 2 * weight_max as usize + 2, "x count")?;
    let t = supertranslation(gamma);
    let source = strict_ocha(&t, &full);
    let transfer = OchaTransfer::new(&source, &r);
    let memo = Memo::new(&transfer);
    let ob: Vec<Monomial> = r.small_basis().to_vec();
    let coh = check_open_relations(&memo, &[], &ob, arity_max, arity_max, word_weight);
    let mut binary = Check::new();
    for o in crate::ocha::open_words(r.small(), &ob, 2, word_weight) {
        let got = memo.n(&[], &o);
        let want = binary_closed_form(&source, &r, &o[0], &o[1]);
        binary.record(got == want, || format!("{:?}", o));
    }
    Ok((Check::from_coherence(&coh), binary, small_dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(w: i32) -> SpanConfig {
        SpanConfig {
            weight_max: w,
            coherence_weight: 3,
            ..SpanConfig::default()
        }
    }

    #[test]
    fn tensor_trick_is_a_retract() {
        let tate = tate_resolve(&GammaSpec::t2(), 4, 4);
        let space = Superspace::new(&GammaSpec::t2(), tate.w_generators());
        let r = TensorTrickRetract::new(&space, 4);
        let rep = verify_retract(&r);
        assert!(rep.passed(), "{:?}", rep.failed_identities());
    }

    #[test]
    fn t1_untwisted_span() {
        let rep = verify_span("T1", &GammaSpec::t1(), None, small_config(4)).unwrap();
        assert!(
            rep.passed,
            "{}",
            serde_json::to_string_pretty(&rep).unwrap()
        );
    }

    #[test]
    fn t2_component_fields_a_infinity() {
        let (coh, binary, dim) = component_fields(&GammaSpec::t2(), 4, 4, 4).unwrap();
        assert!(dim > 0);
        assert!(coh.passed && coh.checked > 0, "{:?}", coh.failures);
        assert!(binary.passed && binary.checked > 0, "{:?}", binary.failures);
    }
}
