//! Open-closed homotopy algebras on the suspension, and one coherence engine
//! for all of L∞, L∞-module, A∞ and OCHA relations.
//!
//! A word is a closed tuple `C` and an open tuple `O`. The coderivation `D`
//! sends a word to a sum of words:
//!
//! * closed terms: for `S ⊆ C`, `ε(S, S^c) · (ell(C_S), C_{S^c}; O)`;
//! * open terms: for `S ⊆ C` and a nonempty block `O[i..j]`,
//!   `ε(S^c, S) (-1)^{|C_S||O_<i| + |C_{S^c}| + |O_<i|} · (C_{S^c}; O_<i, n(C_S; O[i..j]), O_≥j)`.
//!
//! The relations say that `π(D(word)) = 0`, where `π` applies `ell` to a
//! purely closed word and `n` to a word with open letters.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::Serialize;

use crate::grading::{koszul_sign, FreeSCAlgebra, Monomial, Poly};
use crate::linfty::{linear_index, LInfty};
use crate::scalar::Scalar;

/// Shifted operations of an OCHA. Closed letters are monomials of
/// `closed_alg`, open letters monomials of `open_alg`; shifted degree is
/// `degree - 1` on both sides.
pub trait OchaOps {
    fn closed_alg(&self) -> &FreeSCAlgebra;
    fn open_alg(&self) -> &FreeSCAlgebra;
    /// `ell(C)`, any order, arity zero meaning curvature.
    fn ell(&self, c: &[Monomial]) -> Poly;
    /// `n(C; O)` with `O` nonempty.
    fn n(&self, c: &[Monomial], o: &[Monomial]) -> Poly;
}

pub fn closed_deg(ops: &dyn OchaOps, m: &Monomial) -> i32 {
    ops.closed_alg().bidegree(m).degree - 1
}

pub fn open_deg(ops: &dyn OchaOps, m: &Monomial) -> i32 {
    ops.open_alg().bidegree(m).degree - 1
}

fn odd(k: i32) -> bool {
    k.rem_euclid(2) == 1
}

/// Expand a list of vectors into signed lists of monomials.
fn expand(inputs: &[&Poly]) -> Vec<(Vec<Monomial>, Scalar)> {
    let mut stack: Vec<(Vec<Monomial>, Scalar)> = vec![(Vec::new(), Scalar::ONE)];
    for v in inputs {
        let mut next = Vec::with_capacity(stack.len() * v.len());
        for (ms, c) in &stack {
            for (m, k) in v.terms() {
                let mut ms2 = ms.clone();
                ms2.push(m.clone());
                next.push((ms2, *c * *k));
            }
        }
        stack = next;
    }
    stack
}

/// `ell` with its first slot a vector.
fn ell_front(ops: &dyn OchaOps, front: &Poly, rest: &[Monomial]) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in front.terms() {
        let mut all = Vec::with_capacity(rest.len() + 1);
        all.push(m.clone());
        all.extend_from_slice(rest);
        out.add_scaled(&ops.ell(&all), *c);
    }
    out
}

/// Multilinear `n` where some slots hold vectors.
pub fn n_vectors(ops: &dyn OchaOps, c: &[&Poly], o: &[&Poly]) -> Poly {
    let mut out = Poly::zero();
    for (cs, k1) in expand(c) {
        for (os, k2) in expand(o) {
            out.add_scaled(&ops.n(&cs, &os), k1 * k2);
        }
    }
    out
}

/// Multilinear `ell` on vectors.
pub fn ell_vectors(ops: &dyn OchaOps, c: &[&Poly]) -> Poly {
    let mut out = Poly::zero();
    for (cs, k) in expand(c) {
        out.add_scaled(&ops.ell(&cs), k);
    }
    out
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..(1u32 << n)).map(move |mask| (0..n).map(|i| mask & (1 << i) != 0).collect())
}

fn unshuffle_sign(degrees: &[i32], first: &[usize], second: &[usize]) -> Scalar {
    let perm: Vec<usize> = first.iter().chain(second).copied().collect();
    Scalar::from(koszul_sign(&perm, degrees).expect("valid unshuffle") as i64)
}

/// Closed residual of the L∞ relation on `c`.
pub fn closed_relation(ops: &dyn OchaOps, c: &[Monomial]) -> Poly {
    let degs: Vec<i32> = c.iter().map(|m| closed_deg(ops, m)).collect();
    let mut out = Poly::zero();
    for mask in subsets(c.len()) {
        let s: Vec<usize> = (0..c.len()).filter(|&i| mask[i]).collect();
        let sc: Vec<usize> = (0..c.len()).filter(|&i| !mask[i]).collect();
        let inner: Vec<Monomial> = s.iter().map(|&i| c[i].clone()).collect();
        let v = ops.ell(&inner);
        if v.is_zero() {
            continue;
        }
        let sign = unshuffle_sign(&degs, &s, &sc);
        let rest: Vec<Monomial> = sc.iter().map(|&i| c[i].clone()).collect();
        out.add_scaled(&ell_front(ops, &v, &rest), sign);
    }
    out
}

/// Open residual of the OCHA relation on `(c; o)`, `o` nonempty.
pub fn open_relation(ops: &dyn OchaOps, c: &[Monomial], o: &[Monomial]) -> Poly {
    let cdeg: Vec<i32> = c.iter().map(|m| closed_deg(ops, m)).collect();
    let odeg: Vec<i32> = o.iter().map(|m| open_deg(ops, m)).collect();
    let mut out = Poly::zero();
    for mask in subsets(c.len()) {
        let s: Vec<usize> = (0..c.len()).filter(|&i| mask[i]).collect();
        let sc: Vec<usize> = (0..c.len()).filter(|&i| !mask[i]).collect();
        let cs: Vec<Monomial> = s.iter().map(|&i| c[i].clone()).collect();
        let csc: Vec<Monomial> = sc.iter().map(|&i| c[i].clone()).collect();
        let deg_s: i32 = s.iter().map(|&i| cdeg[i]).sum();
        let deg_sc: i32 = sc.iter().map(|&i| cdeg[i]).sum();
        // closed terms
        {
            let v = ops.ell(&cs);
            if !v.is_zero() {
                let sign = unshuffle_sign(&cdeg, &s, &sc);
                let vref = &v;
                let mut cl: Vec<Poly> = vec![vref.clone()];
                cl.extend(csc.iter().map(|m| Poly::monomial(m.clone(), Scalar::ONE)));
                let crefs: Vec<&Poly> = cl.iter().collect();
                let orefs: Vec<Poly> = o
                    .iter()
                    .map(|m| Poly::monomial(m.clone(), Scalar::ONE))
                    .collect();
                let orefs: Vec<&Poly> = orefs.iter().collect();
                out.add_scaled(&n_vectors(ops, &crefs, &orefs), sign);
            }
        }
        // open terms
        let eps = unshuffle_sign(&cdeg, &sc, &s);
        let mut deg_before = 0;
        for i in 0..o.len() {
            for j in i + 1..=o.len() {
                let v = ops.n(&cs, &o[i..j]);
                if v.is_zero() {
                    continue;
                }
                let neg = odd(deg_s * deg_before) ^ odd(deg_sc + deg_before);
                let sign = eps * Scalar::sign(neg);
                let outer_c: Vec<Poly> = csc
                    .iter()
                    .map(|m| Poly::monomial(m.clone(), Scalar::ONE))
                    .collect();
                let mut outer_o: Vec<Poly> = o[..i]
                    .iter()
                    .map(|m| Poly::monomial(m.clone(), Scalar::ONE))
                    .collect();
                outer_o.push(v);
                outer_o.extend(
                    o[j..]
                        .iter()
                        .map(|m| Poly::monomial(m.clone(), Scalar::ONE)),
                );
                let cr: Vec<&Poly> = outer_c.iter().collect();
                let or: Vec<&Poly> = outer_o.iter().collect();
                out.add_scaled(&n_vectors(ops, &cr, &or), sign);
            }
            deg_before += odeg[i];
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Violation {
    pub closed: Vec<String>,
    pub open: Vec<String>,
    pub residual: String,
}

/// Outcome of a coherence check, itemized by `(p, q)` arity.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CoherenceReport {
    pub checked: usize,
    pub failed: usize,
    /// `"p,q" -> [checked, failed]`.
    pub by_arity: std::collections::BTreeMap<String, [usize; 2]>,
    pub violations: Vec<Violation>,
}

impl CoherenceReport {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    fn record(&mut self, ops: &dyn OchaOps, c: &[Monomial], o: &[Monomial], r: &Poly) {
        self.checked += 1;
        let e = self
            .by_arity
            .entry(format!("{},{}", c.len(), o.len()))
            .or_insert([0, 0]);
        e[0] += 1;
        if !r.is_zero() {
            e[1] += 1;
            self.failed += 1;
            if self.violations.len() < 8 {
                let alg = if o.is_empty() {
                    ops.closed_alg()
                } else {
                    ops.open_alg()
                };
                self.violations.push(Violation {
                    closed: c.iter().map(|m| ops.closed_alg().fmt_monomial(m)).collect(),
                    open: o.iter().map(|m| ops.open_alg().fmt_monomial(m)).collect(),
                    residual: alg.fmt_poly(r),
                });
            }
        }
    }
}

/// Sorted closed multisets of each size `0..=k` (odd letters not repeated).
pub fn closed_words(ops: &dyn OchaOps, basis: &[Monomial], k: usize) -> Vec<Vec<Monomial>> {
    let mut out = Vec::new();
    fn rec(
        ops: &dyn OchaOps,
        basis: &[Monomial],
        k: usize,
        start: usize,
        cur: &mut Vec<Monomial>,
        out: &mut Vec<Vec<Monomial>>,
    ) {
        out.push(cur.clone());
        if cur.len() == k {
            return;
        }
        for a in start..basis.len() {
            if cur.last() == Some(&basis[a]) && odd(closed_deg(ops, &basis[a])) {
                continue;
            }
            cur.push(basis[a].clone());
            rec(ops, basis, k, a, cur, out);
            cur.pop();
        }
    }
    rec(ops, basis, k, 0, &mut Vec::new(), &mut out);
    out
}

/// All open tuples of length exactly `q` whose summed weight stays within
/// `weight_max`.
pub fn open_words(
    alg: &FreeSCAlgebra,
    basis: &[Monomial],
    q: usize,
    weight_max: i32,
) -> Vec<Vec<Monomial>> {
    let mut out = Vec::new();
    fn rec(
        alg: &FreeSCAlgebra,
        basis: &[Monomial],
        q: usize,
        room: i32,
        cur: &mut Vec<Monomial>,
        out: &mut Vec<Vec<Monomial>>,
    ) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for m in basis {
            let w = alg.bidegree(m).weight;
            if w <= room {
                cur.push(m.clone());
                rec(alg, basis, q, room - w, cur, out);
                cur.pop();
            }
        }
    }
    rec(alg, basis, q, weight_max, &mut Vec::new(), &mut out);
    out
}

/// Homotopy Jacobi identities on every closed word of arity `1..=arity_max`.
pub fn check_homotopy_jacobi(
    ops: &dyn OchaOps,
    basis: &[Monomial],
    arity_max: usize,
) -> CoherenceReport {
    let mut rep = CoherenceReport::default();
    for c in closed_words(ops, basis, arity_max) {
        let r = closed_relation(ops, &c);
        rep.record(ops, &c, &[], &r);
    }
    rep
}

/// Open relations on words `(C; O)` with `|C| + |O| <= total_max`, `|O| >= 1`,
/// `|O| <= open_max`, open weights summing to at most `weight_max`.
pub fn check_open_relations(
    ops: &dyn OchaOps,
    closed_basis: &[Monomial],
    open_basis: &[Monomial],
    total_max: usize,
    open_max: usize,
    weight_max: i32,
) -> CoherenceReport {
    let mut rep = CoherenceReport::default();
    let cws = closed_words(ops, closed_basis, total_max.saturating_sub(1));
    for q in 1..=open_max.min(total_max) {
        let ows = open_words(ops.open_alg(), open_basis, q, weight_max);
        for c in cws.iter().filter(|c| c.len() + q <= total_max) {
            for o in &ows {
                let r = open_relation(ops, c, o);
                rep.record(ops, c, o, &r);
            }
        }
    }
    rep
}

/// Full OCHA coherence: closed relations plus open relations.
pub fn check_ocha_coherence(
    ops: &dyn OchaOps,
    closed_basis: &[Monomial],
    open_basis: &[Monomial],
    total_max: usize,
    weight_max: i32,
) -> CoherenceReport {
    let mut rep = check_homotopy_jacobi(ops, closed_basis, total_max);
    let open = check_open_relations(
        ops,
        closed_basis,
        open_basis,
        total_max,
        total_max,
        weight_max,
    );
    rep.checked += open.checked;
    rep.failed += open.failed;
    for (k, v) in open.by_arity {
        let e = rep.by_arity.entry(k).or_insert([0, 0]);
        e[0] += v[0];
        e[1] += v[1];
    }
    for v in open.violations {
        if rep.violations.len() < 8 {
            rep.violations.push(v);
        }
    }
    rep
}

/// A bare L∞ algebra seen as an OCHA with empty open part.
pub struct ClosedOnly<'a> {
    pub l: &'a LInfty,
    empty: FreeSCAlgebra,
}

impl<'a> ClosedOnly<'a> {
    pub fn new(l: &'a LInfty) -> ClosedOnly<'a> {
        ClosedOnly {
            l,
            empty: FreeSCAlgebra::empty(),
        }
    }

    pub fn basis(&self) -> Vec<Monomial> {
        (0..self.l.dim()).map(|a| self.l.element(a)).collect()
    }
}

impl OchaOps for ClosedOnly<'_> {
    fn closed_alg(&self) -> &FreeSCAlgebra {
        &self.l.basis
    }
    fn open_alg(&self) -> &FreeSCAlgebra {
        &self.empty
    }
    fn ell(&self, c: &[Monomial]) -> Poly {
        self.l.ell(c)
    }
    fn n(&self, _c: &[Monomial], _o: &[Monomial]) -> Poly {
        Poly::zero()
    }
}

pub type MonoFn<'a> = Box<dyn Fn(&Monomial) -> Poly + 'a>;
pub type MonoFn2<'a> = Box<dyn Fn(&Monomial, &Monomial) -> Poly + 'a>;

/// A strict OCHA: a flat L∞ algebra (usually a dg Lie algebra) acting by
/// derivations on a dg algebra. Encodings on the suspension:
///
/// * `n(; sa) = s(da)`
/// * `n(; sa, sb) = (-1)^{|sa|} s(ab)`
/// * `n(sg; sa) = (-1)^{|sg|} s(ρ(g) a)`
pub struct StrictOcha<'a> {
    pub closed: &'a LInfty,
    pub open: FreeSCAlgebra,
    pub d: MonoFn<'a>,
    pub product: MonoFn2<'a>,
    /// Action of a closed basis element on an open monomial.
    pub action: MonoFn2<'a>,
}

impl OchaOps for StrictOcha<'_> {
    fn closed_alg(&self) -> &FreeSCAlgebra {
        &self.closed.basis
    }
    fn open_alg(&self) -> &FreeSCAlgebra {
        &self.open
    }
    fn ell(&self, c: &[Monomial]) -> Poly {
        self.closed.ell(c)
    }
    fn n(&self, c: &[Monomial], o: &[Monomial]) -> Poly {
        match (c.len(), o.len()) {
            (0, 1) => (self.d)(&o[0]),
            (0, 2) => {
                let s = odd(self.open.bidegree(&o[0]).degree - 1);
                (self.product)(&o[0], &o[1]).scaled(Scalar::sign(s))
            }
            (1, 1) => {
                let s = odd(self.closed.basis.bidegree(&c[0]).degree - 1);
                (self.action)(&c[0], &o[0]).scaled(Scalar::sign(s))
            }
            _ => Poly::zero(),
        }
    }
}

/// Table-backed operations, memoizing another implementation.
pub struct Memo<'a> {
    inner: &'a dyn OchaOps,
    ell: RefCell<HashMap<Vec<Monomial>, Poly>>,
    n: RefCell<HashMap<Word, Poly>>,
}

/// Closed inputs and open inputs.
type Word = (Vec<Monomial>, Vec<Monomial>);

impl<'a> Memo<'a> {
    pub fn new(inner: &'a dyn OchaOps) -> Memo<'a> {
        Memo {
            inner,
            ell: RefCell::new(HashMap::new()),
            n: RefCell::new(HashMap::new()),
        }
    }
}

impl OchaOps for Memo<'_> {
    fn closed_alg(&self) -> &FreeSCAlgebra {
        self.inner.closed_alg()
    }
    fn open_alg(&self) -> &FreeSCAlgebra {
        self.inner.open_alg()
    }
    fn ell(&self, c: &[Monomial]) -> Poly {
        if let Some(v) = self.ell.borrow().get(c) {
            return v.clone();
        }
        let v = self.inner.ell(c);
        self.ell.borrow_mut().insert(c.to_vec(), v.clone());
        v
    }
    fn n(&self, c: &[Monomial], o: &[Monomial]) -> Poly {
        let key = (c.to_vec(), o.to_vec());
        if let Some(v) = self.n.borrow().get(&key) {
            return v.clone();
        }
        let v = self.inner.n(c, o);
        self.n.borrow_mut().insert(key, v.clone());
        v
    }
}

/// Twist of an OCHA by a closed Maurer–Cartan element `Q` (shifted degree
/// zero): every operation gets `sum_k 1/k! op(Q^k, ..)`.
pub struct Twisted<'a> {
    pub inner: &'a dyn OchaOps,
    pub q: Poly,
    /// Largest number of `Q` insertions tried.
    pub depth: usize,
}

impl Twisted<'_> {
    fn with_q(&self, c: &[Monomial], k: usize) -> Vec<(Vec<Monomial>, Scalar)> {
        let qs: Vec<&Poly> = vec![&self.q; k];
        expand(&qs)
            .into_iter()
            .map(|(mut ms, s)| {
                ms.extend_from_slice(c);
                (ms, s * Scalar::factorial(k).recip())
            })
            .collect()
    }
}

impl OchaOps for Twisted<'_> {
    fn closed_alg(&self) -> &FreeSCAlgebra {
        self.inner.closed_alg()
    }
    fn open_alg(&self) -> &FreeSCAlgebra {
        self.inner.open_alg()
    }
    fn ell(&self, c: &[Monomial]) -> Poly {
        let mut out = Poly::zero();
        for k in 0..=self.depth {
            for (ms, s) in self.with_q(c, k) {
                out.add_scaled(&self.inner.ell(&ms), s);
            }
        }
        out
    }
    fn n(&self, c: &[Monomial], o: &[Monomial]) -> Poly {
        let mut out = Poly::zero();
        for k in 0..=self.depth {
            for (ms, s) in self.with_q(c, k) {
                out.add_scaled(&self.inner.n(&ms, o), s);
            }
        }
        out
    }
}

/// `sum 1/p! n(Q_c^p; Q_o^q)` summed over `q >= 1`, together with the closed
/// residual. Open Maurer–Cartan elements are taken at shifted degree zero.
pub fn ocha_mc_residual(ops: &dyn OchaOps, qc: &Poly, qo: &Poly, depth: usize) -> (Poly, Poly) {
    let mut closed = Poly::zero();
    for k in 0..=depth {
        let qs: Vec<&Poly> = vec![qc; k];
        closed.add_scaled(&ell_vectors(ops, &qs), Scalar::factorial(k).recip());
    }
    let mut open = Poly::zero();
    if !qo.is_zero() {
        for p in 0..=depth {
            for q in 1..=depth {
                let cs: Vec<&Poly> = vec![qc; p];
                let os: Vec<&Poly> = vec![qo; q];
                open.add_scaled(&n_vectors(ops, &cs, &os), Scalar::factorial(p).recip());
            }
        }
    }
    (closed, open)
}

/// Extract the closed basis of an L∞ algebra as monomials.
pub fn closed_basis(l: &LInfty) -> Vec<Monomial> {
    (0..l.dim()).map(|a| l.element(a)).collect()
}

/// Index of a closed letter.
pub fn closed_index(m: &Monomial) -> usize {
    linear_index(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::Generator;

    /// Heisenberg-type dg Lie algebra: [a, b] = c with a, b in degree 0
    /// (shifted -1) and c in degree 0.
    fn heisenberg() -> LInfty {
        let basis = FreeSCAlgebra::new(vec![
            Generator::new("a", 0, 0),
            Generator::new("b", 0, 0),
            Generator::new("c", 0, 0),
        ])
        .unwrap();
        let mut l = LInfty::abelian(basis);
        // ell(sa, sb) = (-1)^{|sa|} s[a,b] with |sa| = -1
        let c = Poly::monomial(l.element(2), Scalar::ONE);
        l.set(&[0, 1], c.scaled(-Scalar::ONE));
        l
    }

    #[test]
    fn strict_lie_passes_and_flipped_sign_fails() {
        let l = heisenberg();
        let ops = ClosedOnly::new(&l);
        assert!(check_homotopy_jacobi(&ops, &ops.basis(), 4).passed());
        // a non-nilpotent Lie algebra, sl2-like with a flipped sign
        let basis = FreeSCAlgebra::new(vec![
            Generator::new("e", 0, 0),
            Generator::new("f", 0, 0),
            Generator::new("h", 0, 0),
        ])
        .unwrap();
        let mut bad = LInfty::abelian(basis);
        let v = |i: usize, c: i64| Poly::monomial(bad.element(i), Scalar::int(c));
        let (he, hf, ef) = (v(0, 2), v(1, -2), v(2, 1));
        // shifted: ell = -[,] since |s x| = -1; flip the [h,f] sign
        bad.set(&[2, 0], he.scaled(-Scalar::ONE));
        bad.set(&[2, 1], hf);
        bad.set(&[0, 1], ef.scaled(-Scalar::ONE));
        let ops = ClosedOnly::new(&bad);
        let rep = check_homotopy_jacobi(&ops, &ops.basis(), 3);
        assert!(!rep.passed());
        assert!(rep.by_arity["3,0"][1] > 0);
    }

    #[test]
    fn sl2_passes() {
        let basis = FreeSCAlgebra::new(vec![
            Generator::new("e", 0, 0),
            Generator::new("f", 0, 0),
            Generator::new("h", 0, 0),
        ])
        .unwrap();
        let mut l = LInfty::abelian(basis);
        let v = |l: &LInfty, i: usize, c: i64| Poly::monomial(l.element(i), Scalar::int(c));
        let (he, hf, ef) = (v(&l, 0, 2), v(&l, 1, -2), v(&l, 2, 1));
        l.set(&[2, 0], he.scaled(-Scalar::ONE));
        l.set(&[2, 1], hf.scaled(-Scalar::ONE));
        l.set(&[0, 1], ef.scaled(-Scalar::ONE));
        let ops = ClosedOnly::new(&l);
        assert!(check_homotopy_jacobi(&ops, &ops.basis(), 3).passed());
    }
}
