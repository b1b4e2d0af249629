//! L∞ algebras as tables of shifted brackets, and the dictionary with
//! Chevalley–Eilenberg cochains.
//!
//! Brackets are stored on the suspension: `ell(e_a1, .., e_ak)` is graded
//! symmetric for the shifted degrees `|e| - 1` and has degree one. Basis
//! elements are the generators of a [`FreeSCAlgebra`] used only for its
//! linear part, so vectors are linear [`Poly`]s.
//!
//! A CE generator `xi^a` dual to `e_a` has degree `1 - |e_a|` and weight
//! `-weight(e_a)`, and
//!
//! ```text
//! ell^j(e_a1, .., e_ak) = (∂_ak ∘ .. ∘ ∂_a1)(d xi^j) at 0
//! ```
//!
//! with left derivatives, `∂_a1` applied first. The opposite order only
//! differs by an overall sign on purely odd or purely even inputs, but breaks
//! the Jacobi identities once parities mix.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::grading::{
    AlgebraMap, Bidegree, Derivation, FreeSCAlgebra, Generator, GradingError, Monomial, Poly,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LInftyError {
    #[error(transparent)]
    Grading(#[from] GradingError),
    #[error("not a Maurer-Cartan element, residual {0}")]
    NotMaurerCartan(String),
    #[error("element {0} is not of shifted degree zero")]
    BadTwistDegree(String),
    #[error("CE generator {0} has no dual basis element")]
    NoDual(String),
}

/// Shifted degree of a basis monomial of a linear algebra.
pub fn shifted(alg: &FreeSCAlgebra, m: &Monomial) -> i32 {
    alg.bidegree(m).degree - 1
}

/// Index of the generator a linear monomial represents.
pub fn linear_index(m: &Monomial) -> usize {
    let mut idx = None;
    for (i, &e) in m.exps().iter().enumerate() {
        if e != 0 {
            assert!(e == 1 && idx.is_none(), "not a linear monomial");
            idx = Some(i);
        }
    }
    idx.expect("not a linear monomial")
}

/// Sort indices by generator order; returns the Koszul sign for the given
/// shifted degrees, or `None` if an odd element repeats.
pub fn sort_with_sign(
    items: &[usize],
    degree: impl Fn(usize) -> i32,
) -> Option<(Vec<usize>, Scalar)> {
    let mut v = items.to_vec();
    let mut neg = false;
    // insertion sort, tracking swaps of odd pairs
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            if degree(v[j - 1]).rem_euclid(2) == 1 && degree(v[j]).rem_euclid(2) == 1 {
                neg = !neg;
            }
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] && degree(w[0]).rem_euclid(2) == 1 {
            return None;
        }
    }
    Some((v, Scalar::sign(neg)))
}

/// An L∞ algebra (possibly curved) on a finite basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LInfty {
    pub basis: FreeSCAlgebra,
    table: BTreeMap<Vec<usize>, Poly>,
    pub curvature: Poly,
}

/// One stored structure constant, for dumps.
#[derive(Clone, Debug, Serialize, PartialEq, Eq, PartialOrd, Ord)]
pub struct Constant {
    pub inputs: Vec<String>,
    pub output: String,
    pub coeff: Scalar,
}

impl LInfty {
    pub fn abelian(basis: FreeSCAlgebra) -> LInfty {
        LInfty {
            basis,
            table: BTreeMap::new(),
            curvature: Poly::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self, a: usize) -> i32 {
        self.basis.generator(a).bidegree.degree - 1
    }

    pub fn element(&self, a: usize) -> Monomial {
        self.basis.unit_monomial().with_exp(a, 1)
    }

    /// Set `ell(e_inputs)`; inputs in any order.
    pub fn set(&mut self, inputs: &[usize], value: Poly) {
        let Some((key, sign)) = sort_with_sign(inputs, |a| self.degree(a)) else {
            assert!(value.is_zero(), "odd repeated inputs must bracket to zero");
            return;
        };
        if key.is_empty() {
            self.curvature = value.scaled(sign);
        } else if value.is_zero() {
            self.table.remove(&key);
        } else {
            self.table.insert(key, value.scaled(sign));
        }
    }

    /// Bracket on basis indices in any order.
    pub fn ell_indices(&self, inputs: &[usize]) -> Poly {
        if inputs.is_empty() {
            return self.curvature.clone();
        }
        match sort_with_sign(inputs, |a| self.degree(a)) {
            Some((key, sign)) => self
                .table
                .get(&key)
                .map_or_else(Poly::zero, |v| v.scaled(sign)),
            None => Poly::zero(),
        }
    }

    /// Bracket on basis monomials.
    pub fn ell(&self, inputs: &[Monomial]) -> Poly {
        let idx: Vec<usize> = inputs.iter().map(linear_index).collect();
        self.ell_indices(&idx)
    }

    /// Multilinear extension to vectors.
    pub fn ell_vectors(&self, inputs: &[Poly]) -> Poly {
        let mut out = Poly::zero();
        let mut stack: Vec<(Vec<Monomial>, Scalar)> = vec![(Vec::new(), Scalar::ONE)];
        for v in inputs {
            let mut next = Vec::new();
            for (ms, c) in &stack {
                for (m, k) in v.terms() {
                    let mut ms2 = ms.clone();
                    ms2.push(m.clone());
                    next.push((ms2, *c * *k));
                }
            }
            stack = next;
        }
        for (ms, c) in stack {
            out.add_scaled(&self.ell(&ms), c);
        }
        out
    }

    pub fn max_arity(&self) -> usize {
        self.table.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Poly)> {
        self.table.iter()
    }

    pub fn is_flat(&self) -> bool {
        self.curvature.is_zero()
    }

    /// Brackets `mu_k` in the unshifted convention.
    pub fn mu(&self, inputs: &[usize]) -> Poly {
        let k = inputs.len();
        let mut exp = 0i64;
        for (i, &a) in inputs.iter().enumerate() {
            exp += (k - 1 - i) as i64 * self.degree(a) as i64;
        }
        self.ell_indices(inputs)
            .scaled(Scalar::sign(exp.rem_euclid(2) == 1))
    }

    pub fn constants(&self) -> Vec<Constant> {
        let mut out = Vec::new();
        let name = |a: usize| self.basis.generator(a).name.clone();
        for (m, c) in self.curvature.terms() {
            out.push(Constant {
                inputs: vec![],
                output: name(linear_index(m)),
                coeff: *c,
            });
        }
        for (k, v) in &self.table {
            for (m, c) in v.terms() {
                out.push(Constant {
                    inputs: k.iter().map(|&a| name(a)).collect(),
                    output: name(linear_index(m)),
                    coeff: *c,
                });
            }
        }
        out.sort();
        out
    }

    /// Restriction to a subset of basis elements (an ideal or subalgebra);
    /// terms leaving the subset are reported as the second component.
    pub fn restrict(&self, keep: &[usize]) -> (LInfty, Vec<Constant>) {
        let gens: Vec<Generator> = keep
            .iter()
            .map(|&a| self.basis.generator(a).clone())
            .collect();
        let basis = FreeSCAlgebra::new(gens).expect("subset of a valid basis");
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut out = LInfty::abelian(basis);
        let mut leaks = Vec::new();
        let remap = |v: &Poly, inputs: &[usize], leaks: &mut Vec<Constant>| -> Poly {
            let mut r = Poly::zero();
            for (m, c) in v.terms() {
                let j = linear_index(m);
                match pos.get(&j) {
                    Some(&k) => r.add_term(out_unit(keep.len(), k), *c),
                    None => leaks.push(Constant {
                        inputs: inputs
                            .iter()
                            .map(|&a| self.basis.generator(a).name.clone())
                            .collect(),
                        output: self.basis.generator(j).name.clone(),
                        coeff: *c,
                    }),
                }
            }
            r
        };
        for (key, v) in &self.table {
            if key.iter().all(|a| pos.contains_key(a)) {
                let new_key: Vec<usize> = key.iter().map(|a| pos[a]).collect();
                let r = remap(v, key, &mut leaks);
                if !r.is_zero() {
                    out.table.insert(new_key, r);
                }
            }
        }
        out.curvature = remap(&self.curvature, &[], &mut leaks);
        (out, leaks)
    }
}

fn out_unit(n: usize, k: usize) -> Monomial {
    Monomial::one(n).with_exp(k, 1)
}

/// Value of `∂_ak ∘ .. ∘ ∂_a1` at zero on a monomial equal to the product of
/// those generators in sorted order.
fn derivative_constant(alg: &FreeSCAlgebra, m: &Monomial) -> Scalar {
    let mut factors = Vec::new();
    for (i, &e) in m.exps().iter().enumerate() {
        for _ in 0..e {
            factors.push(i);
        }
    }
    let mut p = Poly::monomial(m.clone(), Scalar::ONE);
    for &i in factors.iter() {
        p = partial(alg, i, &p);
    }
    p.coeff(&alg.unit_monomial())
}

/// Left derivative with respect to generator `i`.
pub fn partial(alg: &FreeSCAlgebra, i: usize, p: &Poly) -> Poly {
    let mut images = vec![Poly::zero(); alg.len()];
    images[i] = alg.one();
    let b = -alg.generator(i).bidegree;
    let d = Derivation::from_vec(alg, b, images).expect("partial derivative is homogeneous");
    d.act(alg, p)
}

/// The basis algebra dual to a CE algebra: same generator order, names given,
/// bidegree `(1 - deg, -weight)`.
pub fn dual_basis(ce: &FreeSCAlgebra, names: &[String]) -> FreeSCAlgebra {
    let gens = ce
        .generators()
        .iter()
        .zip(names)
        .map(|(g, n)| {
            let mut d = Generator::new(n.clone(), 1 - g.bidegree.degree, -g.bidegree.weight);
            d.origin = g.origin.clone();
            d
        })
        .collect();
    FreeSCAlgebra::new(gens).expect("dual names are unique")
}

/// Read brackets off a CE differential given by its value on each generator.
/// Monomials of polynomial degree above `arity_max` are ignored.
pub fn ce_to_brackets(
    ce: &FreeSCAlgebra,
    d_of: impl Fn(usize) -> Poly,
    basis: FreeSCAlgebra,
    arity_max: usize,
) -> LInfty {
    assert_eq!(ce.len(), basis.len());
    let mut l = LInfty::abelian(basis);
    let n = ce.len();
    let mut acc: BTreeMap<Vec<usize>, Poly> = BTreeMap::new();
    for j in 0..n {
        for (m, c) in d_of(j).terms() {
            if m.total() as usize > arity_max {
                continue;
            }
            let k = derivative_constant(ce, m);
            let mut key = Vec::new();
            for (i, &e) in m.exps().iter().enumerate() {
                for _ in 0..e {
                    key.push(i);
                }
            }
            acc.entry(key)
                .or_insert_with(Poly::zero)
                .add_term(out_unit(n, j), *c * k);
        }
    }
    for (key, v) in acc {
        if key.is_empty() {
            l.curvature = v;
        } else if !v.is_zero() {
            l.table.insert(key, v);
        }
    }
    l
}

/// CE differential of an L∞ algebra, as images of the dual generators.
pub fn brackets_to_ce(l: &LInfty, ce: &FreeSCAlgebra) -> Vec<Poly> {
    let n = l.dim();
    let mut images = vec![Poly::zero(); n];
    let mut put = |key: &[usize], v: &Poly| {
        let mut e = vec![0u8; n];
        for &a in key {
            e[a] += 1;
        }
        let m = Monomial::from_exps(e);
        let k = derivative_constant(ce, &m);
        for (o, c) in v.terms() {
            images[linear_index(o)].add_term(m.clone(), *c / k);
        }
    };
    put(&[], &l.curvature);
    for (key, v) in &l.table {
        put(key, v);
    }
    images
}

/// `sum_n 1/n! ell_n(Q, .., Q)`, including curvature.
pub fn mc_residual(l: &LInfty, q: &Poly) -> Poly {
    let mut out = l.curvature.clone();
    let mut inputs = Vec::new();
    for n in 1..=l.max_arity() {
        inputs.push(q.clone());
        out.add_scaled(&l.ell_vectors(&inputs), Scalar::factorial(n).recip());
    }
    out
}

fn check_twist_degree(l: &LInfty, q: &Poly) -> Result<(), LInftyError> {
    for (m, _) in q.terms() {
        if shifted(&l.basis, m) != 0 {
            return Err(LInftyError::BadTwistDegree(l.basis.fmt_monomial(m)));
        }
    }
    Ok(())
}

/// Twist by a Maurer–Cartan element:
/// `ell^Q_k(x..) = sum_n 1/n! ell_{n+k}(Q^n, x..)`, tabulated up to `arity_max`.
pub fn twist_linfty(l: &LInfty, q: &Poly, arity_max: usize) -> Result<LInfty, LInftyError> {
    check_twist_degree(l, q)?;
    let r = mc_residual(l, q);
    if !r.is_zero() {
        return Err(LInftyError::NotMaurerCartan(l.basis.fmt_poly(&r)));
    }
    Ok(twist_unchecked(l, q, arity_max))
}

/// The same sums without the Maurer–Cartan check; the arity-0 part is the
/// residual, which becomes the curvature.
pub fn twist_unchecked(l: &LInfty, q: &Poly, arity_max: usize) -> LInfty {
    let mut out = LInfty::abelian(l.basis.clone());
    out.curvature = mc_residual(l, q);
    let top = l.max_arity();
    for key in sorted_tuples(l, arity_max.min(top)) {
        let mut v = Poly::zero();
        let ins: Vec<Poly> = key
            .iter()
            .map(|&a| Poly::monomial(l.element(a), Scalar::ONE))
            .collect();
        for n in 0..=(top - key.len()) {
            let mut all = vec![q.clone(); n];
            all.extend(ins.iter().cloned());
            v.add_scaled(&l.ell_vectors(&all), Scalar::factorial(n).recip());
        }
        if !v.is_zero() {
            out.table.insert(key, v);
        }
    }
    out
}

/// All sorted index tuples of length `1..=k` without repeated odd entries.
pub fn sorted_tuples(l: &LInfty, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(l: &LInfty, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == k {
            return;
        }
        for a in start..l.dim() {
            if cur.last() == Some(&a) && l.degree(a).rem_euclid(2) == 1 {
                continue;
            }
            cur.push(a);
            rec(l, k, a, cur, out);
            cur.pop();
        }
    }
    rec(l, k, 0, &mut Vec::new(), &mut out);
    out
}

/// CE substitution `xi -> xi + Q` on the even generators listed in `shift`.
pub fn twist_ce(ce: &FreeSCAlgebra, d_images: &[Poly], shift: &[(usize, Scalar)]) -> Vec<Poly> {
    let mut images: Vec<Poly> = (0..ce.len()).map(|i| ce.var_at(i)).collect();
    for &(i, c) in shift {
        assert!(!ce.is_odd(i), "only even generators can be shifted");
        images[i] = images[i].plus(&ce.one().scaled(c));
    }
    let map = AlgebraMap::new(images);
    d_images.iter().map(|p| map.apply(ce, p)).collect()
}

/// Bidegree of a bracket output, for reports.
pub fn bracket_bidegree(l: &LInfty, inputs: &[usize]) -> Bidegree {
    let mut b = Bidegree::new(2 - inputs.len() as i32, 0);
    for &a in inputs {
        b = b + l.basis.generator(a).bidegree;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1_ce() -> (FreeSCAlgebra, Vec<Poly>) {
        let ce = FreeSCAlgebra::new(vec![
            Generator::new("l1", 0, 1),
            Generator::new("l2", 0, 1),
            Generator::new("v1", -1, 2),
        ])
        .unwrap();
        let d = vec![
            Poly::zero(),
            Poly::zero(),
            ce.mul(&ce.var("l1"), &ce.var("l2")),
        ];
        (ce, d)
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn t1_bracket_from_ce() {
        let (ce, d) = t1_ce();
        let basis = dual_basis(&ce, &names(&["d1", "d2", "e1"]));
        let l = ce_to_brackets(&ce, |j| d[j].clone(), basis, 4);
        let e1 = Poly::monomial(l.element(2), Scalar::ONE);
        assert_eq!(l.ell_indices(&[0, 1]), e1);
        assert_eq!(l.ell_indices(&[1, 0]), e1);
        assert!(l.ell_indices(&[0, 0]).is_zero());
        assert_eq!(l.mu(&[0, 1]), e1);
        let back = brackets_to_ce(&l, &ce);
        assert_eq!(back, d);
    }

    #[test]
    fn abelian_round_trip() {
        let (ce, _) = t1_ce();
        let basis = dual_basis(&ce, &names(&["d1", "d2", "e1"]));
        let l = ce_to_brackets(&ce, |_| Poly::zero(), basis, 4);
        assert_eq!(l.max_arity(), 0);
        assert!(brackets_to_ce(&l, &ce).iter().all(Poly::is_zero));
    }

    #[test]
    fn twisting_by_zero_is_identity_and_curvature_appears() {
        let (ce, d) = t1_ce();
        let basis = dual_basis(&ce, &names(&["d1", "d2", "e1"]));
        let l = ce_to_brackets(&ce, |j| d[j].clone(), basis.clone(), 4);
        assert_eq!(twist_linfty(&l, &Poly::zero(), 4).unwrap(), l);
        let q = Poly::monomial(l.element(0), Scalar::ONE);
        let lq = twist_linfty(&l, &q, 4).unwrap();
        // ad_Q: d2 -> e1
        assert_eq!(
            lq.ell_indices(&[1]),
            Poly::monomial(l.element(2), Scalar::ONE)
        );
        let twisted = twist_ce(&ce, &d, &[(0, Scalar::ONE)]);
        let via_ce = ce_to_brackets(&ce, |j| twisted[j].clone(), basis, 4);
        assert_eq!(via_ce, lq);
        // both components nonzero: not MC
        let bad = Poly::monomial(l.element(0), Scalar::ONE)
            .plus(&Poly::monomial(l.element(1), Scalar::ONE));
        assert!(matches!(
            twist_linfty(&l, &bad, 4),
            Err(LInftyError::NotMaurerCartan(_))
        ));
    }
}
