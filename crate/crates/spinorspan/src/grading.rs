//! Bigraded free supercommutative polynomial algebras.
//!
//! Everything downstream is built from four pieces: a [`FreeSCAlgebra`] that
//! fixes the generators and their order, sparse [`Poly`] elements keyed by
//! canonical [`Monomial`]s, graded [`Derivation`]s given by their values on
//! generators, and a [`TruncationWindow`] that makes bases finite.
//!
//! Signs only ever come from degree parity. Weight and auxiliary weights are
//! bookkeeping.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::Serialize;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GradingError {
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("permutation has {perm} entries but {degrees} degrees were given")]
    LengthMismatch { perm: usize, degrees: usize },
    #[error("{0:?} is not a permutation of 0..n")]
    NotAPermutation(Vec<usize>),
    #[error("element has {found} exponents but the algebra has {expected} generators")]
    MixedAlgebras { expected: usize, found: usize },
    #[error("derivation has no image for generator `{0}`")]
    MissingImage(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("image of `{generator}` under a derivation of bidegree {derivation} has a term of bidegree {found}")]
    Inhomogeneous {
        generator: String,
        derivation: Bidegree,
        found: Bidegree,
    },
    #[error("window is infinite: even generator `{0}` has weight {1}; every even generator needs weight at least 1")]
    InfiniteWindow(String, i32),
}

/// The pair (degree, weight).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize)]
pub struct Bidegree {
    pub degree: i32,
    pub weight: i32,
}

impl Bidegree {
    pub const ZERO: Bidegree = Bidegree {
        degree: 0,
        weight: 0,
    };

    pub const fn new(degree: i32, weight: i32) -> Bidegree {
        Bidegree { degree, weight }
    }

    /// Parity used for Koszul signs. Weight never contributes.
    pub fn is_odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }
}

impl Add for Bidegree {
    type Output = Bidegree;
    fn add(self, o: Bidegree) -> Bidegree {
        Bidegree::new(self.degree + o.degree, self.weight + o.weight)
    }
}

impl Sub for Bidegree {
    type Output = Bidegree;
    fn sub(self, o: Bidegree) -> Bidegree {
        Bidegree::new(self.degree - o.degree, self.weight - o.weight)
    }
}

impl Neg for Bidegree {
    type Output = Bidegree;
    fn neg(self) -> Bidegree {
        Bidegree::new(-self.degree, -self.weight)
    }
}

impl fmt::Display for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.degree, self.weight)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub bidegree: Bidegree,
    /// Sign-inert extra gradings such as `w2`.
    pub aux: BTreeMap<String, i32>,
    /// Which block the generator came from (`superspace`, `ce`, `tate`, ...).
    pub origin: String,
}

impl Generator {
    pub fn new(name: impl Into<String>, degree: i32, weight: i32) -> Generator {
        Generator {
            name: name.into(),
            bidegree: Bidegree::new(degree, weight),
            aux: BTreeMap::new(),
            origin: String::new(),
        }
    }

    pub fn with_aux(mut self, key: &str, value: i32) -> Generator {
        self.aux.insert(key.to_string(), value);
        self
    }

    pub fn with_origin(mut self, origin: &str) -> Generator {
        self.origin = origin.to_string();
        self
    }

    pub fn is_odd(&self) -> bool {
        self.bidegree.is_odd()
    }
}

/// Exponent vector over the algebra's generators, in the algebra's order.
///
/// Odd generators have exponent at most one. Ordering is degree-lex: total
/// polynomial degree first, then earlier generators with higher exponents
/// come first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Box<[u8]>);

impl Monomial {
    pub fn one(n: usize) -> Monomial {
        Monomial(vec![0; n].into_boxed_slice())
    }

    pub fn from_exps(exps: Vec<u8>) -> Monomial {
        Monomial(exps.into_boxed_slice())
    }

    pub fn exps(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exp(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn with_exp(&self, i: usize, e: u8) -> Monomial {
        let mut v = self.0.to_vec();
        v[i] = e;
        Monomial(v.into_boxed_slice())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Monomial) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Monomial) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Sparse polynomial. No zero coefficients are ever stored.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Poly(BTreeMap<Monomial, Scalar>);

impl Poly {
    pub fn zero() -> Poly {
        Poly(BTreeMap::new())
    }

    pub fn monomial(m: Monomial, c: Scalar) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn constant(n: usize, c: Scalar) -> Poly {
        Poly::monomial(Monomial::one(n), c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.0.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.0.get(m).copied().unwrap_or(Scalar::ZERO)
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Poly, c: Scalar) {
        if c.is_zero() {
            return;
        }
        for (m, a) in other.terms() {
            self.add_term(m.clone(), *a * c);
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        self.add_scaled(other, Scalar::ONE);
    }

    pub fn scaled(&self, c: Scalar) -> Poly {
        let mut p = Poly::zero();
        p.add_scaled(self, c);
        p
    }

    pub fn plus(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        p.add_assign(other);
        p
    }

    pub fn minus(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        p.add_scaled(other, -Scalar::ONE);
        p
    }

    /// Keep only the terms satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Poly {
        Poly(
            self.0
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        )
    }

    pub fn into_terms(self) -> BTreeMap<Monomial, Scalar> {
        self.0
    }

    pub fn leading(&self) -> Option<(&Monomial, &Scalar)> {
        self.0.iter().next()
    }

    pub fn as_map(&self) -> &BTreeMap<Monomial, Scalar> {
        &self.0
    }

    /// Wrap a map, dropping zero coefficients.
    pub fn from_map(mut map: BTreeMap<Monomial, Scalar>) -> Poly {
        map.retain(|_, c| !c.is_zero());
        Poly(map)
    }
}

impl FromIterator<(Monomial, Scalar)> for Poly {
    fn from_iter<I: IntoIterator<Item = (Monomial, Scalar)>>(iter: I) -> Poly {
        let mut p = Poly::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }
}

/// Finite box of bidegrees. Auxiliary weights can be bounded as well.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruncationWindow {
    pub degree_min: i32,
    pub degree_max: i32,
    pub weight_max: i32,
    pub aux_max: BTreeMap<String, i32>,
}

impl TruncationWindow {
    pub fn new(degree_min: i32, degree_max: i32, weight_max: i32) -> TruncationWindow {
        TruncationWindow {
            degree_min,
            degree_max,
            weight_max,
            aux_max: BTreeMap::new(),
        }
    }

    /// Every degree, weights up to `weight_max`.
    pub fn weights(weight_max: i32) -> TruncationWindow {
        TruncationWindow::new(i32::MIN / 4, i32::MAX / 4, weight_max)
    }

    pub fn contains(&self, b: Bidegree) -> bool {
        b.degree >= self.degree_min && b.degree <= self.degree_max && b.weight <= self.weight_max
    }
}

impl Default for TruncationWindow {
    fn default() -> TruncationWindow {
        TruncationWindow::new(-4, 2, 6)
    }
}

/// Sign of reordering homogeneous elements: the result lists
/// `v[perm[0]], v[perm[1]], ...`. Indices are zero-based.
pub fn koszul_sign(perm: &[usize], degrees: &[i32]) -> Result<i8, GradingError> {
    if perm.len() != degrees.len() {
        return Err(GradingError::LengthMismatch {
            perm: perm.len(),
            degrees: degrees.len(),
        });
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(GradingError::NotAPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    let mut odd = false;
    for a in 0..perm.len() {
        for b in a + 1..perm.len() {
            if perm[a] > perm[b]
                && degrees[perm[a]].rem_euclid(2) == 1
                && degrees[perm[b]].rem_euclid(2) == 1
            {
                odd = !odd;
            }
        }
    }
    Ok(if odd { -1 } else { 1 })
}

/// Free graded-commutative algebra on an ordered list of generators.
#[derive(Clone, Debug)]
pub struct FreeSCAlgebra {
    gens: Vec<Generator>,
    odd: Vec<bool>,
    index: HashMap<String, usize>,
}

impl PartialEq for FreeSCAlgebra {
    fn eq(&self, other: &FreeSCAlgebra) -> bool {
        self.gens == other.gens
    }
}

impl FreeSCAlgebra {
    pub fn new(gens: Vec<Generator>) -> Result<FreeSCAlgebra, GradingError> {
        let mut index = HashMap::new();
        for (i, g) in gens.iter().enumerate() {
            if index.insert(g.name.clone(), i).is_some() {
                return Err(GradingError::DuplicateGenerator(g.name.clone()));
            }
        }
        let odd = gens.iter().map(Generator::is_odd).collect();
        Ok(FreeSCAlgebra { gens, odd, index })
    }

    pub fn empty() -> FreeSCAlgebra {
        FreeSCAlgebra::new(Vec::new()).expect("no generators, no duplicates")
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator(&self, i: usize) -> &Generator {
        &self.gens[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn try_index(&self, name: &str) -> Result<usize, GradingError> {
        self.index_of(name)
            .ok_or_else(|| GradingError::UnknownGenerator(name.to_string()))
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.odd[i]
    }

    pub fn one(&self) -> Poly {
        Poly::constant(self.len(), Scalar::ONE)
    }

    pub fn unit_monomial(&self) -> Monomial {
        Monomial::one(self.len())
    }

    /// The generator as a polynomial.
    pub fn var(&self, name: &str) -> Poly {
        let i = self
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown generator `{name}`"));
        self.var_at(i)
    }

    pub fn var_at(&self, i: usize) -> Poly {
        Poly::monomial(self.unit_monomial().with_exp(i, 1), Scalar::ONE)
    }

    pub fn bidegree(&self, m: &Monomial) -> Bidegree {
        m.exps()
            .iter()
            .zip(&self.gens)
            .fold(Bidegree::ZERO, |acc, (&e, g)| {
                acc + Bidegree::new(g.bidegree.degree * e as i32, g.bidegree.weight * e as i32)
            })
    }

    pub fn aux_weight(&self, m: &Monomial, key: &str) -> i32 {
        m.exps()
            .iter()
            .zip(&self.gens)
            .map(|(&e, g)| g.aux.get(key).copied().unwrap_or(0) * e as i32)
            .sum()
    }

    pub fn is_odd_monomial(&self, m: &Monomial) -> bool {
        self.bidegree(m).is_odd()
    }

    fn check(&self, p: &Poly) -> Result<(), GradingError> {
        match p.terms().next() {
            Some((m, _)) if m.len() != self.len() => Err(GradingError::MixedAlgebras {
                expected: self.len(),
                found: m.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Product of two monomials: `None` if an odd generator repeats,
    /// otherwise the sign (true = negative) and the canonical monomial.
    pub fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(bool, Monomial)> {
        let mut neg = false;
        // odd generators of `a` strictly after position j, counted right to left
        let mut odd_after = 0u32;
        let n = self.len();
        let mut out = vec![0u8; n];
        for j in (0..n).rev() {
            let (ea, eb) = (a.exp(j), b.exp(j));
            if self.odd[j] {
                if ea > 0 && eb > 0 {
                    return None;
                }
                if eb > 0 && odd_after % 2 == 1 {
                    neg = !neg;
                }
                if ea > 0 {
                    odd_after += 1;
                }
            }
            out[j] = ea + eb;
        }
        Some((neg, Monomial::from_exps(out)))
    }

    /// Supercommutative product.
    pub fn multiply(&self, a: &Poly, b: &Poly) -> Result<Poly, GradingError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(a, b))
    }

    /// Product without the membership check.
    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                if let Some((neg, m)) = self.mul_monomials(ma, mb) {
                    let c = *ca * *cb;
                    out.add_term(m, if neg { -c } else { c });
                }
            }
        }
        out
    }

    pub fn mul_mono_poly(&self, a: &Monomial, b: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (mb, cb) in b.terms() {
            if let Some((neg, m)) = self.mul_monomials(a, mb) {
                out.add_term(m, if neg { -*cb } else { *cb });
            }
        }
        out
    }

    pub fn mul_poly_mono(&self, a: &Poly, b: &Monomial) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in a.terms() {
            if let Some((neg, m)) = self.mul_monomials(ma, b) {
                out.add_term(m, if neg { -*ca } else { *ca });
            }
        }
        out
    }

    pub fn product(&self, factors: &[Poly]) -> Poly {
        factors.iter().fold(self.one(), |acc, f| self.mul(&acc, f))
    }

    /// Monomials in the window, in monomial order.
    pub fn window_basis(&self, w: &TruncationWindow) -> Result<Vec<Monomial>, GradingError> {
        for g in &self.gens {
            if !g.is_odd() && g.bidegree.weight < 1 {
                return Err(GradingError::InfiniteWindow(
                    g.name.clone(),
                    g.bidegree.weight,
                ));
            }
        }
        let mut out = Vec::new();
        let mut exps = vec![0u8; self.len()];
        self.enumerate(0, 0, w, &mut exps, &mut out);
        out.retain(|m| {
            let b = self.bidegree(m);
            b.degree >= w.degree_min
                && b.degree <= w.degree_max
                && b.weight <= w.weight_max
                && w.aux_max.iter().all(|(k, &v)| self.aux_weight(m, k) <= v)
        });
        out.sort();
        Ok(out)
    }

    fn enumerate(
        &self,
        i: usize,
        weight: i32,
        w: &TruncationWindow,
        exps: &mut Vec<u8>,
        out: &mut Vec<Monomial>,
    ) {
        // odd generators of weight <= 0 cannot push the weight up, so the
        // bound is only checked on complete monomials for them
        let min_rest: i32 = self.gens[i..]
            .iter()
            .filter(|g| g.is_odd() && g.bidegree.weight < 0)
            .map(|g| g.bidegree.weight)
            .sum();
        if weight + min_rest > w.weight_max {
            return;
        }
        if i == self.len() {
            out.push(Monomial::from_exps(exps.clone()));
            return;
        }
        let g = &self.gens[i];
        let max_e: i32 = if g.is_odd() {
            1
        } else {
            (w.weight_max - weight - min_rest).max(0) / g.bidegree.weight
        };
        for e in 0..=max_e {
            exps[i] = e as u8;
            self.enumerate(i + 1, weight + e * g.bidegree.weight, w, exps, out);
        }
        exps[i] = 0;
    }

    /// Window basis grouped by bidegree.
    pub fn basis_by_bidegree(
        &self,
        w: &TruncationWindow,
    ) -> Result<BTreeMap<Bidegree, Vec<Monomial>>, GradingError> {
        let mut map: BTreeMap<Bidegree, Vec<Monomial>> = BTreeMap::new();
        for m in self.window_basis(w)? {
            map.entry(self.bidegree(&m)).or_default().push(m);
        }
        Ok(map)
    }

    pub fn fmt_monomial(&self, m: &Monomial) -> String {
        let parts: Vec<String> = m
            .exps()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    self.gens[i].name.clone()
                } else {
                    format!("{}^{}", self.gens[i].name, e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    pub fn fmt_poly(&self, p: &Poly) -> String {
        if p.is_zero() {
            return "0".to_string();
        }
        p.terms()
            .map(|(m, c)| format!("({}) {}", c, self.fmt_monomial(m)))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Parse a monomial written as `name^k*name*...` (or `1`).
    pub fn parse_monomial(&self, s: &str) -> Result<Monomial, GradingError> {
        let mut m = self.unit_monomial();
        let s = s.trim();
        if s == "1" || s.is_empty() {
            return Ok(m);
        }
        for part in s.split('*') {
            let (name, e) = match part.split_once('^') {
                Some((n, e)) => (n.trim(), e.trim().parse::<u8>().unwrap_or(0)),
                None => (part.trim(), 1),
            };
            let i = self.try_index(name)?;
            m = m.with_exp(i, m.exp(i) + e);
        }
        Ok(m)
    }
}

/// Graded derivation given by its values on generators.
///
/// Twist coefficients carry a bookkeeping weight of one each, so a term may
/// sit below the nominal weight `bidegree.weight`; the degree is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    pub bidegree: Bidegree,
    images: Vec<Option<Poly>>,
}

impl Derivation {
    pub fn zero(alg: &FreeSCAlgebra, bidegree: Bidegree) -> Derivation {
        Derivation {
            bidegree,
            images: vec![Some(Poly::zero()); alg.len()],
        }
    }

    /// Images by generator name. Generators not mentioned stay undefined.
    pub fn partial(
        alg: &FreeSCAlgebra,
        bidegree: Bidegree,
        images: &[(&str, Poly)],
    ) -> Result<Derivation, GradingError> {
        let mut d = Derivation {
            bidegree,
            images: vec![None; alg.len()],
        };
        for (name, p) in images {
            let i = alg.try_index(name)?;
            d.images[i] = Some(p.clone());
        }
        d.validate(alg)?;
        Ok(d)
    }

    /// Images by generator name; unmentioned generators map to zero.
    pub fn from_images(
        alg: &FreeSCAlgebra,
        bidegree: Bidegree,
        images: &[(&str, Poly)],
    ) -> Result<Derivation, GradingError> {
        let mut d = Derivation::zero(alg, bidegree);
        for (name, p) in images {
            let i = alg.try_index(name)?;
            d.images[i] = Some(p.clone());
        }
        d.validate(alg)?;
        Ok(d)
    }

    pub fn from_vec(
        alg: &FreeSCAlgebra,
        bidegree: Bidegree,
        images: Vec<Poly>,
    ) -> Result<Derivation, GradingError> {
        assert_eq!(images.len(), alg.len());
        let d = Derivation {
            bidegree,
            images: images.into_iter().map(Some).collect(),
        };
        d.validate(alg)?;
        Ok(d)
    }

    fn validate(&self, alg: &FreeSCAlgebra) -> Result<(), GradingError> {
        for (i, img) in self.images.iter().enumerate() {
            let Some(img) = img else { continue };
            alg.check(img)?;
            let target = alg.generator(i).bidegree + self.bidegree;
            for (m, _) in img.terms() {
                let b = alg.bidegree(m);
                if b.degree != target.degree || b.weight > target.weight {
                    return Err(GradingError::Inhomogeneous {
                        generator: alg.generator(i).name.clone(),
                        derivation: self.bidegree,
                        found: b,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn image(&self, i: usize) -> Option<&Poly> {
        self.images[i].as_ref()
    }

    pub fn is_odd(&self) -> bool {
        self.bidegree.is_odd()
    }

    pub fn is_zero(&self) -> bool {
        self.images
            .iter()
            .all(|p| p.as_ref().is_none_or(Poly::is_zero))
    }

    /// Sum of two derivations of the same bidegree.
    pub fn plus(&self, other: &Derivation) -> Derivation {
        assert_eq!(self.bidegree.degree, other.bidegree.degree);
        let images = self
            .images
            .iter()
            .zip(&other.images)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some(a.plus(b)),
                _ => None,
            })
            .collect();
        Derivation {
            bidegree: Bidegree::new(
                self.bidegree.degree,
                self.bidegree.weight.max(other.bidegree.weight),
            ),
            images,
        }
    }

    pub fn scaled(&self, c: Scalar) -> Derivation {
        Derivation {
            bidegree: self.bidegree,
            images: self
                .images
                .iter()
                .map(|p| p.as_ref().map(|p| p.scaled(c)))
                .collect(),
        }
    }

    /// Graded Leibniz extension.
    pub fn apply(&self, alg: &FreeSCAlgebra, p: &Poly) -> Result<Poly, GradingError> {
        alg.check(p)?;
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            self.apply_monomial_into(alg, m, *c, &mut out)?;
        }
        Ok(out)
    }

    /// Leibniz extension for derivations known to be total.
    pub fn act(&self, alg: &FreeSCAlgebra, p: &Poly) -> Poly {
        self.apply(alg, p)
            .expect("derivation defined on every generator")
    }

    pub fn apply_monomial_into(
        &self,
        alg: &FreeSCAlgebra,
        m: &Monomial,
        c: Scalar,
        out: &mut Poly,
    ) -> Result<(), GradingError> {
        let d_odd = self.is_odd();
        let mut prefix_odd = false;
        for i in 0..m.len() {
            let e = m.exp(i);
            if e == 0 {
                continue;
            }
            let img = self.images[i]
                .as_ref()
                .ok_or_else(|| GradingError::MissingImage(alg.generator(i).name.clone()))?;
            if !img.is_zero() {
                let mut prefix = m.exps()[..=i].to_vec();
                prefix[i] -= 1;
                prefix.resize(m.len(), 0);
                let mut suffix = vec![0u8; m.len()];
                suffix[i + 1..].copy_from_slice(&m.exps()[i + 1..]);
                let left = alg.mul_mono_poly(&Monomial::from_exps(prefix), img);
                let term = alg.mul_poly_mono(&left, &Monomial::from_exps(suffix));
                let mut k = c * Scalar::int(e as i64);
                if d_odd && prefix_odd {
                    k = -k;
                }
                out.add_scaled(&term, k);
            }
            if alg.is_odd(i) && e % 2 == 1 {
                prefix_odd = !prefix_odd;
            }
        }
        Ok(())
    }
}

/// Outcome of a square-zero check: the generators where `D^2` is nonzero.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SquareZeroReport {
    pub checked: usize,
    pub violations: Vec<(String, String)>,
}

impl SquareZeroReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `D^2` on every generator; by Leibniz this covers the whole algebra
/// (for odd `D`, `D^2 = [D,D]/2` is itself a derivation).
pub fn square_zero_check(
    alg: &FreeSCAlgebra,
    d: &Derivation,
) -> Result<SquareZeroReport, GradingError> {
    let mut report = SquareZeroReport::default();
    for i in 0..alg.len() {
        let once = d.apply(alg, &alg.var_at(i))?;
        let twice = d.apply(alg, &once)?;
        report.checked += 1;
        if !twice.is_zero() {
            report
                .violations
                .push((alg.generator(i).name.clone(), alg.fmt_poly(&twice)));
        }
    }
    Ok(report)
}

/// Algebra morphism determined by images of generators (a substitution).
#[derive(Clone, Debug)]
pub struct AlgebraMap {
    images: Vec<Poly>,
}

impl AlgebraMap {
    /// `images[i]` is the image of source generator `i` in the target.
    pub fn new(images: Vec<Poly>) -> AlgebraMap {
        AlgebraMap { images }
    }

    /// Send each source generator to the target generator of the same name,
    /// or to zero when the target lacks it.
    pub fn by_name(source: &FreeSCAlgebra, target: &FreeSCAlgebra) -> AlgebraMap {
        AlgebraMap {
            images: source
                .generators()
                .iter()
                .map(|g| match target.index_of(&g.name) {
                    Some(j) => target.var_at(j),
                    None => Poly::zero(),
                })
                .collect(),
        }
    }

    pub fn apply(&self, target: &FreeSCAlgebra, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            let mut acc = target.one();
            for (i, &e) in m.exps().iter().enumerate() {
                for _ in 0..e {
                    acc = target.mul(&acc, &self.images[i]);
                }
            }
            out.add_scaled(&acc, *c);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam2() -> FreeSCAlgebra {
        FreeSCAlgebra::new(vec![Generator::new("l1", 0, 1), Generator::new("l2", 0, 1)]).unwrap()
    }

    fn theta2() -> FreeSCAlgebra {
        FreeSCAlgebra::new(vec![
            Generator::new("t1", -1, 1),
            Generator::new("t2", -1, 1),
        ])
        .unwrap()
    }

    #[test]
    fn koszul_examples() {
        assert_eq!(koszul_sign(&[0, 1, 2], &[1, 1, 1]).unwrap(), 1);
        assert_eq!(koszul_sign(&[1, 0], &[1, 1]).unwrap(), -1);
        assert_eq!(koszul_sign(&[1, 2, 0], &[1, 1, 1]).unwrap(), 1);
        assert_eq!(koszul_sign(&[1, 0], &[2, 1]).unwrap(), 1);
        assert!(matches!(
            koszul_sign(&[0, 1], &[1]),
            Err(GradingError::LengthMismatch { .. })
        ));
        assert!(koszul_sign(&[0, 0], &[1, 1]).is_err());
    }

    #[test]
    fn odd_square_vanishes_and_anticommutes() {
        let a = theta2();
        let (t1, t2) = (a.var("t1"), a.var("t2"));
        assert!(a.multiply(&t1, &t1).unwrap().is_zero());
        let ab = a.multiply(&t1, &t2).unwrap();
        let ba = a.multiply(&t2, &t1).unwrap();
        assert_eq!(ab, ba.scaled(-Scalar::ONE));
    }

    #[test]
    fn difference_of_squares() {
        let a = lam2();
        let (l1, l2) = (a.var("l1"), a.var("l2"));
        let lhs = a.multiply(&l1.plus(&l2), &l1.minus(&l2)).unwrap();
        let rhs = a.mul(&l1, &l1).minus(&a.mul(&l2, &l2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mixed_algebras_rejected() {
        let a = lam2();
        let b = FreeSCAlgebra::new(vec![Generator::new("x", -2, 2)]).unwrap();
        assert!(a.multiply(&a.var("l1"), &b.var("x")).is_err());
    }

    #[test]
    fn derivation_examples() {
        let a = FreeSCAlgebra::new(vec![
            Generator::new("t1", -1, 1),
            Generator::new("t2", -1, 1),
            Generator::new("l1", 0, 1),
        ])
        .unwrap();
        let d = Derivation::from_images(&a, Bidegree::new(1, 0), &[("t1", a.var("l1"))]).unwrap();
        let t1t2 = a.mul(&a.var("t1"), &a.var("t2"));
        assert_eq!(
            d.apply(&a, &t1t2).unwrap(),
            a.mul(&a.var("l1"), &a.var("t2"))
        );
        assert!(d.apply(&a, &a.one()).unwrap().is_zero());

        let partial = Derivation::partial(&a, Bidegree::new(1, 0), &[("t1", a.var("l1"))]).unwrap();
        assert_eq!(
            partial.apply(&a, &t1t2),
            Err(GradingError::MissingImage("t2".to_string()))
        );
    }

    #[test]
    fn window_basis_examples() {
        let a = lam2();
        let basis = a.window_basis(&TruncationWindow::new(0, 0, 2)).unwrap();
        let names: Vec<String> = basis.iter().map(|m| a.fmt_monomial(m)).collect();
        assert_eq!(names, ["1", "l1", "l2", "l1^2", "l1*l2", "l2^2"]);
        let t = theta2();
        assert_eq!(
            t.window_basis(&TruncationWindow::weights(5)).unwrap().len(),
            4
        );
        assert_eq!(
            FreeSCAlgebra::empty()
                .window_basis(&TruncationWindow::weights(3))
                .unwrap()
                .len(),
            1
        );
        let bad = FreeSCAlgebra::new(vec![Generator::new("z", 0, 0)]).unwrap();
        assert!(matches!(
            bad.window_basis(&TruncationWindow::weights(3)),
            Err(GradingError::InfiniteWindow(..))
        ));
    }
}
