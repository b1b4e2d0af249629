//! Cohomology, strong deformation retracts and homological perturbation on
//! finite windows.
//!
//! A [`Retract`] is anything providing `i`, `p`, `h` and both differentials on
//! monomials. [`BlockRetract`] builds one for an arbitrary finite complex by
//! splitting each bidegree into (chosen preimages) + (image) + (classes).
//! [`TensorRetract`] extends a retract by spectator generators, and
//! [`PerturbedRetract`] applies the perturbation lemma lazily.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use serde::Serialize;

use crate::grading::{Bidegree, FreeSCAlgebra, Generator, Monomial, Poly, TruncationWindow};
use crate::linalg::Echelon;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HomologyError {
    #[error("perturbation is not small: the series did not terminate within {cap} steps (filtration: {filtration})")]
    NotSmall { cap: usize, filtration: String },
    #[error("differential does not square to zero at {0}")]
    NotSquareZero(String),
}

pub type LinearFn = Rc<dyn Fn(&Monomial) -> Poly>;

/// Extend a map on monomials linearly.
pub fn on(f: impl Fn(&Monomial) -> Poly, v: &Poly) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in v.terms() {
        out.add_scaled(&f(m), *c);
    }
    out
}

/// Finite cochain complex spanned by monomials, graded by bidegree, with a
/// differential of bidegree (1,0).
#[derive(Clone)]
pub struct ChainComplex {
    pub alg: FreeSCAlgebra,
    pub bases: BTreeMap<Bidegree, Vec<Monomial>>,
    d: LinearFn,
    members: Rc<BTreeSet<Monomial>>,
    /// Bidegrees at a truncation edge whose cohomology may differ from the
    /// untruncated complex.
    pub untrusted: BTreeSet<Bidegree>,
    degree_only: bool,
}

impl ChainComplex {
    pub fn new(
        alg: FreeSCAlgebra,
        bases: BTreeMap<Bidegree, Vec<Monomial>>,
        d: LinearFn,
    ) -> ChainComplex {
        let members = bases.values().flatten().cloned().collect();
        ChainComplex {
            alg,
            bases,
            d,
            members: Rc::new(members),
            untrusted: BTreeSet::new(),
            degree_only: false,
        }
    }

    /// Blocks are keyed by degree alone (weight 0), for differentials that
    /// do not preserve weight.
    pub fn by_degree_only(mut self) -> ChainComplex {
        self.degree_only = true;
        self
    }

    /// Key of the block containing `m`.
    pub fn block_of(&self, m: &Monomial) -> Bidegree {
        let mut b = self.alg.bidegree(m);
        if self.degree_only {
            b.weight = 0;
        }
        b
    }

    /// Restrict to the window's degree range. Terms of the differential that
    /// leave the window are dropped, and the edge bidegrees next to nonzero
    /// dropped chain groups are marked untrusted.
    pub fn truncated(&self, window: &TruncationWindow) -> ChainComplex {
        let keep = |b: &Bidegree| {
            b.degree >= window.degree_min
                && b.degree <= window.degree_max
                && b.weight <= window.weight_max
        };
        let bases: BTreeMap<_, _> = self
            .bases
            .iter()
            .filter(|(b, _)| keep(b))
            .map(|(b, v)| (*b, v.clone()))
            .collect();
        let mut untrusted = self.untrusted.clone();
        for b in bases.keys() {
            let below = Bidegree::new(b.degree - 1, b.weight);
            let above = Bidegree::new(b.degree + 1, b.weight);
            let cut = |x: &Bidegree| !keep(x) && self.bases.get(x).is_some_and(|v| !v.is_empty());
            if cut(&below) || cut(&above) {
                untrusted.insert(*b);
            }
        }
        let mut c = ChainComplex::new(self.alg.clone(), bases, self.d.clone());
        c.untrusted = untrusted;
        c.degree_only = self.degree_only;
        c
    }

    /// Differential with terms outside the complex dropped.
    pub fn d(&self, m: &Monomial) -> Poly {
        (self.d)(m).filter(|t| self.members.contains(t))
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.members.contains(m)
    }

    pub fn basis(&self) -> Vec<Monomial> {
        self.bases.values().flatten().cloned().collect()
    }

    pub fn square_zero(&self) -> Result<(), HomologyError> {
        for m in self.members.iter() {
            let dd = on(|t| self.d(t), &self.d(m));
            if !dd.is_zero() {
                return Err(HomologyError::NotSquareZero(self.alg.fmt_monomial(m)));
            }
        }
        Ok(())
    }
}

/// Graded dimension table of a cohomology computation.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CohomologyTable {
    pub dims: BTreeMap<Bidegree, usize>,
    pub untrusted: BTreeSet<Bidegree>,
    /// Chosen representatives, rendered.
    pub representatives: BTreeMap<Bidegree, Vec<String>>,
}

impl CohomologyTable {
    pub fn dim(&self, b: Bidegree) -> usize {
        self.dims.get(&b).copied().unwrap_or(0)
    }

    /// Total dimension in one degree, summed over weights.
    pub fn dim_in_degree(&self, degree: i32) -> usize {
        self.dims
            .iter()
            .filter(|(b, _)| b.degree == degree)
            .map(|(_, d)| d)
            .sum()
    }
}

/// The five strong-retract identities plus the chain-map property of `i`, `p`.
pub trait Retract {
    fn big(&self) -> &FreeSCAlgebra;
    fn small(&self) -> &FreeSCAlgebra;
    fn big_basis(&self) -> &[Monomial];
    fn small_basis(&self) -> &[Monomial];
    fn d_big(&self, m: &Monomial) -> Poly;
    fn d_small(&self, m: &Monomial) -> Poly;
    fn i(&self, m: &Monomial) -> Poly;
    fn p(&self, m: &Monomial) -> Poly;
    fn h(&self, m: &Monomial) -> Poly;
}

pub fn apply_i(r: &dyn Retract, v: &Poly) -> Poly {
    on(|m| r.i(m), v)
}
pub fn apply_p(r: &dyn Retract, v: &Poly) -> Poly {
    on(|m| r.p(m), v)
}
pub fn apply_h(r: &dyn Retract, v: &Poly) -> Poly {
    on(|m| r.h(m), v)
}
pub fn apply_d_big(r: &dyn Retract, v: &Poly) -> Poly {
    on(|m| r.d_big(m), v)
}
pub fn apply_d_small(r: &dyn Retract, v: &Poly) -> Poly {
    on(|m| r.d_small(m), v)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct IdentityCheck {
    pub identity: String,
    pub checked: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct RetractReport {
    pub big_dim: usize,
    pub small_dim: usize,
    pub identities: Vec<IdentityCheck>,
}

impl RetractReport {
    pub fn passed(&self) -> bool {
        self.identities.iter().all(|c| c.failures == 0)
    }

    pub fn failed_identities(&self) -> Vec<String> {
        self.identities
            .iter()
            .filter(|c| c.failures > 0)
            .map(|c| c.identity.clone())
            .collect()
    }
}

fn check_all(
    name: &str,
    alg: &FreeSCAlgebra,
    basis: &[Monomial],
    residual: impl Fn(&Monomial) -> Poly,
) -> IdentityCheck {
    let mut failures = 0;
    let mut first = None;
    for m in basis {
        let r = residual(m);
        if !r.is_zero() {
            failures += 1;
            if first.is_none() {
                first = Some(format!("{} -> {}", alg.fmt_monomial(m), alg.fmt_poly(&r)));
            }
        }
    }
    IdentityCheck {
        identity: name.to_string(),
        checked: basis.len(),
        failures,
        first_failure: first,
    }
}

/// Check every identity on every basis vector of both sides.
pub fn verify_retract(r: &dyn Retract) -> RetractReport {
    let big = r.big();
    let small = r.small();
    let identities = vec![
        check_all("pi = id", small, r.small_basis(), |c| {
            apply_p(r, &r.i(c)).minus(&Poly::monomial(c.clone(), Scalar::ONE))
        }),
        check_all("id - ip = dh + hd", big, r.big_basis(), |y| {
            let mut v = Poly::monomial(y.clone(), Scalar::ONE);
            v.add_scaled(&apply_i(r, &r.p(y)), -Scalar::ONE);
            v.add_scaled(&apply_d_big(r, &r.h(y)), -Scalar::ONE);
            v.add_scaled(&apply_h(r, &r.d_big(y)), -Scalar::ONE);
            v
        }),
        check_all("hh = 0", big, r.big_basis(), |y| apply_h(r, &r.h(y))),
        check_all("hi = 0", small, r.small_basis(), |c| apply_h(r, &r.i(c))),
        check_all("ph = 0", big, r.big_basis(), |y| apply_p(r, &r.h(y))),
        check_all("di = id", small, r.small_basis(), |c| {
            apply_d_big(r, &r.i(c)).minus(&apply_i(r, &r.d_small(c)))
        }),
        check_all("pd = dp", big, r.big_basis(), |y| {
            apply_p(r, &r.d_big(y)).minus(&apply_d_small(r, &r.p(y)))
        }),
    ];
    RetractReport {
        big_dim: r.big_basis().len(),
        small_dim: r.small_basis().len(),
        identities,
    }
}

/// How the cohomology classes of a [`BlockRetract`] are named.
#[derive(Clone, Debug)]
pub enum SmallSide {
    /// A fresh generator per class, after the given spectator generators.
    Classes { prefix: Vec<Generator> },
    /// Every representative is a single monomial; use it as its own label.
    Monomials,
}

struct Block {
    /// Rows are images of this block in the next degree; tags are preimages.
    image: Echelon,
    /// Class representatives, reduced modulo the incoming image; tags are labels.
    classes: Echelon,
}

/// Strong retract of a finite complex onto its cohomology.
pub struct BlockRetract {
    complex: ChainComplex,
    small: FreeSCAlgebra,
    blocks: BTreeMap<Bidegree, Block>,
    big_basis: Vec<Monomial>,
    small_basis: Vec<Monomial>,
    reps: HashMap<Monomial, Poly>,
    cache: RefCell<HashMap<Monomial, (Poly, Poly)>>,
}

impl BlockRetract {
    pub fn build(complex: ChainComplex, side: SmallSide) -> BlockRetract {
        let mut blocks: BTreeMap<Bidegree, Block> = BTreeMap::new();
        let mut kernels: BTreeMap<Bidegree, Vec<Poly>> = BTreeMap::new();
        for (b, basis) in &complex.bases {
            let mut image = Echelon::new();
            let mut kernel = Vec::new();
            for m in basis {
                let dm = complex.d(m);
                let (rem, pre) = image.reduce_tagged(&dm, &Poly::monomial(m.clone(), Scalar::ONE));
                if rem.is_zero() {
                    kernel.push(pre);
                } else {
                    image.push_reduced(rem, pre);
                }
            }
            kernels.insert(*b, kernel);
            blocks.insert(
                *b,
                Block {
                    image,
                    classes: Echelon::new(),
                },
            );
        }
        // class representatives: kernel modulo incoming image
        let mut raw: BTreeMap<Bidegree, Vec<Poly>> = BTreeMap::new();
        for (b, kernel) in &kernels {
            let below = Bidegree::new(b.degree - 1, b.weight);
            let mut ech = Echelon::new();
            for z in kernel {
                let r = match blocks.get(&below) {
                    Some(bl) => bl.image.normal_form(z),
                    None => z.clone(),
                };
                ech.insert(&r, &Poly::zero());
            }
            ech.fully_reduce();
            let mut rows: Vec<Poly> = ech.rows().iter().map(|r| r.vec.clone()).collect();
            rows.sort_by(|a, b| a.leading().unwrap().0.cmp(b.leading().unwrap().0));
            raw.insert(*b, rows);
        }
        let (small, labels): (FreeSCAlgebra, BTreeMap<Bidegree, Vec<Monomial>>) = match side {
            SmallSide::Monomials => {
                let mut labels = BTreeMap::new();
                for (b, rows) in &raw {
                    let ls = rows
                        .iter()
                        .map(|r| {
                            let (m, c) = r.leading().unwrap();
                            assert!(
                                r.len() == 1 && c.is_one(),
                                "representative is not a monomial"
                            );
                            m.clone()
                        })
                        .collect();
                    labels.insert(*b, ls);
                }
                (complex.alg.clone(), labels)
            }
            SmallSide::Classes { prefix } => {
                let mut gens = prefix.clone();
                let mut pending = Vec::new();
                for (b, rows) in &raw {
                    for (k, _) in rows.iter().enumerate() {
                        let name = format!("c{}_{}_{}", b.degree, b.weight, k).replace('-', "m");
                        gens.push(Generator::new(name, b.degree, b.weight).with_origin("class"));
                        pending.push((*b, gens.len() - 1));
                    }
                }
                let small = FreeSCAlgebra::new(gens).expect("class names are unique");
                let mut labels: BTreeMap<Bidegree, Vec<Monomial>> = BTreeMap::new();
                for (b, idx) in pending {
                    labels
                        .entry(b)
                        .or_default()
                        .push(small.unit_monomial().with_exp(idx, 1));
                }
                (small, labels)
            }
        };
        let mut reps = HashMap::new();
        let mut small_basis = Vec::new();
        for (b, rows) in raw {
            let ls = labels.get(&b).cloned().unwrap_or_default();
            let block = blocks.get_mut(&b).unwrap();
            for (row, label) in rows.into_iter().zip(ls) {
                let lp = Poly::monomial(label.clone(), Scalar::ONE);
                block.classes.push_reduced(row.clone(), lp);
                reps.insert(label.clone(), row);
                small_basis.push(label);
            }
        }
        let big_basis = complex.basis();
        BlockRetract {
            complex,
            small,
            blocks,
            big_basis,
            small_basis,
            reps,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    /// Representatives in the big complex, per bidegree.
    pub fn table(&self) -> CohomologyTable {
        let mut t = CohomologyTable::default();
        for (b, bl) in &self.blocks {
            t.dims.insert(*b, bl.classes.rank());
            let reps = bl
                .classes
                .rows()
                .iter()
                .map(|r| self.complex.alg.fmt_poly(&r.vec))
                .collect();
            t.representatives.insert(*b, reps);
        }
        t.untrusted = self.complex.untrusted.clone();
        t
    }

    fn decompose(&self, m: &Monomial) -> (Poly, Poly) {
        if let Some(v) = self.cache.borrow().get(m) {
            return v.clone();
        }
        let b = self.complex.block_of(m);
        let block = &self.blocks[&b];
        let dm = self.complex.d(m);
        let mut z = Poly::monomial(m.clone(), Scalar::ONE);
        if !dm.is_zero() {
            let pre = block
                .image
                .express(&dm)
                .expect("image of d lies in the image echelon");
            z.add_scaled(&pre, -Scalar::ONE);
        }
        let below = Bidegree::new(b.degree - 1, b.weight);
        let (rem, h) = match self.blocks.get(&below) {
            Some(bl) => {
                let (rem, used) = bl.image.reduce(&z);
                let mut h = Poly::zero();
                for (r, c) in used {
                    h.add_scaled(&bl.image.rows()[r].tag, c);
                }
                (rem, h)
            }
            None => (z, Poly::zero()),
        };
        let p = block
            .classes
            .express(&rem)
            .expect("cycle decomposes into image plus classes");
        self.cache
            .borrow_mut()
            .insert(m.clone(), (h.clone(), p.clone()));
        (h, p)
    }
}

impl Retract for BlockRetract {
    fn big(&self) -> &FreeSCAlgebra {
        &self.complex.alg
    }
    fn small(&self) -> &FreeSCAlgebra {
        &self.small
    }
    fn big_basis(&self) -> &[Monomial] {
        &self.big_basis
    }
    fn small_basis(&self) -> &[Monomial] {
        &self.small_basis
    }
    fn d_big(&self, m: &Monomial) -> Poly {
        self.complex.d(m)
    }
    fn d_small(&self, _m: &Monomial) -> Poly {
        Poly::zero()
    }
    fn i(&self, m: &Monomial) -> Poly {
        self.reps.get(m).cloned().unwrap_or_else(Poly::zero)
    }
    fn p(&self, m: &Monomial) -> Poly {
        if !self.complex.contains(m) {
            return Poly::zero();
        }
        self.decompose(m).1
    }
    fn h(&self, m: &Monomial) -> Poly {
        if !self.complex.contains(m) {
            return Poly::zero();
        }
        self.decompose(m).0
    }
}

/// Cohomology table of a finite complex.
pub fn cohomology(c: &ChainComplex) -> CohomologyTable {
    BlockRetract::build(c.clone(), SmallSide::Classes { prefix: Vec::new() }).table()
}

/// Extension of a retract by spectator generators `a`:
/// `i(a c) = a i(c)`, `p(a y) = a p(y)`, `h(a y) = (-1)^{|a|} a h(y)`.
///
/// The spectators must be the first `k` generators of both algebras, in the
/// same order, and the inner retract must not involve them.
pub struct TensorRetract {
    inner: Rc<dyn Retract>,
    spectators: usize,
    big_basis: Vec<Monomial>,
    small_basis: Vec<Monomial>,
}

impl TensorRetract {
    pub fn new(
        inner: Rc<dyn Retract>,
        spectators: usize,
        big_basis: Vec<Monomial>,
        small_basis: Vec<Monomial>,
    ) -> TensorRetract {
        for k in 0..spectators {
            assert_eq!(
                inner.big().generator(k),
                inner.small().generator(k),
                "spectators must agree"
            );
        }
        TensorRetract {
            inner,
            spectators,
            big_basis,
            small_basis,
        }
    }

    fn split(&self, m: &Monomial) -> (Monomial, Monomial) {
        let mut outer = m.exps().to_vec();
        let mut inner = m.exps().to_vec();
        for (k, e) in outer.iter_mut().enumerate() {
            if k >= self.spectators {
                *e = 0;
            }
        }
        for e in inner.iter_mut().take(self.spectators) {
            *e = 0;
        }
        (Monomial::from_exps(outer), Monomial::from_exps(inner))
    }

    /// `a * v` where `a` only involves spectators (which come first).
    fn prepend(a: &Monomial, v: &Poly, sign: bool) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in v.terms() {
            let e: Vec<u8> = m.exps().iter().zip(a.exps()).map(|(x, y)| x + y).collect();
            out.add_term(Monomial::from_exps(e), if sign { -*c } else { *c });
        }
        out
    }

    fn resize(a: &Monomial, n: usize) -> Monomial {
        let mut e = a.exps().to_vec();
        e.resize(n, 0);
        Monomial::from_exps(e)
    }

    fn odd(alg: &FreeSCAlgebra, a: &Monomial) -> bool {
        alg.bidegree(a).is_odd()
    }
}

impl Retract for TensorRetract {
    fn big(&self) -> &FreeSCAlgebra {
        self.inner.big()
    }
    fn small(&self) -> &FreeSCAlgebra {
        self.inner.small()
    }
    fn big_basis(&self) -> &[Monomial] {
        &self.big_basis
    }
    fn small_basis(&self) -> &[Monomial] {
        &self.small_basis
    }
    fn d_big(&self, m: &Monomial) -> Poly {
        let (a, y) = self.split(m);
        TensorRetract::prepend(
            &a,
            &self.inner.d_big(&y),
            TensorRetract::odd(self.big(), &a),
        )
    }
    fn d_small(&self, m: &Monomial) -> Poly {
        let (a, y) = self.split(m);
        TensorRetract::prepend(
            &a,
            &self.inner.d_small(&y),
            TensorRetract::odd(self.small(), &a),
        )
    }
    fn i(&self, m: &Monomial) -> Poly {
        let (a, c) = self.split(m);
        let a = TensorRetract::resize(&a, self.big().len());
        TensorRetract::prepend(&a, &self.inner.i(&c), false)
    }
    fn p(&self, m: &Monomial) -> Poly {
        let (a, y) = self.split(m);
        let a = TensorRetract::resize(&a, self.small().len());
        TensorRetract::prepend(&a, &self.inner.p(&y), false)
    }
    fn h(&self, m: &Monomial) -> Poly {
        let (a, y) = self.split(m);
        TensorRetract::prepend(&a, &self.inner.h(&y), TensorRetract::odd(self.big(), &a))
    }
}

/// Perturbed retract `(i', p', h', d')` for a perturbation `x` of the big
/// differential. With `id - ip = dh + hd` and `S = sum_k (-x h)^k`:
/// `i' = sum_k (-h x)^k i`, `p' = p S`, `h' = h S`, `d' = d + p S x i`.
/// Series are summed until they vanish; a cap guards against perturbations
/// that are not small.
pub struct PerturbedRetract {
    base: Rc<dyn Retract>,
    x: LinearFn,
    cap: usize,
    filtration: String,
    series: RefCell<HashMap<Monomial, Poly>>,
    i_cache: RefCell<HashMap<Monomial, Poly>>,
}

impl PerturbedRetract {
    /// Checks smallness on every big basis vector up front.
    pub fn new(
        base: Rc<dyn Retract>,
        x: LinearFn,
        cap: usize,
        filtration: &str,
    ) -> Result<PerturbedRetract, HomologyError> {
        let r = PerturbedRetract {
            base,
            x,
            cap,
            filtration: filtration.to_string(),
            series: RefCell::new(HashMap::new()),
            i_cache: RefCell::new(HashMap::new()),
        };
        let basis: Vec<Monomial> = r.base.big_basis().to_vec();
        for m in &basis {
            r.try_series(m)?;
        }
        let small: Vec<Monomial> = r.base.small_basis().to_vec();
        for c in &small {
            r.try_i(c)?;
        }
        Ok(r)
    }

    pub fn base(&self) -> &Rc<dyn Retract> {
        &self.base
    }

    pub fn x(&self, m: &Monomial) -> Poly {
        (self.x)(m)
    }

    fn not_small(&self) -> HomologyError {
        HomologyError::NotSmall {
            cap: self.cap,
            filtration: self.filtration.clone(),
        }
    }

    /// `-x h` on a vector.
    fn step(&self, v: &Poly) -> Poly {
        on(|y| on(|z| (self.x)(z), &self.base.h(y)), v).scaled(-Scalar::ONE)
    }

    /// `sum_k (-x h)^k m`.
    fn try_series(&self, m: &Monomial) -> Result<Poly, HomologyError> {
        if let Some(v) = self.series.borrow().get(m) {
            return Ok(v.clone());
        }
        let mut acc = Poly::monomial(m.clone(), Scalar::ONE);
        let mut t = acc.clone();
        let mut steps = 0;
        loop {
            t = self.step(&t);
            if t.is_zero() {
                break;
            }
            steps += 1;
            if steps > self.cap {
                return Err(self.not_small());
            }
            acc.add_assign(&t);
        }
        self.series.borrow_mut().insert(m.clone(), acc.clone());
        Ok(acc)
    }

    pub fn series(&self, m: &Monomial) -> Poly {
        self.try_series(m)
            .expect("smallness checked at construction")
    }

    pub fn series_of(&self, v: &Poly) -> Poly {
        on(|m| self.series(m), v)
    }

    /// `sum_k (-h x)^k i(c)`.
    fn try_i(&self, c: &Monomial) -> Result<Poly, HomologyError> {
        if let Some(v) = self.i_cache.borrow().get(c) {
            return Ok(v.clone());
        }
        let mut t = self.base.i(c);
        let mut acc = t.clone();
        let mut steps = 0;
        loop {
            t = on(|y| apply_h(self.base.as_ref(), &(self.x)(y)), &t).scaled(-Scalar::ONE);
            if t.is_zero() {
                break;
            }
            steps += 1;
            if steps > self.cap {
                return Err(self.not_small());
            }
            acc.add_assign(&t);
        }
        self.i_cache.borrow_mut().insert(c.clone(), acc.clone());
        Ok(acc)
    }

    /// The k-th correction `p (-x h)^k` applied to a monomial, for k >= 1.
    pub fn p_corrections(&self, m: &Monomial) -> Vec<Poly> {
        let mut out = Vec::new();
        let mut t = Poly::monomial(m.clone(), Scalar::ONE);
        for _ in 0..self.cap {
            t = self.step(&t);
            if t.is_zero() {
                break;
            }
            out.push(apply_p(self.base.as_ref(), &t));
        }
        out
    }

    /// The k-th term `p (-x h)^k x i` of the induced differential, k >= 0.
    pub fn d_small_terms(&self, c: &Monomial) -> Vec<Poly> {
        let mut out = Vec::new();
        let mut t = on(|y| (self.x)(y), &self.base.i(c));
        for _ in 0..=self.cap {
            if t.is_zero() {
                break;
            }
            out.push(apply_p(self.base.as_ref(), &t));
            t = self.step(&t);
        }
        out
    }
}

impl Retract for PerturbedRetract {
    fn big(&self) -> &FreeSCAlgebra {
        self.base.big()
    }
    fn small(&self) -> &FreeSCAlgebra {
        self.base.small()
    }
    fn big_basis(&self) -> &[Monomial] {
        self.base.big_basis()
    }
    fn small_basis(&self) -> &[Monomial] {
        self.base.small_basis()
    }
    fn d_big(&self, m: &Monomial) -> Poly {
        self.base.d_big(m).plus(&(self.x)(m))
    }
    fn d_small(&self, c: &Monomial) -> Poly {
        let xi = on(|y| (self.x)(y), &self.base.i(c));
        self.base
            .d_small(c)
            .plus(&apply_p(self.base.as_ref(), &self.series_of(&xi)))
    }
    fn i(&self, c: &Monomial) -> Poly {
        self.try_i(c).expect("smallness checked at construction")
    }
    fn p(&self, m: &Monomial) -> Poly {
        apply_p(self.base.as_ref(), &self.series(m))
    }
    fn h(&self, m: &Monomial) -> Poly {
        apply_h(self.base.as_ref(), &self.series(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_term() -> ChainComplex {
        let alg = FreeSCAlgebra::new(vec![Generator::new("a", -1, 1), Generator::new("b", 0, 1)])
            .unwrap();
        let a = alg.var("a").leading().unwrap().0.clone();
        let b = alg.var("b").leading().unwrap().0.clone();
        let mut bases = BTreeMap::new();
        bases.insert(Bidegree::new(-1, 1), vec![a.clone()]);
        bases.insert(Bidegree::new(0, 1), vec![b.clone()]);
        let bb = b.clone();
        let d: LinearFn = Rc::new(move |m: &Monomial| {
            if m == &a {
                Poly::monomial(bb.clone(), Scalar::ONE)
            } else {
                Poly::zero()
            }
        });
        ChainComplex::new(alg, bases, d)
    }

    #[test]
    fn acyclic_pair() {
        let c = two_term();
        let r = BlockRetract::build(c.clone(), SmallSide::Classes { prefix: vec![] });
        assert!(r.small_basis().is_empty());
        let b = c.alg.var("b").leading().unwrap().0.clone();
        assert_eq!(r.h(&b), c.alg.var("a"));
        assert!(verify_retract(&r).passed());
    }

    #[test]
    fn zero_differential_has_zero_homotopy() {
        let alg = FreeSCAlgebra::new(vec![Generator::new("l1", 0, 1), Generator::new("l2", 0, 1)])
            .unwrap();
        let bases = alg
            .basis_by_bidegree(&TruncationWindow::weights(3))
            .unwrap();
        let c = ChainComplex::new(alg, bases, Rc::new(|_: &Monomial| Poly::zero()));
        let r = BlockRetract::build(c, SmallSide::Monomials);
        assert_eq!(r.small_basis().len(), 10);
        assert!(r.big_basis().iter().all(|m| r.h(m).is_zero()));
        assert!(verify_retract(&r).passed());
    }

    #[test]
    fn corrupted_homotopy_is_caught() {
        struct Bad(BlockRetract);
        impl Retract for Bad {
            fn big(&self) -> &FreeSCAlgebra {
                self.0.big()
            }
            fn small(&self) -> &FreeSCAlgebra {
                self.0.small()
            }
            fn big_basis(&self) -> &[Monomial] {
                self.0.big_basis()
            }
            fn small_basis(&self) -> &[Monomial] {
                self.0.small_basis()
            }
            fn d_big(&self, m: &Monomial) -> Poly {
                self.0.d_big(m)
            }
            fn d_small(&self, m: &Monomial) -> Poly {
                self.0.d_small(m)
            }
            fn i(&self, m: &Monomial) -> Poly {
                self.0.i(m)
            }
            fn p(&self, m: &Monomial) -> Poly {
                self.0.p(m)
            }
            fn h(&self, m: &Monomial) -> Poly {
                self.0.h(m).scaled(Scalar::int(2))
            }
        }
        let r = Bad(BlockRetract::build(
            two_term(),
            SmallSide::Classes { prefix: vec![] },
        ));
        let rep = verify_retract(&r);
        assert!(!rep.passed());
        assert_eq!(
            rep.failed_identities(),
            vec!["id - ip = dh + hd".to_string()]
        );
    }
}
