//! Supertranslation algebras, the pure spinor ring, and multiplets built by
//! the pure spinor functor on superspace `C[x, θ] ⊗ M`.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use serde::Serialize;

use crate::grading::{
    square_zero_check, Bidegree, Derivation, FreeSCAlgebra, Generator, GradingError, Monomial,
    Poly, SquareZeroReport, TruncationWindow,
};
use crate::homology::{on, ChainComplex, LinearFn};
use crate::linalg::{dense_matrix, dense_rank, Echelon};
use crate::linfty::{linear_index, mc_residual, LInfty};
use crate::ocha::StrictOcha;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MultipletError {
    #[error("gamma is not symmetric: Γ^{mu}_{{{alpha}{beta}}} = {ab} but Γ^{mu}_{{{beta}{alpha}}} = {ba}")]
    AsymmetricGamma {
        alpha: usize,
        beta: usize,
        mu: usize,
        ab: Scalar,
        ba: Scalar,
    },
    #[error("gamma entry ({alpha},{beta},{mu}) is out of range")]
    IndexOutOfRange {
        alpha: usize,
        beta: usize,
        mu: usize,
    },
    #[error("twist has {found} components, expected {expected}")]
    TwistLength { expected: usize, found: usize },
    #[error("not a Maurer-Cartan element: QΓQ = {0}")]
    NotMaurerCartan(String),
    #[error("module axiom violated: D^2 != 0 on {0:?}")]
    ModuleAxiom(Vec<String>),
    #[error("g0 element {name} is not a derivation of the bracket: {detail}")]
    NotADerivation { name: String, detail: String },
    #[error("module entry refers to unknown basis element {0}")]
    UnknownBasis(String),
    #[error(transparent)]
    Grading(#[from] GradingError),
}

/// Structure constants `Γ^μ_{αβ}`, symmetric in `α, β`. Indices are zero
/// based internally and one based in files and messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaSpec {
    pub n_odd: usize,
    pub n_even: usize,
    gamma: Vec<Vec<Vec<Scalar>>>,
}

/// One entry as given by a user, one based.
#[derive(Clone, Debug, PartialEq, Eq, serde::Deserialize, Serialize)]
pub struct GammaEntry {
    pub alpha: usize,
    pub beta: usize,
    pub mu: usize,
    pub coeff: Scalar,
}

impl GammaSpec {
    pub fn zero(n_odd: usize, n_even: usize) -> GammaSpec {
        GammaSpec {
            n_odd,
            n_even,
            gamma: vec![vec![vec![Scalar::ZERO; n_odd]; n_odd]; n_even],
        }
    }

    /// Build from entries; the transposed entry is filled in when missing and
    /// must agree when present.
    pub fn from_entries(
        n_odd: usize,
        n_even: usize,
        entries: &[GammaEntry],
    ) -> Result<GammaSpec, MultipletError> {
        let mut given: BTreeMap<(usize, usize, usize), Scalar> = BTreeMap::new();
        for e in entries {
            if e.alpha == 0
                || e.beta == 0
                || e.mu == 0
                || e.alpha > n_odd
                || e.beta > n_odd
                || e.mu > n_even
            {
                return Err(MultipletError::IndexOutOfRange {
                    alpha: e.alpha,
                    beta: e.beta,
                    mu: e.mu,
                });
            }
            let key = (e.mu - 1, e.alpha - 1, e.beta - 1);
            if let Some(prev) = given.get(&key) {
                if *prev != e.coeff {
                    return Err(MultipletError::AsymmetricGamma {
                        alpha: e.alpha,
                        beta: e.beta,
                        mu: e.mu,
                        ab: *prev,
                        ba: e.coeff,
                    });
                }
            }
            given.insert(key, e.coeff);
        }
        let mut g = GammaSpec::zero(n_odd, n_even);
        for (&(mu, a, b), &c) in &given {
            if let Some(&other) = given.get(&(mu, b, a)) {
                if other != c {
                    return Err(MultipletError::AsymmetricGamma {
                        alpha: a + 1,
                        beta: b + 1,
                        mu: mu + 1,
                        ab: c,
                        ba: other,
                    });
                }
            }
            g.gamma[mu][a][b] = c;
            g.gamma[mu][b][a] = c;
        }
        Ok(g)
    }

    /// Build from full matrices `gamma[mu][alpha][beta]`, rejecting asymmetry.
    #[allow(clippy::needless_range_loop)]
    pub fn from_matrices(gamma: Vec<Vec<Vec<Scalar>>>) -> Result<GammaSpec, MultipletError> {
        let n_even = gamma.len();
        let n_odd = gamma.first().map_or(0, Vec::len);
        for (mu, m) in gamma.iter().enumerate() {
            for a in 0..n_odd {
                for b in 0..n_odd {
                    if m[a][b] != m[b][a] {
                        return Err(MultipletError::AsymmetricGamma {
                            alpha: a + 1,
                            beta: b + 1,
                            mu: mu + 1,
                            ab: m[a][b],
                            ba: m[b][a],
                        });
                    }
                }
            }
        }
        Ok(GammaSpec {
            n_odd,
            n_even,
            gamma,
        })
    }

    pub fn coeff(&self, mu: usize, a: usize, b: usize) -> Scalar {
        self.gamma[mu][a][b]
    }

    /// `n_odd = 2, n_even = 1`, a single quadric `λ1 λ2`.
    pub fn t1() -> GammaSpec {
        let h = Scalar::new(1, 2);
        GammaSpec::from_entries(
            2,
            1,
            &[GammaEntry {
                alpha: 1,
                beta: 2,
                mu: 1,
                coeff: h,
            }],
        )
        .unwrap()
    }

    /// `n_odd = 2, n_even = 3`, quadrics `λ1², λ1 λ2, λ2²`.
    pub fn t2() -> GammaSpec {
        let one = Scalar::ONE;
        let h = Scalar::new(1, 2);
        GammaSpec::from_entries(
            2,
            3,
            &[
                GammaEntry {
                    alpha: 1,
                    beta: 1,
                    mu: 1,
                    coeff: one,
                },
                GammaEntry {
                    alpha: 1,
                    beta: 2,
                    mu: 2,
                    coeff: h,
                },
                GammaEntry {
                    alpha: 2,
                    beta: 2,
                    mu: 3,
                    coeff: one,
                },
            ],
        )
        .unwrap()
    }

    /// `n_odd = 3, n_even = 2`, quadrics `λ1 λ2, λ1 λ3`.
    pub fn t3() -> GammaSpec {
        let h = Scalar::new(1, 2);
        GammaSpec::from_entries(
            3,
            2,
            &[
                GammaEntry {
                    alpha: 1,
                    beta: 2,
                    mu: 1,
                    coeff: h,
                },
                GammaEntry {
                    alpha: 1,
                    beta: 3,
                    mu: 2,
                    coeff: h,
                },
            ],
        )
        .unwrap()
    }

    /// `QΓQ` for each `μ`.
    pub fn quadric_values(&self, q: &[Scalar]) -> Vec<Scalar> {
        (0..self.n_even)
            .map(|mu| {
                let mut s = Scalar::ZERO;
                for a in 0..self.n_odd {
                    for b in 0..self.n_odd {
                        s += q[a] * self.gamma[mu][a][b] * q[b];
                    }
                }
                s
            })
            .collect()
    }
}

/// The supertranslation algebra as a strict L∞ algebra on `d_α` (1,-1) and
/// `e_μ` (2,-2), with `[d_α, d_β] = 2Γ^μ_{αβ} e_μ`.
pub fn supertranslation(g: &GammaSpec) -> LInfty {
    let mut gens = Vec::new();
    for a in 0..g.n_odd {
        gens.push(Generator::new(format!("d{}", a + 1), 1, -1).with_origin("t1"));
    }
    for mu in 0..g.n_even {
        gens.push(Generator::new(format!("e{}", mu + 1), 2, -2).with_origin("t2"));
    }
    let basis = FreeSCAlgebra::new(gens).expect("distinct names");
    let mut l = LInfty::abelian(basis);
    for a in 0..g.n_odd {
        for b in a..g.n_odd {
            let mut v = Poly::zero();
            for mu in 0..g.n_even {
                let c = g.coeff(mu, a, b);
                if !c.is_zero() {
                    v.add_term(l.element(g.n_odd + mu), c * Scalar::int(2));
                }
            }
            // shifted d's are even, so no sign
            l.set(&[a, b], v);
        }
    }
    l
}

/// A twist `Q = Q^α d_α` as a vector of the supertranslation algebra, after
/// checking its length.
pub fn twist_vector(g: &GammaSpec, t: &LInfty, q: &[Scalar]) -> Result<Poly, MultipletError> {
    if q.len() != g.n_odd {
        return Err(MultipletError::TwistLength {
            expected: g.n_odd,
            found: q.len(),
        });
    }
    Ok(q.iter()
        .enumerate()
        .map(|(a, c)| (t.element(a), *c))
        .filter(|(_, c)| !c.is_zero())
        .collect())
}

/// Maurer–Cartan check for a twist, with the residual spelled out.
pub fn check_twist(g: &GammaSpec, q: &[Scalar]) -> Result<(), MultipletError> {
    let t = supertranslation(g);
    let v = twist_vector(g, &t, q)?;
    let r = mc_residual(&t, &v);
    if r.is_zero() {
        Ok(())
    } else {
        Err(MultipletError::NotMaurerCartan(t.basis.fmt_poly(&r)))
    }
}

/// The superspace algebra `C[x, θ, λ, v, extra]` and the basic operators on it.
#[derive(Clone, Debug)]
pub struct Superspace {
    pub gamma: GammaSpec,
    pub alg: FreeSCAlgebra,
    pub n_extra: usize,
}

impl Superspace {
    pub fn new(gamma: &GammaSpec, extra: Vec<Generator>) -> Superspace {
        let mut gens = Vec::new();
        for mu in 0..gamma.n_even {
            gens.push(Generator::new(format!("x{}", mu + 1), -2, 2).with_origin("superspace"));
        }
        for a in 0..gamma.n_odd {
            gens.push(Generator::new(format!("th{}", a + 1), -1, 1).with_origin("superspace"));
        }
        for a in 0..gamma.n_odd {
            gens.push(Generator::new(format!("l{}", a + 1), 0, 1).with_origin("ce"));
        }
        for mu in 0..gamma.n_even {
            gens.push(
                Generator::new(format!("v{}", mu + 1), -1, 2)
                    .with_aux("w2", 1)
                    .with_origin("ce"),
            );
        }
        let n_extra = extra.len();
        gens.extend(extra);
        Superspace {
            gamma: gamma.clone(),
            alg: FreeSCAlgebra::new(gens).expect("generator names are distinct"),
            n_extra,
        }
    }

    pub fn x(&self, mu: usize) -> usize {
        mu
    }
    pub fn th(&self, a: usize) -> usize {
        self.gamma.n_even + a
    }
    pub fn lam(&self, a: usize) -> usize {
        self.gamma.n_even + self.gamma.n_odd + a
    }
    pub fn v(&self, mu: usize) -> usize {
        self.gamma.n_even + 2 * self.gamma.n_odd + mu
    }
    pub fn extra(&self, k: usize) -> usize {
        self.gamma.n_even * 2 + 2 * self.gamma.n_odd + k
    }
    /// Number of spectator generators `x, θ`.
    pub fn n_superspace(&self) -> usize {
        self.gamma.n_even + self.gamma.n_odd
    }
    /// First CE generator (`λ^1`).
    pub fn ce_start(&self) -> usize {
        self.n_superspace()
    }

    fn var(&self, i: usize) -> Poly {
        self.alg.var_at(i)
    }

    fn derivation(&self, b: Bidegree, images: Vec<(usize, Poly)>) -> Derivation {
        let mut v = vec![Poly::zero(); self.alg.len()];
        for (i, p) in images {
            v[i] = v[i].plus(&p);
        }
        Derivation::from_vec(&self.alg, b, v).expect("operator is homogeneous")
    }

    /// `λΓλ` for each `μ`, without a factor two.
    pub fn quadrics(&self) -> Vec<Poly> {
        let g = &self.gamma;
        (0..g.n_even)
            .map(|mu| {
                let mut q = Poly::zero();
                for a in 0..g.n_odd {
                    for b in 0..g.n_odd {
                        let c = g.coeff(mu, a, b);
                        if !c.is_zero() {
                            q.add_scaled(
                                &self.alg.mul(&self.var(self.lam(a)), &self.var(self.lam(b))),
                                c,
                            );
                        }
                    }
                }
                q
            })
            .collect()
    }

    /// `d_t = λΓλ ∂/∂v`.
    pub fn d_t(&self) -> Derivation {
        let q = self.quadrics();
        self.derivation(
            Bidegree::new(1, 0),
            (0..self.gamma.n_even)
                .map(|mu| (self.v(mu), q[mu].clone()))
                .collect(),
        )
    }

    /// `λ ∂/∂θ`.
    pub fn d0(&self) -> Derivation {
        self.derivation(
            Bidegree::new(1, 0),
            (0..self.gamma.n_odd)
                .map(|a| (self.th(a), self.var(self.lam(a))))
                .collect(),
        )
    }

    /// `-λΓθ ∂/∂x`.
    pub fn d1(&self) -> Derivation {
        let g = &self.gamma;
        let mut images = Vec::new();
        for mu in 0..g.n_even {
            let mut p = Poly::zero();
            for a in 0..g.n_odd {
                for b in 0..g.n_odd {
                    let c = g.coeff(mu, a, b);
                    if !c.is_zero() {
                        p.add_scaled(
                            &self.alg.mul(&self.var(self.lam(a)), &self.var(self.th(b))),
                            -c,
                        );
                    }
                }
            }
            images.push((self.x(mu), p));
        }
        self.derivation(Bidegree::new(1, 0), images)
    }

    /// `v ∂/∂x`.
    pub fn dv(&self) -> Derivation {
        self.derivation(
            Bidegree::new(1, 0),
            (0..self.gamma.n_even)
                .map(|mu| (self.x(mu), self.var(self.v(mu))))
                .collect(),
        )
    }

    /// `ρ(d_α) = ∂/∂θ^α + Γ^μ_{αβ} θ^β ∂/∂x^μ`.
    pub fn rho_d(&self, a: usize) -> Derivation {
        let g = &self.gamma;
        let mut images = vec![(self.th(a), self.alg.one())];
        for mu in 0..g.n_even {
            let mut p = Poly::zero();
            for b in 0..g.n_odd {
                let c = g.coeff(mu, a, b);
                if !c.is_zero() {
                    p.add_scaled(&self.var(self.th(b)), c);
                }
            }
            images.push((self.x(mu), p));
        }
        self.derivation(Bidegree::new(1, -1), images)
    }

    /// `ρ(e_μ) = ∂/∂x^μ`.
    pub fn rho_e(&self, mu: usize) -> Derivation {
        self.derivation(Bidegree::new(2, -2), vec![(self.x(mu), self.alg.one())])
    }

    /// Action of a supertranslation basis index (`d`'s first, then `e`'s).
    pub fn rho(&self, k: usize) -> Derivation {
        if k < self.gamma.n_odd {
            self.rho_d(k)
        } else {
            self.rho_e(k - self.gamma.n_odd)
        }
    }

    /// `ρ(Q)`, bookkept at bidegree (1,0).
    pub fn rho_q(&self, q: &[Scalar]) -> Derivation {
        let mut images = vec![Poly::zero(); self.alg.len()];
        for (a, c) in q.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let r = self.rho_d(a);
            for (i, img) in images.iter_mut().enumerate() {
                if let Some(p) = r.image(i) {
                    img.add_scaled(p, *c);
                }
            }
        }
        Derivation::from_vec(&self.alg, Bidegree::new(1, 0), images)
            .expect("twist terms sit below nominal weight")
    }

    /// Does the monomial avoid `v` and the extra generators?
    pub fn is_superspace_lambda(&self, m: &Monomial) -> bool {
        (self.v(0)..self.alg.len()).all(|i| m.exp(i) == 0)
    }

    /// Does the monomial involve only the extra generators?
    pub fn is_pure_extra(&self, m: &Monomial) -> bool {
        (0..self.extra(0)).all(|i| m.exp(i) == 0)
    }

    /// Does the monomial avoid `x` and `θ`?
    pub fn is_ce(&self, m: &Monomial) -> bool {
        (0..self.ce_start()).all(|i| m.exp(i) == 0)
    }

    /// Every monomial of weight at most `weight_max`.
    pub fn basis(&self, weight_max: i32) -> Vec<Monomial> {
        self.alg
            .window_basis(&TruncationWindow::weights(weight_max))
            .expect("all generators have positive weight")
    }
}

/// `O_Y = C[λ]/(λΓλ)`, presented by an echelon basis of the ideal up to a
/// weight bound. Normal forms reduce the λ-part of a superspace monomial.
#[derive(Clone, Debug)]
pub struct PureSpinorRing {
    pub space: Superspace,
    pub weight_max: i32,
    ideal: Echelon,
    lambda_monomials: BTreeMap<i32, Vec<Monomial>>,
}

impl PureSpinorRing {
    pub fn new(space: &Superspace, weight_max: i32) -> PureSpinorRing {
        let alg = &space.alg;
        let mut lambda_monomials: BTreeMap<i32, Vec<Monomial>> = BTreeMap::new();
        for m in space.basis(weight_max) {
            let pure = (0..alg.len()).all(|i| {
                m.exp(i) == 0 || (space.lam(0)..space.lam(0) + space.gamma.n_odd).contains(&i)
            });
            if pure {
                lambda_monomials
                    .entry(alg.bidegree(&m).weight)
                    .or_default()
                    .push(m);
            }
        }
        let mut ideal = Echelon::new();
        let quadrics = space.quadrics();
        for k in 2..=weight_max {
            for m in lambda_monomials.get(&(k - 2)).into_iter().flatten() {
                for q in &quadrics {
                    let row = alg.mul_mono_poly(m, q);
                    ideal.insert(&row, &Poly::zero());
                }
            }
        }
        PureSpinorRing {
            space: space.clone(),
            weight_max,
            ideal,
            lambda_monomials,
        }
    }

    fn split(&self, m: &Monomial) -> (Monomial, Monomial) {
        let lo = self.space.lam(0);
        let hi = lo + self.space.gamma.n_odd;
        let mut outer = m.exps().to_vec();
        let mut inner = m.exps().to_vec();
        for i in 0..outer.len() {
            if (lo..hi).contains(&i) {
                outer[i] = 0;
            } else {
                inner[i] = 0;
            }
        }
        (Monomial::from_exps(outer), Monomial::from_exps(inner))
    }

    /// Normal form: λ-parts reduced modulo the ideal. λ commutes with
    /// everything, so no signs arise from splitting.
    pub fn nf(&self, p: &Poly) -> Poly {
        let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in p.terms() {
            let (outer, inner) = self.split(m);
            groups
                .entry(outer)
                .or_insert_with(Poly::zero)
                .add_term(inner, *c);
        }
        let mut out = Poly::zero();
        for (outer, inner) in groups {
            let r = self.ideal.normal_form(&inner);
            for (m, c) in r.terms() {
                let e: Vec<u8> = outer
                    .exps()
                    .iter()
                    .zip(m.exps())
                    .map(|(a, b)| a + b)
                    .collect();
                out.add_term(Monomial::from_exps(e), *c);
            }
        }
        out
    }

    pub fn is_standard(&self, m: &Monomial) -> bool {
        let (_, inner) = self.split(m);
        !self.ideal.is_pivot(&inner)
    }

    /// Standard λ-monomials of weight `k`.
    pub fn standard_monomials(&self, k: i32) -> Vec<Monomial> {
        self.lambda_monomials
            .get(&k)
            .into_iter()
            .flatten()
            .filter(|m| !self.ideal.is_pivot(m))
            .cloned()
            .collect()
    }

    /// Dimension of `O_Y` per weight `0..=weight_max`.
    pub fn hilbert(&self) -> Vec<usize> {
        (0..=self.weight_max)
            .map(|k| self.standard_monomials(k).len())
            .collect()
    }

    /// Same numbers from dense ranks of the ideal's spanning sets.
    pub fn hilbert_dense(&self) -> Vec<usize> {
        let alg = &self.space.alg;
        let quadrics = self.space.quadrics();
        (0..=self.weight_max)
            .map(|k| {
                let target = self.lambda_monomials.get(&k).cloned().unwrap_or_default();
                let mut spanning = Vec::new();
                if k >= 2 {
                    for m in self.lambda_monomials.get(&(k - 2)).into_iter().flatten() {
                        for q in &quadrics {
                            spanning.push(alg.mul_mono_poly(m, q));
                        }
                    }
                }
                let cols: Vec<Monomial> = (0..spanning.len())
                    .map(|j| Monomial::from_exps(vec![j as u8]))
                    .collect();
                let idx: BTreeMap<Monomial, usize> = cols
                    .iter()
                    .cloned()
                    .enumerate()
                    .map(|(j, m)| (m, j))
                    .collect();
                let mat = dense_matrix(&cols, &target, |c| spanning[idx[c]].clone());
                target.len() - dense_rank(mat)
            })
            .collect()
    }
}

/// A multiplet `A•(M)` on superspace: a differential, an optional quotient by
/// the pure spinor ideal, and the strict action of the supertranslations.
#[derive(Clone)]
pub struct Multiplet {
    pub space: Superspace,
    pub d: Derivation,
    pub ring: Option<Rc<PureSpinorRing>>,
    pub weight_max: i32,
    basis: Vec<Monomial>,
}

impl Multiplet {
    /// Canonical multiplet `A•(O_Y)`: `𝒟 = λ∂θ - λΓθ∂x` on `C[x, θ, λ]/(λΓλ)`.
    pub fn canonical(space: &Superspace, weight_max: i32) -> Multiplet {
        let ring = Rc::new(PureSpinorRing::new(space, weight_max));
        let d = space.d0().plus(&space.d1());
        let basis = space
            .basis(weight_max)
            .into_iter()
            .filter(|m| space.is_superspace_lambda(m) && ring.is_standard(m))
            .collect();
        Multiplet {
            space: space.clone(),
            d,
            ring: Some(ring),
            weight_max,
            basis,
        }
    }

    /// Only the `λ∂θ` part of the canonical differential.
    pub fn canonical_d0(space: &Superspace, weight_max: i32) -> Multiplet {
        let mut m = Multiplet::canonical(space, weight_max);
        m.d = space.d0();
        m
    }

    /// `A•(C•(t̃))`: `𝒟̃ = λ∂θ - λΓθ∂x + v∂x + d_t̃` on the free algebra.
    /// `d_tilde` is the CE differential of the resolution, acting on λ, v, w.
    pub fn tilde(space: &Superspace, d_tilde: &Derivation, weight_max: i32) -> Multiplet {
        let d = space.d0().plus(&space.d1()).plus(&space.dv()).plus(d_tilde);
        Multiplet {
            space: space.clone(),
            d,
            ring: None,
            weight_max,
            basis: space.basis(weight_max),
        }
    }

    /// `𝒟_Q = 𝒟 + ρ(Q)`; the twist must be Maurer–Cartan.
    pub fn twisted(&self, q: &[Scalar]) -> Result<Multiplet, MultipletError> {
        check_twist(&self.space.gamma, q)?;
        let mut m = self.clone();
        m.d = self.d.plus(&self.space.rho_q(q));
        Ok(m)
    }

    pub fn alg(&self) -> &FreeSCAlgebra {
        &self.space.alg
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    fn reduce(&self, p: Poly) -> Poly {
        match &self.ring {
            Some(r) => r.nf(&p),
            None => p,
        }
    }

    pub fn differential(&self, m: &Monomial) -> Poly {
        self.reduce(
            self.d
                .act(self.alg(), &Poly::monomial(m.clone(), Scalar::ONE)),
        )
    }

    pub fn product(&self, a: &Monomial, b: &Monomial) -> Poly {
        match self.alg().mul_monomials(a, b) {
            Some((neg, m)) => self.reduce(Poly::monomial(m, Scalar::sign(neg))),
            None => Poly::zero(),
        }
    }

    /// Action of supertranslation basis element `k`.
    pub fn action(&self, k: usize, m: &Monomial) -> Poly {
        self.reduce(
            self.space
                .rho(k)
                .act(self.alg(), &Poly::monomial(m.clone(), Scalar::ONE)),
        )
    }

    /// `𝒟²` on every window basis monomial.
    pub fn square_zero(&self) -> SquareZeroReport {
        window_square_zero(self.alg(), &self.basis, |m| self.differential(m))
    }

    /// The multiplet as a cochain complex graded by bidegree. A twisted
    /// differential lowers weight, so blocks are then graded by degree alone.
    pub fn complex(&self, by_degree_only: bool) -> ChainComplex {
        let me = self.clone();
        let d: LinearFn = Rc::new(move |m: &Monomial| me.differential(m));
        complex_on(self.alg(), &self.basis, d, by_degree_only)
    }
}

/// The strict OCHA of `t` acting on a multiplet.
pub fn strict_ocha<'a>(t: &'a LInfty, m: &'a Multiplet) -> StrictOcha<'a> {
    StrictOcha {
        closed: t,
        open: m.alg().clone(),
        d: Box::new(move |a| m.differential(a)),
        product: Box::new(move |a, b| m.product(a, b)),
        action: Box::new(move |g, a| m.action(linear_index(g), a)),
    }
}

/// Chain complex on an explicit basis.
pub fn complex_on(
    alg: &FreeSCAlgebra,
    basis: &[Monomial],
    d: LinearFn,
    by_degree_only: bool,
) -> ChainComplex {
    let mut bases: BTreeMap<Bidegree, Vec<Monomial>> = BTreeMap::new();
    for m in basis {
        let mut b = alg.bidegree(m);
        if by_degree_only {
            b.weight = 0;
        }
        bases.entry(b).or_default().push(m.clone());
    }
    let mut c = ChainComplex::new(alg.clone(), bases, d);
    if by_degree_only {
        c = c.by_degree_only();
    }
    c
}

/// `D²` on an explicit basis, for operators that are not free-algebra
/// derivations (quotients, induced differentials).
pub fn window_square_zero(
    alg: &FreeSCAlgebra,
    basis: &[Monomial],
    d: impl Fn(&Monomial) -> Poly,
) -> SquareZeroReport {
    let mut rep = SquareZeroReport::default();
    for m in basis {
        rep.checked += 1;
        let dd = on(&d, &d(m));
        if !dd.is_zero() {
            rep.violations
                .push((alg.fmt_monomial(m), alg.fmt_poly(&dd)));
        }
    }
    rep
}

/// Free-algebra square-zero check that never fails on grading grounds.
pub fn derivation_square_zero(alg: &FreeSCAlgebra, d: &Derivation) -> SquareZeroReport {
    square_zero_check(alg, d).expect("total derivation")
}

/// A finite-dimensional module presentation over `C•(t)`: actions of `λ^α`,
/// `v^μ` and an internal differential, as matrices on a graded basis.
#[derive(Clone, Debug, PartialEq, Eq, serde::Deserialize, Serialize)]
pub struct TabulatedModule {
    pub name: String,
    pub basis: Vec<ModuleBasis>,
    #[serde(default)]
    pub lambda: Vec<ModuleEntry>,
    #[serde(default)]
    pub v: Vec<ModuleEntry>,
    #[serde(default)]
    pub d: Vec<ModuleEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Deserialize, Serialize)]
pub struct ModuleBasis {
    pub name: String,
    pub degree: i32,
    pub weight: i32,
}

/// `to += coeff * op(from)`; `index` is `α` or `μ` (one based), ignored for `d`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Deserialize, Serialize)]
pub struct ModuleEntry {
    #[serde(default, alias = "alpha", alias = "mu")]
    pub index: usize,
    pub from: String,
    pub to: String,
    pub coeff: Scalar,
}

/// `A•(M)` for a tabulated module: `C[x, θ] ⊗ M` with
/// `𝒟(f ⊗ m) = ∂_θα f ⊗ λ^α m - Γ^μ_{αβ} θ^β ∂_xμ f ⊗ λ^α m
///            + (-1)^{|f|} ∂_xμ f ⊗ v^μ m + (-1)^{|f|} f ⊗ d_M m`.
pub struct ModuleMultiplet {
    pub gamma: GammaSpec,
    pub alg: FreeSCAlgebra,
    n_module: usize,
    lambda: Vec<Vec<Vec<(usize, Scalar)>>>,
    v: Vec<Vec<Vec<(usize, Scalar)>>>,
    d: Vec<Vec<(usize, Scalar)>>,
}

impl ModuleMultiplet {
    pub fn new(
        gamma: &GammaSpec,
        module: &TabulatedModule,
    ) -> Result<ModuleMultiplet, MultipletError> {
        let mut gens = Vec::new();
        for mu in 0..gamma.n_even {
            gens.push(Generator::new(format!("x{}", mu + 1), -2, 2));
        }
        for a in 0..gamma.n_odd {
            gens.push(Generator::new(format!("th{}", a + 1), -1, 1));
        }
        for b in &module.basis {
            gens.push(Generator::new(b.name.clone(), b.degree, b.weight).with_origin("module"));
        }
        let alg = FreeSCAlgebra::new(gens)?;
        let n_module = module.basis.len();
        let pos = |name: &str| -> Result<usize, MultipletError> {
            module
                .basis
                .iter()
                .position(|b| b.name == name)
                .ok_or_else(|| MultipletError::UnknownBasis(name.to_string()))
        };
        let mut lambda = vec![vec![Vec::new(); n_module]; gamma.n_odd];
        let mut v = vec![vec![Vec::new(); n_module]; gamma.n_even];
        let mut d = vec![Vec::new(); n_module];
        for e in &module.lambda {
            if e.index == 0 || e.index > gamma.n_odd {
                return Err(MultipletError::UnknownBasis(format!(
                    "lambda index {}",
                    e.index
                )));
            }
            lambda[e.index - 1][pos(&e.from)?].push((pos(&e.to)?, e.coeff));
        }
        for e in &module.v {
            if e.index == 0 || e.index > gamma.n_even {
                return Err(MultipletError::UnknownBasis(format!("v index {}", e.index)));
            }
            v[e.index - 1][pos(&e.from)?].push((pos(&e.to)?, e.coeff));
        }
        for e in &module.d {
            d[pos(&e.from)?].push((pos(&e.to)?, e.coeff));
        }
        Ok(ModuleMultiplet {
            gamma: gamma.clone(),
            alg,
            n_module,
            lambda,
            v,
            d,
        })
    }

    fn module_index(&self, m: &Monomial) -> usize {
        let off = self.gamma.n_even + self.gamma.n_odd;
        (0..self.n_module)
            .find(|&k| m.exp(off + k) == 1)
            .expect("linear in the module")
    }

    fn split(&self, m: &Monomial) -> (Monomial, usize) {
        let k = self.module_index(m);
        let off = self.gamma.n_even + self.gamma.n_odd;
        (m.with_exp(off + k, 0), k)
    }

    fn tensor(&self, f: &Poly, k: usize, c: Scalar, out: &mut Poly) {
        let off = self.gamma.n_even + self.gamma.n_odd;
        let mk = self.alg.unit_monomial().with_exp(off + k, 1);
        out.add_scaled(&self.alg.mul_poly_mono(f, &mk), c);
    }

    pub fn differential(&self, m: &Monomial) -> Poly {
        let (f, k) = self.split(m);
        let fp = Poly::monomial(f.clone(), Scalar::ONE);
        let f_odd = self.alg.bidegree(&f).is_odd();
        let mut out = Poly::zero();
        let g = &self.gamma;
        let partial = |i: usize| crate::linfty::partial(&self.alg, i, &fp);
        for a in 0..g.n_odd {
            let dth = partial(g.n_even + a);
            for &(j, c) in &self.lambda[a][k] {
                self.tensor(&dth, j, c, &mut out);
            }
        }
        for mu in 0..g.n_even {
            let dx = partial(mu);
            if dx.is_zero() {
                continue;
            }
            for a in 0..g.n_odd {
                for b in 0..g.n_odd {
                    let c = g.coeff(mu, a, b);
                    if c.is_zero() {
                        continue;
                    }
                    let th = self.alg.var_at(g.n_even + b);
                    let t = self.alg.mul(&th, &dx);
                    for &(j, e) in &self.lambda[a][k] {
                        self.tensor(&t, j, -c * e, &mut out);
                    }
                }
            }
            for &(j, e) in &self.v[mu][k] {
                self.tensor(&dx, j, Scalar::sign(f_odd) * e, &mut out);
            }
        }
        for &(j, e) in &self.d[k] {
            self.tensor(&fp, j, Scalar::sign(f_odd) * e, &mut out);
        }
        out
    }

    pub fn basis(&self, weight_max: i32) -> Vec<Monomial> {
        let off = self.gamma.n_even + self.gamma.n_odd;
        // weights of module elements may be negative; bound superspace part
        let mut out = Vec::new();
        let sup = FreeSCAlgebra::new(self.alg.generators()[..off].to_vec())
            .expect("prefix of a valid algebra");
        let w_min = (0..self.n_module)
            .map(|k| self.alg.generator(off + k).bidegree.weight)
            .min()
            .unwrap_or(0);
        let sup_basis = sup
            .window_basis(&TruncationWindow::weights(weight_max - w_min.min(0)))
            .expect("positive weights");
        for f in sup_basis {
            for k in 0..self.n_module {
                let mut e = f.exps().to_vec();
                e.resize(self.alg.len(), 0);
                e[off + k] = 1;
                let m = Monomial::from_exps(e);
                if self.alg.bidegree(&m).weight <= weight_max {
                    out.push(m);
                }
            }
        }
        out.sort();
        out
    }

    pub fn square_zero(&self, weight_max: i32) -> SquareZeroReport {
        let basis = self.basis(weight_max);
        window_square_zero(&self.alg, &basis, |m| self.differential(m))
    }

    /// Module basis elements appearing in `𝒟² ≠ 0` violations.
    pub fn violating_elements(&self, weight_max: i32) -> Vec<String> {
        let mut out = BTreeSet::new();
        for m in self.basis(weight_max) {
            let dd = on(|t| self.differential(t), &self.differential(&m));
            if !dd.is_zero() {
                let k = self.module_index(&m);
                out.insert(
                    self.alg
                        .generator(self.gamma.n_even + self.gamma.n_odd + k)
                        .name
                        .clone(),
                );
            }
        }
        out.into_iter().collect()
    }
}

/// A finite `g0 ⊆ Der(t)` given by its action matrices on the basis of `t`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Deserialize, Serialize)]
pub struct G0Spec {
    pub names: Vec<String>,
    /// Per element: `(from, to, coeff)` on supertranslation basis names.
    pub action: Vec<Vec<G0Entry>>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Deserialize, Serialize)]
pub struct G0Entry {
    pub from: String,
    pub to: String,
    pub coeff: Scalar,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct G0Report {
    pub derivation_of_bracket: Vec<String>,
    pub commutes_with_differential: Vec<String>,
    pub failures: Vec<String>,
}

impl G0Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check each `g0` element is a degree-zero derivation of the bracket of
/// `t`, and that its contragredient action on `λ, θ, x` commutes with the
/// canonical differential on the window.
pub fn check_g0(g: &GammaSpec, g0: &G0Spec, weight_max: i32) -> Result<G0Report, MultipletError> {
    let t = supertranslation(g);
    let mut rep = G0Report::default();
    let space = Superspace::new(g, vec![]);
    let canonical = Multiplet::canonical(&space, weight_max);
    for (name, entries) in g0.names.iter().zip(&g0.action) {
        let mut mat = vec![Vec::<(usize, Scalar)>::new(); t.dim()];
        for e in entries {
            let from = t
                .basis
                .index_of(&e.from)
                .ok_or_else(|| MultipletError::UnknownBasis(e.from.clone()))?;
            let to = t
                .basis
                .index_of(&e.to)
                .ok_or_else(|| MultipletError::UnknownBasis(e.to.clone()))?;
            if t.basis.generator(from).bidegree != t.basis.generator(to).bidegree {
                rep.failures
                    .push(format!("{name}: {} -> {} changes bidegree", e.from, e.to));
            }
            mat[from].push((to, e.coeff));
        }
        let act = |v: &Poly| -> Poly {
            let mut out = Poly::zero();
            for (m, c) in v.terms() {
                for &(j, k) in &mat[crate::linfty::linear_index(m)] {
                    out.add_term(t.element(j), *c * k);
                }
            }
            out
        };
        // g[a, b] = [g a, b] + [a, g b]; all t elements have even shifted
        // degree or act through even g, so no signs
        let mut ok = true;
        for a in 0..t.dim() {
            for b in 0..t.dim() {
                let ea = Poly::monomial(t.element(a), Scalar::ONE);
                let eb = Poly::monomial(t.element(b), Scalar::ONE);
                let lhs = act(&t.ell_vectors(&[ea.clone(), eb.clone()]));
                let rhs = t
                    .ell_vectors(&[act(&ea), eb.clone()])
                    .plus(&t.ell_vectors(&[ea, act(&eb)]));
                if lhs != rhs {
                    ok = false;
                    rep.failures.push(format!(
                        "{name} on ({}, {}): {} vs {}",
                        t.basis.generator(a).name,
                        t.basis.generator(b).name,
                        t.basis.fmt_poly(&lhs),
                        t.basis.fmt_poly(&rhs)
                    ));
                }
            }
        }
        if ok {
            rep.derivation_of_bracket.push(name.clone());
        }
        // contragredient action on coordinates: λ^α, θ^α dual to d_α; x^μ dual to e_μ
        let mut images = vec![Poly::zero(); space.alg.len()];
        for (a, row) in mat.iter().enumerate().take(g.n_odd) {
            for &(j, k) in row {
                if j < g.n_odd {
                    images[space.lam(j)]
                        .add_term(space.alg.unit_monomial().with_exp(space.lam(a), 1), -k);
                    images[space.th(j)]
                        .add_term(space.alg.unit_monomial().with_exp(space.th(a), 1), -k);
                }
            }
        }
        for mu in 0..g.n_even {
            for &(j, k) in &mat[g.n_odd + mu] {
                if j >= g.n_odd {
                    let nu = j - g.n_odd;
                    images[space.x(nu)]
                        .add_term(space.alg.unit_monomial().with_exp(space.x(mu), 1), -k);
                }
            }
        }
        let gd = Derivation::from_vec(&space.alg, Bidegree::new(0, 0), images)?;
        let mut commutes = true;
        for m in canonical.basis() {
            let mp = Poly::monomial(m.clone(), Scalar::ONE);
            let ring = canonical.ring.as_ref().expect("canonical has a ring");
            let a = ring.nf(&gd.act(&space.alg, &canonical.d.act(&space.alg, &mp)));
            let b = ring.nf(&canonical.d.act(&space.alg, &gd.act(&space.alg, &mp)));
            if a != b {
                commutes = false;
                rep.failures.push(format!(
                    "{name} does not commute with D on {}",
                    space.alg.fmt_monomial(m)
                ));
                break;
            }
        }
        if commutes {
            rep.commutes_with_differential.push(name.clone());
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_symmetric_fill_and_conflict() {
        let g = GammaSpec::t1();
        assert_eq!(g.coeff(0, 1, 0), Scalar::new(1, 2));
        let bad = GammaSpec::from_entries(
            2,
            1,
            &[
                GammaEntry {
                    alpha: 1,
                    beta: 2,
                    mu: 1,
                    coeff: Scalar::ONE,
                },
                GammaEntry {
                    alpha: 2,
                    beta: 1,
                    mu: 1,
                    coeff: Scalar::int(2),
                },
            ],
        );
        assert!(matches!(bad, Err(MultipletError::AsymmetricGamma { .. })));
        let m = vec![vec![
            vec![Scalar::ZERO, Scalar::ONE],
            vec![Scalar::ZERO, Scalar::ZERO],
        ]];
        assert!(GammaSpec::from_matrices(m).is_err());
    }

    #[test]
    fn hilbert_functions() {
        let cases: [(GammaSpec, Vec<usize>); 3] = [
            (GammaSpec::t1(), vec![1, 2, 2, 2, 2]),
            (GammaSpec::t2(), vec![1, 2, 0, 0, 0]),
            (GammaSpec::zero(1, 0), vec![1, 1, 1, 1, 1]),
        ];
        for (g, h) in cases {
            let r = PureSpinorRing::new(&Superspace::new(&g, vec![]), 4);
            assert_eq!(r.hilbert(), h);
            assert_eq!(r.hilbert_dense(), h);
        }
    }

    #[test]
    fn d_t_images() {
        let s = Superspace::new(&GammaSpec::t1(), vec![]);
        let d = s.d_t();
        assert_eq!(
            s.alg.fmt_poly(d.image(s.v(0)).unwrap()),
            s.alg
                .fmt_poly(&s.alg.mul(&s.alg.var("l1"), &s.alg.var("l2")))
        );
        let s2 = Superspace::new(&GammaSpec::t2(), vec![]);
        let q = s2.quadrics();
        assert_eq!(
            s2.alg.fmt_poly(&q[1]),
            s2.alg
                .fmt_poly(&s2.alg.mul(&s2.alg.var("l1"), &s2.alg.var("l2")))
        );
    }

    #[test]
    fn canonical_squares_to_zero_and_twist() {
        for g in [GammaSpec::t1(), GammaSpec::t2(), GammaSpec::t3()] {
            let s = Superspace::new(&g, vec![]);
            let c = Multiplet::canonical(&s, 5);
            assert!(c.square_zero().passed());
        }
        let s = Superspace::new(&GammaSpec::t1(), vec![]);
        let c = Multiplet::canonical(&s, 5);
        let q = [Scalar::ONE, Scalar::ZERO];
        let cq = c.twisted(&q).unwrap();
        assert!(cq.square_zero().passed());
        let s2 = Superspace::new(&GammaSpec::t2(), vec![]);
        let c2 = Multiplet::canonical(&s2, 3);
        assert!(matches!(
            c2.twisted(&[Scalar::ONE, Scalar::ZERO]),
            Err(MultipletError::NotMaurerCartan(_))
        ));
    }

    #[test]
    fn strict_ocha_is_coherent() {
        for g in [GammaSpec::t1(), GammaSpec::t3()] {
            let t = supertranslation(&g);
            let s = Superspace::new(&g, vec![]);
            let c = Multiplet::canonical(&s, 4);
            let ops = strict_ocha(&t, &c);
            let cb = crate::ocha::closed_basis(&t);
            let small: Vec<Monomial> = c
                .basis()
                .iter()
                .filter(|m| c.alg().bidegree(m).weight <= 2)
                .cloned()
                .collect();
            let rep = crate::ocha::check_ocha_coherence(&ops, &cb, &small, 3, 3);
            assert!(rep.passed(), "{:?}", rep.violations);
            assert!(rep.checked > 100);
        }
        let g = GammaSpec::t1();
        let t = supertranslation(&g);
        let c = Multiplet::canonical(&Superspace::new(&g, vec![]), 4);
        let mut ops = strict_ocha(&t, &c);
        let cc = c.clone();
        ops.action = Box::new(move |g, a| cc.action(linear_index(g), a).scaled(-Scalar::ONE));
        let cb = crate::ocha::closed_basis(&t);
        assert!(!crate::ocha::check_ocha_coherence(&ops, &cb, c.basis(), 3, 2).passed());
    }

    #[test]
    fn supertranslation_bracket_t1() {
        let t = supertranslation(&GammaSpec::t1());
        assert_eq!(t.mu(&[0, 1]), Poly::monomial(t.element(2), Scalar::ONE));
        assert!(t.mu(&[0, 0]).is_zero());
    }
}
