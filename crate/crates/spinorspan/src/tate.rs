//! Stage-by-stage Tate resolution of `O_Y` inside a weight window, and the
//! L∞ algebras `t̃` and `n` read off from it.
//!
//! Stage 1 is `C•(t) = C[λ, v]` with `d v^μ = λΓ^μλ`. Stage `k ≥ 2` adjoins
//! one generator of degree `-k` per class of `H^{-(k-1)}`, weight by weight
//! in increasing order, with differential the fully reduced representative.
//! Adjoining at weight `ω` only affects weights `≥ ω`, so one ascending pass
//! per stage suffices.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::grading::{
    Bidegree, Derivation, FreeSCAlgebra, Generator, Monomial, Poly, TruncationWindow,
};
use crate::linalg::{dense_matrix, dense_rank, Echelon};
use crate::linfty::{ce_to_brackets, dual_basis, LInfty};
use crate::multiplets::{GammaSpec, PureSpinorRing, Superspace};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TateError {
    #[error("window exhausted: cohomology at bidegree ({degree},{weight}) needs stage {needed}, but the stage cap is {cap}")]
    WindowExhausted {
        degree: i32,
        weight: i32,
        needed: usize,
        cap: usize,
    },
}

/// Generators adjoined at one stage.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct StageLog {
    pub stage: usize,
    /// `(degree, weight)` with the number of generators there.
    pub counts: Vec<(Bidegree, usize)>,
    pub names: Vec<String>,
}

impl StageLog {
    pub fn total(&self) -> usize {
        self.counts.iter().map(|(_, c)| c).sum()
    }
}

/// A resolution computed up to a stage and weight.
#[derive(Clone, Debug)]
pub struct TateState {
    pub gamma: GammaSpec,
    pub weight_max: i32,
    pub stage_cap: usize,
    /// Highest stage actually run.
    pub stage: usize,
    /// `λ`, `v`, then the `w`'s in order of adjunction.
    pub ce: FreeSCAlgebra,
    pub d: Derivation,
    pub log: Vec<StageLog>,
    /// Classes in `H^{-stage}` left for the next stage, per weight.
    pub remaining: Vec<(Bidegree, usize)>,
    /// No cohomology below degree zero remains in the weight window.
    pub closed: bool,
}

fn pad(m: &Monomial, n: usize) -> Monomial {
    let mut e = m.exps().to_vec();
    e.resize(n, 0);
    Monomial::from_exps(e)
}

fn pad_poly(p: &Poly, n: usize) -> Poly {
    p.terms().map(|(m, c)| (pad(m, n), *c)).collect()
}

/// Cohomology of a weight-graded complex in one bidegree: representatives
/// fully reduced against each other and sorted by leading monomial.
pub fn classes_at(
    alg: &FreeSCAlgebra,
    d: &Derivation,
    b: Bidegree,
    basis: &BTreeMap<Bidegree, Vec<Monomial>>,
) -> Vec<Poly> {
    let empty = Vec::new();
    let below = basis
        .get(&Bidegree::new(b.degree - 1, b.weight))
        .unwrap_or(&empty);
    let here = basis.get(&b).unwrap_or(&empty);
    let mono = |m: &Monomial| d.act(alg, &Poly::monomial(m.clone(), Scalar::ONE));
    let mut image = Echelon::new();
    for m in below {
        image.insert(&mono(m), &Poly::zero());
    }
    // normal forms modulo the image are canonical, so independence of the
    // reduced cycles is independence in cohomology
    let mut images = Echelon::new();
    let mut classes = Echelon::new();
    for m in here {
        let (rem, pre) = images.reduce_tagged(&mono(m), &Poly::monomial(m.clone(), Scalar::ONE));
        if rem.is_zero() {
            classes.insert(&image.normal_form(&pre), &Poly::zero());
        } else {
            images.push_reduced(rem, pre);
        }
    }
    classes.fully_reduce();
    let mut rows: Vec<Poly> = classes.rows().iter().map(|r| r.vec.clone()).collect();
    rows.sort_by(|a, b| a.leading().unwrap().0.cmp(b.leading().unwrap().0));
    rows
}

/// The same dimension by dense ranks: `dim ker - rank(incoming)`.
pub fn dense_cohomology_dim(
    alg: &FreeSCAlgebra,
    d: &Derivation,
    b: Bidegree,
    basis: &BTreeMap<Bidegree, Vec<Monomial>>,
) -> usize {
    let empty = Vec::new();
    let below = basis
        .get(&Bidegree::new(b.degree - 1, b.weight))
        .unwrap_or(&empty);
    let here = basis.get(&b).unwrap_or(&empty);
    let above = basis
        .get(&Bidegree::new(b.degree + 1, b.weight))
        .unwrap_or(&empty);
    let mono = |m: &Monomial| d.act(alg, &Poly::monomial(m.clone(), Scalar::ONE));
    let out_rank = dense_rank(dense_matrix(here, above, mono));
    let in_rank = dense_rank(dense_matrix(below, here, mono));
    here.len() - out_rank - in_rank
}

impl TateState {
    /// Stage 1: `C•(t)`.
    pub fn stage_one(gamma: &GammaSpec, weight_max: i32, stage_cap: usize) -> TateState {
        let mut gens = Vec::new();
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
        let ce = FreeSCAlgebra::new(gens).expect("distinct names");
        let space = Superspace::new(gamma, vec![]);
        let q = space.quadrics();
        let map = |p: &Poly| -> Poly {
            p.terms()
                .map(|(m, c)| {
                    let e = m.exps()[space.lam(0)..space.lam(0) + gamma.n_odd].to_vec();
                    (pad(&Monomial::from_exps(e), ce.len()), *c)
                })
                .collect()
        };
        let mut images = vec![Poly::zero(); ce.len()];
        for mu in 0..gamma.n_even {
            images[gamma.n_odd + mu] = map(&q[mu]);
        }
        let d = Derivation::from_vec(&ce, Bidegree::new(1, 0), images).expect("homogeneous");
        let log = vec![StageLog {
            stage: 1,
            counts: if gamma.n_even > 0 {
                vec![(Bidegree::new(-1, 2), gamma.n_even)]
            } else {
                vec![]
            },
            names: (0..gamma.n_even).map(|mu| format!("v{}", mu + 1)).collect(),
        }];
        TateState {
            gamma: gamma.clone(),
            weight_max,
            stage_cap,
            stage: 1,
            ce,
            d,
            log,
            remaining: Vec::new(),
            closed: false,
        }
    }

    pub fn n_lambda(&self) -> usize {
        self.gamma.n_odd
    }

    /// Index of the first `w`.
    pub fn w_start(&self) -> usize {
        self.gamma.n_odd + self.gamma.n_even
    }

    pub fn w_indices(&self) -> std::ops::Range<usize> {
        self.w_start()..self.ce.len()
    }

    pub fn w_generators(&self) -> Vec<Generator> {
        self.ce.generators()[self.w_start()..].to_vec()
    }

    /// Stage of a generator (1 for `v`, 0 for `λ`).
    pub fn stage_of(&self, i: usize) -> usize {
        if i < self.gamma.n_odd {
            0
        } else {
            (-self.ce.generator(i).bidegree.degree) as usize
        }
    }

    pub fn bases(&self) -> BTreeMap<Bidegree, Vec<Monomial>> {
        self.ce
            .basis_by_bidegree(&TruncationWindow::weights(self.weight_max))
            .expect("positive weights")
    }

    fn images(&self) -> Vec<Poly> {
        (0..self.ce.len())
            .map(|i| self.d.image(i).cloned().unwrap_or_else(Poly::zero))
            .collect()
    }

    fn adjoin(&mut self, stage: usize, weight: i32, reps: Vec<Poly>, log: &mut StageLog) {
        let mut gens = self.ce.generators().to_vec();
        let mut images = self.images();
        let k0 = log.names.len();
        for (j, _) in reps.iter().enumerate() {
            let name = format!("w{}_{}", stage, k0 + j + 1);
            gens.push(
                Generator::new(name.clone(), -(stage as i32), weight)
                    .with_aux("w2", 1)
                    .with_origin("tate"),
            );
            log.names.push(name);
        }
        let n = gens.len();
        let mut padded: Vec<Poly> = images.iter().map(|p| pad_poly(p, n)).collect();
        padded.extend(reps.iter().map(|p| pad_poly(p, n)));
        images.clear();
        self.ce = FreeSCAlgebra::new(gens).expect("fresh names");
        self.d = Derivation::from_vec(&self.ce, Bidegree::new(1, 0), padded)
            .expect("representatives have the right bidegree");
        log.counts
            .push((Bidegree::new(-(stage as i32), weight), reps.len()));
    }

    /// Run one more stage.
    pub fn step(&mut self) {
        let k = self.stage + 1;
        let mut log = StageLog {
            stage: k,
            ..StageLog::default()
        };
        for w in 1..=self.weight_max {
            let b = Bidegree::new(-(k as i32 - 1), w);
            let reps = classes_at(&self.ce, &self.d, b, &self.bases());
            if !reps.is_empty() {
                self.adjoin(k, w, reps, &mut log);
            }
        }
        self.log.push(log);
        self.stage = k;
    }

    /// Classes of `H^{-j}` per weight, for every `j ≥ from` present in the window.
    pub fn negative_cohomology(&self, from: usize) -> Vec<(Bidegree, usize)> {
        let bases = self.bases();
        let mut out = Vec::new();
        for b in bases.keys() {
            if b.degree <= -(from as i32) {
                let n = classes_at(&self.ce, &self.d, *b, &bases).len();
                if n > 0 {
                    out.push((*b, n));
                }
            }
        }
        out
    }

    /// `H^0` dimension per weight `0..=weight_max`.
    pub fn h0_hilbert(&self) -> Vec<usize> {
        let bases = self.bases();
        (0..=self.weight_max)
            .map(|w| classes_at(&self.ce, &self.d, Bidegree::new(0, w), &bases).len())
            .collect()
    }

    /// `H^{-j}` dimension per weight, by dense ranks.
    pub fn dense_hilbert(&self, degree: i32) -> Vec<usize> {
        let bases = self.bases();
        (0..=self.weight_max)
            .map(|w| dense_cohomology_dim(&self.ce, &self.d, Bidegree::new(degree, w), &bases))
            .collect()
    }

    /// Names of the duals: `d_α` for `λ^α`, `e_μ` for `v^μ`, `n{k}_{j}` for `w{k}_{j}`.
    pub fn dual_names(&self) -> Vec<String> {
        self.ce
            .generators()
            .iter()
            .enumerate()
            .map(|(i, g)| {
                if i < self.gamma.n_odd {
                    format!("d{}", i + 1)
                } else if i < self.w_start() {
                    format!("e{}", i - self.gamma.n_odd + 1)
                } else {
                    g.name.replacen('w', "n", 1)
                }
            })
            .collect()
    }

    /// `t̃` with brackets up to `arity_max`.
    pub fn t_tilde(&self, arity_max: usize) -> LInfty {
        let basis = dual_basis(&self.ce, &self.dual_names());
        let images = self.images();
        ce_to_brackets(&self.ce, |j| images[j].clone(), basis, arity_max)
    }

    /// Fail if the window needs degrees the stage cap cannot reach. Degrees
    /// above `-stage` are exact; degree `-stage` itself is an edge.
    pub fn require_trusted(&self, degree_min: i32) -> Result<(), TateError> {
        if self.closed || (self.stage as i32) >= -degree_min {
            return Ok(());
        }
        match self.remaining.first() {
            Some((b, _)) => Err(TateError::WindowExhausted {
                degree: b.degree,
                weight: b.weight,
                needed: self.stage + 1,
                cap: self.stage_cap,
            }),
            None => Ok(()),
        }
    }

    /// Lowest degree whose cohomology is exact in the window.
    pub fn trusted_degree_min(&self) -> Option<i32> {
        if self.closed {
            None
        } else {
            Some(1 - self.stage as i32)
        }
    }
}

/// Resolve up to `stage_cap` stages, stopping early once no negative
/// cohomology remains in the weight window.
pub fn tate_resolve(gamma: &GammaSpec, weight_max: i32, stage_cap: usize) -> TateState {
    let mut s = TateState::stage_one(gamma, weight_max, stage_cap);
    loop {
        let left = s.negative_cohomology(s.stage);
        if left.is_empty() {
            s.closed = true;
            s.remaining = Vec::new();
            break;
        }
        if s.stage >= stage_cap {
            s.remaining = left
                .into_iter()
                .filter(|(b, _)| b.degree == -(s.stage as i32))
                .collect();
            break;
        }
        s.step();
    }
    s
}

/// `n` and the checks made on it.
#[derive(Clone, Debug)]
pub struct Ideal {
    pub n: LInfty,
    pub report: IdealReport,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct IdealReport {
    pub dim: usize,
    /// `ell_1 = 0` on `n`.
    pub minimal: bool,
    /// `d λ` and `d v` involve no `w`, so `[t̃, n] ⊆ n`.
    pub ideal: bool,
    /// The differential of `t̃` has no linear part.
    pub no_linear_terms: bool,
    /// Every generator of `n` has degree at least three.
    pub degrees_at_least_three: bool,
    pub bracket_count: usize,
}

impl IdealReport {
    pub fn passed(&self) -> bool {
        self.minimal && self.ideal && self.no_linear_terms && self.degrees_at_least_three
    }
}

/// `n`: the duals of the stage `≥ 2` generators, with
/// `d_n(w) = d(w)|_{λ = v = 0}`.
pub fn extract_n(s: &TateState, arity_max: usize) -> Ideal {
    let ws = s.w_indices();
    let n_ce = FreeSCAlgebra::new(s.w_generators()).expect("subset of distinct names");
    let restrict = |p: &Poly| -> Poly {
        p.terms()
            .filter(|(m, _)| (0..s.w_start()).all(|i| m.exp(i) == 0))
            .map(|(m, c)| (Monomial::from_exps(m.exps()[s.w_start()..].to_vec()), *c))
            .collect()
    };
    let images: Vec<Poly> = ws
        .clone()
        .map(|i| restrict(s.d.image(i).unwrap_or(&Poly::zero())))
        .collect();
    let names: Vec<String> = s.dual_names()[s.w_start()..].to_vec();
    let basis = dual_basis(&n_ce, &names);
    let n = ce_to_brackets(&n_ce, |j| images[j].clone(), basis, arity_max);
    let linear = |p: &Poly| p.terms().any(|(m, _)| m.total() == 1);
    let mut report = IdealReport {
        dim: n.dim(),
        minimal: n.entries().all(|(k, v)| k.len() != 1 || v.is_zero()),
        ideal: true,
        no_linear_terms: (0..s.ce.len()).all(|i| !s.d.image(i).is_some_and(linear)),
        degrees_at_least_three: (0..n.dim()).all(|a| n.basis.generator(a).bidegree.degree >= 3),
        bracket_count: n.entries().count(),
    };
    for i in 0..s.w_start() {
        if let Some(p) = s.d.image(i) {
            if p.terms().any(|(m, _)| ws.clone().any(|j| m.exp(j) > 0)) {
                report.ideal = false;
            }
        }
    }
    Ideal { n, report }
}

/// Hilbert function of `O_Y` per weight.
pub fn hilbert_function(gamma: &GammaSpec, weight_max: i32) -> Vec<usize> {
    PureSpinorRing::new(&Superspace::new(gamma, vec![]), weight_max).hilbert()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocha::{check_homotopy_jacobi, closed_basis, ClosedOnly};

    #[test]
    fn t1_closes_at_stage_one() {
        let s = tate_resolve(&GammaSpec::t1(), 6, 4);
        assert!(s.closed);
        assert_eq!(s.stage, 1);
        assert_eq!(s.log[0].counts, vec![(Bidegree::new(-1, 2), 1)]);
        assert_eq!(extract_n(&s, 4).n.dim(), 0);
        assert_eq!(s.h0_hilbert(), hilbert_function(&GammaSpec::t1(), 6));
    }

    #[test]
    fn t2_stage_two_kills_syzygies() {
        let s = tate_resolve(&GammaSpec::t2(), 4, 2);
        assert_eq!(s.log[1].counts[0], (Bidegree::new(-2, 3), 2));
        assert_eq!(s.dense_hilbert(-1), vec![0; 5]);
        assert_eq!(s.h0_hilbert(), vec![1, 2, 0, 0, 0]);
        assert_eq!(s.dense_hilbert(0), vec![1, 2, 0, 0, 0]);
    }

    #[test]
    fn t_tilde_satisfies_homotopy_jacobi() {
        let s = tate_resolve(&GammaSpec::t2(), 6, 4);
        let t = s.t_tilde(4);
        let ops = ClosedOnly::new(&t);
        let rep = check_homotopy_jacobi(&ops, &closed_basis(&t), 4);
        assert!(rep.passed(), "{:?}", rep.violations);
        let i = extract_n(&s, 3);
        assert!(i.report.passed(), "{:?}", i.report);
    }
}
