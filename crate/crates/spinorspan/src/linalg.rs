//! Sparse exact row reduction over vectors keyed by monomials.
//!
//! Rows are kept with pivot equal to their smallest monomial and pivot
//! coefficient one. Reducing a vector always clears the smallest remaining
//! pivot first, which only ever introduces larger monomials, so reduction
//! terminates and the remainder is a canonical normal form for the span.

use std::collections::{BTreeMap, HashMap};

use crate::grading::{Monomial, Poly};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Row {
    pub pivot: Monomial,
    pub vec: Poly,
    /// Bookkeeping carried alongside the row (a preimage, a class label...).
    pub tag: Poly,
}

#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<Row>,
    pivot_of: HashMap<Monomial, usize>,
}

impl Echelon {
    pub fn new() -> Echelon {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_pivot(&self, m: &Monomial) -> bool {
        self.pivot_of.contains_key(m)
    }

    /// Writes `v = sum coeff_r * row_r + remainder`; returns the remainder and
    /// the coefficients.
    pub fn reduce(&self, v: &Poly) -> (Poly, Vec<(usize, Scalar)>) {
        let mut map: BTreeMap<Monomial, Scalar> = v.as_map().clone();
        let mut used = Vec::new();
        let mut cursor: Option<Monomial> = None;
        loop {
            let next = {
                let mut it: Box<dyn Iterator<Item = (&Monomial, &Scalar)>> = match &cursor {
                    Some(c) => Box::new(map.range(c.clone()..)),
                    None => Box::new(map.iter()),
                };
                it.find(|(m, _)| self.pivot_of.contains_key(*m))
                    .map(|(m, c)| (m.clone(), *c))
            };
            let Some((m, c)) = next else { break };
            let r = self.pivot_of[&m];
            for (rm, rc) in self.rows[r].vec.terms() {
                let e = map.entry(rm.clone()).or_insert(Scalar::ZERO);
                *e = *e - c * *rc;
                if e.is_zero() {
                    map.remove(rm);
                }
            }
            used.push((r, c));
            cursor = Some(m);
        }
        (Poly::from_map(map), used)
    }

    /// Remainder only.
    pub fn normal_form(&self, v: &Poly) -> Poly {
        self.reduce(v).0
    }

    /// Reduce `v` and fold the same combination of row tags into `tag`.
    pub fn reduce_tagged(&self, v: &Poly, tag: &Poly) -> (Poly, Poly) {
        let (rem, used) = self.reduce(v);
        let mut t = tag.clone();
        for (r, c) in used {
            t.add_scaled(&self.rows[r].tag, -c);
        }
        (rem, t)
    }

    /// Combination of tags expressing `v`, which must lie in the row span.
    pub fn express(&self, v: &Poly) -> Option<Poly> {
        let (rem, used) = self.reduce(v);
        if !rem.is_zero() {
            return None;
        }
        let mut t = Poly::zero();
        for (r, c) in used {
            t.add_scaled(&self.rows[r].tag, c);
        }
        Some(t)
    }

    /// Insert `v` (with its tag) if it is independent of the current rows.
    /// Returns the index of the new row.
    pub fn insert(&mut self, v: &Poly, tag: &Poly) -> Option<usize> {
        let (rem, t) = self.reduce_tagged(v, tag);
        self.push_reduced(rem, t)
    }

    /// Insert a vector already reduced against this echelon.
    pub fn push_reduced(&mut self, rem: Poly, tag: Poly) -> Option<usize> {
        let (pivot, c) = match rem.leading() {
            Some((m, c)) => (m.clone(), *c),
            None => return None,
        };
        let inv = c.recip();
        let row = Row {
            pivot: pivot.clone(),
            vec: rem.scaled(inv),
            tag: tag.scaled(inv),
        };
        self.pivot_of.insert(pivot, self.rows.len());
        self.rows.push(row);
        Some(self.rows.len() - 1)
    }

    /// Make every row free of the other rows' pivots.
    pub fn fully_reduce(&mut self) {
        let n = self.rows.len();
        for r in 0..n {
            let pivot = self.rows[r].pivot.clone();
            self.pivot_of.remove(&pivot);
            let (rem, tag) = self.reduce_tagged(&self.rows[r].vec, &self.rows[r].tag);
            self.pivot_of.insert(pivot.clone(), r);
            let c = rem.coeff(&pivot);
            self.rows[r].vec = rem.scaled(c.recip());
            self.rows[r].tag = tag.scaled(c.recip());
        }
    }
}

/// Rank of a dense matrix by plain Gaussian elimination. Used as an
/// independent oracle for the sparse code.
pub fn dense_rank(mut rows: Vec<Vec<Scalar>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pr) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pr);
        let inv = rows[rank][col].recip();
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let f = row[col] * inv;
                for c in col..ncols {
                    row[c] = row[c] - f * pivot_row[c];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Dense matrix of a linear map: column `j` is the image of `domain[j]`
/// written in the `codomain` basis.
pub fn dense_matrix(
    domain: &[Monomial],
    codomain: &[Monomial],
    f: impl Fn(&Monomial) -> Poly,
) -> Vec<Vec<Scalar>> {
    let index: HashMap<&Monomial, usize> =
        codomain.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut rows = vec![vec![Scalar::ZERO; domain.len()]; codomain.len()];
    for (j, m) in domain.iter().enumerate() {
        for (t, c) in f(m).terms() {
            let i = *index
                .get(t)
                .unwrap_or_else(|| panic!("image term {t:?} outside the codomain basis"));
            rows[i][j] = *c;
        }
    }
    rows
}
