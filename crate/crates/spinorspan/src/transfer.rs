//! Homotopy transfer by explicit sums over trees.
//!
//! Trees are enumerated explicitly so that individual trees can be evaluated
//! and reported. Leaves carry `i`, internal edges carry `ε h` and the root
//! carries `p`; every composite below the root has degree zero on the
//! suspension, so the only signs are the Koszul signs of reordering the inputs
//! into the order the tree reads them.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::grading::{koszul_sign, FreeSCAlgebra, Monomial, Poly};
use crate::homology::{apply_h, apply_i, apply_p, Retract};
use crate::ocha::{ell_vectors, n_vectors, OchaOps};
use crate::scalar::Scalar;

/// Closed-only or open-only tree: leaves are input positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree {
    Leaf(usize),
    Node(Vec<Tree>),
}

impl Tree {
    pub fn vertices(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node(ch) => 1 + ch.iter().map(Tree::vertices).sum::<usize>(),
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        match self {
            Tree::Leaf(i) => vec![*i],
            Tree::Node(ch) => ch.iter().flat_map(Tree::leaves).collect(),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf(i) => write!(f, "{i}"),
            Tree::Node(ch) => {
                write!(f, "(")?;
                for (k, c) in ch.iter().enumerate() {
                    if k > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Planar trees on leaves `lo..hi` with every vertex of arity at least two.
pub fn planar_trees(lo: usize, hi: usize) -> Vec<Tree> {
    if hi - lo == 1 {
        return vec![Tree::Leaf(lo)];
    }
    let mut out = Vec::new();
    // root arity k >= 2: split lo..hi into k consecutive nonempty blocks
    fn splits(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo == hi {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for mid in lo + 1..=hi {
            for mut rest in splits(mid, hi) {
                rest.insert(0, (lo, mid));
                out.push(rest);
            }
        }
        out
    }
    for blocks in splits(lo, hi) {
        if blocks.len() < 2 {
            continue;
        }
        let options: Vec<Vec<Tree>> = blocks.iter().map(|&(a, b)| planar_trees(a, b)).collect();
        for combo in product(&options) {
            out.push(Tree::Node(combo));
        }
    }
    out
}

fn product<T: Clone>(options: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![vec![]];
    for opts in options {
        let mut next = Vec::new();
        for a in &acc {
            for o in opts {
                let mut v = a.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Set partitions of `items`, blocks ordered by their first element.
fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let first = items[0];
    let rest = &items[1..];
    let mut out = Vec::new();
    for p in set_partitions(rest) {
        // first joins an existing block or starts its own
        let mut alone = vec![vec![first]];
        alone.extend(p.iter().cloned());
        out.push(alone);
        for k in 0..p.len() {
            let mut q = p.clone();
            q[k].insert(0, first);
            q.sort_by_key(|b| b[0]);
            out.push(q);
        }
    }
    for p in out.iter_mut() {
        p.sort_by_key(|b| b[0]);
    }
    out
}

/// Rooted non-planar trees on the given leaves, vertex arity at least two.
pub fn rooted_trees(items: &[usize]) -> Vec<Tree> {
    if items.len() == 1 {
        return vec![Tree::Leaf(items[0])];
    }
    let mut out = Vec::new();
    for part in set_partitions(items) {
        if part.len() < 2 {
            continue;
        }
        let options: Vec<Vec<Tree>> = part.iter().map(|b| rooted_trees(b)).collect();
        for combo in product(&options) {
            out.push(Tree::Node(combo));
        }
    }
    out
}

/// Tree flavors for [`enumerate_trees`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Planar,
    Rooted,
}

pub fn enumerate_trees(arity: usize, flavor: Flavor) -> Vec<Tree> {
    match flavor {
        Flavor::Planar => planar_trees(0, arity),
        Flavor::Rooted => rooted_trees(&(0..arity).collect::<Vec<_>>()),
    }
}

/// Child of an open vertex: an open input or a subtree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Open(usize),
    Sub(OchaTree),
}

/// Open vertex with closed leaves attached directly and open children in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OchaTree {
    pub closed: Vec<usize>,
    pub children: Vec<Branch>,
}

impl OchaTree {
    /// Inputs in the order the tree reads them: `(is_open, position)`.
    pub fn reading_order(&self) -> Vec<(bool, usize)> {
        let mut out: Vec<(bool, usize)> = self.closed.iter().map(|&c| (false, c)).collect();
        for ch in &self.children {
            match ch {
                Branch::Open(o) => out.push((true, *o)),
                Branch::Sub(t) => out.extend(t.reading_order()),
            }
        }
        out
    }

    pub fn vertices(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                Branch::Open(_) => 0,
                Branch::Sub(t) => t.vertices(),
            })
            .sum::<usize>()
    }
}

impl fmt::Display for OchaTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for c in &self.closed {
            write!(f, "c{c} ")?;
        }
        write!(f, "|")?;
        for ch in &self.children {
            match ch {
                Branch::Open(o) => write!(f, " o{o}")?,
                Branch::Sub(t) => write!(f, " {t}")?,
            }
        }
        write!(f, "]")
    }
}

/// All OCHA trees with closed inputs `closed` and open inputs `lo..hi`.
/// No vertex is a bare unary open vertex.
pub fn ocha_trees(closed: &[usize], lo: usize, hi: usize) -> Vec<OchaTree> {
    let mut out = Vec::new();
    let n = closed.len();
    fn splits(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo == hi {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for mid in lo + 1..=hi {
            for mut rest in splits(mid, hi) {
                rest.insert(0, (lo, mid));
                out.push(rest);
            }
        }
        out
    }
    for blocks in splits(lo, hi) {
        let s = blocks.len();
        // each closed input goes to the root (0) or to block k (1..=s)
        let total = (s + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut root = Vec::new();
            let mut per_block: Vec<Vec<usize>> = vec![Vec::new(); s];
            for &ci in closed {
                let t = c % (s + 1);
                c /= s + 1;
                if t == 0 {
                    root.push(ci);
                } else {
                    per_block[t - 1].push(ci);
                }
            }
            if root.is_empty() && s == 1 {
                continue;
            }
            let mut options: Vec<Vec<Branch>> = Vec::new();
            let mut dead = false;
            for (k, &(a, b)) in blocks.iter().enumerate() {
                if b - a == 1 && per_block[k].is_empty() {
                    options.push(vec![Branch::Open(a)]);
                } else {
                    let subs = ocha_trees(&per_block[k], a, b);
                    if subs.is_empty() {
                        dead = true;
                        break;
                    }
                    options.push(subs.into_iter().map(Branch::Sub).collect());
                }
            }
            if dead {
                continue;
            }
            for combo in product(&options) {
                out.push(OchaTree {
                    closed: root.clone(),
                    children: combo,
                });
            }
        }
    }
    out.sort();
    out
}

/// Shape class of a transferred operation, used to group vanishing claims.
pub fn forbidden_shape(p: usize, q: usize) -> bool {
    (p >= 1 && q >= 2) || (p >= 2 && q == 1) || (p == 0 && q >= 3)
}

/// One evaluated tree of a transferred operation.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TreeTerm {
    pub tree: String,
    pub value: String,
    pub zero: bool,
}

type TreeInputs = (OchaTree, Vec<Monomial>, Vec<Monomial>);

/// Transfer of an OCHA along a retract of its open part, with the closed
/// part transferred along the identity.
pub struct OchaTransfer<'a> {
    pub source: &'a dyn OchaOps,
    pub retract: &'a dyn Retract,
    /// Sign on internal edges.
    pub edge_sign: Scalar,
    trees: RefCell<HashMap<(usize, usize), Vec<OchaTree>>>,
    memo: RefCell<HashMap<TreeInputs, Poly>>,
    leaves: RefCell<HashMap<Monomial, Poly>>,
}

impl<'a> OchaTransfer<'a> {
    pub fn new(source: &'a dyn OchaOps, retract: &'a dyn Retract) -> OchaTransfer<'a> {
        OchaTransfer {
            source,
            retract,
            edge_sign: -Scalar::ONE,
            trees: RefCell::new(HashMap::new()),
            memo: RefCell::new(HashMap::new()),
            leaves: RefCell::new(HashMap::new()),
        }
    }

    pub fn trees(&self, p: usize, q: usize) -> Vec<OchaTree> {
        self.trees
            .borrow_mut()
            .entry((p, q))
            .or_insert_with(|| ocha_trees(&(0..p).collect::<Vec<_>>(), 0, q))
            .clone()
    }

    fn leaf(&self, o: &Monomial) -> Poly {
        if let Some(v) = self.leaves.borrow().get(o) {
            return v.clone();
        }
        let v = self.retract.i(o);
        self.leaves.borrow_mut().insert(o.clone(), v.clone());
        v
    }

    /// Value of a vertex before the outgoing edge, memoized on the subtree
    /// and its letters.
    fn eval(&self, t: &OchaTree, c: &[Monomial], o: &[Monomial]) -> Poly {
        // canonical key: relabel letters in reading order
        let (shape, cl, ol) = canonical(t, c, o);
        let key = (shape, cl, ol);
        if let Some(v) = self.memo.borrow().get(&key) {
            return v.clone();
        }
        let closed: Vec<Poly> = t
            .closed
            .iter()
            .map(|&k| Poly::monomial(c[k].clone(), Scalar::ONE))
            .collect();
        let mut kids = Vec::new();
        for ch in &t.children {
            let v = match ch {
                Branch::Open(k) => self.leaf(&o[*k]),
                Branch::Sub(s) => {
                    let inner = self.eval(s, c, o);
                    apply_h(self.retract, &inner).scaled(self.edge_sign)
                }
            };
            kids.push(v);
        }
        let cr: Vec<&Poly> = closed.iter().collect();
        let kr: Vec<&Poly> = kids.iter().collect();
        let v = if kr.iter().any(|k| k.is_zero()) {
            Poly::zero()
        } else {
            n_vectors(self.source, &cr, &kr)
        };
        self.memo.borrow_mut().insert(key, v.clone());
        v
    }

    fn tree_sign(&self, t: &OchaTree, c: &[Monomial], o: &[Monomial]) -> Scalar {
        let p = c.len();
        let mut degrees: Vec<i32> = c
            .iter()
            .map(|m| self.source.closed_alg().bidegree(m).degree - 1)
            .collect();
        degrees.extend(
            o.iter()
                .map(|m| self.source.open_alg().bidegree(m).degree - 1),
        );
        let perm: Vec<usize> = t
            .reading_order()
            .into_iter()
            .map(|(open, k)| if open { p + k } else { k })
            .collect();
        Scalar::from(koszul_sign(&perm, &degrees).expect("reading order is a permutation") as i64)
    }

    /// Contribution of a single tree, after `p`.
    pub fn tree_value(&self, t: &OchaTree, c: &[Monomial], o: &[Monomial]) -> Poly {
        let v = self.eval(t, c, o);
        apply_p(self.retract, &v).scaled(self.tree_sign(t, c, o))
    }

    /// All trees for this word, evaluated.
    pub fn tree_terms(&self, c: &[Monomial], o: &[Monomial]) -> Vec<(OchaTree, Poly)> {
        self.trees(c.len(), o.len())
            .into_iter()
            .map(|t| {
                let v = self.tree_value(&t, c, o);
                (t, v)
            })
            .collect()
    }
}

fn canonical(
    t: &OchaTree,
    c: &[Monomial],
    o: &[Monomial],
) -> (OchaTree, Vec<Monomial>, Vec<Monomial>) {
    let mut cl = Vec::new();
    let mut ol = Vec::new();
    fn walk(
        t: &OchaTree,
        c: &[Monomial],
        o: &[Monomial],
        cl: &mut Vec<Monomial>,
        ol: &mut Vec<Monomial>,
    ) -> OchaTree {
        let closed = t
            .closed
            .iter()
            .map(|&k| {
                cl.push(c[k].clone());
                cl.len() - 1
            })
            .collect();
        let children = t
            .children
            .iter()
            .map(|ch| match ch {
                Branch::Open(k) => {
                    ol.push(o[*k].clone());
                    Branch::Open(ol.len() - 1)
                }
                Branch::Sub(s) => Branch::Sub(walk(s, c, o, cl, ol)),
            })
            .collect();
        OchaTree { closed, children }
    }
    let shape = walk(t, c, o, &mut cl, &mut ol);
    (shape, cl, ol)
}

impl OchaOps for OchaTransfer<'_> {
    fn closed_alg(&self) -> &FreeSCAlgebra {
        self.source.closed_alg()
    }
    fn open_alg(&self) -> &FreeSCAlgebra {
        self.retract.small()
    }
    fn ell(&self, c: &[Monomial]) -> Poly {
        self.source.ell(c)
    }
    fn n(&self, c: &[Monomial], o: &[Monomial]) -> Poly {
        if c.is_empty() && o.len() == 1 {
            return self.retract.d_small(&o[0]);
        }
        let mut out = Poly::zero();
        for t in self.trees(c.len(), o.len()) {
            out.add_assign(&self.tree_value(&t, c, o));
        }
        out
    }
}

/// Transfer of an L∞ algebra along a retract of its underlying complex.
/// The source's unary bracket is the big differential and is not a vertex.
pub struct LInftyTransfer<'a> {
    pub source: &'a dyn OchaOps,
    pub retract: &'a dyn Retract,
    pub edge_sign: Scalar,
    trees: RefCell<HashMap<usize, Vec<Tree>>>,
    memo: RefCell<HashMap<(Tree, Vec<Monomial>), Poly>>,
    empty: FreeSCAlgebra,
}

impl<'a> LInftyTransfer<'a> {
    pub fn new(source: &'a dyn OchaOps, retract: &'a dyn Retract) -> LInftyTransfer<'a> {
        LInftyTransfer {
            source,
            retract,
            edge_sign: -Scalar::ONE,
            trees: RefCell::new(HashMap::new()),
            memo: RefCell::new(HashMap::new()),
            empty: FreeSCAlgebra::empty(),
        }
    }

    fn eval(&self, t: &Tree, c: &[Monomial]) -> Poly {
        match t {
            Tree::Leaf(k) => self.retract.i(&c[*k]),
            Tree::Node(ch) => {
                let letters: Vec<Monomial> = t.leaves().iter().map(|&k| c[k].clone()).collect();
                let shape = relabel(t);
                let key = (shape, letters);
                if let Some(v) = self.memo.borrow().get(&key) {
                    return v.clone();
                }
                let kids: Vec<Poly> = ch
                    .iter()
                    .map(|x| match x {
                        Tree::Leaf(_) => self.eval(x, c),
                        Tree::Node(_) => {
                            apply_h(self.retract, &self.eval(x, c)).scaled(self.edge_sign)
                        }
                    })
                    .collect();
                let kr: Vec<&Poly> = kids.iter().collect();
                let v = ell_vectors(self.source, &kr);
                self.memo.borrow_mut().insert(key, v.clone());
                v
            }
        }
    }

    pub fn tree_value(&self, t: &Tree, c: &[Monomial]) -> Poly {
        let degrees: Vec<i32> = c
            .iter()
            .map(|m| self.source.closed_alg().bidegree(m).degree - 1)
            .collect();
        let perm = t.leaves();
        let s =
            Scalar::from(koszul_sign(&perm, &degrees).expect("leaves form a permutation") as i64);
        apply_p(self.retract, &self.eval(t, c)).scaled(s)
    }
}

fn relabel(t: &Tree) -> Tree {
    fn walk(t: &Tree, next: &mut usize) -> Tree {
        match t {
            Tree::Leaf(_) => {
                *next += 1;
                Tree::Leaf(*next - 1)
            }
            Tree::Node(ch) => Tree::Node(ch.iter().map(|c| walk(c, next)).collect()),
        }
    }
    walk(t, &mut 0)
}

impl OchaOps for LInftyTransfer<'_> {
    fn closed_alg(&self) -> &FreeSCAlgebra {
        self.retract.small()
    }
    fn open_alg(&self) -> &FreeSCAlgebra {
        &self.empty
    }
    fn ell(&self, c: &[Monomial]) -> Poly {
        match c.len() {
            0 => apply_p(self.retract, &self.source.ell(&[])),
            1 => self.retract.d_small(&c[0]),
            k => {
                let trees = self
                    .trees
                    .borrow_mut()
                    .entry(k)
                    .or_insert_with(|| enumerate_trees(k, Flavor::Rooted))
                    .clone();
                let mut out = Poly::zero();
                for t in &trees {
                    out.add_assign(&self.tree_value(t, c));
                }
                out
            }
        }
    }
    fn n(&self, _c: &[Monomial], _o: &[Monomial]) -> Poly {
        Poly::zero()
    }
}

/// `p ∘ op ∘ (i ⊗ i)` for the open binary operation, the closed form of the
/// arity-two transfer.
pub fn binary_closed_form(
    source: &dyn OchaOps,
    r: &dyn Retract,
    a: &Monomial,
    b: &Monomial,
) -> Poly {
    let ia = apply_i(r, &Poly::monomial(a.clone(), Scalar::ONE));
    let ib = apply_i(r, &Poly::monomial(b.clone(), Scalar::ONE));
    apply_p(r, &n_vectors(source, &[], &[&ia, &ib]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_counts() {
        assert_eq!(enumerate_trees(2, Flavor::Planar).len(), 1);
        assert_eq!(enumerate_trees(3, Flavor::Planar).len(), 3);
        assert_eq!(enumerate_trees(4, Flavor::Planar).len(), 11);
        assert_eq!(enumerate_trees(2, Flavor::Rooted).len(), 1);
        assert_eq!(enumerate_trees(3, Flavor::Rooted).len(), 4);
        assert_eq!(enumerate_trees(4, Flavor::Rooted).len(), 26);
    }

    #[test]
    fn ocha_tree_counts() {
        // open-only trees are the planar trees
        assert_eq!(ocha_trees(&[], 0, 3).len(), 3);
        assert_eq!(ocha_trees(&[], 0, 4).len(), 11);
        // one closed, one open: a single vertex
        assert_eq!(ocha_trees(&[0], 0, 1).len(), 1);
        // two closed, one open: root takes both, or one with a subtree below
        assert_eq!(ocha_trees(&[0, 1], 0, 1).len(), 3);
        assert!(ocha_trees(&[], 0, 1).is_empty());
    }

    #[test]
    fn trees_are_distinct() {
        let t = ocha_trees(&[0, 1], 0, 2);
        let mut u = t.clone();
        u.dedup();
        assert_eq!(t.len(), u.len());
    }
}
