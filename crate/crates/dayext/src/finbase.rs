//! Finite sets, finite functions, and quotients by generated equivalence
//! relations: the substrate that coends are computed on.
//!
//! Elements are structured tags ([`El`]) with a total order, never raw
//! indices, so carriers sort canonically and reports stay readable. All
//! values are immutable after construction; every operation is pure.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::limits::Limits;

/// A structured element identifier.
///
/// The derived order (variant order first, then contents, lexicographic for
/// sequences) is total and is the canonical order used everywhere: carriers
/// are kept sorted under it and quotient representatives are least elements
/// under it, which makes every downstream construction reproducible.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum El {
    Int(i64),
    Name(String),
    /// An injection tag: which part of a disjoint union an element came from.
    Tag(u32, Box<El>),
    /// An ordered tuple; `Tuple(vec![])` is the canonical one-point element.
    Tuple(Vec<El>),
    /// The graph of a finite function, sorted by key; lets function sets be
    /// carriers themselves (ends and residuals need this).
    Map(Vec<(El, El)>),
}

impl El {
    pub fn name(s: impl Into<String>) -> El {
        El::Name(s.into())
    }

    pub fn int(i: i64) -> El {
        El::Int(i)
    }

    pub fn tag(k: u32, e: El) -> El {
        El::Tag(k, Box::new(e))
    }

    pub fn pair(a: El, b: El) -> El {
        El::Tuple(vec![a, b])
    }

    pub fn tuple(es: Vec<El>) -> El {
        El::Tuple(es)
    }

    /// The empty tuple, used as the point of terminal carriers.
    pub fn unit() -> El {
        El::Tuple(Vec::new())
    }

    pub fn as_tuple(&self) -> Option<&[El]> {
        match self {
            El::Tuple(es) => Some(es),
            _ => None,
        }
    }

    /// Tuple contents, panicking on other variants. For internal invariants
    /// (product carriers are always tuples), not for user input.
    pub fn expect_tuple(&self) -> &[El] {
        self.as_tuple()
            .unwrap_or_else(|| panic!("expected tuple element, found {self}"))
    }
}

impl From<&str> for El {
    fn from(s: &str) -> El {
        El::Name(s.to_string())
    }
}

impl From<i64> for El {
    fn from(i: i64) -> El {
        El::Int(i)
    }
}

impl fmt::Display for El {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            El::Int(i) => write!(f, "{i}"),
            El::Name(s) => write!(f, "{s}"),
            El::Tag(k, e) => write!(f, "{k}#{e}"),
            El::Tuple(es) => {
                write!(f, "(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            El::Map(pairs) => {
                write!(f, "{{")?;
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}↦{v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// A finite set: distinct elements, canonically sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinSet {
    elems: Arc<Vec<El>>,
}

impl FinSet {
    /// Build a set from any element list; sorts and drops duplicates.
    pub fn new(mut elems: Vec<El>) -> FinSet {
        elems.sort();
        elems.dedup();
        FinSet {
            elems: Arc::new(elems),
        }
    }

    pub fn empty() -> FinSet {
        FinSet::new(Vec::new())
    }

    pub fn singleton(e: El) -> FinSet {
        FinSet::new(vec![e])
    }

    /// The one-point set whose element is the empty tuple.
    pub fn point() -> FinSet {
        FinSet::singleton(El::unit())
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, El> {
        self.elems.iter()
    }

    pub fn contains(&self, e: &El) -> bool {
        self.index_of(e).is_some()
    }

    pub fn index_of(&self, e: &El) -> Option<usize> {
        self.elems.binary_search(e).ok()
    }

    pub fn get(&self, i: usize) -> &El {
        &self.elems[i]
    }

    pub fn as_slice(&self) -> &[El] {
        &self.elems
    }

    /// Index lookup that reports the failing element and a context string.
    pub fn require(&self, e: &El, context: &str) -> Result<usize> {
        self.index_of(e)
            .ok_or_else(|| Error::UnknownElement(e.clone(), context.to_string()))
    }

    pub fn is_subset_of(&self, other: &FinSet) -> bool {
        self.iter().all(|e| other.contains(e))
    }
}

impl FromIterator<El> for FinSet {
    fn from_iter<T: IntoIterator<Item = El>>(iter: T) -> FinSet {
        FinSet::new(iter.into_iter().collect())
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// A total function between finite sets, stored as cod-indices in dom order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinFn {
    dom: FinSet,
    cod: FinSet,
    map: Arc<Vec<u32>>,
}

impl FinFn {
    /// Tabulate `f` over `dom`; errors if any image is outside `cod`.
    pub fn from_fn(dom: FinSet, cod: FinSet, mut f: impl FnMut(&El) -> El) -> Result<FinFn> {
        let mut map = Vec::with_capacity(dom.len());
        for e in dom.iter() {
            let img = f(e);
            let idx = cod.require(&img, "image not in codomain")?;
            map.push(idx as u32);
        }
        Ok(FinFn {
            dom,
            cod,
            map: Arc::new(map),
        })
    }

    /// Build from explicit pairs; every domain element must appear exactly once.
    pub fn from_pairs(dom: FinSet, cod: FinSet, pairs: &[(El, El)]) -> Result<FinFn> {
        let mut table: BTreeMap<usize, u32> = BTreeMap::new();
        for (k, v) in pairs {
            let ki = dom.require(k, "assignment key not in domain")?;
            let vi = cod.require(v, "assignment value not in codomain")?;
            if table.insert(ki, vi as u32).is_some() {
                return Err(Error::ShapeMismatch(format!(
                    "element {k} assigned more than once"
                )));
            }
        }
        if table.len() != dom.len() {
            let missing = dom
                .iter()
                .enumerate()
                .find(|(i, _)| !table.contains_key(i))
                .map(|(_, e)| e.clone())
                .expect("some element is unassigned");
            return Err(Error::UnknownElement(
                missing,
                "domain element has no assignment".to_string(),
            ));
        }
        let map: Vec<u32> = table.into_values().collect();
        Ok(FinFn {
            dom,
            cod,
            map: Arc::new(map),
        })
    }

    pub fn identity(set: FinSet) -> FinFn {
        let map: Vec<u32> = (0..set.len() as u32).collect();
        FinFn {
            dom: set.clone(),
            cod: set,
            map: Arc::new(map),
        }
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    /// Image of the i-th domain element, as a codomain index.
    pub fn img_idx(&self, i: usize) -> usize {
        self.map[i] as usize
    }

    pub fn apply(&self, e: &El) -> Result<&El> {
        let i = self.dom.require(e, "argument not in domain")?;
        Ok(self.cod.get(self.img_idx(i)))
    }

    /// `self` then `g` (so the composite g∘self). Errors unless cod = dom(g).
    pub fn then(&self, g: &FinFn) -> Result<FinFn> {
        if self.cod != g.dom {
            return Err(Error::ShapeMismatch(
                "function composition: codomain does not match next domain".to_string(),
            ));
        }
        let map: Vec<u32> = self.map.iter().map(|&i| g.map[i as usize]).collect();
        Ok(FinFn {
            dom: self.dom.clone(),
            cod: g.cod.clone(),
            map: Arc::new(map),
        })
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        for &i in self.map.iter() {
            if seen[i as usize] {
                return false;
            }
            seen[i as usize] = true;
        }
        true
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        for &i in self.map.iter() {
            seen[i as usize] = true;
        }
        seen.into_iter().all(|b| b)
    }

    pub fn is_bijective(&self) -> bool {
        self.dom.len() == self.cod.len() && self.is_injective()
    }

    pub fn inverse(&self) -> Option<FinFn> {
        if !self.is_bijective() {
            return None;
        }
        let mut inv = vec![0u32; self.dom.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j as usize] = i as u32;
        }
        Some(FinFn {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            map: Arc::new(inv),
        })
    }

    pub fn graph(&self) -> impl Iterator<Item = (&El, &El)> + '_ {
        self.dom
            .iter()
            .enumerate()
            .map(move |(i, e)| (e, self.cod.get(self.img_idx(i))))
    }

    /// The graph as an element, so functions can populate carriers.
    pub fn as_el(&self) -> El {
        El::Map(self.graph().map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    /// Decode a `Map` element back into a function with the given boundary.
    pub fn from_el(dom: FinSet, cod: FinSet, e: &El) -> Result<FinFn> {
        match e {
            El::Map(pairs) => FinFn::from_pairs(dom, cod, pairs),
            other => Err(Error::ShapeMismatch(format!(
                "expected a function graph element, found {other}"
            ))),
        }
    }
}

impl fmt::Display for FinFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.graph().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}↦{v}")?;
        }
        write!(f, "}}")
    }
}

/// Disjoint union of finite sets. Elements are tagged by part index, so equal
/// elements in different parts stay distinct. Returns the carrier and one
/// injection per part; the injections are pairwise disjoint and jointly
/// surjective by construction.
pub fn disjoint_union(parts: &[FinSet]) -> (FinSet, Vec<FinFn>) {
    let mut elems = Vec::new();
    for (k, part) in parts.iter().enumerate() {
        for e in part.iter() {
            elems.push(El::tag(k as u32, e.clone()));
        }
    }
    let carrier = FinSet::new(elems);
    let injections = parts
        .iter()
        .enumerate()
        .map(|(k, part)| {
            FinFn::from_fn(part.clone(), carrier.clone(), |e| El::tag(k as u32, e.clone()))
                .expect("tagged element is in the union carrier")
        })
        .collect();
    (carrier, injections)
}

/// Cartesian product of finite sets. Elements are tuples in lexicographic
/// order of the (sorted) parts; the empty product is the one-point set.
/// Returns the carrier and one projection per part.
pub fn product(parts: &[FinSet]) -> (FinSet, Vec<FinFn>) {
    let mut tuples: Vec<Vec<El>> = vec![Vec::new()];
    for part in parts {
        let mut next = Vec::with_capacity(tuples.len() * part.len());
        for prefix in &tuples {
            for e in part.iter() {
                let mut t = prefix.clone();
                t.push(e.clone());
                next.push(t);
            }
        }
        tuples = next;
    }
    let carrier = FinSet::new(tuples.into_iter().map(El::Tuple).collect());
    let projections = parts
        .iter()
        .enumerate()
        .map(|(k, part)| {
            FinFn::from_fn(carrier.clone(), part.clone(), |e| e.expect_tuple()[k].clone())
                .expect("tuple component is in its part")
        })
        .collect();
    (carrier, projections)
}

/// Product cardinality without materializing, for guard checks.
pub fn product_size(parts: &[FinSet]) -> Option<u128> {
    let mut n: u128 = 1;
    for p in parts {
        n = n.checked_mul(p.len() as u128)?;
    }
    Some(n)
}

/// A partition of a carrier into the classes of a generated equivalence
/// relation, with least-element representatives and the projection map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientResult {
    pub carrier: FinSet,
    /// Classes, each sorted, ordered by their representative.
    pub classes: Vec<FinSet>,
    /// The least element of each class, as a set (aligned with `classes`).
    pub reps: FinSet,
    /// Projection of the carrier onto the representatives.
    pub project: FinFn,
}

impl QuotientResult {
    /// Representative of the class containing `e`.
    pub fn rep_of(&self, e: &El) -> Result<&El> {
        self.project.apply(e)
    }
}

/// Quotient a carrier by the equivalence relation generated by `pairs`.
///
/// Classes are the connected components of the pair graph; the representative
/// of a class is its least element in canonical order. Errors with
/// `UnknownElement` if a pair member is outside the carrier.
pub fn quotient_by_generated(carrier: &FinSet, pairs: &[(El, El)]) -> Result<QuotientResult> {
    let mut uf = UnionFind::new(carrier.len());
    for (a, b) in pairs {
        let ia = carrier.require(a, "equivalence generator outside carrier")?;
        let ib = carrier.require(b, "equivalence generator outside carrier")?;
        uf.union(ia, ib);
    }
    let mut groups: BTreeMap<usize, Vec<El>> = BTreeMap::new();
    for (i, e) in carrier.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push(e.clone());
    }
    // Since the carrier is sorted and roots are least indices, iterating the
    // BTreeMap yields classes ordered by representative.
    let mut classes = Vec::with_capacity(groups.len());
    let mut reps = Vec::with_capacity(groups.len());
    for (root, members) in groups {
        reps.push(carrier.get(root).clone());
        classes.push(FinSet::new(members));
    }
    let reps = FinSet::new(reps);
    let project = FinFn::from_fn(carrier.clone(), reps.clone(), |e| {
        let i = carrier.index_of(e).expect("carrier element");
        carrier.get(uf.find_immutable(i)).clone()
    })
    .expect("roots are representatives");
    Ok(QuotientResult {
        carrier: carrier.clone(),
        classes,
        reps,
        project,
    })
}

/// Enumerate all total functions a → b in lexicographic order of their image
/// vectors. Guarded: |b|^|a| must not exceed `limits.enumeration`.
pub fn function_set(a: &FinSet, b: &FinSet, limits: &Limits) -> Result<FinSet> {
    let count = checked_pow(b.len() as u128, a.len() as u32).ok_or_else(|| {
        Error::guard("function set enumeration", u128::MAX, limits.enumeration)
    })?;
    limits.check_enumeration("function set enumeration", count)?;
    if a.is_empty() {
        // Exactly one empty function, whatever b is.
        return Ok(FinSet::singleton(El::Map(Vec::new())));
    }
    if b.is_empty() {
        return Ok(FinSet::empty());
    }
    let mut images = vec![0usize; a.len()];
    let mut out = Vec::with_capacity(count as usize);
    loop {
        let graph: Vec<(El, El)> = a
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), b.get(images[i]).clone()))
            .collect();
        out.push(El::Map(graph));
        // Odometer: last position increments fastest.
        let mut pos = a.len();
        loop {
            if pos == 0 {
                return Ok(FinSet::new(out));
            }
            pos -= 1;
            images[pos] += 1;
            if images[pos] < b.len() {
                break;
            }
            images[pos] = 0;
        }
    }
}

fn checked_pow(base: u128, exp: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Union-find with least-index roots: the root of a class is always its
/// smallest member index, so representatives are canonical without a
/// separate pass.
#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] as usize != i {
            // Path halving.
            let p = self.parent[i] as usize;
            self.parent[i] = self.parent[p];
            i = self.parent[i] as usize;
        }
        i
    }

    /// Find without compression, for use after all unions are done.
    fn find_immutable(&self, mut i: usize) -> usize {
        while self.parent[i] as usize != i {
            i = self.parent[i] as usize;
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        // Attach the larger root below the smaller so roots stay least.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo as u32;
    }
}
