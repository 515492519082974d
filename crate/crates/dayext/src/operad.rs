//! Multi-composition of partial operations, with its span and pullback
//! variants, the comparison cells these composites induce between extended
//! operations, equational algebra checking, and the coherence axioms for the
//! extension's lax morphism structure.
//!
//! Throughout, an n-ary operation composes with operations of arities
//! k₁,…,kₙ into one of arity Σkₜ. The composite of partial operations exists
//! only when the pairing of the inner actions lands inside the outer domain;
//! the pullback variant instead shrinks the domain to the preimage and always
//! exists; the span variant composes via a comma object and also always
//! exists. Operations are collected extensionally, per arity, in finite
//! working sets.

use std::collections::BTreeMap;
use std::fmt;

use crate::day::{day_extend, day_on_cells, Copresheaf, DayResult};
use crate::error::{Error, Result};
use crate::finbase::{product, El, FinFn, FinSet};
use crate::fincat::{
    check_factors_through, comma_object, full_subcategory, power, product_category, FinCategory,
    FullSubcatInclusion, Functor, NatTrans, PartialOp, SpanOp,
};
use crate::limits::Limits;
use crate::prof::{compose, hom_contravariant, hom_covariant, Composite, IsoCell, ProfCell};

/// Concatenate the component tuples of `parts` into one flat tuple.
fn concat_flat(parts: &[El]) -> El {
    let mut flat = Vec::new();
    for p in parts {
        flat.extend(p.expect_tuple().iter().cloned());
    }
    El::Tuple(flat)
}

/// Split a flat tuple into consecutive tuples of the given widths.
fn slice_flat(e: &El, widths: &[usize]) -> Vec<El> {
    let parts = e.expect_tuple();
    let mut out = Vec::with_capacity(widths.len());
    let mut off = 0;
    for k in widths {
        out.push(El::Tuple(parts[off..off + *k].to_vec()));
        off += *k;
    }
    out
}

/// Split a list of inputs into consecutive slices of the given widths.
fn input_slices<'a>(fs: &'a [Copresheaf], widths: &[usize]) -> Vec<&'a [Copresheaf]> {
    let mut out = Vec::with_capacity(widths.len());
    let mut off = 0;
    for k in widths {
        out.push(&fs[off..off + *k]);
        off += *k;
    }
    out
}

/// The shared shape data of a multi-composition instance: the product of the
/// inner domains, realized as a full subcategory of ℂ^Σk on concatenated
/// tuples, together with the pairing functor into ℂⁿ that applies each inner
/// action to its slice.
struct CompositionShape {
    k_total: usize,
    power_total: FinCategory,
    prod_dom: FullSubcatInclusion,
    pairing: Functor,
}

fn composition_shape(
    theta: &PartialOp,
    thetas: &[PartialOp],
    limits: &Limits,
) -> Result<CompositionShape> {
    if thetas.len() != theta.arity() {
        return Err(Error::ArityMismatch {
            expected: theta.arity(),
            got: thetas.len(),
        });
    }
    for t in thetas {
        if t.base() != theta.base() {
            return Err(Error::ShapeMismatch(
                "multi-composition needs a common base category".into(),
            ));
        }
    }
    let arities: Vec<usize> = thetas.iter().map(|t| t.arity()).collect();
    let k_total: usize = arities.iter().sum();
    let power_total = power(theta.base(), k_total, limits)?;

    let dom_sets: Vec<FinSet> = thetas
        .iter()
        .map(|t| t.domain().sub().objects().clone())
        .collect();
    let (picks, _) = product(&dom_sets);
    let objs: Vec<El> = picks.iter().map(|p| concat_flat(p.expect_tuple())).collect();
    let prod_dom = full_subcategory(&power_total, &FinSet::new(objs))?;

    let pairing = Functor::from_maps(
        prod_dom.sub(),
        theta.domain().ambient(),
        |e| {
            El::Tuple(
                slice_flat(e, &arities)
                    .iter()
                    .enumerate()
                    .map(|(t, dt)| {
                        thetas[t]
                            .action()
                            .apply_obj(dt)
                            .expect("slices of a product object lie in the inner domains")
                            .clone()
                    })
                    .collect(),
            )
        },
        |m| {
            El::Tuple(
                slice_flat(m, &arities)
                    .iter()
                    .enumerate()
                    .map(|(t, mt)| {
                        thetas[t]
                            .action()
                            .apply_mor(mt)
                            .expect("slices of a product morphism lie in the inner domains")
                            .clone()
                    })
                    .collect(),
            )
        },
    )?;

    Ok(CompositionShape {
        k_total,
        power_total,
        prod_dom,
        pairing,
    })
}

/// Compose an n-ary partial operation with n inner partial operations.
///
/// The composite's domain is the product of the inner domains; it exists iff
/// the pairing of the inner actions factors through the outer domain, and in
/// that case its action is the outer action after the factoring. Composing
/// the unit with θ gives back θ; composing θ with units gives back θ exactly
/// when θ is total.
pub fn multi_compose(
    theta: &PartialOp,
    thetas: &[PartialOp],
    limits: &Limits,
) -> Result<Option<PartialOp>> {
    let shape = composition_shape(theta, thetas, limits)?;
    let lift = match check_factors_through(&shape.pairing, theta.domain())? {
        Some(l) => l,
        None => return Ok(None),
    };
    let action = lift.then(theta.action())?;
    Ok(Some(PartialOp::new(
        shape.k_total,
        theta.base().clone(),
        shape.prod_dom,
        action,
    )?))
}

/// Compose after shrinking: the domain is cut down to the preimage of the
/// outer domain under the pairing, so the composite always exists. When the
/// pairing already factors, this agrees with `multi_compose` on the nose.
pub fn multi_compose_pullback(
    theta: &PartialOp,
    thetas: &[PartialOp],
    limits: &Limits,
) -> Result<PartialOp> {
    let shape = composition_shape(theta, thetas, limits)?;
    let inside: Vec<El> = shape
        .prod_dom
        .sub()
        .objects()
        .iter()
        .filter(|e| {
            let img = shape
                .pairing
                .apply_obj(e)
                .expect("product domain object");
            theta.domain().sub().objects().contains(img)
        })
        .cloned()
        .collect();
    let domain = full_subcategory(&shape.power_total, &FinSet::new(inside))?;
    let action = Functor::from_maps(
        domain.sub(),
        theta.base(),
        |e| {
            let img = shape.pairing.apply_obj(e).expect("preimage object");
            theta
                .action()
                .apply_obj(img)
                .expect("pairing image lies in the outer domain")
                .clone()
        },
        |m| {
            let img = shape.pairing.apply_mor(m).expect("preimage morphism");
            theta
                .action()
                .apply_mor(img)
                .expect("pairing image lies in the outer domain")
                .clone()
        },
    )?;
    PartialOp::new(
        shape.k_total,
        theta.base().clone(),
        domain,
        action,
    )
}

/// The comparison square of a pullback composite: the hom profunctors around
/// the preimage subcategory against those around the outer power, with the
/// induced cell between the two composite routes. The cell is an isomorphism
/// exactly when cutting to the preimage loses nothing; partiality produces
/// non-bijective components, which `non_iso_witness` locates.
#[derive(Debug, Clone)]
pub struct PullbackMate {
    /// The pullback composite itself.
    pub pullback: PartialOp,
    /// The route through the preimage subcategory.
    pub through_pullback: Composite,
    /// The route through the outer power category.
    pub through_power: Composite,
    /// The canonical cell from the preimage route to the power route.
    pub cell: ProfCell,
}

pub fn mate_of_pullback(
    theta: &PartialOp,
    thetas: &[PartialOp],
    limits: &Limits,
) -> Result<PullbackMate> {
    let shape = composition_shape(theta, thetas, limits)?;
    let pullback = multi_compose_pullback(theta, thetas, limits)?;
    let i_prime = check_factors_through(pullback.domain().incl(), &shape.prod_dom)?
        .ok_or_else(|| {
            Error::MissingStructure(
                "the preimage domain must sit inside the product of the inner domains".into(),
            )
        })?;
    let theta_e = check_factors_through(&i_prime.then(&shape.pairing)?, theta.domain())?
        .ok_or_else(|| {
            Error::MissingStructure(
                "the restricted pairing must land in the outer domain".into(),
            )
        })?;

    let through_pullback = compose(
        &hom_covariant(&i_prime),
        &hom_contravariant(&theta_e),
        limits,
    )?;
    let through_power = compose(
        &hom_contravariant(&shape.pairing),
        &hom_covariant(theta.domain().incl()),
        limits,
    )?;

    let tgt = through_power.clone();
    let cell = ProfCell::from_fn(
        &through_pullback.prof,
        &through_power.prof,
        |dvec, dd, rep| {
            let [e, u, v] = rep.expect_tuple() else {
                unreachable!("coend representatives are triples")
            };
            let mid = shape
                .pairing
                .apply_obj(e)
                .expect("preimage object lies in the product domain");
            let x = shape.pairing.apply_mor(u).expect("product morphism");
            let y = theta
                .domain()
                .incl()
                .apply_mor(v)
                .expect("outer domain morphism");
            tgt.class_of(dvec, dd, mid, x, y)
                .expect("image triple lies in the target coend")
        },
    )?;

    Ok(PullbackMate {
        pullback,
        through_pullback,
        through_power,
        cell,
    })
}

/// The first component of a cell that fails to be a bijection, reported as
/// (contravariant object, covariant object), if any.
pub fn non_iso_witness(cell: &ProfCell) -> Option<(El, El)> {
    for (di, d) in cell.source().to().objects().iter().enumerate() {
        for (ci, c) in cell.source().from().objects().iter().enumerate() {
            if cell.component_idx(di, ci).inverse().is_none() {
                return Some((d.clone(), c.clone()));
            }
        }
    }
    None
}

/// A morphism between two partial operations with the same domain: a natural
/// transformation between their actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpCell {
    source: PartialOp,
    target: PartialOp,
    cell: NatTrans,
}

impl OpCell {
    pub fn new(source: PartialOp, target: PartialOp, cell: NatTrans) -> Result<OpCell> {
        if source.arity() != target.arity() {
            return Err(Error::ArityMismatch {
                expected: source.arity(),
                got: target.arity(),
            });
        }
        if source.base() != target.base()
            || source.domain().sub().objects() != target.domain().sub().objects()
        {
            return Err(Error::ShapeMismatch(
                "an operation cell needs endpoints with the same domain".into(),
            ));
        }
        if cell.source() != source.action() || cell.target() != target.action() {
            return Err(Error::ShapeMismatch(
                "an operation cell must run between the two actions".into(),
            ));
        }
        Ok(OpCell {
            source,
            target,
            cell,
        })
    }

    pub fn identity(op: &PartialOp) -> OpCell {
        OpCell {
            source: op.clone(),
            target: op.clone(),
            cell: NatTrans::identity(op.action()),
        }
    }

    pub fn source(&self) -> &PartialOp {
        &self.source
    }

    pub fn target(&self) -> &PartialOp {
        &self.target
    }

    pub fn cell(&self) -> &NatTrans {
        &self.cell
    }
}

/// Horizontal composite of operation cells over a multi-composition. Both
/// endpoint composites must exist and share their domain; the component at a
/// product object e is the outer component at the target factoring, after
/// the outer source action applied to the tuple of inner components at the
/// slices of e.
pub fn multi_compose_cells(
    alpha: &OpCell,
    betas: &[OpCell],
    limits: &Limits,
) -> Result<OpCell> {
    let sources: Vec<PartialOp> = betas.iter().map(|b| b.source().clone()).collect();
    let targets: Vec<PartialOp> = betas.iter().map(|b| b.target().clone()).collect();
    let src = multi_compose(alpha.source(), &sources, limits)?.ok_or_else(|| {
        Error::MissingStructure("the source multi-composite does not exist".into())
    })?;
    let tgt = multi_compose(alpha.target(), &targets, limits)?.ok_or_else(|| {
        Error::MissingStructure("the target multi-composite does not exist".into())
    })?;
    if src.domain().sub().objects() != tgt.domain().sub().objects() {
        return Err(Error::ShapeMismatch(
            "the endpoint composites have different domains, so there is no composite cell"
                .into(),
        ));
    }

    let tgt_shape = composition_shape(alpha.target(), &targets, limits)?;
    let lift_tgt = check_factors_through(&tgt_shape.pairing, alpha.target().domain())?
        .expect("the target composite exists, so its pairing factors");
    let arities: Vec<usize> = sources.iter().map(|s| s.arity()).collect();
    let base = alpha.source().base().clone();

    let components = FinFn::from_fn(
        src.domain().sub().objects().clone(),
        base.morphisms().clone(),
        |e| {
            let m = El::Tuple(
                slice_flat(e, &arities)
                    .iter()
                    .enumerate()
                    .map(|(t, dt)| {
                        betas[t]
                            .cell()
                            .components()
                            .apply(dt)
                            .expect("slice lies in the inner domain")
                            .clone()
                    })
                    .collect(),
            );
            let theta_m = alpha
                .source()
                .action()
                .apply_mor(&m)
                .expect("the paired cell lies in the outer domain by fullness");
            let at = alpha
                .cell()
                .components()
                .apply(
                    lift_tgt
                        .apply_obj(e)
                        .expect("product domain object"),
                )
                .expect("outer component");
            base.compose(at, theta_m).expect("composable pair").clone()
        },
    )?;
    let nat = NatTrans::new(src.action().clone(), tgt.action().clone(), components)?;
    OpCell::new(src, tgt, nat)
}

/// Compose span operations: the new apex is the comma object of the outer
/// span's left leg against the product of the inner right legs; the new left
/// leg concatenates the inner left legs, the new right leg continues with the
/// outer right leg. Always defined; only the size guards can refuse.
pub fn multi_compose_span(s: &SpanOp, spans: &[SpanOp], limits: &Limits) -> Result<SpanOp> {
    if spans.len() != s.arity() {
        return Err(Error::ArityMismatch {
            expected: s.arity(),
            got: spans.len(),
        });
    }
    for sp in spans {
        if sp.base() != s.base() {
            return Err(Error::ShapeMismatch(
                "span multi-composition needs a common base category".into(),
            ));
        }
    }
    let base = s.base().clone();
    let k_total: usize = spans.iter().map(|sp| sp.arity()).sum();
    let power_k = power(&base, k_total, limits)?;

    let apexes: Vec<FinCategory> = spans.iter().map(|sp| sp.apex().clone()).collect();
    let (prod_apex, _) = product_category(&apexes, limits)?;
    let rights: Vec<Functor> = spans.iter().map(|sp| sp.right().clone()).collect();
    let paired_rights = Functor::product_of(&rights, &prod_apex, s.left().cod())?;

    let comma = comma_object(s.left(), &paired_rights, limits)?;

    let flattened_lefts = Functor::from_maps(
        &prod_apex,
        &power_k,
        |o| {
            let imgs: Vec<El> = o
                .expect_tuple()
                .iter()
                .enumerate()
                .map(|(t, at)| spans[t].left().apply_obj(at).expect("apex object").clone())
                .collect();
            concat_flat(&imgs)
        },
        |m| {
            let imgs: Vec<El> = m
                .expect_tuple()
                .iter()
                .enumerate()
                .map(|(t, mt)| spans[t].left().apply_mor(mt).expect("apex morphism").clone())
                .collect();
            concat_flat(&imgs)
        },
    )?;

    let left = comma.proj_right.then(&flattened_lefts)?;
    let right = comma.proj_left.then(s.right())?;
    SpanOp::new(k_total, base, left, right)
}

/// A finite working set of operations over one base, indexed by arity.
#[derive(Debug, Clone, Default)]
pub struct OperationFamily {
    by_arity: BTreeMap<usize, Vec<PartialOp>>,
}

impl OperationFamily {
    pub fn new() -> OperationFamily {
        OperationFamily::default()
    }

    pub fn insert(&mut self, op: PartialOp) {
        self.by_arity.entry(op.arity()).or_default().push(op);
    }

    pub fn at(&self, arity: usize) -> &[PartialOp] {
        self.by_arity.get(&arity).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn arities(&self) -> Vec<usize> {
        self.by_arity.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.by_arity.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A composition tree over named operation symbols. `Slot` is an input wire
/// (as a term, the unit operation); `Apply` applies a symbol to subterms.
/// Slots are strictly linear: a term neither duplicates nor permutes its
/// inputs, which are numbered left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Slot,
    Apply(String, Vec<Term>),
}

impl Term {
    /// Number of input wires.
    pub fn arity(&self) -> usize {
        match self {
            Term::Slot => 1,
            Term::Apply(_, kids) => kids.iter().map(Term::arity).sum(),
        }
    }

    fn fmt_numbered(&self, f: &mut fmt::Formatter<'_>, next: &mut usize) -> fmt::Result {
        match self {
            Term::Slot => {
                *next += 1;
                write!(f, "x{}", *next)
            }
            Term::Apply(sym, kids) => {
                write!(f, "{sym}(")?;
                for (i, k) in kids.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    k.fmt_numbered(f, next)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut next = 0;
        self.fmt_numbered(f, &mut next)
    }
}

/// An equation between two terms with the same number of input wires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// An equational theory: named operation symbols with arities and a list of
/// equations between linear terms over those symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub name: String,
    pub ops: Vec<(String, usize)>,
    pub equations: Vec<Equation>,
}

impl Theory {
    fn check_term(&self, term: &Term) -> Result<()> {
        if let Term::Apply(sym, kids) = term {
            let declared = self
                .ops
                .iter()
                .find(|(s, _)| s == sym)
                .ok_or_else(|| Error::UnknownSymbol(sym.clone()))?
                .1;
            if kids.len() != declared {
                return Err(Error::ArityMismatch {
                    expected: declared,
                    got: kids.len(),
                });
            }
            for k in kids {
                self.check_term(k)?;
            }
        }
        Ok(())
    }

    /// Check that all equations use declared symbols at their declared
    /// arities and that each equation's sides take the same number of inputs.
    pub fn validate(&self) -> Result<()> {
        for eq in &self.equations {
            self.check_term(&eq.lhs)?;
            self.check_term(&eq.rhs)?;
            if eq.lhs.arity() != eq.rhs.arity() {
                return Err(Error::ShapeMismatch(format!(
                    "equation {eq} relates terms with different numbers of inputs"
                )));
            }
        }
        Ok(())
    }
}

/// An assignment of partial operations over one base to operation symbols.
#[derive(Debug, Clone)]
pub struct Interpretation {
    base: FinCategory,
    ops: BTreeMap<String, PartialOp>,
}

impl Interpretation {
    pub fn new(base: FinCategory) -> Interpretation {
        Interpretation {
            base,
            ops: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, op: PartialOp) -> Result<()> {
        if op.base() != &self.base {
            return Err(Error::ShapeMismatch(format!(
                "operation `{name}` lives over a different base than the interpretation"
            )));
        }
        self.ops.insert(name.to_string(), op);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&PartialOp> {
        self.ops
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn base(&self) -> &FinCategory {
        &self.base
    }
}

/// Evaluate a term to a partial operation. A bare symbol application (all
/// children are slots) is the interpreted operation itself; nesting composes
/// with `multi_compose`, so the result is `None` as soon as one intermediate
/// composite fails to exist.
pub fn eval_term(
    term: &Term,
    interp: &Interpretation,
    limits: &Limits,
) -> Result<Option<PartialOp>> {
    match term {
        Term::Slot => Ok(Some(PartialOp::unit(interp.base(), limits)?)),
        Term::Apply(sym, kids) => {
            let op = interp.get(sym)?;
            if op.arity() != kids.len() {
                return Err(Error::ArityMismatch {
                    expected: op.arity(),
                    got: kids.len(),
                });
            }
            if kids.iter().all(|k| matches!(k, Term::Slot)) {
                return Ok(Some(op.clone()));
            }
            let mut parts = Vec::with_capacity(kids.len());
            for k in kids {
                match eval_term(k, interp, limits)? {
                    Some(p) => parts.push(p),
                    None => return Ok(None),
                }
            }
            multi_compose(op, &parts, limits)
        }
    }
}

/// Whether a morphism has a two-sided inverse.
fn is_invertible(c: &FinCategory, m: &El) -> bool {
    let (Ok(src), Ok(tgt)) = (c.src_of(m), c.tgt_of(m)) else {
        return false;
    };
    let Ok(back) = c.hom(tgt, src) else {
        return false;
    };
    back.iter().any(|n| {
        c.compose(n, m).ok() == c.id_of(src).ok() && c.compose(m, n).ok() == c.id_of(tgt).ok()
    })
}

struct IsoSearch<'a> {
    mors: Vec<(usize, usize, &'a El)>,
    f: &'a Functor,
    g: &'a Functor,
    cod: &'a FinCategory,
    cands: &'a [Vec<El>],
    steps: u128,
    budget: usize,
}

impl IsoSearch<'_> {
    fn go(&mut self, chosen: &mut Vec<Option<El>>, i: usize) -> Result<bool> {
        if i == chosen.len() {
            return Ok(true);
        }
        for cand in self.cands[i].clone() {
            self.steps += 1;
            if self.steps > self.budget as u128 {
                return Err(Error::guard(
                    "natural isomorphism search",
                    self.steps,
                    self.budget,
                ));
            }
            chosen[i] = Some(cand.clone());
            let ok = self.mors.iter().all(|(s, t, m)| {
                let (Some(ks), Some(kt)) = (&chosen[*s], &chosen[*t]) else {
                    return true;
                };
                let lhs = self
                    .cod
                    .compose(kt, self.f.apply_mor(m).expect("morphism"))
                    .expect("composable");
                let rhs = self
                    .cod
                    .compose(self.g.apply_mor(m).expect("morphism"), ks)
                    .expect("composable");
                lhs == rhs
            });
            if ok && self.go(chosen, i + 1)? {
                return Ok(true);
            }
            chosen[i] = None;
        }
        Ok(false)
    }
}

/// Search for a natural isomorphism between parallel functors by backtracking
/// over invertible components, checking naturality incrementally.
pub fn iso_nat_trans(f: &Functor, g: &Functor, limits: &Limits) -> Result<Option<NatTrans>> {
    if f.dom() != g.dom() || f.cod() != g.cod() {
        return Err(Error::ShapeMismatch(
            "a natural isomorphism needs parallel functors".into(),
        ));
    }
    let dom = f.dom();
    let cod = f.cod();
    let mut cands: Vec<Vec<El>> = Vec::new();
    for o in dom.objects().iter() {
        let hom = cod.hom(f.apply_obj(o)?, g.apply_obj(o)?)?;
        let inv: Vec<El> = hom
            .iter()
            .filter(|m| is_invertible(cod, m))
            .cloned()
            .collect();
        if inv.is_empty() {
            return Ok(None);
        }
        cands.push(inv);
    }
    let mors: Vec<(usize, usize, &El)> = dom
        .morphisms()
        .iter()
        .map(|m| {
            let s = dom
                .objects()
                .index_of(dom.src_of(m).expect("valid morphism"))
                .expect("object");
            let t = dom
                .objects()
                .index_of(dom.tgt_of(m).expect("valid morphism"))
                .expect("object");
            (s, t, m)
        })
        .collect();
    let mut search = IsoSearch {
        mors,
        f,
        g,
        cod,
        cands: &cands,
        steps: 0,
        budget: limits.enumeration,
    };
    let mut chosen: Vec<Option<El>> = vec![None; dom.objects().len()];
    if !search.go(&mut chosen, 0)? {
        return Ok(None);
    }
    let components = FinFn::from_fn(
        dom.objects().clone(),
        cod.morphisms().clone(),
        |o| {
            let i = dom.objects().index_of(o).expect("object");
            chosen[i].clone().expect("assigned component")
        },
    )?;
    Ok(Some(NatTrans::new(f.clone(), g.clone(), components)?))
}

/// One verified law with a stable name and a short explanation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The outcome of a batch of law checks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LawReport {
    pub checks: Vec<LawCheck>,
}

impl LawReport {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(LawCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// How equations are compared in `check_algebra`: strict equality of partial
/// operations, or equality of domains plus a natural isomorphism of actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraMode {
    Strict,
    Pseudo,
}

/// Where two operations with equal domains first disagree, for reporting.
fn first_disagreement(l: &PartialOp, r: &PartialOp) -> String {
    for o in l.domain().sub().objects().iter() {
        let lo = l.action().apply_obj(o).expect("domain object");
        let ro = r.action().apply_obj(o).expect("domain object");
        if lo != ro {
            return format!("the sides differ at {o}: {lo} against {ro}");
        }
    }
    for m in l.domain().sub().morphisms().iter() {
        let lm = l.action().apply_mor(m).expect("domain morphism");
        let rm = r.action().apply_mor(m).expect("domain morphism");
        if lm != rm {
            return format!("the actions differ on the morphism {m}: {lm} against {rm}");
        }
    }
    "no disagreement found".into()
}

/// Check every equation of a theory under an interpretation. Undefined
/// composites are reported as failures, never skipped. Strict mode demands
/// strong equality of the two sides; pseudo mode demands equal domains and a
/// natural isomorphism between the actions.
pub fn check_algebra(
    theory: &Theory,
    interp: &Interpretation,
    mode: AlgebraMode,
    limits: &Limits,
) -> Result<LawReport> {
    theory.validate()?;
    for (sym, arity) in &theory.ops {
        let op = interp.get(sym)?;
        if op.arity() != *arity {
            return Err(Error::ArityMismatch {
                expected: *arity,
                got: op.arity(),
            });
        }
    }
    let mut report = LawReport::default();
    for eq in &theory.equations {
        let name = eq.to_string();
        let lhs = eval_term(&eq.lhs, interp, limits)?;
        let rhs = eval_term(&eq.rhs, interp, limits)?;
        match (lhs, rhs) {
            (None, None) => report.push(name, false, "both sides are undefined composites"),
            (None, Some(_)) => report.push(name, false, "the left side is an undefined composite"),
            (Some(_), None) => {
                report.push(name, false, "the right side is an undefined composite")
            }
            (Some(l), Some(r)) => match mode {
                AlgebraMode::Strict => {
                    if l.strongly_equal(&r) {
                        report.push(name, true, "the sides are strongly equal");
                    } else if l.domain().sub().objects() != r.domain().sub().objects() {
                        report.push(name, false, "the sides have different domains");
                    } else {
                        report.push(name, false, first_disagreement(&l, &r));
                    }
                }
                AlgebraMode::Pseudo => {
                    if l.domain().sub().objects() != r.domain().sub().objects() {
                        report.push(name, false, "the sides have different domains");
                    } else {
                        match iso_nat_trans(l.action(), r.action(), limits)? {
                            Some(_) => report.push(
                                name,
                                true,
                                "the actions are naturally isomorphic on the shared domain",
                            ),
                            None => report.push(
                                name,
                                false,
                                "no natural isomorphism between the actions",
                            ),
                        }
                    }
                }
            },
        }
    }
    Ok(report)
}

/// Core of the composition comparison: for a multi-composite that exists,
/// extend both ways and build the canonical isomorphism between the one-step
/// extension of the composite and the nested extension, by splitting and
/// concatenating representatives.
fn witness_parts(
    theta: &PartialOp,
    thetas: &[PartialOp],
    fs: &[Copresheaf],
    limits: &Limits,
) -> Result<(PartialOp, DayResult, Vec<DayResult>, DayResult, IsoCell)> {
    let composite = multi_compose(theta, thetas, limits)?.ok_or_else(|| {
        Error::MissingStructure(
            "the multi-composite does not exist, so there is no comparison cell".into(),
        )
    })?;
    let arities: Vec<usize> = thetas.iter().map(|t| t.arity()).collect();
    let total: usize = arities.iter().sum();
    if fs.len() != total {
        return Err(Error::ArityMismatch {
            expected: total,
            got: fs.len(),
        });
    }
    for f in fs {
        if f.base() != theta.base() {
            return Err(Error::ShapeMismatch(
                "inputs must live over the operation's base".into(),
            ));
        }
    }

    let flat = day_extend(&composite, fs, limits)?;
    let slices = input_slices(fs, &arities);
    let inner: Vec<DayResult> = thetas
        .iter()
        .zip(&slices)
        .map(|(t, fst)| day_extend(t, fst, limits))
        .collect::<Result<_>>()?;
    let gs: Vec<Copresheaf> = inner.iter().map(|d| d.output.clone()).collect();
    let nested = day_extend(theta, &gs, limits)?;

    let shape = composition_shape(theta, thetas, limits)?;
    let lift = check_factors_through(&shape.pairing, theta.domain())?
        .expect("the composite exists, so the pairing factors");
    let base = theta.base().clone();
    let power_n = theta.domain().ambient().clone();

    let fw_inner = &inner;
    let fw_nested = &nested;
    let forward = ProfCell::from_fn(
        flat.output.prof(),
        nested.output.prof(),
        |_unit, a, rep| {
            let [cvec, xs, vis] = rep.expect_tuple() else {
                unreachable!("extension classes are triples")
            };
            let [e, u, w] = vis.expect_tuple() else {
                unreachable!("inner coend classes are triples")
            };
            let cs = cvec.expect_tuple();
            let xsp = xs.expect_tuple();
            let es = e.expect_tuple();
            let us = u.expect_tuple();
            let mut off = 0;
            let mut ys = Vec::with_capacity(arities.len());
            let mut bs = Vec::with_capacity(arities.len());
            for (t, kt) in arities.iter().enumerate() {
                let dt = El::Tuple(es[off..off + *kt].to_vec());
                let bt = thetas[t]
                    .action()
                    .apply_obj(&dt)
                    .expect("slice lies in the inner domain")
                    .clone();
                let idb = base.id_of(&bt).expect("base object").clone();
                let yt = fw_inner[t]
                    .element(
                        &bt,
                        &El::Tuple(cs[off..off + *kt].to_vec()),
                        &El::Tuple(xsp[off..off + *kt].to_vec()),
                        &dt,
                        &El::Tuple(us[off..off + *kt].to_vec()),
                        &idb,
                    )
                    .expect("inner extension element");
                ys.push(yt);
                bs.push(bt);
                off += *kt;
            }
            let bvec = El::Tuple(bs);
            let dmid = lift.apply_obj(e).expect("composite domain object").clone();
            let umid = power_n.id_of(&bvec).expect("power object").clone();
            fw_nested
                .element(a, &bvec, &El::Tuple(ys), &dmid, &umid, w)
                .expect("nested extension element")
        },
    )?;

    let bw_flat = &flat;
    let backward = ProfCell::from_fn(
        nested.output.prof(),
        flat.output.prof(),
        |_unit, a, rep| {
            let [_bvec, ys, vis] = rep.expect_tuple() else {
                unreachable!("extension classes are triples")
            };
            let [_d, v, w] = vis.expect_tuple() else {
                unreachable!("inner coend classes are triples")
            };
            let mut cs = Vec::new();
            let mut xsf = Vec::new();
            let mut es = Vec::new();
            let mut us = Vec::new();
            let mut ws = Vec::with_capacity(arities.len());
            for yt in ys.expect_tuple() {
                let [ct, xst, ivis] = yt.expect_tuple() else {
                    unreachable!("inner extension classes are triples")
                };
                let [et, ut, wt] = ivis.expect_tuple() else {
                    unreachable!("inner coend classes are triples")
                };
                cs.extend(ct.expect_tuple().iter().cloned());
                xsf.extend(xst.expect_tuple().iter().cloned());
                es.extend(et.expect_tuple().iter().cloned());
                us.extend(ut.expect_tuple().iter().cloned());
                ws.push(wt.clone());
            }
            let wvec = El::Tuple(ws);
            let vw = power_n.compose(v, &wvec).expect("composable pair").clone();
            let thz = theta
                .action()
                .apply_mor(&vw)
                .expect("the lifted morphism lies in the outer domain");
            let wfin = base.compose(w, thz).expect("composable pair").clone();
            bw_flat
                .element(
                    a,
                    &El::Tuple(cs),
                    &El::Tuple(xsf),
                    &El::Tuple(es),
                    &El::Tuple(us),
                    &wfin,
                )
                .expect("one-step extension element")
        },
    )?;

    let witness = IsoCell::new(forward, backward)?;
    Ok((composite, flat, inner, nested, witness))
}

/// The canonical collapse of the unit operation's extension: an isomorphism
/// from the extension of the unit at an input back onto that input, sending
/// the class of (c, x, d, γ, w) to the input's action along w∘γ applied to x.
pub fn day_unit_witness(f: &Copresheaf, limits: &Limits) -> Result<(DayResult, IsoCell)> {
    let base = f.base().clone();
    let one = PartialOp::unit(&base, limits)?;
    let day = day_extend(&one, std::slice::from_ref(f), limits)?;
    let power1 = one.domain().ambient().clone();

    let forward = ProfCell::from_fn(day.output.prof(), f.prof(), |_unit, _a, rep| {
        let [_cvec, xs, vis] = rep.expect_tuple() else {
            unreachable!("extension classes are triples")
        };
        let [_d, u, w] = vis.expect_tuple() else {
            unreachable!("inner coend classes are triples")
        };
        let gamma = &u.expect_tuple()[0];
        let x = &xs.expect_tuple()[0];
        let m = base.compose(w, gamma).expect("composable pair").clone();
        f.action(&m)
            .expect("base morphism")
            .apply(x)
            .expect("input element")
            .clone()
    })?;

    let bw_day = &day;
    let backward = ProfCell::from_fn(f.prof(), day.output.prof(), |_unit, a, x| {
        let ca = El::tuple(vec![a.clone()]);
        let ida = power1.id_of(&ca).expect("power object").clone();
        let id_base = base.id_of(a).expect("base object").clone();
        bw_day
            .element(a, &ca, &El::tuple(vec![x.clone()]), &ca, &ida, &id_base)
            .expect("unit extension element")
    })?;

    Ok((day, IsoCell::new(forward, backward)?))
}

/// The comparison data produced by `day_pseudomorphism_check`: the composite,
/// the one-step and nested extensions, the isomorphism between them, the unit
/// collapses for each input, and the verification report.
#[derive(Debug, Clone)]
pub struct PseudomorphismCheck {
    pub composite: PartialOp,
    pub flat: DayResult,
    pub inner: Vec<DayResult>,
    pub nested: DayResult,
    pub witness: IsoCell,
    pub unit_witnesses: Vec<IsoCell>,
    pub report: LawReport,
}

/// Verify that extending operations is a pseudomorphism on a concrete
/// instance: build the canonical comparison between the one-step extension of
/// θ∘θ⃗ and the nested extension, verify it is an isomorphism, and collapse
/// the unit extension at every input.
pub fn day_pseudomorphism_check(
    theta: &PartialOp,
    thetas: &[PartialOp],
    fs: &[Copresheaf],
    limits: &Limits,
) -> Result<PseudomorphismCheck> {
    let (composite, flat, inner, nested, witness) = witness_parts(theta, thetas, fs, limits)?;
    let mut report = LawReport::default();
    report.push(
        "the composition comparison is a natural isomorphism",
        witness.forward().is_iso(),
        format!(
            "between a one-step extension with {} classes and a nested extension with {}",
            flat.output.total_elements(),
            nested.output.total_elements()
        ),
    );
    let mut unit_witnesses = Vec::with_capacity(fs.len());
    for (i, f) in fs.iter().enumerate() {
        let (_, iso) = day_unit_witness(f, limits)?;
        report.push(
            format!("the unit comparison at input {} is a natural isomorphism", i + 1),
            iso.forward().is_iso(),
            "the extension of the unit collapses onto the input",
        );
        unit_witnesses.push(iso);
    }
    Ok(PseudomorphismCheck {
        composite,
        flat,
        inner,
        nested,
        witness,
        unit_witnesses,
        report,
    })
}

/// The 2-cell data of a lax morphism structure on the extension: a way to
/// produce the comparison cell of a multi-composite at given inputs, and the
/// unit comparison cell at a given input. The canonical witness uses the
/// cells the extension itself carries; tests may substitute perturbed ones.
pub struct MorphismWitness {
    pub eta: Box<dyn Fn(&PartialOp, &[PartialOp], &[Copresheaf], &Limits) -> Result<ProfCell>>,
    pub lambda: Box<dyn Fn(&Copresheaf, &Limits) -> Result<ProfCell>>,
}

impl MorphismWitness {
    pub fn canonical() -> MorphismWitness {
        MorphismWitness {
            eta: Box::new(|theta, thetas, fs, limits| {
                let (_, _, _, _, w) = witness_parts(theta, thetas, fs, limits)?;
                Ok(w.forward().clone())
            }),
            lambda: Box::new(|f, limits| Ok(day_unit_witness(f, limits)?.1.forward().clone())),
        }
    }
}

/// Check the two coherence axioms of the lax morphism structure on a two-level
/// nesting: the two comparison routes from the fully flattened extension to
/// the fully nested one must agree, and the unit comparisons must collapse to
/// identities. The left unit diagram only exists when composing θ with units
/// is defined, that is, when θ is total; it is skipped otherwise.
pub fn coherence_check(
    witness: &MorphismWitness,
    theta: &PartialOp,
    thetas: &[PartialOp],
    thetass: &[Vec<PartialOp>],
    fs: &[Copresheaf],
    limits: &Limits,
) -> Result<LawReport> {
    if thetas.len() != theta.arity() || thetass.len() != thetas.len() {
        return Err(Error::ArityMismatch {
            expected: theta.arity(),
            got: thetas.len().min(thetass.len()),
        });
    }
    for (t, th) in thetas.iter().enumerate() {
        if thetass[t].len() != th.arity() {
            return Err(Error::ArityMismatch {
                expected: th.arity(),
                got: thetass[t].len(),
            });
        }
    }
    let flats: Vec<PartialOp> = thetass.iter().flat_map(|v| v.iter().cloned()).collect();
    let total: usize = flats.iter().map(|f| f.arity()).sum();
    if fs.len() != total {
        return Err(Error::ArityMismatch {
            expected: total,
            got: fs.len(),
        });
    }

    let mut report = LawReport::default();

    let mut inner_ops = Vec::with_capacity(thetas.len());
    for (t, th) in thetas.iter().enumerate() {
        match multi_compose(th, &thetass[t], limits)? {
            Some(op) => inner_ops.push(op),
            None => {
                report.push(
                    format!("inner composite {} exists", t + 1),
                    false,
                    "the multi-composite is undefined, so the coherence square has no source",
                );
                return Ok(report);
            }
        }
    }
    let outer_nested = match multi_compose(theta, &inner_ops, limits)? {
        Some(op) => op,
        None => {
            report.push(
                "the nested composite exists",
                false,
                "the outer multi-composite with the inner composites is undefined",
            );
            return Ok(report);
        }
    };
    let mid = match multi_compose(theta, thetas, limits)? {
        Some(op) => op,
        None => {
            report.push(
                "the two-level composite exists",
                false,
                "the outer multi-composite is undefined",
            );
            return Ok(report);
        }
    };
    let outer_flat = match multi_compose(&mid, &flats, limits)? {
        Some(op) => op,
        None => {
            report.push(
                "the flattened composite exists",
                false,
                "the flattened multi-composite is undefined",
            );
            return Ok(report);
        }
    };
    report.push(
        "the two bracketings give the same operation",
        outer_nested.strongly_equal(&outer_flat),
        "multi-composition is strictly associative on the nose",
    );

    let widths: Vec<usize> = thetass
        .iter()
        .map(|v| v.iter().map(|o| o.arity()).sum())
        .collect();
    let slices = input_slices(fs, &widths);

    let eta_outer = (witness.eta)(theta, &inner_ops, fs, limits)?;
    let mut per_t = Vec::with_capacity(thetas.len());
    for t in 0..thetas.len() {
        per_t.push((witness.eta)(&thetas[t], &thetass[t], slices[t], limits)?);
    }
    let whisk = day_on_cells(theta, &per_t, limits)?;
    let route_nested_first = eta_outer.then(&whisk.cell)?;

    let eta_flat = (witness.eta)(&mid, &flats, fs, limits)?;
    let mut gs = Vec::with_capacity(flats.len());
    {
        let mut off = 0;
        for inner in thetass {
            for op in inner {
                let a = op.arity();
                gs.push(day_extend(op, &fs[off..off + a], limits)?.output);
                off += a;
            }
        }
    }
    let eta_top = (witness.eta)(theta, thetas, &gs, limits)?;
    let route_flat_first = eta_flat.then(&eta_top)?;

    report.push(
        "associativity coherence",
        route_nested_first == route_flat_first,
        "the two comparison routes agree componentwise",
    );

    let hs: Vec<Copresheaf> = per_t
        .iter()
        .map(|c| Copresheaf::new(c.source().clone()))
        .collect::<Result<_>>()?;

    if theta.is_total() {
        let units: Vec<PartialOp> = (0..theta.arity())
            .map(|_| PartialOp::unit(theta.base(), limits))
            .collect::<Result<_>>()?;
        let unit_comp = multi_compose(theta, &units, limits)?
            .expect("a total operation composes with units");
        report.push(
            "composing with units returns the operation",
            unit_comp.strongly_equal(theta),
            "the strict unit law on operations",
        );
        let eta_u = (witness.eta)(theta, &units, &hs, limits)?;
        let lams: Vec<ProfCell> = hs
            .iter()
            .map(|h| (witness.lambda)(h, limits))
            .collect::<Result<_>>()?;
        let whisk_u = day_on_cells(theta, &lams, limits)?;
        let left = eta_u.then(&whisk_u.cell)?;
        report.push(
            "left unit coherence",
            left == ProfCell::identity(left.source()),
            "the comparison followed by the unit collapses is the identity",
        );
    } else {
        report.push(
            "left unit coherence",
            true,
            "skipped: the operation is partial, so composing it with units is undefined",
        );
    }

    let one = PartialOp::unit(theta.base(), limits)?;
    let day_theta = day_extend(theta, &hs, limits)?;
    let eta_r = (witness.eta)(&one, std::slice::from_ref(theta), &hs, limits)?;
    let lam_top = (witness.lambda)(&day_theta.output, limits)?;
    let right = eta_r.then(&lam_top)?;
    report.push(
        "right unit coherence",
        right == ProfCell::identity(right.source()),
        "the comparison at the unit followed by the unit collapse is the identity",
    );

    Ok(report)
}
