//! Possible-world models and the logic connectives over them: posets of
//! worlds, heap models with a partial join, propositions as upward-closed
//! world sets, Heyting connectives, nominals and the at operation, and the
//! separating conjunction with its implication.
//!
//! Every connective has two independent implementations. `eval` computes
//! through the extension machinery (extensions of constants, spans, the join
//! operation, and its residual); `oracle_eval` computes the same connectives
//! by direct quantifier clauses over the world tables. The module's master
//! property is that the two agree on every model and formula.

use std::collections::BTreeMap;
use std::fmt;

use crate::day::{
    day_extend, day_extend_cached, day_extend_span, day_inner, residual, Proposition,
};
use crate::error::{Error, Result};
use crate::finbase::{El, FinSet};
use crate::fincat::{
    poset_as_category, power, FinCategory, Functor, PartialOp, SpanOp,
};
use crate::limits::Limits;
use crate::operad::{multi_compose_pullback, LawReport};
use crate::prof::Composite;

/// A poset of worlds presented as a thin category: at most one arrow between
/// any ordered pair of worlds, none in both directions between distinct ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeFrame {
    worlds: FinCategory,
}

impl KripkeFrame {
    /// Wrap an existing category, verifying thinness and antisymmetry.
    pub fn new(worlds: FinCategory) -> Result<KripkeFrame> {
        for a in worlds.objects().iter() {
            for b in worlds.objects().iter() {
                let forward = worlds.hom(a, b)?;
                if forward.len() > 1 {
                    return Err(Error::NotAPoset(format!(
                        "two distinct arrows from {a} to {b}"
                    )));
                }
                if a < b && !forward.is_empty() && !worlds.hom(b, a)?.is_empty() {
                    return Err(Error::NotAPoset(format!(
                        "{a} and {b} are below each other"
                    )));
                }
            }
        }
        Ok(KripkeFrame { worlds })
    }

    /// Build from elements and a generating set of order pairs; the order is
    /// closed reflexively and transitively, and antisymmetry is verified.
    pub fn from_order(elements: &[El], order: &[(El, El)]) -> Result<KripkeFrame> {
        Ok(KripkeFrame {
            worlds: poset_as_category(elements, order)?,
        })
    }

    /// Worlds with the trivial order.
    pub fn discrete(elements: &[El]) -> Result<KripkeFrame> {
        KripkeFrame::from_order(elements, &[])
    }

    pub fn worlds(&self) -> &FinCategory {
        &self.worlds
    }

    pub fn elements(&self) -> &FinSet {
        self.worlds.objects()
    }

    pub fn leq(&self, a: &El, b: &El) -> bool {
        self.worlds
            .hom(a, b)
            .map(|h| !h.is_empty())
            .unwrap_or(false)
    }

    /// Whether the order is trivial (only identity arrows).
    pub fn is_discrete(&self) -> bool {
        self.worlds.morphisms().len() == self.worlds.objects().len()
    }

    /// The least world, when one exists.
    pub fn bottom(&self) -> Option<&El> {
        self.elements()
            .iter()
            .find(|r| self.elements().iter().all(|b| self.leq(r, b)))
    }
}

/// A frame of heaps with a partial binary join. The join's domain records
/// which pairs of heaps are disjoint; an optional root must lie below every
/// heap, and an optional unit heap must satisfy the unit laws on the nose.
#[derive(Debug, Clone)]
pub struct HeapModel {
    heaps: KripkeFrame,
    join: PartialOp,
    root: Option<El>,
    unit: Option<El>,
}

impl HeapModel {
    pub fn new(
        heaps: KripkeFrame,
        join: PartialOp,
        root: Option<El>,
        unit: Option<El>,
    ) -> Result<HeapModel> {
        if join.base() != heaps.worlds() {
            return Err(Error::ShapeMismatch(
                "the join operation must live over the heap frame".into(),
            ));
        }
        if join.arity() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: join.arity(),
            });
        }
        if let Some(r) = &root {
            heaps.elements().require(r, "declared root heap")?;
            if !heaps.elements().iter().all(|h| heaps.leq(r, h)) {
                return Err(Error::ShapeMismatch(format!(
                    "the declared root {r} is not below every heap"
                )));
            }
        }
        if let Some(u) = &unit {
            heaps.elements().require(u, "declared unit heap")?;
            for h in heaps.elements().iter() {
                let left = join.apply(&El::tuple(vec![u.clone(), h.clone()]));
                let right = join.apply(&El::tuple(vec![h.clone(), u.clone()]));
                if left != Some(h) || right != Some(h) {
                    return Err(Error::ShapeMismatch(format!(
                        "the declared unit {u} does not satisfy the unit laws at {h}"
                    )));
                }
            }
        }
        Ok(HeapModel {
            heaps,
            join,
            root,
            unit,
        })
    }

    pub fn heaps(&self) -> &KripkeFrame {
        &self.heaps
    }

    pub fn join(&self) -> &PartialOp {
        &self.join
    }

    pub fn root(&self) -> Option<&El> {
        self.root.as_ref()
    }

    pub fn unit(&self) -> Option<&El> {
        self.unit.as_ref()
    }

    /// Whether the pair (l, r) is disjoint, that is, in the join's domain.
    pub fn disjoint(&self, l: &El, r: &El) -> bool {
        self.join
            .domain()
            .sub()
            .objects()
            .contains(&El::tuple(vec![l.clone(), r.clone()]))
    }

    /// Check commutativity and associativity of the join where defined:
    /// commutativity as equality of the join with its transpose, and
    /// associativity as strong equality of the two pullback-composed
    /// bracketings (each restricted to the pairs where it is defined).
    pub fn join_laws(&self, limits: &Limits) -> Result<LawReport> {
        let mut report = LawReport::default();

        let dom = self.join.domain().sub();
        let swap = |pair: &El| {
            let [l, r] = pair.expect_tuple() else {
                unreachable!("join domain objects are pairs")
            };
            El::tuple(vec![r.clone(), l.clone()])
        };
        let mut commutative_detail = "the join agrees with its transpose where defined".to_string();
        let mut commutative = true;
        for pair in dom.objects().iter() {
            let swapped = swap(pair);
            if !dom.objects().contains(&swapped)
                || self.join.apply(pair) != self.join.apply(&swapped)
            {
                commutative = false;
                commutative_detail = format!("the join and its transpose differ at {pair}");
                break;
            }
        }
        if commutative {
            for m in dom.morphisms().iter() {
                let parts = m.expect_tuple();
                let swapped = El::tuple(vec![parts[1].clone(), parts[0].clone()]);
                let original = self.join.action().apply_mor(m)?;
                if self.join.action().apply_mor(&swapped)? != original {
                    commutative = false;
                    commutative_detail =
                        format!("the join actions on arrows differ at {m}");
                    break;
                }
            }
        }
        report.push("the join is commutative", commutative, commutative_detail);

        let one = PartialOp::unit(self.join.base(), limits)?;
        let left = multi_compose_pullback(&self.join, &[self.join.clone(), one.clone()], limits)?;
        let right = multi_compose_pullback(&self.join, &[one, self.join.clone()], limits)?;
        report.push(
            "the join is associative",
            left.strongly_equal(&right),
            "the two bracketings agree as operations on the triples where both are defined",
        );
        Ok(report)
    }
}

/// What a formula is evaluated against: either a bare frame of worlds or a
/// heap model. The heap structure is required by the separating connectives
/// and the unit constant; everything else works over any frame.
#[derive(Debug, Clone)]
pub enum Model {
    Frame(KripkeFrame),
    Heap(HeapModel),
}

impl Model {
    pub fn frame(&self) -> &KripkeFrame {
        match self {
            Model::Frame(f) => f,
            Model::Heap(h) => h.heaps(),
        }
    }

    pub fn worlds(&self) -> &FinCategory {
        self.frame().worlds()
    }

    pub fn join(&self) -> Option<&PartialOp> {
        match self {
            Model::Frame(_) => None,
            Model::Heap(h) => Some(h.join()),
        }
    }

    /// The declared root of a heap model, or the least world of a frame.
    pub fn root(&self) -> Option<&El> {
        match self {
            Model::Frame(f) => f.bottom(),
            Model::Heap(h) => h.root().or_else(|| h.heaps().bottom()),
        }
    }

    pub fn unit(&self) -> Option<&El> {
        match self {
            Model::Frame(_) => None,
            Model::Heap(h) => h.unit(),
        }
    }
}

impl From<KripkeFrame> for Model {
    fn from(f: KripkeFrame) -> Model {
        Model::Frame(f)
    }
}

impl From<HeapModel> for Model {
    fn from(h: HeapModel) -> Model {
        Model::Heap(h)
    }
}

/// Formulas over atoms, the propositional connectives, world nominals with
/// the at operation, and the separating connectives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom(String),
    Top,
    Bot,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Nominal(El),
    At(El, Box<Formula>),
    Emp,
    Star(Box<Formula>, Box<Formula>),
    Wand(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn and(self, rhs: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn star(self, rhs: Formula) -> Formula {
        Formula::Star(Box::new(self), Box::new(rhs))
    }

    pub fn wand(self, rhs: Formula) -> Formula {
        Formula::Wand(Box::new(self), Box::new(rhs))
    }

    pub fn nominal(world: El) -> Formula {
        Formula::Nominal(world)
    }

    pub fn at(world: El, body: Formula) -> Formula {
        Formula::At(world, Box::new(body))
    }

    /// Nesting depth, with atoms and constants at depth zero.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot | Formula::Nominal(_) | Formula::Emp => 0,
            Formula::At(_, b) => 1 + b.depth(),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Star(l, r)
            | Formula::Wand(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Wand(..) => 0,
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Star(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            write!(f, "(")?;
        }
        match self {
            Formula::Atom(a) => write!(f, "{a}")?,
            Formula::Top => write!(f, "top")?,
            Formula::Bot => write!(f, "bot")?,
            Formula::Emp => write!(f, "emp")?,
            Formula::Nominal(w) => write!(f, "nom({w})")?,
            Formula::At(w, b) => {
                write!(f, "@{w} ")?;
                b.fmt_prec(f, 5)?;
            }
            Formula::And(l, r) => {
                l.fmt_prec(f, p)?;
                write!(f, " & ")?;
                r.fmt_prec(f, p + 1)?;
            }
            Formula::Or(l, r) => {
                l.fmt_prec(f, p)?;
                write!(f, " | ")?;
                r.fmt_prec(f, p + 1)?;
            }
            Formula::Star(l, r) => {
                l.fmt_prec(f, p)?;
                write!(f, " * ")?;
                r.fmt_prec(f, p + 1)?;
            }
            Formula::Implies(l, r) => {
                l.fmt_prec(f, p + 1)?;
                write!(f, " -> ")?;
                r.fmt_prec(f, p)?;
            }
            Formula::Wand(l, r) => {
                l.fmt_prec(f, p + 1)?;
                write!(f, " -* ")?;
                r.fmt_prec(f, p)?;
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// An assignment of propositions to atom names over one frame.
#[derive(Debug, Clone)]
pub struct Valuation {
    base: FinCategory,
    atoms: BTreeMap<String, Proposition>,
}

impl Valuation {
    pub fn new(base: &FinCategory) -> Valuation {
        Valuation {
            base: base.clone(),
            atoms: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, prop: Proposition) -> Result<()> {
        if prop.base() != &self.base {
            return Err(Error::ShapeMismatch(format!(
                "atom `{name}` is valued over a different frame"
            )));
        }
        self.atoms.insert(name.to_string(), prop);
        Ok(())
    }

    /// Value an atom by the set of worlds where it holds; the set must be
    /// upward closed over the frame.
    pub fn insert_worlds(&mut self, name: &str, worlds: &FinSet) -> Result<()> {
        let prop = Proposition::from_worlds(&self.base, worlds)?;
        self.insert(name, prop)
    }

    pub fn get(&self, name: &str) -> Result<&Proposition> {
        self.atoms
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&String, &Proposition)> {
        self.atoms.iter()
    }

    pub fn base(&self) -> &FinCategory {
        &self.base
    }
}

/// The interpretation of a world nominal: holds exactly at the worlds above
/// the named one. Computed as the extension of the constant operation at
/// that world, applied to no inputs.
pub fn nominal(frame: &KripkeFrame, world: &El, limits: &Limits) -> Result<Proposition> {
    frame.elements().require(world, "nominal world")?;
    let op = PartialOp::constant(frame.worlds(), world, limits)?;
    let day = day_extend(&op, &[], limits)?;
    Ok(Proposition::support_of(&day.output))
}

/// The at operation on a rooted frame: the extension of the partial unary
/// operation defined only at the named world, sending it to the root. The
/// result is constant: all worlds when the body holds at the named world,
/// no worlds otherwise. Errors when the frame has no least world.
pub fn at_rooted(
    frame: &KripkeFrame,
    world: &El,
    phi: &Proposition,
    limits: &Limits,
) -> Result<Proposition> {
    frame.elements().require(world, "world for the at operation")?;
    if phi.base() != frame.worlds() {
        return Err(Error::ShapeMismatch(
            "the at operation needs a proposition over the same frame".into(),
        ));
    }
    let root = frame
        .bottom()
        .ok_or_else(|| {
            Error::MissingStructure(
                "the rooted at operation needs a frame with a least world".into(),
            )
        })?
        .clone();
    let dom = FinSet::singleton(El::tuple(vec![world.clone()]));
    let op = PartialOp::monotone(frame.worlds(), 1, &dom, |_| root.clone(), limits)?;
    let day = day_extend(&op, std::slice::from_ref(phi.copresheaf()), limits)?;
    Ok(Proposition::support_of(&day.output))
}

/// The at operation on any frame, rooted or not: the extension of the span
/// whose left leg is constant at the named world and whose right leg is the
/// identity. Agrees with `at_rooted` whenever the frame has a least world.
pub fn at_span(
    frame: &KripkeFrame,
    world: &El,
    phi: &Proposition,
    limits: &Limits,
) -> Result<Proposition> {
    frame.elements().require(world, "world for the at operation")?;
    if phi.base() != frame.worlds() {
        return Err(Error::ShapeMismatch(
            "the at operation needs a proposition over the same frame".into(),
        ));
    }
    let w = frame.worlds();
    let ambient = power(w, 1, limits)?;
    let left = Functor::constant(w, &ambient, &El::tuple(vec![world.clone()]))?;
    let right = Functor::identity(w);
    let span = SpanOp::new(1, w.clone(), left, right)?;
    let day = day_extend_span(&span, std::slice::from_ref(phi.copresheaf()), limits)?;
    Ok(Proposition::support_of(&day.output))
}

/// The Heyting connectives on propositions over a poset frame: meet and join
/// pointwise on the world sets, implication as the largest upward-closed set
/// satisfying the forcing clause.
pub struct HeytingOps<'a> {
    frame: &'a KripkeFrame,
}

pub fn heyting_ops(frame: &KripkeFrame) -> HeytingOps<'_> {
    HeytingOps { frame }
}

impl HeytingOps<'_> {
    fn check(&self, p: &Proposition) -> Result<()> {
        if p.base() != self.frame.worlds() {
            return Err(Error::ShapeMismatch(
                "propositions must live over the frame".into(),
            ));
        }
        Ok(())
    }

    pub fn top(&self) -> Proposition {
        Proposition::top(self.frame.worlds())
    }

    pub fn bottom(&self) -> Proposition {
        Proposition::bottom(self.frame.worlds())
    }

    pub fn and(&self, p: &Proposition, q: &Proposition) -> Result<Proposition> {
        self.check(p)?;
        self.check(q)?;
        let worlds: FinSet = self
            .frame
            .elements()
            .iter()
            .filter(|w| p.holds_at(w) && q.holds_at(w))
            .cloned()
            .collect();
        Proposition::from_worlds(self.frame.worlds(), &worlds)
    }

    pub fn or(&self, p: &Proposition, q: &Proposition) -> Result<Proposition> {
        self.check(p)?;
        self.check(q)?;
        let worlds: FinSet = self
            .frame
            .elements()
            .iter()
            .filter(|w| p.holds_at(w) || q.holds_at(w))
            .cloned()
            .collect();
        Proposition::from_worlds(self.frame.worlds(), &worlds)
    }

    /// w forces p → q when every world above w forcing p also forces q.
    pub fn implies(&self, p: &Proposition, q: &Proposition) -> Result<Proposition> {
        self.check(p)?;
        self.check(q)?;
        let worlds: FinSet = self
            .frame
            .elements()
            .iter()
            .filter(|w| {
                self.frame
                    .elements()
                    .iter()
                    .all(|v| !self.frame.leq(w, v) || !p.holds_at(v) || q.holds_at(v))
            })
            .cloned()
            .collect();
        Proposition::from_worlds(self.frame.worlds(), &worlds)
    }
}

struct EvalCtx<'a> {
    model: &'a Model,
    valuation: &'a Valuation,
    limits: &'a Limits,
    join_inner: Option<Composite>,
}

impl EvalCtx<'_> {
    fn require_join(&self, connective: &str) -> Result<&PartialOp> {
        self.model.join().ok_or_else(|| {
            Error::MissingStructure(format!(
                "{connective} needs a heap model with a join operation"
            ))
        })
    }

    fn eval(&mut self, formula: &Formula) -> Result<Proposition> {
        let heyting = heyting_ops(self.model.frame());
        match formula {
            Formula::Atom(name) => {
                let prop = self.valuation.get(name)?;
                if prop.base() != self.model.worlds() {
                    return Err(Error::ShapeMismatch(format!(
                        "atom `{name}` is valued over a different frame than the model"
                    )));
                }
                Ok(prop.clone())
            }
            Formula::Top => Ok(heyting.top()),
            Formula::Bot => Ok(heyting.bottom()),
            Formula::And(l, r) => {
                let (lp, rp) = (self.eval(l)?, self.eval(r)?);
                heyting.and(&lp, &rp)
            }
            Formula::Or(l, r) => {
                let (lp, rp) = (self.eval(l)?, self.eval(r)?);
                heyting.or(&lp, &rp)
            }
            Formula::Implies(l, r) => {
                let (lp, rp) = (self.eval(l)?, self.eval(r)?);
                heyting.implies(&lp, &rp)
            }
            Formula::Nominal(w) => nominal(self.model.frame(), w, self.limits),
            Formula::At(w, body) => {
                let bp = self.eval(body)?;
                at_span(self.model.frame(), w, &bp, self.limits)
            }
            Formula::Emp => {
                let unit = self.model.unit().ok_or_else(|| {
                    Error::MissingStructure(
                        "the unit constant needs a heap model with a declared unit heap".into(),
                    )
                })?;
                nominal(self.model.frame(), &unit.clone(), self.limits)
            }
            Formula::Star(l, r) => {
                let (lp, rp) = (self.eval(l)?, self.eval(r)?);
                let join = self.require_join("the separating conjunction")?.clone();
                if self.join_inner.is_none() {
                    self.join_inner = Some(day_inner(&join, self.limits)?);
                }
                let inner = self.join_inner.as_ref().expect("just filled");
                let day = day_extend_cached(
                    &join,
                    inner,
                    &[lp.copresheaf().clone(), rp.copresheaf().clone()],
                    self.limits,
                )?;
                Ok(Proposition::support_of(&day.output))
            }
            Formula::Wand(l, r) => {
                let (lp, rp) = (self.eval(l)?, self.eval(r)?);
                let join = self.require_join("the separating implication")?;
                let res = residual(
                    join,
                    2,
                    rp.copresheaf(),
                    std::slice::from_ref(lp.copresheaf()),
                    self.limits,
                )?;
                Ok(Proposition::support_of(&res))
            }
        }
    }
}

/// Evaluate a formula through the extension machinery: nominals and unit as
/// extensions of constants, at as a span extension, the separating
/// conjunction as the join's extension, the separating implication as its
/// residual in the second slot, and the propositional connectives by the
/// Heyting structure on propositions.
pub fn eval(
    formula: &Formula,
    model: &Model,
    valuation: &Valuation,
    limits: &Limits,
) -> Result<Proposition> {
    let mut ctx = EvalCtx {
        model,
        valuation,
        limits,
        join_inner: None,
    };
    ctx.eval(formula)
}

/// The upward closure of a single world as a proposition.
fn up_closure(frame: &KripkeFrame, w: &El) -> Result<Proposition> {
    let worlds: FinSet = frame
        .elements()
        .iter()
        .filter(|v| frame.leq(w, v))
        .cloned()
        .collect();
    Proposition::from_worlds(frame.worlds(), &worlds)
}

fn oracle_star(
    model: &HeapModel,
    phi: &Proposition,
    psi: &Proposition,
) -> Result<Proposition> {
    let frame = model.heaps();
    let pairs = model.join().domain().sub().objects();
    let worlds: FinSet = frame
        .elements()
        .iter()
        .filter(|h| {
            pairs.iter().any(|pair| {
                let [l, r] = pair.expect_tuple() else {
                    unreachable!("join domain objects are pairs")
                };
                phi.holds_at(l)
                    && psi.holds_at(r)
                    && frame.leq(model.join().apply(pair).expect("domain pair"), h)
            })
        })
        .cloned()
        .collect();
    Proposition::from_worlds(frame.worlds(), &worlds)
}

fn oracle_wand(
    model: &HeapModel,
    phi: &Proposition,
    psi: &Proposition,
) -> Result<Proposition> {
    let frame = model.heaps();
    if frame.is_discrete() {
        // The direct clause: h is in the result when every disjoint partner
        // satisfying the antecedent joins with h into the consequent.
        let worlds: FinSet = frame
            .elements()
            .iter()
            .filter(|h| {
                frame.elements().iter().all(|hp| {
                    let pair = El::tuple(vec![hp.clone(), (*h).clone()]);
                    match model.join().apply(&pair) {
                        Some(joined) => !phi.holds_at(hp) || psi.holds_at(joined),
                        None => true,
                    }
                })
            })
            .cloned()
            .collect();
        return Proposition::from_worlds(frame.worlds(), &worlds);
    }
    // Ordered case: the largest proposition whose conjunction with the
    // antecedent lands in the consequent. Membership of h reduces to the
    // conjunction against the upward closure of h.
    let worlds: FinSet = frame
        .elements()
        .iter()
        .filter(|h| {
            let up = up_closure(frame, h).expect("upward closures are upward closed");
            let starred = oracle_star(model, phi, &up).expect("same frame");
            starred.worlds().is_subset_of(&psi.worlds())
        })
        .cloned()
        .collect();
    Proposition::from_worlds(frame.worlds(), &worlds)
}

/// Evaluate a formula by direct quantifier clauses over the world tables: an
/// independent code path used to cross-check `eval`. The separating
/// conjunction searches for a disjoint decomposition below the world; the
/// separating implication uses the direct partner clause on discrete frames
/// and the adjunction property on ordered ones.
pub fn oracle_eval(
    formula: &Formula,
    model: &Model,
    valuation: &Valuation,
    limits: &Limits,
) -> Result<Proposition> {
    let frame = model.frame();
    let base = frame.worlds();
    let require_heap = |connective: &str| -> Result<&HeapModel> {
        match model {
            Model::Heap(h) => Ok(h),
            Model::Frame(_) => Err(Error::MissingStructure(format!(
                "{connective} needs a heap model with a join operation"
            ))),
        }
    };
    match formula {
        Formula::Atom(name) => {
            let prop = valuation.get(name)?;
            if prop.base() != base {
                return Err(Error::ShapeMismatch(format!(
                    "atom `{name}` is valued over a different frame than the model"
                )));
            }
            Ok(prop.clone())
        }
        Formula::Top => Ok(Proposition::top(base)),
        Formula::Bot => Ok(Proposition::bottom(base)),
        Formula::And(l, r) => {
            let (lp, rp) = (
                oracle_eval(l, model, valuation, limits)?,
                oracle_eval(r, model, valuation, limits)?,
            );
            let worlds: FinSet = frame
                .elements()
                .iter()
                .filter(|w| lp.holds_at(w) && rp.holds_at(w))
                .cloned()
                .collect();
            Proposition::from_worlds(base, &worlds)
        }
        Formula::Or(l, r) => {
            let (lp, rp) = (
                oracle_eval(l, model, valuation, limits)?,
                oracle_eval(r, model, valuation, limits)?,
            );
            let worlds: FinSet = frame
                .elements()
                .iter()
                .filter(|w| lp.holds_at(w) || rp.holds_at(w))
                .cloned()
                .collect();
            Proposition::from_worlds(base, &worlds)
        }
        Formula::Implies(l, r) => {
            let (lp, rp) = (
                oracle_eval(l, model, valuation, limits)?,
                oracle_eval(r, model, valuation, limits)?,
            );
            let worlds: FinSet = frame
                .elements()
                .iter()
                .filter(|w| {
                    frame
                        .elements()
                        .iter()
                        .all(|v| !frame.leq(w, v) || !lp.holds_at(v) || rp.holds_at(v))
                })
                .cloned()
                .collect();
            Proposition::from_worlds(base, &worlds)
        }
        Formula::Nominal(a) => {
            frame.elements().require(a, "nominal world")?;
            up_closure(frame, a)
        }
        Formula::At(a, body) => {
            frame.elements().require(a, "world for the at operation")?;
            let bp = oracle_eval(body, model, valuation, limits)?;
            if bp.holds_at(a) {
                Ok(Proposition::top(base))
            } else {
                Ok(Proposition::bottom(base))
            }
        }
        Formula::Emp => {
            let heap = require_heap("the unit constant")?;
            let unit = heap.unit().ok_or_else(|| {
                Error::MissingStructure(
                    "the unit constant needs a heap model with a declared unit heap".into(),
                )
            })?;
            up_closure(frame, unit)
        }
        Formula::Star(l, r) => {
            let (lp, rp) = (
                oracle_eval(l, model, valuation, limits)?,
                oracle_eval(r, model, valuation, limits)?,
            );
            oracle_star(require_heap("the separating conjunction")?, &lp, &rp)
        }
        Formula::Wand(l, r) => {
            let (lp, rp) = (
                oracle_eval(l, model, valuation, limits)?,
                oracle_eval(r, model, valuation, limits)?,
            );
            oracle_wand(require_heap("the separating implication")?, &lp, &rp)
        }
    }
}

/// All propositions over a frame, enumerated as the upward-closed subsets of
/// its worlds. Guarded by the enumeration limit on 2^worlds.
pub fn enumerate_propositions(frame: &KripkeFrame, limits: &Limits) -> Result<Vec<Proposition>> {
    let n = frame.elements().len();
    if n >= 64 {
        return Err(Error::guard("proposition enumeration", u128::MAX, limits.enumeration));
    }
    limits.check_enumeration("proposition enumeration", 1u128 << n)?;
    let elems: Vec<&El> = frame.elements().iter().collect();
    let mut props = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let member = |i: usize| mask & (1 << i) != 0;
        let up_closed = (0..n).all(|i| {
            !member(i)
                || (0..n).all(|j| !frame.leq(elems[i], elems[j]) || member(j))
        });
        if !up_closed {
            continue;
        }
        let worlds: FinSet = (0..n).filter(|i| member(*i)).map(|i| elems[i].clone()).collect();
        props.push(Proposition::from_worlds(frame.worlds(), &worlds)?);
    }
    Ok(props)
}

/// Verify that the separating conjunction against a fixed proposition is
/// left adjoint to the separating implication from it: for all propositions
/// ψ and χ over the model, φ∗ψ ⊆ χ exactly when ψ ⊆ φ—∗χ. Exhaustive over
/// the proposition lattice, with both connectives computed through the
/// extension machinery.
pub fn bi_adjunction_check(
    model: &HeapModel,
    phi: &Proposition,
    limits: &Limits,
) -> Result<LawReport> {
    if phi.base() != model.heaps().worlds() {
        return Err(Error::ShapeMismatch(
            "the fixed proposition must live over the model".into(),
        ));
    }
    let props = enumerate_propositions(model.heaps(), limits)?;
    let inner = day_inner(model.join(), limits)?;

    let mut stars = Vec::with_capacity(props.len());
    for psi in &props {
        let day = day_extend_cached(
            model.join(),
            &inner,
            &[phi.copresheaf().clone(), psi.copresheaf().clone()],
            limits,
        )?;
        stars.push(Proposition::support_of(&day.output));
    }
    let mut wands = Vec::with_capacity(props.len());
    for chi in &props {
        let res = residual(
            model.join(),
            2,
            chi.copresheaf(),
            std::slice::from_ref(phi.copresheaf()),
            limits,
        )?;
        wands.push(Proposition::support_of(&res));
    }

    let mut report = LawReport::default();
    report.push(
        "the proposition lattice is enumerated",
        true,
        format!("{} propositions over {} worlds", props.len(), model.heaps().elements().len()),
    );
    let mut failure = None;
    'outer: for (pi, psi) in props.iter().enumerate() {
        for (ci, chi) in props.iter().enumerate() {
            let lhs = stars[pi].worlds().is_subset_of(&chi.worlds());
            let rhs = psi.worlds().is_subset_of(&wands[ci].worlds());
            if lhs != rhs {
                failure = Some(format!(
                    "at ψ = {} and χ = {}: the conjunction side says {lhs}, the implication side says {rhs}",
                    psi.worlds(),
                    chi.worlds()
                ));
                break 'outer;
            }
        }
    }
    let pairs = props.len() * props.len();
    match failure {
        None => report.push(
            "conjunction against the proposition is left adjoint to implication from it",
            true,
            format!("all {pairs} pairs satisfy the equivalence"),
        ),
        Some(detail) => report.push(
            "conjunction against the proposition is left adjoint to implication from it",
            false,
            detail,
        ),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::FinCategory;
    use crate::finbase::FinFn;

    fn lim() -> Limits {
        Limits::default()
    }

    fn n(s: &str) -> El {
        El::name(s)
    }

    fn chain3() -> KripkeFrame {
        KripkeFrame::from_order(
            &[n("a"), n("b"), n("c")],
            &[(n("a"), n("b")), (n("b"), n("c"))],
        )
        .unwrap()
    }

    fn up(frame: &KripkeFrame, worlds: &[&str]) -> Proposition {
        let ws: FinSet = worlds.iter().map(|w| n(w)).collect();
        Proposition::from_worlds(frame.worlds(), &ws).unwrap()
    }

    /// Disjoint union of the subsets of a two-element universe, over a given
    /// frame on the four names o, x, y, xy.
    fn union_join(frame: &KripkeFrame) -> PartialOp {
        let pairs = [
            ("o", "o", "o"),
            ("o", "x", "x"),
            ("o", "y", "y"),
            ("o", "xy", "xy"),
            ("x", "o", "x"),
            ("y", "o", "y"),
            ("xy", "o", "xy"),
            ("x", "y", "xy"),
            ("y", "x", "xy"),
        ];
        let dom: FinSet = pairs
            .iter()
            .map(|(l, r, _)| El::tuple(vec![n(l), n(r)]))
            .collect();
        PartialOp::monotone(
            frame.worlds(),
            2,
            &dom,
            |pair| {
                let [l, r] = pair.expect_tuple() else {
                    unreachable!()
                };
                pairs
                    .iter()
                    .find(|(a, b, _)| &n(a) == l && &n(b) == r)
                    .map(|(_, _, u)| n(u))
                    .unwrap()
            },
            &lim(),
        )
        .unwrap()
    }

    /// The discrete separation model on subsets of {x, y}.
    fn hxy() -> HeapModel {
        let frame = KripkeFrame::discrete(&[n("o"), n("x"), n("y"), n("xy")]).unwrap();
        let join = union_join(&frame);
        HeapModel::new(frame, join, None, None).unwrap()
    }

    /// The ordered separation model on subsets of {x, y} under inclusion,
    /// with the empty heap as root and unit.
    fn diamond() -> HeapModel {
        let frame = KripkeFrame::from_order(
            &[n("o"), n("x"), n("y"), n("xy")],
            &[
                (n("o"), n("x")),
                (n("o"), n("y")),
                (n("x"), n("xy")),
                (n("y"), n("xy")),
            ],
        )
        .unwrap();
        let join = union_join(&frame);
        HeapModel::new(frame, join, Some(n("o")), Some(n("o"))).unwrap()
    }

    fn hxy_valuation(model: &HeapModel) -> Valuation {
        let mut v = Valuation::new(model.heaps().worlds());
        let up_of = |w: &str| -> FinSet {
            model
                .heaps()
                .elements()
                .iter()
                .filter(|h| model.heaps().leq(&n(w), h))
                .cloned()
                .collect()
        };
        v.insert_worlds("p", &up_of("x")).unwrap();
        v.insert_worlds("q", &up_of("y")).unwrap();
        v
    }

    #[test]
    fn frames_reject_parallel_arrows() {
        let w = n("w");
        let (one, e) = (n("1"), n("e"));
        let objects = FinSet::singleton(w.clone());
        let morphisms = FinSet::new(vec![one.clone(), e.clone()]);
        let src = FinFn::from_fn(morphisms.clone(), objects.clone(), |_| w.clone()).unwrap();
        let tgt = src.clone();
        let identity = FinFn::from_fn(objects.clone(), morphisms.clone(), |_| one.clone()).unwrap();
        let mi = |m: &El| morphisms.index_of(m).unwrap() as u32;
        let mut comp = std::collections::BTreeMap::new();
        for (g, f, h) in [
            (&one, &one, &one),
            (&one, &e, &e),
            (&e, &one, &e),
            (&e, &e, &e),
        ] {
            comp.insert((mi(g), mi(f)), mi(h));
        }
        let cat = FinCategory::new(objects, morphisms.clone(), src, tgt, identity, comp).unwrap();
        assert!(matches!(KripkeFrame::new(cat), Err(Error::NotAPoset(_))));

        assert!(KripkeFrame::new(chain3().worlds().clone()).is_ok());
    }

    #[test]
    fn nominals_match_the_order_oracle() {
        let frame = chain3();
        let nom_b = nominal(&frame, &n("b"), &lim()).unwrap();
        assert_eq!(nom_b.worlds(), up(&frame, &["b", "c"]).worlds());
        for w in frame.elements().iter() {
            let nom = nominal(&frame, w, &lim()).unwrap();
            for v in frame.elements().iter() {
                assert_eq!(nom.holds_at(v), frame.leq(w, v));
            }
        }
    }

    #[test]
    fn at_constructions_agree_on_rooted_frames() {
        let frame = chain3();
        let phi = up(&frame, &["b", "c"]);
        let psi = up(&frame, &["c"]);

        let rooted_true = at_rooted(&frame, &n("b"), &phi, &lim()).unwrap();
        assert_eq!(rooted_true.worlds(), frame.elements().clone());
        let rooted_false = at_rooted(&frame, &n("b"), &psi, &lim()).unwrap();
        assert!(rooted_false.worlds().is_empty());

        for w in frame.elements().iter() {
            for prop in [&phi, &psi] {
                let r = at_rooted(&frame, w, prop, &lim()).unwrap();
                let s = at_span(&frame, w, prop, &lim()).unwrap();
                assert_eq!(r.worlds(), s.worlds());
            }
        }
    }

    #[test]
    fn the_span_at_operation_needs_no_root() {
        let frame = KripkeFrame::discrete(&[n("u"), n("v")]).unwrap();
        assert!(frame.bottom().is_none());
        let phi = up(&frame, &["u"]);
        let via_span = at_span(&frame, &n("u"), &phi, &lim()).unwrap();
        assert_eq!(via_span.worlds(), frame.elements().clone());
        let via_span_false = at_span(&frame, &n("v"), &phi, &lim()).unwrap();
        assert!(via_span_false.worlds().is_empty());
        assert!(matches!(
            at_rooted(&frame, &n("u"), &phi, &lim()),
            Err(Error::MissingStructure(_))
        ));
    }

    #[test]
    fn heyting_connectives_compute_the_forcing_tables() {
        let frame = chain3();
        let h = heyting_ops(&frame);
        let ub = up(&frame, &["b", "c"]);
        let uc = up(&frame, &["c"]);

        let impl_same = h.implies(&ub, &ub).unwrap();
        assert_eq!(impl_same.worlds(), frame.elements().clone());

        let impl_bc = h.implies(&ub, &uc).unwrap();
        assert_eq!(impl_bc.worlds(), FinSet::singleton(n("c")));

        let both = h.and(&ub, &uc).unwrap();
        assert_eq!(both.worlds(), uc.worlds());
        let either = h.or(&ub, &uc).unwrap();
        assert_eq!(either.worlds(), ub.worlds());
    }

    #[test]
    fn separating_conjunction_finds_disjoint_decompositions() {
        let model = hxy();
        let val = hxy_valuation(&model);
        let m: Model = model.into();

        let pq = Formula::atom("p").star(Formula::atom("q"));
        let got = eval(&pq, &m, &val, &lim()).unwrap();
        assert_eq!(got.worlds(), FinSet::singleton(n("xy")));
        assert_eq!(got.worlds(), oracle_eval(&pq, &m, &val, &lim()).unwrap().worlds());

        let bottom_star = Formula::Bot.star(Formula::atom("p"));
        assert!(eval(&bottom_star, &m, &val, &lim()).unwrap().worlds().is_empty());

        let qp = Formula::atom("q").star(Formula::atom("p"));
        assert_eq!(
            eval(&qp, &m, &val, &lim()).unwrap().worlds(),
            eval(&pq, &m, &val, &lim()).unwrap().worlds()
        );
    }

    #[test]
    fn separating_implication_matches_the_partner_clause() {
        let model = hxy();
        let val = hxy_valuation(&model);
        let expected: FinSet = [n("x"), n("y"), n("xy")].into_iter().collect();

        let m: Model = model.into();
        let wand = Formula::atom("p").wand(Formula::atom("p").star(Formula::atom("q")));
        let got = eval(&wand, &m, &val, &lim()).unwrap();
        let oracle = oracle_eval(&wand, &m, &val, &lim()).unwrap();
        assert_eq!(got.worlds(), oracle.worlds());
        assert_eq!(got.worlds(), expected);
    }

    #[test]
    fn evaluation_matches_the_oracle_on_small_formulas() {
        let cases: Vec<Model> = vec![hxy().into(), diamond().into()];
        for m in cases {
            let val = match &m {
                Model::Heap(h) => hxy_valuation(h),
                Model::Frame(_) => unreachable!(),
            };
            let atoms = [Formula::atom("p"), Formula::atom("q"), Formula::Top, Formula::Bot];
            let mut depth1: Vec<Formula> = Vec::new();
            for l in &atoms {
                for r in &atoms {
                    depth1.push(l.clone().and(r.clone()));
                    depth1.push(l.clone().implies(r.clone()));
                    depth1.push(l.clone().star(r.clone()));
                    depth1.push(l.clone().wand(r.clone()));
                }
            }
            let mut depth2: Vec<Formula> = Vec::new();
            for d1 in depth1.iter().take(12) {
                depth2.push(d1.clone().star(Formula::atom("p")));
                depth2.push(Formula::atom("q").wand(d1.clone()));
                depth2.push(d1.clone().or(Formula::atom("p")));
            }
            for f in depth1.iter().chain(&depth2) {
                let via_day = eval(f, &m, &val, &lim()).unwrap();
                let direct = oracle_eval(f, &m, &val, &lim()).unwrap();
                assert_eq!(via_day.worlds(), direct.worlds(), "formula {f}");
            }
        }
    }

    #[test]
    fn adjunction_holds_across_the_proposition_lattice() {
        let model = hxy();
        let props = enumerate_propositions(model.heaps(), &lim()).unwrap();
        assert_eq!(props.len(), 16);

        let val = hxy_valuation(&model);
        let phi = val.get("p").unwrap().clone();
        let report = bi_adjunction_check(&model, &phi, &lim()).unwrap();
        assert!(report.passed(), "{:?}", report);

        let report = bi_adjunction_check(&model, &Proposition::bottom(model.heaps().worlds()), &lim())
            .unwrap();
        assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn propositions_enumerate_as_upward_closed_sets() {
        let props = enumerate_propositions(&chain3(), &lim()).unwrap();
        assert_eq!(props.len(), 4);
        let sizes: Vec<usize> = props.iter().map(|p| p.worlds().len()).collect();
        assert_eq!(sizes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn the_unit_constant_needs_a_declared_unit() {
        let no_unit: Model = hxy().into();
        let val = match &no_unit {
            Model::Heap(h) => hxy_valuation(h),
            Model::Frame(_) => unreachable!(),
        };
        assert!(matches!(
            eval(&Formula::Emp, &no_unit, &val, &lim()),
            Err(Error::MissingStructure(_))
        ));

        // On the discrete model a declared unit makes the constant hold at
        // the unit heap alone; on the ordered model it holds everywhere
        // above the empty heap, which is everything.
        let frame = KripkeFrame::discrete(&[n("o"), n("x"), n("y"), n("xy")]).unwrap();
        let with_unit: Model = HeapModel::new(frame, union_join(&KripkeFrame::discrete(&[n("o"), n("x"), n("y"), n("xy")]).unwrap()), None, Some(n("o")))
            .unwrap()
            .into();
        let got = eval(&Formula::Emp, &with_unit, &val, &lim()).unwrap();
        assert_eq!(got.worlds(), FinSet::singleton(n("o")));

        let ordered: Model = diamond().into();
        let got = eval(&Formula::Emp, &ordered, &val, &lim()).unwrap();
        assert_eq!(got.worlds().len(), 4);
    }

    #[test]
    fn join_laws_hold_for_disjoint_union() {
        for model in [hxy(), diamond()] {
            let report = model.join_laws(&lim()).unwrap();
            assert!(report.passed(), "{:?}", report);
        }

        // A one-sided join: defined at (a, b) but not at (b, a).
        let frame = KripkeFrame::discrete(&[n("a"), n("b"), n("c")]).unwrap();
        let dom = FinSet::singleton(El::tuple(vec![n("a"), n("b")]));
        let lopsided =
            PartialOp::monotone(frame.worlds(), 2, &dom, |_| n("c"), &lim()).unwrap();
        let model = HeapModel::new(frame, lopsided, None, None).unwrap();
        let report = model.join_laws(&lim()).unwrap();
        assert!(!report.checks[0].passed);
    }

    #[test]
    fn model_construction_validates_structure() {
        let frame = KripkeFrame::discrete(&[n("o"), n("x"), n("y"), n("xy")]).unwrap();
        let join = union_join(&frame);

        let unary = PartialOp::unit(frame.worlds(), &lim()).unwrap();
        assert!(matches!(
            HeapModel::new(frame.clone(), unary, None, None),
            Err(Error::ArityMismatch { .. })
        ));

        // On the discrete frame no heap lies below the others.
        assert!(matches!(
            HeapModel::new(frame.clone(), join.clone(), Some(n("o")), None),
            Err(Error::ShapeMismatch(_))
        ));

        // x is not a unit: (x, x) is not even disjoint.
        assert!(matches!(
            HeapModel::new(frame.clone(), join.clone(), None, Some(n("x"))),
            Err(Error::ShapeMismatch(_))
        ));

        assert!(HeapModel::new(frame, join, None, Some(n("o"))).is_ok());
    }

    #[test]
    fn formulas_print_with_minimal_parentheses() {
        let f = Formula::atom("p")
            .star(Formula::atom("q"))
            .implies(Formula::atom("r").or(Formula::atom("s")).and(Formula::Top));
        assert_eq!(f.to_string(), "p * q -> (r | s) & top");

        let g = Formula::atom("p").wand(Formula::atom("q").wand(Formula::atom("r")));
        assert_eq!(g.to_string(), "p -* q -* r");
        let h = Formula::atom("p").wand(Formula::atom("q")).wand(Formula::atom("r"));
        assert_eq!(h.to_string(), "(p -* q) -* r");

        let k = Formula::at(n("b"), Formula::atom("p").and(Formula::atom("q")));
        assert_eq!(k.to_string(), "@b (p & q)");
        let l = Formula::at(n("b"), Formula::atom("p")).and(Formula::nominal(n("c")));
        assert_eq!(l.to_string(), "@b p & nom(c)");
    }
}
