//! Copresheaves and the constructions over them: Day extension of partial
//! operations and spans (as a profunctor composite, plus an independent
//! direct coend-formula evaluator), the action on 2-cells, the contravariant
//! action on operation cells, residuals computed as ends, and exhaustive
//! natural-transformation enumeration with the residual adjunction
//! transports.
//!
//! A copresheaf is a profunctor ℂ ⇸ 𝟙; a proposition is the subterminal
//! case, canonically an upward-closed set of objects.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::finbase::{product, El, FinFn, FinSet, QuotientResult};
use crate::fincat::{unit_category, FinCategory, Functor, NatTrans, PartialOp, SpanOp};
use crate::limits::Limits;
use crate::prof::{
    compose, hom_contravariant, hom_contravariant_cell, hom_covariant, horizontal_compose,
    Composite, IsoCell, ProfCell, Profunctor,
};

/// A functor ℂ → Set, stored as a profunctor with terminal `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Copresheaf(Profunctor);

impl Copresheaf {
    /// Wrap a profunctor whose `to` category is terminal.
    pub fn new(p: Profunctor) -> Result<Copresheaf> {
        if p.to() != &unit_category() {
            return Err(Error::ShapeMismatch(
                "a copresheaf must have the terminal category on its contravariant side".into(),
            ));
        }
        Ok(Copresheaf(p))
    }

    /// Build from a value closure and a morphism action `action(m, x)`.
    pub fn from_maps(
        base: &FinCategory,
        mut value: impl FnMut(&El) -> FinSet,
        mut action: impl FnMut(&El, &El) -> El,
    ) -> Result<Copresheaf> {
        Copresheaf::new(Profunctor::from_maps(
            base,
            &unit_category(),
            |_d, c| value(c),
            |_b, _c, x| x.clone(),
            |_d, m, x| action(m, x),
        )?)
    }

    /// The constant copresheaf at a fixed set.
    pub fn constant(base: &FinCategory, set: &FinSet) -> Result<Copresheaf> {
        Copresheaf::from_maps(base, |_| set.clone(), |_, x| x.clone())
    }

    pub fn constant_empty(base: &FinCategory) -> Copresheaf {
        Copresheaf::constant(base, &FinSet::empty()).expect("empty constant always exists")
    }

    /// The representable copresheaf ℂ(c, −).
    pub fn representable(base: &FinCategory, c: &El) -> Result<Copresheaf> {
        Copresheaf::new(hom_contravariant(&Functor::point(base, c)?))
    }

    pub fn prof(&self) -> &Profunctor {
        &self.0
    }

    pub fn base(&self) -> &FinCategory {
        self.0.from()
    }

    pub fn value_at(&self, c: &El) -> Result<&FinSet> {
        self.0.value(&El::unit(), c)
    }

    pub fn value_at_idx(&self, ci: usize) -> &FinSet {
        self.0.value_idx(0, ci)
    }

    /// The action F(m): F(src m) → F(tgt m).
    pub fn action(&self, m: &El) -> Result<&FinFn> {
        self.0.right_action(&El::unit(), m)
    }

    pub fn action_idx(&self, mi: usize) -> &FinFn {
        self.0.right_action_idx(0, mi)
    }

    pub fn total_elements(&self) -> usize {
        self.0.total_elements()
    }

    pub fn is_subterminal(&self) -> bool {
        self.0.is_subterminal()
    }

    /// Objects with nonempty value; upward closed for any copresheaf.
    pub fn support(&self) -> FinSet {
        self.base()
            .objects()
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.value_at_idx(*i).is_empty())
            .map(|(_, c)| c.clone())
            .collect()
    }
}

impl fmt::Display for Copresheaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "copresheaf with {} elements", self.total_elements())
    }
}

/// A subterminal copresheaf in canonical form: the value at an object is
/// either empty or the one-point set, and the set of supporting objects is
/// upward closed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposition(Copresheaf);

impl Proposition {
    /// Build from the set of objects where the proposition holds. Errors if
    /// the set is not closed under the codomain of some morphism.
    pub fn from_worlds(base: &FinCategory, worlds: &FinSet) -> Result<Proposition> {
        for w in worlds.iter() {
            base.objects().require(w, "proposition world")?;
        }
        for m in base.morphisms().iter() {
            let s = base.src_of(m)?;
            let t = base.tgt_of(m)?;
            if worlds.contains(s) && !worlds.contains(t) {
                return Err(Error::InvalidProfunctor(format!(
                    "proposition is not upward closed: holds at {s} but not at {t}"
                )));
            }
        }
        let copre = Copresheaf::from_maps(
            base,
            |c| {
                if worlds.contains(c) {
                    FinSet::point()
                } else {
                    FinSet::empty()
                }
            },
            |_, x| x.clone(),
        )?;
        Ok(Proposition(copre))
    }

    /// The canonical proposition supported where `c` is nonempty. Well-defined
    /// for every copresheaf since supports are upward closed.
    pub fn support_of(c: &Copresheaf) -> Proposition {
        Proposition::from_worlds(c.base(), &c.support()).expect("supports are upward closed")
    }

    pub fn top(base: &FinCategory) -> Proposition {
        Proposition::from_worlds(base, base.objects()).expect("everything is upward closed")
    }

    pub fn bottom(base: &FinCategory) -> Proposition {
        Proposition::from_worlds(base, &FinSet::empty()).expect("empty set is upward closed")
    }

    pub fn base(&self) -> &FinCategory {
        self.0.base()
    }

    pub fn copresheaf(&self) -> &Copresheaf {
        &self.0
    }

    pub fn holds_at(&self, w: &El) -> bool {
        self.0
            .value_at(w)
            .map(|v| !v.is_empty())
            .unwrap_or(false)
    }

    pub fn worlds(&self) -> FinSet {
        self.0.support()
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.worlds())
    }
}

/// Which evaluation route produced a Day extension value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayRoute {
    ProfunctorComposite,
    CoendFormula,
}

/// A Day extension result: the output copresheaf plus the two composites it
/// was assembled from, so elements can be injected and classes audited.
#[derive(Debug, Clone)]
pub struct DayResult {
    pub output: Copresheaf,
    /// compose(hom_covariant(domain inclusion), hom_contravariant(action)).
    pub inner: Composite,
    /// compose(product of the inputs, inner).
    pub outer: Composite,
    pub route: DayRoute,
}

impl DayResult {
    /// The class of the element assembled from a tuple object c⃗, an input
    /// tuple xs ∈ ∏Fᵢ(cᵢ), a domain object d, u: c⃗ → i(d), and w: θ(d) → a.
    pub fn element(&self, a: &El, cvec: &El, xs: &El, d: &El, u: &El, w: &El) -> Result<El> {
        let inner_rep = self.inner.class_of(cvec, a, d, u, w)?;
        self.outer.class_of(&El::unit(), a, cvec, xs, &inner_rep)
    }
}

/// The product copresheaf ∏Fᵢ over a given power category: the value at a
/// tuple object is the product of the component values, acting componentwise.
pub fn product_copresheaf(
    fs: &[Copresheaf],
    power: &FinCategory,
    limits: &Limits,
) -> Result<Profunctor> {
    let mut total: u128 = 0;
    let mut values = Vec::with_capacity(power.objects().len());
    for cvec in power.objects().iter() {
        let parts = cvec.expect_tuple();
        if parts.len() != fs.len() {
            return Err(Error::ArityMismatch {
                expected: fs.len(),
                got: parts.len(),
            });
        }
        let sets = parts
            .iter()
            .zip(fs)
            .map(|(c, f)| f.value_at(c).cloned())
            .collect::<Result<Vec<_>>>()?;
        let (prod, _) = product(&sets);
        total += prod.len() as u128;
        limits.check_carrier("input product carrier", total)?;
        values.push(prod);
    }
    Profunctor::from_maps(
        power,
        &unit_category(),
        |_d, cvec| {
            let i = power.objects().index_of(cvec).expect("power object");
            values[i].clone()
        },
        |_b, _c, x| x.clone(),
        |_d, gvec, xs| {
            let mors = gvec.expect_tuple();
            let parts = xs.expect_tuple();
            El::Tuple(
                mors.iter()
                    .zip(parts)
                    .zip(fs)
                    .map(|((m, x), f)| f.action(m).expect("morphism").apply(x).expect("element").clone())
                    .collect(),
            )
        },
    )
}

/// The reusable half of a Day extension that does not depend on the inputs:
/// compose(hom_covariant(i), hom_contravariant(θ)).
pub fn day_inner(theta: &PartialOp, limits: &Limits) -> Result<Composite> {
    compose(
        &hom_covariant(theta.domain().incl()),
        &hom_contravariant(theta.action()),
        limits,
    )
}

/// Finish a Day extension from a precomputed inner composite.
pub fn day_extend_cached(
    theta: &PartialOp,
    inner: &Composite,
    fs: &[Copresheaf],
    limits: &Limits,
) -> Result<DayResult> {
    if fs.len() != theta.arity() {
        return Err(Error::ArityMismatch {
            expected: theta.arity(),
            got: fs.len(),
        });
    }
    for f in fs {
        if f.base() != theta.base() {
            return Err(Error::ShapeMismatch(
                "Day extension inputs must live over the operation's base".into(),
            ));
        }
    }
    let prodf = product_copresheaf(fs, theta.domain().ambient(), limits)?;
    let outer = compose(&prodf, &inner.prof, limits)?;
    let output = Copresheaf::new(outer.prof.clone())?;
    Ok(DayResult {
        output,
        inner: inner.clone(),
        outer,
        route: DayRoute::ProfunctorComposite,
    })
}

/// The Day extension of a partial operation, as the profunctor composite
/// ℂ ⇸ 𝔻 ⇸ ℂⁿ ⇸ 𝟙. The result is total (defined at every object of ℂ)
/// regardless of how partial the operation is.
pub fn day_extend(theta: &PartialOp, fs: &[Copresheaf], limits: &Limits) -> Result<DayResult> {
    let inner = day_inner(theta, limits)?;
    day_extend_cached(theta, &inner, fs, limits)
}

/// The Day extension of a span: same composite with the left leg in place of
/// the domain inclusion and the right leg in place of the action.
pub fn day_extend_span(s: &SpanOp, fs: &[Copresheaf], limits: &Limits) -> Result<DayResult> {
    if fs.len() != s.arity() {
        return Err(Error::ArityMismatch {
            expected: s.arity(),
            got: fs.len(),
        });
    }
    for f in fs {
        if f.base() != s.base() {
            return Err(Error::ShapeMismatch(
                "Day extension inputs must live over the span's base".into(),
            ));
        }
    }
    let inner = compose(&hom_covariant(s.left()), &hom_contravariant(s.right()), limits)?;
    let prodf = product_copresheaf(fs, s.left().cod(), limits)?;
    let outer = compose(&prodf, &inner.prof, limits)?;
    let output = Copresheaf::new(outer.prof.clone())?;
    Ok(DayResult {
        output,
        inner,
        outer,
        route: DayRoute::ProfunctorComposite,
    })
}

/// Index order for the direct coend formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FormulaOrder {
    /// Tuples (d, c⃗, w, u, xs); the default.
    DomainOuter,
    /// Tuples (c⃗, d, w, u, xs); the swapped order, kept as an independent
    /// evaluation for cross-checking.
    TupleOuter,
}

fn coend_formula_impl(
    theta: &PartialOp,
    fs: &[Copresheaf],
    order: FormulaOrder,
    limits: &Limits,
) -> Result<Copresheaf> {
    if fs.len() != theta.arity() {
        return Err(Error::ArityMismatch {
            expected: theta.arity(),
            got: fs.len(),
        });
    }
    let base = theta.base().clone();
    let power = theta.domain().ambient().clone();
    let dom = theta.domain().sub().clone();
    let incl = theta.domain().incl();
    let act = theta.action();
    let prodf = product_copresheaf(fs, &power, limits)?;

    let make = |d: &El, cvec: &El, w: &El, u: &El, xs: &El| match order {
        FormulaOrder::DomainOuter => {
            El::tuple(vec![d.clone(), cvec.clone(), w.clone(), u.clone(), xs.clone()])
        }
        FormulaOrder::TupleOuter => {
            El::tuple(vec![cvec.clone(), d.clone(), w.clone(), u.clone(), xs.clone()])
        }
    };

    let mut quotients: Vec<QuotientResult> = Vec::with_capacity(base.objects().len());
    let mut total_raw: u128 = 0;
    let mut total_rel: u128 = 0;
    for a in base.objects().iter() {
        let mut raw_elems = Vec::new();
        for d in dom.objects().iter() {
            let id = incl.apply_obj(d)?;
            let td = act.apply_obj(d)?;
            for w in base.hom(td, a)?.iter() {
                for (cvi, cvec) in power.objects().iter().enumerate() {
                    for u in power.hom(cvec, id)?.iter() {
                        for xs in prodf.value_idx(0, cvi).iter() {
                            raw_elems.push(make(d, cvec, w, u, xs));
                        }
                    }
                }
            }
        }
        total_raw += raw_elems.len() as u128;
        limits.check_carrier("coend formula carrier", total_raw)?;
        let raw = FinSet::new(raw_elems);

        let mut pairs = Vec::new();
        // Zigzags over the domain variable: for δ: d → d′, identify
        // (d, c⃗, w′∘θδ, u, xs) with (d′, c⃗, w′, iδ∘u, xs).
        for (mi, delta) in dom.morphisms().iter().enumerate() {
            let di = dom.src_idx(mi);
            if mi == dom.id_idx(di) {
                continue;
            }
            let d = dom.objects().get(di);
            let dp = dom.objects().get(dom.tgt_idx(mi));
            let idl = incl.apply_mor(delta)?;
            let tdl = act.apply_mor(delta)?;
            let id_src = incl.apply_obj(d)?;
            for wp in base.hom(act.apply_obj(dp)?, a)?.iter() {
                let w = base.compose(wp, tdl)?;
                for (cvi, cvec) in power.objects().iter().enumerate() {
                    for u in power.hom(cvec, id_src)?.iter() {
                        let up = power.compose(idl, u)?;
                        for xs in prodf.value_idx(0, cvi).iter() {
                            pairs.push((make(d, cvec, w, u, xs), make(dp, cvec, wp, up, xs)));
                        }
                    }
                }
            }
        }
        // Zigzags over the tuple variable: for γ⃗: c⃗ → c⃗′, identify
        // (d, c⃗, w, u′∘γ⃗, xs) with (d, c⃗′, w, u′, F⃗(γ⃗)(xs)).
        for (gi, gvec) in power.morphisms().iter().enumerate() {
            let cvi = power.src_idx(gi);
            if gi == power.id_idx(cvi) {
                continue;
            }
            let cvec = power.objects().get(cvi);
            let cvp = power.objects().get(power.tgt_idx(gi));
            let push = prodf.right_action_idx(0, gi);
            for d in dom.objects().iter() {
                let id = incl.apply_obj(d)?;
                let td = act.apply_obj(d)?;
                for w in base.hom(td, a)?.iter() {
                    for up in power.hom(cvp, id)?.iter() {
                        let u = power.compose(up, gvec)?;
                        for xs in prodf.value_idx(0, cvi).iter() {
                            let xsp = push.apply(xs)?;
                            pairs.push((make(d, cvec, w, u, xs), make(d, cvp, w, up, xsp)));
                        }
                    }
                }
            }
        }
        total_rel += pairs.len() as u128;
        limits.check_enumeration("coend formula relation", total_rel)?;
        quotients.push(crate::finbase::quotient_by_generated(&raw, &pairs)?);
    }

    // Action along α: a → a′ on representatives: postcompose the w component.
    let w_slot = 2usize;
    let values: Vec<FinSet> = quotients.iter().map(|q| q.reps.clone()).collect();
    let n_obj = base.objects().len();
    let mut right = Vec::with_capacity(base.morphisms().len());
    for (mi, _m) in base.morphisms().iter().enumerate() {
        let src = base.src_idx(mi);
        let tgt = base.tgt_idx(mi);
        let m_el = base.morphisms().get(mi).clone();
        let q_tgt = &quotients[tgt];
        let fun = FinFn::from_fn(values[src].clone(), values[tgt].clone(), |rep| {
            let mut parts = rep.expect_tuple().to_vec();
            parts[w_slot] = base.compose(&m_el, &parts[w_slot]).expect("composable").clone();
            q_tgt.rep_of(&El::Tuple(parts)).expect("class").clone()
        })?;
        #[cfg(debug_assertions)]
        {
            let q_src = &quotients[src];
            for rep in q_src.reps.iter() {
                let expected = fun.apply(rep)?;
                let class_idx = q_src.reps.index_of(rep).expect("representative");
                for member in q_src.classes[class_idx].iter() {
                    let mut parts = member.expect_tuple().to_vec();
                    parts[w_slot] = base.compose(&m_el, &parts[w_slot])?.clone();
                    assert_eq!(
                        q_tgt.rep_of(&El::Tuple(parts))?,
                        expected,
                        "coend formula action is not well-defined"
                    );
                }
            }
        }
        right.push(fun);
    }
    let left = (0..n_obj)
        .map(|ci| FinFn::identity(values[ci].clone()))
        .collect();
    Copresheaf::new(Profunctor::from_tables(
        base.clone(),
        unit_category(),
        values,
        left,
        right,
    )?)
}

/// Direct evaluation of the Day extension by its coend formula: at each a,
/// the quotient of ⨿_{d, c⃗} ℂ(θd, a) × ℂⁿ(c⃗, i d) × ∏Fᵢ(cᵢ) by the zigzag
/// relation in both indices. An independent computation path from
/// `day_extend`, used to cross-check it.
pub fn day_coend_formula(theta: &PartialOp, fs: &[Copresheaf], limits: &Limits) -> Result<Copresheaf> {
    coend_formula_impl(theta, fs, FormulaOrder::DomainOuter, limits)
}

/// The coend formula with the two coend indices enumerated in the opposite
/// order. The outcome must be isomorphic to `day_coend_formula`; kept as an
/// independently evaluated cross-check of that interchange.
pub fn day_coend_formula_swapped(
    theta: &PartialOp,
    fs: &[Copresheaf],
    limits: &Limits,
) -> Result<Copresheaf> {
    coend_formula_impl(theta, fs, FormulaOrder::TupleOuter, limits)
}

/// Both routes to the same Day extension, with the recorded isomorphism.
#[derive(Debug, Clone)]
pub struct RouteEquivalence {
    pub composite: DayResult,
    pub formula: Copresheaf,
    pub iso: IsoCell,
}

/// Compute both routes and search for the natural isomorphism between them.
pub fn route_equivalence(theta: &PartialOp, fs: &[Copresheaf], limits: &Limits) -> Result<RouteEquivalence> {
    let composite = day_extend(theta, fs, limits)?;
    let formula = day_coend_formula(theta, fs, limits)?;
    let iso = crate::prof::find_iso(composite.output.prof(), formula.prof(), limits)?
        .ok_or_else(|| {
            Error::InvalidProfunctor(
                "the two Day extension routes are not isomorphic".into(),
            )
        })?;
    Ok(RouteEquivalence {
        composite,
        formula,
        iso,
    })
}

/// The Day extension applied to 2-cells: from αᵢ: Fᵢ ⇒ Gᵢ produce
/// θ_D(F⃗) ⇒ θ_D(G⃗), by whiskering the product cell with the inner composite.
#[derive(Debug, Clone)]
pub struct DayCells {
    pub source: DayResult,
    pub target: DayResult,
    pub cell: ProfCell,
}

pub fn day_on_cells(theta: &PartialOp, alphas: &[ProfCell], limits: &Limits) -> Result<DayCells> {
    if alphas.len() != theta.arity() {
        return Err(Error::ArityMismatch {
            expected: theta.arity(),
            got: alphas.len(),
        });
    }
    let sources = alphas
        .iter()
        .map(|a| Copresheaf::new(a.source().clone()))
        .collect::<Result<Vec<_>>>()?;
    let targets = alphas
        .iter()
        .map(|a| Copresheaf::new(a.target().clone()))
        .collect::<Result<Vec<_>>>()?;
    let inner = day_inner(theta, limits)?;
    let source = day_extend_cached(theta, &inner, &sources, limits)?;
    let target = day_extend_cached(theta, &inner, &targets, limits)?;
    let prod_cell = ProfCell::from_fn(&source.outer.g, &target.outer.g, |_d, cvec, xs| {
        let cs = cvec.expect_tuple();
        let parts = xs.expect_tuple();
        El::Tuple(
            parts
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    alphas[i]
                        .apply(&El::unit(), &cs[i], x)
                        .expect("component")
                        .clone()
                })
                .collect(),
        )
    })?;
    let inner_id = ProfCell::identity(&inner.prof);
    let cell = horizontal_compose(&prod_cell, &inner_id, &source.outer, &target.outer)?;
    Ok(DayCells {
        source,
        target,
        cell,
    })
}

/// The contravariant action on operation cells: a transformation
/// α: θ ⇒ χ between actions with the same domain induces, at each input
/// tuple F⃗, a cell χ_D(F⃗) ⇒ θ_D(F⃗).
#[derive(Debug, Clone)]
pub struct DayContravariant {
    pub theta_side: DayResult,
    pub chi_side: DayResult,
    /// From chi_side.output to theta_side.output.
    pub cell: ProfCell,
}

pub fn day_contravariant(
    alpha: &NatTrans,
    theta: &PartialOp,
    chi: &PartialOp,
    fs: &[Copresheaf],
    limits: &Limits,
) -> Result<DayContravariant> {
    if theta.domain() != chi.domain() {
        return Err(Error::ShapeMismatch(
            "contravariant action needs operations with the same domain".into(),
        ));
    }
    if alpha.source() != theta.action() || alpha.target() != chi.action() {
        return Err(Error::ShapeMismatch(
            "cell endpoints must be the two operation actions".into(),
        ));
    }
    let cov = hom_covariant(theta.domain().incl());
    let contra_cell = hom_contravariant_cell(alpha)?;
    let inner_chi = compose(&cov, contra_cell.source(), limits)?;
    let inner_theta = compose(&cov, contra_cell.target(), limits)?;
    let inner_cell = horizontal_compose(&ProfCell::identity(&cov), &contra_cell, &inner_chi, &inner_theta)?;

    let chi_side = day_extend_cached(chi, &inner_chi, fs, limits)?;
    let theta_side = day_extend_cached(theta, &inner_theta, fs, limits)?;
    let prodf_id = ProfCell::identity(&chi_side.outer.g);
    let cell = horizontal_compose(&prodf_id, &inner_cell, &chi_side.outer, &theta_side.outer)?;
    Ok(DayContravariant {
        theta_side,
        chi_side,
        cell,
    })
}

/// Replace slot j (0-based) of a tuple element.
fn subst_slot(tuple: &El, j0: usize, x: &El) -> El {
    let mut parts = tuple.expect_tuple().to_vec();
    parts[j0] = x.clone();
    El::Tuple(parts)
}

/// The power morphism that is `m` in slot j and the identity elsewhere,
/// between obj[m-src/j] and obj[m-tgt/j].
fn slot_morphism(base: &FinCategory, obj: &El, j0: usize, m: &El) -> El {
    let parts = obj.expect_tuple();
    El::Tuple(
        parts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == j0 {
                    m.clone()
                } else {
                    base.id_of(c).expect("object").clone()
                }
            })
            .collect(),
    )
}

/// One index point of a residual end at a fixed object.
struct ResidualKey {
    key: El,
    /// Object index (in the base) of c_j, so the value set is G(c_j).
    g_obj: usize,
}

/// The shared context of a residual computation.
struct ResidualCtx<'a> {
    theta: &'a PartialOp,
    j0: usize,
    g: &'a Copresheaf,
    others: &'a [Copresheaf],
    base: FinCategory,
    power: FinCategory,
}

impl<'a> ResidualCtx<'a> {
    fn new(
        theta: &'a PartialOp,
        j: usize,
        g: &'a Copresheaf,
        others: &'a [Copresheaf],
    ) -> Result<ResidualCtx<'a>> {
        if j == 0 || j > theta.arity() {
            return Err(Error::ShapeMismatch(format!(
                "residual index {j} out of range 1..={}",
                theta.arity()
            )));
        }
        if others.len() + 1 != theta.arity() {
            return Err(Error::ArityMismatch {
                expected: theta.arity().saturating_sub(1),
                got: others.len(),
            });
        }
        for f in others.iter().chain([g]) {
            if f.base() != theta.base() {
                return Err(Error::ShapeMismatch(
                    "residual inputs must live over the operation's base".into(),
                ));
            }
        }
        Ok(ResidualCtx {
            theta,
            j0: j - 1,
            g,
            others,
            base: theta.base().clone(),
            power: theta.domain().ambient().clone(),
        })
    }

    /// Product of the fixed inputs over the non-j slots of cvec, in slot
    /// order, as tuple elements.
    fn others_product(&self, cvec: &El) -> FinSet {
        let parts = cvec.expect_tuple();
        let sets: Vec<FinSet> = parts
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.j0)
            .map(|(i, c)| {
                let k = if i < self.j0 { i } else { i - 1 };
                self.others[k].value_at(c).expect("object").clone()
            })
            .collect();
        product(&sets).0
    }

    /// Push a fixed-input tuple along the non-j components of a power
    /// morphism.
    fn push_others(&self, gparts: &[El], xs: &El) -> Result<El> {
        let parts = xs.expect_tuple();
        let mut out = Vec::with_capacity(parts.len());
        for (k, x) in parts.iter().enumerate() {
            let i = if k < self.j0 { k } else { k + 1 };
            out.push(self.others[k].action(&gparts[i])?.apply(x)?.clone());
        }
        Ok(El::Tuple(out))
    }

    /// All index points at object a, in canonical order. The key tuple is
    /// (c⃗, d, u: c⃗[a/j] → i(d), v: θ(d) → c_j, xs).
    fn keys_at(&self, a: &El, limits: &Limits) -> Result<Vec<ResidualKey>> {
        let incl = self.theta.domain().incl();
        let act = self.theta.action();
        let dom = self.theta.domain().sub();
        let mut keys = Vec::new();
        for cvec in self.power.objects().iter() {
            let cj = &cvec.expect_tuple()[self.j0];
            let g_obj = self.base.objects().require(cj, "residual target object")?;
            let cvec_a = subst_slot(cvec, self.j0, a);
            let xs_set = self.others_product(cvec);
            for d in dom.objects().iter() {
                let id = incl.apply_obj(d)?;
                let td = act.apply_obj(d)?;
                for u in self.power.hom(&cvec_a, id)?.iter() {
                    for v in self.base.hom(td, cj)?.iter() {
                        for xs in xs_set.iter() {
                            keys.push(ResidualKey {
                                key: El::tuple(vec![
                                    cvec.clone(),
                                    d.clone(),
                                    u.clone(),
                                    v.clone(),
                                    xs.clone(),
                                ]),
                                g_obj,
                            });
                            limits.check_carrier("residual end index", keys.len() as u128)?;
                        }
                    }
                }
            }
        }
        Ok(keys)
    }

    /// All families at object a: assignments key → G(c_j) satisfying every
    /// dinaturality constraint, encoded as sorted maps.
    fn families_at(&self, a: &El, limits: &Limits) -> Result<FinSet> {
        let keys = self.keys_at(a, limits)?;
        let index: BTreeMap<&El, usize> = keys.iter().enumerate().map(|(i, k)| (&k.key, i)).collect();
        let incl = self.theta.domain().incl();
        let act = self.theta.action();
        let dom = self.theta.domain().sub();

        // Functional constraints val[tgt] = map(val[src]).
        struct Constraint {
            src: usize,
            tgt: usize,
            map: FinFn,
        }
        let mut constraints: Vec<Constraint> = Vec::new();
        let push = |src: &El, tgt: &El, map: FinFn, constraints: &mut Vec<Constraint>| {
            let si = *index.get(src).expect("constraint endpoint is a key");
            let ti = *index.get(tgt).expect("constraint endpoint is a key");
            constraints.push(Constraint { src: si, tgt: ti, map });
        };

        // Domain-side: λ(c⃗, d, u, v′∘θδ, xs) = λ(c⃗, d′, iδ∘u, v′, xs).
        for (mi, delta) in dom.morphisms().iter().enumerate() {
            if mi == dom.id_idx(dom.src_idx(mi)) {
                continue;
            }
            let d = dom.objects().get(dom.src_idx(mi));
            let dp = dom.objects().get(dom.tgt_idx(mi));
            let idl = incl.apply_mor(delta)?;
            let tdl = act.apply_mor(delta)?;
            for cvec in self.power.objects().iter() {
                let cj = &cvec.expect_tuple()[self.j0];
                let cvec_a = subst_slot(cvec, self.j0, a);
                let xs_set = self.others_product(cvec);
                for u in self.power.hom(&cvec_a, incl.apply_obj(d)?)?.iter() {
                    let up = self.power.compose(idl, u)?;
                    for vp in self.base.hom(act.apply_obj(dp)?, cj)?.iter() {
                        let v = self.base.compose(vp, tdl)?;
                        for xs in xs_set.iter() {
                            let k1 = El::tuple(vec![cvec.clone(), d.clone(), u.clone(), v.clone(), xs.clone()]);
                            let k2 = El::tuple(vec![cvec.clone(), dp.clone(), up.clone(), vp.clone(), xs.clone()]);
                            let gi = self.base.objects().require(cj, "object")?;
                            let ident = FinFn::identity(self.g.value_at_idx(gi).clone());
                            push(&k1, &k2, ident.clone(), &mut constraints);
                            push(&k2, &k1, ident, &mut constraints);
                            limits.check_enumeration("residual constraints", constraints.len() as u128)?;
                        }
                    }
                }
            }
        }
        // Tuple-side: G(γ_j)(λ(c⃗, d, u′∘γ⃗[a], v, xs)) = λ(c⃗′, d, u′, γ_j∘v, F⃗(γ⃗)xs).
        for (gi, gvec) in self.power.morphisms().iter().enumerate() {
            if gi == self.power.id_idx(self.power.src_idx(gi)) {
                continue;
            }
            let cvec = self.power.objects().get(self.power.src_idx(gi));
            let cvp = self.power.objects().get(self.power.tgt_idx(gi));
            let gparts = gvec.expect_tuple();
            let gj = &gparts[self.j0];
            let cj = &cvec.expect_tuple()[self.j0];
            let gamma_a = subst_slot(gvec, self.j0, self.base.id_of(a)?);
            let cvp_a = subst_slot(cvp, self.j0, a);
            let g_map = self.g.action(gj)?.clone();
            let xs_set = self.others_product(cvec);
            for d in dom.objects().iter() {
                let id = incl.apply_obj(d)?;
                let td = act.apply_obj(d)?;
                for up in self.power.hom(&cvp_a, id)?.iter() {
                    let u = self.power.compose(up, &gamma_a)?;
                    for v in self.base.hom(td, cj)?.iter() {
                        let vj = self.base.compose(gj, v)?;
                        for xs in xs_set.iter() {
                            let xsp = self.push_others(gparts, xs)?;
                            let k1 = El::tuple(vec![cvec.clone(), d.clone(), u.clone(), v.clone(), xs.clone()]);
                            let k2 = El::tuple(vec![cvp.clone(), d.clone(), up.clone(), vj.clone(), xsp]);
                            push(&k1, &k2, g_map.clone(), &mut constraints);
                            limits.check_enumeration("residual constraints", constraints.len() as u128)?;
                        }
                    }
                }
            }
        }

        // Enumerate assignments by backtracking with forward propagation.
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); keys.len()];
        for (i, c) in constraints.iter().enumerate() {
            out_edges[c.src].push(i);
        }
        let value_sets: Vec<&FinSet> = keys.iter().map(|k| self.g.value_at_idx(k.g_obj)).collect();
        let mut val: Vec<Option<u32>> = vec![None; keys.len()];
        let mut families: Vec<El> = Vec::new();
        let mut budget: u128 = 0;

        fn propagate(
            start: usize,
            val: &mut [Option<u32>],
            out_edges: &[Vec<usize>],
            constraints: &[Constraint],
            value_sets: &[&FinSet],
            trail: &mut Vec<usize>,
        ) -> bool {
            let mut stack = vec![start];
            while let Some(k) = stack.pop() {
                let xv = val[k].expect("propagation source assigned");
                for &ci in &out_edges[k] {
                    let c = &constraints[ci];
                    let x = value_sets[c.src].get(xv as usize);
                    let y = c.map.apply(x).expect("constraint map total");
                    let yi = value_sets[c.tgt].index_of(y).expect("in value set") as u32;
                    match val[c.tgt] {
                        Some(existing) => {
                            if existing != yi {
                                return false;
                            }
                        }
                        None => {
                            val[c.tgt] = Some(yi);
                            trail.push(c.tgt);
                            stack.push(c.tgt);
                        }
                    }
                }
            }
            true
        }

        #[allow(clippy::too_many_arguments)]
        fn search(
            keys: &[ResidualKey],
            value_sets: &[&FinSet],
            out_edges: &[Vec<usize>],
            constraints: &[Constraint],
            val: &mut Vec<Option<u32>>,
            families: &mut Vec<El>,
            budget: &mut u128,
            limits: &Limits,
        ) -> Result<()> {
            let next = val.iter().position(Option::is_none);
            let Some(k) = next else {
                let entries = keys
                    .iter()
                    .enumerate()
                    .map(|(i, key)| {
                        (
                            key.key.clone(),
                            value_sets[i].get(val[i].expect("assigned") as usize).clone(),
                        )
                    })
                    .collect();
                families.push(El::Map(entries));
                limits.check_carrier("residual families", families.len() as u128)?;
                return Ok(());
            };
            for choice in 0..value_sets[k].len() {
                *budget += 1;
                limits.check_enumeration("residual search", *budget)?;
                let mut trail = vec![k];
                val[k] = Some(choice as u32);
                if propagate(k, val, out_edges, constraints, value_sets, &mut trail) {
                    search(keys, value_sets, out_edges, constraints, val, families, budget, limits)?;
                }
                for t in trail {
                    val[t] = None;
                }
            }
            Ok(())
        }

        search(
            &keys,
            &value_sets,
            &out_edges,
            &constraints,
            &mut val,
            &mut families,
            &mut budget,
            limits,
        )?;
        Ok(FinSet::new(families))
    }
}

/// Look up a key in a sorted map element.
fn map_lookup<'m>(map: &'m El, key: &El) -> Option<&'m El> {
    let El::Map(entries) = map else {
        return None;
    };
    entries
        .binary_search_by(|(k, _)| k.cmp(key))
        .ok()
        .map(|i| &entries[i].1)
}

/// The residual of θ in variable j (1-based): the right adjoint value
/// R(a) = end over (c⃗, d) of the function sets
/// [ℂⁿ(c⃗[a/j], i d) × ℂ(θd, c_j) × ∏_{i≠j}F(cᵢ) → G(c_j)], with the action
/// precomposing the first argument.
pub fn residual(
    theta: &PartialOp,
    j: usize,
    g: &Copresheaf,
    others: &[Copresheaf],
    limits: &Limits,
) -> Result<Copresheaf> {
    let ctx = ResidualCtx::new(theta, j, g, others)?;
    let base = ctx.base.clone();
    let values: Vec<FinSet> = base
        .objects()
        .iter()
        .map(|a| ctx.families_at(a, limits))
        .collect::<Result<Vec<_>>>()?;

    let mut right = Vec::with_capacity(base.morphisms().len());
    for (mi, m) in base.morphisms().iter().enumerate() {
        let src = base.src_idx(mi);
        let tgt = base.tgt_idx(mi);
        let a_tgt = base.objects().get(tgt).clone();
        let tgt_keys = ctx.keys_at(&a_tgt, limits)?;
        let fun = FinFn::from_fn(values[src].clone(), values[tgt].clone(), |family| {
            let entries = tgt_keys
                .iter()
                .map(|key| {
                    let parts = key.key.expect_tuple();
                    let (cvec, u) = (&parts[0], &parts[2]);
                    let shifted = slot_morphism(&base, cvec, ctx.j0, m);
                    let u_back = ctx.power.compose(u, &shifted).expect("composable");
                    let src_key = El::tuple(vec![
                        cvec.clone(),
                        parts[1].clone(),
                        u_back.clone(),
                        parts[3].clone(),
                        parts[4].clone(),
                    ]);
                    let val = map_lookup(family, &src_key).expect("source key present");
                    (key.key.clone(), val.clone())
                })
                .collect();
            El::Map(entries)
        })?;
        right.push(fun);
    }
    let left = (0..base.objects().len())
        .map(|ci| FinFn::identity(values[ci].clone()))
        .collect();
    Copresheaf::new(Profunctor::from_tables(
        base.clone(),
        unit_category(),
        values,
        left,
        right,
    )?)
}

/// All natural transformations between copresheaves, in a deterministic
/// order. Backtracks over objects with naturality checked incrementally;
/// each candidate component counts against the enumeration limit.
pub fn enumerate_nat_trans(f: &Copresheaf, g: &Copresheaf, limits: &Limits) -> Result<Vec<ProfCell>> {
    if f.base() != g.base() {
        return Err(Error::ShapeMismatch(
            "transformation enumeration needs a common base".into(),
        ));
    }
    let base = f.base().clone();
    let n = base.objects().len();
    // components[ci]: map from F(c) index to G(c) index.
    let mut components: Vec<Option<Vec<u32>>> = vec![None; n];
    let mut found: Vec<Vec<Vec<u32>>> = Vec::new();
    let mut budget: u128 = 0;

    // Check all naturality squares whose endpoints are both assigned and
    // involve the just-assigned object.
    let check = |components: &[Option<Vec<u32>>], just: usize| -> bool {
        for (mi, _m) in base.morphisms().iter().enumerate() {
            let s = base.src_idx(mi);
            let t = base.tgt_idx(mi);
            if s != just && t != just {
                continue;
            }
            let (Some(phi_s), Some(phi_t)) = (&components[s], &components[t]) else {
                continue;
            };
            let f_act = f.action_idx(mi);
            let g_act = g.action_idx(mi);
            for i in 0..f.value_at_idx(s).len() {
                let via_f = f_act.apply(f.value_at_idx(s).get(i)).expect("action");
                let via_f_idx = f.value_at_idx(t).index_of(via_f).expect("element");
                let lhs = phi_t[via_f_idx];
                let via_g = g_act
                    .apply(g.value_at_idx(s).get(phi_s[i] as usize))
                    .expect("action");
                let rhs = g.value_at_idx(t).index_of(via_g).expect("element") as u32;
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    };

    fn dfs(
        ci: usize,
        n: usize,
        f: &Copresheaf,
        g: &Copresheaf,
        components: &mut Vec<Option<Vec<u32>>>,
        found: &mut Vec<Vec<Vec<u32>>>,
        budget: &mut u128,
        limits: &Limits,
        check: &dyn Fn(&[Option<Vec<u32>>], usize) -> bool,
    ) -> Result<()> {
        if ci == n {
            found.push(
                components
                    .iter()
                    .map(|c| c.clone().expect("assigned"))
                    .collect(),
            );
            limits.check_carrier("transformation count", found.len() as u128)?;
            return Ok(());
        }
        let k = f.value_at_idx(ci).len();
        let m = g.value_at_idx(ci).len();
        if k > 0 && m == 0 {
            return Ok(());
        }
        // Odometer over all m^k candidate component functions.
        let mut cand = vec![0u32; k];
        loop {
            *budget += 1;
            limits.check_enumeration("transformation search", *budget)?;
            components[ci] = Some(cand.clone());
            if check(components, ci) {
                dfs(ci + 1, n, f, g, components, found, budget, limits, check)?;
            }
            components[ci] = None;
            // Advance.
            let mut pos = k;
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                cand[pos] += 1;
                if (cand[pos] as usize) < m {
                    break;
                }
                cand[pos] = 0;
            }
        }
    }

    dfs(0, n, f, g, &mut components, &mut found, &mut budget, limits, &check)?;

    found
        .into_iter()
        .map(|assignment| {
            ProfCell::from_fn(f.prof(), g.prof(), |_d, c, x| {
                let ci = base.objects().index_of(c).expect("object");
                let xi = f.value_at_idx(ci).index_of(x).expect("element");
                g.value_at_idx(ci).get(assignment[ci][xi] as usize).clone()
            })
        })
        .collect()
}

/// The residual adjunction at a fixed instance: θ_D(F⃗) ⇒ G corresponds to
/// F_j ⇒ R, with the two transports implemented explicitly.
#[derive(Debug, Clone)]
pub struct ResidualAdjunction {
    theta: PartialOp,
    j: usize,
    fs: Vec<Copresheaf>,
    g: Copresheaf,
    pub day: DayResult,
    pub residual: Copresheaf,
}

impl ResidualAdjunction {
    pub fn new(
        theta: &PartialOp,
        j: usize,
        fs: &[Copresheaf],
        g: &Copresheaf,
        limits: &Limits,
    ) -> Result<ResidualAdjunction> {
        if fs.len() != theta.arity() {
            return Err(Error::ArityMismatch {
                expected: theta.arity(),
                got: fs.len(),
            });
        }
        if j == 0 || j > theta.arity() {
            return Err(Error::ShapeMismatch(format!(
                "adjunction index {j} out of range 1..={}",
                theta.arity()
            )));
        }
        let others: Vec<Copresheaf> = fs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j - 1)
            .map(|(_, f)| f.clone())
            .collect();
        let day = day_extend(theta, fs, limits)?;
        let res = residual(theta, j, g, &others, limits)?;
        Ok(ResidualAdjunction {
            theta: theta.clone(),
            j,
            fs: fs.to_vec(),
            g: g.clone(),
            day,
            residual: res,
        })
    }

    fn j0(&self) -> usize {
        self.j - 1
    }

    /// Transport κ: θ_D(F⃗) ⇒ G to κ̂: F_j ⇒ R. The family at x ∈ F_j(c) maps
    /// the key (c⃗, d, u, v, xs) to κ evaluated on the Day element built from
    /// c⃗[c/j], xs with x inserted at slot j, and (d, u, v).
    pub fn transport(&self, kappa: &ProfCell, limits: &Limits) -> Result<ProfCell> {
        if kappa.source() != self.day.output.prof() || kappa.target() != self.g.prof() {
            return Err(Error::ShapeMismatch(
                "transport expects a cell from the extension to G".into(),
            ));
        }
        let fj = &self.fs[self.j0()];
        let others: Vec<Copresheaf> = self
            .fs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.j0())
            .map(|(_, f)| f.clone())
            .collect();
        let ctx = ResidualCtx::new(&self.theta, self.j, &self.g, &others)?;
        let j0 = self.j0();
        ProfCell::from_fn(fj.prof(), self.residual.prof(), |_d, c, x| {
            let keys = ctx.keys_at(c, limits).expect("keys enumerate");
            let entries = keys
                .iter()
                .map(|key| {
                    let parts = key.key.expect_tuple();
                    let (cvec, d, u, v, xs) = (&parts[0], &parts[1], &parts[2], &parts[3], &parts[4]);
                    let cvec_c = subst_slot(cvec, j0, c);
                    let xs_parts = xs.expect_tuple();
                    let mut full = Vec::with_capacity(xs_parts.len() + 1);
                    full.extend_from_slice(&xs_parts[..j0]);
                    full.push(x.clone());
                    full.extend_from_slice(&xs_parts[j0..]);
                    let cj = &cvec.expect_tuple()[j0];
                    let element = self
                        .day
                        .element(cj, &cvec_c, &El::Tuple(full), d, u, v)
                        .expect("day element");
                    let out = kappa.apply(&El::unit(), cj, &element).expect("component");
                    (key.key.clone(), out.clone())
                })
                .collect();
            El::Map(entries)
        })
    }

    /// Transport κ̂: F_j ⇒ R back to κ: θ_D(F⃗) ⇒ G. A class representative
    /// (c⃗, xs, (d, u, w)) maps to the family at xs_j evaluated on the key
    /// (c⃗[a/j], d, u, w, xs without slot j).
    pub fn transport_back(&self, kappa_hat: &ProfCell) -> Result<ProfCell> {
        let fj = &self.fs[self.j0()];
        if kappa_hat.source() != fj.prof() || kappa_hat.target() != self.residual.prof() {
            return Err(Error::ShapeMismatch(
                "transport expects a cell from F_j to the residual".into(),
            ));
        }
        let j0 = self.j0();
        ProfCell::from_fn(self.day.output.prof(), self.g.prof(), |_d, a, rep| {
            let outer = rep.expect_tuple();
            let (cvec, xs, inner) = (&outer[0], &outer[1], &outer[2]);
            let it = inner.expect_tuple();
            let (d, u, w) = (&it[0], &it[1], &it[2]);
            let xs_parts = xs.expect_tuple();
            let cj = &cvec.expect_tuple()[j0];
            let family = kappa_hat
                .apply(&El::unit(), cj, &xs_parts[j0])
                .expect("component");
            let mut others = xs_parts.to_vec();
            others.remove(j0);
            let key = El::tuple(vec![
                subst_slot(cvec, j0, a),
                d.clone(),
                u.clone(),
                w.clone(),
                El::Tuple(others),
            ]);
            map_lookup(family, &key).expect("key present").clone()
        })
    }

    /// The residual's action on a cell β: G ⇒ G′: rebuild the adjunction at
    /// G′ and postcompose every family value with the matching component of
    /// β. Returns the adjunction at G′ together with R(β): R_G ⇒ R_G′.
    /// Against `transport`, this exhibits the hom bijection as natural in
    /// the output: transport_G′(β ∘ κ) = R(β) ∘ transport_G(κ).
    pub fn residual_on_cell(
        &self,
        beta: &ProfCell,
        limits: &Limits,
    ) -> Result<(ResidualAdjunction, ProfCell)> {
        if beta.source() != self.g.prof() {
            return Err(Error::ShapeMismatch(
                "the cell must start at this adjunction's output copresheaf".into(),
            ));
        }
        let g2 = Copresheaf::new(beta.target().clone())?;
        let adj2 = ResidualAdjunction::new(&self.theta, self.j, &self.fs, &g2, limits)?;
        let j0 = self.j0();
        let cell = ProfCell::from_fn(
            self.residual.prof(),
            adj2.residual.prof(),
            |_star, _a, family| {
                let El::Map(entries) = family else {
                    unreachable!("residual elements are key-to-value maps")
                };
                let mapped = entries
                    .iter()
                    .map(|(key, value)| {
                        let cj = &key.expect_tuple()[0].expect_tuple()[j0];
                        let image = beta
                            .apply(&El::unit(), cj, value)
                            .expect("a component at every object");
                        (key.clone(), image.clone())
                    })
                    .collect();
                El::Map(mapped)
            },
        )?;
        Ok((adj2, cell))
    }
}
