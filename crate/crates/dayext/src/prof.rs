//! Profunctors between finite categories, composition by coends, the hom
//! embeddings of functors, 2-cells, and the canonical isomorphism witnesses
//! (unitors, associator, bifunctoriality, fullness collapse).
//!
//! Orientation fixed throughout: a profunctor F: ℂ ⇸ 𝔻 is a functor
//! 𝔻ᵒᵖ × ℂ → Set. Its value table is indexed (d, c) with d ∈ 𝔻 (the `to`
//! category, contravariant) first and c ∈ ℂ (the `from` category, covariant)
//! second. Actions are stored one-sided: F(β, 1): F(d,c) → F(d′,c) for
//! β: d′ → d, and F(1, γ): F(d,c) → F(d,c′) for γ: c → c′; the two-sided
//! action is their (commuting) composite.
//!
//! Composite value sets are quotients of coend carriers. Every composite
//! keeps its [`CoendTrace`] so elements can be injected, projected to least
//! representatives, and audited against the full equivalence classes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finbase::{quotient_by_generated, El, FinFn, FinSet, QuotientResult};
use crate::fincat::{FinCategory, FullSubcatInclusion, Functor, NatTrans};
use crate::limits::Limits;

#[derive(Debug, PartialEq, Eq)]
struct ProfData {
    from: FinCategory,
    to: FinCategory,
    /// values[d * |from objects| + c]
    values: Vec<FinSet>,
    /// left[β * |from objects| + c]: F(β,1): value(tgt β, c) → value(src β, c)
    left: Vec<FinFn>,
    /// right[d * |from morphisms| + γ]: F(1,γ): value(d, src γ) → value(d, tgt γ)
    right: Vec<FinFn>,
}

/// A profunctor ℂ ⇸ 𝔻, tabulated. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Profunctor(Arc<ProfData>);

impl PartialEq for Profunctor {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Profunctor {}

impl Profunctor {
    /// Build from explicit tables and validate functoriality exhaustively.
    pub fn from_tables(
        from: FinCategory,
        to: FinCategory,
        values: Vec<FinSet>,
        left: Vec<FinFn>,
        right: Vec<FinFn>,
    ) -> Result<Profunctor> {
        let n_fo = from.objects().len();
        let n_fm = from.morphisms().len();
        let n_to = to.objects().len();
        let n_tm = to.morphisms().len();
        if values.len() != n_to * n_fo {
            return Err(Error::ShapeMismatch("profunctor value table size".into()));
        }
        if left.len() != n_tm * n_fo {
            return Err(Error::ShapeMismatch("profunctor left action table size".into()));
        }
        if right.len() != n_to * n_fm {
            return Err(Error::ShapeMismatch("profunctor right action table size".into()));
        }
        for b in 0..n_tm {
            for c in 0..n_fo {
                let f = &left[b * n_fo + c];
                if f.dom() != &values[to.tgt_idx(b) * n_fo + c]
                    || f.cod() != &values[to.src_idx(b) * n_fo + c]
                {
                    return Err(Error::ShapeMismatch(format!(
                        "left action boundary at ({}, {})",
                        to.morphisms().get(b),
                        from.objects().get(c)
                    )));
                }
            }
        }
        for d in 0..n_to {
            for g in 0..n_fm {
                let f = &right[d * n_fm + g];
                if f.dom() != &values[d * n_fo + from.src_idx(g)]
                    || f.cod() != &values[d * n_fo + from.tgt_idx(g)]
                {
                    return Err(Error::ShapeMismatch(format!(
                        "right action boundary at ({}, {})",
                        to.objects().get(d),
                        from.morphisms().get(g)
                    )));
                }
            }
        }
        let p = Profunctor(Arc::new(ProfData {
            from,
            to,
            values,
            left,
            right,
        }));
        p.validate()?;
        Ok(p)
    }

    /// Build from closures. `value(d, c)` gives the set at a cell;
    /// `left(β, c, x)` is F(β,1)(x); `right(d, γ, x)` is F(1,γ)(x).
    pub fn from_maps(
        from: &FinCategory,
        to: &FinCategory,
        mut value: impl FnMut(&El, &El) -> FinSet,
        mut left: impl FnMut(&El, &El, &El) -> El,
        mut right: impl FnMut(&El, &El, &El) -> El,
    ) -> Result<Profunctor> {
        let n_fo = from.objects().len();
        let mut values = Vec::with_capacity(to.objects().len() * n_fo);
        for d in to.objects().iter() {
            for c in from.objects().iter() {
                values.push(value(d, c));
            }
        }
        let mut left_t = Vec::new();
        for (bi, b) in to.morphisms().iter().enumerate() {
            for (ci, c) in from.objects().iter().enumerate() {
                let dom = values[to.tgt_idx(bi) * n_fo + ci].clone();
                let cod = values[to.src_idx(bi) * n_fo + ci].clone();
                left_t.push(FinFn::from_fn(dom, cod, |x| left(b, c, x))?);
            }
        }
        let mut right_t = Vec::new();
        for (di, d) in to.objects().iter().enumerate() {
            for (gi, g) in from.morphisms().iter().enumerate() {
                let dom = values[di * n_fo + from.src_idx(gi)].clone();
                let cod = values[di * n_fo + from.tgt_idx(gi)].clone();
                right_t.push(FinFn::from_fn(dom, cod, |x| right(d, g, x))?);
            }
        }
        Profunctor::from_tables(from.clone(), to.clone(), values, left_t, right_t)
    }

    /// Functoriality in both variables plus commutation of the one-sided
    /// actions, checked over every instance.
    pub fn validate(&self) -> Result<()> {
        let d = &*self.0;
        let n_fo = d.from.objects().len();
        let n_fm = d.from.morphisms().len();
        for (oi, o) in d.to.objects().iter().enumerate() {
            let id = d.to.id_idx(oi);
            for (ci, c) in d.from.objects().iter().enumerate() {
                if d.left[id * n_fo + ci] != FinFn::identity(d.values[oi * n_fo + ci].clone()) {
                    return Err(Error::InvalidProfunctor(format!(
                        "identity left action is not the identity at ({o}, {c})"
                    )));
                }
            }
        }
        for (di, dd) in d.to.objects().iter().enumerate() {
            for (ci, c) in d.from.objects().iter().enumerate() {
                let id = d.from.id_idx(ci);
                if d.right[di * n_fm + id] != FinFn::identity(d.values[di * n_fo + ci].clone()) {
                    return Err(Error::InvalidProfunctor(format!(
                        "identity right action is not the identity at ({dd}, {c})"
                    )));
                }
            }
        }
        // Contravariant functoriality: action along g∘f equals action along
        // g followed by action along f, per column.
        for (&(g, f), &h) in d.to.comp_table() {
            for ci in 0..n_fo {
                let via = d.left[g as usize * n_fo + ci].then(&d.left[f as usize * n_fo + ci])?;
                if via != d.left[h as usize * n_fo + ci] {
                    return Err(Error::InvalidProfunctor(format!(
                        "left action not functorial at {}∘{}",
                        d.to.morphisms().get(g as usize),
                        d.to.morphisms().get(f as usize)
                    )));
                }
            }
        }
        // Covariant functoriality: action along g∘f equals f then g, per row.
        for (&(g, f), &h) in d.from.comp_table() {
            for di in 0..d.to.objects().len() {
                let via = d.right[di * n_fm + f as usize].then(&d.right[di * n_fm + g as usize])?;
                if via != d.right[di * n_fm + h as usize] {
                    return Err(Error::InvalidProfunctor(format!(
                        "right action not functorial at {}∘{}",
                        d.from.morphisms().get(g as usize),
                        d.from.morphisms().get(f as usize)
                    )));
                }
            }
        }
        // The one-sided actions commute.
        for bi in 0..d.to.morphisms().len() {
            for gi in 0..n_fm {
                let src_b = d.to.src_idx(bi);
                let tgt_b = d.to.tgt_idx(bi);
                let src_g = d.from.src_idx(gi);
                let tgt_g = d.from.tgt_idx(gi);
                let first_right = d.right[tgt_b * n_fm + gi].then(&d.left[bi * n_fo + tgt_g])?;
                let first_left = d.left[bi * n_fo + src_g].then(&d.right[src_b * n_fm + gi])?;
                if first_right != first_left {
                    return Err(Error::InvalidProfunctor(format!(
                        "actions do not commute at ({}, {})",
                        d.to.morphisms().get(bi),
                        d.from.morphisms().get(gi)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from(&self) -> &FinCategory {
        &self.0.from
    }

    pub fn to(&self) -> &FinCategory {
        &self.0.to
    }

    pub fn value_idx(&self, d: usize, c: usize) -> &FinSet {
        &self.0.values[d * self.0.from.objects().len() + c]
    }

    pub fn value(&self, d: &El, c: &El) -> Result<&FinSet> {
        let di = self.0.to.objects().require(d, "profunctor cell (contravariant side)")?;
        let ci = self.0.from.objects().require(c, "profunctor cell (covariant side)")?;
        Ok(self.value_idx(di, ci))
    }

    /// F(β,1): value(tgt β, c) → value(src β, c).
    pub fn left_action_idx(&self, beta: usize, c: usize) -> &FinFn {
        &self.0.left[beta * self.0.from.objects().len() + c]
    }

    pub fn left_action(&self, beta: &El, c: &El) -> Result<&FinFn> {
        let bi = self.0.to.morphisms().require(beta, "left action morphism")?;
        let ci = self.0.from.objects().require(c, "left action column")?;
        Ok(self.left_action_idx(bi, ci))
    }

    /// F(1,γ): value(d, src γ) → value(d, tgt γ).
    pub fn right_action_idx(&self, d: usize, gamma: usize) -> &FinFn {
        &self.0.right[d * self.0.from.morphisms().len() + gamma]
    }

    pub fn right_action(&self, d: &El, gamma: &El) -> Result<&FinFn> {
        let di = self.0.to.objects().require(d, "right action row")?;
        let gi = self.0.from.morphisms().require(gamma, "right action morphism")?;
        Ok(self.right_action_idx(di, gi))
    }

    /// The two-sided action F(β,γ) applied to x ∈ F(tgt β, src γ).
    pub fn act(&self, beta: &El, gamma: &El, x: &El) -> Result<El> {
        let tgt_b = self.0.to.tgt_of(beta)?.clone();
        let step = self.right_action(&tgt_b, gamma)?.apply(x)?.clone();
        let tgt_g = self.0.from.tgt_of(gamma)?.clone();
        Ok(self.left_action(beta, &tgt_g)?.apply(&step)?.clone())
    }

    pub fn total_elements(&self) -> usize {
        self.0.values.iter().map(FinSet::len).sum()
    }

    /// True when every cell has at most one element (the propositional case).
    pub fn is_subterminal(&self) -> bool {
        self.0.values.iter().all(|v| v.len() <= 1)
    }
}

impl fmt::Display for Profunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "profunctor with {} elements over {}×{} cells",
            self.total_elements(),
            self.0.to.objects().len(),
            self.0.from.objects().len()
        )
    }
}

/// The hom embedding of f: ℂ → 𝔻 as a profunctor ℂ ⇸ 𝔻 with
/// value(d, c) = 𝔻(d, f(c)); β acts by precomposition, γ by postcomposition
/// with f(γ).
pub fn hom_covariant(f: &Functor) -> Profunctor {
    let c_cat = f.dom().clone();
    let d_cat = f.cod().clone();
    Profunctor::from_maps(
        &c_cat,
        &d_cat,
        |d, c| {
            d_cat
                .hom(d, f.apply_obj(c).expect("functor object"))
                .expect("objects in range")
        },
        |beta, _c, u| d_cat.compose(u, beta).expect("composable").clone(),
        |_d, gamma, u| {
            d_cat
                .compose(f.apply_mor(gamma).expect("functor morphism"), u)
                .expect("composable")
                .clone()
        },
    )
    .expect("hom embedding is functorial")
}

/// The hom embedding of f: ℂ → 𝔻 as a profunctor 𝔻 ⇸ ℂ with
/// value(c, d) = 𝔻(f(c), d); β (in ℂ) acts by precomposition with f(β),
/// δ (in 𝔻) by postcomposition.
pub fn hom_contravariant(f: &Functor) -> Profunctor {
    let c_cat = f.dom().clone();
    let d_cat = f.cod().clone();
    Profunctor::from_maps(
        &d_cat,
        &c_cat,
        |c, d| {
            d_cat
                .hom(f.apply_obj(c).expect("functor object"), d)
                .expect("objects in range")
        },
        |beta, _d, u| {
            d_cat
                .compose(u, f.apply_mor(beta).expect("functor morphism"))
                .expect("composable")
                .clone()
        },
        |_c, delta, u| d_cat.compose(delta, u).expect("composable").clone(),
    )
    .expect("hom embedding is functorial")
}

/// The identity profunctor ℂ ⇸ ℂ, value(d, c) = ℂ(d, c).
pub fn identity_prof(c: &FinCategory) -> Profunctor {
    hom_covariant(&Functor::identity(c))
}

/// A 2-cell between parallel profunctors: one function per cell, natural in
/// both variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfCell {
    source: Profunctor,
    target: Profunctor,
    /// components[d * |from objects| + c]
    components: Vec<FinFn>,
}

impl ProfCell {
    pub fn new(source: Profunctor, target: Profunctor, components: Vec<FinFn>) -> Result<ProfCell> {
        if source.from() != target.from() || source.to() != target.to() {
            return Err(Error::ShapeMismatch("2-cell needs parallel profunctors".into()));
        }
        let n_fo = source.from().objects().len();
        let n_to = source.to().objects().len();
        if components.len() != n_to * n_fo {
            return Err(Error::ShapeMismatch("2-cell component table size".into()));
        }
        for d in 0..n_to {
            for c in 0..n_fo {
                let f = &components[d * n_fo + c];
                if f.dom() != source.value_idx(d, c) || f.cod() != target.value_idx(d, c) {
                    return Err(Error::ShapeMismatch(format!(
                        "2-cell component boundary at ({}, {})",
                        source.to().objects().get(d),
                        source.from().objects().get(c)
                    )));
                }
            }
        }
        let cell = ProfCell {
            source,
            target,
            components,
        };
        cell.validate()?;
        Ok(cell)
    }

    /// Build componentwise from a closure `map(d, c, x)`.
    pub fn from_fn(
        source: &Profunctor,
        target: &Profunctor,
        mut map: impl FnMut(&El, &El, &El) -> El,
    ) -> Result<ProfCell> {
        let mut components = Vec::new();
        for (di, d) in source.to().objects().iter().enumerate() {
            for (ci, c) in source.from().objects().iter().enumerate() {
                components.push(FinFn::from_fn(
                    source.value_idx(di, ci).clone(),
                    target.value_idx(di, ci).clone(),
                    |x| map(d, c, x),
                )?);
            }
        }
        ProfCell::new(source.clone(), target.clone(), components)
    }

    fn validate(&self) -> Result<()> {
        let n_fo = self.source.from().objects().len();
        let to_cat = self.source.to().clone();
        let from_cat = self.source.from().clone();
        for bi in 0..to_cat.morphisms().len() {
            for c in 0..n_fo {
                let at_tgt = &self.components[to_cat.tgt_idx(bi) * n_fo + c];
                let at_src = &self.components[to_cat.src_idx(bi) * n_fo + c];
                let lhs = self.source.left_action_idx(bi, c).then(at_src)?;
                let rhs = at_tgt.then(self.target.left_action_idx(bi, c))?;
                if lhs != rhs {
                    return Err(Error::InvalidTransformation(format!(
                        "2-cell not natural in the contravariant variable at ({}, {})",
                        to_cat.morphisms().get(bi),
                        from_cat.objects().get(c)
                    )));
                }
            }
        }
        let n_fm = from_cat.morphisms().len();
        for d in 0..to_cat.objects().len() {
            for gi in 0..n_fm {
                let at_src = &self.components[d * n_fo + from_cat.src_idx(gi)];
                let at_tgt = &self.components[d * n_fo + from_cat.tgt_idx(gi)];
                let lhs = self.source.right_action_idx(d, gi).then(at_tgt)?;
                let rhs = at_src.then(self.target.right_action_idx(d, gi))?;
                if lhs != rhs {
                    return Err(Error::InvalidTransformation(format!(
                        "2-cell not natural in the covariant variable at ({}, {})",
                        to_cat.objects().get(d),
                        from_cat.morphisms().get(gi)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn identity(p: &Profunctor) -> ProfCell {
        let n_fo = p.from().objects().len();
        let n_to = p.to().objects().len();
        let components = (0..n_to * n_fo)
            .map(|i| FinFn::identity(p.value_idx(i / n_fo, i % n_fo).clone()))
            .collect();
        ProfCell {
            source: p.clone(),
            target: p.clone(),
            components,
        }
    }

    pub fn source(&self) -> &Profunctor {
        &self.source
    }

    pub fn target(&self) -> &Profunctor {
        &self.target
    }

    pub fn component_idx(&self, d: usize, c: usize) -> &FinFn {
        &self.components[d * self.source.from().objects().len() + c]
    }

    pub fn component(&self, d: &El, c: &El) -> Result<&FinFn> {
        let di = self.source.to().objects().require(d, "2-cell row")?;
        let ci = self.source.from().objects().require(c, "2-cell column")?;
        Ok(self.component_idx(di, ci))
    }

    pub fn apply(&self, d: &El, c: &El, x: &El) -> Result<&El> {
        self.component(d, c)?.apply(x)
    }

    /// Vertical composition: `self` then `next`.
    pub fn then(&self, next: &ProfCell) -> Result<ProfCell> {
        if self.target != next.source {
            return Err(Error::ShapeMismatch(
                "vertical composition: target differs from next source".into(),
            ));
        }
        let components = self
            .components
            .iter()
            .zip(&next.components)
            .map(|(a, b)| a.then(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfCell {
            source: self.source.clone(),
            target: next.target.clone(),
            components,
        })
    }

    pub fn is_iso(&self) -> bool {
        self.components.iter().all(FinFn::is_bijective)
    }

    /// Componentwise inverse; errors when some component is not a bijection.
    pub fn invert(&self) -> Result<ProfCell> {
        let components = self
            .components
            .iter()
            .map(|f| {
                f.inverse().ok_or_else(|| {
                    Error::InvalidTransformation("2-cell is not invertible".into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfCell {
            source: self.target.clone(),
            target: self.source.clone(),
            components,
        })
    }
}

/// Vertical composition as a free function: `second ∘ first`.
pub fn vertical_compose(second: &ProfCell, first: &ProfCell) -> Result<ProfCell> {
    first.then(second)
}

/// An invertible 2-cell with both directions stored and checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoCell {
    forward: ProfCell,
    backward: ProfCell,
}

impl IsoCell {
    pub fn new(forward: ProfCell, backward: ProfCell) -> Result<IsoCell> {
        if forward.source != backward.target || forward.target != backward.source {
            return Err(Error::ShapeMismatch("inverse cell has wrong boundary".into()));
        }
        if forward.then(&backward)? != ProfCell::identity(&forward.source)
            || backward.then(&forward)? != ProfCell::identity(&forward.target)
        {
            return Err(Error::InvalidTransformation(
                "cells are not mutually inverse".into(),
            ));
        }
        Ok(IsoCell { forward, backward })
    }

    /// Invert a cell whose components are all bijections.
    pub fn from_forward(forward: ProfCell) -> Result<IsoCell> {
        let backward = forward.invert()?;
        IsoCell::new(forward, backward)
    }

    pub fn forward(&self) -> &ProfCell {
        &self.forward
    }

    pub fn backward(&self) -> &ProfCell {
        &self.backward
    }

    pub fn source(&self) -> &Profunctor {
        &self.forward.source
    }

    pub fn target(&self) -> &Profunctor {
        &self.forward.target
    }

    pub fn reversed(&self) -> IsoCell {
        IsoCell {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }

    pub fn then(&self, next: &IsoCell) -> Result<IsoCell> {
        IsoCell::new(
            self.forward.then(&next.forward)?,
            next.backward.then(&self.backward)?,
        )
    }
}

/// One coend cell of a composite: the raw carrier of middle-tagged triples
/// (d, x, y) and its quotient by the zigzag relation.
#[derive(Debug, Clone)]
pub struct CoendCell {
    pub raw: FinSet,
    pub quotient: QuotientResult,
}

impl CoendCell {
    /// The injection of the d-summand: form the triple representing
    /// (x, y) ∈ g(e,d) × f(d,c) inside the raw carrier.
    pub fn inject(d: &El, x: &El, y: &El) -> El {
        El::tuple(vec![d.clone(), x.clone(), y.clone()])
    }

    /// Least representative of a raw triple's class.
    pub fn class_of(&self, triple: &El) -> Result<&El> {
        self.quotient.rep_of(triple)
    }

    /// All members of the class of a representative.
    pub fn members_of(&self, rep: &El) -> Result<&FinSet> {
        let i = self.quotient.reps.require(rep, "coend class representative")?;
        Ok(&self.quotient.classes[i])
    }
}

/// The audit trail of a composite profunctor: one quotient per cell.
#[derive(Debug, Clone)]
pub struct CoendTrace {
    to_objects: FinSet,
    from_objects: FinSet,
    cells: Vec<CoendCell>,
}

impl CoendTrace {
    pub fn cell_idx(&self, e: usize, c: usize) -> &CoendCell {
        &self.cells[e * self.from_objects.len() + c]
    }

    pub fn cell(&self, e: &El, c: &El) -> Result<&CoendCell> {
        let ei = self.to_objects.require(e, "coend cell row")?;
        let ci = self.from_objects.require(c, "coend cell column")?;
        Ok(self.cell_idx(ei, ci))
    }

    /// Project a triple (d, x, y) at cell (e, c) to its class representative.
    pub fn class_of(&self, e: &El, c: &El, triple: &El) -> Result<El> {
        Ok(self.cell(e, c)?.class_of(triple)?.clone())
    }
}

/// A composite profunctor with its factors and coend audit trail.
#[derive(Debug, Clone)]
pub struct Composite {
    pub g: Profunctor,
    pub f: Profunctor,
    pub prof: Profunctor,
    pub trace: CoendTrace,
}

impl Composite {
    /// Representative of the class of (x, y) over middle object d at (e, c).
    pub fn class_of(&self, e: &El, c: &El, d: &El, x: &El, y: &El) -> Result<El> {
        self.trace.class_of(e, c, &CoendCell::inject(d, x, y))
    }
}

/// Compose profunctors g: 𝔻 ⇸ 𝔼 and f: ℂ ⇸ 𝔻 into ℂ ⇸ 𝔼 by the coend over
/// 𝔻. The value at (e, c) is the quotient of ⨿_d g(e,d) × f(d,c) by the
/// relation generated by (d, x, f(h,1)(y′)) ∼ (d′, g(1,h)(x), y′) over all
/// middle morphisms h: d → d′; values are the least representatives; actions
/// are induced on representatives. The result is re-validated and in debug
/// builds the induced actions are re-checked against every class member.
pub fn compose(g: &Profunctor, f: &Profunctor, limits: &Limits) -> Result<Composite> {
    if g.from() != f.to() {
        return Err(Error::ShapeMismatch(
            "profunctor composition: middle categories differ".into(),
        ));
    }
    let mid = g.from().clone();
    let e_cat = g.to().clone();
    let c_cat = f.from().clone();
    let n_e = e_cat.objects().len();
    let n_c = c_cat.objects().len();

    let mut cells = Vec::with_capacity(n_e * n_c);
    let mut total_raw: u128 = 0;
    let mut total_rel: u128 = 0;
    for ei in 0..n_e {
        for ci in 0..n_c {
            let mut raw_elems = Vec::new();
            for (di, d) in mid.objects().iter().enumerate() {
                for x in g.value_idx(ei, di).iter() {
                    for y in f.value_idx(di, ci).iter() {
                        raw_elems.push(CoendCell::inject(d, x, y));
                    }
                }
            }
            total_raw += raw_elems.len() as u128;
            limits.check_carrier("coend carrier", total_raw)?;
            let raw = FinSet::new(raw_elems);

            let mut pairs = Vec::new();
            for (hi, _h) in mid.morphisms().iter().enumerate() {
                let di = mid.src_idx(hi);
                let dpi = mid.tgt_idx(hi);
                if hi == mid.id_idx(di) {
                    // Identity middle morphisms relate each triple to itself.
                    continue;
                }
                let d = mid.objects().get(di);
                let dp = mid.objects().get(dpi);
                let f_back = f.left_action_idx(hi, ci);
                let g_fwd = g.right_action_idx(ei, hi);
                for x in g.value_idx(ei, di).iter() {
                    let x_fwd = g_fwd.apply(x)?;
                    for yp in f.value_idx(dpi, ci).iter() {
                        let lhs = CoendCell::inject(d, x, f_back.apply(yp)?);
                        let rhs = CoendCell::inject(dp, x_fwd, yp);
                        pairs.push((lhs, rhs));
                    }
                }
            }
            total_rel += pairs.len() as u128;
            limits.check_enumeration("coend relation generation", total_rel)?;
            let quotient = quotient_by_generated(&raw, &pairs)?;
            cells.push(CoendCell { raw, quotient });
        }
    }

    let values: Vec<FinSet> = cells.iter().map(|cl| cl.quotient.reps.clone()).collect();

    // Induced actions on representatives: act on one component of the triple,
    // then project back to the representative in the target cell.
    let mid_objs = mid.objects().clone();
    let mut left = Vec::with_capacity(e_cat.morphisms().len() * n_c);
    for bi in 0..e_cat.morphisms().len() {
        let row_dom = e_cat.tgt_idx(bi);
        let row_cod = e_cat.src_idx(bi);
        for ci in 0..n_c {
            let cod_cell = &cells[row_cod * n_c + ci];
            let fun = FinFn::from_fn(
                values[row_dom * n_c + ci].clone(),
                values[row_cod * n_c + ci].clone(),
                |rep| {
                    let t = rep.expect_tuple();
                    let di = mid_objs.index_of(&t[0]).expect("middle object");
                    let moved = g.left_action_idx(bi, di).apply(&t[1]).expect("action");
                    let triple = El::tuple(vec![t[0].clone(), moved.clone(), t[2].clone()]);
                    cod_cell.class_of(&triple).expect("class").clone()
                },
            )?;
            left.push(fun);
        }
    }
    let n_cm = c_cat.morphisms().len();
    let mut right = Vec::with_capacity(n_e * n_cm);
    for ei in 0..n_e {
        for gi in 0..n_cm {
            let col_dom = c_cat.src_idx(gi);
            let col_cod = c_cat.tgt_idx(gi);
            let cod_cell = &cells[ei * n_c + col_cod];
            let fun = FinFn::from_fn(
                values[ei * n_c + col_dom].clone(),
                values[ei * n_c + col_cod].clone(),
                |rep| {
                    let t = rep.expect_tuple();
                    let di = mid_objs.index_of(&t[0]).expect("middle object");
                    let moved = f.right_action_idx(di, gi).apply(&t[2]).expect("action");
                    let triple = El::tuple(vec![t[0].clone(), t[1].clone(), moved.clone()]);
                    cod_cell.class_of(&triple).expect("class").clone()
                },
            )?;
            right.push(fun);
        }
    }

    // Well-definedness audit: in debug builds, re-derive each action from
    // every member of every class and demand the same representative.
    #[cfg(debug_assertions)]
    {
        for bi in 0..e_cat.morphisms().len() {
            let row_dom = e_cat.tgt_idx(bi);
            let row_cod = e_cat.src_idx(bi);
            for ci in 0..n_c {
                let dom_cell = &cells[row_dom * n_c + ci];
                let cod_cell = &cells[row_cod * n_c + ci];
                let fun = &left[bi * n_c + ci];
                for rep in dom_cell.quotient.reps.iter() {
                    let expected = fun.apply(rep)?;
                    for member in dom_cell.members_of(rep)?.iter() {
                        let t = member.expect_tuple();
                        let di = mid_objs.index_of(&t[0]).expect("middle object");
                        let moved = g.left_action_idx(bi, di).apply(&t[1])?;
                        let triple = El::tuple(vec![t[0].clone(), moved.clone(), t[2].clone()]);
                        assert_eq!(
                            cod_cell.class_of(&triple)?,
                            expected,
                            "coend left action is not well-defined"
                        );
                    }
                }
            }
        }
        for ei in 0..n_e {
            for gi in 0..n_cm {
                let col_dom = c_cat.src_idx(gi);
                let col_cod = c_cat.tgt_idx(gi);
                let dom_cell = &cells[ei * n_c + col_dom];
                let cod_cell = &cells[ei * n_c + col_cod];
                let fun = &right[ei * n_cm + gi];
                for rep in dom_cell.quotient.reps.iter() {
                    let expected = fun.apply(rep)?;
                    for member in dom_cell.members_of(rep)?.iter() {
                        let t = member.expect_tuple();
                        let di = mid_objs.index_of(&t[0]).expect("middle object");
                        let moved = f.right_action_idx(di, gi).apply(&t[2])?;
                        let triple = El::tuple(vec![t[0].clone(), t[1].clone(), moved.clone()]);
                        assert_eq!(
                            cod_cell.class_of(&triple)?,
                            expected,
                            "coend right action is not well-defined"
                        );
                    }
                }
            }
        }
    }

    let prof = Profunctor::from_tables(c_cat.clone(), e_cat.clone(), values, left, right)?;
    Ok(Composite {
        g: g.clone(),
        f: f.clone(),
        prof,
        trace: CoendTrace {
            to_objects: e_cat.objects().clone(),
            from_objects: c_cat.objects().clone(),
            cells,
        },
    })
}

/// Which unit law a unitor witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitorSide {
    Left,
    Right,
}

/// The unit-law isomorphism: compose(identity, f) ≅ f (left) or
/// compose(f, identity) ≅ f (right). Returns the composite together with the
/// invertible cell from it to f.
pub fn unitor_witness(side: UnitorSide, f: &Profunctor, limits: &Limits) -> Result<(Composite, IsoCell)> {
    match side {
        UnitorSide::Left => {
            let comp = compose(&identity_prof(f.to()), f, limits)?;
            // (m, u: d → m, p) ↦ F(u,1)(p); back: p ↦ [(d, 1_d, p)].
            let forward = ProfCell::from_fn(&comp.prof, f, |_d, c, rep| {
                let t = rep.expect_tuple();
                f.left_action(&t[1], c)
                    .expect("action")
                    .apply(&t[2])
                    .expect("element")
                    .clone()
            })?;
            let backward = ProfCell::from_fn(f, &comp.prof, |d, c, p| {
                let id = f.to().id_of(d).expect("object").clone();
                comp.class_of(d, c, d, &id, p).expect("class")
            })?;
            let iso = IsoCell::new(forward, backward)?;
            Ok((comp, iso))
        }
        UnitorSide::Right => {
            let comp = compose(f, &identity_prof(f.from()), limits)?;
            // (m, p, v: m → c) ↦ F(1,v)(p); back: p ↦ [(c, p, 1_c)].
            let forward = ProfCell::from_fn(&comp.prof, f, |d, _c, rep| {
                let t = rep.expect_tuple();
                f.right_action(d, &t[2])
                    .expect("action")
                    .apply(&t[1])
                    .expect("element")
                    .clone()
            })?;
            let backward = ProfCell::from_fn(f, &comp.prof, |d, c, p| {
                let id = f.from().id_of(c).expect("object").clone();
                comp.class_of(d, c, c, p, &id).expect("class")
            })?;
            let iso = IsoCell::new(forward, backward)?;
            Ok((comp, iso))
        }
    }
}

/// Both association orders of a triple composite, with the canonical
/// isomorphism (h∘g)∘f ≅ h∘(g∘f) given by re-grouping representatives.
#[derive(Debug, Clone)]
pub struct Associated {
    pub hg: Composite,
    pub hg_f: Composite,
    pub gf: Composite,
    pub h_gf: Composite,
    /// From hg_f.prof to h_gf.prof.
    pub iso: IsoCell,
}

pub fn associator_witness(
    h: &Profunctor,
    g: &Profunctor,
    f: &Profunctor,
    limits: &Limits,
) -> Result<Associated> {
    let hg = compose(h, g, limits)?;
    let hg_f = compose(&hg.prof, f, limits)?;
    let gf = compose(g, f, limits)?;
    let h_gf = compose(h, &gf.prof, limits)?;

    // (d, [(e, x, z)], y) ↦ (e, x, [(d, z, y)])
    let forward = ProfCell::from_fn(&hg_f.prof, &h_gf.prof, |w, c, rep| {
        let outer = rep.expect_tuple();
        let d = &outer[0];
        let inner = outer[1].expect_tuple();
        let (e, x, z) = (&inner[0], &inner[1], &inner[2]);
        let regrouped = gf.class_of(e, c, d, z, &outer[2]).expect("class");
        h_gf.class_of(w, c, e, x, &regrouped).expect("class")
    })?;
    let backward = ProfCell::from_fn(&h_gf.prof, &hg_f.prof, |w, c, rep| {
        let outer = rep.expect_tuple();
        let e = &outer[0];
        let inner = outer[2].expect_tuple();
        let (d, z, y) = (&inner[0], &inner[1], &inner[2]);
        let regrouped = hg.class_of(w, d, e, &outer[1], z).expect("class");
        hg_f.class_of(w, c, d, &regrouped, y).expect("class")
    })?;
    let iso = IsoCell::new(forward, backward)?;
    Ok(Associated {
        hg,
        hg_f,
        gf,
        h_gf,
        iso,
    })
}

/// Which hom embedding a bifunctoriality witness is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Covariant,
    Contravariant,
}

/// The bifunctoriality isomorphism of the hom embeddings, for composable
/// functors g: 𝔸 → 𝔹 and f: 𝔹 → ℂ.
///
/// Contravariant: compose(hom_contravariant(g), hom_contravariant(f)) ≅
/// hom_contravariant(f∘g), by (b, u: g(a) → b, v: f(b) → c) ↦ v∘f(u).
/// Covariant: compose(hom_covariant(f), hom_covariant(g)) ≅
/// hom_covariant(f∘g), by (b, u: c → f(b), v: b → g(a)) ↦ f(v)∘u.
pub fn bifunctoriality_witness(
    variance: Variance,
    g: &Functor,
    f: &Functor,
    limits: &Limits,
) -> Result<(Composite, IsoCell)> {
    if g.cod() != f.dom() {
        return Err(Error::ShapeMismatch(
            "bifunctoriality witness needs composable functors".into(),
        ));
    }
    let fg = g.then(f)?;
    let c_cat = f.cod().clone();
    match variance {
        Variance::Contravariant => {
            let comp = compose(&hom_contravariant(g), &hom_contravariant(f), limits)?;
            let target = hom_contravariant(&fg);
            let forward = ProfCell::from_fn(&comp.prof, &target, |_a, _c, rep| {
                let t = rep.expect_tuple();
                let fu = f.apply_mor(&t[1]).expect("morphism");
                c_cat.compose(&t[2], fu).expect("composable").clone()
            })?;
            let backward = ProfCell::from_fn(&target, &comp.prof, |a, c, w| {
                let ga = g.apply_obj(a).expect("object");
                let id = g.cod().id_of(ga).expect("object").clone();
                comp.class_of(a, c, ga, &id, w).expect("class")
            })?;
            let iso = IsoCell::new(forward, backward)?;
            Ok((comp, iso))
        }
        Variance::Covariant => {
            let comp = compose(&hom_covariant(f), &hom_covariant(g), limits)?;
            let target = hom_covariant(&fg);
            let forward = ProfCell::from_fn(&comp.prof, &target, |_c, _a, rep| {
                let t = rep.expect_tuple();
                let fv = f.apply_mor(&t[2]).expect("morphism");
                c_cat.compose(fv, &t[1]).expect("composable").clone()
            })?;
            let backward = ProfCell::from_fn(&target, &comp.prof, |c, a, w| {
                let ga = g.apply_obj(a).expect("object");
                let id = g.cod().id_of(ga).expect("object").clone();
                comp.class_of(c, a, ga, w, &id).expect("class")
            })?;
            let iso = IsoCell::new(forward, backward)?;
            Ok((comp, iso))
        }
    }
}

/// The mixed collapse for a full inclusion i: compose(hom_contravariant(i),
/// hom_covariant(i)) ≅ identity on the subcategory, by
/// (x, u: i(e) → x, v: x → i(c)) ↦ v∘u, which lies in the subcategory by
/// fullness.
pub fn fullness_collapse_witness(
    incl: &FullSubcatInclusion,
    limits: &Limits,
) -> Result<(Composite, IsoCell)> {
    let i = incl.incl();
    let comp = compose(&hom_contravariant(i), &hom_covariant(i), limits)?;
    let target = identity_prof(incl.sub());
    let amb = incl.ambient().clone();
    let forward = ProfCell::from_fn(&comp.prof, &target, |_e, _c, rep| {
        let t = rep.expect_tuple();
        amb.compose(&t[2], &t[1]).expect("composable").clone()
    })?;
    let backward = ProfCell::from_fn(&target, &comp.prof, |e, c, w| {
        let id = incl.sub().id_of(e).expect("object").clone();
        comp.class_of(e, c, e, &id, w).expect("class")
    })?;
    let iso = IsoCell::new(forward, backward)?;
    Ok((comp, iso))
}

/// The two-sided collapse: compose(hom_contravariant(g), hom_covariant(f)) ≅
/// the hom profunctor (e, c) ↦ 𝔻(g(e), f(c)), by (d, u, v) ↦ v∘u.
pub fn two_sided_witness(
    g: &Functor,
    f: &Functor,
    limits: &Limits,
) -> Result<(Composite, IsoCell)> {
    if g.cod() != f.cod() {
        return Err(Error::ShapeMismatch(
            "two-sided witness needs functors into a common category".into(),
        ));
    }
    let d_cat = f.cod().clone();
    let comp = compose(&hom_contravariant(g), &hom_covariant(f), limits)?;
    let target = Profunctor::from_maps(
        f.dom(),
        g.dom(),
        |e, c| {
            d_cat
                .hom(
                    g.apply_obj(e).expect("object"),
                    f.apply_obj(c).expect("object"),
                )
                .expect("objects in range")
        },
        |beta, _c, u| {
            let gb = g.apply_mor(beta).expect("morphism");
            d_cat.compose(u, gb).expect("composable").clone()
        },
        |_e, gamma, u| {
            let fg = f.apply_mor(gamma).expect("morphism");
            d_cat.compose(fg, u).expect("composable").clone()
        },
    )?;
    let forward = ProfCell::from_fn(&comp.prof, &target, |_e, _c, rep| {
        let t = rep.expect_tuple();
        d_cat.compose(&t[2], &t[1]).expect("composable").clone()
    })?;
    let backward = ProfCell::from_fn(&target, &comp.prof, |e, c, w| {
        let ge = g.apply_obj(e).expect("object");
        let id = d_cat.id_of(ge).expect("object").clone();
        comp.class_of(e, c, ge, &id, w).expect("class")
    })?;
    let iso = IsoCell::new(forward, backward)?;
    Ok((comp, iso))
}

/// Horizontal composition of 2-cells over given composites:
/// β: g ⇒ g′ beside α: f ⇒ f′ gives compose(g,f) ⇒ compose(g′,f′), acting on
/// representatives componentwise. Whiskering is the case where one side is an
/// identity cell.
pub fn horizontal_compose(
    beta: &ProfCell,
    alpha: &ProfCell,
    source: &Composite,
    target: &Composite,
) -> Result<ProfCell> {
    if source.g != *beta.source() || source.f != *alpha.source() {
        return Err(Error::ShapeMismatch(
            "horizontal composition: source composite has different factors".into(),
        ));
    }
    if target.g != *beta.target() || target.f != *alpha.target() {
        return Err(Error::ShapeMismatch(
            "horizontal composition: target composite has different factors".into(),
        ));
    }
    ProfCell::from_fn(&source.prof, &target.prof, |e, c, rep| {
        let t = rep.expect_tuple();
        let d = &t[0];
        let x = beta.apply(e, d, &t[1]).expect("component");
        let y = alpha.apply(d, c, &t[2]).expect("component");
        target.class_of(e, c, d, x, y).expect("class")
    })
}

/// Image of a natural transformation α: F ⇒ G under the covariant hom
/// embedding: hom_covariant(F) ⇒ hom_covariant(G), u ↦ α_c ∘ u.
pub fn hom_covariant_cell(alpha: &NatTrans) -> Result<ProfCell> {
    let d_cat = alpha.source().cod().clone();
    ProfCell::from_fn(
        &hom_covariant(alpha.source()),
        &hom_covariant(alpha.target()),
        |_d, c, u| {
            let comp = alpha.component(c).expect("component");
            d_cat.compose(comp, u).expect("composable").clone()
        },
    )
}

/// Image of α: F ⇒ G under the contravariant hom embedding; direction
/// reverses: hom_contravariant(G) ⇒ hom_contravariant(F), u ↦ u ∘ α_c.
pub fn hom_contravariant_cell(alpha: &NatTrans) -> Result<ProfCell> {
    let d_cat = alpha.source().cod().clone();
    ProfCell::from_fn(
        &hom_contravariant(alpha.target()),
        &hom_contravariant(alpha.source()),
        |c, _d, u| {
            let comp = alpha.component(c).expect("component");
            d_cat.compose(u, comp).expect("composable").clone()
        },
    )
}

/// Search for a natural isomorphism between parallel profunctors.
///
/// Prunes by per-cell cardinality, then backtracks over componentwise
/// bijections, checking naturality against every already-assigned cell.
/// Returns a validated witness, or None when the search space is exhausted.
/// Each candidate bijection counts against the enumeration limit.
pub fn find_iso(p: &Profunctor, q: &Profunctor, limits: &Limits) -> Result<Option<IsoCell>> {
    if p.from() != q.from() || p.to() != q.to() {
        return Err(Error::ShapeMismatch("iso search needs parallel profunctors".into()));
    }
    let n_fo = p.from().objects().len();
    let n_to = p.to().objects().len();
    let n_cells = n_to * n_fo;
    for d in 0..n_to {
        for c in 0..n_fo {
            if p.value_idx(d, c).len() != q.value_idx(d, c).len() {
                return Ok(None);
            }
        }
    }

    // Naturality constraints as edges between cells, one per (β, c) / (d, γ).
    struct Edge {
        dom_cell: usize,
        cod_cell: usize,
        p_map: FinFn,
        q_map: FinFn,
    }
    let mut edges = Vec::new();
    for b in 0..p.to().morphisms().len() {
        for c in 0..n_fo {
            edges.push(Edge {
                dom_cell: p.to().tgt_idx(b) * n_fo + c,
                cod_cell: p.to().src_idx(b) * n_fo + c,
                p_map: p.left_action_idx(b, c).clone(),
                q_map: q.left_action_idx(b, c).clone(),
            });
        }
    }
    for d in 0..n_to {
        for g in 0..p.from().morphisms().len() {
            edges.push(Edge {
                dom_cell: d * n_fo + p.from().src_idx(g),
                cod_cell: d * n_fo + p.from().tgt_idx(g),
                p_map: p.right_action_idx(d, g).clone(),
                q_map: q.right_action_idx(d, g).clone(),
            });
        }
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
    for (i, e) in edges.iter().enumerate() {
        incident[e.dom_cell].push(i);
        if e.cod_cell != e.dom_cell {
            incident[e.cod_cell].push(i);
        }
    }

    // assign[cell][i] = index in q's value of the image of p's i-th element.
    let mut assign: Vec<Option<Vec<u32>>> = vec![None; n_cells];
    let mut budget: u128 = 0;

    fn edge_ok(e: &Edge, assign: &[Option<Vec<u32>>], p: &Profunctor, q: &Profunctor, n_fo: usize) -> bool {
        let (Some(phi_dom), Some(phi_cod)) = (&assign[e.dom_cell], &assign[e.cod_cell]) else {
            return true;
        };
        let q_cod = q.value_idx(e.cod_cell / n_fo, e.cod_cell % n_fo);
        let p_cod = p.value_idx(e.cod_cell / n_fo, e.cod_cell % n_fo);
        for i in 0..phi_dom.len() {
            // φ(P-action(x)) must equal Q-action(φ(x)).
            let px = p_cod
                .index_of(e.p_map.apply(p.value_idx(e.dom_cell / n_fo, e.dom_cell % n_fo).get(i)).expect("action"))
                .expect("in codomain");
            let lhs = phi_cod[px];
            let qx = e
                .q_map
                .apply(q.value_idx(e.dom_cell / n_fo, e.dom_cell % n_fo).get(phi_dom[i] as usize))
                .expect("action");
            let rhs = q_cod.index_of(qx).expect("in codomain") as u32;
            if lhs != rhs {
                return false;
            }
        }
        true
    }

    fn dfs(
        cell: usize,
        n_cells: usize,
        n_fo: usize,
        p: &Profunctor,
        q: &Profunctor,
        incident: &[Vec<usize>],
        edges: &[Edge],
        assign: &mut Vec<Option<Vec<u32>>>,
        budget: &mut u128,
        limits: &Limits,
    ) -> Result<bool> {
        if cell == n_cells {
            return Ok(true);
        }
        let k = p.value_idx(cell / n_fo, cell % n_fo).len();
        // Iterate permutations of 0..k in lexicographic order.
        let mut perm: Vec<u32> = (0..k as u32).collect();
        loop {
            *budget += 1;
            limits.check_enumeration("iso search", *budget)?;
            assign[cell] = Some(perm.clone());
            if incident[cell].iter().all(|&ei| edge_ok(&edges[ei], assign, p, q, n_fo)) {
                if dfs(cell + 1, n_cells, n_fo, p, q, incident, edges, assign, budget, limits)? {
                    return Ok(true);
                }
            }
            assign[cell] = None;
            if !next_permutation(&mut perm) {
                return Ok(false);
            }
        }
    }

    let found = dfs(0, n_cells, n_fo, p, q, &incident, &edges, &mut assign, &mut budget, limits)?;
    if !found {
        return Ok(None);
    }
    let components = (0..n_cells)
        .map(|cell| {
            let phi = assign[cell].as_ref().expect("assigned");
            let dom = p.value_idx(cell / n_fo, cell % n_fo).clone();
            let cod = q.value_idx(cell / n_fo, cell % n_fo).clone();
            FinFn::from_fn(dom, cod.clone(), |x| {
                let i = p
                    .value_idx(cell / n_fo, cell % n_fo)
                    .index_of(x)
                    .expect("element");
                cod.get(phi[i] as usize).clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let forward = ProfCell::new(p.clone(), q.clone(), components)?;
    Ok(Some(IsoCell::from_forward(forward)?))
}

/// Advance to the next lexicographic permutation; false when wrapped.
fn next_permutation(perm: &mut [u32]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}
