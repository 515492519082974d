//! Building validated structures from parsed blocks: categories with
//! implicit identities, posets, heap models, partial operations with thin
//! lifts or explicit arrow maps, spans, relations as subterminal
//! profunctors, theories with linear equations, and raw valuations resolved
//! against a model at use time.

use std::collections::BTreeMap;

use dayext::finbase::{El, FinFn, FinSet};
use dayext::fincat::{power, FinCategory, Functor, PartialOp, SpanOp};
use dayext::kripke::{HeapModel, KripkeFrame, Model, Valuation};
use dayext::operad::{Equation, Term, Theory};
use dayext::prof::Profunctor;
use dayext::Limits;

use crate::dsl::{self, Block, TermAst};
use crate::error::{CliError, CliResult};

/// Everything the tool can name: built once from parsed blocks, with every
/// structure fully validated.
#[derive(Debug, Clone)]
pub struct Workspace {
    blocks: Vec<Block>,
    categories: BTreeMap<String, FinCategory>,
    frames: BTreeMap<String, KripkeFrame>,
    models: BTreeMap<String, HeapModel>,
    ops: BTreeMap<String, PartialOp>,
    spans: BTreeMap<String, SpanOp>,
    relations: BTreeMap<String, Profunctor>,
    theories: BTreeMap<String, Theory>,
    valuations: BTreeMap<String, Vec<(String, Vec<String>)>>,
}

impl Workspace {
    /// Parse and validate sources, each given as (display name, text).
    pub fn parse(sources: &[(String, String)], limits: &Limits) -> CliResult<Workspace> {
        let mut blocks = Vec::new();
        for (_, text) in sources {
            blocks.extend(dsl::parse(text)?);
        }
        Workspace::from_blocks(blocks, limits)
    }

    pub fn from_blocks(blocks: Vec<Block>, limits: &Limits) -> CliResult<Workspace> {
        let mut ws = Workspace {
            blocks: Vec::new(),
            categories: BTreeMap::new(),
            frames: BTreeMap::new(),
            models: BTreeMap::new(),
            ops: BTreeMap::new(),
            spans: BTreeMap::new(),
            relations: BTreeMap::new(),
            theories: BTreeMap::new(),
            valuations: BTreeMap::new(),
        };
        let mut normalized = blocks;
        for b in normalized.iter_mut() {
            b.normalize();
        }
        // Categories and posets first: everything else references them.
        for block in &normalized {
            match block {
                Block::Category(b) => {
                    let cat = build_category(b)?;
                    if ws.categories.insert(b.name.clone(), cat).is_some() {
                        return Err(CliError::semantic(
                            "category",
                            &b.name,
                            "another category or poset already uses this name",
                        ));
                    }
                }
                Block::Poset(b) => {
                    let (cat, frame) = build_poset(b)?;
                    if ws.categories.insert(b.name.clone(), cat).is_some() {
                        return Err(CliError::semantic(
                            "poset",
                            &b.name,
                            "another category or poset already uses this name",
                        ));
                    }
                    ws.frames.insert(b.name.clone(), frame);
                }
                _ => {}
            }
        }
        for block in &normalized {
            match block {
                Block::Category(_) | Block::Poset(_) => {}
                Block::HeapModel(b) => {
                    let model = build_heap_model(b, limits)?;
                    if ws.models.insert(b.name.clone(), model).is_some() {
                        return Err(CliError::semantic(
                            "heapmodel",
                            &b.name,
                            "another heap model already uses this name",
                        ));
                    }
                }
                Block::Op(b) => {
                    let base = ws.category_named(&b.base).map_err(|_| {
                        CliError::semantic(
                            "op",
                            &b.name,
                            format!("unknown base category `{}`", b.base),
                        )
                    })?;
                    let op = build_op(b, base, limits)?;
                    if ws.ops.insert(b.name.clone(), op).is_some() {
                        return Err(CliError::semantic(
                            "op",
                            &b.name,
                            "another operation already uses this name",
                        ));
                    }
                }
                Block::Span(b) => {
                    let base = ws.category_named(&b.base).map_err(|_| {
                        CliError::semantic(
                            "span",
                            &b.name,
                            format!("unknown base category `{}`", b.base),
                        )
                    })?;
                    let apex = ws.category_named(&b.apex).map_err(|_| {
                        CliError::semantic(
                            "span",
                            &b.name,
                            format!("unknown apex category `{}`", b.apex),
                        )
                    })?;
                    let span = build_span(b, base, apex, limits)?;
                    if ws.spans.insert(b.name.clone(), span).is_some() {
                        return Err(CliError::semantic(
                            "span",
                            &b.name,
                            "another span already uses this name",
                        ));
                    }
                }
                Block::Relation(b) => {
                    let from = ws.category_named(&b.from).map_err(|_| {
                        CliError::semantic(
                            "relation",
                            &b.name,
                            format!("unknown source category `{}`", b.from),
                        )
                    })?;
                    let to = ws.category_named(&b.to).map_err(|_| {
                        CliError::semantic(
                            "relation",
                            &b.name,
                            format!("unknown target category `{}`", b.to),
                        )
                    })?;
                    let rel = build_relation(b, from, to)?;
                    if ws.relations.insert(b.name.clone(), rel).is_some() {
                        return Err(CliError::semantic(
                            "relation",
                            &b.name,
                            "another relation already uses this name",
                        ));
                    }
                }
                Block::Theory(b) => {
                    let theory = build_theory(b)?;
                    if ws.theories.insert(b.name.clone(), theory).is_some() {
                        return Err(CliError::semantic(
                            "theory",
                            &b.name,
                            "another theory already uses this name",
                        ));
                    }
                }
                Block::Valuation(b) => {
                    if ws
                        .valuations
                        .insert(b.name.clone(), b.atoms.clone())
                        .is_some()
                    {
                        return Err(CliError::semantic(
                            "valuation",
                            &b.name,
                            "another valuation already uses this name",
                        ));
                    }
                }
            }
        }
        ws.blocks = normalized;
        Ok(ws)
    }

    /// Render the workspace in the canonical text form.
    pub fn serialize(&self) -> String {
        dsl::serialize(&self.blocks)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn category_named(&self, name: &str) -> CliResult<&FinCategory> {
        self.categories.get(name).ok_or_else(|| {
            CliError::Usage(format!("no category or poset named `{name}`"))
        })
    }

    pub fn frame_named(&self, name: &str) -> CliResult<&KripkeFrame> {
        if let Some(f) = self.frames.get(name) {
            return Ok(f);
        }
        if let Some(m) = self.models.get(name) {
            return Ok(m.heaps());
        }
        Err(CliError::Usage(format!(
            "no poset or heap model named `{name}`"
        )))
    }

    /// A heap model by name, or a bare poset as a frame-only model.
    pub fn model_named(&self, name: &str) -> CliResult<Model> {
        if let Some(m) = self.models.get(name) {
            return Ok(Model::Heap(m.clone()));
        }
        if let Some(f) = self.frames.get(name) {
            return Ok(Model::Frame(f.clone()));
        }
        Err(CliError::Usage(format!(
            "no heap model or poset named `{name}`"
        )))
    }

    pub fn heap_model_named(&self, name: &str) -> CliResult<&HeapModel> {
        self.models
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("no heap model named `{name}`")))
    }

    /// An operation by name; a heap model's name resolves to its join.
    pub fn op_named(&self, name: &str) -> CliResult<&PartialOp> {
        if let Some(op) = self.ops.get(name) {
            return Ok(op);
        }
        if let Some(m) = self.models.get(name) {
            return Ok(m.join());
        }
        Err(CliError::Usage(format!(
            "no operation or heap model named `{name}`"
        )))
    }

    pub fn span_named(&self, name: &str) -> CliResult<&SpanOp> {
        self.spans
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("no span named `{name}`")))
    }

    pub fn relation_named(&self, name: &str) -> CliResult<&Profunctor> {
        self.relations
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("no relation named `{name}`")))
    }

    pub fn theory_named(&self, name: &str) -> CliResult<&Theory> {
        self.theories
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("no theory named `{name}`")))
    }

    /// Resolve a named valuation against a model's frame, validating world
    /// membership and upward closure.
    pub fn valuation_for(&self, name: &str, model: &Model) -> CliResult<Valuation> {
        let raw = self
            .valuations
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("no valuation named `{name}`")))?;
        let frame = model.frame();
        let mut v = Valuation::new(frame.worlds());
        for (atom, worlds) in raw {
            let mut els = Vec::with_capacity(worlds.len());
            for w in worlds {
                let el = El::name(w);
                if !frame.elements().contains(&el) {
                    return Err(CliError::semantic(
                        "valuation",
                        name,
                        format!("atom `{atom}` names `{w}`, which is not a world of the model"),
                    ));
                }
                els.push(el);
            }
            v.insert_worlds(atom, &FinSet::new(els)).map_err(|e| {
                CliError::semantic(
                    "valuation",
                    name,
                    format!("atom `{atom}` is not upward closed over the model: {e}"),
                )
            })?;
        }
        Ok(v)
    }

    /// An empty valuation over the model, for formulas without atoms.
    pub fn empty_valuation(&self, model: &Model) -> Valuation {
        Valuation::new(model.frame().worlds())
    }
}

fn build_category(b: &dsl::CategoryBlock) -> CliResult<FinCategory> {
    let err = |m: String| CliError::semantic("category", &b.name, m);
    if b.objects.is_empty() {
        return Err(err("a category needs at least one `objects` line".into()));
    }
    let objects = FinSet::new(b.objects.iter().map(|o| El::name(o)).collect::<Vec<_>>());
    for (f, a, c) in &b.arrows {
        for o in [a, c] {
            if !objects.contains(&El::name(o)) {
                return Err(err(format!("arrow `{f}` references undeclared object `{o}`")));
            }
        }
    }

    let id_name = |o: &str| format!("1_{o}");
    for (f, _, _) in &b.arrows {
        if b.objects.iter().any(|o| id_name(o) == *f) {
            return Err(err(format!(
                "arrow name `{f}` collides with an implicit identity"
            )));
        }
    }
    let mut mor_names: Vec<String> = b.objects.iter().map(|o| id_name(o)).collect();
    mor_names.extend(b.arrows.iter().map(|(f, _, _)| f.clone()));
    let morphisms = FinSet::new(mor_names.iter().map(|m| El::name(m)).collect::<Vec<_>>());
    if morphisms.len() != mor_names.len() {
        return Err(err("two arrows share a name".into()));
    }

    let mut src_map: BTreeMap<El, El> = BTreeMap::new();
    let mut tgt_map: BTreeMap<El, El> = BTreeMap::new();
    for o in &b.objects {
        src_map.insert(El::name(&id_name(o)), El::name(o));
        tgt_map.insert(El::name(&id_name(o)), El::name(o));
    }
    for (f, a, c) in &b.arrows {
        src_map.insert(El::name(f), El::name(a));
        tgt_map.insert(El::name(f), El::name(c));
    }
    let src = FinFn::from_fn(morphisms.clone(), objects.clone(), |m| {
        src_map[m].clone()
    })
    .map_err(|e| err(e.to_string()))?;
    let tgt = FinFn::from_fn(morphisms.clone(), objects.clone(), |m| {
        tgt_map[m].clone()
    })
    .map_err(|e| err(e.to_string()))?;
    let identity = FinFn::from_fn(objects.clone(), morphisms.clone(), |o| {
        let El::Name(o) = o else { unreachable!() };
        El::name(&id_name(o))
    })
    .map_err(|e| err(e.to_string()))?;

    let mi = |m: &str| -> CliResult<u32> {
        morphisms
            .index_of(&El::name(m))
            .map(|i| i as u32)
            .ok_or_else(|| err(format!("compose line references undeclared arrow `{m}`")))
    };
    let mut comp: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    // Identity composites are implicit.
    for (i, m) in morphisms.iter().enumerate() {
        let s = src_map[m].clone();
        let t = tgt_map[m].clone();
        let El::Name(s) = &s else { unreachable!() };
        let El::Name(t) = &t else { unreachable!() };
        comp.insert((mi(&id_name(t))?, i as u32), i as u32);
        comp.insert((i as u32, mi(&id_name(s))?), i as u32);
    }
    for (g, f, h) in &b.composes {
        let key = (mi(g)?, mi(f)?);
        let val = mi(h)?;
        if let Some(prev) = comp.insert(key, val) {
            if prev != val {
                return Err(err(format!("conflicting compositions declared for {g}.{f}")));
            }
        }
    }
    FinCategory::new(objects, morphisms, src, tgt, identity, comp)
        .map_err(|e| err(e.to_string()))
}

fn build_poset(b: &dsl::PosetBlock) -> CliResult<(FinCategory, KripkeFrame)> {
    let err = |m: String| CliError::semantic("poset", &b.name, m);
    let mut elements: Vec<El> = b.elements.iter().map(|e| El::name(e)).collect();
    for (a, c) in &b.pairs {
        elements.push(El::name(a));
        elements.push(El::name(c));
    }
    elements.sort();
    elements.dedup();
    if elements.is_empty() {
        return Err(err("a poset needs at least one element".into()));
    }
    let pairs: Vec<(El, El)> = b
        .pairs
        .iter()
        .map(|(a, c)| (El::name(a), El::name(c)))
        .collect();
    let frame = KripkeFrame::from_order(&elements, &pairs).map_err(|e| err(e.to_string()))?;
    Ok((frame.worlds().clone(), frame))
}

fn build_heap_model(b: &dsl::HeapBlock, limits: &Limits) -> CliResult<HeapModel> {
    let err = |m: String| CliError::semantic("heapmodel", &b.name, m);
    if b.heaps.is_empty() {
        return Err(err("a heap model needs a `heaps` line".into()));
    }
    let heaps: Vec<El> = b.heaps.iter().map(|h| El::name(h)).collect();
    let heap_set = FinSet::new(heaps.clone());
    let check = |h: &str, place: &str| -> CliResult<El> {
        let el = El::name(h);
        if heap_set.contains(&el) {
            Ok(el)
        } else {
            Err(err(format!("{place} references undeclared heap `{h}`")))
        }
    };
    let mut order = Vec::new();
    for (l, r) in &b.order {
        order.push((check(l, "an order line")?, check(r, "an order line")?));
    }
    let frame = KripkeFrame::from_order(&heaps, &order).map_err(|e| err(e.to_string()))?;

    let mut join_map: BTreeMap<El, El> = BTreeMap::new();
    for (l, r, out) in &b.joins {
        let key = El::tuple(vec![check(l, "a join line")?, check(r, "a join line")?]);
        let val = check(out, "a join line")?;
        if let Some(prev) = join_map.insert(key, val.clone()) {
            if prev != val {
                return Err(err(format!("conflicting joins declared for {l} {r}")));
            }
        }
    }
    let domain = FinSet::new(join_map.keys().cloned().collect::<Vec<_>>());
    let join = PartialOp::monotone(
        frame.worlds(),
        2,
        &domain,
        |t| join_map[t].clone(),
        limits,
    )
    .map_err(|e| err(format!("the join is not monotone for the declared order: {e}")))?;

    let root = b.root.as_ref().map(|r| check(r, "the root line")).transpose()?;
    let unit = b.unit.as_ref().map(|u| check(u, "the unit line")).transpose()?;
    HeapModel::new(frame, join, root, unit).map_err(|e| err(e.to_string()))
}

fn build_op(b: &dsl::OpBlock, base: &FinCategory, limits: &Limits) -> CliResult<PartialOp> {
    let err = |m: String| CliError::semantic("op", &b.name, m);
    let mut obj_map: BTreeMap<El, El> = BTreeMap::new();
    for (inputs, out) in &b.maps {
        for o in inputs.iter().chain([out]) {
            if !base.objects().contains(&El::name(o)) {
                return Err(err(format!(
                    "map line references `{o}`, which is not an object of `{}`",
                    b.base
                )));
            }
        }
        let key = El::tuple(inputs.iter().map(|o| El::name(o)).collect::<Vec<_>>());
        let val = El::name(out);
        if let Some(prev) = obj_map.insert(key, val.clone()) {
            if prev != val {
                return Err(err(format!(
                    "conflicting outputs declared for ({})",
                    inputs.join(", ")
                )));
            }
        }
    }
    let domain = FinSet::new(obj_map.keys().cloned().collect::<Vec<_>>());

    if base.is_thin() {
        if !b.on_arrows.is_empty() {
            return Err(err(
                "the base is thin, so arrow images are determined; drop the on-arrows lines"
                    .into(),
            ));
        }
        return PartialOp::monotone(base, b.arity, &domain, |t| obj_map[t].clone(), limits)
            .map_err(|e| err(format!("the map is not monotone: {e}")));
    }

    // Non-thin base: arrow images must be written out, except for identity
    // tuples, whose images are forced.
    let mut mor_map: BTreeMap<El, El> = BTreeMap::new();
    for (inputs, out) in &b.on_arrows {
        for m in inputs.iter().chain([out]) {
            if !base.morphisms().contains(&El::name(m)) {
                return Err(err(format!(
                    "on-arrows line references `{m}`, which is not an arrow of `{}`",
                    b.base
                )));
            }
        }
        let key = El::tuple(inputs.iter().map(|m| El::name(m)).collect::<Vec<_>>());
        let val = El::name(out);
        if let Some(prev) = mor_map.insert(key, val.clone()) {
            if prev != val {
                return Err(err(format!(
                    "conflicting arrow images declared for ({})",
                    inputs.join(", ")
                )));
            }
        }
    }
    let ambient = power(base, b.arity, limits).map_err(|e| err(e.to_string()))?;
    for m in ambient.morphisms().iter() {
        let src = ambient.src_of(m).map_err(|e| err(e.to_string()))?;
        let tgt = ambient.tgt_of(m).map_err(|e| err(e.to_string()))?;
        if !domain.contains(src) || !domain.contains(tgt) {
            continue;
        }
        if mor_map.contains_key(m) {
            continue;
        }
        let is_identity = ambient.id_of(src).map_err(|e| err(e.to_string()))? == m;
        if is_identity {
            let out = base
                .id_of(&obj_map[src])
                .map_err(|e| err(e.to_string()))?
                .clone();
            mor_map.insert(m.clone(), out);
        } else {
            return Err(err(format!(
                "missing on-arrows line for the arrow tuple {m}"
            )));
        }
    }
    PartialOp::from_maps(
        base,
        b.arity,
        &domain,
        |t| obj_map[t].clone(),
        |m| mor_map[m].clone(),
        limits,
    )
    .map_err(|e| err(format!("the declared maps do not form a functor: {e}")))
}

/// Lift an object assignment into a functor when the codomain is thin,
/// reporting the first object pair where the assignment is not monotone.
fn functor_into_thin(
    what: &str,
    name: &str,
    dom: &FinCategory,
    cod: &FinCategory,
    obj_map: &BTreeMap<El, El>,
) -> CliResult<Functor> {
    let mut mor_map: BTreeMap<El, El> = BTreeMap::new();
    for m in dom.morphisms().iter() {
        let s = &obj_map[dom.src_of(m).expect("valid category")];
        let t = &obj_map[dom.tgt_of(m).expect("valid category")];
        let hom = cod.hom(s, t).expect("objects of the codomain");
        if hom.is_empty() {
            return Err(CliError::Semantic {
                kind: "span",
                name: name.to_string(),
                message: format!(
                    "the {what} leg is not monotone: {s} and {t} are images of related objects but unrelated"
                ),
            });
        }
        mor_map.insert(m.clone(), hom.get(0).clone());
    }
    Functor::from_maps(
        dom,
        cod,
        |o| obj_map[o].clone(),
        |m| mor_map[m].clone(),
    )
    .map_err(|e| CliError::Semantic {
        kind: "span",
        name: name.to_string(),
        message: e.to_string(),
    })
}

fn build_span(
    b: &dsl::SpanBlock,
    base: &FinCategory,
    apex: &FinCategory,
    limits: &Limits,
) -> CliResult<SpanOp> {
    let err = |m: String| CliError::semantic("span", &b.name, m);
    if !base.is_thin() {
        return Err(err(
            "span blocks need a thin base so the leg arrows are determined".into(),
        ));
    }
    let mut left_map: BTreeMap<El, El> = BTreeMap::new();
    let mut right_map: BTreeMap<El, El> = BTreeMap::new();
    for (e, tuple) in &b.left {
        let eo = El::name(e);
        if !apex.objects().contains(&eo) {
            return Err(err(format!(
                "left line references `{e}`, which is not an object of `{}`",
                b.apex
            )));
        }
        for o in tuple {
            if !base.objects().contains(&El::name(o)) {
                return Err(err(format!(
                    "left line references `{o}`, which is not an object of `{}`",
                    b.base
                )));
            }
        }
        let val = El::tuple(tuple.iter().map(|o| El::name(o)).collect::<Vec<_>>());
        if left_map.insert(eo, val).is_some() {
            return Err(err(format!("two left lines for apex object `{e}`")));
        }
    }
    for (e, c) in &b.right {
        let eo = El::name(e);
        if !apex.objects().contains(&eo) {
            return Err(err(format!(
                "right line references `{e}`, which is not an object of `{}`",
                b.apex
            )));
        }
        if !base.objects().contains(&El::name(c)) {
            return Err(err(format!(
                "right line references `{c}`, which is not an object of `{}`",
                b.base
            )));
        }
        if right_map.insert(eo, El::name(c)).is_some() {
            return Err(err(format!("two right lines for apex object `{e}`")));
        }
    }
    for e in apex.objects().iter() {
        if !left_map.contains_key(e) {
            return Err(err(format!("apex object {e} has no left line")));
        }
        if !right_map.contains_key(e) {
            return Err(err(format!("apex object {e} has no right line")));
        }
    }
    let ambient = power(base, b.arity, limits).map_err(|e| err(e.to_string()))?;
    let left = functor_into_thin("left", &b.name, apex, &ambient, &left_map)?;
    let right = functor_into_thin("right", &b.name, apex, base, &right_map)?;
    SpanOp::new(b.arity, base.clone(), left, right).map_err(|e| err(e.to_string()))
}

fn build_relation(
    b: &dsl::RelationBlock,
    from: &FinCategory,
    to: &FinCategory,
) -> CliResult<Profunctor> {
    let err = |m: String| CliError::semantic("relation", &b.name, m);
    let mut pairs: Vec<(El, El)> = Vec::new();
    for (a, c) in &b.pairs {
        let ae = El::name(a);
        let ce = El::name(c);
        if !from.objects().contains(&ae) {
            return Err(err(format!(
                "pair references `{a}`, which is not an object of `{}`",
                b.from
            )));
        }
        if !to.objects().contains(&ce) {
            return Err(err(format!(
                "pair references `{c}`, which is not an object of `{}`",
                b.to
            )));
        }
        pairs.push((ae, ce));
    }
    let related = |a: &El, c: &El| pairs.iter().any(|(x, y)| x == a && y == c);
    // The variance forces closure: downward on the target side, upward on
    // the source side.
    for (a, c) in pairs.clone() {
        for a2 in from.objects().iter() {
            if from.hom(&a, a2).map(|h| h.is_empty()).unwrap_or(true) {
                continue;
            }
            for c2 in to.objects().iter() {
                if to.hom(c2, &c).map(|h| h.is_empty()).unwrap_or(true) {
                    continue;
                }
                if !related(a2, c2) {
                    return Err(err(format!(
                        "the pair {a2} ~ {c2} is forced by {a} ~ {c} and the variance; add it"
                    )));
                }
            }
        }
    }
    Profunctor::from_maps(
        from,
        to,
        |d, c| {
            if related(c, d) {
                FinSet::singleton(El::unit())
            } else {
                FinSet::empty()
            }
        },
        |_b, _c, x| x.clone(),
        |_d, _m, x| x.clone(),
    )
    .map_err(|e| err(e.to_string()))
}

fn build_theory(b: &dsl::TheoryBlock) -> CliResult<Theory> {
    let err = |m: String| CliError::semantic("theory", &b.name, m);
    let mut equations = Vec::new();
    for (lhs_ast, rhs_ast) in &b.equations {
        let mut lhs_vars = Vec::new();
        let mut rhs_vars = Vec::new();
        let lhs = term_from_ast(lhs_ast, &mut lhs_vars);
        let rhs = term_from_ast(rhs_ast, &mut rhs_vars);
        for vars in [&lhs_vars, &rhs_vars] {
            let mut seen = vars.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != vars.len() {
                return Err(err(format!(
                    "equation `{lhs_ast} = {rhs_ast}` repeats a variable; equations are linear"
                )));
            }
        }
        if lhs_vars != rhs_vars {
            return Err(err(format!(
                "equation `{lhs_ast} = {rhs_ast}` must use the same variables in the same order on both sides"
            )));
        }
        equations.push(Equation { lhs, rhs });
    }
    let theory = Theory {
        name: b.name.clone(),
        ops: b.ops.clone(),
        equations,
    };
    theory.validate().map_err(|e| err(e.to_string()))?;
    Ok(theory)
}

fn term_from_ast(ast: &TermAst, vars: &mut Vec<String>) -> Term {
    match ast {
        TermAst::Var(v) => {
            vars.push(v.clone());
            Term::Slot
        }
        TermAst::App(sym, kids) => Term::Apply(
            sym.clone(),
            kids.iter().map(|k| term_from_ast(k, vars)).collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lim() -> Limits {
        Limits::default()
    }

    fn parse_one(src: &str) -> Workspace {
        Workspace::parse(&[("test".into(), src.into())], &lim()).unwrap()
    }

    const HXY: &str = r#"
heapmodel hxy {
  heaps o x y xy;
  join o o = o; join o x = x; join o y = y; join o xy = xy;
  join x o = x; join y o = y; join xy o = xy;
  join x y = xy; join y x = xy;
  unit o;
}
valuation v { atom p = {x}; atom q = {y}; }
"#;

    #[test]
    fn the_bundled_separation_model_loads() {
        let ws = parse_one(HXY);
        let model = ws.heap_model_named("hxy").unwrap();
        assert_eq!(model.join().domain().sub().objects().len(), 9);
        assert_eq!(model.unit(), Some(&El::name("o")));
        assert!(model.heaps().is_discrete());
    }

    #[test]
    fn undeclared_heaps_are_semantic_errors() {
        let src = "heapmodel broken { heaps o x; join o z = x; }";
        let err = Workspace::parse(&[("t".into(), src.into())], &lim()).unwrap_err();
        match err {
            CliError::Semantic { kind, name, message } => {
                assert_eq!(kind, "heapmodel");
                assert_eq!(name, "broken");
                assert!(message.contains("`z`"), "{message}");
            }
            other => panic!("expected a semantic error, got {other:?}"),
        }
    }

    #[test]
    fn categories_get_implicit_identities() {
        let src = r#"
category walking_arrow {
  objects a b;
  arrows f: a -> b;
}
"#;
        let ws = parse_one(src);
        let c = ws.category_named("walking_arrow").unwrap();
        assert_eq!(c.objects().len(), 2);
        assert_eq!(c.morphisms().len(), 3);
        assert!(c.is_thin());
    }

    #[test]
    fn non_thin_categories_need_compose_lines_and_arrow_maps() {
        // A parallel pair cannot compose with anything but identities, so it
        // loads without compose lines.
        let src = r#"
category parallel {
  objects a b;
  arrows f: a -> b, g: a -> b;
}
op pick : parallel^1 -> parallel {
  map (a) = a;
  map (b) = b;
  on-arrows (f) = g;
  on-arrows (g) = g;
}
"#;
        let ws = parse_one(src);
        let op = ws.op_named("pick").unwrap();
        assert!(op.is_total());

        let missing = r#"
category parallel {
  objects a b;
  arrows f: a -> b, g: a -> b;
}
op pick : parallel^1 -> parallel {
  map (a) = a;
  map (b) = b;
}
"#;
        let err = Workspace::parse(&[("t".into(), missing.into())], &lim()).unwrap_err();
        assert!(err.to_string().contains("on-arrows"), "{err}");
    }

    #[test]
    fn poset_ops_reject_non_monotone_maps() {
        let src = r#"
poset chain { a <= b; }
op bad : chain^1 -> chain {
  map (a) = b;
  map (b) = a;
}
"#;
        let err = Workspace::parse(&[("t".into(), src.into())], &lim()).unwrap_err();
        assert!(err.to_string().contains("monotone"), "{err}");
    }

    #[test]
    fn spans_lift_against_thin_bases() {
        let src = r#"
poset chain { a <= b; b <= c; }
span at_b : chain^1 -> chain {
  apex chain;
  left a = (b); left b = (b); left c = (b);
  right a = a; right b = b; right c = c;
}
"#;
        let ws = parse_one(src);
        let span = ws.span_named("at_b").unwrap();
        assert_eq!(span.arity(), 1);
    }

    #[test]
    fn relations_must_be_closed_under_the_variance() {
        let src = r#"
poset chain { a <= b; }
relation r : chain -> chain { b ~ b; }
"#;
        let err = Workspace::parse(&[("t".into(), src.into())], &lim()).unwrap_err();
        assert!(err.to_string().contains("forced"), "{err}");

        let closed = r#"
poset chain { a <= b; }
relation r : chain -> chain { b ~ b; b ~ a; }
"#;
        let ws = parse_one(closed);
        assert!(ws.relation_named("r").unwrap().is_subterminal());
    }

    #[test]
    fn theories_enforce_linear_equations() {
        let dup = "theory t { ops m:2; eq m(x,x) = x; }";
        let err = Workspace::parse(&[("t".into(), dup.into())], &lim()).unwrap_err();
        assert!(err.to_string().contains("linear"), "{err}");

        let swapped = "theory t { ops m:2; eq m(x,y) = m(y,x); }";
        let err = Workspace::parse(&[("t".into(), swapped.into())], &lim()).unwrap_err();
        assert!(err.to_string().contains("same order"), "{err}");
    }

    #[test]
    fn valuations_resolve_against_a_model() {
        let ws = parse_one(HXY);
        let model = ws.model_named("hxy").unwrap();
        let v = ws.valuation_for("v", &model).unwrap();
        assert!(v.get("p").unwrap().holds_at(&El::name("x")));

        let bad = r#"
poset chain { a <= b; }
valuation w { atom p = {a}; }
"#;
        let ws = parse_one(bad);
        let model = ws.model_named("chain").unwrap();
        let err = ws.valuation_for("w", &model).unwrap_err();
        assert!(err.to_string().contains("upward closed"), "{err}");
    }

    #[test]
    fn serialization_reparses_identically() {
        let ws = parse_one(HXY);
        let canonical = ws.serialize();
        let ws2 = Workspace::parse(&[("again".into(), canonical.clone())], &lim()).unwrap();
        assert_eq!(ws2.serialize(), canonical);
        assert_eq!(ws.blocks(), ws2.blocks());
    }
}
