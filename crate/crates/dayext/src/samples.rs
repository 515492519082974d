//! Seeded generators and bundled example structures shared by the test
//! suites and the command line checks: random posets and small categories,
//! random profunctors and copresheaves with honest actions, random partial
//! operations over poset bases, the bundled frames and separation models,
//! the monoid theory, and the seeded search for a composition square whose
//! comparison cell fails to be invertible.
//!
//! Everything here is deterministic under an explicit seed. Generators take
//! `&mut ChaCha8Rng` so callers can derive independent streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::day::Copresheaf;
use crate::error::{Error, Result};
use crate::finbase::{El, FinFn, FinSet};
use crate::fincat::{
    opposite, poset_as_category, product_category, FinCategory, PartialOp,
};
use crate::kripke::{HeapModel, KripkeFrame, Valuation};
use crate::limits::Limits;
use crate::operad::{mate_of_pullback, non_iso_witness, Equation, PullbackMate, Term, Theory};
use crate::prof::Profunctor;

/// A reproducible random stream for the given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random poset on 1 to `max_elems` elements, generated as a random DAG on
/// index-ordered pairs and closed reflexively and transitively.
pub fn random_poset(r: &mut ChaCha8Rng, max_elems: usize) -> FinCategory {
    let n = r.gen_range(1..=max_elems.max(1));
    let elems: Vec<El> = (0..n).map(|i| El::name(&format!("o{i}"))).collect();
    let mut order = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if r.gen_bool(0.5) {
                order.push((elems[i].clone(), elems[j].clone()));
            }
        }
    }
    poset_as_category(&elems, &order).expect("index-ordered pairs are acyclic")
}

/// The cyclic monoid of order `k` as a one-object category.
pub fn cyclic_monoid_category(k: usize) -> FinCategory {
    assert!(k >= 1, "a monoid has at least the identity");
    let star = El::name("*");
    let objects = FinSet::singleton(star.clone());
    let mors: Vec<El> = (0..k).map(|i| El::int(i as i64)).collect();
    let morphisms = FinSet::new(mors.clone());
    let src = FinFn::from_fn(morphisms.clone(), objects.clone(), |_| star.clone())
        .expect("single object");
    let tgt = src.clone();
    let identity = FinFn::from_fn(objects.clone(), morphisms.clone(), |_| mors[0].clone())
        .expect("identity element");
    let mi = |m: &El| morphisms.index_of(m).expect("member") as u32;
    let mut comp = std::collections::BTreeMap::new();
    for i in 0..k {
        for j in 0..k {
            comp.insert(
                (mi(&mors[i]), mi(&mors[j])),
                mi(&mors[(i + j) % k]),
            );
        }
    }
    FinCategory::new(objects, morphisms, src, tgt, identity, comp)
        .expect("modular addition is associative and unital")
}

/// A random small category drawn from a mixed family: posets, cyclic
/// monoids, products of small posets, and opposites of posets. At most 4
/// objects and 20 morphisms.
pub fn random_category(r: &mut ChaCha8Rng, limits: &Limits) -> FinCategory {
    match r.gen_range(0..5) {
        0 | 1 => random_poset(r, 4),
        2 => cyclic_monoid_category(r.gen_range(1..=4)),
        3 => {
            let a = random_poset(r, 2);
            let b = random_poset(r, 2);
            product_category(&[a, b], limits)
                .expect("4 objects at most")
                .0
        }
        _ => opposite(&random_poset(r, 4)),
    }
}

/// A random profunctor as a finite coproduct of bi-representables: each
/// summand is indexed by a pair (dᵢ in the target, cᵢ in the source), with
/// fiber over (d, c) the pairs of arrows d → dᵢ and cᵢ → c, acted on by
/// composition. Zero summands give the empty profunctor.
pub fn random_profunctor(
    r: &mut ChaCha8Rng,
    from: &FinCategory,
    to: &FinCategory,
    max_summands: usize,
) -> Result<Profunctor> {
    let k = r.gen_range(0..=max_summands);
    let mut anchors = Vec::with_capacity(k);
    for _ in 0..k {
        let d = to.objects().get(r.gen_range(0..to.objects().len())).clone();
        let c = from
            .objects()
            .get(r.gen_range(0..from.objects().len()))
            .clone();
        anchors.push((d, c));
    }
    Profunctor::from_maps(
        from,
        to,
        |d, c| {
            let mut elems = Vec::new();
            for (i, (di, ci)) in anchors.iter().enumerate() {
                let us = to.hom(d, di).expect("objects of the target");
                let vs = from.hom(ci, c).expect("objects of the source");
                for u in us.iter() {
                    for v in vs.iter() {
                        elems.push(El::tuple(vec![
                            El::int(i as i64),
                            u.clone(),
                            v.clone(),
                        ]));
                    }
                }
            }
            FinSet::new(elems)
        },
        |b, _c, x| {
            let [i, u, v] = x.expect_tuple() else {
                unreachable!("bi-representable elements are triples")
            };
            let composed = to.compose(u, b).expect("composable by construction");
            El::tuple(vec![i.clone(), composed.clone(), v.clone()])
        },
        |_d, m, x| {
            let [i, u, v] = x.expect_tuple() else {
                unreachable!("bi-representable elements are triples")
            };
            let composed = from.compose(m, v).expect("composable by construction");
            El::tuple(vec![i.clone(), u.clone(), composed.clone()])
        },
    )
}

/// A random subterminal profunctor: a relation between the object sets,
/// seeded at the given density and closed under the variance (downward in
/// the target argument, upward in the source argument).
pub fn random_relation_profunctor(
    r: &mut ChaCha8Rng,
    from: &FinCategory,
    to: &FinCategory,
    density: f64,
) -> Result<Profunctor> {
    let n_from = from.objects().len();
    let n_to = to.objects().len();
    let mut related = vec![false; n_to * n_from];
    for slot in related.iter_mut() {
        *slot = r.gen_bool(density);
    }
    let leq = |cat: &FinCategory, a: usize, b: usize| !cat.hom_idx(a, b).is_empty();
    let mut closed = vec![false; n_to * n_from];
    for d in 0..n_to {
        for c in 0..n_from {
            'seek: for d0 in 0..n_to {
                for c0 in 0..n_from {
                    if related[d0 * n_from + c0] && leq(to, d, d0) && leq(from, c0, c) {
                        closed[d * n_from + c] = true;
                        break 'seek;
                    }
                }
            }
        }
    }
    Profunctor::from_maps(
        from,
        to,
        |d, c| {
            let di = to.objects().index_of(d).expect("target object");
            let ci = from.objects().index_of(c).expect("source object");
            if closed[di * n_from + ci] {
                FinSet::singleton(El::unit())
            } else {
                FinSet::empty()
            }
        },
        |_b, _c, x| x.clone(),
        |_d, _m, x| x.clone(),
    )
}

/// A chain of `len` composable random profunctors over `len + 1` random
/// categories, returned source end first: entry i runs from category i to
/// category i + 1, so adjacent entries compose as `compose(chain[i+1],
/// chain[i], …)`.
pub fn random_profunctor_chain(
    r: &mut ChaCha8Rng,
    len: usize,
    max_summands: usize,
    limits: &Limits,
) -> Result<Vec<Profunctor>> {
    let cats: Vec<FinCategory> = (0..=len).map(|_| random_category(r, limits)).collect();
    let mut chain = Vec::with_capacity(len);
    for i in 0..len {
        chain.push(random_profunctor(r, &cats[i], &cats[i + 1], max_summands)?);
    }
    Ok(chain)
}

/// A random copresheaf as a finite coproduct of representables, with actions
/// by postcomposition. Zero summands give the empty copresheaf.
pub fn random_copresheaf(
    r: &mut ChaCha8Rng,
    base: &FinCategory,
    max_summands: usize,
) -> Result<Copresheaf> {
    let k = r.gen_range(0..=max_summands);
    let anchors: Vec<El> = (0..k)
        .map(|_| {
            base.objects()
                .get(r.gen_range(0..base.objects().len()))
                .clone()
        })
        .collect();
    Copresheaf::from_maps(
        base,
        |c| {
            let mut elems = Vec::new();
            for (i, ci) in anchors.iter().enumerate() {
                for v in base.hom(ci, c).expect("object of the base").iter() {
                    elems.push(El::tuple(vec![El::int(i as i64), v.clone()]));
                }
            }
            FinSet::new(elems)
        },
        |m, x| {
            let [i, v] = x.expect_tuple() else {
                unreachable!("representable elements are pairs")
            };
            let composed = base.compose(m, v).expect("composable by construction");
            El::tuple(vec![i.clone(), composed.clone()])
        },
    )
}

/// A random monotone object map from the listed domain tuples into a poset
/// base: rejection sampling over random assignments with a constant map as
/// the fallback, so the result always exists.
fn random_monotone_op(
    r: &mut ChaCha8Rng,
    base: &FinCategory,
    arity: usize,
    domain: &FinSet,
    limits: &Limits,
) -> Result<PartialOp> {
    let objs = base.objects();
    for _ in 0..24 {
        let assign: Vec<El> = (0..domain.len())
            .map(|_| objs.get(r.gen_range(0..objs.len())).clone())
            .collect();
        let attempt = PartialOp::monotone(
            base,
            arity,
            domain,
            |t| {
                assign[domain.index_of(t).expect("domain tuple")].clone()
            },
            limits,
        );
        if let Ok(op) = attempt {
            return Ok(op);
        }
    }
    let constant = objs.get(r.gen_range(0..objs.len())).clone();
    PartialOp::monotone(base, arity, domain, |_| constant.clone(), limits)
}

/// A random partial operation of the given arity over a poset base. The
/// domain keeps each input tuple with the given probability (1.0 gives a
/// total operation); the action is a random monotone map.
pub fn random_partial_op(
    r: &mut ChaCha8Rng,
    base: &FinCategory,
    arity: usize,
    keep: f64,
    limits: &Limits,
) -> Result<PartialOp> {
    let (all, _) = crate::finbase::product(&vec![base.objects().clone(); arity]);
    let domain: FinSet = all.iter().filter(|_| r.gen_bool(keep)).cloned().collect();
    if domain.is_empty() && arity == 0 {
        let c = base.objects().get(r.gen_range(0..base.objects().len()));
        return PartialOp::constant(base, c, limits);
    }
    random_monotone_op(r, base, arity, &domain, limits)
}

/// A random total operation of the given arity over a poset base.
pub fn random_total_op(
    r: &mut ChaCha8Rng,
    base: &FinCategory,
    arity: usize,
    limits: &Limits,
) -> Result<PartialOp> {
    if arity == 0 {
        let c = base.objects().get(r.gen_range(0..base.objects().len()));
        return PartialOp::constant(base, c, limits);
    }
    let (all, _) = crate::finbase::product(&vec![base.objects().clone(); arity]);
    if r.gen_bool(0.3) {
        // A projection is always monotone and total.
        let slot = r.gen_range(0..arity);
        return PartialOp::monotone(
            base,
            arity,
            &all,
            |t| t.expect_tuple()[slot].clone(),
            limits,
        );
    }
    random_monotone_op(r, base, arity, &all, limits)
}

/// The name of a subset of single-letter resources: the letters joined in
/// order, with the empty subset written `o`.
fn subset_name(letters: &[&str], mask: usize) -> El {
    let mut s = String::new();
    for (i, l) in letters.iter().enumerate() {
        if mask & (1 << i) != 0 {
            s.push_str(l);
        }
    }
    if s.is_empty() {
        El::name("o")
    } else {
        El::name(&s)
    }
}

/// The separation model on subsets of a small resource universe: heaps are
/// the subsets, disjoint pairs join by union, and the empty heap is the
/// unit. `ordered` chooses between the discrete frame and the inclusion
/// order (where the empty heap is also the root).
pub fn powerset_model(letters: &[&str], ordered: bool, limits: &Limits) -> Result<HeapModel> {
    let n = letters.len();
    let heaps: Vec<El> = (0..1usize << n).map(|m| subset_name(letters, m)).collect();
    let frame = if ordered {
        let mut order = Vec::new();
        for a in 0..1usize << n {
            for b in 0..1usize << n {
                if a != b && a & b == a {
                    order.push((subset_name(letters, a), subset_name(letters, b)));
                }
            }
        }
        KripkeFrame::from_order(&heaps, &order)?
    } else {
        KripkeFrame::discrete(&heaps)?
    };
    let mut pairs = Vec::new();
    for a in 0..1usize << n {
        for b in 0..1usize << n {
            if a & b == 0 {
                pairs.push(El::tuple(vec![
                    subset_name(letters, a),
                    subset_name(letters, b),
                ]));
            }
        }
    }
    let dom = FinSet::new(pairs);
    let join = PartialOp::monotone(
        frame.worlds(),
        2,
        &dom,
        |pair| {
            let [l, rgt] = pair.expect_tuple() else {
                unreachable!("join domain objects are pairs")
            };
            let mask_of = |e: &El| {
                (0..n)
                    .filter(|i| e.to_string().contains(letters[*i]))
                    .fold(0usize, |m, i| m | (1 << i))
            };
            subset_name(letters, mask_of(l) | mask_of(rgt))
        },
        limits,
    )?;
    let unit = subset_name(letters, 0);
    let root = ordered.then(|| unit.clone());
    HeapModel::new(frame, join, root, Some(unit))
}

/// The discrete separation model on subsets of a two-element universe.
pub fn hxy_model(limits: &Limits) -> Result<HeapModel> {
    powerset_model(&["x", "y"], false, limits)
}

/// The discrete separation model on subsets of a three-element universe.
pub fn three_universe_model(limits: &Limits) -> Result<HeapModel> {
    powerset_model(&["x", "y", "z"], false, limits)
}

/// The ordered separation model on subsets of a two-element universe under
/// inclusion, rooted and united at the empty heap.
pub fn intuitionistic_model(limits: &Limits) -> Result<HeapModel> {
    powerset_model(&["x", "y"], true, limits)
}

/// The bundled rooted frames on 3, 4, and 5 worlds: a chain, a diamond, and
/// a binary tree, each with a least world.
pub fn bundled_frames() -> Vec<KripkeFrame> {
    let n = El::name;
    let chain = KripkeFrame::from_order(
        &[n("a"), n("b"), n("c")],
        &[(n("a"), n("b")), (n("b"), n("c"))],
    )
    .expect("a chain is a poset");
    let diamond = KripkeFrame::from_order(
        &[n("o"), n("x"), n("y"), n("xy")],
        &[
            (n("o"), n("x")),
            (n("o"), n("y")),
            (n("x"), n("xy")),
            (n("y"), n("xy")),
        ],
    )
    .expect("a diamond is a poset");
    let tree = KripkeFrame::from_order(
        &[n("r"), n("s"), n("t"), n("u"), n("v")],
        &[
            (n("r"), n("s")),
            (n("r"), n("t")),
            (n("s"), n("u")),
            (n("t"), n("v")),
        ],
    )
    .expect("a tree is a poset");
    vec![chain, diamond, tree]
}

/// The two-atom valuation used by the bundled separation models: `p` holds
/// above the heap containing x alone, `q` above the heap containing y alone.
pub fn letter_valuation(frame: &KripkeFrame) -> Result<Valuation> {
    let mut v = Valuation::new(frame.worlds());
    for (atom, world) in [("p", El::name("x")), ("q", El::name("y"))] {
        let worlds: FinSet = frame
            .elements()
            .iter()
            .filter(|h| frame.leq(&world, h))
            .cloned()
            .collect();
        v.insert_worlds(atom, &worlds)?;
    }
    Ok(v)
}

/// The theory of monoids: a nullary unit, a binary product, associativity,
/// and the two unit laws.
pub fn monoid_theory() -> Theory {
    let m = |kids: Vec<Term>| Term::Apply("m".into(), kids);
    let e = Term::Apply("e".into(), vec![]);
    Theory {
        name: "monoid".into(),
        ops: vec![("e".into(), 0), ("m".into(), 2)],
        equations: vec![
            Equation {
                lhs: m(vec![m(vec![Term::Slot, Term::Slot]), Term::Slot]),
                rhs: m(vec![Term::Slot, m(vec![Term::Slot, Term::Slot])]),
            },
            Equation {
                lhs: m(vec![e.clone(), Term::Slot]),
                rhs: Term::Slot,
            },
            Equation {
                lhs: m(vec![Term::Slot, e]),
                rhs: Term::Slot,
            },
        ],
    }
}

/// One instance found by the seeded comparison-square search: the operation
/// pair, the square, and the object pair at which the comparison cell fails
/// to be a bijection.
#[derive(Debug, Clone)]
pub struct LaxSearchOutcome {
    pub seed: u64,
    pub tries: usize,
    pub theta: PartialOp,
    pub inners: Vec<PartialOp>,
    pub mate: PullbackMate,
    pub component: (El, El),
}

/// Search random small instances for a composition square whose comparison
/// cell is not invertible. Partial outer operations restricted by partial
/// inner ones produce these readily; the first hit is returned together
/// with the failing component.
pub fn search_lax_witness(
    seed: u64,
    max_tries: usize,
    limits: &Limits,
) -> Result<Option<LaxSearchOutcome>> {
    let mut r = rng(seed);
    for attempt in 0..max_tries {
        let base = random_poset(&mut r, 3);
        let arity = r.gen_range(1..=2);
        let theta = random_partial_op(&mut r, &base, arity, 0.5, limits)?;
        let mut inners = Vec::with_capacity(arity);
        for _ in 0..arity {
            let inner_arity = r.gen_range(0..=1);
            inners.push(random_partial_op(&mut r, &base, inner_arity, 0.7, limits)?);
        }
        let mate = match mate_of_pullback(&theta, &inners, limits) {
            Ok(m) => m,
            Err(Error::SizeGuard { .. }) => continue,
            Err(e) => return Err(e),
        };
        if let Some(component) = non_iso_witness(&mate.cell) {
            return Ok(Some(LaxSearchOutcome {
                seed,
                tries: attempt + 1,
                theta,
                inners,
                mate,
                component,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::day::{day_extend, Proposition};
    use crate::kripke::{eval, oracle_eval, Formula, Model};
    use crate::operad::{check_algebra, AlgebraMode, Interpretation};
    use crate::prof::{compose, find_iso};

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn generated_categories_validate() {
        let mut r = rng(7);
        for _ in 0..40 {
            let c = random_category(&mut r, &lim());
            assert!(c.objects().len() <= 4);
            assert!(c.morphisms().len() <= 20);
        }
    }

    #[test]
    fn generated_profunctors_compose() {
        let mut r = rng(11);
        for _ in 0..10 {
            let chain = random_profunctor_chain(&mut r, 2, 2, &lim()).unwrap();
            let composite = compose(&chain[1], &chain[0], &lim()).unwrap();
            assert_eq!(composite.prof.from(), chain[0].from());
            assert_eq!(composite.prof.to(), chain[1].to());
        }
    }

    #[test]
    fn relation_profunctors_are_subterminal() {
        let mut r = rng(13);
        for _ in 0..10 {
            let a = random_poset(&mut r, 3);
            let b = random_poset(&mut r, 3);
            let p = random_relation_profunctor(&mut r, &a, &b, 0.4).unwrap();
            assert!(p.is_subterminal());
        }
    }

    #[test]
    fn generated_ops_extend() {
        let mut r = rng(17);
        for _ in 0..10 {
            let base = random_poset(&mut r, 3);
            let arity = r.gen_range(0..=2);
            let theta = random_partial_op(&mut r, &base, arity, 0.6, &lim()).unwrap();
            let fs: Vec<Copresheaf> = (0..arity)
                .map(|_| random_copresheaf(&mut r, &base, 2).unwrap())
                .collect();
            let day = day_extend(&theta, &fs, &lim()).unwrap();
            let formula = crate::day::day_coend_formula(&theta, &fs, &lim()).unwrap();
            assert!(find_iso(day.output.prof(), formula.prof(), &lim())
                .unwrap()
                .is_some());
        }
    }

    #[test]
    fn bundled_models_agree_with_the_oracle() {
        let three: Model = three_universe_model(&lim()).unwrap().into();
        let val = letter_valuation(three.frame()).unwrap();
        let pq = Formula::atom("p").star(Formula::atom("q"));
        let via_day = eval(&pq, &three, &val, &lim()).unwrap();
        let direct = oracle_eval(&pq, &three, &val, &lim()).unwrap();
        assert_eq!(via_day.worlds(), direct.worlds());
        // x * y can sit inside any superset of xy only discretely at xy.
        assert!(via_day.holds_at(&El::name("xy")));
        assert!(!via_day.holds_at(&El::name("xyz")));

        let intu: Model = intuitionistic_model(&lim()).unwrap().into();
        let val = letter_valuation(intu.frame()).unwrap();
        let got = eval(&pq, &intu, &val, &lim()).unwrap();
        assert_eq!(got.worlds(), FinSet::singleton(El::name("xy")));
    }

    #[test]
    fn the_monoid_theory_holds_in_truncated_addition() {
        let base = poset_as_category(
            &[El::int(0), El::int(1), El::int(2)],
            &[(El::int(0), El::int(1)), (El::int(1), El::int(2))],
        )
        .unwrap();
        let all2 = crate::finbase::product(&[base.objects().clone(), base.objects().clone()]).0;
        let add = PartialOp::monotone(
            &base,
            2,
            &all2,
            |t| {
                let [a, b] = t.expect_tuple() else { unreachable!() };
                let v = |e: &El| match e {
                    El::Int(i) => *i,
                    _ => unreachable!(),
                };
                El::int((v(a) + v(b)).min(2))
            },
            &lim(),
        )
        .unwrap();
        let theory = monoid_theory();
        theory.validate().unwrap();
        let mut interp = Interpretation::new(base.clone());
        interp.insert("m", add).unwrap();
        interp
            .insert("e", PartialOp::constant(&base, &El::int(0), &lim()).unwrap())
            .unwrap();
        let report = check_algebra(&theory, &interp, AlgebraMode::Strict, &lim()).unwrap();
        assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn the_lax_search_finds_a_witness() {
        let found = search_lax_witness(5, 200, &lim()).unwrap();
        let outcome = found.expect("a non-invertible comparison cell within 200 tries");
        let again = search_lax_witness(5, 200, &lim()).unwrap().unwrap();
        assert_eq!(outcome.tries, again.tries);
        assert_eq!(outcome.component, again.component);
        assert!(outcome.theta.base().objects().len() <= 3);
    }

    #[test]
    fn powerset_models_declare_sound_structure() {
        let hxy = hxy_model(&lim()).unwrap();
        assert_eq!(hxy.heaps().elements().len(), 4);
        assert!(hxy.heaps().is_discrete());
        assert_eq!(hxy.unit(), Some(&El::name("o")));
        assert!(hxy.join_laws(&lim()).unwrap().passed());

        let intu = intuitionistic_model(&lim()).unwrap();
        assert_eq!(intu.root(), Some(&El::name("o")));
        assert!(!intu.heaps().is_discrete());

        let three = three_universe_model(&lim()).unwrap();
        assert_eq!(three.heaps().elements().len(), 8);
        assert_eq!(
            three.join().domain().sub().objects().len(),
            27,
            "each resource goes left, right, or absent"
        );

        for frame in bundled_frames() {
            assert!(frame.bottom().is_some());
        }
        assert_eq!(
            bundled_frames()
                .iter()
                .map(|f| f.elements().len())
                .collect::<Vec<_>>(),
            vec![3, 4, 5]
        );
    }

    #[test]
    fn letter_valuations_are_up_closed() {
        for frame in [
            hxy_model(&lim()).unwrap().heaps().clone(),
            intuitionistic_model(&lim()).unwrap().heaps().clone(),
        ] {
            let val = letter_valuation(&frame).unwrap();
            let p = val.get("p").unwrap();
            assert!(p.holds_at(&El::name("x")));
            assert_eq!(p.holds_at(&El::name("xy")), !frame.is_discrete());
            assert!(!p.holds_at(&El::name("o")));
            assert_eq!(
                p,
                &Proposition::from_worlds(frame.worlds(), &p.worlds()).unwrap()
            );
        }
    }
}
