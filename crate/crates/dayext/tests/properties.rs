//! Property tests for the structural invariants: quotients are idempotent
//! and order-insensitive, product categories multiply hom-sets, factoring
//! through a full subcategory reproduces the original functor, composites
//! validate as profunctors, the associator is natural in all three
//! arguments, extensions of partial operations are total, and propositions
//! over posets stay propositions under extension and residual.

use dayext::day::{day_extend, residual, Copresheaf, Proposition};
use dayext::finbase::{disjoint_union, quotient_by_generated, El, FinFn, FinSet};
use dayext::fincat::{
    check_factors_through, full_subcategory, product_category, unit_category, validate_category,
    FinCategory, Functor,
};
use dayext::prof::{associator_witness, compose, horizontal_compose, ProfCell, Profunctor};
use dayext::samples::{
    random_category, random_copresheaf, random_partial_op, random_poset, random_profunctor_chain,
    rng,
};
use dayext::Limits;
use proptest::prelude::*;
use rand::Rng;

fn lim() -> Limits {
    Limits::default()
}

fn carrier_of(n: usize) -> FinSet {
    FinSet::new((0..n as i64).map(El::int).collect())
}

/// A profunctor with the same nonempty positions as `p` but every fiber
/// collapsed to a point. The actions of `p` guarantee the indicator is
/// monotone in both variables, so this is always a valid profunctor.
fn collapse(p: &Profunctor) -> Profunctor {
    Profunctor::from_maps(
        p.from(),
        p.to(),
        |d, c| {
            if p.value(d, c).expect("tabulated").is_empty() {
                FinSet::empty()
            } else {
                FinSet::singleton(El::unit())
            }
        },
        |_b, _c, x| x.clone(),
        |_d, _g, x| x.clone(),
    )
    .expect("indicator collapse")
}

/// The unique cell from `p` onto its collapse.
fn collapse_cell(p: &Profunctor, q: &Profunctor) -> ProfCell {
    ProfCell::from_fn(p, q, |_d, _c, _x| El::unit()).expect("collapse cell")
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Quotienting the representatives by the projected pairs yields only
    /// singleton classes: nothing is left to merge after one pass.
    #[test]
    fn quotient_is_idempotent(
        n in 1usize..12,
        raw in proptest::collection::vec((0usize..12, 0usize..12), 0..20),
    ) {
        let carrier = carrier_of(n);
        let pairs: Vec<(El, El)> = raw
            .iter()
            .map(|(a, b)| (El::int((a % n) as i64), El::int((b % n) as i64)))
            .collect();
        let first = quotient_by_generated(&carrier, &pairs).expect("quotient");
        let projected: Vec<(El, El)> = pairs
            .iter()
            .map(|(a, b)| {
                (
                    first.rep_of(a).expect("in carrier").clone(),
                    first.rep_of(b).expect("in carrier").clone(),
                )
            })
            .collect();
        let second = quotient_by_generated(&first.reps, &projected).expect("quotient");
        for class in &second.classes {
            prop_assert_eq!(class.len(), 1);
        }
    }

    /// The quotient does not depend on the order the generating pairs are
    /// listed in.
    #[test]
    fn quotient_ignores_pair_order(
        n in 1usize..12,
        raw in proptest::collection::vec((0usize..12, 0usize..12), 0..20),
        rotate in 0usize..20,
    ) {
        let carrier = carrier_of(n);
        let pairs: Vec<(El, El)> = raw
            .iter()
            .map(|(a, b)| (El::int((a % n) as i64), El::int((b % n) as i64)))
            .collect();
        let mut permuted = pairs.clone();
        if !permuted.is_empty() {
            let k = rotate % permuted.len();
            permuted.rotate_left(k);
            permuted.reverse();
        }
        let one = quotient_by_generated(&carrier, &pairs).expect("quotient");
        let two = quotient_by_generated(&carrier, &permuted).expect("quotient");
        prop_assert_eq!(one.classes, two.classes);
        prop_assert_eq!(one.reps, two.reps);
        prop_assert_eq!(one.project, two.project);
    }

    /// Quotienting a disjoint union by the empty relation changes nothing:
    /// every class is a singleton and the injections survive projection.
    #[test]
    fn empty_quotient_is_identity_on_a_disjoint_union(
        sizes in proptest::collection::vec(0usize..5, 1..4),
    ) {
        let parts: Vec<FinSet> = sizes.iter().map(|n| carrier_of(*n)).collect();
        let (union, injections) = disjoint_union(&parts);
        let q = quotient_by_generated(&union, &[]).expect("quotient");
        prop_assert_eq!(&q.reps, &union);
        prop_assert_eq!(&q.project, &FinFn::identity(union.clone()));
        for (part, inj) in parts.iter().zip(&injections) {
            for e in part.iter() {
                let image = inj.apply(e).expect("injected");
                prop_assert_eq!(q.rep_of(image).expect("in union"), image);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// Hom-sets of a binary product category are products of hom-sets.
    #[test]
    fn product_hom_sets_multiply(seed in any::<u64>()) {
        let lim = lim();
        let mut r = rng(seed);
        let a = random_category(&mut r, &lim);
        let b = random_category(&mut r, &lim);
        let (product, _) = product_category(&[a.clone(), b.clone()], &lim).expect("product");
        prop_assert!(validate_category(&product).is_valid());
        for s in product.objects().iter() {
            for t in product.objects().iter() {
                let st = s.expect_tuple();
                let tt = t.expect_tuple();
                let count = product.hom(s, t).expect("hom").len();
                let left = a.hom(&st[0], &tt[0]).expect("hom").len();
                let right = b.hom(&st[1], &tt[1]).expect("hom").len();
                prop_assert_eq!(count, left * right);
            }
        }
    }

    /// A functor lands in a full subcategory exactly when its objects do,
    /// and the returned lift followed by the inclusion reproduces it.
    #[test]
    fn factoring_reproduces_the_functor_exactly(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ambient = random_poset(&mut r, 4);
        let keep: Vec<El> = ambient
            .objects()
            .iter()
            .filter(|_| r.gen_bool(0.5))
            .cloned()
            .collect();
        let incl = full_subcategory(&ambient, &FinSet::new(keep)).expect("full subcategory");
        let point = unit_category();
        for target in ambient.objects().iter() {
            let obj_map = FinFn::from_fn(
                point.objects().clone(),
                ambient.objects().clone(),
                |_| target.clone(),
            )
            .expect("object map");
            let mor_map = FinFn::from_fn(
                point.morphisms().clone(),
                ambient.morphisms().clone(),
                |_| ambient.id_of(target).expect("identity").clone(),
            )
            .expect("morphism map");
            let g = Functor::new(point.clone(), ambient.clone(), obj_map, mor_map)
                .expect("point functor");
            let lift = check_factors_through(&g, &incl).expect("factoring check");
            let inside = incl.sub().objects().contains(target);
            prop_assert_eq!(lift.is_some(), inside);
            if let Some(lift) = lift {
                prop_assert_eq!(&lift.then(incl.incl()).expect("composite"), &g);
            }
        }
    }

    /// Every composite built by coend composition validates as a profunctor
    /// (both variances functorial, actions commuting) and keeps the chain's
    /// endpoints.
    #[test]
    fn composites_validate_as_profunctors(seed in any::<u64>()) {
        let lim = lim();
        let mut r = rng(seed);
        let chain = random_profunctor_chain(&mut r, 2, 2, &lim).expect("chain");
        let composite = compose(&chain[1], &chain[0], &lim).expect("composite");
        prop_assert!(composite.prof.validate().is_ok());
        prop_assert_eq!(composite.prof.from(), chain[0].from());
        prop_assert_eq!(composite.prof.to(), chain[1].to());
    }

    /// The extension of a partial operation is total: it assigns a value set
    /// to every object of the base, not only to the operation's domain.
    #[test]
    fn extensions_of_partial_operations_are_total(seed in any::<u64>()) {
        let lim = lim();
        let mut r = rng(seed);
        let base = random_poset(&mut r, 4);
        let arity = r.gen_range(0..=2);
        let theta = random_partial_op(&mut r, &base, arity, 0.5, &lim).expect("operation");
        let fs: Vec<Copresheaf> = (0..arity)
            .map(|_| random_copresheaf(&mut r, &base, 2).expect("input"))
            .collect();
        let day = day_extend(&theta, &fs, &lim).expect("extension");
        prop_assert_eq!(day.output.base(), &base);
        for c in base.objects().iter() {
            prop_assert!(day.output.value_at(c).is_ok());
        }
    }

    /// Over a poset, the residual of propositions is subterminal on the nose
    /// (an end of at-most-one-element sets has at most one element), while
    /// the extension of propositions reflects onto a proposition: its support
    /// is upward closed and matches the decomposition semantics exactly. The
    /// raw extension itself may carry several elements over one world when a
    /// world decomposes in ways not connected inside the domain, which is why
    /// the proposition-level conjunction is the support, not the coend.
    #[test]
    fn propositions_reflect_under_extension_and_survive_residual(seed in any::<u64>()) {
        let lim = lim();
        let mut r = rng(seed);
        let base = random_poset(&mut r, 4);
        let theta = random_partial_op(&mut r, &base, 2, 0.6, &lim).expect("operation");
        let up_set = |r: &mut rand_chacha::ChaCha8Rng, base: &FinCategory| {
            let seedset: Vec<El> = base
                .objects()
                .iter()
                .filter(|_| r.gen_bool(0.4))
                .cloned()
                .collect();
            let closed: Vec<El> = base
                .objects()
                .iter()
                .filter(|w| {
                    seedset
                        .iter()
                        .any(|s| !base.hom(s, w).expect("hom").is_empty())
                })
                .cloned()
                .collect();
            Proposition::from_worlds(base, &FinSet::new(closed)).expect("up-set")
        };
        let phi = up_set(&mut r, &base);
        let psi = up_set(&mut r, &base);
        let star = day_extend(
            &theta,
            &[phi.copresheaf().clone(), psi.copresheaf().clone()],
            &lim,
        )
        .expect("extension");
        let support = star.output.support();
        prop_assert!(Proposition::from_worlds(&base, &support).is_ok());
        let expected: Vec<El> = base
            .objects()
            .iter()
            .filter(|a| {
                theta.domain().sub().objects().iter().any(|dvec| {
                    let parts = dvec.expect_tuple();
                    phi.holds_at(&parts[0])
                        && psi.holds_at(&parts[1])
                        && !base
                            .hom(theta.apply(dvec).expect("defined on its domain"), a)
                            .expect("hom")
                            .is_empty()
                })
            })
            .cloned()
            .collect();
        prop_assert_eq!(support, FinSet::new(expected));
        let wand = residual(&theta, 2, psi.copresheaf(), &[phi.copresheaf().clone()], &lim)
            .expect("residual");
        prop_assert!(wand.is_subterminal());
        prop_assert!(Proposition::from_worlds(&base, &wand.support()).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    /// The associator is natural in each of its three arguments: whiskering
    /// a cell into either bracketing and regrouping gives the same cell.
    /// The test cells collapse one factor's fibers onto points.
    #[test]
    fn associator_is_natural_in_each_argument(seed in any::<u64>()) {
        let lim = lim();
        let mut r = rng(seed);
        let chain = random_profunctor_chain(&mut r, 3, 2, &lim).expect("chain");
        let (f, g, h) = (&chain[0], &chain[1], &chain[2]);
        let base = associator_witness(h, g, f, &lim).expect("associator");

        // Inner argument: a cell f → f′.
        {
            let f2 = collapse(f);
            let alpha = collapse_cell(f, &f2);
            let moved = associator_witness(h, g, &f2, &lim).expect("associator");
            let into_left = horizontal_compose(
                &ProfCell::identity(&base.hg.prof),
                &alpha,
                &base.hg_f,
                &moved.hg_f,
            )
            .expect("whisker");
            let route_left = into_left.then(moved.iso.forward()).expect("composite");
            let inner = horizontal_compose(
                &ProfCell::identity(g),
                &alpha,
                &base.gf,
                &moved.gf,
            )
            .expect("whisker");
            let into_right = horizontal_compose(
                &ProfCell::identity(h),
                &inner,
                &base.h_gf,
                &moved.h_gf,
            )
            .expect("whisker");
            let route_right = base.iso.forward().then(&into_right).expect("composite");
            prop_assert_eq!(route_left, route_right);
        }

        // Middle argument: a cell g → g′.
        {
            let g2 = collapse(g);
            let beta = collapse_cell(g, &g2);
            let moved = associator_witness(h, &g2, f, &lim).expect("associator");
            let paired = horizontal_compose(
                &ProfCell::identity(h),
                &beta,
                &base.hg,
                &moved.hg,
            )
            .expect("whisker");
            let into_left = horizontal_compose(
                &paired,
                &ProfCell::identity(f),
                &base.hg_f,
                &moved.hg_f,
            )
            .expect("whisker");
            let route_left = into_left.then(moved.iso.forward()).expect("composite");
            let paired_low = horizontal_compose(
                &beta,
                &ProfCell::identity(f),
                &base.gf,
                &moved.gf,
            )
            .expect("whisker");
            let into_right = horizontal_compose(
                &ProfCell::identity(h),
                &paired_low,
                &base.h_gf,
                &moved.h_gf,
            )
            .expect("whisker");
            let route_right = base.iso.forward().then(&into_right).expect("composite");
            prop_assert_eq!(route_left, route_right);
        }

        // Outer argument: a cell h → h′.
        {
            let h2 = collapse(h);
            let gamma = collapse_cell(h, &h2);
            let moved = associator_witness(&h2, g, f, &lim).expect("associator");
            let paired = horizontal_compose(
                &gamma,
                &ProfCell::identity(g),
                &base.hg,
                &moved.hg,
            )
            .expect("whisker");
            let into_left = horizontal_compose(
                &paired,
                &ProfCell::identity(f),
                &base.hg_f,
                &moved.hg_f,
            )
            .expect("whisker");
            let route_left = into_left.then(moved.iso.forward()).expect("composite");
            let into_right = horizontal_compose(
                &gamma,
                &ProfCell::identity(&base.gf.prof),
                &base.h_gf,
                &moved.h_gf,
            )
            .expect("whisker");
            let route_right = base.iso.forward().then(&into_right).expect("composite");
            prop_assert_eq!(route_left, route_right);
        }
    }
}
