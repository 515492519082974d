//! The acceptance gate: one test per shipping criterion, each printing a
//! single `criterion NN: pass|FAIL` line (visible under `--nocapture`) and
//! failing with a list of everything that went wrong. The first nine
//! criteria exercise the library through its public interface; the tenth
//! drives the installed binary over the bundled model files and checks that
//! reports are byte-stable across runs.

use std::process::Command;
use std::time::Instant;

use dayext::day::{
    day_coend_formula_swapped, day_extend, enumerate_nat_trans, route_equivalence, Copresheaf,
    Proposition, ResidualAdjunction,
};
use dayext::finbase::{El, FinSet};
use dayext::fincat::{discrete_category, FinCategory, PartialOp};
use dayext::kripke::{
    at_rooted, at_span, bi_adjunction_check, enumerate_propositions, eval, nominal, oracle_eval,
    Formula, HeapModel, Model, Valuation,
};
use dayext::operad::{
    coherence_check, day_pseudomorphism_check, day_unit_witness, multi_compose, MorphismWitness,
};
use dayext::prof::{
    associator_witness, compose, find_iso, unitor_witness, ProfCell, Profunctor, UnitorSide,
};
use dayext::samples::{
    bundled_frames, hxy_model, intuitionistic_model, letter_valuation, random_copresheaf,
    random_partial_op, random_poset, random_profunctor_chain, random_relation_profunctor,
    random_total_op, rng, search_lax_witness, three_universe_model,
};
use dayext::{Error, Limits};
use dayext_cli::commands::cmd_check_lax_witness;
use dayext_cli::report::Format;
use dayext_cli::workspace::Workspace;
use rand::Rng;

fn lim() -> Limits {
    Limits::default()
}

fn conclude(number: &str, failures: Vec<String>) {
    let verdict = if failures.is_empty() { "pass" } else { "FAIL" };
    println!("criterion {number}: {verdict}");
    assert!(
        failures.is_empty(),
        "criterion {number} failed:\n{}",
        failures.join("\n")
    );
}

/// Composition of seeded random profunctors is functorial (the composite's
/// coend actions validate on construction), both unit laws hold through
/// invertible unitor witnesses, and the associator witness on triples is an
/// isomorphism. 100 pairs and 100 triples over categories with at most four
/// objects, inside a minute.
#[test]
fn criterion_01_composition_laws_on_random_chains() {
    let lim = lim();
    let started = Instant::now();
    let mut failures = Vec::new();
    for i in 0..100u64 {
        let mut r = rng(1000 + i);
        let chain = random_profunctor_chain(&mut r, 2, 2, &lim).expect("a composable pair");
        let composite = compose(&chain[1], &chain[0], &lim).expect("composite");
        if composite.prof.from() != chain[0].from() || composite.prof.to() != chain[1].to() {
            failures.push(format!("pair {i}: composite endpoints drifted"));
        }
        for (k, f) in chain.iter().enumerate() {
            for side in [UnitorSide::Left, UnitorSide::Right] {
                let label = match side {
                    UnitorSide::Left => "left",
                    UnitorSide::Right => "right",
                };
                let (_, iso) = unitor_witness(side, f, &lim).expect("unitor");
                if !iso.forward().is_iso() {
                    failures.push(format!(
                        "pair {i} factor {k}: the {label} unitor is not invertible"
                    ));
                }
            }
        }
    }
    for i in 0..100u64 {
        let mut r = rng(1500 + i);
        let chain = random_profunctor_chain(&mut r, 3, 2, &lim).expect("a composable triple");
        let assoc =
            associator_witness(&chain[2], &chain[1], &chain[0], &lim).expect("associator");
        if !assoc.iso.forward().is_iso() {
            failures.push(format!("triple {i}: the associator is not invertible"));
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 60 {
        failures.push(format!("took {elapsed:?}, the budget is 60 seconds"));
    }
    conclude("01", failures);
}

/// Relations presented as profunctors valued in empty-or-singleton fibers
/// over discrete categories compose exactly as boolean matrix products.
/// 100 seeded instances on carriers of at most six elements.
#[test]
fn criterion_02_relation_composition_is_boolean_matrix_product() {
    let lim = lim();
    let mut failures = Vec::new();
    for i in 0..100u64 {
        let mut r = rng(2000 + i);
        let sizes: Vec<usize> = (0..3).map(|_| r.gen_range(1..=6)).collect();
        let cats: Vec<FinCategory> = sizes
            .iter()
            .enumerate()
            .map(|(t, n)| {
                let elems: Vec<El> = (0..*n).map(|k| El::name(&format!("t{t}e{k}"))).collect();
                discrete_category(&elems).expect("discrete carrier")
            })
            .collect();
        let density = r.gen_range(0.2..0.8);
        let first =
            random_relation_profunctor(&mut r, &cats[0], &cats[1], density).expect("relation");
        let second =
            random_relation_profunctor(&mut r, &cats[1], &cats[2], density).expect("relation");
        let composite = compose(&second, &first, &lim).expect("composite").prof;
        let related =
            |p: &Profunctor, a: &El, b: &El| !p.value(b, a).expect("tabulated").is_empty();
        for a in cats[0].objects().iter() {
            for c in cats[2].objects().iter() {
                let expected = cats[1]
                    .objects()
                    .iter()
                    .any(|b| related(&first, a, b) && related(&second, b, c));
                if related(&composite, a, c) != expected {
                    failures.push(format!(
                        "instance {i}: the composite disagrees with the boolean product at ({a}, {c})"
                    ));
                }
            }
        }
    }
    conclude("02", failures);
}

/// The extension of an operation along the Yoneda embedding agrees with the
/// pointwise coend formula, and with the formula computed in the swapped
/// variable order. 50 seeded operations, total and partial alternating,
/// arities up to three over posets of up to four elements.
#[test]
fn criterion_03_extension_agrees_with_the_coend_formula() {
    let lim = lim();
    let mut failures = Vec::new();
    for i in 0..50u64 {
        let mut r = rng(3000 + i);
        let base = random_poset(&mut r, 4);
        let arity = r.gen_range(0..=3);
        let theta = if i % 2 == 0 {
            random_total_op(&mut r, &base, arity, &lim).expect("total operation")
        } else {
            random_partial_op(&mut r, &base, arity, 0.6, &lim).expect("partial operation")
        };
        let fs: Vec<Copresheaf> = (0..arity)
            .map(|_| random_copresheaf(&mut r, &base, 2).expect("input"))
            .collect();
        let eq = match route_equivalence(&theta, &fs, &lim) {
            Ok(eq) => eq,
            Err(e) => {
                failures.push(format!("instance {i}: the routes disagree: {e}"));
                continue;
            }
        };
        if !eq.iso.forward().is_iso() {
            failures.push(format!("instance {i}: the route comparison is not invertible"));
        }
        let swapped = day_coend_formula_swapped(&theta, &fs, &lim).expect("swapped formula");
        match find_iso(eq.formula.prof(), swapped.prof(), &lim) {
            Ok(Some(_)) => {}
            Ok(None) => failures.push(format!(
                "instance {i}: the swapped coend order gives a non-isomorphic result"
            )),
            Err(e) => failures.push(format!("instance {i}: the swapped coend failed: {e}")),
        }
    }
    conclude("03", failures);
}

/// Wherever a multi-composite of operations exists, extension is a
/// pseudomorphism: the canonical comparison between the one-step and nested
/// extensions is an isomorphism (30 instances), the coherence report passes
/// on ten two-level nestings, and a deliberately perturbed witness fails it.
#[test]
fn criterion_04_composites_extend_to_pseudomorphisms() {
    let lim = lim();
    let mut failures = Vec::new();

    let mut found = 0u32;
    let mut seed = 4000u64;
    while found < 30 {
        seed += 1;
        if seed > 4800 {
            failures.push("ran out of seeds while hunting composable instances".into());
            break;
        }
        let mut r = rng(seed);
        let base = random_poset(&mut r, 3);
        let outer_arity = r.gen_range(1..=2);
        let theta =
            random_partial_op(&mut r, &base, outer_arity, 0.7, &lim).expect("outer operation");
        let mut inners = Vec::with_capacity(outer_arity);
        for _ in 0..outer_arity {
            let inner_arity = r.gen_range(0..=2);
            inners
                .push(random_partial_op(&mut r, &base, inner_arity, 0.8, &lim).expect("inner"));
        }
        if multi_compose(&theta, &inners, &lim).expect("composition test").is_none() {
            continue;
        }
        let total: usize = inners.iter().map(|t| t.arity()).sum();
        let fs: Vec<Copresheaf> = (0..total)
            .map(|_| random_copresheaf(&mut r, &base, 2).expect("input"))
            .collect();
        let check =
            day_pseudomorphism_check(&theta, &inners, &fs, &lim).expect("pseudomorphism check");
        if !check.report.passed() {
            failures.push(format!("seed {seed}: the pseudomorphism report failed"));
        }
        if !check.witness.forward().is_iso() {
            failures.push(format!("seed {seed}: the comparison witness is not invertible"));
        }
        found += 1;
    }

    let mut nestings = 0u32;
    let mut seed = 4800u64;
    while nestings < 10 {
        seed += 1;
        if seed > 6000 {
            failures.push("ran out of seeds while hunting two-level nestings".into());
            break;
        }
        let mut r = rng(seed);
        let base = random_poset(&mut r, 3);
        let outer_arity = r.gen_range(1..=2);
        let theta =
            random_partial_op(&mut r, &base, outer_arity, 0.9, &lim).expect("outer operation");
        let mut mids = Vec::with_capacity(outer_arity);
        let mut leaves: Vec<Vec<PartialOp>> = Vec::with_capacity(outer_arity);
        for _ in 0..outer_arity {
            let mid_arity = r.gen_range(1..=2);
            mids.push(random_partial_op(&mut r, &base, mid_arity, 0.9, &lim).expect("middle"));
            let mut row = Vec::with_capacity(mid_arity);
            for _ in 0..mid_arity {
                let leaf_arity = r.gen_range(0..=1);
                row.push(random_partial_op(&mut r, &base, leaf_arity, 0.9, &lim).expect("leaf"));
            }
            leaves.push(row);
        }
        // Skip seeds where any composite in the coherence square is undefined;
        // the law is only asserted where both bracketings exist.
        let mut inner_ops = Vec::with_capacity(mids.len());
        let mut all_exist = true;
        for (t, mid) in mids.iter().enumerate() {
            match multi_compose(mid, &leaves[t], &lim).expect("composition test") {
                Some(op) => inner_ops.push(op),
                None => {
                    all_exist = false;
                    break;
                }
            }
        }
        if !all_exist {
            continue;
        }
        if multi_compose(&theta, &inner_ops, &lim).expect("composition test").is_none() {
            continue;
        }
        let mid_op = match multi_compose(&theta, &mids, &lim).expect("composition test") {
            Some(op) => op,
            None => continue,
        };
        let flats: Vec<PartialOp> = leaves.iter().flatten().cloned().collect();
        if multi_compose(&mid_op, &flats, &lim).expect("composition test").is_none() {
            continue;
        }
        let total: usize = flats.iter().map(|t| t.arity()).sum();
        let fs: Vec<Copresheaf> = (0..total)
            .map(|_| random_copresheaf(&mut r, &base, 2).expect("input"))
            .collect();
        let report =
            coherence_check(&MorphismWitness::canonical(), &theta, &mids, &leaves, &fs, &lim)
                .expect("coherence check");
        if !report.passed() {
            failures.push(format!(
                "seed {seed}: coherence failed under the canonical witness"
            ));
        }
        nestings += 1;
    }

    // Negative control: swap two elements after the canonical unit collapse.
    // Over a discrete base the swap is natural, so the witness is well formed,
    // but it breaks the unit axiom and the coherence report must say so.
    let nbase = discrete_category(&[El::name("p"), El::name("q")]).expect("discrete base");
    let two = Copresheaf::constant(&nbase, &FinSet::new(vec![El::int(0), El::int(1)]))
        .expect("two-element input");
    let one_op = PartialOp::unit(&nbase, &lim).expect("unit operation");
    let perturbed = MorphismWitness {
        eta: MorphismWitness::canonical().eta,
        lambda: Box::new(|f, limits| {
            let canonical = day_unit_witness(f, limits)?.1.forward().clone();
            let swapped = ProfCell::from_fn(f.prof(), f.prof(), |_u, a, x| {
                let vals = f.value_at(a).expect("object");
                if vals.len() >= 2 {
                    let i = vals.index_of(x).expect("element");
                    if i == 0 {
                        return vals.get(1).clone();
                    }
                    if i == 1 {
                        return vals.get(0).clone();
                    }
                }
                x.clone()
            })?;
            canonical.then(&swapped)
        }),
    };
    let report = coherence_check(
        &perturbed,
        &one_op,
        &[one_op.clone()],
        &[vec![one_op.clone()]],
        &[two],
        &lim,
    )
    .expect("coherence check");
    if report.passed() {
        failures.push("the perturbed witness passed coherence; the control is broken".into());
    }

    conclude("04", failures);
}

/// A seeded search over small partial operations finds a composition square
/// whose comparison cell is not invertible, the search is reproducible under
/// its recorded seed, and the command-line report prints the non-bijective
/// component.
#[test]
fn criterion_05_seeded_search_finds_a_non_invertible_mate() {
    let lim = lim();
    let mut failures = Vec::new();
    let outcome = match search_lax_witness(5, 200, &lim).expect("search") {
        Some(o) => o,
        None => {
            conclude(
                "05",
                vec!["no non-invertible comparison found in 200 tries at seed 5".into()],
            );
            return;
        }
    };
    let again = search_lax_witness(5, 200, &lim)
        .expect("search")
        .expect("the recorded seed reproduces the outcome");
    if again.tries != outcome.tries || again.component != outcome.component {
        failures.push("the recorded seed did not reproduce the same witness".into());
    }
    let (d, c) = &outcome.component;
    let component = outcome.mate.cell.component(d, c).expect("component");
    if component.is_bijective() {
        failures.push("the reported component is bijective".into());
    }
    let report = cmd_check_lax_witness(5, 200, &lim).expect("report");
    let text = report.render(Format::Text);
    if !text.contains("failing component") || !text.contains(&format!("at ({d}, {c})")) {
        failures.push("the report does not print the failing component".into());
    }
    if text != cmd_check_lax_witness(5, 200, &lim).expect("report").render(Format::Text) {
        failures.push("the rendered report is not byte-stable".into());
    }
    conclude("05", failures);
}

/// The production evaluator agrees with the independent direct-clause oracle
/// on every formula of connective depth at most three over the atoms p and q
/// and the constants, on all three bundled separation models. Both routes
/// are compositional (a connective's output depends only on the argument
/// propositions), so the check quotients the formula tree by achieved
/// proposition values: every leaf is checked directly, and every connective
/// is checked on every achievable value pair, layer by layer. Also checks
/// the separating conjunction / implication adjunction exhaustively over all
/// 16 propositions (256 pairs) on the two-element universe. Two minutes.
#[test]
fn criterion_06_eval_matches_the_oracle_through_depth_three() {
    let lim = lim();
    let started = Instant::now();
    let mut failures = Vec::new();

    let models: Vec<(&str, HeapModel)> = vec![
        ("two-element universe", hxy_model(&lim).expect("model")),
        ("three-element universe", three_universe_model(&lim).expect("model")),
        ("ordered subsets", intuitionistic_model(&lim).expect("model")),
    ];
    for (label, heap) in &models {
        let model = Model::Heap(heap.clone());
        let mut valuation = letter_valuation(model.frame()).expect("valuation");
        let leaves = [
            Formula::atom("p"),
            Formula::atom("q"),
            Formula::Top,
            Formula::Bot,
        ];
        let mut values: Vec<Proposition> = Vec::new();
        let mut level: Vec<usize> = Vec::new();
        for leaf in &leaves {
            let via_eval = eval(leaf, &model, &valuation, &lim).expect("eval");
            let via_oracle = oracle_eval(leaf, &model, &valuation, &lim).expect("oracle");
            if via_eval != via_oracle {
                failures.push(format!("{label}: the routes disagree on the leaf {leaf:?}"));
            }
            if !values.contains(&via_eval) {
                valuation
                    .insert(&format!("v{}", values.len()), via_eval.clone())
                    .expect("fresh atom");
                values.push(via_eval);
                level.push(0);
            }
        }
        let connectives: [(&str, fn(Formula, Formula) -> Formula); 5] = [
            ("and", Formula::and),
            ("or", Formula::or),
            ("implies", Formula::implies),
            ("star", Formula::star),
            ("wand", Formula::wand),
        ];
        for depth in 1..=3usize {
            let snapshot = values.len();
            for i in 0..snapshot {
                for j in 0..snapshot {
                    if level[i].max(level[j]) != depth - 1 {
                        continue;
                    }
                    let u = Formula::atom(&format!("v{i}"));
                    let v = Formula::atom(&format!("v{j}"));
                    for (name, op) in &connectives {
                        let tree = op(u.clone(), v.clone());
                        let via_eval = eval(&tree, &model, &valuation, &lim).expect("eval");
                        let via_oracle =
                            oracle_eval(&tree, &model, &valuation, &lim).expect("oracle");
                        if via_eval != via_oracle {
                            failures.push(format!(
                                "{label}: {name} disagrees on the value pair ({i}, {j}) first reachable at depth {depth}"
                            ));
                        }
                        if depth < 3 && !values.contains(&via_eval) {
                            valuation
                                .insert(&format!("v{}", values.len()), via_eval.clone())
                                .expect("fresh atom");
                            values.push(via_eval);
                            level.push(depth);
                        }
                    }
                }
            }
        }
    }

    let hxy = &models[0].1;
    let props = enumerate_propositions(hxy.heaps(), &lim).expect("propositions");
    if props.len() != 16 {
        failures.push(format!(
            "expected 16 propositions over the two-element universe, found {}",
            props.len()
        ));
    }
    for phi in &props {
        let report = bi_adjunction_check(hxy, phi, &lim).expect("adjunction check");
        if !report.passed() {
            failures.push(format!(
                "the separating connectives fail the Galois property at {:?}",
                phi.worlds()
            ));
        }
    }

    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 120 {
        failures.push(format!("took {elapsed:?}, the budget is 120 seconds"));
    }
    conclude("06", failures);
}

/// Nominals and the at operation computed through extensions agree with
/// their direct definitions on the bundled three-, four-, and five-world
/// rooted frames, exhaustively over every up-set valuation of one atom, both
/// for the rooted partial-operation construction and the span construction.
#[test]
fn criterion_07_hybrid_connectives_match_their_direct_definitions() {
    let lim = lim();
    let mut failures = Vec::new();
    let expected_counts = [4usize, 6, 10];
    for (frame, expected) in bundled_frames().into_iter().zip(expected_counts) {
        let base = frame.worlds().clone();
        let upsets = enumerate_propositions(&frame, &lim).expect("up-sets");
        if upsets.len() != expected {
            failures.push(format!(
                "expected {expected} up-sets on the {}-world frame, found {}",
                frame.elements().len(),
                upsets.len()
            ));
        }
        let model = Model::Frame(frame.clone());
        for u in &upsets {
            let mut valuation = Valuation::new(frame.worlds());
            valuation.insert("p", u.clone()).expect("valuation");
            for a in frame.elements().iter() {
                let direct: FinSet = frame
                    .elements()
                    .iter()
                    .filter(|w| frame.leq(a, w))
                    .cloned()
                    .collect();
                let direct = Proposition::from_worlds(&base, &direct).expect("up-set");
                let via_eval =
                    eval(&Formula::nominal(a.clone()), &model, &valuation, &lim).expect("eval");
                let via_extension = nominal(&frame, a, &lim).expect("nominal");
                if via_eval != direct || via_extension != direct {
                    failures.push(format!("nominal({a}) disagrees with its direct definition"));
                }
                let rooted = at_rooted(&frame, a, u, &lim).expect("rooted at");
                let spanned = at_span(&frame, a, u, &lim).expect("span at");
                let expected_at = if u.holds_at(a) {
                    Proposition::top(&base)
                } else {
                    Proposition::bottom(&base)
                };
                let via_formula = eval(
                    &Formula::at(a.clone(), Formula::atom("p")),
                    &model,
                    &valuation,
                    &lim,
                )
                .expect("eval");
                if rooted != expected_at || spanned != expected_at || via_formula != expected_at {
                    failures.push(format!("@{a} disagrees with its direct definition"));
                }
            }
        }
    }
    conclude("07", failures);
}

/// The residual is right adjoint to extension in each slot: transformation
/// counts out of the extension match transformation counts into the
/// residual, transport is a bijection between the two sets, and the
/// bijection is natural in the output copresheaf against every enumerated
/// cell. 20 seeded instances with at most 200 candidate families each.
#[test]
fn criterion_08_the_residual_adjunction_counts_and_transports() {
    let lim = lim();
    let mut failures = Vec::new();
    let mut found = 0u32;
    let mut nonempty = 0u32;
    let mut seed = 8000u64;
    while found < 20 {
        seed += 1;
        if seed > 8400 {
            failures.push("ran out of seeds while hunting enumerable instances".into());
            break;
        }
        let mut r = rng(seed);
        let base = random_poset(&mut r, 3);
        let arity = r.gen_range(1..=2);
        let theta = if seed % 2 == 0 {
            random_total_op(&mut r, &base, arity, &lim).expect("total operation")
        } else {
            random_partial_op(&mut r, &base, arity, 0.7, &lim).expect("partial operation")
        };
        let fs: Vec<Copresheaf> = (0..arity)
            .map(|_| random_copresheaf(&mut r, &base, 2).expect("input"))
            .collect();
        let g = random_copresheaf(&mut r, &base, 5).expect("output");
        let j = r.gen_range(1..=arity);
        let adj = match ResidualAdjunction::new(&theta, j, &fs, &g, &lim) {
            Ok(a) => a,
            Err(Error::SizeGuard { .. }) => continue,
            Err(e) => panic!("residual construction failed: {e}"),
        };
        let lhs = match enumerate_nat_trans(&adj.day.output, &g, &lim) {
            Ok(cells) => cells,
            Err(Error::SizeGuard { .. }) => continue,
            Err(e) => panic!("enumeration failed: {e}"),
        };
        let rhs = match enumerate_nat_trans(&fs[j - 1], &adj.residual, &lim) {
            Ok(cells) => cells,
            Err(Error::SizeGuard { .. }) => continue,
            Err(e) => panic!("enumeration failed: {e}"),
        };
        if lhs.len() > 200 || rhs.len() > 200 {
            continue;
        }
        if lhs.len() != rhs.len() {
            failures.push(format!(
                "seed {seed}: {} transformations out of the extension but {} into the residual",
                lhs.len(),
                rhs.len()
            ));
        }
        if !lhs.is_empty() {
            nonempty += 1;
        }
        let mut images: Vec<ProfCell> = Vec::with_capacity(lhs.len());
        for kappa in &lhs {
            let hat = adj.transport(kappa, &lim).expect("transport");
            if !rhs.contains(&hat) {
                failures.push(format!(
                    "seed {seed}: a transported transformation is not among the enumerated ones"
                ));
            }
            if images.contains(&hat) {
                failures.push(format!("seed {seed}: transport is not injective"));
            }
            let back = adj.transport_back(&hat).expect("transport back");
            if &back != kappa {
                failures.push(format!("seed {seed}: transport does not round-trip"));
            }
            images.push(hat);
        }
        // Naturality in the output: against every cell beta out of g, the two
        // transport squares commute. A constant singleton target guarantees
        // at least one such cell to test against.
        let point = Copresheaf::constant(&base, &FinSet::new(vec![El::int(0)])).expect("point");
        let betas = enumerate_nat_trans(&g, &point, &lim).expect("cells out of the output");
        if betas.is_empty() {
            failures.push(format!("seed {seed}: no cell out of the output to test against"));
        }
        for beta in &betas {
            let (adj2, r_beta) = adj.residual_on_cell(beta, &lim).expect("residual cell");
            for kappa in &lhs {
                let composed = kappa.then(beta).expect("composite cell");
                let left = adj2.transport(&composed, &lim).expect("transport");
                let right = adj
                    .transport(kappa, &lim)
                    .expect("transport")
                    .then(&r_beta)
                    .expect("composite cell");
                if left != right {
                    failures.push(format!("seed {seed}: the transport squares do not commute"));
                }
            }
        }
        found += 1;
    }
    if nonempty < 12 {
        failures.push(format!(
            "only {nonempty} of the 20 instances had any transformation; the sample is too thin"
        ));
    }
    conclude("08", failures);
}

/// Strongly equal operations (same domain, same values) extend to literally
/// identical copresheaves, 10 seeded instances. Weak equality does not
/// transport: the totally undefined binary operation is weakly equal to the
/// two-element-universe join, yet their extensions differ.
#[test]
fn criterion_09_strong_equality_transports_and_weak_does_not() {
    let lim = lim();
    let mut failures = Vec::new();
    for i in 0..10u64 {
        let mut r = rng(9000 + i);
        let base = random_poset(&mut r, 4);
        let arity = r.gen_range(1..=2);
        let theta = random_partial_op(&mut r, &base, arity, 0.7, &lim).expect("operation");
        let rebuilt = PartialOp::monotone(
            &base,
            arity,
            theta.domain().sub().objects(),
            |t| theta.apply(t).expect("defined on its own domain").clone(),
            &lim,
        )
        .expect("rebuilt operation");
        if !theta.strongly_equal(&rebuilt) {
            failures.push(format!("instance {i}: the rebuilt operation is not strongly equal"));
        }
        let fs: Vec<Copresheaf> = (0..arity)
            .map(|_| random_copresheaf(&mut r, &base, 2).expect("input"))
            .collect();
        let left = day_extend(&theta, &fs, &lim).expect("extension");
        let right = day_extend(&rebuilt, &fs, &lim).expect("extension");
        if left.output != right.output {
            failures.push(format!(
                "instance {i}: strongly equal operations extended differently"
            ));
        }
    }

    let heap = hxy_model(&lim).expect("model");
    let join = heap.join();
    let empty = PartialOp::empty(join.base(), 2, &lim).expect("undefined operation");
    if !empty.weakly_equal(join) {
        failures.push("the undefined operation is not weakly equal to the join".into());
    }
    if empty.strongly_equal(join) {
        failures.push("the undefined operation must not be strongly equal to the join".into());
    }
    let fs = vec![
        Copresheaf::representable(join.base(), &El::name("x")).expect("representable"),
        Copresheaf::representable(join.base(), &El::name("y")).expect("representable"),
    ];
    let joined = day_extend(join, &fs, &lim).expect("extension");
    let emptied = day_extend(&empty, &fs, &lim).expect("extension");
    if find_iso(joined.output.prof(), emptied.output.prof(), &lim)
        .expect("isomorphism search")
        .is_some()
    {
        failures.push("weak equality wrongly transported along the extension".into());
    }
    conclude("09", failures);
}

fn run_binary(args: &[String]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_dayext"))
        .args(args)
        .output()
        .expect("the binary runs");
    (out.stdout, out.status.code().unwrap_or(-1))
}

/// The bundled model files parse as one workspace, every command documented
/// in the README runs with its documented exit code, and every report is
/// byte-identical across two runs with the same seed.
#[test]
fn criterion_10_the_bundled_workspace_is_stable_end_to_end() {
    let lim = lim();
    let mut failures = Vec::new();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models");
    let names = [
        "hxy.ws",
        "three.ws",
        "intuitionistic.ws",
        "frames.ws",
        "monoid.ws",
        "relations.ws",
    ];
    let path = |n: &str| format!("{dir}/{n}");
    let sources: Vec<(String, String)> = names
        .iter()
        .map(|n| {
            (
                n.to_string(),
                std::fs::read_to_string(path(n)).expect("bundled file"),
            )
        })
        .collect();
    if let Err(e) = Workspace::parse(&sources, &lim) {
        failures.push(format!("the bundled files do not parse as one workspace: {e}"));
    }

    let s = |v: &[&str]| -> Vec<String> { v.iter().map(|a| a.to_string()).collect() };
    let mut commands: Vec<(Vec<String>, i32)> = vec![
        (s(&["eval", "--model", "hxy", "--valuation", "pq", "--formula", "p * q", &path("hxy.ws")]), 0),
        (s(&["eval", "--model", "hxy", "--valuation", "pq", "--formula", "p -* (p * q)", "--format", "tree", &path("hxy.ws")]), 0),
        (s(&["eval", "--model", "subsets", "--valuation", "upsets", "--formula", "p -* (p * q)", &path("intuitionistic.ws")]), 0),
        (s(&["eval", "--model", "chain", "--formula", "nom(b)", &path("frames.ws")]), 0),
        (s(&["eval", "--model", "diamond", "--valuation", "marked", "--formula", "@xy p & nom(x)", &path("frames.ws")]), 0),
        (s(&["check", "category", "--name", "tree", &path("frames.ws")]), 0),
        (s(&["check", "algebra", "--theory", "monoid", "--bind", "m=add,e=zero", "--mode", "strict", &path("monoid.ws")]), 0),
        (s(&["check", "pseudomorphism", "--op", "add", "--inners", "add,zero", "--seed", "2", &path("monoid.ws")]), 0),
        (s(&["check", "coherence", "--op", "add", "--inners", "add,unit", "--leaves", "unit,zero,add", "--seed", "2", &path("monoid.ws")]), 0),
        (s(&["check", "adjunction", "--op", "add", "--slot", "2", "--seed", "0", &path("monoid.ws")]), 0),
        (s(&["check", "route-equivalence", "--op", "hxy", "--seed", "0", &path("hxy.ws")]), 0),
        (s(&["check", "lax-witness", "--seed", "5", "--tries", "200"]), 0),
        (s(&["compose", "--relations", "spread,gather", &path("relations.ws")]), 0),
        (s(&["compose", "--relations", "spread,gather,swap", &path("relations.ws")]), 0),
        (s(&["compose", "--unitor", "left", "--relation", "above", &path("relations.ws")]), 0),
        (s(&["compose", "--ops", "add,add,zero", &path("monoid.ws")]), 0),
        // The bundled join does not compose with itself: the paired actions
        // do not factor through the partial domain, so this is the one
        // documented command that exits 1.
        (s(&["compose", "--ops", "hxy,hxy,hxy", &path("hxy.ws")]), 1),
        (s(&["fmt", &path("hxy.ws")]), 0),
    ];
    let mut all = s(&["fmt"]);
    all.extend(names.iter().map(|n| path(n)));
    commands.push((all, 0));

    for (args, expected) in &commands {
        let first = run_binary(args);
        let second = run_binary(args);
        let shown = args.join(" ");
        if first.1 != *expected {
            failures.push(format!("`{shown}` exited {} (expected {expected})", first.1));
        }
        if second.1 != *expected {
            failures.push(format!("`{shown}` re-ran with exit {} (expected {expected})", second.1));
        }
        if first.0 != second.0 {
            failures.push(format!("`{shown}` is not byte-stable across runs"));
        }
        if first.1 == 0 && first.0.is_empty() {
            failures.push(format!("`{shown}` printed nothing"));
        }
    }

    // A report written to a sidecar file is identical across runs too.
    let out_path = std::env::temp_dir().join("dayext-acceptance-sidecar.txt");
    let mut with_out = s(&[
        "check",
        "route-equivalence",
        "--op",
        "hxy",
        "--seed",
        "0",
        "--out",
    ]);
    with_out.push(out_path.display().to_string());
    with_out.push(path("hxy.ws"));
    let first = run_binary(&with_out);
    let first_file = std::fs::read(&out_path).expect("sidecar written");
    let second = run_binary(&with_out);
    let second_file = std::fs::read(&out_path).expect("sidecar written");
    if first.1 != 0 || second.1 != 0 {
        failures.push("the sidecar run did not exit cleanly".into());
    }
    if first_file != second_file {
        failures.push("the sidecar report is not byte-stable across runs".into());
    }
    let _ = std::fs::remove_file(&out_path);

    conclude("10", failures);
}
