//! Property tests for the text front end: the canonical form is a fixed
//! point of parse-then-serialize, layout and comments never change it,
//! formulas round-trip through the printer grammar, and neither parser
//! panics on arbitrary input.

use dayext::finbase::El;
use dayext::kripke::Formula;
use dayext::Limits;
use dayext_cli::formula::parse_formula;
use dayext_cli::workspace::Workspace;
use proptest::prelude::*;

fn lim() -> Limits {
    Limits::default()
}

fn bundled(name: &str) -> String {
    let path = format!(
        "{}/../../models/{name}",
        env!("CARGO_MANIFEST_DIR")
    );
    std::fs::read_to_string(path).expect("bundled model file")
}

/// Fully parenthesized rendering of a formula; the parser must read it back
/// to the same tree regardless of the precedence rules.
fn print(f: &Formula) -> String {
    match f {
        Formula::Atom(s) => s.clone(),
        Formula::Top => "top".into(),
        Formula::Bot => "bot".into(),
        Formula::Emp => "emp".into(),
        Formula::Nominal(w) => format!("nom({w})"),
        Formula::At(w, b) => format!("@{w} ({})", print(b)),
        Formula::And(a, b) => format!("({} & {})", print(a), print(b)),
        Formula::Or(a, b) => format!("({} | {})", print(a), print(b)),
        Formula::Implies(a, b) => format!("({} -> {})", print(a), print(b)),
        Formula::Star(a, b) => format!("({} * {})", print(a), print(b)),
        Formula::Wand(a, b) => format!("({} -* {})", print(a), print(b)),
    }
}

fn formula_strategy() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::Top),
        Just(Formula::Bot),
        Just(Formula::Emp),
        "[pq]".prop_map(|s| Formula::atom(&s)),
        "[abc]".prop_map(|w| Formula::Nominal(El::name(&w))),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.implies(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.star(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.wand(b)),
            ("[abc]", inner).prop_map(|(w, f)| Formula::at(El::name(&w), f)),
        ]
    })
}

#[test]
fn the_canonical_form_is_a_fixed_point() {
    let lim = lim();
    let names = [
        "hxy.ws",
        "three.ws",
        "intuitionistic.ws",
        "frames.ws",
        "monoid.ws",
        "relations.ws",
    ];
    let mut all = Vec::new();
    for name in names {
        let source = bundled(name);
        let ws = Workspace::parse(&[(name.into(), source.clone())], &lim).expect("parses");
        let canonical = ws.serialize();
        let back =
            Workspace::parse(&[(name.into(), canonical.clone())], &lim).expect("reparses");
        assert_eq!(back.serialize(), canonical, "{name} is not a fixed point");
        all.push((name.to_string(), source));
    }
    let merged = Workspace::parse(&all, &lim).expect("the files form one workspace");
    let canonical = merged.serialize();
    let back = Workspace::parse(&[("merged.ws".into(), canonical.clone())], &lim)
        .expect("the merged canonical form reparses");
    assert_eq!(back.serialize(), canonical);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Blank lines, comment lines, and horizontal padding are invisible to
    /// the parser: the canonical form never changes.
    #[test]
    fn layout_does_not_change_the_canonical_form(
        picks in proptest::collection::vec((0usize..500, 0usize..3), 0..12),
    ) {
        let lim = lim();
        let original = bundled("hxy.ws");
        let ws = Workspace::parse(&[("hxy.ws".into(), original.clone())], &lim).expect("parses");
        let canonical = ws.serialize();
        let mut lines: Vec<String> = original.lines().map(|l| l.to_string()).collect();
        for (pos, kind) in picks {
            let at = pos % (lines.len() + 1);
            match kind {
                0 => lines.insert(at, String::new()),
                1 => lines.insert(at, "# layout noise".into()),
                _ => {
                    if at < lines.len() {
                        lines[at] = format!("   {}  ", lines[at]);
                    }
                }
            }
        }
        let mutated = lines.join("\n");
        let ws2 = Workspace::parse(&[("hxy.ws".into(), mutated)], &lim).expect("still parses");
        prop_assert_eq!(ws2.serialize(), canonical);
    }

    /// Any formula tree survives printing and reparsing unchanged.
    #[test]
    fn formulas_round_trip_through_the_grammar(f in formula_strategy()) {
        let text = print(&f);
        let parsed = parse_formula(&text).expect("printed formulas parse");
        prop_assert_eq!(parsed, f);
    }

    /// The formula parser returns a result on arbitrary input, it never
    /// panics.
    #[test]
    fn the_formula_parser_is_total(src in "\\PC*") {
        let _ = parse_formula(&src);
    }

    /// The workspace parser returns a result on arbitrary input, it never
    /// panics.
    #[test]
    fn the_workspace_parser_is_total(src in "\\PC*") {
        let _ = Workspace::parse(&[("fuzz.ws".into(), src)], &lim());
    }
}
