//! The commands behind the binary: formula evaluation, the check family,
//! and composition reports. Each returns a `Report`; the binary renders it
//! and turns failed checks into a nonzero exit code.

use dayext::day::{
    day_coend_formula_swapped, route_equivalence, Copresheaf, ResidualAdjunction,
};
use dayext::day::enumerate_nat_trans;
use dayext::finbase::El;
use dayext::fincat::PartialOp;
use dayext::kripke::{eval, oracle_eval};
use dayext::operad::{
    coherence_check, check_algebra, day_pseudomorphism_check, multi_compose, AlgebraMode,
    Interpretation, MorphismWitness,
};
use dayext::prof::{
    associator_witness, compose, find_iso, unitor_witness, ProfCell, Profunctor, UnitorSide,
};
use dayext::samples::{random_copresheaf, rng, search_lax_witness};
use dayext::Limits;

use crate::error::{CliError, CliResult};
use crate::formula::parse_formula;
use crate::report::Report;
use crate::workspace::Workspace;

/// Evaluate a formula on a model and report the world table, cross-checked
/// against the direct quantifier clauses.
pub fn cmd_eval(
    ws: &Workspace,
    model_name: &str,
    valuation_name: Option<&str>,
    formula_src: &str,
    limits: &Limits,
) -> CliResult<Report> {
    let model = ws.model_named(model_name)?;
    let valuation = match valuation_name {
        Some(v) => ws.valuation_for(v, &model)?,
        None => ws.empty_valuation(&model),
    };
    let formula = parse_formula(formula_src)?;
    let mut report = Report::new(
        format!("eval --model {model_name} --formula \"{formula}\""),
        None,
        limits,
    );
    report.note("model", model_name);
    if let Some(v) = valuation_name {
        report.note("valuation", v);
    }
    report.note("formula", formula.to_string());

    let prop = eval(&formula, &model, &valuation, limits)?;
    let rows: Vec<(String, String)> = model
        .frame()
        .elements()
        .iter()
        .map(|w| (w.to_string(), prop.holds_at(w).to_string()))
        .collect();
    report.table("world table", rows);

    let direct = oracle_eval(&formula, &model, &valuation, limits)?;
    report.check(
        "the evaluation matches the direct clauses",
        prop == direct,
        format!("extension machinery: {prop}; direct clauses: {direct}"),
    );
    Ok(report)
}

fn relation_table(p: &Profunctor) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    for c in p.from().objects().iter() {
        for d in p.to().objects().iter() {
            let related = !p.value(d, c).expect("objects of the profunctor").is_empty();
            rows.push((format!("{c} ~ {d}"), related.to_string()));
        }
    }
    rows
}

fn cell_component_rows(cell: &ProfCell, d: &El, c: &El) -> Vec<(String, String)> {
    let component = cell.component(d, c).expect("objects of the cell");
    component
        .graph()
        .map(|(x, y)| (x.to_string(), y.to_string()))
        .collect()
}

/// Compose named relations in diagram order (the first named is applied
/// first). Two names report the composite table; three also compare the two
/// bracketings through the associativity witness.
pub fn cmd_compose_relations(
    ws: &Workspace,
    names: &[String],
    limits: &Limits,
) -> CliResult<Report> {
    let mut report = Report::new(
        format!("compose --relations {}", names.join(",")),
        None,
        limits,
    );
    let rels: Vec<&Profunctor> = names
        .iter()
        .map(|n| ws.relation_named(n))
        .collect::<CliResult<_>>()?;
    match rels.as_slice() {
        [r, s] => {
            if s.from() != r.to() {
                return Err(CliError::Usage(format!(
                    "`{}` ends where `{}` does not start",
                    names[0], names[1]
                )));
            }
            let composite = compose(s, r, limits)?;
            report.note(
                "composite",
                format!("{} then {}", names[0], names[1]),
            );
            report.table("relation table", relation_table(&composite.prof));
        }
        [r, s, t] => {
            let left = compose(&compose(t, s, limits)?.prof, r, limits)?;
            let assoc = associator_witness(t, s, r, limits)?;
            report.table("relation table", relation_table(&left.prof));
            report.check(
                "the two bracketings are naturally isomorphic",
                assoc.iso.forward().is_iso(),
                "the reassociation cell has inverse components at every object pair",
            );
        }
        _ => {
            return Err(CliError::Usage(
                "compose takes two or three relation names".into(),
            ))
        }
    }
    Ok(report)
}

/// Report the unitor witness for a named relation: the composite with the
/// identity profunctor on the chosen side, and the collapse isomorphism.
pub fn cmd_compose_unitor(
    ws: &Workspace,
    side_name: &str,
    relation: &str,
    limits: &Limits,
) -> CliResult<Report> {
    let side = match side_name {
        "left" => UnitorSide::Left,
        "right" => UnitorSide::Right,
        other => {
            return Err(CliError::Usage(format!(
                "unknown unitor side `{other}` (expected left or right)"
            )))
        }
    };
    let rel = ws.relation_named(relation)?;
    let (composite, iso) = unitor_witness(side, rel, limits)?;
    let mut report = Report::new(
        format!("compose --unitor {side_name} --relation {relation}"),
        None,
        limits,
    );
    report.table("composite table", relation_table(&composite.prof));
    report.check(
        "the identity composite collapses to the relation",
        iso.forward().is_iso(),
        "unitor components verified invertible at every object pair",
    );
    for d in rel.to().objects().iter() {
        for c in rel.from().objects().iter() {
            let rows = cell_component_rows(iso.forward(), d, c);
            if !rows.is_empty() {
                report.table(format!("unitor component at ({d}, {c})"), rows);
            }
        }
    }
    Ok(report)
}

/// Compose a named operation with inner operations: `theta` applied after
/// the tuple of inners. Reports whether the composite exists and its value
/// table when it does.
pub fn cmd_compose_ops(ws: &Workspace, names: &[String], limits: &Limits) -> CliResult<Report> {
    if names.len() < 2 {
        return Err(CliError::Usage(
            "compose --ops takes an outer operation followed by its inners".into(),
        ));
    }
    let theta = ws.op_named(&names[0])?;
    let inners: Vec<PartialOp> = names[1..]
        .iter()
        .map(|n| ws.op_named(n).cloned())
        .collect::<CliResult<_>>()?;
    if inners.len() != theta.arity() {
        return Err(CliError::Usage(format!(
            "`{}` has arity {}, but {} inner operations were named",
            names[0],
            theta.arity(),
            inners.len()
        )));
    }
    let mut report = Report::new(format!("compose --ops {}", names.join(",")), None, limits);
    match multi_compose(theta, &inners, limits)? {
        Some(composite) => {
            report.check(
                "the composite exists",
                true,
                "the paired inner actions factor through the outer domain",
            );
            report.note("composite arity", composite.arity().to_string());
            let rows: Vec<(String, String)> = composite
                .domain()
                .sub()
                .objects()
                .iter()
                .map(|t| {
                    (
                        t.to_string(),
                        composite.apply(t).expect("domain object").to_string(),
                    )
                })
                .collect();
            report.table("value table", rows);
        }
        None => {
            report.check(
                "the composite exists",
                false,
                "the paired inner actions do not factor through the outer domain",
            );
        }
    }
    Ok(report)
}

/// Re-validate a named category or poset and report its shape.
pub fn cmd_check_category(ws: &Workspace, name: &str, limits: &Limits) -> CliResult<Report> {
    let cat = ws.category_named(name)?;
    let mut report = Report::new(format!("check category --name {name}"), None, limits);
    report.note("objects", cat.objects().len().to_string());
    report.note("morphisms", cat.morphisms().len().to_string());
    report.note("thin", cat.is_thin().to_string());
    report.check(
        "the composition tables validate",
        true,
        "identities, sources, targets, and associativity verified at load",
    );
    Ok(report)
}

/// Check a named theory against an interpretation given as symbol=operation
/// bindings, in strict or pseudo mode.
pub fn cmd_check_algebra(
    ws: &Workspace,
    theory_name: &str,
    bindings: &[String],
    mode_name: &str,
    limits: &Limits,
) -> CliResult<Report> {
    let theory = ws.theory_named(theory_name)?;
    let mode = match mode_name {
        "strict" => AlgebraMode::Strict,
        "pseudo" => AlgebraMode::Pseudo,
        other => {
            return Err(CliError::Usage(format!(
                "unknown mode `{other}` (expected strict or pseudo)"
            )))
        }
    };
    let mut parsed = Vec::new();
    for b in bindings {
        let Some((sym, op_name)) = b.split_once('=') else {
            return Err(CliError::Usage(format!(
                "binding `{b}` is not of the form symbol=operation"
            )));
        };
        parsed.push((sym.to_string(), ws.op_named(op_name)?.clone()));
    }
    let base = parsed
        .first()
        .map(|(_, op)| op.base().clone())
        .ok_or_else(|| CliError::Usage("check algebra needs at least one binding".into()))?;
    let mut interp = Interpretation::new(base);
    for (sym, op) in parsed {
        interp.insert(&sym, op).map_err(CliError::from)?;
    }
    let mut report = Report::new(
        format!(
            "check algebra --theory {theory_name} --mode {mode_name} --bind {}",
            bindings.join(",")
        ),
        None,
        limits,
    );
    let laws = check_algebra(theory, &interp, mode, limits)?;
    report.extend_laws(&laws);
    Ok(report)
}

fn seeded_inputs(
    seed: u64,
    base: &dayext::fincat::FinCategory,
    count: usize,
    limits: &Limits,
) -> CliResult<Vec<Copresheaf>> {
    let mut r = rng(seed);
    let mut fs = Vec::with_capacity(count);
    for _ in 0..count {
        fs.push(random_copresheaf(&mut r, base, 2).map_err(CliError::from)?);
    }
    let _ = limits;
    Ok(fs)
}

/// Check the composition comparison for a named operation pair: extending
/// the composite agrees with composing the extensions, through the canonical
/// invertible witness. Inputs are seeded random copresheaves.
pub fn cmd_check_pseudomorphism(
    ws: &Workspace,
    op_name: &str,
    inner_names: &[String],
    seed: u64,
    limits: &Limits,
) -> CliResult<Report> {
    let theta = ws.op_named(op_name)?;
    let inners: Vec<PartialOp> = inner_names
        .iter()
        .map(|n| ws.op_named(n).cloned())
        .collect::<CliResult<_>>()?;
    let total: usize = inners.iter().map(|t| t.arity()).sum();
    let fs = seeded_inputs(seed, theta.base(), total, limits)?;
    let mut report = Report::new(
        format!(
            "check pseudomorphism --op {op_name} --inners {}",
            inner_names.join(",")
        ),
        Some(seed),
        limits,
    );
    let check = day_pseudomorphism_check(theta, &inners, &fs, limits)?;
    report.extend_laws(&check.report);
    Ok(report)
}

/// Resolve an inner-operation name, with `unit` reserved for the identity
/// operation on the given base.
fn op_or_unit(
    ws: &Workspace,
    name: &str,
    base: &dayext::fincat::FinCategory,
    limits: &Limits,
) -> CliResult<PartialOp> {
    if name == "unit" {
        return PartialOp::unit(base, limits).map_err(CliError::from);
    }
    ws.op_named(name).cloned()
}

/// Check the coherence axioms of the canonical witness on a two-level
/// nesting: associativity of the comparison cells and the unit laws.
pub fn cmd_check_coherence(
    ws: &Workspace,
    op_name: &str,
    inner_names: &[String],
    leaf_names: &[String],
    seed: u64,
    limits: &Limits,
) -> CliResult<Report> {
    let theta = ws.op_named(op_name)?.clone();
    let base = theta.base().clone();
    let inners: Vec<PartialOp> = inner_names
        .iter()
        .map(|n| op_or_unit(ws, n, &base, limits))
        .collect::<CliResult<_>>()?;
    let mut leaves = leaf_names.iter();
    let mut nested: Vec<Vec<PartialOp>> = Vec::with_capacity(inners.len());
    for inner in &inners {
        let mut row = Vec::with_capacity(inner.arity());
        for _ in 0..inner.arity() {
            let Some(name) = leaves.next() else {
                return Err(CliError::Usage(format!(
                    "not enough leaf operations: the inners consume {}",
                    inners.iter().map(|t| t.arity()).sum::<usize>()
                )));
            };
            row.push(op_or_unit(ws, name, &base, limits)?);
        }
        nested.push(row);
    }
    if leaves.next().is_some() {
        return Err(CliError::Usage(
            "too many leaf operations for the inner arities".into(),
        ));
    }
    let total: usize = nested
        .iter()
        .flat_map(|row| row.iter())
        .map(|t| t.arity())
        .sum();
    let fs = seeded_inputs(seed, &base, total, limits)?;
    let mut report = Report::new(
        format!(
            "check coherence --op {op_name} --inners {} --leaves {}",
            inner_names.join(","),
            leaf_names.join(",")
        ),
        Some(seed),
        limits,
    );
    let laws = coherence_check(
        &MorphismWitness::canonical(),
        &theta,
        &inners,
        &nested,
        &fs,
        limits,
    )?;
    report.extend_laws(&laws);
    Ok(report)
}

/// Check the residual adjunction for a named operation at one input slot:
/// transformation counts agree on both sides and the transport is a
/// bijection. Inputs are seeded random copresheaves.
pub fn cmd_check_adjunction(
    ws: &Workspace,
    op_name: &str,
    slot: usize,
    seed: u64,
    limits: &Limits,
) -> CliResult<Report> {
    let theta = ws.op_named(op_name)?;
    if slot == 0 || slot > theta.arity() {
        return Err(CliError::Usage(format!(
            "slot {slot} is out of range for an operation of arity {}",
            theta.arity()
        )));
    }
    let mut fs = seeded_inputs(seed, theta.base(), theta.arity() + 1, limits)?;
    let g = fs.pop().expect("one extra input was generated");
    let adj = ResidualAdjunction::new(theta, slot, &fs, &g, limits)?;
    let lhs = enumerate_nat_trans(&adj.day.output, &g, limits)?;
    let rhs = enumerate_nat_trans(&fs[slot - 1], &adj.residual, limits)?;
    let mut report = Report::new(
        format!("check adjunction --op {op_name} --slot {slot}"),
        Some(seed),
        limits,
    );
    report.note(
        "transformations",
        format!("{} out of the extension, {} into the residual", lhs.len(), rhs.len()),
    );
    report.check(
        "both transformation sets have the same size",
        lhs.len() == rhs.len(),
        "counted by exhaustive enumeration",
    );
    let mut round_trip = true;
    for kappa in &lhs {
        let image = adj.transport(kappa, limits)?;
        if &adj.transport_back(&image)? != kappa {
            round_trip = false;
            break;
        }
    }
    report.check(
        "transport followed by transport back is the identity",
        round_trip,
        format!("verified on all {} transformations", lhs.len()),
    );
    Ok(report)
}

/// Check that the two extension routes agree for a named operation (a heap
/// model's name means its join): the composite route against the coend
/// formula, and the swapped coend for the Fubini interchange.
pub fn cmd_check_route_equivalence(
    ws: &Workspace,
    op_name: &str,
    seed: u64,
    limits: &Limits,
) -> CliResult<Report> {
    let theta = ws.op_named(op_name)?;
    let fs = seeded_inputs(seed, theta.base(), theta.arity(), limits)?;
    let mut report = Report::new(
        format!("check route-equivalence --op {op_name}"),
        Some(seed),
        limits,
    );
    let routes = route_equivalence(theta, &fs, limits)?;
    report.check(
        "the composite route agrees with the coend formula",
        routes.iso.forward().is_iso(),
        "a natural isomorphism was found between the two extensions",
    );
    let swapped = day_coend_formula_swapped(theta, &fs, limits)?;
    let fubini = find_iso(routes.formula.prof(), swapped.prof(), limits)?;
    report.check(
        "the swapped coend agrees",
        fubini.is_some(),
        "integrating in either order gives isomorphic results",
    );
    report.note(
        "support",
        routes.composite.output.support().to_string(),
    );
    Ok(report)
}

/// Search seeded random instances for a composition square whose comparison
/// cell is not invertible, and print the failing component's table.
pub fn cmd_check_lax_witness(seed: u64, tries: usize, limits: &Limits) -> CliResult<Report> {
    let mut report = Report::new(
        format!("check lax-witness --tries {tries}"),
        Some(seed),
        limits,
    );
    match search_lax_witness(seed, tries, limits)? {
        Some(outcome) => {
            report.check(
                "a non-invertible comparison cell was found",
                true,
                format!("on attempt {} of {tries}", outcome.tries),
            );
            report.note(
                "outer operation",
                format!(
                    "arity {} over {} objects, defined on {} of {} input tuples",
                    outcome.theta.arity(),
                    outcome.theta.base().objects().len(),
                    outcome.theta.domain().sub().objects().len(),
                    outcome
                        .theta
                        .base()
                        .objects()
                        .len()
                        .pow(outcome.theta.arity() as u32),
                ),
            );
            let (d, c) = &outcome.component;
            report.note("failing component", format!("at ({d}, {c})"));
            let rows = cell_component_rows(&outcome.mate.cell, d, c);
            let sizes = {
                let comp = outcome.mate.cell.component(d, c).expect("witness objects");
                format!(
                    "{} elements mapping into {}",
                    comp.dom().len(),
                    comp.cod().len()
                )
            };
            report.note("component shape", sizes);
            report.table("component table", rows);
        }
        None => {
            report.check(
                "a non-invertible comparison cell was found",
                false,
                format!("no instance surfaced within {tries} attempts"),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Format;

    fn lim() -> Limits {
        Limits::default()
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
poset chain { a <= b; b <= c; }
"#;

    fn hxy_ws() -> Workspace {
        Workspace::parse(&[("test".into(), HXY.into())], &lim()).unwrap()
    }

    #[test]
    fn eval_reports_the_world_table() {
        let ws = hxy_ws();
        let report = cmd_eval(&ws, "hxy", Some("v"), "p * q", &lim()).unwrap();
        assert!(report.passed());
        let text = report.render(Format::Text);
        assert!(text.contains("xy  true"), "{text}");
        assert!(text.contains("o   false"), "{text}");

        let nominal = cmd_eval(&ws, "chain", None, "nom(b)", &lim()).unwrap();
        let text = nominal.render(Format::Text);
        assert!(text.contains("b  true"), "{text}");
        assert!(text.contains("a  false"), "{text}");

        let top = cmd_eval(&ws, "hxy", Some("v"), "top", &lim()).unwrap();
        let text = top.render(Format::Text);
        assert!(!text.contains("false"), "{text}");
    }

    #[test]
    fn route_equivalence_passes_on_the_bundled_join() {
        let ws = hxy_ws();
        let report = cmd_check_route_equivalence(&ws, "hxy", 3, &lim()).unwrap();
        assert!(report.passed(), "{}", report.render(Format::Text));
    }

    #[test]
    fn the_lax_witness_search_reports_a_component_table() {
        let report = cmd_check_lax_witness(5, 200, &lim()).unwrap();
        assert!(report.passed(), "{}", report.render(Format::Text));
        let text = report.render(Format::Text);
        assert!(text.contains("component table"), "{text}");
        assert_eq!(text, cmd_check_lax_witness(5, 200, &lim()).unwrap().render(Format::Text));
    }

    #[test]
    fn reports_are_byte_stable_across_runs() {
        let ws = hxy_ws();
        let a = cmd_eval(&ws, "hxy", Some("v"), "p -* (p * q)", &lim())
            .unwrap()
            .render(Format::Tree);
        let b = cmd_eval(&ws, "hxy", Some("v"), "p -* (p * q)", &lim())
            .unwrap()
            .render(Format::Tree);
        assert_eq!(a, b);
    }
}
