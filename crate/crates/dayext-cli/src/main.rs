use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dayext::Limits;
use dayext_cli::commands;
use dayext_cli::error::{CliError, CliResult};
use dayext_cli::report::{Format, Report};
use dayext_cli::workspace::Workspace;

#[derive(Parser)]
#[command(
    name = "dayext",
    about = "Evaluate formulas and check categorical laws over declared finite structures",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that loads declaration files.
#[derive(Args)]
struct Common {
    /// Declaration files to load, in order.
    #[arg(value_name = "FILE")]
    files: Vec<PathBuf>,

    /// Seed for commands that draw random inputs.
    #[arg(long, default_value_t = 0, global = false)]
    seed: u64,

    /// Ceiling on any single materialized carrier.
    #[arg(long, value_name = "N")]
    guard_carrier: Option<usize>,

    /// Ceiling on combinatorial enumerations.
    #[arg(long, value_name = "N")]
    guard_enum: Option<usize>,

    /// Write the report in tree format to this file as well.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Report format on standard output.
    #[arg(long, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a model and print the world table.
    Eval {
        /// Model to evaluate in: a heap model or a poset name.
        #[arg(long)]
        model: String,
        /// Valuation for the atoms; atoms default to empty without one.
        #[arg(long)]
        valuation: Option<String>,
        /// The formula source text.
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run one of the law checks.
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
    /// Compose relations or operations and report the result.
    Compose {
        /// Two or three relation names, composed in diagram order.
        #[arg(long, value_delimiter = ',')]
        relations: Vec<String>,
        /// Unitor side (left or right); needs --relation.
        #[arg(long)]
        unitor: Option<String>,
        /// The relation for --unitor.
        #[arg(long)]
        relation: Option<String>,
        /// An outer operation followed by its inner operations.
        #[arg(long, value_delimiter = ',')]
        ops: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Parse declaration files and print them in canonical form.
    Fmt {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum CheckKind {
    /// Re-validate a declared category or poset.
    Category {
        /// The category to check.
        #[arg(long)]
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check a theory against bound operations.
    Algebra {
        /// The theory to check.
        #[arg(long)]
        theory: String,
        /// Bindings symbol=operation, one per theory symbol.
        #[arg(long, value_delimiter = ',')]
        bind: Vec<String>,
        /// strict compares extensions on the nose; pseudo up to isomorphism.
        #[arg(long, default_value = "strict")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check that extending a composite agrees with composing extensions.
    Pseudomorphism {
        /// The outer operation.
        #[arg(long)]
        op: String,
        /// Inner operations, one per outer input.
        #[arg(long, value_delimiter = ',')]
        inners: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the coherence axioms on a two-level nesting.
    Coherence {
        /// The outer operation.
        #[arg(long)]
        op: String,
        /// Middle-level operations, one per outer input.
        #[arg(long, value_delimiter = ',')]
        inners: Vec<String>,
        /// Leaf operations, one per middle-level input; `unit` is the
        /// identity operation.
        #[arg(long, value_delimiter = ',')]
        leaves: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the residual adjunction at one input slot.
    Adjunction {
        /// The operation whose extension is residuated.
        #[arg(long)]
        op: String,
        /// Which input slot to residuate, counted from 1.
        #[arg(long, default_value_t = 1)]
        slot: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check that both extension routes agree, including the interchange.
    RouteEquivalence {
        /// The operation to extend; a heap model's name means its join.
        #[arg(long)]
        op: String,
        #[command(flatten)]
        common: Common,
    },
    /// Search random instances for a non-invertible comparison cell.
    LaxWitness {
        /// How many random instances to try.
        #[arg(long, default_value_t = 200)]
        tries: usize,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn limits(&self) -> Limits {
        let mut limits = Limits::default();
        if let Some(c) = self.guard_carrier {
            limits.carrier = c;
        }
        if let Some(e) = self.guard_enum {
            limits.enumeration = e;
        }
        limits
    }

    fn load(&self, limits: &Limits) -> CliResult<Workspace> {
        let mut sources = Vec::with_capacity(self.files.len());
        for path in &self.files {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            sources.push((path.display().to_string(), text));
        }
        Workspace::parse(&sources, limits)
    }
}

fn run(command: &Command) -> CliResult<(Report, &Common)> {
    match command {
        Command::Eval {
            model,
            valuation,
            formula,
            common,
        } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            let report = commands::cmd_eval(&ws, model, valuation.as_deref(), formula, &limits)?;
            Ok((report, common))
        }
        Command::Check { kind } => run_check(kind),
        Command::Compose {
            relations,
            unitor,
            relation,
            ops,
            common,
        } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            let modes = [!relations.is_empty(), unitor.is_some(), !ops.is_empty()];
            let report = match modes {
                [true, false, false] => commands::cmd_compose_relations(&ws, relations, &limits)?,
                [false, true, false] => {
                    let rel = relation.as_deref().ok_or_else(|| {
                        CliError::Usage("--unitor needs --relation".into())
                    })?;
                    commands::cmd_compose_unitor(&ws, unitor.as_deref().unwrap(), rel, &limits)?
                }
                [false, false, true] => commands::cmd_compose_ops(&ws, ops, &limits)?,
                _ => {
                    return Err(CliError::Usage(
                        "compose takes exactly one of --relations, --unitor, --ops".into(),
                    ))
                }
            };
            Ok((report, common))
        }
        Command::Fmt { common } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            let mut report = Report::new("fmt", None, &limits);
            report.note("canonical form", format!("\n{}", ws.serialize()));
            Ok((report, common))
        }
    }
}

fn run_check(kind: &CheckKind) -> CliResult<(Report, &Common)> {
    match kind {
        CheckKind::Category { name, common } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            Ok((commands::cmd_check_category(&ws, name, &limits)?, common))
        }
        CheckKind::Algebra {
            theory,
            bind,
            mode,
            common,
        } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            Ok((
                commands::cmd_check_algebra(&ws, theory, bind, mode, &limits)?,
                common,
            ))
        }
        CheckKind::Pseudomorphism { op, inners, common } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            Ok((
                commands::cmd_check_pseudomorphism(&ws, op, inners, common.seed, &limits)?,
                common,
            ))
        }
        CheckKind::Coherence {
            op,
            inners,
            leaves,
            common,
        } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            Ok((
                commands::cmd_check_coherence(&ws, op, inners, leaves, common.seed, &limits)?,
                common,
            ))
        }
        CheckKind::Adjunction { op, slot, common } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            Ok((
                commands::cmd_check_adjunction(&ws, op, *slot, common.seed, &limits)?,
                common,
            ))
        }
        CheckKind::RouteEquivalence { op, common } => {
            let limits = common.limits();
            let ws = common.load(&limits)?;
            Ok((
                commands::cmd_check_route_equivalence(&ws, op, common.seed, &limits)?,
                common,
            ))
        }
        CheckKind::LaxWitness { tries, common } => {
            let limits = common.limits();
            Ok((
                commands::cmd_check_lax_witness(common.seed, *tries, &limits)?,
                common,
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli.command) {
        Ok((report, common)) => {
            print!("{}", report.render(common.format));
            if let Some(path) = &common.out {
                if let Err(e) = std::fs::write(path, report.render(Format::Tree)) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            eprintln!("elapsed: {:?}", started.elapsed());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("elapsed: {:?}", started.elapsed());
            ExitCode::from(2)
        }
    }
}
