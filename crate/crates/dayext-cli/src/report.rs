//! Structured command reports. A report echoes the command, the seed, and
//! the guard settings, then carries notes, tables, and pass/fail checks in
//! a fixed order. Rendering is deterministic: the same inputs and seed give
//! byte-identical output. Timing never enters a report; the binary writes
//! elapsed time to stderr.

use std::fmt::Write;

use dayext::operad::LawReport;
use dayext::Limits;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Tree,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Format, String> {
        match s {
            "text" => Ok(Format::Text),
            "tree" => Ok(Format::Tree),
            other => Err(format!("unknown format `{other}` (expected text or tree)")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Item {
    Note {
        key: String,
        value: String,
    },
    Check {
        name: String,
        passed: bool,
        detail: String,
    },
    Table {
        title: String,
        rows: Vec<(String, String)>,
    },
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub seed: Option<u64>,
    pub guards: (usize, usize),
    pub items: Vec<Item>,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: Option<u64>, limits: &Limits) -> Report {
        Report {
            command: command.into(),
            seed,
            guards: (limits.carrier, limits.enumeration),
            items: Vec::new(),
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.items.push(Item::Note {
            key: key.into(),
            value: value.into(),
        });
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.items.push(Item::Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn table(&mut self, title: impl Into<String>, rows: Vec<(String, String)>) {
        self.items.push(Item::Table {
            title: title.into(),
            rows,
        });
    }

    /// Append every line of a law report as a check item.
    pub fn extend_laws(&mut self, laws: &LawReport) {
        for check in &laws.checks {
            self.check(check.name.clone(), check.passed, check.detail.clone());
        }
    }

    /// True when every check item passed (reports without checks pass).
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| match i {
            Item::Check { passed, .. } => *passed,
            _ => true,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Tree => self.render_tree(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "command: {}", self.command).unwrap();
        if let Some(seed) = self.seed {
            writeln!(out, "seed: {seed}").unwrap();
        }
        writeln!(
            out,
            "guards: carrier={} enumeration={}",
            self.guards.0, self.guards.1
        )
        .unwrap();
        for item in &self.items {
            match item {
                Item::Note { key, value } => {
                    writeln!(out, "{key}: {value}").unwrap();
                }
                Item::Check {
                    name,
                    passed,
                    detail,
                } => {
                    let verdict = if *passed { "pass" } else { "FAIL" };
                    writeln!(out, "check {name}: {verdict}").unwrap();
                    if !detail.is_empty() {
                        writeln!(out, "  {detail}").unwrap();
                    }
                }
                Item::Table { title, rows } => {
                    writeln!(out, "{title}:").unwrap();
                    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                    for (k, v) in rows {
                        writeln!(out, "  {k:width$}  {v}").unwrap();
                    }
                }
            }
        }
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        writeln!(out, "result: {verdict}").unwrap();
        out
    }

    fn render_tree(&self) -> String {
        let mut out = String::new();
        writeln!(out, "report:").unwrap();
        writeln!(out, "  command: {}", self.command).unwrap();
        if let Some(seed) = self.seed {
            writeln!(out, "  seed: {seed}").unwrap();
        }
        writeln!(out, "  guards:").unwrap();
        writeln!(out, "    carrier: {}", self.guards.0).unwrap();
        writeln!(out, "    enumeration: {}", self.guards.1).unwrap();
        writeln!(out, "  items:").unwrap();
        for item in &self.items {
            match item {
                Item::Note { key, value } => {
                    writeln!(out, "    - note:").unwrap();
                    writeln!(out, "        key: {key}").unwrap();
                    writeln!(out, "        value: {value}").unwrap();
                }
                Item::Check {
                    name,
                    passed,
                    detail,
                } => {
                    writeln!(out, "    - check:").unwrap();
                    writeln!(out, "        name: {name}").unwrap();
                    writeln!(out, "        passed: {passed}").unwrap();
                    if !detail.is_empty() {
                        writeln!(out, "        detail: {detail}").unwrap();
                    }
                }
                Item::Table { title, rows } => {
                    writeln!(out, "    - table:").unwrap();
                    writeln!(out, "        title: {title}").unwrap();
                    writeln!(out, "        rows:").unwrap();
                    for (k, v) in rows {
                        writeln!(out, "          {k}: {v}").unwrap();
                    }
                }
            }
        }
        writeln!(out, "  result: {}", if self.passed() { "pass" } else { "FAIL" }).unwrap();
        out
    }
}
