//! Command-line front end for the dayext library: a small declaration
//! language for categories, posets, heap models, operations, relations,
//! theories, and valuations, plus commands that evaluate formulas and run
//! the library's law checks over the declared structures.
//!
//! The binary is a thin wrapper; everything it does is reachable through
//! [`workspace::Workspace`], [`commands`], and [`report::Report`], so tests
//! and other tools can drive the same code paths directly.

pub mod commands;
pub mod dsl;
pub mod error;
pub mod formula;
pub mod report;
pub mod workspace;
