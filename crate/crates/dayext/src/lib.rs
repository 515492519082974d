//! A computational calculus for finite category theory.
//!
//! The library works with categories whose object and morphism collections are
//! finite and explicitly tabulated. On that substrate it implements profunctors
//! with coend composition, the Day extension of total operations, partial
//! operations and spans to copresheaf categories, residuals computed as ends,
//! endomorphism (pre-)operads with their multi-composition, and instance-level
//! verification of the unit, associativity and coherence laws that govern all
//! of these. The `kripke` module turns the machinery into a model checker for
//! hybrid logic and separation/BI logic: every connective is produced by a Day
//! extension, a residual or a hom-embedding, then cross-checked against direct
//! quantifier semantics.
//!
//! Layering, bottom to top:
//!
//! * [`finbase`]: finite sets, functions, quotients by generated equivalence
//!   relations (the substrate for coends).
//! * [`fincat`]: finite categories, functors, natural transformations, full
//!   subcategories, products, opposites, posets, comma objects.
//! * [`prof`]: profunctors, coend composition with audit traces, hom
//!   embeddings, 2-cells, canonical isomorphism witnesses.
//! * [`day`]: copresheaves, Day extension (three routes), residuals via ends,
//!   natural-transformation enumeration.
//! * [`operad`]: multi-composition of partial operations and spans, pullback
//!   composites and their mates, syntactic theories, algebra and coherence
//!   checking.
//! * [`kripke`]: frames, heap models, formulas, evaluation and its independent
//!   oracle.
//! * [`samples`]: seeded random instances (categories, profunctors, operations)
//!   for law checking at scale.
//!
//! Everything is immutable after construction and safe to share across
//! threads. Enumerating operations take a [`Limits`] value and fail with
//! [`Error::SizeGuard`] instead of exhausting memory.

pub mod day;
pub mod error;
pub mod finbase;
pub mod fincat;
pub mod kripke;
pub mod limits;
pub mod operad;
pub mod prof;
pub mod samples;

pub use error::{Error, Result};
pub use limits::Limits;
