//! Error type shared by all modules.

use crate::finbase::El;

/// Everything that can go wrong when building or combining finite structures.
///
/// Validation of categories is report-based (see `fincat::validate_category`)
/// rather than error-based, so `InvalidCategory` and friends only appear when
/// a constructor is handed data that cannot even be assembled.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// An element was used with a set that does not contain it.
    #[error("unknown element {0} ({1})")]
    UnknownElement(El, String),
    /// An enumeration or carrier would exceed the configured limit.
    #[error("size guard exceeded: {what} needs {needed}, limit is {limit}")]
    SizeGuard {
        what: String,
        needed: u128,
        limit: usize,
    },
    /// The reflexive-transitive closure of the given order pairs fails antisymmetry.
    #[error("not a poset: {0}")]
    NotAPoset(String),
    /// An operation was applied to the wrong number of arguments.
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    /// A name was referenced that is not declared.
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    /// A formula or command needs model structure that was not declared.
    #[error("missing structure: {0}")]
    MissingStructure(String),
    /// Boundaries of cells, functors or profunctors do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// Raw category data is self-inconsistent (dangling indices, bad tables).
    #[error("invalid category: {0}")]
    InvalidCategory(String),
    /// A functor does not preserve sources, targets, identities or composites.
    #[error("invalid functor: {0}")]
    InvalidFunctor(String),
    /// A transformation is not natural or has malformed components.
    #[error("invalid transformation: {0}")]
    InvalidTransformation(String),
    /// A profunctor table fails functoriality in one of its variables.
    #[error("invalid profunctor: {0}")]
    InvalidProfunctor(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Convenience constructor for guard failures.
    pub fn guard(what: impl Into<String>, needed: u128, limit: usize) -> Self {
        Error::SizeGuard {
            what: what.into(),
            needed,
            limit,
        }
    }
}
