use thiserror::Error;

use crate::ident::Ident;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier `{0}`")]
pub struct IdentError(pub String);

/// A malformed statement in a fact file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{source_name}:{line}:{column}: {message}")]
pub struct ParseError {
    pub source_name: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn render_path(path: &[Ident]) -> String {
    path.iter().map(Ident::as_str).collect::<Vec<_>>().join(" -> ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("superclass cycle: {}", render_path(.0))]
    HierarchyCycle(Vec<Ident>),

    #[error("KDG cycle over compositional/locational/participant edges: {}", render_path(.0))]
    KdgCycle(Vec<Ident>),

    #[error("subevent cycle: {}", render_path(.0))]
    SubeventCycle(Vec<Ident>),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("`{0}` is not an event node")]
    NotAnEvent(Ident),

    #[error("`{0}` is not an entity node")]
    NotAnEntity(Ident),

    #[error("a super-event needs a chain of at least 2 events, got {0}")]
    ChainTooShort(usize),

    #[error("event `{ancestor}` already contains chain members `{first}` and `{second}`")]
    ConflictingParentage {
        ancestor: Ident,
        first: Ident,
        second: Ident,
    },

    #[error("rule program: {0}")]
    Program(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
