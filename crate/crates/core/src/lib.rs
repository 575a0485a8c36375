//! Rule-based completion of frame-based knowledge bases.
//!
//! Facts of the form `has(subject, slot, value)` are loaded into a
//! [`KnowledgeStore`], turned into typed description graphs, and completed
//! with derived event structure, IO relations, instance matches and event
//! links. A small datalog evaluator in [`oracle`] re-derives the same
//! results from a declarative rule program for cross-checking.

pub mod cli;
pub mod derivation;
pub mod diag;
pub mod error;
pub mod graph;
pub mod ident;
pub mod linking;
pub mod oracle;
pub mod pipeline;
pub mod query;
pub mod resolution;
pub mod store;
pub mod taxonomy;
pub mod vocab;

pub use diag::{Diagnostic, Level};
pub use error::{Error, ParseError, Result};
pub use graph::{DescriptionGraph, Edge, NodeKind, Variant};
pub use ident::{id, Ident};
pub use store::{parse_fact_file, Fact, KnowledgeStore, Pattern, Provenance, Triple};
pub use taxonomy::ClassHierarchy;
