//! The full analysis of one knowledge base, in stage order.

use std::collections::BTreeSet;

use crate::derivation::{self, DerivationReport};
use crate::diag::Diagnostic;
use crate::error::Result;
use crate::graph::{self, DescriptionGraph, NodeKind};
use crate::ident::Ident;
use crate::linking::{self, LinkReport};
use crate::resolution::{self, Confidence, MatchSet};
use crate::store::KnowledgeStore;
use crate::taxonomy::ClassHierarchy;

/// Everything computed from a store: the completed store, graphs, typing
/// and the diagnostics of every stage.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// Asserted facts the analysis ran on (after root restriction).
    pub source: KnowledgeStore,
    /// Asserted plus derived facts.
    pub store: KnowledgeStore,
    pub hierarchy: ClassHierarchy,
    pub udg: DescriptionGraph,
    pub kdg: DescriptionGraph,
    pub derivation: DerivationReport,
    pub diagnostics: Vec<Diagnostic>,
}

/// Keeps the facts whose two endpoints are both in the UDG rooted at `root`.
pub fn restrict_to_root(store: &KnowledgeStore, root: &str) -> Result<KnowledgeStore> {
    let (udg, _) = graph::build_udg(store);
    let rooted = graph::rooted_subgraph(&udg, root)?;
    Ok(store.filtered(|t| rooted.contains_node(t.subject.as_str()) && rooted.contains_node(t.value.as_str())))
}

/// Runs every derivation stage and builds the final KDG. A superclass cycle
/// or a structural KDG cycle is an error.
pub fn analyze(input: &KnowledgeStore, root: Option<&str>) -> Result<Analysis> {
    let source = match root {
        Some(r) => restrict_to_root(input, r)?,
        None => input.clone(),
    };
    let hierarchy = ClassHierarchy::from_store(&source)?;
    let (udg, mut diagnostics) = graph::build_udg(&source);
    let mut store = source.clone();
    let derivation = derivation::derive_all(&mut store, &hierarchy, &udg);
    diagnostics.extend(derivation.diagnostics.iter().cloned());

    // Derived facts add class nodes (`event`, `entity`) but never change the
    // kind of an existing node; retype so those classes are in the KDG.
    let (final_udg, _) = graph::build_udg(&store);
    let mut scratch = store.clone();
    let typing = derivation::infer_event_typing(&mut scratch, &hierarchy, &final_udg).typing;
    let (kdg, kdg_diags) = graph::build_kdg(&final_udg, &typing)?;
    diagnostics.extend(kdg_diags);

    Ok(Analysis {
        source,
        store,
        hierarchy,
        udg,
        kdg,
        derivation,
        diagnostics,
    })
}

impl Analysis {
    pub fn events(&self) -> BTreeSet<Ident> {
        self.derivation.events().cloned().collect()
    }

    pub fn is_event(&self, node: &str) -> bool {
        self.kdg.kind(node) == Some(NodeKind::Event)
    }

    /// Instance matches over every instance of the analysed store.
    pub fn matches(&self) -> MatchSet {
        resolution::match_instances(&self.store, &self.hierarchy, None)
    }

    pub fn spatial(&self, matches: &MatchSet) -> (MatchSet, Vec<Diagnostic>) {
        resolution::spatial_match(&self.store, &self.hierarchy, matches)
    }

    pub fn link(&self, threshold: Option<Confidence>) -> Result<LinkReport> {
        let matches = self.matches();
        let (spatial, diags) = self.spatial(&matches);
        let mut report = linking::link(&self.store, &self.events(), &matches, &spatial, threshold)?;
        report.diagnostics.splice(0..0, diags);
        Ok(report)
    }
}
