//! Description graphs: the underspecified graph (UDG) built straight from the
//! store, the typed and acyclicity-checked KDG, and rooted subgraphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::diag::{codes, Diagnostic};
use crate::error::{Error, Result};
use crate::ident::Ident;
use crate::store::KnowledgeStore;
use crate::taxonomy::find_cycle;
use crate::vocab::{self, EdgeFamily, SlotVocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Event,
    Entity,
    Class,
    Untyped,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Event => "event",
            NodeKind::Entity => "entity",
            NodeKind::Class => "class",
            NodeKind::Untyped => "untyped",
        }
    }
}

/// Node kind per identifier, as produced by event typing.
pub type NodeTyping = BTreeMap<Ident, NodeKind>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Udg,
    Kdg,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub from: Ident,
    pub slot: Ident,
    pub to: Ident,
    pub family: EdgeFamily,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptionGraph {
    pub variant: Variant,
    pub nodes: BTreeMap<Ident, NodeKind>,
    pub edges: BTreeSet<Edge>,
}

impl DescriptionGraph {
    pub fn empty(variant: Variant) -> Self {
        DescriptionGraph {
            variant,
            nodes: BTreeMap::new(),
            edges: BTreeSet::new(),
        }
    }

    pub fn contains_node(&self, node: &str) -> bool {
        self.nodes.contains_key(node)
    }

    pub fn kind(&self, node: &str) -> Option<NodeKind> {
        self.nodes.get(node).copied()
    }

    pub fn outgoing<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        // Edges are ordered by `from` first, so a range scan would do; the
        // graphs handled here are small enough for a filter.
        self.edges.iter().filter(move |e| e.from == node)
    }

    pub fn incoming<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.to == node)
    }

    pub fn edges_of(&self, family: EdgeFamily) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.family == family)
    }

    /// Node and edge containment.
    pub fn is_subgraph_of(&self, other: &DescriptionGraph) -> bool {
        self.nodes.keys().all(|n| other.nodes.contains_key(n))
            && self.edges.iter().all(|e| other.edges.contains(e))
    }

    /// Nodes reachable from `start` (inclusive) along edges accepted by `follow`.
    pub fn reachable(&self, start: &str, follow: impl Fn(&Edge) -> bool) -> BTreeSet<Ident> {
        let adj = self.adjacency(follow);
        let mut seen = BTreeSet::new();
        let Some((start, _)) = self.nodes.get_key_value(start) else {
            return seen;
        };
        seen.insert(start.clone());
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(n) = queue.pop_front() {
            for next in adj.get(&n).into_iter().flatten() {
                if seen.insert(next.clone()) {
                    queue.push_back(next.clone());
                }
            }
        }
        seen
    }

    pub(crate) fn adjacency(&self, follow: impl Fn(&Edge) -> bool) -> BTreeMap<Ident, BTreeSet<Ident>> {
        let mut adj: BTreeMap<Ident, BTreeSet<Ident>> = BTreeMap::new();
        for e in self.edges.iter().filter(|e| follow(e)) {
            adj.entry(e.from.clone()).or_default().insert(e.to.clone());
        }
        adj
    }

    /// Restriction to `nodes`: those nodes plus every edge between two of them.
    pub fn induced(&self, nodes: &BTreeSet<Ident>) -> DescriptionGraph {
        DescriptionGraph {
            variant: self.variant,
            nodes: self
                .nodes
                .iter()
                .filter(|(n, _)| nodes.contains(*n))
                .map(|(n, k)| (n.clone(), *k))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| nodes.contains(&e.from) && nodes.contains(&e.to))
                .cloned()
                .collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Node<'a> {
            id: &'a Ident,
            kind: NodeKind,
        }
        serde_json::json!({
            "variant": self.variant,
            "nodes": self.nodes.iter().map(|(id, kind)| Node { id, kind: *kind }).collect::<Vec<_>>(),
            "edges": self.edges.iter().collect::<Vec<_>>(),
        })
    }

    /// DOT rendering: rectangles for events, ellipses for entities, hexagons
    /// for classes; edge heads follow the edge family.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph {name} {{");
        let _ = writeln!(out, "  rankdir=TB;");
        for (node, kind) in &self.nodes {
            let _ = writeln!(out, "  \"{node}\" [shape={}];", dot_shape(*kind));
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\", {}];",
                e.from,
                e.to,
                e.slot,
                dot_edge_style(e.family)
            );
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn dot_shape(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Event => "box",
        NodeKind::Entity => "ellipse",
        NodeKind::Class => "hexagon",
        NodeKind::Untyped => "plaintext",
    }
}

pub(crate) fn dot_edge_style(family: EdgeFamily) -> &'static str {
    match family {
        EdgeFamily::Compositional => "style=solid",
        EdgeFamily::Ordering => "style=dashed",
        EdgeFamily::Participant => "arrowhead=box",
        EdgeFamily::Class => "arrowhead=diamond",
        EdgeFamily::Locational => "arrowhead=odot",
    }
}

/// Builds the UDG: one node per identifier used with a known slot and one
/// edge per fact whose slot belongs to an edge family. Facts with unknown
/// slots produce a diagnostic each.
pub fn build_udg(store: &KnowledgeStore) -> (DescriptionGraph, Vec<Diagnostic>) {
    let vocab = SlotVocabulary;
    let mut graph = DescriptionGraph::empty(Variant::Udg);
    let mut diags = Vec::new();
    for t in store.triples() {
        match vocab.role(t.slot.as_str()) {
            None => diags.push(Diagnostic::warn(
                codes::UNKNOWN_SLOT,
                format!("{t}: slot `{}` is not in the vocabulary; no edge", t.slot),
            )),
            Some(role) => {
                graph.nodes.insert(t.subject.clone(), NodeKind::Untyped);
                graph.nodes.insert(t.value.clone(), NodeKind::Untyped);
                if let vocab::SlotRole::Edge(family) = role {
                    graph.edges.insert(Edge {
                        from: t.subject.clone(),
                        slot: t.slot.clone(),
                        to: t.value.clone(),
                        family,
                    });
                }
            }
        }
    }
    (graph, diags)
}

/// Allowed `(source, target)` kinds for an edge slot.
fn endpoint_ok(slot: &str, family: EdgeFamily, from: NodeKind, to: NodeKind) -> bool {
    use NodeKind::*;
    match family {
        EdgeFamily::Ordering => from == Event && to == Event,
        EdgeFamily::Compositional => match slot {
            vocab::SUBEVENT | vocab::FIRST_SUBEVENT | vocab::LAST_SUBEVENT => {
                from == Event && to == Event
            }
            _ => from == Entity && to == Entity,
        },
        EdgeFamily::Participant => from == Event && to == Entity,
        EdgeFamily::Locational => from == Entity && to == Event,
        EdgeFamily::Class => match slot {
            vocab::SUPERCLASS => from == Class && to == Class,
            _ => matches!(from, Event | Entity) && to == Class,
        },
    }
}

/// Types the UDG nodes, checks edge endpoint kinds and verifies that the
/// compositional, locational and participant edges form no directed cycle.
///
/// Untyped nodes are left out, edges violating endpoint kinds are dropped
/// (each with a diagnostic), and a locational edge written event-first is
/// turned around.
pub fn build_kdg(
    udg: &DescriptionGraph,
    typing: &NodeTyping,
) -> Result<(DescriptionGraph, Vec<Diagnostic>)> {
    let mut diags = Vec::new();
    let mut kdg = DescriptionGraph::empty(Variant::Kdg);
    for node in udg.nodes.keys() {
        match typing.get(node).copied().unwrap_or(NodeKind::Untyped) {
            NodeKind::Untyped => diags.push(Diagnostic::warn(
                codes::UNTYPED_NODE,
                format!("`{node}` is neither event, entity nor class; left out of the KDG"),
            )),
            kind => {
                kdg.nodes.insert(node.clone(), kind);
            }
        }
    }
    for e in &udg.edges {
        let (Some(&from), Some(&to)) = (kdg.nodes.get(&e.from), kdg.nodes.get(&e.to)) else {
            continue;
        };
        if endpoint_ok(e.slot.as_str(), e.family, from, to) {
            kdg.edges.insert(e.clone());
        } else if e.family == EdgeFamily::Locational
            && endpoint_ok(e.slot.as_str(), e.family, to, from)
        {
            diags.push(Diagnostic::warn(
                codes::HAPPENINGS_SUBJECT_FIRST,
                format!(
                    "has({}, {}, {}) names the event first; edge reversed",
                    e.from, e.slot, e.to
                ),
            ));
            kdg.edges.insert(Edge {
                from: e.to.clone(),
                slot: e.slot.clone(),
                to: e.from.clone(),
                family: e.family,
            });
        } else {
            diags.push(Diagnostic::warn(
                codes::ENDPOINT_CONSTRAINT,
                format!(
                    "{} edge {} -[{}]-> {} joins {} to {}; dropped",
                    e.family,
                    e.from,
                    e.slot,
                    e.to,
                    from.as_str(),
                    to.as_str()
                ),
            ));
        }
    }
    let structural = kdg.adjacency(|e| e.family.is_structural());
    if let Some(cycle) = find_cycle(&structural) {
        return Err(Error::KdgCycle(cycle));
    }
    Ok((kdg, diags))
}

/// The subgraph rooted at `root`: every node reachable through
/// compositional, class, locational or participant edges, together with
/// all edges of `graph` (ordering edges included) between those nodes.
pub fn rooted_subgraph(graph: &DescriptionGraph, root: &str) -> Result<DescriptionGraph> {
    if !graph.contains_node(root) {
        return Err(Error::UnknownNode(root.to_owned()));
    }
    let nodes = graph.reachable(root, |e| e.family.is_traversed_from_root());
    Ok(graph.induced(&nodes))
}
