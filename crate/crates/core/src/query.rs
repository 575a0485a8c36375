//! Answer structures for How/Why questions, extracted from a KDG.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{dot_edge_style, dot_shape, DescriptionGraph, Edge, NodeKind, Variant};
use crate::ident::Ident;
use crate::resolution::MatchSet;
use crate::store::KnowledgeStore;
use crate::vocab::{EdgeFamily, IMPORTANT, OUTPUT, RESULT};

/// Default bound on the number of edges of an ordering path.
pub const DEFAULT_ORDERING_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRole {
    ComponentPath,
    OrderingPath,
    ImportantPath,
}

/// An `important` link, which lives outside the KDG.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ImportanceEdge {
    pub from: Ident,
    pub to: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathPair {
    pub ancestor: Ident,
    pub to_x: Vec<Ident>,
    pub to_y: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerStructure {
    pub pattern: &'static str,
    pub focus: BTreeSet<Ident>,
    pub graph: DescriptionGraph,
    pub roles: BTreeMap<Edge, BTreeSet<EdgeRole>>,
    /// Lowest common ancestors with their compositional paths (how-related
    /// and why-important only).
    pub ancestors: Vec<PathPair>,
    pub ordering_paths: Vec<Vec<Ident>>,
    pub importance_path: Vec<ImportanceEdge>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Found(AnswerStructure),
    NoAnswer { pattern: &'static str, reason: String },
}

impl Answer {
    pub fn found(&self) -> Option<&AnswerStructure> {
        match self {
            Answer::Found(a) => Some(a),
            Answer::NoAnswer { .. } => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Answer::NoAnswer { pattern, reason } => serde_json::json!({
                "pattern": pattern,
                "answer": false,
                "reason": reason,
            }),
            Answer::Found(a) => {
                let edges: Vec<_> = a
                    .graph
                    .edges
                    .iter()
                    .map(|e| {
                        serde_json::json!({
                            "from": e.from,
                            "slot": e.slot,
                            "to": e.to,
                            "family": e.family,
                            "roles": a.roles.get(e).cloned().unwrap_or_default(),
                        })
                    })
                    .collect();
                serde_json::json!({
                    "pattern": a.pattern,
                    "answer": true,
                    "focus": a.focus,
                    "nodes": a.graph.nodes.iter()
                        .map(|(n, k)| serde_json::json!({"id": n, "kind": k}))
                        .collect::<Vec<_>>(),
                    "edges": edges,
                    "ancestors": a.ancestors,
                    "ordering_paths": a.ordering_paths,
                    "importance_path": a.importance_path,
                    "notes": a.notes,
                })
            }
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        match self {
            Answer::NoAnswer { pattern, reason } => {
                let _ = writeln!(out, "digraph answer {{");
                let _ = writeln!(out, "  label=\"{pattern}: {}\";", reason.replace('"', "'"));
                out.push_str("}\n");
            }
            Answer::Found(a) => {
                let _ = writeln!(out, "digraph answer {{");
                let _ = writeln!(out, "  label=\"{}\";", a.pattern);
                for (node, kind) in &a.graph.nodes {
                    let bold = if a.focus.contains(node) { ", penwidth=2" } else { "" };
                    let _ = writeln!(out, "  \"{node}\" [shape={}{bold}];", dot_shape(*kind));
                }
                for e in &a.graph.edges {
                    let roles = a.roles.get(e);
                    let color = match roles.and_then(|r| r.iter().next()) {
                        Some(EdgeRole::ComponentPath) => ", color=blue",
                        Some(EdgeRole::OrderingPath) => ", color=darkgreen",
                        _ => "",
                    };
                    let _ = writeln!(
                        out,
                        "  \"{}\" -> \"{}\" [label=\"{}\", {}{color}];",
                        e.from,
                        e.to,
                        e.slot,
                        dot_edge_style(e.family)
                    );
                }
                for e in &a.importance_path {
                    let _ = writeln!(
                        out,
                        "  \"{}\" -> \"{}\" [label=\"important\", style=bold, color=red];",
                        e.from, e.to
                    );
                }
                out.push_str("}\n");
            }
        }
        out
    }
}

fn require_node(kdg: &DescriptionGraph, node: &str) -> Result<NodeKind> {
    kdg.kind(node).ok_or_else(|| Error::UnknownNode(node.to_owned()))
}

fn require_event(kdg: &DescriptionGraph, node: &str) -> Result<Ident> {
    match require_node(kdg, node)? {
        NodeKind::Event => Ok(kdg.nodes.get_key_value(node).expect("present").0.clone()),
        _ => Err(Error::NotAnEvent(kdg.nodes.get_key_value(node).expect("present").0.clone())),
    }
}

fn structure(pattern: &'static str, focus: &[&Ident], graph: DescriptionGraph) -> AnswerStructure {
    AnswerStructure {
        pattern,
        focus: focus.iter().map(|n| (*n).clone()).collect(),
        graph,
        roles: BTreeMap::new(),
        ancestors: Vec::new(),
        ordering_paths: Vec::new(),
        importance_path: Vec::new(),
        notes: Vec::new(),
    }
}

/// KDG(x) plus every node joined to x by an ordering edge, with that edge.
pub fn how_occurs(kdg: &DescriptionGraph, x: &str) -> Result<Answer> {
    let x = require_event(kdg, x)?;
    Ok(Answer::Found(occurrence(kdg, &x, "how-occurs", &[&x])))
}

fn occurrence(kdg: &DescriptionGraph, x: &Ident, pattern: &'static str, focus: &[&Ident]) -> AnswerStructure {
    let mut graph = crate::graph::rooted_subgraph(kdg, x.as_str()).expect("x is a node");
    let mut roles: BTreeMap<Edge, BTreeSet<EdgeRole>> = BTreeMap::new();
    for e in kdg.outgoing(x.as_str()).chain(kdg.incoming(x.as_str())) {
        if e.family == EdgeFamily::Ordering {
            for n in [&e.from, &e.to] {
                graph.nodes.insert(n.clone(), kdg.nodes[n]);
            }
            graph.edges.insert(e.clone());
        }
    }
    for e in &graph.edges {
        let role = match e.family {
            EdgeFamily::Compositional => EdgeRole::ComponentPath,
            EdgeFamily::Ordering => EdgeRole::OrderingPath,
            _ => continue,
        };
        roles.entry(e.clone()).or_default().insert(role);
    }
    let mut s = structure(pattern, focus, graph);
    s.roles = roles;
    s
}

/// As [`how_occurs`], provided some output or result of x matches y.
pub fn how_produces(
    kdg: &DescriptionGraph,
    store: &KnowledgeStore,
    matches: &MatchSet,
    x: &str,
    y: &str,
) -> Result<Answer> {
    let x = require_event(kdg, x)?;
    let y = match require_node(kdg, y)? {
        NodeKind::Entity => kdg.nodes.get_key_value(y).expect("present").0.clone(),
        _ => return Err(Error::NotAnEntity(kdg.nodes.get_key_value(y).expect("present").0.clone())),
    };
    let produced: BTreeSet<&Ident> = store
        .values(x.as_str(), OUTPUT)
        .into_iter()
        .chain(store.values(x.as_str(), RESULT))
        .collect();
    let matched = produced.iter().find(|o| {
        **o == &y || matches.best(o.as_str(), y.as_str()).is_some() || matches.best(y.as_str(), o.as_str()).is_some()
    });
    match matched {
        None => Ok(Answer::NoAnswer {
            pattern: "how-produces",
            reason: format!("`{x}` does not produce `{y}`"),
        }),
        Some(o) => {
            let mut s = occurrence(kdg, &x, "how-produces", &[&x, &y]);
            if *o != &y {
                s.notes.push(format!("output `{o}` matches `{y}`"));
            }
            Ok(Answer::Found(s))
        }
    }
}

fn compositional_parents(kdg: &DescriptionGraph) -> BTreeMap<&Ident, BTreeSet<&Ident>> {
    let mut parents: BTreeMap<&Ident, BTreeSet<&Ident>> = BTreeMap::new();
    for e in kdg.edges_of(EdgeFamily::Compositional) {
        parents.entry(&e.to).or_default().insert(&e.from);
    }
    parents
}

/// `node` and everything with a compositional path to it.
fn ancestors_incl<'a>(parents: &BTreeMap<&'a Ident, BTreeSet<&'a Ident>>, node: &'a Ident) -> BTreeSet<&'a Ident> {
    let mut seen = BTreeSet::from([node]);
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        for p in parents.get(n).into_iter().flatten() {
            if seen.insert(*p) {
                stack.push(p);
            }
        }
    }
    seen
}

/// Shortest compositional path from `from` to `to`, ties broken by node order.
fn shortest_path(kdg: &DescriptionGraph, from: &Ident, to: &Ident, family: EdgeFamily) -> Option<Vec<Ident>> {
    let adj = kdg.adjacency(|e| e.family == family);
    let mut prev: BTreeMap<Ident, Ident> = BTreeMap::new();
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(n) = queue.pop_front() {
        if &n == to {
            let mut path = vec![n.clone()];
            let mut cur = &n;
            while let Some(p) = prev.get(cur) {
                path.push(p.clone());
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for next in adj.get(&n).into_iter().flatten() {
            if seen.insert(next.clone()) {
                prev.insert(next.clone(), n.clone());
                queue.push_back(next.clone());
            }
        }
    }
    None
}

/// The first edge (in canonical order) of `family` from `a` to `b`.
fn edge_between<'a>(kdg: &'a DescriptionGraph, a: &'a Ident, b: &Ident, family: EdgeFamily) -> Option<&'a Edge> {
    kdg.outgoing(a.as_str())
        .find(|e| e.to == *b && e.family == family)
}

/// Simple ordering paths with at most `cap` edges that start on one of the
/// two node sets and end on the other, deduplicated by node sequence.
fn ordering_paths(
    kdg: &DescriptionGraph,
    left: &BTreeSet<Ident>,
    right: &BTreeSet<Ident>,
    cap: usize,
) -> Vec<Vec<Ident>> {
    let adj = kdg.adjacency(|e| e.family == EdgeFamily::Ordering);
    let mut found: BTreeSet<Vec<Ident>> = BTreeSet::new();
    for (starts, ends) in [(left, right), (right, left)] {
        for s in starts {
            let mut stack = vec![vec![s.clone()]];
            while let Some(path) = stack.pop() {
                let last = path.last().expect("non-empty");
                if path.len() > 1 && ends.contains(last) {
                    found.insert(path.clone());
                }
                if path.len() > cap {
                    continue;
                }
                for next in adj.get(last).into_iter().flatten() {
                    if !path.contains(next) {
                        let mut longer = path.clone();
                        longer.push(next.clone());
                        stack.push(longer);
                    }
                }
            }
        }
    }
    found.into_iter().collect()
}

/// Minimal common compositional ancestors of x and y, the compositional
/// paths from each to x and y, and the ordering paths linking nodes of
/// those paths.
pub fn how_related(kdg: &DescriptionGraph, x: &str, y: &str, cap: usize) -> Result<Answer> {
    related(kdg, x, y, cap, "how-related")
}

fn related(kdg: &DescriptionGraph, x: &str, y: &str, cap: usize, pattern: &'static str) -> Result<Answer> {
    require_node(kdg, x)?;
    require_node(kdg, y)?;
    let x = kdg.nodes.get_key_value(x).expect("present").0;
    let y = kdg.nodes.get_key_value(y).expect("present").0;
    let parents = compositional_parents(kdg);
    let ax = ancestors_incl(&parents, x);
    let ay = ancestors_incl(&parents, y);
    let common: BTreeSet<&Ident> = ax.intersection(&ay).copied().collect();
    // Lowest: no other common ancestor below it.
    let lowest: Vec<&Ident> = common
        .iter()
        .copied()
        .filter(|c| !common.iter().any(|d| d != c && ancestors_incl(&parents, d).contains(c)))
        .collect();
    if lowest.is_empty() {
        return Ok(Answer::NoAnswer {
            pattern,
            reason: format!("`{x}` and `{y}` have no common compositional ancestor"),
        });
    }

    let mut s = structure(pattern, &[x, y], DescriptionGraph::empty(Variant::Kdg));
    let add_path = |s: &mut AnswerStructure, path: &[Ident], family: EdgeFamily, role: EdgeRole| {
        for n in path {
            s.graph.nodes.insert(n.clone(), kdg.nodes[n]);
        }
        for w in path.windows(2) {
            let e = edge_between(kdg, &w[0], &w[1], family).expect("path follows edges");
            s.graph.edges.insert(e.clone());
            s.roles.entry(e.clone()).or_default().insert(role);
        }
    };
    for z in lowest {
        let to_x = shortest_path(kdg, z, x, EdgeFamily::Compositional).expect("ancestor reaches x");
        let to_y = shortest_path(kdg, z, y, EdgeFamily::Compositional).expect("ancestor reaches y");
        add_path(&mut s, &to_x, EdgeFamily::Compositional, EdgeRole::ComponentPath);
        add_path(&mut s, &to_y, EdgeFamily::Compositional, EdgeRole::ComponentPath);
        let left: BTreeSet<Ident> = to_x.iter().cloned().collect();
        let right: BTreeSet<Ident> = to_y.iter().cloned().collect();
        for p in ordering_paths(kdg, &left, &right, cap) {
            add_path(&mut s, &p, EdgeFamily::Ordering, EdgeRole::OrderingPath);
            if !s.ordering_paths.contains(&p) {
                s.ordering_paths.push(p);
            }
        }
        s.ancestors.push(PathPair {
            ancestor: z.clone(),
            to_x,
            to_y,
        });
    }
    Ok(Answer::Found(s))
}

/// Shortest path of `important` links from x to y in the store.
pub fn importance_path(store: &KnowledgeStore, x: &str, y: &str) -> Option<Vec<ImportanceEdge>> {
    let mut prev: BTreeMap<Ident, Ident> = BTreeMap::new();
    let start = store.with_slot(IMPORTANT).into_iter().find(|t| t.subject == x)?.subject.clone();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        if n == y {
            let mut edges = Vec::new();
            let mut cur = n;
            while let Some(p) = prev.get(&cur) {
                edges.push(ImportanceEdge {
                    from: p.clone(),
                    to: cur.clone(),
                });
                cur = p.clone();
            }
            edges.reverse();
            return Some(edges);
        }
        for next in store.values(n.as_str(), IMPORTANT) {
            if seen.insert(next.clone()) {
                prev.insert(next.clone(), n.clone());
                queue.push_back(next.clone());
            }
        }
    }
    None
}

/// The how-related answer plus a path of `important` links from x to y.
pub fn why_important(
    kdg: &DescriptionGraph,
    store: &KnowledgeStore,
    x: &str,
    y: &str,
    cap: usize,
) -> Result<Answer> {
    let base = related(kdg, x, y, cap, "why-important")?;
    let path = importance_path(store, x, y).filter(|p| !p.is_empty());
    match (base, path) {
        (Answer::Found(mut s), None) => {
            s.notes.push(format!("no path of important links from `{x}` to `{y}`"));
            Ok(Answer::Found(s))
        }
        (answer @ Answer::NoAnswer { .. }, None) => Ok(answer),
        (base, Some(path)) => {
            let mut s = match base {
                Answer::Found(s) => s,
                Answer::NoAnswer { .. } => {
                    let focus: Vec<Ident> = [x, y]
                        .iter()
                        .map(|n| kdg.nodes.get_key_value(*n).expect("checked").0.clone())
                        .collect();
                    structure("why-important", &[&focus[0], &focus[1]], DescriptionGraph::empty(Variant::Kdg))
                }
            };
            for e in &path {
                for n in [&e.from, &e.to] {
                    let kind = kdg.kind(n.as_str()).unwrap_or(NodeKind::Untyped);
                    s.graph.nodes.entry(n.clone()).or_insert(kind);
                }
            }
            s.importance_path = path;
            Ok(Answer::Found(s))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::id;
    use crate::pipeline::analyze;
    use crate::store::parse_fact_file;

    const PHOTO: &str = include_str!("../fixtures/photosynthesis.facts");
    const EUK: &str = include_str!("../fixtures/eukaryote.facts");

    fn analysis(text: &str) -> crate::pipeline::Analysis {
        analyze(&parse_fact_file(text, "t").unwrap(), None).unwrap()
    }

    #[test]
    fn how_occurs_contains_rooted_kdg() {
        let a = analysis(PHOTO);
        let ans = how_occurs(&a.kdg, "photosynthesis1").unwrap();
        let s = ans.found().unwrap();
        let rooted = crate::graph::rooted_subgraph(&a.kdg, "photosynthesis1").unwrap();
        assert!(rooted.is_subgraph_of(&s.graph));
        assert!(s.graph.is_subgraph_of(&a.kdg));
        for n in ["light_reaction1", "calvin_cycle1", "sunlight1", "sugar1"] {
            assert!(s.graph.contains_node(n), "{n}");
        }
        assert!(s.graph.edges.iter().any(|e| e.slot == "enables"));
        assert!(matches!(how_occurs(&a.kdg, "sugar1"), Err(Error::NotAnEvent(_))));
    }

    #[test]
    fn how_occurs_on_lonely_event() {
        let mut kdg = DescriptionGraph::empty(Variant::Kdg);
        kdg.nodes.insert(id("nap1"), NodeKind::Event);
        let ans = how_occurs(&kdg, "nap1").unwrap();
        assert_eq!(ans.found().unwrap().graph, kdg);
    }

    #[test]
    fn how_produces_checks_outputs() {
        let a = analysis(&format!("{PHOTO} has(mrna4642, instance_of, mrna). has(mrna, superclass, rna). has(rna, superclass, entity)."));
        let m = a.matches();
        assert!(how_produces(&a.kdg, &a.store, &m, "photosynthesis1", "sugar1").unwrap().found().is_some());
        assert!(how_produces(&a.kdg, &a.store, &m, "calvin_cycle1", "sugar1").unwrap().found().is_some());
        assert!(matches!(
            how_produces(&a.kdg, &a.store, &m, "photosynthesis1", "mrna4642").unwrap(),
            Answer::NoAnswer { .. }
        ));
    }

    #[test]
    fn how_related_in_rna_synthesis() {
        let a = analysis(EUK);
        let ans = how_related(&a.kdg, "eukaryotic_transcription1", "move_out1", DEFAULT_ORDERING_CAP).unwrap();
        let s = ans.found().unwrap();
        assert_eq!(s.ancestors.len(), 1);
        assert_eq!(s.ancestors[0].ancestor, "synthesis_of_rna1");
        assert!(s
            .ordering_paths
            .contains(&vec![id("eukaryotic_transcription1"), id("rna_processing1"), id("move_out1")]));
        assert!(s.graph.is_subgraph_of(&a.kdg));

        let swapped = how_related(&a.kdg, "move_out1", "eukaryotic_transcription1", DEFAULT_ORDERING_CAP).unwrap();
        assert_eq!(swapped.found().unwrap().graph.nodes, s.graph.nodes);

        let same = how_related(&a.kdg, "move_out1", "move_out1", DEFAULT_ORDERING_CAP).unwrap();
        let same = same.found().unwrap();
        assert_eq!(same.graph.nodes.len(), 1);
        assert!(same.graph.edges.is_empty());
    }

    #[test]
    fn unrelated_nodes_have_no_answer() {
        let a = analysis("has(a1, instance_of, event). has(b1, instance_of, event).");
        assert!(matches!(how_related(&a.kdg, "a1", "b1", 8).unwrap(), Answer::NoAnswer { .. }));
        assert!(matches!(why_important(&a.kdg, &a.store, "a1", "b1", 8).unwrap(), Answer::NoAnswer { .. }));
    }

    #[test]
    fn importance_path_is_added() {
        let a = analysis(&format!("{PHOTO} has(light_reaction1, important, calvin_cycle1)."));
        let ans = why_important(&a.kdg, &a.store, "light_reaction1", "calvin_cycle1", 8).unwrap();
        let s = ans.found().unwrap();
        assert_eq!(s.importance_path.len(), 1);
        assert!(s.notes.is_empty());

        let b = analysis(PHOTO);
        let ans = why_important(&b.kdg, &b.store, "light_reaction1", "calvin_cycle1", 8).unwrap();
        let s = ans.found().unwrap();
        assert!(s.importance_path.is_empty());
        assert_eq!(s.notes.len(), 1);
        let related = how_related(&b.kdg, "light_reaction1", "calvin_cycle1", 8).unwrap();
        assert_eq!(related.found().unwrap().graph, s.graph);
    }

    #[test]
    fn exports_carry_roles() {
        let a = analysis(PHOTO);
        let ans = how_related(&a.kdg, "light_reaction1", "calvin_cycle1", 8).unwrap();
        let json = ans.to_json();
        assert_eq!(json["answer"], true);
        let roles: Vec<_> = json["edges"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|e| e["roles"].as_array().unwrap().clone())
            .collect();
        assert!(roles.contains(&serde_json::json!("component-path")));
        assert!(roles.contains(&serde_json::json!("ordering-path")));
        assert!(ans.to_dot().starts_with("digraph answer {"));
    }
}
