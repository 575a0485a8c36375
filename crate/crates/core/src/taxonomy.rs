//! Class hierarchy closure and main classes.

use std::collections::{BTreeMap, BTreeSet};

use crate::diag::{codes, Diagnostic};
use crate::error::{Error, Result};
use crate::ident::Ident;
use crate::store::KnowledgeStore;
use crate::vocab::{self, INSTANCE_OF, SUPERCLASS};

/// Superclass edges and their (irreflexive) transitive closure.
#[derive(Debug, Clone, Default)]
pub struct ClassHierarchy {
    parents: BTreeMap<Ident, BTreeSet<Ident>>,
    ancestors: BTreeMap<Ident, BTreeSet<Ident>>,
}

impl ClassHierarchy {
    /// Reads every `superclass` fact of the store. A cycle is an error that
    /// names one offending cycle.
    pub fn from_store(store: &KnowledgeStore) -> Result<Self> {
        let edges = store
            .with_slot(SUPERCLASS)
            .into_iter()
            .map(|t| (t.subject.clone(), t.value.clone()));
        Self::from_edges(edges)
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (Ident, Ident)>) -> Result<Self> {
        let mut parents: BTreeMap<Ident, BTreeSet<Ident>> = BTreeMap::new();
        for (child, parent) in edges {
            parents.entry(parent.clone()).or_default();
            parents.entry(child).or_default().insert(parent);
        }
        if let Some(cycle) = find_cycle(&parents) {
            return Err(Error::HierarchyCycle(cycle));
        }
        let mut ancestors = BTreeMap::new();
        for class in parents.keys() {
            close(class, &parents, &mut ancestors);
        }
        Ok(ClassHierarchy { parents, ancestors })
    }

    /// Every class reachable from `class` by one or more superclass edges.
    pub fn ancestor_classes(&self, class: &str) -> BTreeSet<Ident> {
        self.ancestors.get(class).cloned().unwrap_or_default()
    }

    /// Whether `ancestor` is a strict ancestor of `class`.
    pub fn is_ancestor(&self, ancestor: &str, class: &str) -> bool {
        self.ancestors
            .get(class)
            .is_some_and(|set| set.contains(ancestor))
    }

    /// `class` equals `root` or descends from it.
    pub fn is_a(&self, class: &str, root: &str) -> bool {
        class == root || self.is_ancestor(root, class)
    }

    pub fn classes(&self) -> impl Iterator<Item = &Ident> {
        self.parents.keys()
    }

    pub fn parents(&self, class: &str) -> impl Iterator<Item = &Ident> {
        self.parents.get(class).into_iter().flatten()
    }

    /// Main classes of `inst`: its classes that are neither an ancestor of
    /// another of its classes nor a general class while a non-general class
    /// is present. Unknown instances yield an empty set and a warning.
    pub fn main_classes(
        &self,
        store: &KnowledgeStore,
        inst: &str,
    ) -> (BTreeSet<Ident>, Option<Diagnostic>) {
        let classes = classes_of(store, inst);
        if classes.is_empty() {
            return (
                BTreeSet::new(),
                Some(Diagnostic::warn(
                    codes::UNKNOWN_INSTANCE,
                    format!("`{inst}` has no instance_of facts; no main class"),
                )),
            );
        }
        (self.main_among(&classes), None)
    }

    /// Main classes among an explicit class set.
    pub fn main_among(&self, classes: &BTreeSet<Ident>) -> BTreeSet<Ident> {
        let has_specific = classes.iter().any(|c| !vocab::is_general_class(c.as_str()));
        classes
            .iter()
            .filter(|candidate| {
                !classes.iter().any(|other| {
                    self.is_ancestor(candidate.as_str(), other.as_str())
                        || (has_specific
                            && vocab::is_general_class(candidate.as_str())
                            && !vocab::is_general_class(other.as_str()))
                })
            })
            .cloned()
            .collect()
    }
}

/// Direct `instance_of` classes of an instance.
pub fn classes_of(store: &KnowledgeStore, inst: &str) -> BTreeSet<Ident> {
    store
        .values(inst, INSTANCE_OF)
        .into_iter()
        .cloned()
        .collect()
}

fn close(
    class: &Ident,
    parents: &BTreeMap<Ident, BTreeSet<Ident>>,
    memo: &mut BTreeMap<Ident, BTreeSet<Ident>>,
) -> BTreeSet<Ident> {
    if let Some(done) = memo.get(class) {
        return done.clone();
    }
    let mut out = BTreeSet::new();
    for parent in parents.get(class).into_iter().flatten() {
        out.insert(parent.clone());
        out.extend(close(parent, parents, memo));
    }
    memo.insert(class.clone(), out.clone());
    out
}

/// Finds one directed cycle in an adjacency map, returned closed
/// (`[a, b, a]`). Nodes and successors are visited in sorted order, so the
/// witness is deterministic.
pub(crate) fn find_cycle(adj: &BTreeMap<Ident, BTreeSet<Ident>>) -> Option<Vec<Ident>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&Ident, Mark> = BTreeMap::new();
    for start in adj.keys() {
        if marks.contains_key(start) {
            continue;
        }
        // Iterative DFS: stack of (node, successor iterator).
        let mut path: Vec<&Ident> = vec![start];
        let mut stack: Vec<std::collections::btree_set::Iter<'_, Ident>> = Vec::new();
        marks.insert(start, Mark::Open);
        stack.push(adj.get(start).map(|s| s.iter()).unwrap_or_default());
        while let Some(iter) = stack.last_mut() {
            match iter.next() {
                Some(next) => match marks.get(next) {
                    Some(Mark::Open) => {
                        let from = path.iter().position(|n| *n == next).expect("open node on path");
                        let mut cycle: Vec<Ident> = path[from..].iter().map(|n| (*n).clone()).collect();
                        cycle.push(next.clone());
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(next, Mark::Open);
                        path.push(next);
                        stack.push(adj.get(next).map(|s| s.iter()).unwrap_or_default());
                    }
                },
                None => {
                    stack.pop();
                    let node = path.pop().expect("path tracks stack");
                    marks.insert(node, Mark::Done);
                }
            }
        }
    }
    None
}
