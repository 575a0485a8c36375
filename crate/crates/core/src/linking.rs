//! Joinable events, possible next events and super-event synthesis.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diag::{codes, Diagnostic};
use crate::error::{Error, Result};
use crate::ident::{id, Ident};
use crate::resolution::{Confidence, MatchSet};
use crate::store::{KnowledgeStore, Triple};
use crate::taxonomy::find_cycle;
use crate::vocab::{
    EVENT, FIRST_SUBEVENT, INPUT, INPUT_LOCATION, INSTANCE_OF, LAST_SUBEVENT, NEXT_EVENT, OUTPUT,
    OUTPUT_LOCATION, SUBEVENT,
};

/// A may directly precede B: an output of A matches an input of B and an
/// output location of A spatially matches an input location of B (either
/// direction in both cases). Confidences are the best over qualifying pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct JoinAtom {
    pub from: Ident,
    pub to: Ident,
    pub io_confidence: Confidence,
    pub loc_confidence: Confidence,
}

impl JoinAtom {
    pub fn confidence(&self) -> Confidence {
        self.io_confidence.min(self.loc_confidence)
    }
}

fn either(set: &MatchSet, x: &Ident, y: &Ident) -> Option<Confidence> {
    set.best(x.as_str(), y.as_str()).max(set.best(y.as_str(), x.as_str()))
}

fn best_over(set: &MatchSet, xs: &[&Ident], ys: &[&Ident]) -> Option<Confidence> {
    xs.iter()
        .flat_map(|x| ys.iter().filter_map(move |y| either(set, x, y)))
        .max()
}

/// Every join between two distinct events of `events`.
pub fn joins(
    store: &KnowledgeStore,
    events: &BTreeSet<Ident>,
    matches: &MatchSet,
    spatial: &MatchSet,
) -> BTreeSet<JoinAtom> {
    let mut out = BTreeSet::new();
    for a in events {
        let outputs = store.values(a.as_str(), OUTPUT);
        let out_locs = store.values(a.as_str(), OUTPUT_LOCATION);
        if outputs.is_empty() || out_locs.is_empty() {
            continue;
        }
        for b in events {
            if a == b {
                continue;
            }
            let io = best_over(matches, &outputs, &store.values(b.as_str(), INPUT));
            let loc = best_over(spatial, &out_locs, &store.values(b.as_str(), INPUT_LOCATION));
            if let (Some(io_confidence), Some(loc_confidence)) = (io, loc) {
                out.insert(JoinAtom {
                    from: a.clone(),
                    to: b.clone(),
                    io_confidence,
                    loc_confidence,
                });
            }
        }
    }
    out
}

/// Transitive closure of `subevent`, as (ancestor, descendant) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubeventClosure {
    descendants: BTreeMap<Ident, BTreeSet<Ident>>,
    ancestors: BTreeMap<Ident, BTreeSet<Ident>>,
}

impl SubeventClosure {
    pub fn pairs(&self) -> BTreeSet<(Ident, Ident)> {
        self.descendants
            .iter()
            .flat_map(|(a, ds)| ds.iter().map(move |d| (a.clone(), d.clone())))
            .collect()
    }

    pub fn contains(&self, ancestor: &str, descendant: &str) -> bool {
        self.descendants
            .get(ancestor)
            .is_some_and(|d| d.contains(descendant))
    }

    /// Strict ancestors of `node`.
    pub fn ancestors(&self, node: &str) -> impl Iterator<Item = &Ident> {
        self.ancestors.get(node).into_iter().flatten()
    }

    pub fn is_empty(&self) -> bool {
        self.descendants.is_empty()
    }
}

pub fn subevent_closure(store: &KnowledgeStore) -> Result<SubeventClosure> {
    let mut children: BTreeMap<Ident, BTreeSet<Ident>> = BTreeMap::new();
    for t in store.with_slot(SUBEVENT) {
        children.entry(t.subject.clone()).or_default().insert(t.value.clone());
    }
    if let Some(cycle) = find_cycle(&children) {
        return Err(Error::SubeventCycle(cycle));
    }
    let mut closure = SubeventClosure::default();
    for root in children.keys() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&Ident> = children[root].iter().collect();
        while let Some(n) = stack.pop() {
            if seen.insert(n.clone()) {
                stack.extend(children.get(n).into_iter().flatten());
            }
        }
        for d in &seen {
            closure.ancestors.entry(d.clone()).or_default().insert(root.clone());
        }
        closure.descendants.insert(root.clone(), seen);
    }
    Ok(closure)
}

/// Why a join was rejected as a possible next event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "condition")]
pub enum Exclusion {
    /// A joins `ancestor`, a strict ancestor of B.
    #[serde(rename = "1")]
    JoinsAncestorOfTarget { ancestor: Ident },
    /// `ancestor`, a strict ancestor of A, joins B.
    #[serde(rename = "2")]
    AncestorOfSourceJoins { ancestor: Ident },
    /// A is an ancestor of B.
    #[serde(rename = "3")]
    SourceIsAncestor,
    /// B is an ancestor of A.
    #[serde(rename = "4")]
    TargetIsAncestor,
    /// A and B share `ancestor`.
    #[serde(rename = "5")]
    SharedAncestor { ancestor: Ident },
}

impl Exclusion {
    pub fn condition(&self) -> u8 {
        match self {
            Exclusion::JoinsAncestorOfTarget { .. } => 1,
            Exclusion::AncestorOfSourceJoins { .. } => 2,
            Exclusion::SourceIsAncestor => 3,
            Exclusion::TargetIsAncestor => 4,
            Exclusion::SharedAncestor { .. } => 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NextEvents {
    pub possible: BTreeSet<(Ident, Ident)>,
    /// Every condition that fired for each rejected join, one witness
    /// ancestor per condition.
    pub excluded: BTreeMap<(Ident, Ident), Vec<Exclusion>>,
}

/// Joins that survive all five ancestor-based exclusions.
pub fn possible_next_events<'a>(
    joins: impl IntoIterator<Item = &'a JoinAtom>,
    closure: &SubeventClosure,
) -> NextEvents {
    let pairs: BTreeSet<(&Ident, &Ident)> = joins.into_iter().map(|j| (&j.from, &j.to)).collect();
    let mut out = NextEvents::default();
    for &(a, b) in &pairs {
        let mut reasons = Vec::new();
        if let Some(sb) = closure.ancestors(b.as_str()).find(|sb| pairs.contains(&(a, *sb))) {
            reasons.push(Exclusion::JoinsAncestorOfTarget { ancestor: sb.clone() });
        }
        if let Some(sa) = closure.ancestors(a.as_str()).find(|sa| pairs.contains(&(*sa, b))) {
            reasons.push(Exclusion::AncestorOfSourceJoins { ancestor: sa.clone() });
        }
        if closure.contains(a.as_str(), b.as_str()) {
            reasons.push(Exclusion::SourceIsAncestor);
        }
        if closure.contains(b.as_str(), a.as_str()) {
            reasons.push(Exclusion::TargetIsAncestor);
        }
        let b_ancestors: BTreeSet<&Ident> = closure.ancestors(b.as_str()).collect();
        if let Some(c) = closure.ancestors(a.as_str()).find(|c| b_ancestors.contains(c)) {
            reasons.push(Exclusion::SharedAncestor { ancestor: c.clone() });
        }
        let key = (a.clone(), b.clone());
        if reasons.is_empty() {
            out.possible.insert(key);
        } else {
            out.excluded.insert(key, reasons);
        }
    }
    out
}

const MAX_CHAINS: usize = 1024;

/// Maximal paths over the possible-next-event graph, one per branch.
/// Branching and cycles are reported.
pub fn maximal_chains(possible: &BTreeSet<(Ident, Ident)>) -> (Vec<Vec<Ident>>, Vec<Diagnostic>) {
    let mut succ: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    let mut has_pred: BTreeSet<&Ident> = BTreeSet::new();
    let mut nodes: BTreeSet<&Ident> = BTreeSet::new();
    for (a, b) in possible {
        succ.entry(a).or_default().push(b);
        has_pred.insert(b);
        nodes.insert(a);
        nodes.insert(b);
    }
    let mut diags = Vec::new();
    for (a, next) in &succ {
        if next.len() > 1 {
            diags.push(Diagnostic::info(
                codes::BRANCHING_CHAIN,
                format!(
                    "`{a}` has {} possible next events; one chain per branch",
                    next.len()
                ),
            ));
        }
    }
    let mut chains = Vec::new();
    let mut covered: BTreeSet<&Ident> = BTreeSet::new();
    let mut starts: Vec<&Ident> = nodes.iter().copied().filter(|n| !has_pred.contains(n)).collect();
    loop {
        for start in std::mem::take(&mut starts) {
            // Depth-first walk, each path stops before revisiting a node.
            let mut stack = vec![vec![start]];
            while let Some(path) = stack.pop() {
                let last = *path.last().expect("non-empty");
                let next: Vec<&Ident> = succ
                    .get(last)
                    .into_iter()
                    .flatten()
                    .copied()
                    .filter(|n| !path.contains(n))
                    .collect();
                if next.is_empty() {
                    covered.extend(path.iter().copied());
                    chains.push(path.into_iter().cloned().collect());
                    if chains.len() >= MAX_CHAINS {
                        diags.push(Diagnostic::warn(
                            codes::BRANCHING_CHAIN,
                            format!("stopped after {MAX_CHAINS} chains"),
                        ));
                        return (chains, diags);
                    }
                    continue;
                }
                for n in next.into_iter().rev() {
                    let mut longer = path.clone();
                    longer.push(n);
                    stack.push(longer);
                }
            }
        }
        // Nodes only on cycles have no source; start from the smallest one.
        match nodes.iter().find(|n| !covered.contains(*n)) {
            Some(n) => {
                diags.push(Diagnostic::info(
                    codes::BRANCHING_CHAIN,
                    format!("possible next events through `{n}` form a cycle"),
                ));
                starts.push(n);
            }
            None => break,
        }
    }
    (chains, diags)
}

/// A fresh parent event over a chain, and the facts that describe it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuperEvent {
    pub name: Ident,
    pub members: Vec<Ident>,
    pub facts: Vec<Triple>,
}

const MAX_NAME: usize = 64;
const NAME_PREFIX: usize = 48;

/// `super_` followed by the member names; long names are cut and suffixed
/// with a hash of the full name so they stay unique and stable.
pub fn super_event_name(chain: &[Ident]) -> Ident {
    let full = format!(
        "super_{}",
        chain.iter().map(Ident::as_str).collect::<Vec<_>>().join("_")
    );
    if full.len() <= MAX_NAME {
        return id(&full);
    }
    let digest = Sha256::digest(full.as_bytes());
    let hex: String = digest.iter().take(4).map(|b| format!("{b:02x}")).collect();
    id(&format!("{}_{hex}", &full[..NAME_PREFIX]))
}

fn nodes_of(store: &KnowledgeStore) -> BTreeSet<&Ident> {
    store
        .triples()
        .flat_map(|t| [&t.subject, &t.value])
        .collect()
}

/// Facts creating a parent event over `chain`. The name avoids every node
/// already in the store and every name in `taken`.
pub fn synthesize_super_event(
    store: &KnowledgeStore,
    closure: &SubeventClosure,
    chain: &[Ident],
    taken: &BTreeSet<Ident>,
) -> Result<SuperEvent> {
    if chain.len() < 2 {
        return Err(Error::ChainTooShort(chain.len()));
    }
    for (i, first) in chain.iter().enumerate() {
        for second in &chain[i + 1..] {
            let conflict = if closure.contains(first.as_str(), second.as_str()) {
                Some(first)
            } else if closure.contains(second.as_str(), first.as_str()) {
                Some(second)
            } else {
                let theirs: BTreeSet<&Ident> = closure.ancestors(second.as_str()).collect();
                closure.ancestors(first.as_str()).find(|a| theirs.contains(a))
            };
            if let Some(ancestor) = conflict {
                return Err(Error::ConflictingParentage {
                    ancestor: ancestor.clone(),
                    first: first.clone(),
                    second: second.clone(),
                });
            }
        }
    }

    let existing = nodes_of(store);
    let base = super_event_name(chain);
    let mut name = base.clone();
    let mut n = 2;
    while existing.contains(&name) || taken.contains(&name) {
        name = id(&format!("{base}_{n}"));
        n += 1;
    }

    let mut facts = vec![Triple::new(name.clone(), id(INSTANCE_OF), id(EVENT))];
    facts.extend(
        chain
            .iter()
            .map(|m| Triple::new(name.clone(), id(SUBEVENT), m.clone())),
    );
    facts.extend(
        chain
            .windows(2)
            .map(|w| Triple::new(w[0].clone(), id(NEXT_EVENT), w[1].clone())),
    );
    facts.push(Triple::new(name.clone(), id(FIRST_SUBEVENT), chain[0].clone()));
    facts.push(Triple::new(
        name.clone(),
        id(LAST_SUBEVENT),
        chain[chain.len() - 1].clone(),
    ));
    Ok(SuperEvent {
        name,
        members: chain.to_vec(),
        facts,
    })
}

/// Everything the linking stage reports.
#[derive(Debug, Clone, Default)]
pub struct LinkReport {
    pub joins: BTreeSet<JoinAtom>,
    pub next: NextEvents,
    pub chains: Vec<Vec<Ident>>,
    pub super_events: Vec<SuperEvent>,
    pub diagnostics: Vec<Diagnostic>,
}

impl LinkReport {
    /// Facts of every synthesized super-event, in a patch-ready store.
    pub fn patch(&self) -> KnowledgeStore {
        let mut patch = KnowledgeStore::new();
        for se in &self.super_events {
            for t in &se.facts {
                patch.add_derived(t.clone(), "super_event");
            }
        }
        patch
    }

    pub fn to_json(&self) -> serde_json::Value {
        let excluded: Vec<_> = self
            .next
            .excluded
            .iter()
            .map(|((a, b), reasons)| {
                serde_json::json!({
                    "from": a,
                    "to": b,
                    "conditions": reasons.iter().map(Exclusion::condition).collect::<Vec<_>>(),
                    "reasons": reasons,
                })
            })
            .collect();
        serde_json::json!({
            "joins": self.joins,
            "possible_next_events": self.next.possible.iter()
                .map(|(a, b)| serde_json::json!({"from": a, "to": b}))
                .collect::<Vec<_>>(),
            "excluded": excluded,
            "chains": self.chains,
            "super_events": self.super_events,
        })
    }
}

/// Joins, possible next events, chains and one super-event per chain.
/// With a threshold, joins below it (on the weaker of their two
/// confidences) are dropped before anything else.
pub fn link(
    store: &KnowledgeStore,
    events: &BTreeSet<Ident>,
    matches: &MatchSet,
    spatial: &MatchSet,
    threshold: Option<Confidence>,
) -> Result<LinkReport> {
    let closure = subevent_closure(store)?;
    let mut all = joins(store, events, matches, spatial);
    if let Some(min) = threshold {
        all.retain(|j| j.confidence() >= min);
    }
    let next = possible_next_events(&all, &closure);
    let (chains, mut diagnostics) = maximal_chains(&next.possible);
    let mut super_events = Vec::new();
    let mut taken = BTreeSet::new();
    for chain in &chains {
        match synthesize_super_event(store, &closure, chain, &taken) {
            Ok(se) => {
                taken.insert(se.name.clone());
                super_events.push(se);
            }
            Err(e) => diagnostics.push(Diagnostic::warn(codes::BRANCHING_CHAIN, e.to_string())),
        }
    }
    Ok(LinkReport {
        joins: all,
        next,
        chains,
        super_events,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::parse_fact_file;

    fn store(text: &str) -> KnowledgeStore {
        parse_fact_file(text, "t").unwrap()
    }

    fn ids(names: &[&str]) -> Vec<Ident> {
        names.iter().map(|n| id(n)).collect()
    }

    fn join(a: &str, b: &str) -> JoinAtom {
        JoinAtom {
            from: id(a),
            to: id(b),
            io_confidence: Confidence::Low,
            loc_confidence: Confidence::High,
        }
    }

    #[test]
    fn closure_of_three_chain() {
        let c = subevent_closure(&store("has(a, subevent, b). has(b, subevent, c).")).unwrap();
        let expect: BTreeSet<(Ident, Ident)> = [("a", "b"), ("a", "c"), ("b", "c")]
            .iter()
            .map(|(x, y)| (id(x), id(y)))
            .collect();
        assert_eq!(c.pairs(), expect);
        assert!(subevent_closure(&KnowledgeStore::new()).unwrap().is_empty());
    }

    #[test]
    fn subevent_cycle_is_an_error() {
        let err = subevent_closure(&store("has(a, subevent, b). has(b, subevent, a).")).unwrap_err();
        assert!(matches!(err, Error::SubeventCycle(_)));
    }

    #[test]
    fn exclusions_follow_ancestry() {
        let closure = subevent_closure(&store(
            "has(p, subevent, a). has(p, subevent, b). has(q, subevent, c).",
        ))
        .unwrap();
        let joins = [join("a", "b"), join("p", "x"), join("a", "x"), join("x", "c"), join("x", "q")];
        let next = possible_next_events(&joins, &closure);
        assert_eq!(
            next.excluded[&(id("a"), id("b"))],
            vec![Exclusion::SharedAncestor { ancestor: id("p") }]
        );
        assert_eq!(
            next.excluded[&(id("a"), id("x"))],
            vec![Exclusion::AncestorOfSourceJoins { ancestor: id("p") }]
        );
        assert_eq!(
            next.excluded[&(id("x"), id("c"))],
            vec![Exclusion::JoinsAncestorOfTarget { ancestor: id("q") }]
        );
        assert!(next.possible.contains(&(id("p"), id("x"))));
        assert!(next.possible.contains(&(id("x"), id("q"))));
        assert_eq!(next.possible.len() + next.excluded.len(), joins.len());
    }

    #[test]
    fn chains_split_at_branches() {
        let possible: BTreeSet<(Ident, Ident)> = [("a", "b"), ("b", "c"), ("b", "d")]
            .iter()
            .map(|(x, y)| (id(x), id(y)))
            .collect();
        let (chains, diags) = maximal_chains(&possible);
        assert_eq!(chains, vec![ids(&["a", "b", "c"]), ids(&["a", "b", "d"])]);
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn cycles_still_yield_chains() {
        let possible: BTreeSet<(Ident, Ident)> =
            [("a", "b"), ("b", "a")].iter().map(|(x, y)| (id(x), id(y))).collect();
        let (chains, _) = maximal_chains(&possible);
        assert_eq!(chains, vec![ids(&["a", "b"])]);
    }

    #[test]
    fn super_event_structure() {
        let s = store("has(a, instance_of, event).");
        let closure = SubeventClosure::default();
        let se = synthesize_super_event(&s, &closure, &ids(&["a", "b", "c"]), &BTreeSet::new()).unwrap();
        assert_eq!(se.name, "super_a_b_c");
        let count = |slot: &str| se.facts.iter().filter(|t| t.slot == slot).count();
        assert_eq!(count("subevent"), 3);
        assert_eq!(count("next_event"), 2);
        assert_eq!(count("first_subevent"), 1);
        assert_eq!(count("last_subevent"), 1);
        assert!(matches!(
            synthesize_super_event(&s, &closure, &ids(&["a"]), &BTreeSet::new()),
            Err(Error::ChainTooShort(1))
        ));
    }

    #[test]
    fn conflicting_parentage_is_rejected() {
        let s = store("has(p, subevent, a). has(p, subevent, b).");
        let closure = subevent_closure(&s).unwrap();
        let err = synthesize_super_event(&s, &closure, &ids(&["a", "b"]), &BTreeSet::new()).unwrap_err();
        assert!(matches!(err, Error::ConflictingParentage { ancestor, .. } if ancestor == "p"));
    }

    #[test]
    fn long_names_are_hashed_and_collisions_suffixed() {
        let long: Vec<Ident> = (0..12).map(|i| id(&format!("eukaryotic_event_{i}"))).collect();
        let name = super_event_name(&long);
        assert_eq!(name.as_str().len(), NAME_PREFIX + 9);
        assert_eq!(name, super_event_name(&long));

        let s = store("has(super_a_b, instance_of, event).");
        let se = synthesize_super_event(&s, &SubeventClosure::default(), &ids(&["a", "b"]), &BTreeSet::new())
            .unwrap();
        assert_eq!(se.name, "super_a_b_2");
    }
}
