//! Recovery of missing event structure: event typing, next events,
//! first/last subevents, event kinds and IO relations.
//!
//! The stages run in a fixed order, each reading only what earlier stages
//! completed:
//!
//! typing -> next_event -> first/last subevent -> kind -> IO -> propagation
//! -> default output location
//!
//! Every stage only adds facts, and each derived fact records the id of the
//! rule that produced it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::diag::{codes, Diagnostic};
use crate::graph::{DescriptionGraph, NodeKind, NodeTyping};
use crate::ident::{id, Ident};
use crate::store::{KnowledgeStore, Triple};
use crate::taxonomy::ClassHierarchy;
use crate::vocab::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Transport,
    Operational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IoRole {
    Input,
    Output,
    InputLocation,
    OutputLocation,
}

impl IoRole {
    pub const ALL: [IoRole; 4] = [
        IoRole::Input,
        IoRole::Output,
        IoRole::InputLocation,
        IoRole::OutputLocation,
    ];

    pub fn slot(self) -> &'static str {
        match self {
            IoRole::Input => INPUT,
            IoRole::Output => OUTPUT,
            IoRole::InputLocation => INPUT_LOCATION,
            IoRole::OutputLocation => OUTPUT_LOCATION,
        }
    }

    pub fn from_slot(slot: &str) -> Option<IoRole> {
        IoRole::ALL.into_iter().find(|r| r.slot() == slot)
    }

    /// Input-side roles come from the first subevent, output-side roles from the last.
    pub fn is_input_side(self) -> bool {
        matches!(self, IoRole::Input | IoRole::InputLocation)
    }
}

/// One IO relation obtained from a concrete slot of an event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct IoRelation {
    pub event: Ident,
    pub role: IoRole,
    pub value: Ident,
    pub via_slot: Ident,
}

/// How concrete slots map to IO relations, per event kind, with the id of
/// the rule implementing each row.
pub const IO_TABLE: [(EventKind, IoRole, &str, &str); 11] = [
    (EventKind::Operational, IoRole::Input, OBJECT, "i1"),
    (EventKind::Operational, IoRole::Input, BASE, "i2"),
    (EventKind::Operational, IoRole::Input, RAW_MATERIAL, "i3"),
    (EventKind::Operational, IoRole::Output, RESULT, "i4"),
    (EventKind::Operational, IoRole::InputLocation, SITE, "i5"),
    (EventKind::Transport, IoRole::Input, OBJECT, "i6"),
    (EventKind::Transport, IoRole::Output, OBJECT, "i7"),
    (EventKind::Transport, IoRole::InputLocation, BASE, "i8"),
    (EventKind::Transport, IoRole::InputLocation, ORIGIN, "i9"),
    (EventKind::Transport, IoRole::OutputLocation, DESTINATION, "i10"),
    (EventKind::Operational, IoRole::OutputLocation, DESTINATION, "i24"),
];

/// Slots copied from a first (input side) or last (output side) subevent to
/// its parent, gated on the parent's kind, with their rule ids.
const SLOT_COPIES: [(bool, EventKind, &str, &str); 11] = [
    (true, EventKind::Transport, OBJECT, "i12"),
    (true, EventKind::Operational, OBJECT, "i14"),
    (true, EventKind::Transport, BASE, "i15"),
    (true, EventKind::Operational, BASE, "i15"),
    (true, EventKind::Operational, RAW_MATERIAL, "i16"),
    (true, EventKind::Transport, ORIGIN, "i17"),
    (true, EventKind::Operational, SITE, "i18"),
    (false, EventKind::Transport, OBJECT, "i21"),
    (false, EventKind::Operational, RESULT, "i22"),
    (false, EventKind::Transport, DESTINATION, "i23"),
    (false, EventKind::Operational, DESTINATION, "i23"),
];

/// IO relations copied from a first/last subevent, with their rule ids.
const IO_COPIES: [(IoRole, &str); 4] = [
    (IoRole::Input, "i11"),
    (IoRole::InputLocation, "i13"),
    (IoRole::Output, "i19"),
    (IoRole::OutputLocation, "i20"),
];

#[derive(Debug, Clone, Default)]
pub struct TypingOutcome {
    pub typing: NodeTyping,
    /// `instance_of event` / `instance_of entity` facts written back.
    pub added: Vec<Triple>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TypingOutcome {
    pub fn events(&self) -> impl Iterator<Item = &Ident> {
        self.typing
            .iter()
            .filter(|(_, k)| **k == NodeKind::Event)
            .map(|(n, _)| n)
    }

    pub fn is_event(&self, node: &str) -> bool {
        self.typing.get(node) == Some(&NodeKind::Event)
    }
}

#[derive(Default)]
struct Evidence {
    event_rule: Option<u8>,
    entity_rule: Option<u8>,
    class: bool,
}

impl Evidence {
    fn event(&mut self, rule: u8) {
        self.event_rule = Some(self.event_rule.map_or(rule, |r| r.min(rule)));
    }
    fn entity(&mut self, rule: u8) {
        self.entity_rule = Some(self.entity_rule.map_or(rule, |r| r.min(rule)));
    }
}

/// Types every UDG node as event, entity, class or untyped and writes the
/// implied `instance_of event` / `instance_of entity` facts back.
///
/// A node is an event when it has an outgoing participant or ordering edge,
/// an incoming locational or ordering edge, a subevent or first-subevent
/// edge in either direction, or a class path to `event`. It is an entity
/// when one of its classes descends from `entity` or it is the target of a
/// participant edge. Targets of `instance_of` and endpoints of `superclass`
/// are classes. Class typing wins over the others, and event typing wins
/// over entity typing; both conflicts are reported.
pub fn infer_event_typing(
    store: &mut KnowledgeStore,
    hierarchy: &ClassHierarchy,
    udg: &DescriptionGraph,
) -> TypingOutcome {
    let vocab = SlotVocabulary;
    let mut evidence: BTreeMap<Ident, Evidence> = BTreeMap::new();
    let mut happenings = Vec::new();
    for t in store.triples() {
        let Some(family) = vocab.family(t.slot.as_str()) else {
            continue;
        };
        let slot = t.slot.as_str();
        match family {
            EdgeFamily::Participant => {
                evidence.entry(t.subject.clone()).or_default().event(3);
                evidence.entry(t.value.clone()).or_default().entity(15);
            }
            EdgeFamily::Ordering => {
                evidence.entry(t.subject.clone()).or_default().event(8);
                evidence.entry(t.value.clone()).or_default().event(4);
            }
            EdgeFamily::Locational => {
                evidence.entry(t.value.clone()).or_default().event(9);
                happenings.push(t.clone());
            }
            EdgeFamily::Compositional if slot == SUBEVENT => {
                evidence.entry(t.subject.clone()).or_default().event(10);
                evidence.entry(t.value.clone()).or_default().event(11);
            }
            EdgeFamily::Compositional if slot == FIRST_SUBEVENT => {
                evidence.entry(t.subject.clone()).or_default().event(12);
                evidence.entry(t.value.clone()).or_default().event(13);
            }
            EdgeFamily::Compositional => {}
            EdgeFamily::Class if slot == INSTANCE_OF => {
                evidence.entry(t.value.clone()).or_default().class = true;
                let class = t.value.as_str();
                let subject = evidence.entry(t.subject.clone()).or_default();
                if class == EVENT {
                    subject.event(1);
                } else if hierarchy.is_ancestor(EVENT, class) {
                    subject.event(5);
                }
                if class == ENTITY {
                    subject.entity(2);
                } else if hierarchy.is_ancestor(ENTITY, class) {
                    subject.entity(14);
                }
            }
            EdgeFamily::Class => {
                evidence.entry(t.subject.clone()).or_default().class = true;
                evidence.entry(t.value.clone()).or_default().class = true;
            }
        }
    }

    let mut outcome = TypingOutcome::default();
    for node in udg.nodes.keys() {
        let ev = evidence.remove(node).unwrap_or_default();
        let kind = if ev.class {
            if ev.event_rule.is_some() || ev.entity_rule.is_some() {
                outcome.diagnostics.push(Diagnostic::warn(
                    codes::TYPING_CONFLICT,
                    format!("`{node}` is used as a class and as an instance; typed class"),
                ));
            }
            NodeKind::Class
        } else if let Some(rule) = ev.event_rule {
            if ev.entity_rule.is_some() {
                outcome.diagnostics.push(Diagnostic::warn(
                    codes::TYPING_CONFLICT,
                    format!("`{node}` has both event and entity evidence; typed event"),
                ));
            }
            let t = Triple::new(node.clone(), id(INSTANCE_OF), id(EVENT));
            if store.add_derived(t.clone(), &format!("t{rule}")) {
                outcome.added.push(t);
            }
            NodeKind::Event
        } else if let Some(rule) = ev.entity_rule {
            let t = Triple::new(node.clone(), id(INSTANCE_OF), id(ENTITY));
            if store.add_derived(t.clone(), &format!("t{rule}")) {
                outcome.added.push(t);
            }
            NodeKind::Entity
        } else {
            NodeKind::Untyped
        };
        outcome.typing.insert(node.clone(), kind);
    }

    for t in happenings {
        let value_is_entity_class = store
            .values(t.value.as_str(), INSTANCE_OF)
            .iter()
            .any(|c| hierarchy.is_a(c.as_str(), ENTITY));
        let subject_is_event = store
            .values(t.subject.as_str(), INSTANCE_OF)
            .iter()
            .any(|c| hierarchy.is_a(c.as_str(), EVENT));
        if value_is_entity_class && subject_is_event {
            outcome.diagnostics.push(Diagnostic::warn(
                codes::HAPPENINGS_SUBJECT_FIRST,
                format!("{t} looks event-first; `{}` is typed event by the locational edge", t.value),
            ));
        }
    }
    outcome
}

/// `next_event` facts for every `enables`/`causes`/`prevents`/`inhibits` edge.
pub fn derive_next_events(store: &mut KnowledgeStore) -> Vec<Triple> {
    let implied: Vec<Triple> = NEXT_EVENT_SOURCES
        .iter()
        .flat_map(|slot| store.with_slot(slot))
        .map(|t| Triple::new(t.subject.clone(), id(NEXT_EVENT), t.value.clone()))
        .collect();
    implied
        .into_iter()
        .filter(|t| store.add_derived(t.clone(), "e2"))
        .collect()
}

/// Subevent sets per parent, in canonical order.
pub fn subevent_sets(store: &KnowledgeStore) -> BTreeMap<Ident, BTreeSet<Ident>> {
    let mut sets: BTreeMap<Ident, BTreeSet<Ident>> = BTreeMap::new();
    for t in store.with_slot(SUBEVENT) {
        sets.entry(t.subject.clone())
            .or_default()
            .insert(t.value.clone());
    }
    sets
}

/// Whether the `next_event` edges among `members` (self-loops excluded)
/// form one simple chain through all of them.
pub fn is_single_chain(store: &KnowledgeStore, members: &BTreeSet<Ident>) -> bool {
    if members.len() < 2 {
        return true;
    }
    let mut succ: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    let mut indegree: BTreeMap<&Ident, usize> = members.iter().map(|m| (m, 0)).collect();
    let mut edges = 0;
    for m in members {
        for next in members {
            if next != m && store.has(m.as_str(), NEXT_EVENT, next.as_str()) {
                succ.entry(m).or_default().push(next);
                *indegree.get_mut(next).expect("member") += 1;
                edges += 1;
            }
        }
    }
    if edges != members.len() - 1
        || succ.values().any(|s| s.len() > 1)
        || indegree.values().any(|d| *d > 1)
    {
        return false;
    }
    let mut starts = indegree.iter().filter(|(_, d)| **d == 0).map(|(m, _)| *m);
    let (Some(mut cur), None) = (starts.next(), starts.next()) else {
        return false;
    };
    let mut visited = 1;
    while let Some(next) = succ.get(cur).and_then(|s| s.first()) {
        cur = next;
        visited += 1;
        if visited > members.len() {
            return false;
        }
    }
    visited == members.len()
}

/// First and last subevents: a subevent with no sibling preceding it (by
/// `next_event`) is a first subevent; one with no sibling following it is a
/// last subevent. Parents whose subevents do not form one simple chain are
/// reported, and their facts are still derived.
pub fn derive_first_last_subevents(store: &mut KnowledgeStore) -> (Vec<Triple>, Vec<Diagnostic>) {
    let mut added = Vec::new();
    let mut diags = Vec::new();
    for (parent, members) in subevent_sets(store) {
        let mut new = Vec::new();
        for e in &members {
            let has_predecessor = members.iter().any(|other| {
                other != e && store.has(other.as_str(), NEXT_EVENT, e.as_str())
            });
            let has_successor = members.iter().any(|other| {
                other != e && store.has(e.as_str(), NEXT_EVENT, other.as_str())
            });
            if !has_predecessor {
                new.push((Triple::new(parent.clone(), id(FIRST_SUBEVENT), e.clone()), "e5"));
            }
            if !has_successor {
                new.push((Triple::new(parent.clone(), id(LAST_SUBEVENT), e.clone()), "e6"));
            }
        }
        if !is_single_chain(store, &members) {
            diags.push(Diagnostic::warn(
                codes::BROKEN_CHAIN,
                format!(
                    "subevents of `{parent}` ({}) do not form a single next_event chain",
                    members.iter().map(Ident::as_str).collect::<Vec<_>>().join(", ")
                ),
            ));
        }
        for (t, rule) in new {
            if store.add_derived(t.clone(), rule) {
                added.push(t);
            }
        }
    }
    (added, diags)
}

/// Transport events are those with a class equal to or below one of the
/// transport roots; every other event is operational.
pub fn classify_event_kind<'a>(
    store: &KnowledgeStore,
    hierarchy: &ClassHierarchy,
    events: impl IntoIterator<Item = &'a Ident>,
) -> BTreeMap<Ident, EventKind> {
    events
        .into_iter()
        .map(|e| {
            let transport = store.values(e.as_str(), INSTANCE_OF).iter().any(|c| {
                TRANSPORT_CLASSES
                    .iter()
                    .any(|root| hierarchy.is_a(c.as_str(), root))
            });
            let kind = if transport {
                EventKind::Transport
            } else {
                EventKind::Operational
            };
            (e.clone(), kind)
        })
        .collect()
}

/// Applies the slot-to-IO table to every classified event and records the
/// resulting `input`/`output`/`input_location`/`output_location` facts.
pub fn derive_io_relations(
    store: &mut KnowledgeStore,
    kinds: &BTreeMap<Ident, EventKind>,
) -> BTreeSet<IoRelation> {
    let mut relations = BTreeSet::new();
    for (event, kind) in kinds {
        for (row_kind, role, slot, _) in IO_TABLE {
            if row_kind != *kind {
                continue;
            }
            for value in store.values(event.as_str(), slot) {
                relations.insert(IoRelation {
                    event: event.clone(),
                    role,
                    value: value.clone(),
                    via_slot: id(slot),
                });
            }
        }
    }
    for r in &relations {
        let rule = io_table_rule(kinds[&r.event], r.role, r.via_slot.as_str())
            .expect("relation comes from the table");
        store.add_derived(
            Triple::new(r.event.clone(), id(r.role.slot()), r.value.clone()),
            rule,
        );
    }
    relations
}

/// Copies input-side relations (and their concrete slots) from first
/// subevents, and output-side ones from last subevents, to the parent;
/// repeated to a fixpoint so nested subevent levels propagate. Default
/// output locations are not copied.
pub fn propagate_io(store: &mut KnowledgeStore, kinds: &BTreeMap<Ident, EventKind>) -> Vec<Triple> {
    let mut added = Vec::new();
    loop {
        let mut pending: Vec<(Triple, &'static str)> = Vec::new();
        for (link, input_side) in [(FIRST_SUBEVENT, true), (LAST_SUBEVENT, false)] {
            for t in store.with_slot(link) {
                let (parent, child) = (&t.subject, &t.value);
                let Some(&kind) = kinds.get(parent) else {
                    continue;
                };
                for (role, rule) in IO_COPIES {
                    if role.is_input_side() != input_side {
                        continue;
                    }
                    for v in store.values(child.as_str(), role.slot()) {
                        let own = Triple::new(child.clone(), id(role.slot()), v.clone());
                        if is_default_location(store, &own) {
                            continue;
                        }
                        pending.push((Triple::new(parent.clone(), id(role.slot()), v.clone()), rule));
                    }
                }
                for (side, gate, slot, rule) in SLOT_COPIES {
                    if side != input_side || gate != kind {
                        continue;
                    }
                    for v in store.values(child.as_str(), slot) {
                        pending.push((Triple::new(parent.clone(), id(slot), v.clone()), rule));
                    }
                }
            }
        }
        let mut grew = false;
        for (t, rule) in pending {
            if store.add_derived(t.clone(), rule) {
                added.push(t);
                grew = true;
            }
        }
        // Copied concrete slots yield IO relations on the parent.
        let before = store.len();
        derive_io_relations(store, kinds);
        if store.len() > before {
            grew = true;
        }
        if !grew {
            break;
        }
    }
    added
}

/// Default output locations come after propagation and are not copied up.
fn is_default_location(store: &KnowledgeStore, t: &Triple) -> bool {
    store.provenance(t).and_then(|p| p.rule()) == Some(DEFAULT_LOCATION_RULE)
}

const DEFAULT_LOCATION_RULE: &str = "i25";

/// For each event with an input location and no output location, the
/// input locations also become output locations.
pub fn default_output_location<'a>(
    store: &mut KnowledgeStore,
    events: impl IntoIterator<Item = &'a Ident>,
) -> Vec<Triple> {
    let mut new = Vec::new();
    for e in events {
        if !store.values(e.as_str(), OUTPUT_LOCATION).is_empty() {
            continue;
        }
        for loc in store.values(e.as_str(), INPUT_LOCATION) {
            new.push(Triple::new(e.clone(), id(OUTPUT_LOCATION), loc.clone()));
        }
    }
    new.into_iter()
        .filter(|t| store.add_derived(t.clone(), DEFAULT_LOCATION_RULE))
        .collect()
}

/// Everything the derivation stages produced.
#[derive(Debug, Clone, Default)]
pub struct DerivationReport {
    pub typing: NodeTyping,
    pub kinds: BTreeMap<Ident, EventKind>,
    /// Relations read off concrete slots (after propagation).
    pub io: BTreeSet<IoRelation>,
    pub diagnostics: Vec<Diagnostic>,
}

impl DerivationReport {
    pub fn events(&self) -> impl Iterator<Item = &Ident> {
        self.kinds.keys()
    }
}

/// Runs every stage in order over `store`, which receives all derived facts.
pub fn derive_all(
    store: &mut KnowledgeStore,
    hierarchy: &ClassHierarchy,
    udg: &DescriptionGraph,
) -> DerivationReport {
    let typing = infer_event_typing(store, hierarchy, udg);
    let mut diagnostics = typing.diagnostics.clone();
    derive_next_events(store);
    let (_, chain_diags) = derive_first_last_subevents(store);
    diagnostics.extend(chain_diags);
    let kinds = classify_event_kind(store, hierarchy, typing.events());
    derive_io_relations(store, &kinds);
    propagate_io(store, &kinds);
    let io = derive_io_relations(store, &kinds);
    default_output_location(store, kinds.keys());
    DerivationReport {
        typing: typing.typing,
        kinds,
        io,
        diagnostics,
    }
}

/// IO facts (`input`, `output`, `input_location`, `output_location`) of an event.
pub fn io_of(store: &KnowledgeStore, event: &str, role: IoRole) -> BTreeSet<Ident> {
    store
        .values(event, role.slot())
        .into_iter()
        .cloned()
        .collect()
}

/// Whether `slot` is one of the concrete IO source slots.
pub fn is_io_source_slot(slot: &str) -> bool {
    IO_TABLE.iter().any(|row| row.2 == slot)
}

/// Rule id of the table row mapping `slot` to `role` for `kind` events.
pub fn io_table_rule(kind: EventKind, role: IoRole, slot: &str) -> Option<&'static str> {
    IO_TABLE
        .iter()
        .find(|(k, r, s, _)| *k == kind && *r == role && *s == slot)
        .map(|row| row.3)
}
