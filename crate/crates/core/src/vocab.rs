//! Slot vocabulary: which KB slots become graph edges, and of which family.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const INSTANCE_OF: &str = "instance_of";
pub const SUPERCLASS: &str = "superclass";
pub const HAPPENINGS: &str = "happenings";
pub const SUBEVENT: &str = "subevent";
pub const FIRST_SUBEVENT: &str = "first_subevent";
pub const LAST_SUBEVENT: &str = "last_subevent";
pub const HAS_PART: &str = "has_part";
pub const HAS_REGION: &str = "has_region";
pub const HAS_BASIC_STRUCTURAL_UNIT: &str = "has_basic_structural_unit";
pub const NEXT_EVENT: &str = "next_event";
pub const ENABLES: &str = "enables";
pub const CAUSES: &str = "causes";
pub const PREVENTS: &str = "prevents";
pub const INHIBITS: &str = "inhibits";
pub const RAW_MATERIAL: &str = "raw_material";
pub const RESULT: &str = "result";
pub const AGENT: &str = "agent";
pub const DESTINATION: &str = "destination";
pub const INSTRUMENT: &str = "instrument";
pub const ORIGIN: &str = "origin";
pub const SITE: &str = "site";
pub const BASE: &str = "base";
pub const OBJECT: &str = "object";
pub const CLONED_FROM: &str = "cloned_from";
pub const IS_INSIDE: &str = "is_inside";
pub const PART_OF: &str = "part_of";
pub const IMPORTANT: &str = "important";
pub const INPUT: &str = "input";
pub const OUTPUT: &str = "output";
pub const INPUT_LOCATION: &str = "input_location";
pub const OUTPUT_LOCATION: &str = "output_location";

pub const THING: &str = "thing";
pub const EVENT: &str = "event";
pub const ENTITY: &str = "entity";
pub const SPATIAL_ENTITY: &str = "spatial_entity";

/// Classes that carry no discriminating information for main-class purposes.
pub const GENERAL_CLASSES: [&str; 6] = [
    "thing",
    "event",
    "entity",
    "spatial_entity",
    "tangible_entity",
    "chemical_entity",
];

/// Roots of the transport-event subtree.
pub const TRANSPORT_CLASSES: [&str; 3] = ["move_through", "move_into", "move_out_of"];

/// Ordering slots that imply `next_event`.
pub const NEXT_EVENT_SOURCES: [&str; 4] = [ENABLES, CAUSES, PREVENTS, INHIBITS];

pub fn is_general_class(class: &str) -> bool {
    GENERAL_CLASSES.contains(&class)
}

/// The five edge families of a description graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFamily {
    Locational,
    Class,
    Compositional,
    Ordering,
    Participant,
}

impl EdgeFamily {
    pub const ALL: [EdgeFamily; 5] = [
        EdgeFamily::Locational,
        EdgeFamily::Class,
        EdgeFamily::Compositional,
        EdgeFamily::Ordering,
        EdgeFamily::Participant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeFamily::Locational => "locational",
            EdgeFamily::Class => "class",
            EdgeFamily::Compositional => "compositional",
            EdgeFamily::Ordering => "ordering",
            EdgeFamily::Participant => "participant",
        }
    }

    /// Families whose union must stay acyclic in a KDG.
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            EdgeFamily::Compositional | EdgeFamily::Locational | EdgeFamily::Participant
        )
    }

    /// Families followed when collecting a rooted subgraph.
    pub fn is_traversed_from_root(self) -> bool {
        self != EdgeFamily::Ordering
    }
}

impl fmt::Display for EdgeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Slots that are kept in the store but never become graph edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxRole {
    /// `cloned_from`, read by instance matching.
    Cloning,
    /// `is_inside`, `part_of`, read by spatial matching.
    Containment,
    /// `important`, read by why-questions.
    Importance,
    /// Derived IO relations.
    Io,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotRole {
    Edge(EdgeFamily),
    Aux(AuxRole),
}

/// The slot-to-role table. `base` and `object` are treated as participant
/// edges, and `last_subevent` as compositional, so that derived structure
/// survives into the graph.
#[derive(Debug, Clone, Copy, Default)]
pub struct SlotVocabulary;

impl SlotVocabulary {
    pub fn role(&self, slot: &str) -> Option<SlotRole> {
        use EdgeFamily::*;
        let role = match slot {
            HAPPENINGS => SlotRole::Edge(Locational),
            INSTANCE_OF | SUPERCLASS => SlotRole::Edge(Class),
            SUBEVENT | FIRST_SUBEVENT | LAST_SUBEVENT | HAS_PART | HAS_REGION
            | HAS_BASIC_STRUCTURAL_UNIT => SlotRole::Edge(Compositional),
            NEXT_EVENT | ENABLES | CAUSES | PREVENTS | INHIBITS => SlotRole::Edge(Ordering),
            RAW_MATERIAL | RESULT | AGENT | DESTINATION | INSTRUMENT | ORIGIN | SITE | BASE
            | OBJECT => SlotRole::Edge(Participant),
            CLONED_FROM => SlotRole::Aux(AuxRole::Cloning),
            IS_INSIDE | PART_OF => SlotRole::Aux(AuxRole::Containment),
            IMPORTANT => SlotRole::Aux(AuxRole::Importance),
            INPUT | OUTPUT | INPUT_LOCATION | OUTPUT_LOCATION => SlotRole::Aux(AuxRole::Io),
            _ => return None,
        };
        Some(role)
    }

    pub fn family(&self, slot: &str) -> Option<EdgeFamily> {
        match self.role(slot)? {
            SlotRole::Edge(f) => Some(f),
            SlotRole::Aux(_) => None,
        }
    }

    pub fn is_known(&self, slot: &str) -> bool {
        self.role(slot).is_some()
    }

    /// Every slot with a role, in a fixed order.
    pub fn slots(&self) -> &'static [&'static str] {
        &[
            HAPPENINGS,
            INSTANCE_OF,
            SUPERCLASS,
            SUBEVENT,
            FIRST_SUBEVENT,
            LAST_SUBEVENT,
            HAS_PART,
            HAS_REGION,
            HAS_BASIC_STRUCTURAL_UNIT,
            NEXT_EVENT,
            ENABLES,
            CAUSES,
            PREVENTS,
            INHIBITS,
            RAW_MATERIAL,
            RESULT,
            AGENT,
            DESTINATION,
            INSTRUMENT,
            ORIGIN,
            SITE,
            BASE,
            OBJECT,
            CLONED_FROM,
            IS_INSIDE,
            PART_OF,
            IMPORTANT,
            INPUT,
            OUTPUT,
            INPUT_LOCATION,
            OUTPUT_LOCATION,
        ]
    }
}
