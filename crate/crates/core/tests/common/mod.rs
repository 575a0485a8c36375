//! Shared helpers: fixture loading and a seeded random knowledge-base
//! generator.

#![allow(dead_code)]

use std::collections::BTreeSet;

use kdgraph::{parse_fact_file, KnowledgeStore, Triple};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_INSTANCES: usize = 30;
pub const MAX_LEVELS: usize = 5;
pub const MAX_FACTS: usize = 60;

pub fn fixture_text(name: &str) -> String {
    let path = format!("{}/fixtures/{name}.facts", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn fixture(name: &str) -> KnowledgeStore {
    parse_fact_file(&fixture_text(name), name).expect("fixture parses")
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}.facts", env!("CARGO_MANIFEST_DIR"))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Event,
    Entity,
    Location,
    Bare,
}

/// A random knowledge base: a class hierarchy of at most five levels below
/// `thing`, at most 30 instances, at most 60 facts, acyclic subevents and
/// structure, no `happenings` facts.
pub fn random_kb(seed: u64) -> KnowledgeStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<(String, usize, Kind)> = vec![
        ("thing".into(), 0, Kind::Bare),
        ("event".into(), 1, Kind::Event),
        ("entity".into(), 1, Kind::Entity),
        ("spatial_entity".into(), 2, Kind::Location),
    ];
    let mut facts: Vec<Triple> = vec![
        Triple::of("event", "superclass", "thing"),
        Triple::of("entity", "superclass", "thing"),
        Triple::of("spatial_entity", "superclass", "entity"),
    ];
    if rng.random_bool(0.5) {
        classes.push(("move_into".into(), 2, Kind::Event));
        facts.push(Triple::of("move_into", "superclass", "event"));
    }
    for i in 0..rng.random_range(0..=6usize) {
        let candidates: Vec<usize> = (0..classes.len())
            .filter(|&c| classes[c].1 < MAX_LEVELS - 1)
            .collect();
        let parent = candidates[rng.random_range(0..candidates.len())];
        let (pname, pdepth, pkind) = classes[parent].clone();
        let kind = if pkind == Kind::Bare { Kind::Entity } else { pkind };
        let name = format!("c{i}");
        facts.push(Triple::of(&name, "superclass", &pname));
        if rng.random_bool(0.15) {
            let other = rng.random_range(0..classes.len());
            if other != parent && classes[other].2 == kind && classes[other].1 <= pdepth {
                facts.push(Triple::of(&name, "superclass", &classes[other].0));
            }
        }
        classes.push((name, pdepth + 1, kind));
    }

    let n = rng.random_range(3..=16usize).min(MAX_INSTANCES);
    let mut instances: Vec<(String, Kind)> = Vec::new();
    for i in 0..n {
        let kind = match rng.random_range(0..10) {
            0..=3 => Kind::Event,
            4..=6 => Kind::Entity,
            7..=8 => Kind::Location,
            _ => Kind::Bare,
        };
        let name = format!("x{i}");
        let pool: Vec<&(String, usize, Kind)> = classes
            .iter()
            .filter(|c| c.2 == kind)
            .collect();
        let classes_for = if kind == Kind::Bare {
            vec![]
        } else {
            let mut picked = vec![pool[rng.random_range(0..pool.len())].0.clone()];
            if rng.random_bool(0.2) {
                picked.push(pool[rng.random_range(0..pool.len())].0.clone());
            }
            picked
        };
        for c in classes_for {
            facts.push(Triple::of(&name, "instance_of", &c));
        }
        instances.push((name, kind));
    }

    let of_kind = |k: Kind| -> Vec<usize> {
        (0..instances.len()).filter(|&i| instances[i].1 == k).collect()
    };
    let events = of_kind(Kind::Event);
    let things: Vec<usize> = (0..instances.len())
        .filter(|&i| matches!(instances[i].1, Kind::Entity | Kind::Location))
        .collect();
    let locations = of_kind(Kind::Location);
    let pick = |rng: &mut ChaCha8Rng, v: &[usize]| v[rng.random_range(0..v.len())];

    let budget = rng.random_range(facts.len()..=MAX_FACTS);
    let mut attempts = 0;
    while facts.len() < budget && attempts < 200 {
        attempts += 1;
        let t = match rng.random_range(0..10) {
            0..=1 if events.len() >= 2 => {
                let (a, b) = (pick(&mut rng, &events), pick(&mut rng, &events));
                if a >= b {
                    continue;
                }
                Triple::of(&instances[a].0, "subevent", &instances[b].0)
            }
            2 if events.len() >= 2 => {
                let (a, b) = (pick(&mut rng, &events), pick(&mut rng, &events));
                if a == b {
                    continue;
                }
                let slot = ["next_event", "enables", "causes"][rng.random_range(0..3)];
                Triple::of(&instances[a].0, slot, &instances[b].0)
            }
            3..=6 if !events.is_empty() && !things.is_empty() => {
                let e = pick(&mut rng, &events);
                let v = pick(&mut rng, &things);
                let slot = if instances[v].1 == Kind::Location {
                    ["site", "base", "origin", "destination", "object"][rng.random_range(0..5)]
                } else {
                    ["object", "result", "raw_material", "base", "agent"][rng.random_range(0..5)]
                };
                Triple::of(&instances[e].0, slot, &instances[v].0)
            }
            7 if locations.len() >= 2 => {
                let (a, b) = (pick(&mut rng, &locations), pick(&mut rng, &locations));
                if a <= b {
                    continue;
                }
                let slot = if rng.random_bool(0.5) { "is_inside" } else { "part_of" };
                Triple::of(&instances[a].0, slot, &instances[b].0)
            }
            8 if things.len() >= 2 => {
                let (a, b) = (pick(&mut rng, &things), pick(&mut rng, &things));
                if a == b {
                    continue;
                }
                Triple::of(&instances[a].0, "cloned_from", &instances[b].0)
            }
            _ => continue,
        };
        if !facts.contains(&t) {
            facts.push(t);
        }
    }

    let mut store = KnowledgeStore::new();
    for t in facts {
        store.insert(t, kdgraph::Provenance::Asserted { file: format!("seed{seed}"), line: 0 });
    }
    store
}

/// Number of instances (subjects of `instance_of`) and of hierarchy levels
/// (classes on the longest superclass chain).
pub fn shape(store: &KnowledgeStore) -> (usize, usize) {
    let instances: BTreeSet<_> = store
        .with_slot("instance_of")
        .into_iter()
        .map(|t| t.subject.clone())
        .collect();
    let h = kdgraph::ClassHierarchy::from_store(store).expect("acyclic hierarchy");
    fn depth(h: &kdgraph::ClassHierarchy, c: &str) -> usize {
        1 + h.parents(c).map(|p| depth(h, p.as_str())).max().unwrap_or(0)
    }
    let levels = h.classes().map(|c| depth(&h, c.as_str())).max().unwrap_or(0);
    (instances.len(), levels)
}
