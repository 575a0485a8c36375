//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero when
//! any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use kdgraph::derivation::{self, IoRole};
use kdgraph::linking::{self, Exclusion};
use kdgraph::oracle::differential_check;
use kdgraph::pipeline::{self, Analysis};
use kdgraph::resolution::{min_confidence, Confidence};
use kdgraph::{graph, id, ClassHierarchy, Ident, KnowledgeStore, Triple};

use common::{fixture, random_kb, shape, MAX_FACTS, MAX_INSTANCES, MAX_LEVELS};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn analyze(store: &KnowledgeStore) -> Result<Analysis, String> {
    pipeline::analyze(store, None).map_err(|e| e.to_string())
}

fn triples(items: &[(&str, &str, &str)]) -> BTreeSet<Triple> {
    items.iter().map(|(s, p, v)| Triple::of(s, p, v)).collect()
}

fn show(set: &BTreeSet<Triple>) -> String {
    set.iter().map(Triple::to_string).collect::<Vec<_>>().join(" ")
}

fn photosynthesis() -> Outcome {
    let start = Instant::now();
    let a = analyze(&fixture("photosynthesis"))?;
    let elapsed = start.elapsed();
    let derived: BTreeSet<Triple> = a
        .store
        .derived()
        .filter(|f| f.slot.as_str() != "instance_of")
        .map(|f| f.triple())
        .collect();
    let about_parent: BTreeSet<Triple> = derived
        .iter()
        .filter(|t| t.subject.as_str() == "photosynthesis1" || t.slot.as_str() == "next_event")
        .cloned()
        .collect();
    let expected = triples(&[
        ("photosynthesis1", "first_subevent", "light_reaction1"),
        ("photosynthesis1", "last_subevent", "calvin_cycle1"),
        ("light_reaction1", "next_event", "calvin_cycle1"),
        ("photosynthesis1", "input", "sunlight1"),
        ("photosynthesis1", "raw_material", "sunlight1"),
        ("photosynthesis1", "output", "sugar1"),
        ("photosynthesis1", "result", "sugar1"),
    ]);
    ensure(about_parent == expected, format!("got {}", show(&about_parent)))?;
    // The subevents' own IO relations are the only other derived facts.
    let rest: BTreeSet<Triple> = derived.difference(&expected).cloned().collect();
    let subevent_io = triples(&[
        ("light_reaction1", "input", "sunlight1"),
        ("calvin_cycle1", "output", "sugar1"),
    ]);
    ensure(rest == subevent_io, format!("unexpected extra facts {}", show(&rest)))?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("7 facts exact, {elapsed:?}"))
}

/// Rows of the slot-to-IO table, written out independently of the engine.
const TABLE: &[(bool, &str, &str)] = &[
    // (transport, slot, role)
    (false, "object", "input"),
    (false, "base", "input"),
    (false, "raw_material", "input"),
    (false, "result", "output"),
    (false, "site", "input_location"),
    (false, "destination", "output_location"),
    (true, "object", "input"),
    (true, "object", "output"),
    (true, "base", "input_location"),
    (true, "origin", "input_location"),
    (true, "destination", "output_location"),
];

fn eukaryote_io() -> Outcome {
    let start = Instant::now();
    let a = analyze(&fixture("eukaryote"))?;
    let elapsed = start.elapsed();
    let io_roles = ["input", "output", "input_location", "output_location"];
    let expected = triples(&[
        ("synthesis_of_rna1", "input", "dna_strand19497"),
        ("synthesis_of_rna1", "output", "mrna22911"),
        ("synthesis_of_rna1", "input_location", "nucleus16421"),
        ("synthesis_of_rna1", "output_location", "cytoplasm322"),
        ("eukaryotic_translation1", "input", "mrna4642"),
        ("eukaryotic_translation1", "output", "protein1"),
        ("eukaryotic_translation1", "input_location", "cytosol987"),
        ("eukaryotic_translation1", "output_location", "cytosol987"),
        ("move_out1", "input", "mrna22911"),
        ("move_out1", "output", "mrna22911"),
        ("move_out1", "input_location", "nucleus16421"),
        ("move_out1", "output_location", "cytoplasm322"),
        ("eukaryotic_transcription1", "input", "dna_strand19497"),
        ("eukaryotic_transcription1", "output", "pre_mrna1234"),
        ("eukaryotic_transcription1", "input_location", "nucleus16421"),
        ("eukaryotic_transcription1", "output_location", "nucleus16421"),
    ]);
    let focus: BTreeSet<&str> = expected.iter().map(|t| t.subject.as_str()).collect();
    let got: BTreeSet<Triple> = a
        .store
        .triples()
        .filter(|t| focus.contains(t.subject.as_str()) && io_roles.contains(&t.slot.as_str()))
        .cloned()
        .collect();
    ensure(got == expected, format!("IO facts differ: {}", show(&got)))?;

    // Every derived IO fact is justified by the table, by a first/last
    // subevent, or by the default output location.
    let s = &a.store;
    for f in s.derived().filter(|f| io_roles.contains(&f.slot.as_str())) {
        let (e, role, v) = (f.subject.as_str(), f.slot.as_str(), f.value.as_str());
        let transport = a.derivation.kinds.get(e) == Some(&derivation::EventKind::Transport);
        let by_table = TABLE
            .iter()
            .any(|(t, slot, r)| *t == transport && *r == role && s.has(e, slot, v));
        let link = if role.starts_with("input") { "first_subevent" } else { "last_subevent" };
        let by_subevent = s.values(e, link).iter().any(|c| s.has(c.as_str(), role, v));
        let by_default = role == "output_location"
            && s.has(e, "input_location", v)
            && s.values(e, "output_location").iter().all(|o| {
                s.provenance(&Triple::new(id(e), id("output_location"), (*o).clone()))
                    .and_then(|p| p.rule())
                    == Some("i25")
            });
        ensure(by_table || by_subevent || by_default, format!("spurious {}", f.triple()))?;
    }
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    let n = derivation::io_of(s, "synthesis_of_rna1", IoRole::Output).len();
    Ok(format!("16 IO facts exact, no spurious IO ({n} output of synthesis), {elapsed:?}"))
}

fn resolution() -> Outcome {
    let a = analyze(&fixture("eukaryote"))?;
    let m = a.matches();
    let (sp, _) = a.spatial(&m);
    let checks = [
        ("match", m.best("mrna4642", "mrna22911"), Confidence::Low),
        ("match", m.best("cytosol234", "cytosol987"), Confidence::Low),
        ("spatial", sp.best("cytoplasm322", "cytosol987"), Confidence::High),
        ("spatial", sp.best("cytosol987", "cytosol234"), Confidence::Low),
        ("spatial", sp.best("cytoplasm322", "cytosol234"), Confidence::Low),
    ];
    for (kind, got, want) in checks {
        ensure(got == Some(want), format!("{kind}: expected {want}, got {got:?}"))?;
    }
    Ok("5 confidence levels exact".into())
}

fn linking_example() -> Outcome {
    let a = analyze(&fixture("eukaryote"))?;
    let report = a.link(None).map_err(|e| e.to_string())?;
    let pair = |x: &str, y: &str| (id(x), id(y));
    let want: BTreeSet<(Ident, Ident)> = [pair("synthesis_of_rna1", "eukaryotic_translation1")].into();
    ensure(report.next.possible == want, format!("possible next events {:?}", report.next.possible))?;
    let reasons = report
        .next
        .excluded
        .get(&pair("move_out1", "eukaryotic_translation1"))
        .ok_or("move_out1 -> eukaryotic_translation1 is not an excluded join")?;
    ensure(
        reasons.iter().any(|r| matches!(r, Exclusion::AncestorOfSourceJoins { ancestor } if ancestor.as_str() == "synthesis_of_rna1")),
        format!("condition 2 not recorded: {reasons:?}"),
    )?;
    let joins: BTreeSet<(Ident, Ident)> = report.joins.iter().map(|j| (j.from.clone(), j.to.clone())).collect();
    for (x, y) in [
        ("alteration_of_mrna_ends1", "rna_splicing1"),
        ("eukaryotic_transcription1", "rna_processing1"),
        ("rna_processing1", "move_out1"),
    ] {
        ensure(joins.contains(&pair(x, y)), format!("missing join {x} -> {y}"))?;
    }
    Ok(format!("1 possible next event, condition 2 recorded, {} joins", joins.len()))
}

fn differential() -> Outcome {
    let start = Instant::now();
    for name in ["photosynthesis", "eukaryote", "listing"] {
        let report = differential_check(&fixture(name), None).map_err(|e| e.to_string())?;
        ensure(report.passes(), format!("{name}:\n{}", report.to_text()))?;
    }
    let mut checked = 0;
    for seed in 0..200u64 {
        let kb = random_kb(seed);
        let (instances, levels) = shape(&kb);
        ensure(
            instances <= MAX_INSTANCES && levels <= MAX_LEVELS && kb.len() <= MAX_FACTS,
            format!("seed {seed} out of bounds: {instances} instances, {levels} levels, {} facts", kb.len()),
        )?;
        let report = differential_check(&kb, None).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(report.passes(), format!("seed {seed}:\n{}", report.to_text()))?;
        checked += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("3 fixtures + {checked} random KBs agree, {elapsed:?}"))
}

fn main_class() -> Outcome {
    let store = fixture("eukaryote");
    let h = ClassHierarchy::from_store(&store).map_err(|e| e.to_string())?;
    let (main, _) = h.main_classes(&store, "dna_strand19497");
    let want: BTreeSet<Ident> = [id("dna_strand"), id("dna_sequence")].into();
    ensure(main == want, format!("got {main:?}"))?;
    Ok("{dna_strand, dna_sequence}".into())
}

fn invariants() -> Outcome {
    // Lattice laws, exhaustively.
    let all = Confidence::ALL;
    for a in all {
        ensure(min_confidence(a, a) == a, "idempotence")?;
        for b in all {
            let m = min_confidence(a, b);
            ensure(m == min_confidence(b, a), "commutativity")?;
            ensure(m <= a && m <= b && (m == a || m == b), "meet")?;
            for c in all {
                ensure(
                    min_confidence(min_confidence(a, b), c) == min_confidence(a, min_confidence(b, c)),
                    "associativity",
                )?;
            }
        }
    }

    // One first and one last subevent under every single-chain parent.
    let mut parents = 0;
    for name in ["photosynthesis", "eukaryote"] {
        let a = analyze(&fixture(name))?;
        for (parent, members) in derivation::subevent_sets(&a.store) {
            if members.len() >= 2 && derivation::is_single_chain(&a.store, &members) {
                parents += 1;
                let firsts = a.store.values(parent.as_str(), "first_subevent").len();
                let lasts = a.store.values(parent.as_str(), "last_subevent").len();
                ensure(firsts == 1 && lasts == 1, format!("{parent}: {firsts} first, {lasts} last"))?;
            }
        }
    }

    // Main classes form an antichain; rooted subgraphs are idempotent.
    for seed in 0..200u64 {
        let kb = random_kb(seed);
        let a = analyze(&kb)?;
        for inst in kdgraph::resolution::instances(&a.store, None) {
            let main = a.hierarchy.main_among(&kdgraph::taxonomy::classes_of(&a.store, inst.as_str()));
            for x in &main {
                for y in &main {
                    ensure(
                        !a.hierarchy.is_ancestor(x.as_str(), y.as_str()),
                        format!("seed {seed}: {x} is above {y} among main classes of {inst}"),
                    )?;
                }
            }
        }
        for node in a.kdg.nodes.keys().take(5) {
            let once = graph::rooted_subgraph(&a.kdg, node.as_str()).map_err(|e| e.to_string())?;
            let twice = graph::rooted_subgraph(&once, node.as_str()).map_err(|e| e.to_string())?;
            ensure(once == twice, format!("seed {seed}: rooting at {node} is not idempotent"))?;
        }
    }

    // Injected 2- and 3-cycles are rejected.
    for len in [2usize, 3] {
        let mut text = String::from("has(part, superclass, entity).\n");
        for i in 0..len {
            text.push_str(&format!("has(p{i}, instance_of, part).\nhas(p{i}, has_part, p{}).\n", (i + 1) % len));
        }
        let store = kdgraph::parse_fact_file(&text, "cycle").map_err(|e| e.to_string())?;
        match pipeline::analyze(&store, None) {
            Err(kdgraph::Error::KdgCycle(c)) => ensure(c.len() == len + 1, format!("cycle {c:?}"))?,
            other => return Err(format!("{len}-cycle not rejected: {:?}", other.map(|_| ()))),
        }
    }
    Ok(format!("lattice laws, {parents} single-chain parents, 200 random KBs, 2- and 3-cycles"))
}

fn round_trip() -> Outcome {
    let source = fixture("eukaryote");
    let a = analyze(&source)?;
    let report = a.link(None).map_err(|e| e.to_string())?;
    let se = report
        .super_events
        .iter()
        .find(|s| s.members == [id("synthesis_of_rna1"), id("eukaryotic_translation1")])
        .ok_or("no super-event over the recovered chain")?;
    let name = se.name.as_str();
    // Re-derive with the full patch, and with only its structural facts so
    // the first and last subevents must be derived again.
    for keep_ends in [true, false] {
        let mut store = source.clone();
        let patch = report.patch().filtered(|t| {
            keep_ends || !matches!(t.slot.as_str(), "first_subevent" | "last_subevent")
        });
        store.extend_from(&patch);
        let b = analyze(&store)?;
        let firsts = b.store.values(name, "first_subevent");
        let lasts = b.store.values(name, "last_subevent");
        ensure(
            firsts.len() == 1 && firsts[0].as_str() == "synthesis_of_rna1",
            format!("first subevents {firsts:?}"),
        )?;
        ensure(
            lasts.len() == 1 && lasts[0].as_str() == "eukaryotic_translation1",
            format!("last subevents {lasts:?}"),
        )?;
        let closure = linking::subevent_closure(&b.store).map_err(|e| e.to_string())?;
        ensure(closure.contains(name, "eukaryotic_transcription1"), "super-event is not an ancestor")?;
    }
    Ok(format!("{name}: first synthesis_of_rna1, last eukaryotic_translation1"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("photosynthesis derivation", photosynthesis),
        ("eukaryote IO completion", eukaryote_io),
        ("entity resolution", resolution),
        ("event linking", linking_example),
        ("engine/oracle agreement", differential),
        ("main classes", main_class),
        ("invariant suites", invariants),
        ("super-event round trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
