//! End-to-end runs of the `kdgraph` binary.

mod common;

use std::process::{Command, Output};

use common::fixture_path;

fn kdgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdgraph"))
        .args(args)
        .env_remove(kdgraph::cli::VERBOSITY_VAR)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn derive_prints_derived_facts() {
    let o = kdgraph(&["derive", &fixture_path("photosynthesis")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for fact in [
        "has(photosynthesis1, first_subevent, light_reaction1).",
        "has(photosynthesis1, last_subevent, calvin_cycle1).",
        "has(photosynthesis1, input, sunlight1).",
        "has(photosynthesis1, output, sugar1).",
    ] {
        assert!(out.contains(fact), "missing {fact} in\n{out}");
    }
    assert!(!out.contains("has(photosynthesis1, subevent"), "asserted facts are not printed");
}

#[test]
fn derive_output_parses_back() {
    let o = kdgraph(&["derive", "--all", &fixture_path("eukaryote")]);
    assert_eq!(o.status.code(), Some(0));
    let store = kdgraph::parse_fact_file(&stdout(&o), "out").unwrap();
    assert!(store.has("synthesis_of_rna1", "output_location", "cytoplasm322"));
    assert!(store.has("eukaryote1", "has_part", "nucleus16421"));
}

#[test]
fn derive_json() {
    let o = kdgraph(&["derive", "--format", "json", &fixture_path("photosynthesis")]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let facts = v.as_array().unwrap();
    assert!(facts
        .iter()
        .any(|f| f["slot"] == "last_subevent" && f["provenance"]["rule"] == "e6"));
}

#[test]
fn link_names_the_possible_next_event_and_writes_a_patch() {
    let dir = tempfile::tempdir().unwrap();
    let patch = dir.path().join("patch.facts");
    let o = kdgraph(&[
        "link",
        "--patch",
        patch.to_str().unwrap(),
        &fixture_path("eukaryote"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        v["possible_next_events"],
        serde_json::json!([{"from": "synthesis_of_rna1", "to": "eukaryotic_translation1"}])
    );
    let text = std::fs::read_to_string(&patch).unwrap();
    let store = kdgraph::parse_fact_file(&text, "patch").unwrap();
    assert!(store.has(
        "super_synthesis_of_rna1_eukaryotic_translation1",
        "subevent",
        "eukaryotic_translation1"
    ));
    assert!(stderr(&o).contains("WARN broken-chain"));
}

#[test]
fn link_threshold_drops_weak_joins() {
    let o = kdgraph(&["link", "--min-confidence", "high", &fixture_path("eukaryote")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for j in v["joins"].as_array().unwrap() {
        assert_eq!(j["io_confidence"], "high");
        assert_eq!(j["loc_confidence"], "high");
    }
    let bad = kdgraph(&["link", "--min-confidence", "certain", &fixture_path("eukaryote")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn resolve_reports_levels() {
    let o = kdgraph(&["resolve", &fixture_path("eukaryote")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let spatial = v["spatially_match"].as_array().unwrap();
    assert!(spatial.iter().any(|m| m["from"] == "cytoplasm322"
        && m["to"] == "cytosol987"
        && m["confidence"] == "high"));
}

#[test]
fn query_patterns() {
    let path = fixture_path("eukaryote");
    let o = kdgraph(&["query", "--pattern", "how-occurs", "--x", "synthesis_of_rna1", &path]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pattern"], "how-occurs");

    let o = kdgraph(&[
        "query",
        "--pattern",
        "how-related",
        "--x",
        "eukaryotic_transcription1",
        "--y",
        "move_out1",
        "--format",
        "dot",
        &path,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("digraph"));

    let missing_y = kdgraph(&["query", "--pattern", "how-related", "--x", "move_out1", &path]);
    assert_eq!(missing_y.status.code(), Some(2));

    let unknown = kdgraph(&["query", "--pattern", "how-occurs", "--x", "ghost", &path]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(stderr(&unknown).lines().last().unwrap().starts_with("ERROR unknown-node"));
}

#[test]
fn check_passes_on_fixtures() {
    for name in ["photosynthesis", "eukaryote"] {
        let o = kdgraph(&["check", &fixture_path(name)]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).ends_with("PASS\n"));
    }
    let o = kdgraph(&["check", "--format", "json", &fixture_path("eukaryote")]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passes"], true);
}

#[test]
fn export_formats() {
    let path = fixture_path("photosynthesis");
    let dot = kdgraph(&["export", &path]);
    assert!(stdout(&dot).starts_with("digraph kdg"));
    let json = kdgraph(&["export", "--format", "json", "--graph", "udg", &path]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert!(v["nodes"].is_array() || v["nodes"].is_object());
    let facts = kdgraph(&["export", "--format", "facts", &path]);
    assert!(stdout(&facts).contains("% derived: e5"));
}

#[test]
fn root_restricts_the_analysis() {
    let o = kdgraph(&["--root", "move_out1", "derive", &fixture_path("eukaryote")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("has(move_out1, output_location, cytoplasm322)."));
    assert!(!out.contains("synthesis_of_rna1"));
    let unknown = kdgraph(&["--root", "ghost", "derive", &fixture_path("eukaryote")]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn cycles_exit_with_1() {
    let o = kdgraph(&["derive", &fixture_path("cycle")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR kdg-cycle"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn parse_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.facts");
    std::fs::write(&bad, "has(a, b).\n").unwrap();
    let o = kdgraph(&["derive", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR parse"));
    assert!(stderr(&o).contains("bad.facts:1:"));
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(kdgraph(&[]).status.code(), Some(2));
    assert_eq!(kdgraph(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(kdgraph(&["derive"]).status.code(), Some(2));
    let o = kdgraph(&["derive", "/nonexistent/kb.facts"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR usage"));
    assert_eq!(kdgraph(&["--help"]).status.code(), Some(0));
}

#[test]
fn multiple_inputs_are_merged() {
    let dir = tempfile::tempdir().unwrap();
    let extra = dir.path().join("extra.facts");
    std::fs::write(&extra, "has(photosynthesis1, site, chloroplast1).\n").unwrap();
    let o = kdgraph(&["derive", &fixture_path("photosynthesis"), extra.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("has(photosynthesis1, input_location, chloroplast1)."));
}

#[test]
fn verbosity_filters_diagnostics() {
    let run = |level: &str| {
        Command::new(env!("CARGO_BIN_EXE_kdgraph"))
            .args(["link", &fixture_path("eukaryote")])
            .env(kdgraph::cli::VERBOSITY_VAR, level)
            .output()
            .unwrap()
    };
    assert!(stderr(&run("error")).is_empty());
    assert!(stderr(&run("warn")).contains("WARN"));
    let info = stderr(&run("info"));
    for line in info.lines() {
        let level = line.split(' ').next().unwrap();
        assert!(["ERROR", "WARN", "INFO"].contains(&level), "{line}");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        vec!["derive", "--all"],
        vec!["link"],
        vec!["resolve"],
        vec!["export"],
        vec!["check", "--format", "json"],
    ] {
        let path = fixture_path("eukaryote");
        let mut full = args.clone();
        full.push(&path);
        let a = kdgraph(&full);
        let b = kdgraph(&full);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stderr, b.stderr, "{args:?}");
    }
}
