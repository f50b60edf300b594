use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn iimaid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iimaid")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn validate_reports_kind_and_models() {
    let out = iimaid(&["validate", &fixture("evaluation_game.iimaid.json"), "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["command"], "validate");
    assert_eq!(r["passed"], true);
    assert_eq!(r["result"]["kind"], "ii-maid");
    assert!(r.get("timings_ms").is_none());
}

#[test]
fn malformed_belief_exits_two_with_path() {
    let out = iimaid(&["validate", &fixture("malformed_belief.iimaid.json")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("models[1].beliefs.A"), "{err}");
    assert!(err.contains("0.9"), "{err}");
}

#[test]
fn missing_file_and_bad_arguments_exit_two() {
    assert_eq!(iimaid(&["validate", "/definitely/not/here.json"]).status.code(), Some(2));
    assert_eq!(iimaid(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(iimaid(&["check-nash", &fixture("honesty.maid.json")]).status.code(), Some(2));
}

#[test]
fn check_nash_exit_codes() {
    let ok = iimaid(&["check-nash", &fixture("honesty.maid.json"), "--profile", &fixture("honest.profile.json")]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = iimaid(&["check-nash", &fixture("honesty.maid.json"), "--profile", &fixture("always_low_match.profile.json")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8(bad.stdout).unwrap().starts_with("check-nash: check failed"));
}

#[test]
fn eu_of_honest_profile() {
    let out = iimaid(&[
        "eu",
        &fixture("honesty.maid.json"),
        "--profile",
        &fixture("honest.profile.json"),
        "--output",
        "json",
    ]);
    let r = json(&out);
    assert_eq!(r["result"]["expected_utilities"]["A"], 1.0);
    assert_eq!(r["result"]["expected_utilities"]["H"], 1.0);
}

#[test]
fn timings_only_on_request() {
    let out = iimaid(&["info-sets", &fixture("evaluation_game.iimaid.json"), "--output", "json", "--timings"]);
    assert!(json(&out)["timings_ms"].is_object());
}

#[test]
fn info_sets_filter_by_agent() {
    let out = iimaid(&["info-sets", &fixture("evaluation_game.iimaid.json"), "--agent", "H", "--output", "json"]);
    let r = json(&out);
    assert_eq!(r["result"]["H"]["count"], 6);
    assert!(r["result"].get("A").is_none());
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        vec!["solve-nash", "evaluation_game.iimaid.json"],
        vec!["solve-rbr", "evaluation_game_depth3.stack.json"],
        vec!["convert-efg", "evaluation_game.iimaid.json"],
    ] {
        let doc = fixture(args[1]);
        let a = iimaid(&[args[0], &doc, "--output", "json", "--seed", "3"]);
        let b = iimaid(&[args[0], &doc, "--output", "json", "--seed", "3"]);
        assert_eq!(a.stdout, b.stdout, "{}", args[0]);
    }
}

#[test]
fn simulate_depends_on_seed() {
    let run = |seed: &str| {
        iimaid(&[
            "simulate",
            &fixture("honesty.maid.json"),
            "--profile",
            &fixture("always_low_match.profile.json"),
            "--rollouts",
            "2000",
            "--seed",
            seed,
            "--output",
            "json",
        ])
    };
    let (a, b, c) = (run("1"), run("1"), run("2"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn solve_rbr_unrolls_ii_maid() {
    let out = iimaid(&["solve-rbr", &fixture("evaluation_game.iimaid.json"), "--depth", "2", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["depth"], 2);
    assert_eq!(r["result"]["audit_passed"], true);
}

#[test]
fn solve_rbr_needs_depth_for_ii_maid() {
    assert_eq!(iimaid(&["solve-rbr", &fixture("evaluation_game.iimaid.json")]).status.code(), Some(2));
}

#[test]
fn check_consistency_flags_forced_zero() {
    let out = iimaid(&["check-consistency", &fixture("evaluation_game.iimaid.json"), "--output", "json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["result"]["consistency"]["forced_zero"], serde_json::json!(["S_H"]));
}

#[test]
fn export_dot_variants() {
    let doc = fixture("evaluation_game.iimaid.json");
    let tree = String::from_utf8(iimaid(&["export-dot", &doc]).stdout).unwrap();
    assert_eq!(tree.matches("subgraph cluster_t").count(), 7);
    let efg = String::from_utf8(iimaid(&["export-dot", &doc, "--efg"]).stdout).unwrap();
    assert!(efg.starts_with("digraph"));
    assert!(efg.contains("cluster_infoset_"));
    let maid = String::from_utf8(iimaid(&["export-dot", &fixture("honesty.maid.json")]).stdout).unwrap();
    assert!(maid.contains("style=dashed"));
}

#[test]
fn maid_profile_rejected_on_ii_maid_document() {
    let out = iimaid(&[
        "check-nash",
        &fixture("evaluation_game.iimaid.json"),
        "--profile",
        &fixture("honest.profile.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_equivalence_passes() {
    let out = iimaid(&["verify-equivalence", &fixture("evaluation_game.iimaid.json"), "--samples", "5", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}
