use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qorpilot_core::flowsim::{FlowFixture, FlowRunConfig, Pdk, Stage, BASELINE_PATCH};
use qorpilot_core::hash::sha256_hex;
use qorpilot_core::QoRReport;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn qp(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qorpilot"))
        .current_dir(cwd)
        .env_remove("QORPILOT_CONFIG")
        .env_remove("QORPILOT_LOG")
        .args(args)
        .output()
        .unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    for entry in walkdir::WalkDir::new(from) {
        let entry = entry.unwrap();
        let dst = to.join(entry.path().strip_prefix(from).unwrap());
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&dst).unwrap();
        } else {
            std::fs::copy(entry.path(), &dst).unwrap();
        }
    }
}

/// Relative path to SHA-256 of every file under `root`.
fn tree(root: &Path) -> BTreeMap<String, String> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().into_owned();
            (rel, sha256_hex(std::fs::read(e.path()).unwrap()))
        })
        .collect()
}

fn build_graph(cwd: &Path, repo: &Path, out: &Path) -> Value {
    ok_json(&qp(
        cwd,
        &[
            "graph-build",
            "--repo",
            s(repo),
            "--out",
            s(out),
            "--exclude",
            "third_party/**",
            "--exclude",
            "**/test/**",
            "--link",
        ],
    ))
}

#[test]
fn graph_build_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = fixtures().join("eda_repo");
    let (a, b) = (tmp.path().join("a.json"), tmp.path().join("b.json"));
    build_graph(tmp.path(), &repo, &a);
    build_graph(tmp.path(), &repo, &b);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn pipeline_through_localize_reproduces_committed_granular_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let repo = fixtures().join("eda_repo");
    let graph = t.join("graph.json");
    let cards = t.join("cards");
    let index = t.join("index");
    build_graph(t, &repo, &graph);
    ok_json(&qp(t, &["doc-gen", "--graph", s(&graph), "--repo", s(&repo), "--cards", s(&cards)]));
    ok_json(&qp(
        t,
        &[
            "index",
            "--graph",
            s(&graph),
            "--repo",
            s(&repo),
            "--cards",
            s(&cards),
            "--literature",
            s(&fixtures().join("literature")),
            "--out",
            s(&index),
        ],
    ));
    let planned = t.join("plan.json");
    let summary = ok_json(&qp(
        t,
        &[
            "plan",
            "--graph",
            s(&graph),
            "--cards",
            s(&cards),
            "--index",
            s(&index),
            "--scope",
            "dpl,gpl",
            "--context",
            "aes on Nangate45",
            "--out",
            s(&planned),
        ],
    ));
    assert_eq!(summary["valid"], true, "{summary}");

    let gp = t.join("gp.json");
    ok_json(&qp(
        t,
        &[
            "localize",
            "--plan",
            s(&fixtures().join("e2e/plan.json")),
            "--graph",
            s(&graph),
            "--flow-config",
            s(&fixtures().join("table1/nangate45_aes.cfg")),
            "--out",
            s(&gp),
        ],
    ));
    assert_eq!(std::fs::read(gp).unwrap(), std::fs::read(fixtures().join("e2e/gp.json")).unwrap());
}

#[test]
fn plan_naming_an_unknown_api_exits_2_with_assertions() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let repo = fixtures().join("eda_repo");
    let graph = t.join("graph.json");
    let cards = t.join("cards");
    build_graph(t, &repo, &graph);
    ok_json(&qp(t, &["doc-gen", "--graph", s(&graph), "--repo", s(&repo), "--cards", s(&cards)]));
    let text = std::fs::read_to_string(fixtures().join("e2e/plan.json")).unwrap();
    let bogus = t.join("bogus.json");
    std::fs::write(&bogus, text.replace("dpl::displacementCost", "dpl::noSuchFunction")).unwrap();
    let out = qp(t, &["plan", "--graph", s(&graph), "--cards", s(&cards), "--from", s(&bogus)]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);
    let assertions = v["assertions"].as_array().unwrap();
    assert!(!assertions.is_empty());
    assert!(assertions.iter().any(|a| a.to_string().contains("noSuchFunction")), "{v}");
}

fn e2e_run(t: &Path, repo: &Path, out: &Path, proposer: &Path) -> Value {
    ok_json(&qp(
        t,
        &[
            "run",
            "--granular-plan",
            s(&fixtures().join("e2e/gp.json")),
            "--repo",
            s(repo),
            "--fixture",
            s(&fixtures().join("t2.qor.jsonl")),
            "--proposer",
            s(proposer),
            "--weight",
            "routed_wirelength_um=1",
            "--out",
            s(out),
        ],
    ))
}

#[test]
fn run_writes_only_the_repo_and_out_dir_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let repo = t.join("repo");
    copy_dir(&fixtures().join("eda_repo"), &repo);
    let before = tree(t);
    let fixtures_before = tree(&fixtures());

    let first = e2e_run(t, &repo, &t.join("out1"), &fixtures().join("e2e/proposer.json"));
    assert_eq!(first["steps"][0]["committed"], "s1-c3");
    let after = tree(t);
    let changed: Vec<&String> =
        after.iter().filter(|(k, v)| !k.starts_with("out1") && before.get(*k) != Some(*v)).map(|(k, _)| k).collect();
    assert_eq!(changed, ["repo/src/dpl/Opendp.cpp"]);
    assert!(before.keys().all(|k| after.contains_key(k)));
    assert_eq!(tree(&fixtures()), fixtures_before);

    let repo2 = t.join("repo2");
    copy_dir(&fixtures().join("eda_repo"), &repo2);
    let second = e2e_run(t, &repo2, &t.join("out2"), &fixtures().join("e2e/proposer.json"));
    assert_eq!(first["workspace_hash"], second["workspace_hash"]);
    let manifest = |dir: &str| -> Value {
        serde_json::from_slice(&std::fs::read(t.join(dir).join("manifest.json")).unwrap()).unwrap()
    };
    let (m1, m2) = (manifest("out1"), manifest("out2"));
    assert_eq!(m1["artifacts"], m2["artifacts"]);
    assert_eq!(m1["inputs"]["repo_fingerprint"], m2["inputs"]["repo_fingerprint"]);

    let report = ok_json(&qp(t, &["report", "--manifest", s(&t.join("out1/manifest.json")), "--json"]));
    assert_eq!(report["rows"][0]["delta_pct"], -5.49);
}

#[test]
fn run_without_accepted_candidates_reports_zero_change() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let repo = t.join("repo");
    copy_dir(&fixtures().join("eda_repo"), &repo);
    let before = tree(&repo);
    let script: Value = serde_json::from_slice(&std::fs::read(fixtures().join("e2e/proposer.json")).unwrap()).unwrap();
    let first_only = serde_json::json!({"s1": {"candidates": [script["s1"]["candidates"][0]]}});
    let proposer = t.join("proposer.json");
    std::fs::write(&proposer, first_only.to_string()).unwrap();

    let out = e2e_run(t, &repo, &t.join("out"), &proposer);
    assert!(out["steps"][0]["committed"].is_null(), "{out}");
    assert_eq!(tree(&repo), before);
    let report = ok_json(&qp(t, &["report", "--manifest", s(&t.join("out/manifest.json")), "--json"]));
    let row = &report["rows"][0];
    assert_eq!(row["base"], row["new"]);
    assert_eq!(row["delta_pct"], 0.0);
    let cx = std::fs::read_to_string(t.join("out/counterexamples.jsonl")).unwrap();
    assert_eq!(cx.lines().count(), 1);
}

#[test]
fn report_from_fixture_has_one_row_per_design() {
    let tmp = tempfile::tempdir().unwrap();
    let mut f = FlowFixture::new();
    for (design, pdk, base, new) in
        [("ibex", Pdk::Asap7, 80402.0, 80823.0), ("aes", Pdk::Nangate45, 230044.0, 217415.0)]
    {
        let c = FlowRunConfig::new(design, pdk.clone(), Stage::Full);
        for (label, rwl) in [(BASELINE_PATCH, base), ("x", new)] {
            let mut r = QoRReport::new(design, pdk.as_str(), Stage::Full);
            r.routed_wirelength_um = Some(rwl);
            f.insert_report(c.clone(), label, r).unwrap();
        }
    }
    let path = tmp.path().join("f.jsonl");
    std::fs::write(&path, f.to_jsonl()).unwrap();
    let out = qp(tmp.path(), &["report", "--fixture", s(&path), "--patch", "x"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[2].starts_with("Nangate45") && lines[2].ends_with("-5.49"), "{text}");
    assert!(lines[3].starts_with("ASAP7") && lines[3].ends_with("+0.52"), "{text}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    assert_eq!(qp(t, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(qp(t, &["--help"]).status.code(), Some(0));
    let missing = qp(t, &["report", "--manifest", "nope/manifest.json"]);
    assert_eq!(missing.status.code(), Some(3));
    let bad = t.join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    assert_eq!(qp(t, &["link", "--graph", s(&bad), "--out", "x.json"]).status.code(), Some(2));
}

#[test]
fn bisect_finds_the_breaking_patch() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let repo = t.join("repo");
    std::fs::create_dir_all(&repo).unwrap();
    std::fs::write(repo.join("n.txt"), "0\n").unwrap();
    let patches: Vec<String> =
        (0..6).map(|i| format!("--- a/n.txt\n+++ b/n.txt\n@@ -1 +1 @@\n-{i}\n+{}\n", i + 1)).collect();
    let path = t.join("patches.json");
    std::fs::write(&path, serde_json::to_string(&patches).unwrap()).unwrap();
    let v = ok_json(&qp(
        t,
        &["bisect", "--repo", s(&repo), "--patches", s(&path), "--check-cmd", "test \"$(cat n.txt)\" -lt 4"],
    ));
    assert_eq!(v["culprit"], 4);
    assert!(v["probes"].as_u64().unwrap() <= v["probe_bound"].as_u64().unwrap());
    assert_eq!(std::fs::read_to_string(repo.join("n.txt")).unwrap(), "0\n");
}
