use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reqgossip")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn run_writes_outputs_and_verify_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = cli(&[
        "run", "--protocol", "3", "--gen", "random-connected,7,0.5", "--graph-seed", "4", "--x0-seed", "9",
        "--x0-range", "-5:5", "--queue-seed", "2", "--max-iters", "60", "--claims",
        "lemma_pizza,period_edges_m,contraction_4_over_n2,transmissions_5n_over_2", "--out", out_s,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["all_pass"], true);
    assert_eq!(summary["reports"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let iterations = summary["iterations"].as_u64().unwrap() as usize;
    assert_eq!(csv.lines().count(), 1 + iterations + 1);

    let v = cli(&["verify", "--from", out_s, "--claims", "lemma_pizza,period_edges_m"]);
    assert_eq!(code(&v), 0);
    let bad = cli(&["verify", "--from", out_s, "--claims", "lemma_gossip"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn config_file_and_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    fs::write(&graph, "3 2\n1 2\n2 3\n").unwrap();
    let cfg = dir.path().join("cfg.json");
    let text = format!(
        r#"{{"protocol": "II", "graph": {{"file": {:?}}}, "x0": {{"explicit": ["4", "2", "0"]}},
            "queues": {{"explicit": [[2], [1, 3], [2]]}}, "max_iters": 2, "claims": ["lemma_gossip"]}}"#,
        graph.to_str().unwrap()
    );
    fs::write(&cfg, text).unwrap();
    let o = cli(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["iterations"], 2);
    assert_eq!(summary["v_final"], 3.0);
}

#[test]
fn tampered_trace_fails_verification_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = cli(&["run", "--protocol", "3", "--gen", "path,3", "--x0", "4,2,0", "--max-iters", "3", "--out", out]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("trace.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    first["gossips"] = serde_json::json!([]);
    first["virtual_gossips"] = serde_json::json!([]);
    lines[0] = first.to_string();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let v = cli(&["verify", "--from", out, "--claims", "lemma_pizza"]);
    assert_eq!(code(&v), 1);
    let reports: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(reports[0]["pass"], false);
    assert_eq!(reports[0]["counterexample"]["t"], 0);
}

#[test]
fn config_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["run", "--protocol", "9", "--gen", "path,3", "--x0", "1,2,3"],
        &["run", "--protocol", "2", "--gen", "path,3", "--x0", "1,2"],
        &["run", "--protocol", "2", "--gen", "blob,3", "--x0", "1,2,3"],
        &["run", "--protocol", "2", "--x0", "1,2,3"],
        &["run", "--protocol", "2", "--gen", "path,3"],
        &["run", "--protocol", "2", "--gen", "path,3", "--x0", "1,2,3", "--stop-ratio", "0"],
        &["run", "--protocol", "2", "--gen", "path,3", "--x0", "1,2,3", "--queues", "2;3;2"],
        &["run", "--protocol", "2", "--gen", "cycle,4", "--x0", "1,2,3,4", "--claims", "tree_period_n_minus_1"],
        &["run", "--protocol", "2", "--gen", "path,3", "--x0-seed", "1", "--x0-range", "5"],
        &["compare", "--gen", "path,3", "--x0", "1,2,3", "--stop-ratio", "x"],
        &["gen-graph", "--gen", "cycle,2"],
        &["search-failure", "--protocol", "5"],
        &["bogus"],
    ];
    for args in cases {
        let o = cli(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn compare_and_gen_graph() {
    let o = cli(&["compare", "--gen", "complete,5", "--x0-seed", "3", "--queue-seed", "3"]);
    assert_eq!(code(&o), 0);
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["broadcast_baseline"], "20/1");
    assert_eq!(rep["gossip_cheaper"], true);
    assert_eq!(rep["transmission_cap"], 12);

    let g = cli(&["gen-graph", "--gen", "grid,2x3", "--edge-list"]);
    assert_eq!(code(&g), 0);
    assert_eq!(String::from_utf8(g.stdout).unwrap().lines().count(), 1 + 7);
}

#[test]
fn search_on_a_tiny_space_reports_no_certificate() {
    let o = cli(&[
        "search-failure", "--max-n", "3", "--values-per-graph", "4", "--queues-per-graph", "2", "--horizon", "40",
    ]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["certificate"].is_null());
}
