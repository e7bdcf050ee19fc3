use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const INSTANCE_A: &str = r#"{
  "vertices": ["a", "b"],
  "edges": [
    {"id": "e1", "u": "a", "v": "b", "cost": 2},
    {"id": "e2", "u": "a", "v": "b", "cost": 3}
  ],
  "players": [
    {"id": 1, "source": "a", "target": "b"},
    {"id": 2, "source": "a", "target": "b"}
  ]
}"#;

const DISJOINT: &str = r#"{
  "vertices": ["a", "b", "c", "d"],
  "edges": [
    {"id": "e1", "u": "a", "v": "b", "cost": 1},
    {"id": "e2", "u": "c", "v": "d", "cost": 1}
  ],
  "players": [
    {"id": 1, "source": "a", "target": "b"},
    {"id": 2, "source": "c", "target": "d"}
  ]
}"#;

fn netdesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netdesign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

// Two players on the complete graph K5: 16 paths each, 256 profiles.
fn complete_graph() -> String {
    let names = ["a", "b", "c", "d", "e"];
    let mut edges = Vec::new();
    for i in 0..5 {
        for j in i + 1..5 {
            edges.push(format!(
                r#"{{"id": "{}{}", "u": "{}", "v": "{}", "cost": 1}}"#,
                names[i], names[j], names[i], names[j]
            ));
        }
    }
    format!(
        r#"{{"vertices": ["a", "b", "c", "d", "e"], "edges": [{}],
            "players": [{{"id": 1, "source": "a", "target": "b"}}, {{"id": 2, "source": "c", "target": "d"}}]}}"#,
        edges.join(", ")
    )
}

#[test]
fn analyze_reports_exact_ratios() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", INSTANCE_A);
    let o = netdesign(&["analyze", arg(&a)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("nash equilibria    2"), "{text}");
    assert!(text.contains("PoS                1 (1.00000000000)"));
    assert!(text.contains("PoA                3/2 (1.50000000000)"));
    assert!(text.contains("POPoA              1 (1.00000000000)"));

    let o = netdesign(&["analyze", arg(&a), "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["poa"]["exact"], "3/2");
    assert_eq!(v["pos"]["exact"], "1");
    assert_eq!(v["nash_count"], 2);
    assert_eq!(v["min_potential"]["exact"], "3");
    assert_eq!(v["optimum"]["profile"][0]["path"][0], "e1");
}

#[test]
fn analyze_output_file() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", INSTANCE_A);
    let out = dir.path().join("report.txt");
    let o = netdesign(&["analyze", arg(&a), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert!(fs::read_to_string(out).unwrap().contains("PoA"));
}

#[test]
fn exit_codes_separate_error_classes() {
    let dir = TempDir::new().unwrap();
    let big = write(&dir, "k5.json", &complete_graph());
    let o = netdesign(&["analyze", arg(&big), "--max-profiles", "100"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("budget"));
    assert_eq!(netdesign(&["analyze", arg(&big)]).status.code(), Some(0));

    let bad = write(&dir, "bad.json", "{\"vertices\": [");
    assert_eq!(netdesign(&["analyze", arg(&bad)]).status.code(), Some(2));

    let invalid = write(&dir, "invalid.json", &INSTANCE_A.replace("\"target\": \"b\"", "\"target\": \"z\""));
    assert_eq!(netdesign(&["analyze", arg(&invalid)]).status.code(), Some(3));

    let missing = dir.path().join("missing.json");
    assert_eq!(netdesign(&["analyze", arg(&missing)]).status.code(), Some(1));
}

#[test]
fn verify_lemmas_on_instance_a_is_tight() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", INSTANCE_A);
    let o = netdesign(&["verify-lemmas", arg(&a)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let shared: Vec<&str> = text.lines().filter(|l| l.contains("shared-edge  phi")).collect();
    assert_eq!(shared.len(), 2);
    assert!(shared.iter().all(|l| l.contains("rhs = 3  PASS (tight)")));
    assert!(text.ends_with("result  PASS\n"));

    let o = netdesign(&["verify-lemmas", arg(&a), "--json", "--all-minimizers", "--all-optima"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(v["pairs"][0]["bounds"][0]["bound"], "shared-edge");
    assert_eq!(v["pairs"][0]["bounds"][0]["phi_deviation"], "3");
}

#[test]
fn verify_lemmas_disjoint_takes_forest_branch() {
    let dir = TempDir::new().unwrap();
    let d = write(&dir, "d.json", DISJOINT);
    let o = netdesign(&["verify-lemmas", arg(&d)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("disconnected optimum"));
    assert_eq!(text.lines().filter(|l| l.contains("forest       phi")).count(), 2);
    assert!(!text.contains("shared-edge  phi") && !text.contains("connected    phi"));
}

#[test]
fn verify_lemmas_refuses_directed() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d.json");
    let g = netdesign(&["gen", "directed", "--n", "2", "--eps", "1/10", "--out", arg(&out)]);
    assert_eq!(g.status.code(), Some(0));
    let o = netdesign(&["verify-lemmas", arg(&out)]);
    assert_eq!(o.status.code(), Some(6));
    assert!(stderr(&o).contains("undirected"));

    let o = netdesign(&["analyze", arg(&out), "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pos"]["exact"], "15/11");
    assert_eq!(v["nash_count"], 1);
}

#[test]
fn bounds_table() {
    let o = netdesign(&["bounds", "--n-max", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0], "n,H_n,x,B(n),H(n/2),gap");
    assert!(lines[9].starts_with("10,7381/2520,"));

    let o = netdesign(&["bounds", "--n", "2"]);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("2,3/2,1,2.560744611"));

    let o = netdesign(&["bounds", "--n", "100", "--n", "1000", "--n", "100000", "--epsilon", "0.1"]);
    assert!(stderr(&o).contains("least tabulated n with gap < 0.1: 100000"));

    let o = netdesign(&["bounds", "--n-max", "4", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[1]["x"], "7/5");
    assert!(netdesign(&["bounds", "--n", "1"]).status.code() == Some(6));
}

#[test]
fn fuzz_is_clean_and_deterministic() {
    let args = ["fuzz", "--players", "2", "--vertices", "4", "--edges", "6", "--count", "500", "--seed", "7"];
    let first = netdesign(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stdout(&first));
    let text = stdout(&first);
    assert!(text.contains("instances            500"));
    assert!(text.ends_with("violations           0\n"));
    assert_eq!(first.stdout, netdesign(&args).stdout);

    let o = netdesign(&["fuzz", "--count", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("instances            0"));

    let o = netdesign(&["fuzz", "--count", "20", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"], 0);
    assert_eq!(v["instances"], 20);
}

#[test]
fn gen_writes_loadable_instances() {
    let a = netdesign(&["gen", "random", "--players", "2", "--vertices", "4", "--edges", "5", "--seed", "42"]);
    let b = netdesign(&["gen", "random", "--players", "2", "--vertices", "4", "--edges", "5", "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 5);

    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bridge.json");
    let o = netdesign(&["gen", "bridge", "--n", "3", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let o = netdesign(&["verify-lemmas", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("shared-edge optimum"));

    let o = netdesign(&["gen", "random", "--players", "2", "--vertices", "2", "--edges", "0"]);
    assert_eq!(o.status.code(), Some(6));
}
