use std::path::PathBuf;
use std::process::Command;

use jbwcond_cli::problem::{parse, Entry, ProblemFile, Task};
use proptest::prelude::*;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_jbwcond")).args(args).env_remove("JBWCOND_SEED").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8_lossy(&out.stderr).to_string())
}

fn file(name: &str) -> String {
    fixture(name).to_string_lossy().to_string()
}

#[test]
fn compute_qubit_tasks() {
    let (code, json, _) = run(&["compute", &file("qubit.json")]);
    assert_eq!(code, 0);
    let reports = json["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 7);
    let p = reports[0]["values"]["probability"].as_f64().unwrap();
    assert!((p - 0.5).abs() < 1e-12);
    let mofx = &reports[2]["witnesses"]["value"];
    for row in mofx.as_array().unwrap() {
        for entry in row.as_array().unwrap() {
            assert_eq!(entry[0].as_f64().unwrap(), 0.0);
            assert_eq!(entry[1].as_f64().unwrap(), 0.0);
        }
    }
    assert_eq!(json["passed"], Value::Bool(true));
    assert_eq!(json["schema_version"], 1);
}

#[test]
fn single_task_selection() {
    let (code, json, _) = run(&["compute", &file("qubit.json"), "--task", "4"]);
    assert_eq!(code, 0);
    assert_eq!(json["reports"][0]["id"], "measure/4");
    let (code, _, err) = run(&["compute", &file("qubit.json"), "--task", "40"]);
    assert_eq!(code, 2);
    assert!(err.contains("/tasks/40"));
}

#[test]
fn nonexistence_exits_four_with_witness() {
    let (code, json, _) = run(&["compute", &file("tensor.json")]);
    assert_eq!(code, 4);
    let r = &json["reports"][0];
    assert!(r["values"]["canonical_gap"].as_f64().unwrap() >= 0.5);
    assert!(r["witnesses"]["witness_state_a"].is_array());
    let (code, json, _) = run(&["compute", &file("incompatible.json")]);
    assert_eq!(code, 4);
    assert!((json["reports"][0]["values"]["violation"].as_f64().unwrap().abs() - 0.5).abs() < 1e-12);
    assert!(json["reports"][0]["witnesses"]["violating_event"].is_array());
}

#[test]
fn input_errors_have_their_own_exit_codes() {
    let (code, _, err) = run(&["inspect", &file("not_hermitian.json")]);
    assert_eq!(code, 3);
    assert!(err.contains("skewed"));
    let (code, _, err) = run(&["inspect", &file("bad_shape.json")]);
    assert_eq!(code, 2);
    assert!(err.contains("/elements/A/0"));
    let (code, _, _) = run(&["inspect", "/nonexistent/problem.json"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["verify", "lemma9.9"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["demo", "unknown"]);
    assert_eq!(code, 2);
}

#[test]
fn inspect_lists_structure() {
    let (code, json, _) = run(&["inspect", &file("qubit.json")]);
    assert_eq!(code, 0);
    let atoms = json["reports"].as_array().unwrap().iter().find(|r| r["id"] == "atoms/Z").unwrap();
    assert_eq!(atoms["values"]["atom_rank_0"], 1.0);
    assert_eq!(atoms["values"]["atom_rank_1"], 1.0);
    assert_eq!(atoms["values"]["commutant_abelian"], 1.0);
    let plus = json["reports"].as_array().unwrap().iter().find(|r| r["id"] == "state/plus").unwrap();
    assert_eq!(plus["values"]["rank"], 1.0);
}

#[test]
fn verify_count_contract_and_seed_env() {
    let (code, json, _) = run(&["verify", "lemma2.1", "--seed", "7", "--trials", "10"]);
    assert_eq!(code, 0);
    assert_eq!(json["reports"].as_array().unwrap().len(), 10);
    let out = Command::new(env!("CARGO_BIN_EXE_jbwcond"))
        .args(["verify", "traces", "--trials", "3"])
        .env("JBWCOND_SEED", "7")
        .output()
        .unwrap();
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["seed"], 7);
}

#[test]
fn out_flag_and_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = Command::new(env!("CARGO_BIN_EXE_jbwcond"))
        .args(["demo", "interference", "--format", "text", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("PASS demo/interference"));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((written["reports"][0]["values"]["mu_P_F"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn tolerance_scale_must_be_positive() {
    let (code, _, _) = run(&["demo", "interference", "--tolerance-scale", "0"]);
    assert_eq!(code, 2);
}

fn entry() -> impl Strategy<Value = Entry> {
    let component = prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -10.0..10.0f64, Just(0.0)];
    (component.clone(), component).prop_map(|(re, im)| Entry(re, im))
}

fn matrix(n: usize) -> impl Strategy<Value = Vec<Vec<Entry>>> {
    prop::collection::vec(prop::collection::vec(entry(), n), n)
}

fn problem() -> impl Strategy<Value = ProblemFile> {
    (1usize..=4).prop_flat_map(|n| {
        (
            prop::collection::btree_map("[a-z]{1,6}", matrix(n), 0..3),
            prop::collection::btree_map("[A-Z]{1,6}", matrix(n), 0..3),
        )
            .prop_map(move |(elements, states)| {
                let states = states.into_iter().filter(|(k, _)| !elements.contains_key(k)).collect();
                let tasks = elements
                    .keys()
                    .map(|e| Task::Mofx { element: e.clone(), algebra: "B".into() })
                    .collect();
                ProblemFile {
                    schema: None,
                    description: Some("generated".into()),
                    dimension: n,
                    elements,
                    events: Default::default(),
                    atoms: Default::default(),
                    states,
                    tasks,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_serialize_parse_is_identity(p in problem()) {
        let text = serde_json::to_string_pretty(&p).unwrap();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &p);
        let again = parse(&serde_json::to_string(&back).unwrap()).unwrap();
        for (name, m) in &p.elements {
            for (r, row) in m.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    prop_assert_eq!(e.0.to_bits(), again.elements[name][r][c].0.to_bits());
                    prop_assert_eq!(e.1.to_bits(), again.elements[name][r][c].1.to_bits());
                }
            }
        }
    }
}
