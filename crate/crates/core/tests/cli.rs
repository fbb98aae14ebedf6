use std::process::{Command, Output};

use serde_json::Value;

fn aka_lab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_aka-lab"));
    cmd.args(args).env_remove("AKA_LAB_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn vectors_match_oracle_file() {
    let o = aka_lab(&["vectors"], &[]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("data/oracle_vectors.txt"));
}

#[test]
fn run_all_conforms() {
    let o = aka_lab(&["run-all", "--seed", "2"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn unknown_scenario_exits_2() {
    let o = aka_lab(&["run", "no_such_scenario"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(aka_lab(&["run"], &[]).status.code(), Some(2));
    assert_eq!(aka_lab(&["frobnicate"], &[]).status.code(), Some(2));
}

#[test]
fn seed_env_var_sets_default_seed() {
    let o = aka_lab(&["run", "honest_umts_mapsec"], &[("AKA_LAB_SEED", "4")]);
    assert!(stdout(&o).starts_with("SCENARIO honest_umts_mapsec seed=4\n"));
    let o = aka_lab(&["run", "honest_umts_mapsec", "--seed", "9"], &[("AKA_LAB_SEED", "4")]);
    assert!(stdout(&o).starts_with("SCENARIO honest_umts_mapsec seed=9\n"));
}

#[test]
fn json_report_lists_all_properties() {
    let o = aka_lab(&["run", "attack_misbind_mapsec", "--json", "--seed", "1"], &[]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["conforms"], Value::Bool(true));
    assert_eq!(v["verdicts"].as_array().unwrap().len(), 6);
}

#[test]
fn list_names_every_scenario_file() {
    let out = stdout(&aka_lab(&["list"], &[]));
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "json") {
            let name = p.file_stem().unwrap().to_str().unwrap().to_string();
            assert!(out.lines().any(|l| l.split_whitespace().next() == Some(&name)), "{name}");
        }
    }
}

#[test]
fn trace_file_is_written() {
    let path = std::env::temp_dir().join(format!("aka-lab-trace-{}.json", std::process::id()));
    let o = aka_lab(
        &["run", "redirection_umts", "--seed", "1", "--trace", path.to_str().unwrap(), "--trace-format", "json"],
        &[],
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(aka_lab::trace::Trace::from_json(&text).is_ok());
}

#[test]
fn misbinding_files_differ_only_in_name_profile_and_expectations() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let load = |n: &str| -> Value {
        serde_json::from_str(&std::fs::read_to_string(format!("{dir}/{n}.json")).unwrap()).unwrap()
    };
    let strip = |mut v: Value| {
        let o = v.as_object_mut().unwrap();
        o.remove("name");
        o.remove("expect");
        for l in o["links"].as_array_mut().unwrap() {
            l.as_object_mut().unwrap().remove("profile");
        }
        v
    };
    let base = load("attack_misbind_mapsec");
    for other in ["attack_misbind_tcapsec", "attack_misbind_ipsec"] {
        let v = load(other);
        assert_eq!(v["strategy"], base["strategy"]);
        assert!(v["strategy"].is_string());
        assert_eq!(strip(v), strip(base.clone()), "{other}");
    }
}
