use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freeprod")).args(args).env_remove("FREEPROD_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(v["format"], 1);
    v
}

#[test]
fn validate_rose() {
    let out = run(&["validate", &data("rose.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["is_grushko"], true);
}

#[test]
fn validation_failure_exits_one() {
    let out = run(&["validate", &data("tame_chain_2.json")]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["is_small"], true);
    assert_eq!(v["is_very_small"], false);
}

#[test]
fn index_barbell() {
    let out = run(&["index", &data("barbell.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["total"], 2);
    let table = run(&["index", &data("barbell.json"), "--table"]);
    assert!(String::from_utf8(table.stdout).unwrap().contains("i(T) = 2"));
}

#[test]
fn malformed_input_reports_position() {
    let dir = std::env::temp_dir().join(format!("freeprod-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"format\": 1,\n  \"edges\": [1,\n").unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.json:4:"), "{err}");
    // well-formed JSON that is not a tree is malformed too
    std::fs::write(&bad, "{\"format\": 1}").unwrap();
    assert_eq!(run(&["index", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["index", dir.join("missing.json").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn corpus_is_reproducible_and_seed_overridable() {
    let spec = data("f2_corpus_spec.json");
    let a = run(&["corpus", &spec]);
    let b = run(&["corpus", &spec]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["count"], 10);
    let env = Command::new(env!("CARGO_BIN_EXE_freeprod")).args(["corpus", &spec]).env("FREEPROD_SEED", "77").output().unwrap();
    let flag = run(&["corpus", &spec, "--seed", "77"]);
    assert_eq!(env.stdout, flag.stdout);
    assert_ne!(env.stdout, a.stdout);
    assert_eq!(json(&env)["seed"], 77);
}

#[test]
fn every_report_reparses() {
    let cases: Vec<Vec<String>> = vec![
        vec!["length".into(), data("edge_of_groups.json"), "--probe".into(), "2".into()],
        vec!["length".into(), data("rose.json"), "--word".into(), r#"[{"gen":1},{"gen":2,"pow":-1}]"#.into()],
        vec!["volume".into(), data("barbell.json")],
        vec!["fold".into(), "--from".into(), data("rose.json"), "--to".into(), data("barbell.json")],
        vec!["approx".into(), data("edge_of_groups.json"), "--n".into(), "4".into(), "--n".into(), "8".into()],
        vec!["rips".into(), "volume".into(), data("rotation_2_5.json")],
        vec!["rips".into(), "classify".into(), data("rotation_2_5.json")],
        vec!["rips".into(), "independent".into(), data("rotation_2_5.json")],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(again, v);
    }
}

#[test]
fn rips_round_trip_and_refusal() {
    let dir = std::env::temp_dir().join(format!("freeprod-rips-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let sys = dir.join("barbell_system.json");
    let out = run(&["rips", "suspend", &data("barbell.json")]);
    assert_eq!(out.status.code(), Some(0));
    std::fs::write(&sys, &out.stdout).unwrap();
    let dual = run(&["rips", "dual", sys.to_str().unwrap()]);
    assert_eq!(dual.status.code(), Some(0));
    let tree = json(&dual)["tree"].clone();
    let back = dir.join("dual.json");
    std::fs::write(&back, tree.to_string()).unwrap();
    let lens = |p: &str| json(&run(&["length", p, "--probe", "3"]))["lengths"].clone();
    assert_eq!(lens(back.to_str().unwrap()), lens(&data("barbell.json")));
    let refused = run(&["rips", "dual", &data("rotation_233_377.json"), "--budget", "100"]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(String::from_utf8(refused.stderr).unwrap().contains("refused"));
}
