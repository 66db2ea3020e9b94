use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrp"))
        .args(args)
        .env_remove("NRP_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn fixture() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/five_requirements.json").to_string()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn transform_prints_dot_and_ordering() {
    let out = stdout(&nrp(&["transform", &fixture()]));
    assert!(out.starts_with("digraph"));
    assert!(out.contains("\"I_r03\" -> \"r02\""));
    assert!(out.trim_end().ends_with("ordering: r01+r05 r03 r04 r02"));
}

#[test]
fn solve_exact_reports_pruning() {
    let o = nrp(&["solve-exact", &fixture(), "--no-effort-prune", "--order", "r01+r05,r03,r04,r02"]);
    let front = stdout(&o);
    assert!(front.starts_with("effort,satisfaction,requirements\n0.0,0.0,\n"));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("explored 23, pruned 8 (25.81%)"), "{err}");
}

#[test]
fn brute_and_bnb_agree() {
    let a = stdout(&nrp(&["solve-exact", &fixture(), "--algo", "brute", "--ratio", "0.5"]));
    let b = stdout(&nrp(&["solve-exact", &fixture(), "--algo", "bnb", "--ratio", "0.5"]));
    assert_eq!(a, b);
}

#[test]
fn errors_carry_a_category() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name":"x","requirements":[{"id":"a","effort":1,"satisfaction":1}],"interactions":{"exclusions":[["a","q"]]}}"#).unwrap();
    let o = nrp(&["transform", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error[parse]"), "{err}");
    assert!(err.contains("interactions.exclusions[0]"), "{err}");

    let o = nrp(&["solve-eda", &fixture(), "--stall", "500"]);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[config]"));
}

#[test]
fn gen_solve_and_measure() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    stdout(&nrp(&["gen", "--n", "10", "--density", "0.3", "--seed", "4", "--out", &p("i.json")]));
    stdout(&nrp(&["solve-exact", &p("i.json"), "--ratio", "0.5", "--out", &p("exact.csv")]));
    let o = nrp(&["solve-eda", &p("i.json"), "--ratio", "0.5", "--seed", "1", "--out", &p("eda.csv")]);
    stdout(&o);
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"iterations\""));
    let text = std::fs::read_to_string(p("i.json")).unwrap();
    let total: f64 = serde_json::from_str::<serde_json::Value>(&text).unwrap()["requirements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["effort"].as_f64().unwrap())
        .sum();
    let budget = (0.5 * total).to_string();
    let m = stdout(&nrp(&["metrics", "--front", &p("eda.csv"), "--reference", &p("exact.csv"), "--budget", &budget]));
    let v: serde_json::Value = serde_json::from_str(&m).unwrap();
    assert!(v["hypervolume_ratio"].as_f64().unwrap() <= 1.0 + 1e-12);
    assert!(v["coincident"].as_u64().unwrap() >= 1);
}

fn write_plan(dir: &Path, out: &str) -> PathBuf {
    std::fs::copy(fixture(), dir.join("five.json")).unwrap();
    let plan = dir.join("plan.json");
    std::fs::write(
        &plan,
        format!(
            r#"{{"instance":"five.json","effort_ratio":0.5,"algorithms":["bnb","eda-pls"],"runs":3,"output_dir":"{out}","eda":{{"max_iterations":20}}}}"#
        ),
    )
    .unwrap();
    plan
}

#[test]
fn bench_writes_under_the_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let root = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "exp");
    let o = Command::new(env!("CARGO_BIN_EXE_nrp"))
        .args(["bench", plan.to_str().unwrap(), "--canonical", "--runs", "4"])
        .env("NRP_OUTPUT_ROOT", root.path())
        .output()
        .unwrap();
    let text = stdout(&o);
    assert!(text.contains("eda-pls"));
    let runs = std::fs::read_to_string(root.path().join("exp/eda-pls_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 5);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.path().join("exp/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["algorithms"][1]["runs"], 4);
    assert_eq!(summary["algorithms"][1]["wall_ms"]["summary"]["max"], 0.0);
}
