//! End-to-end tests spawning the binary.

use osp_core::domain::DomainProfile;
use osp_core::rational::Rational;
use osp_core::scheduling::descending_then_ascending_single_item;
use osp_core::setsystem::triangle_mechanism;
use serde_json::Value;
use std::path::PathBuf;
use std::process::Command;

fn rat(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_osp"))
}

fn write_fixture(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("osp-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn mechanism_file(mech: &osp_core::mechanism::Mechanism) -> String {
    serde_json::to_string_pretty(&serde_json::json!({
        "domains": mech.tree.domains(),
        "tree": mech.tree.to_spec(),
    }))
    .unwrap()
}

fn run_json(args: &[&str]) -> (Value, i32) {
    let output = bin().args(args).arg("--json").output().expect("binary runs");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let report: Value = serde_json::from_str(&stdout)
        .unwrap_or_else(|e| panic!("bad report JSON ({e}):\n{stdout}"));
    (report, output.status.code().unwrap())
}

#[test]
fn check_accepts_the_triangle_mechanism_and_emits_payments() {
    let mech = triangle_mechanism(&rat(1), &rat(3)).unwrap();
    let path = write_fixture("triangle-mech.json", &mechanism_file(&mech));
    let (report, code) = run_json(&["check", "--mechanism", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(report["exit_code"], 0);
    assert_eq!(report["verdict"]["is_osp"], true);
    let payments = report["verdict"]["payments"].as_object().unwrap();
    assert_eq!(payments.len(), 8, "one payment vector per profile");
}

#[test]
fn check_flags_the_four_value_counterexample() {
    let domains = DomainProfile::new(vec![
        vec![rat(1), rat(2), rat(3), rat(4)],
        vec![rat(1), rat(3), rat(4)],
        vec![rat(1), rat(3), rat(4)],
    ])
    .unwrap();
    let mech = descending_then_ascending_single_item(&domains).unwrap();
    let path = write_fixture("counterexample-mech.json", &mechanism_file(&mech));

    // the two-cycle mode passes but warns about the four-value domain
    let (report, code) =
        run_json(&["check", "--two-cycles", "--mechanism", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"]["holds"], true);
    assert_eq!(report["verdict"]["insufficient_domains"], true);
    assert!(report["verdict"]["warning"].is_string());

    // the full check refutes with a four-profile certificate of weight -1
    let (report, code) = run_json(&["check", "--mechanism", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(report["verdict"]["is_osp"], false);
    let certificate = &report["verdict"]["certificate"];
    assert_eq!(certificate["weight"], "-1");
    assert_eq!(certificate["cycle"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_input_exits_two() {
    let path = write_fixture(
        "empty-family.json",
        r#"{"elements": 2, "feasible": [], "domains": [["1","3"],["1","3"]]}"#,
    );
    let (report, code) = run_json(&["setsys", "feasible", "--instance", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(report["verdict"]["error"].as_str().unwrap().contains("feasible family"));

    let missing = bin()
        .args(["check", "--mechanism", "/nonexistent/mech.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code().unwrap(), 2);
}

#[test]
fn budget_overruns_exit_three() {
    let path = write_fixture(
        "big-sweep.json",
        r#"{"n": 4, "m": 4, "domains": [["1","2","4"],["1","2","4"],["1","2","4"],["1","2","4"]]}"#,
    );
    let (_, code) = run_json(&[
        "sched",
        "sweep",
        "--mech",
        "few",
        "--instance",
        path.to_str().unwrap(),
        "--max-profiles",
        "10",
    ]);
    assert_eq!(code, 3);
}

#[test]
fn reports_replay_byte_identically() {
    let path = write_fixture(
        "replay.json",
        r#"{"n": 4, "m": 4, "domains": [["1","2","4"],["1","2","4"],["1","2","4"],["1","2","4"]]}"#,
    );
    let args =
        ["sched", "sweep", "--mech", "few", "--instance", path.to_str().unwrap()];
    let (first, _) = run_json(&args);
    let (second, _) = run_json(&args);
    assert_eq!(first["verdict"], second["verdict"]);
    assert_eq!(first["instance_digest"], second["instance_digest"]);
}

#[test]
fn paths_check_matches_the_characterization() {
    let (report, code) = run_json(&["paths", "check", "--t", "1", "--b", "1", "--L", "1", "--H", "9"]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"]["feasible"], true);
    let (report, code) = run_json(&["paths", "check", "--t", "3", "--b", "2", "--L", "1", "--H", "3"]);
    assert_eq!(code, 1);
    assert_eq!(report["verdict"]["feasible"], false);
    // rational ratio right at the threshold
    let (report, code) =
        run_json(&["paths", "check", "--t", "3", "--b", "2", "--L", "3/2", "--H", "3"]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"]["feasible"], true);
}

#[test]
fn lowerbound_report_closes() {
    let (report, code) = run_json(&["sched", "lowerbound", "--n", "4"]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"]["all_closed"], true);
    assert_eq!(report["verdict"]["branch_count"], 53);
    assert_eq!(report["verdict"]["low"], "1");
    assert_eq!(report["verdict"]["mid"], "4");
    assert_eq!(report["verdict"]["high"], "32");
}

#[test]
fn setsys_run_returns_the_optimum_with_queries() {
    let path = write_fixture(
        "triangle-inst.json",
        r#"{"elements": 3, "feasible": [[0],[1,2]], "domains": [["1","3"],["1","3"],["1","3"]]}"#,
    );
    let (report, code) = run_json(&[
        "setsys",
        "run",
        "--instance",
        path.to_str().unwrap(),
        "--profile",
        "3,1,1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"]["cost"], "2");
    assert_eq!(report["verdict"]["optimal_cost"], "2");
    assert_eq!(report["verdict"]["chosen_set"], serde_json::json!([1, 2]));
}
