use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> PathBuf {
    repo().join("docs/scenarios").join(name)
}

fn load(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(scenario(name)).unwrap()).unwrap()
}

fn tdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdg"))
        .args(args)
        .output()
        .unwrap()
}

fn tdg_with(dir: &TempDir, scenario: &Value, args: &[&str]) -> Output {
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, serde_json::to_string(scenario).unwrap()).unwrap();
    let mut all = args.to_vec();
    all.extend(["--scenario", path.to_str().unwrap()]);
    tdg(&all)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(repo().join("docs").join(name)).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

/// Parses a report and checks it against the published schema.
fn report(text: &str) -> Value {
    let v: Value = serde_json::from_str(text).unwrap();
    let validator = schema("report.schema.json");
    let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(
        errors.is_empty(),
        "report violates schema: {errors:?}\n{text}"
    );
    v
}

fn stdout_report(out: &Output) -> Value {
    report(&String::from_utf8(out.stdout.clone()).unwrap())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn shipped_scenarios_match_the_schema() {
    let validator = schema("scenario.schema.json");
    for entry in std::fs::read_dir(repo().join("docs/scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(validator.is_valid(&v), "{}", path.display());
    }
    let mut bad = load("capture.json");
    bad["gamma"] = json!(1.2);
    assert!(!validator.is_valid(&bad));
    bad = load("capture.json");
    bad["colour"] = json!("red");
    assert!(!validator.is_valid(&bad));
}

#[test]
fn classify_reports_both_spaces() {
    let out = tdg(&[
        "classify",
        "--scenario",
        scenario("capture.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = stdout_report(&out);
    assert_eq!(v["space"], "capture");
    assert!((f(&v["barrier_value"]) - 1.098_619_155_416_266).abs() < 1e-12);
    assert!((f(&v["disk"]["radius"]) - 0.439_025_926_537_756_5).abs() < 1e-12);

    let out = tdg(&[
        "classify",
        "--scenario",
        scenario("escape.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_report(&out)["space"], "escape");
}

#[test]
fn schema_violations_exit_2_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let mut s = load("capture.json");
    s["gamma"] = json!(1.2);
    let out = tdg_with(&dir, &s, &["classify"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("gamma"), "{}", stderr(&out));

    let mut s = load("capture.json");
    s["target"]["colour"] = json!("red");
    let out = tdg_with(&dir, &s, &["classify"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));

    let mut s = load("capture.json");
    s.as_object_mut().unwrap().remove("v_pursuer");
    let out = tdg_with(&dir, &s, &["classify"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("v_pursuer"), "{}", stderr(&out));

    let mut s = load("capture.json");
    s["sim"] = json!({ "dt": -1.0 });
    let out = tdg_with(
        &dir,
        &s,
        &[
            "simulate",
            "--out",
            dir.path().join("t.csv").to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sim.dt"), "{}", stderr(&out));
}

#[test]
fn coincident_players_exit_3() {
    let dir = TempDir::new().unwrap();
    let mut s = load("capture.json");
    s["evader"] = s["pursuer"].clone();
    assert_eq!(code(&tdg_with(&dir, &s, &["classify"])), 3);
    assert_eq!(code(&tdg_with(&dir, &s, &["solve"])), 3);
}

#[test]
fn barrier_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("barrier.csv");
    let out = tdg(&[
        "barrier",
        "--scenario",
        scenario("capture.json").to_str().unwrap(),
        "--rays",
        "256",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta_rad,x,y,barrier_residual"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 256);
    for row in &rows {
        assert_eq!(row.len(), 4);
        // 17 significant digits: one before the point, sixteen after.
        let mantissa = row[1].trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{}", row[1]);
        assert!(row[3].parse::<f64>().unwrap().abs() <= 1e-8);
    }

    let svg = std::fs::read_to_string(dir.path().join("barrier.svg")).unwrap();
    let paths: Vec<&str> = svg.lines().filter(|l| l.contains("<path")).collect();
    let closed: Vec<&&str> = paths.iter().filter(|l| l.contains("Z\"")).collect();
    assert_eq!(closed.len(), 2);
    assert_eq!(
        paths
            .iter()
            .filter(|l| l.contains("id=\"barrier\""))
            .count(),
        1
    );
    assert_eq!(
        paths.iter().filter(|l| l.contains("id=\"target\"")).count(),
        1
    );
}

#[test]
fn too_few_rays_exit_2() {
    let out = tdg(&[
        "barrier",
        "--scenario",
        scenario("capture.json").to_str().unwrap(),
        "--rays",
        "8",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--rays"));
}

#[test]
fn solve_capture_and_escape() {
    let out = tdg(&[
        "solve",
        "--verify",
        "--scenario",
        scenario("capture.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = stdout_report(&out);
    let c = &v["capture"];
    assert!((f(&c["capture_point"][0]) - 0.996_459_072_801_325_2).abs() < 1e-12);
    assert!((f(&c["capture_point"][1]) - 0.832_755_082_269_678_9).abs() < 1e-12);
    assert_eq!(c["verified"], true);

    let out = tdg(&[
        "solve",
        "--verify",
        "--scenario",
        scenario("escape.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = stdout_report(&out);
    let e = &v["escape"];
    assert!(f(&e["value"]) > 0.0);
    assert_eq!(e["oracle"]["passed"], true);
    assert_eq!(e["oracle"]["grid"], 801);
    assert!(f(&e["hji_residual"]).abs() <= 1e-9);
}

#[test]
fn solver_non_convergence_exit_5_unless_best_effort() {
    let dir = TempDir::new().unwrap();
    let mut s = load("escape.json");
    s["solver"] = json!({ "max_outer_iterations": 1 });
    let out = tdg_with(&dir, &s, &["solve"]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));

    let out = tdg_with(&dir, &s, &["solve", "--allow-best-effort"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = stdout_report(&out);
    assert_eq!(v["escape"]["solver"]["best_effort"], true);
}

fn simulate(dir: &TempDir, s: &Value) -> (Value, String, String) {
    let csv = dir.path().join("traj.csv");
    let out = tdg_with(dir, s, &["simulate", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = std::fs::read_to_string(dir.path().join("traj.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), json);
    (
        report(&json),
        std::fs::read_to_string(csv).unwrap(),
        std::fs::read_to_string(dir.path().join("traj.svg")).unwrap(),
    )
}

#[test]
fn simulate_matches_solve() {
    let dir = TempDir::new().unwrap();
    let solved = stdout_report(&tdg(&[
        "solve",
        "--scenario",
        scenario("capture.json").to_str().unwrap(),
    ]));
    let (outcome, csv, svg) = simulate(&dir, &load("capture.json"));
    assert_eq!(outcome["outcome"], "captured");
    assert!((f(&outcome["value"]) - f(&solved["capture"]["value"])).abs() <= 1e-4);
    assert_eq!(csv.lines().next(), Some("t,xP,yP,xE,yE,uPx,uPy,uEx,uEy"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 9));
    assert_eq!(csv.lines().count(), f(&outcome["steps"]) as usize + 2);
    assert_eq!(svg.matches("Z\"").count(), 2);
    assert!(svg.contains("id=\"apollonius\""));

    let solved = stdout_report(&tdg(&[
        "solve",
        "--scenario",
        scenario("escape.json").to_str().unwrap(),
    ]));
    let (outcome, _, _) = simulate(&dir, &load("escape.json"));
    assert_eq!(outcome["outcome"], "escaped");
    assert!((f(&outcome["separation"]) - f(&solved["escape"]["value"])).abs() <= 1e-3);
}

#[test]
fn short_horizon_times_out() {
    let dir = TempDir::new().unwrap();
    let mut s = load("escape.json");
    s["sim"] = json!({ "max_time": 0.001 });
    let (outcome, _, _) = simulate(&dir, &s);
    assert_eq!(outcome["outcome"], "timeout");
    assert!(outcome["value"].is_null());
}

#[test]
fn simulate_needs_an_output_path() {
    let out = tdg(&[
        "simulate",
        "--scenario",
        scenario("capture.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_reference_sweep_passes_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = tdg(&[
            "verify",
            "--scenario",
            scenario("capture.json").to_str().unwrap(),
            "--samples",
            "1000",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        std::fs::read_to_string(path).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let v = report(&a);
    assert_eq!(v["passed"], true);
    assert_eq!(v["sample_count"], 1000);
    assert_eq!(v["simulation"]["agree"], v["simulation"]["evaluated"]);
}

#[test]
fn verify_rejects_zero_samples() {
    let out = tdg(&[
        "verify",
        "--scenario",
        scenario("capture.json").to_str().unwrap(),
        "--samples",
        "0",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_failure_exit_6_still_writes_the_report() {
    let dir = TempDir::new().unwrap();
    let mut s = load("escape.json");
    s["solver"] = json!({ "max_outer_iterations": 1 });
    let path = dir.path().join("report.json");
    let out = tdg_with(
        &dir,
        &s,
        &["verify", "--samples", "40", "--out", path.to_str().unwrap()],
    );
    assert_eq!(code(&out), 6, "{}", stderr(&out));
    let v = report(&std::fs::read_to_string(path).unwrap());
    assert_eq!(v["passed"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn ellipse_scenario_runs_every_command() {
    let dir = TempDir::new().unwrap();
    let s = load("ellipse.json");
    for cmd in ["classify", "solve"] {
        let out = tdg_with(&dir, &s, &[cmd, "--verify"]);
        assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
        stdout_report(&out);
    }
    let csv = dir.path().join("b.csv");
    assert_eq!(
        code(&tdg_with(
            &dir,
            &s,
            &["barrier", "--out", csv.to_str().unwrap()]
        )),
        0
    );
    let (outcome, _, _) = simulate(&dir, &s);
    assert_eq!(outcome["outcome"], "escaped");
    let out = tdg_with(&dir, &s, &["verify", "--samples", "60"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout_report(&out)["seed"], 7);
}
