use std::io::Cursor;
use std::path::{Path, PathBuf};

use thermoreason::cli::{run, EXIT_ERROR, EXIT_INCONSISTENT, EXIT_NOT_SOLVABLE, EXIT_OK};
use thermoreason::SolutionReport;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str], input: &str) -> Output {
    let mut stdin = Cursor::new(input.as_bytes().to_vec());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("thermoreason").chain(args.iter().copied()),
        &mut stdin,
        &mut out,
        &mut err,
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn data(rel: &str) -> String {
    format!("{}/data/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn problem(name: &str) -> String {
    data(&format!("problems/{name}.yaml"))
}

// Answers for the isothermal compression problem, in prompt order.
const ISOTHERMAL_SCRIPT: &str =
    "2\n2\n2\n2\n1\n2\n1\n0\n1\n1\nm = 1\nT_1 = 300\nV_1 = 1\nV_2 = 0.5\n\nW_12 Q_12 dU_12\n";

#[test]
fn solve_exit_codes() {
    let ok = cli(
        &["solve", "--problem", &problem("a01_isothermal_compression")],
        "",
    );
    assert_eq!(ok.code, EXIT_OK, "{}", ok.stderr);
    assert_eq!(ok.stdout.matches("## Solution steps").count(), 1);
    assert!(ok.stdout.contains("59688.1"));

    let under = cli(&["solve", "--problem", &problem("a10_underdetermined")], "");
    assert_eq!(under.code, EXIT_NOT_SOLVABLE);
    assert!(under.stderr.contains("NotSolvable") && under.stderr.contains("Q_12"));

    let bad = cli(
        &[
            "solve",
            "--problem",
            &problem("a09_overdetermined_inconsistent"),
            "--format",
            "json",
        ],
        "",
    );
    assert_eq!(bad.code, EXIT_INCONSISTENT);
    assert!(bad.stderr.contains("e_thermal_eos@state_1"));
    let report = SolutionReport::from_json(&bad.stdout).unwrap();
    assert!(report
        .warnings
        .iter()
        .any(|w| w.contains("e_thermal_eos@state_1")));

    let missing = cli(&["solve", "--problem", "/nonexistent.yaml"], "");
    assert_eq!(missing.code, EXIT_ERROR);
}

#[test]
fn malformed_yaml_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.yaml");
    std::fs::write(
        &path,
        "process_class: single_change_of_state\ngiven:\n  m: [1\n",
    )
    .unwrap();
    let out = cli(&["solve", "--problem", path.to_str().unwrap()], "");
    assert_eq!(out.code, EXIT_ERROR);
    assert!(out.stderr.contains("3:"), "{}", out.stderr);
}

#[test]
fn report_and_graph_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let graph = dir.path().join("graph.dot");
    let out = cli(
        &[
            "solve",
            "--problem",
            &problem("a02_isentropic_expansion"),
            "--format",
            "json",
            "--report",
            report.to_str().unwrap(),
            "--graph",
            graph.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.is_empty());
    let r = SolutionReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((r.value("T_2").unwrap() - 328.13414).abs() < 1e-4);
    let dot = std::fs::read_to_string(&graph).unwrap();
    assert!(dot.starts_with("digraph") && dot.contains("e_isentropic_temperature@change_12"));
}

#[test]
fn interactive_matches_batch() {
    let batch = cli(
        &[
            "solve",
            "--problem",
            &problem("a01_isothermal_compression"),
            "--format",
            "json",
        ],
        "",
    );
    let scripted = cli(&["interactive", "--format", "json"], ISOTHERMAL_SCRIPT);
    assert_eq!(scripted.code, EXIT_OK, "{}", scripted.stderr);
    assert_eq!(scripted.stdout, batch.stdout);
    assert!(scripted.stderr.contains("Process class:"));
}

#[test]
fn interactive_reprompts_and_aborts() {
    let script = format!("7\nx\n{ISOTHERMAL_SCRIPT}");
    let out = cli(&["interactive", "--format", "json"], &script);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stderr.matches("enter a number from 1 to 2").count(), 2);

    let bad_value = ISOTHERMAL_SCRIPT.replace("m = 1\n", "m = heavy\nm = -1\nm 1\nm = 1\n");
    let out = cli(&["interactive", "--format", "json"], &bad_value);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stderr.contains("`heavy` is not a number"));
    assert!(out.stderr.contains("expected `name = number`"));

    let out = cli(&["interactive"], "2\n2\n");
    assert_eq!(out.code, EXIT_ERROR);
    assert!(out.stderr.ends_with("aborted\n"));
    assert!(out.stdout.is_empty());
}

#[test]
fn interactive_default_targets() {
    let script = ISOTHERMAL_SCRIPT.replace("W_12 Q_12 dU_12\n", "\n");
    let out = cli(&["interactive", "--format", "json"], &script);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let r = SolutionReport::from_json(&out.stdout).unwrap();
    assert!(r.default_targets);
    assert!(r.value("p_2").is_some());
}

fn copy_ontology(to: &Path) -> PathBuf {
    let dir = to.join("ontology");
    std::fs::create_dir(&dir).unwrap();
    for entry in std::fs::read_dir(data("ontology")).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.join(p.file_name().unwrap())).unwrap();
    }
    dir
}

#[test]
fn validate_ontology_dirs() {
    let ok = cli(&["--ontology", &data("ontology"), "validate"], "");
    assert_eq!(ok.code, EXIT_OK, "{}", ok.stderr);
    assert!(ok.stdout.contains(": ok ("));

    let tmp = tempfile::tempdir().unwrap();
    let dir = copy_ontology(tmp.path());
    let rules = dir.join("rules.yaml");
    let text = std::fs::read_to_string(&rules).unwrap().replace(
        "enable_equation: e_isothermal}",
        "enable_equation: e_isothermal_typo}",
    );
    std::fs::write(&rules, text).unwrap();
    let bad = cli(&["--ontology", dir.to_str().unwrap(), "validate"], "");
    assert_eq!(bad.code, EXIT_ERROR);
    assert!(bad.stderr.contains("e_isothermal_typo"), "{}", bad.stderr);
}

#[test]
fn validate_problem_files() {
    for entry in std::fs::read_dir(data("problems")).unwrap() {
        let p = entry.unwrap().path();
        let out = cli(&["validate", "--problem", p.to_str().unwrap()], "");
        assert_eq!(out.code, EXIT_OK, "{}: {}", p.display(), out.stderr);
    }
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("p.yaml");
    std::fs::write(
        &path,
        "process_class: single_change_of_state\nmaterial: unobtainium\ngiven: {T_9: 1.0}\ntargets: [W_12]\n",
    )
    .unwrap();
    let out = cli(&["validate", "--problem", path.to_str().unwrap()], "");
    assert_eq!(out.code, EXIT_ERROR);
    assert!(out.stderr.contains("unobtainium"), "{}", out.stderr);

    let out = cli(&["validate"], "");
    assert_eq!(out.code, EXIT_ERROR);
}

#[test]
fn list_outputs() {
    let eqs = cli(&["list", "--equations"], "");
    assert_eq!(eqs.code, EXIT_OK);
    assert!(eqs.stdout.lines().any(|l| l.starts_with("e_thermal_eos:")));
    assert!(eqs.stdout.contains("r_isothermal"));

    let mats = cli(&["list", "--materials"], "");
    assert!(mats.stdout.lines().any(|l| l.starts_with("helium:")));

    let concepts = cli(&["list", "--concepts"], "");
    assert!(concepts.stdout.contains("IdealGas is_a"));

    let classes = cli(&["list", "--process-classes"], "");
    assert_eq!(classes.stdout.lines().count(), 2);
}

#[test]
fn ontology_graph() {
    let out = cli(
        &["graph", "--concept", "ChangeOfState", "--format", "json"],
        "",
    );
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!(v.is_object());
    let dot = cli(&["graph"], "");
    assert!(dot.stdout.starts_with("digraph"));
}

#[test]
fn usage_errors() {
    let out = cli(&["frobnicate"], "");
    assert_eq!(out.code, EXIT_ERROR);
    assert!(!out.stderr.is_empty());
    let help = cli(&["--help"], "");
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("solve"));
}
