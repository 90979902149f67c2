//! End-to-end checks of the `concentrate` binary: flag validation,
//! config file merging, report shapes, exit codes, determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn concentrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concentrate"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_of(output: &Output) -> &str {
    std::str::from_utf8(&output.stdout).expect("utf-8 stdout")
}

fn stderr_of(output: &Output) -> &str {
    std::str::from_utf8(&output.stderr).expect("utf-8 stderr")
}

fn json_of(output: &Output) -> serde_json::Value {
    serde_json::from_str(stdout_of(output)).expect("stdout parses as JSON")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("concentrate-{}-{name}", std::process::id()))
}

#[test]
fn missing_required_flags_are_usage_errors() {
    let out = concentrate(&["run", "--alpha-sq", "0.75", "--trials", "10", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--protocol"));

    let out = concentrate(&["run", "--protocol", "proposal1", "--trials", "10", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--alpha-sq"));

    let out = concentrate(&["run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--trials"));
}

#[test]
fn invalid_values_are_usage_errors() {
    let bad = [
        vec!["run", "--protocol", "proposal3", "--alpha-sq", "0.75", "--trials", "1", "--seed", "1"],
        vec!["run", "--protocol", "proposal1", "--alpha-sq", "0.3", "--trials", "1", "--seed", "1"],
        vec!["run", "--protocol", "proposal1", "--alpha-sq", "1.0", "--trials", "1", "--seed", "1"],
        vec!["run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "0", "--seed", "1"],
        vec!["run", "--protocol", "cat", "--parties", "2", "--alpha-sq", "0.75", "--trials", "1", "--seed", "1"],
        vec!["run", "--protocol", "cat", "--parties", "11", "--alpha-sq", "0.75", "--trials", "1", "--seed", "1"],
        vec!["run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "1", "--seed", "1", "--format", "xml"],
        vec!["run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "1", "--seed", "1", "--sigma", "0"],
        vec!["exact", "--protocol", "proposal1-iterate", "--alpha-sq", "0.75"],
    ];
    for args in &bad {
        let out = concentrate(args);
        assert_eq!(out.status.code(), Some(2), "args: {args:?}");
        assert!(!stderr_of(&out).is_empty(), "args: {args:?}");
    }
}

#[test]
fn exact_subcommand_rejects_sampling_flags() {
    // trials and seed belong to `run` only
    let out = concentrate(&["exact", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "run", "--protocol", "ent-assisted", "--alpha-sq", "0.8", "--trials", "20000", "--seed",
        "1234",
    ];
    let first = concentrate(&args);
    let second = concentrate(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let path = temp_path("merge.cfg");
    std::fs::write(
        &path,
        "# campaign defaults\nprotocol = proposal2\nalpha-sq = 0.8  # flags win over this\ntrials = 5000\nseed = 5\nformat = csv\n",
    )
    .unwrap();
    let out = concentrate(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--alpha-sq",
        "0.75",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report = json_of(&out);
    assert_eq!(report["config"]["protocol"], "proposal2");
    assert_eq!(report["config"]["trials"], 5000);
    assert_eq!(report["config"]["seed"], 5);
    // the flag overrode the file's 0.8
    let alpha_sq = report["config"]["alpha_sq"].as_f64().unwrap();
    assert!((alpha_sq - 0.75).abs() < 1e-12);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn config_file_errors_are_reported() {
    let unknown = temp_path("unknown.cfg");
    std::fs::write(&unknown, "bogus = 1\n").unwrap();
    let out = concentrate(&["exact", "--protocol", "proposal1", "--alpha-sq", "0.75", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown config key"));
    std::fs::remove_file(&unknown).unwrap();

    let malformed = temp_path("malformed.cfg");
    std::fs::write(&malformed, "protocol proposal1\n").unwrap();
    let out = concentrate(&["exact", "--protocol", "proposal1", "--alpha-sq", "0.75", "--config", malformed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("key=value"));
    std::fs::remove_file(&malformed).unwrap();

    let out = concentrate(&["exact", "--protocol", "proposal1", "--alpha-sq", "0.75", "--config", "/nonexistent/file.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_reports_use_the_fixed_header() {
    let out = concentrate(&[
        "run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "1000", "--seed",
        "42", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "round,pairs_in,successes,empirical_p,std_error,analytic_p,z_score"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("1,1000,"));
    assert_eq!(lines.next(), None);
}

#[test]
fn exact_reports_carry_branches_and_run_reports_do_not() {
    let exact = json_of(&concentrate(&["exact", "--protocol", "proposal2", "--alpha-sq", "0.8"]));
    let branches = exact["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 3);
    assert_eq!(exact["config"]["trials"], serde_json::Value::Null);
    assert_eq!(branches[0]["bell"], "phi-plus");
    assert_eq!(exact["verdict"], "pass");

    let run = json_of(&concentrate(&[
        "run", "--protocol", "proposal2", "--alpha-sq", "0.8", "--trials", "100", "--seed", "1",
    ]));
    assert!(run.get("branches").is_none());
    assert!(run.get("trace").is_none());
}

#[test]
fn single_trial_campaigns_include_the_trace() {
    let report = json_of(&concentrate(&[
        "run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "1", "--seed", "9",
    ]));
    let trace = report["trace"].as_array().unwrap();
    assert_eq!(trace.len(), 1);
    let outcome = trace[0]["outcome"].as_str().unwrap();
    assert!(outcome == "0" || outcome == "1");
    let p = trace[0]["probability"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let args = [
        "exact", "--protocol", "ent-assisted", "--alpha-sq", "0.75",
    ];
    let on_stdout = concentrate(&args);
    assert_eq!(on_stdout.status.code(), Some(0));

    let path = temp_path("report.json");
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let out = concentrate(&with_out);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, on_stdout.stdout);
    std::fs::remove_file(&path).unwrap();

    let out = concentrate(&["exact", "--protocol", "proposal1", "--alpha-sq", "0.75", "--out", "/nonexistent-dir/report.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_flag_gates_the_exit_code() {
    // 0.375 * 997 is not an integer, so the deviation cannot be zero
    // and any tiny sigma forces a deterministic fail
    let failing = concentrate(&[
        "run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "997", "--seed",
        "1", "--sigma", "1e-9", "--check",
    ]);
    assert_eq!(failing.status.code(), Some(1));
    let report = json_of(&failing);
    assert_eq!(report["verdict"], "fail");

    // without --check the same campaign reports fail but exits 0
    let reported = concentrate(&[
        "run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "997", "--seed",
        "1", "--sigma", "1e-9",
    ]);
    assert_eq!(reported.status.code(), Some(0));
    assert_eq!(json_of(&reported)["verdict"], "fail");

    let passing = concentrate(&[
        "run", "--protocol", "proposal1", "--alpha-sq", "0.75", "--trials", "10000", "--seed",
        "42", "--check",
    ]);
    assert_eq!(passing.status.code(), Some(0), "stderr: {}", stderr_of(&passing));
}

#[test]
fn logging_goes_to_stderr_not_stdout() {
    let out = Command::new(env!("CARGO_BIN_EXE_concentrate"))
        .args(["exact", "--protocol", "proposal1", "--alpha-sq", "0.75"])
        .env("CONCENTRATE_LOG", "debug")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    // stdout stays pure JSON
    let _ = json_of(&out);
    assert!(stderr_of(&out).contains("exact proposal1"));
}

#[test]
fn iterate_campaigns_report_one_row_per_round() {
    let report = json_of(&concentrate(&[
        "run", "--protocol", "proposal1-iterate", "--alpha-sq", "0.75", "--trials", "2000",
        "--rounds", "3", "--seed", "77",
    ]));
    let rounds = report["rounds"].as_array().unwrap();
    assert_eq!(rounds.len(), 3);
    assert_eq!(rounds[0]["pairs_in"], 2000);
    for (k, row) in rounds.iter().enumerate() {
        assert_eq!(row["round"], k as u64 + 1);
    }
    // pairs alive shrink by the successes of the previous round
    let s0 = rounds[0]["successes"].as_u64().unwrap();
    assert_eq!(rounds[1]["pairs_in"].as_u64().unwrap(), 2000 - s0);
}
