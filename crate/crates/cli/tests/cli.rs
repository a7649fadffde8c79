use std::path::Path;
use std::process::{Command, Output};

fn jhi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jhi")).args(args).output().expect("running jhi")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn list_models_shows_the_catalog() {
    let o = jhi(&["list-models"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().any(|l| l.starts_with("rigid_body") && l.contains("realization=first_order_approximate")));
    assert!(text.lines().any(|l| l.starts_with("jacobi2d") && l.contains("variants=quadratic,trig")));
}

#[test]
fn contact_trajectory_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = jhi(&["simulate", "--model", "contact", "--span", "0,2", "--ds", "0.1", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["time", "q", "p", "z", "t"]);
    assert_eq!(rows.len(), 21);
    let last_time: f64 = rows[20][0].parse().unwrap();
    assert_eq!(last_time, 2.0);
    // 17 significant digits in every field
    for field in &rows[3] {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{field}");
    }
}

#[test]
fn repeated_runs_are_byte_identical_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["drift", "--model", "jacobi4d", "--span", "0,1", "--ds", "0.05", "--out", out];
    let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();
    assert_eq!(code(&jhi(&args)), 0);
    let first = (read("hamiltonian_drift.csv"), read("casimir_drift_C.csv"), read("run_manifest.toml"));
    assert_eq!(code(&jhi(&args)), 0);
    let second = (read("hamiltonian_drift.csv"), read("casimir_drift_C.csv"), read("run_manifest.toml"));
    assert_eq!(first.0, second.0);
    assert_eq!(first.1, second.1);
    let body = |m: &str| m.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert!(first.2.starts_with("# generated at"));
    assert_eq!(body(&first.2), body(&second.2));
}

#[test]
fn empty_emit_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = jhi(&["simulate", "--model", "jacobi3d", "--emit=", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(files_in(&out), ["run_manifest.toml"]);
}

#[test]
fn damped_order_study_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("damped.toml");
    let out = dir.path().join("out");
    std::fs::write(
        &config,
        format!(
            "model = \"damped\"\nmethod = \"jhi1\"\nspan = [0.0, 2.0]\nds = 0.5\nlevels = 7\nreference_factor = 8\noutputs = {:?}\n\n[params]\ngamma = 0.01\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = jhi(&["order-study", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("order_study.csv"));
    assert_eq!(header, ["ds", "error_l2", "observed_order"]);
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0][2], "");
    let finest: f64 = rows[6][1].parse().unwrap();
    assert!(finest > 0.5e-5 && finest < 2e-5, "finest error {finest}");
    for r in &rows[4..] {
        let p: f64 = r[2].parse().unwrap();
        assert!((p - 2.0).abs() < 0.15, "order {p}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "model = \"jacobi3d\"\nds = 0.5\nspan = [0.0, 1.0]\n").unwrap();
    let out = dir.path().to_str().unwrap();
    let o = jhi(&["simulate", "--config", config.to_str().unwrap(), "--ds", "0.25", "--x0", "-0.5,1,2", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), -0.5);
}

#[test]
fn configuration_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["simulate", "--model", "nope", "--out", out],
        vec!["simulate", "--model", "jacobi3d", "--ds", "0", "--out", out],
        vec!["simulate", "--model", "jacobi3d", "--method", "euler", "--out", out],
        vec!["simulate", "--model", "jacobi3d", "--x0", "1,2", "--out", out],
        vec!["simulate", "--model", "jacobi3d", "--method", "symplectic_euler", "--out", out],
        vec!["simulate", "--model", "damped", "--param", "omega=2", "--out", out],
        vec!["drift", "--model", "contact", "--emit", "casimir_drift", "--out", out],
        vec!["simulate"],
    ] {
        assert_eq!(code(&jhi(&args)), 2, "{args:?}");
    }
}

#[test]
fn step_failure_keeps_partial_output_and_exits_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = jhi(&["simulate", "--model", "lotka_volterra", "--ds", "0.25", "--span", "0,1", "--out", out]);
    assert_eq!(code(&o), 1);
    assert_eq!(files_in(dir.path()), ["failure_report.txt", "run_manifest.toml", "trajectory.csv"]);
    let report = std::fs::read_to_string(dir.path().join("failure_report.txt")).unwrap();
    assert!(report.contains("step 1 failed"), "{report}");
    let (_, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 2);
}

#[test]
fn reproduce_reports_selected_criteria() {
    let o = jhi(&["reproduce-paper", "--only", "1,8"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "criterion,passed,title,failed_checks");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,true,"));
    assert!(lines[2].starts_with("8,true,"));
}

#[test]
fn inflated_expectations_are_reported_as_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = jhi(&["reproduce-paper", "--only", "3", "--scale-expected", "3=10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let (_, rows) = read_csv(&dir.path().join("reproduction_report.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "false");
    assert!(rows[0][3].contains("jhi1 error"), "{:?}", rows[0]);
}

#[test]
fn full_report_has_one_row_per_criterion() {
    let o = jhi(&["reproduce-paper"]);
    let (header, rows) = {
        let mut r = csv::Reader::from_reader(o.stdout.as_slice());
        let h: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
        let rows: Vec<Vec<String>> = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
        (h, rows)
    };
    assert_eq!(header.len(), 4);
    let ids: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ids, ["1", "2", "3", "4", "5", "6", "7", "8", "9"]);
    let all_passed = rows.iter().all(|r| r[1] == "true");
    assert_eq!(code(&o), if all_passed { 0 } else { 1 });
}
