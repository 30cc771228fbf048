//! End-to-end tests of the `fracop` binary.

use std::process::{Command, Output};

fn fracop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> &str {
    std::str::from_utf8(&o.stdout).unwrap()
}

#[test]
fn mittag_leffler_at_one_is_e() {
    let o = fracop(&["ml", "--gamma", "1", "--zeta", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "x,t,value,converged\n1,0,2.7182818284590451,true\n");
}

#[test]
fn poisson_table_has_state_column() {
    let o = fracop(&["fpp-pmf", "--nu", "1", "--rate", "1", "--t", "1", "--kmax", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<&str> = stdout(&o).lines().collect();
    assert_eq!(lines[0], "k,t,value,converged");
    assert_eq!(lines.len(), 5);
    let p2: f64 = lines[3].split(',').nth(2).unwrap().parse().unwrap();
    assert!((p2 - 0.5 * (-1f64).exp()).abs() < 1e-16);
    assert!(lines[1..]
        .iter()
        .all(|l| l.starts_with(char::is_numeric) && l.ends_with("true")));
}

#[test]
fn heat_polynomial_classical_case() {
    let o = fracop(&["heatpoly", "--nu", "1", "--beta", "2", "--x", "1", "--t", "1"]);
    assert_eq!(stdout(&o), "x,t,value,converged\n1,1,3,true\n");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "wright", "--gamma", "0.5", "--zeta", "1", "--grid", "-3:3:13", "--tgrid", "0:1:2",
    ];
    let (a, b) = (fracop(&args), fracop(&args));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 13 * 2);
}

#[test]
fn json_output_is_well_formed() {
    let o = fracop(&["tricomi", "--grid", "0:2:3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["model"], "tricomi");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["value"], 1.0);
    assert!(rows.iter().all(|r| r["converged"].is_boolean()));
}

#[test]
fn invalid_parameters_exit_with_usage_code() {
    for args in [
        &["ml", "--gamma", "-1", "--x", "1"][..],
        &["heatpoly", "--nu", "1.5", "--beta", "2", "--x", "1", "--t", "1"],
        &["nonsense"],
        &["ml", "--gamma", "1", "--grid", "1:0:3"],
    ] {
        let o = fracop(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn numerical_failures_exit_with_code_three() {
    let o = fracop(&["ml", "--gamma", "1", "--x", "-60"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(std::str::from_utf8(&o.stderr).unwrap().contains("domain"));
}

#[test]
fn unconverged_points_are_flagged_not_hidden() {
    let o = fracop(&[
        "heatpoly", "--nu", "0.5", "--beta", "3.5", "--x", "1", "--t", "0.2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with(",false"), "{}", stdout(&o));
}

#[test]
fn output_file_and_arguments_file() {
    let dir = std::env::temp_dir().join(format!("fracop-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let args_file = dir.join("args.txt");
    std::fs::write(&args_file, "--gamma\n0.5\n--zeta 1\n").unwrap();
    let out = dir.join("ml.csv");
    let o = fracop(&[
        "ml",
        "--args-file",
        args_file.to_str().unwrap(),
        "--x",
        "-1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let direct = fracop(&["ml", "--gamma", "0.5", "--zeta", "1", "--x", "-1"]);
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn list_names_every_model() {
    let o = fracop(&["list"]);
    let text = stdout(&o);
    for name in [
        "ml",
        "wright",
        "tricomi",
        "caputo",
        "heatpoly",
        "plate",
        "spacebvp",
        "fpp-pmf",
        "fpp-pgf",
        "subordination",
        "solve",
    ] {
        assert!(
            text.lines().any(|l| l.split_whitespace().next() == Some(name)),
            "{name}"
        );
    }
}
