use std::process::{Command, Output};

use cvqec_core::analysis::{estimate_fidelity_mc, CSV_HEADER};
use cvqec_core::{CodeParams, GaussianState, Policy};

fn cvqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqec")).args(args).output().expect("spawn cvqec")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_matches_library_estimate() {
    let o = cvqec(&["run", "--gamma", "0.2", "--r", "1", "--xbar2", "2", "--runs", "500", "--seed", "17"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 12);
    let lib = estimate_fidelity_mc(
        &GaussianState::coherent(0.0, 0.0),
        &CodeParams::new(1.0, 2.0, 0.2).unwrap(),
        Policy::ThresholdSign,
        500,
        17,
    )
    .unwrap();
    assert_eq!(row[8].parse::<f64>().unwrap(), lib.mean);
    assert_eq!(row[9].parse::<f64>().unwrap(), lib.stderr);
    assert_eq!(row[10], "500");
    assert!(lines.next().is_none());
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn sweep_to_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for path in &paths {
        let o = cvqec(&[
            "sweep", "--param", "r", "--values", "0,0.5,1", "--gamma", "0.3", "--r", "0", "--xbar2", "0.2",
            "--runs", "300", "--seed", "5", "--policy", "map", "--out", path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 4);
    for line in text.lines().skip(1) {
        assert!(line.starts_with("r,"));
    }
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let o = cvqec(&["branches", "--gamma", "0.2", "--xbar2", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 9);
    for field in text.lines().skip(1).flat_map(|l| l.split(',').skip(1)) {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
}

#[test]
fn syndrome_table_lists_every_pattern() {
    let o = cvqec(&["syndrome-table"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\n1,+,0,E1\n"));
    assert!(text.contains("\n23,-,0,E23\n"));
    assert!(text.ends_with("123,0,0,none\n"));
}

#[test]
fn misclass_rows_sum_to_one() {
    let o = cvqec(&["misclass", "--gamma", "0.3", "--r", "0", "--xbar2", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("true_pattern,none,E1,E2,E3,E12,E13,E23\n"));
    for line in text.lines().skip(1) {
        let s: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-9, "{line}");
    }
}

#[test]
fn invalid_arguments_exit_with_two() {
    for args in [
        &["run", "--gamma", "1.5", "--r", "1", "--xbar2", "1", "--seed", "1"][..],
        &["run", "--gamma", "0.1", "--r", "1", "--xbar2", "1"],
        &["run", "--gamma", "0.1", "--r", "1", "--xbar2", "1", "--seed", "1", "--runs", "0"],
        &["run", "--gamma", "0.1", "--r", "1", "--xbar2", "1", "--seed", "1", "--policy", "best"],
        &["sweep", "--param", "gamma", "--values", "0.1,2", "--gamma", "0.1", "--r", "1", "--xbar2", "1", "--seed", "1"],
        &["branches", "--gamma", "0.1", "--xbar2", "nan"],
        &["frobnicate"],
    ] {
        let o = cvqec(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let o = cvqec(&["syndrome-table", "--out", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}
