use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn genus0(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genus0"))
        .args(args)
        .output()
        .expect("run genus0")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn sinh_sqrt_scan_has_no_violation() {
    let out = genus0(&["cm-scan", "--preset", "sinh_sqrt", "--kmax", "6", "--mmax", "6", "--xgrid", "log:0.1:10:20"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["summary"]["status"], "no-violation-found");
    assert_eq!(v["cells"].as_array().unwrap().len(), 7 * 7 * 20);
    assert_eq!(v["config"]["preset"], "sinh_sqrt");
    assert_eq!(v["config"]["precision"]["precision_bits"], 192);
}

#[test]
fn probe_reports_both_readings() {
    let out = genus0(&["probe-236", "--zeros-inline", "1", "--x", "2", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert!(r["canonical"]["value"].as_str().unwrap().starts_with("7.4074074074074074074074074"));
    assert!(r["literal"]["value"].as_str().unwrap().starts_with("-3.7037037037037037037037037"));
    assert!(r["difference"]["value"].as_str().unwrap().starts_with("1.1111111111111111111111111"));
    assert_eq!(r["bridge_holds"], true);
}

#[test]
fn riemann_check_on_shipped_ordinates() {
    let zeros = data("riemann_zeros_25.txt");
    let out = genus0(&["riemann-check", "--zeros", &zeros, "--kmax", "3", "--mmax", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["summary"]["status"], "no-violation-found");
    let diags: Vec<&str> = v["diagnostics"].as_array().unwrap().iter().map(|d| d.as_str().unwrap()).collect();
    assert!(diags.iter().any(|d| d.contains("2 f'/f")));
    assert!(diags.iter().any(|d| d.contains("25 ordinates")));
}

#[test]
fn conjugate_pair_scan_exits_with_violation() {
    let out = genus0(&[
        "cm-scan",
        "--zeros-inline",
        "1,1",
        "--zeros-inline",
        "1,-1",
        "--kmax",
        "2",
        "--mmax",
        "2",
        "--xgrid",
        "log:0.1:10:5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["summary"]["status"], "violation");
    assert!(!v["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn theta_violation_at_two() {
    let out = genus0(&[
        "theta",
        "--zeros-inline",
        "1,1",
        "--zeros-inline",
        "1,-1",
        "--tgrid",
        "lin:2:2:1",
        "--kmax",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    let value = v["cells"][0]["margin"]["value"].as_str().unwrap();
    // 2 e^{-2} cos 2
    assert!(value.starts_with("-1.12638699984255762"), "{value}");
}

#[test]
fn reports_are_deterministic() {
    let args = ["cm-scan", "--zeros-inline", "1", "--zeros-inline", "4", "--kmax", "3", "--mmax", "3", "--xgrid", "log:0.5:5:4"];
    let a = without_timings(json(&genus0(&args)));
    let b = without_timings(json(&genus0(&args)));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn thread_count_does_not_change_cells() {
    let base = ["cm-scan", "--preset", "sinh_sqrt", "--kmax", "3", "--mmax", "3", "--xgrid", "log:0.1:10:6"];
    let one = json(&genus0(&[&base[..], &["--threads", "1"]].concat()));
    let three = json(&genus0(&[&base[..], &["--threads", "3"]].concat()));
    assert_eq!(one["cells"], three["cells"]);
    assert_eq!(one["summary"], three["summary"]);
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cells.csv");
    let out = genus0(&[
        "cm-scan",
        "--zeros-inline",
        "1",
        "--kmax",
        "1",
        "--mmax",
        "1",
        "--xgrid",
        "lin:1:2:2",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,m,x,value,error_bound,verdict,escalated,note");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("0,0,1.0000000000000000,5.0000"));
}

#[test]
fn empty_grid_is_vacuous() {
    let out = genus0(&["cm-scan", "--zeros-inline", "1", "--xgrid", "lin:1:2:0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["summary"]["status"], "no-violation-found");
    assert!(v["cells"].as_array().unwrap().is_empty());
}

#[test]
fn beta0_of_mixed_set() {
    let out = genus0(&["beta0", "--zeros-inline", "1,1", "--zeros-inline", "1,-1", "--zeros-inline", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let b = json(&out)["result"]["beta0_stored"].as_str().unwrap().to_string();
    assert!(b.starts_with("7.0710678118654752440"), "{b}");
}

#[test]
fn laplace_verify_holds() {
    let out = genus0(&["laplace-verify", "--zeros-inline", "1", "--zeros-inline", "4", "--kmax", "1", "--xgrid", "lin:1:2:2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["all_hold"], true);
}

#[test]
fn order_of_sinh_sqrt_is_near_half() {
    let out = genus0(&["order", "--preset", "sinh_sqrt", "--nmax", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let rho = json(&out)["result"]["order"]["estimate"].as_f64().unwrap();
    assert!((rho - 0.5).abs() < 0.1, "{rho}");
}

#[test]
fn xi_coefficients_start_at_xi_half() {
    let out = genus0(&["xi-coeffs", "--nmax", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let a = json(&out)["result"]["coefficients"].clone();
    assert_eq!(a.as_array().unwrap().len(), 3);
    assert!(a[0]["value"].as_str().unwrap().starts_with("4.971207781"));
}

#[test]
fn presets_are_listed() {
    let out = genus0(&["presets"]);
    assert_eq!(out.status.code(), Some(0));
    let names = json(&out)["result"]["presets"].clone();
    assert!(names.as_array().unwrap().iter().any(|n| n == "sinh_sqrt"));
}

#[test]
fn usage_errors_exit_one() {
    let bad: [&[&str]; 8] = [
        &["cm-scan"],
        &["cm-scan", "--zeros-inline", "1", "--xgrid", "log:0:1:3"],
        &["cm-scan", "--zeros-inline", "1", "--tgrid", "lin:1:2:2"],
        &["cm-scan", "--zeros-inline", "1", "--preset", "sinh_sqrt"],
        &["cm-scan", "--preset", "airy"],
        &["probe-236", "--zeros-inline", "1,2,3"],
        &["beta0", "--format", "csv", "--zeros-inline", "1"],
        &["frobnicate"],
    ];
    for args in bad {
        let out = genus0(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn malformed_zero_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# nothing here\n").unwrap();
    let out = genus0(&["riemann-check", "--zeros", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let decreasing = dir.path().join("dec.txt");
    std::fs::write(&decreasing, "21.022039638771554992628479593896902777\n14.134725141734693790457251983562470270\n").unwrap();
    let out = genus0(&["riemann-check", "--zeros", decreasing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "1 2 3\n").unwrap();
    let out = genus0(&["cm-scan", "--zeros", junk.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
