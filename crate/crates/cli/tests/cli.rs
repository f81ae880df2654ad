//! End-to-end tests of the `pfcoset` binary: output contents, JSON
//! round-trips and exit codes.

use std::process::{Command, Output};
use std::str::FromStr;

use pfcoset_core::qseries::{QSeries, Rat};

fn pfcoset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfcoset"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = pfcoset(args);
    assert!(
        out.status.success(),
        "pfcoset {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn info_prints_derived_level_data() {
    let text = stdout(&["info", "--u", "4", "--v", "3"]);
    for needle in ["k = -2/3", "t = 4/3", "w = 2", "p = 6", "c~ = -5/2"] {
        assert!(text.contains(needle), "missing {needle:?} in {text:?}");
    }
}

#[test]
fn char_json_round_trips_and_matches_known_expansion() {
    let c0 = stdout(&[
        "char", "--u", "4", "--v", "3", "C[0;1]", "--order", "5", "--format", "json",
    ]);
    let c3 = stdout(&[
        "char", "--u", "4", "--v", "3", "C[0;3]", "--order", "5", "--format", "json",
    ]);
    let parse = |s: &str| {
        let v: serde_json::Value = serde_json::from_str(s).unwrap();
        QSeries::from_json(&v).unwrap()
    };
    let total = parse(&c0).add(&parse(&c3));
    // q^{-c~/24} (1 + q^{3/2} + q^2 + 2q^{5/2} + 2q^3 + ...)
    let offset = Rat::from_str("5/48").unwrap();
    let expect = [("0", 1), ("3/2", 1), ("2", 1), ("5/2", 2), ("3", 2), ("7/2", 3)];
    for (e, c) in expect {
        let exponent = Rat::from_str(e).unwrap() + &offset;
        assert_eq!(
            total.coeff(&exponent),
            Rat::from_str(&c.to_string()).unwrap(),
            "coefficient at {e}"
        );
    }
}

#[test]
fn enumerate_extended_counts() {
    let text = stdout(&[
        "enumerate", "--extended", "--u", "4", "--v", "3", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["count"], 36);
    let text = stdout(&[
        "enumerate", "--extended", "--u", "3", "--v", "2", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["count"], 4);
}

#[test]
fn fuse_and_gfuse_products() {
    let text = stdout(&["fuse", "--u", "4", "--v", "3", "C[0;3]", "C[0;3]"]);
    assert!(text.contains("C[0;1]"), "G x G = vacuum: {text}");
    let text = stdout(&["gfuse", "--u", "4", "--v", "3", "D[2/3;1,1]", "D[2/3;1,1]"]);
    assert!(text.contains("Grothendieck"), "{text}");
    // affine simple current square
    let text = stdout(&["fuse", "--u", "4", "--v", "3", "sf^1(L[3])", "sf^1(L[3])"]);
    assert!(text.contains("sf^2(L[1])"), "{text}");
}

#[test]
fn affine_char_needs_window_and_prints_components() {
    let text = stdout(&[
        "char", "--u", "3", "--v", "2", "sf^0(L[1])", "--order", "4", "--window", "3",
    ]);
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.contains("z^(0):"), "{text}");
}

#[test]
fn verify_passes_with_exit_zero_and_emits_json_lines() {
    let out = pfcoset(&[
        "verify", "all", "--u", "3", "--v", "2", "--order", "40", "--digits", "45",
        "--tol", "1e-20", "--format", "json",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8, "one JSON line per check");
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["pass"], true, "{line}");
    }
}

#[test]
fn verify_failure_exits_one() {
    // an impossible tolerance forces a fail flag without an error
    let out = pfcoset(&[
        "verify", "t", "--u", "3", "--v", "2", "--order", "60", "--digits", "80",
        "--tol", "1e-130",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let out = pfcoset(&["char", "--u", "4", "--v", "3", "Z[0;1]"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pfcoset(&["info", "--u", "6", "--v", "3"]);
    assert_eq!(out.status.code(), Some(2), "non-coprime level");
    let out = pfcoset(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2), "unknown subcommand");
    // parity violation in a label
    let out = pfcoset(&["char", "--u", "4", "--v", "3", "C[1/2;1]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theta_and_gamma_series() {
    let text = stdout(&["theta", "0", "--u", "4", "--v", "3", "--order", "30"]);
    assert!(text.contains("1 + 2*q^6 + 2*q^24"), "{text}");
    let text = stdout(&["gamma", "0", "1", "--u", "3", "--v", "2", "--order", "8", "--format", "csv"]);
    assert!(text.starts_with("exponent,coefficient"), "{text}");
}

#[test]
fn smatrix_csv_has_rows_per_label() {
    let text = stdout(&[
        "smatrix", "gamma", "--u", "4", "--v", "3", "--digits", "30", "--format", "csv",
    ]);
    assert_eq!(text.lines().count(), 3);
}
