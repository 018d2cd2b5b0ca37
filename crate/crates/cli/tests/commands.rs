use std::path::PathBuf;
use std::process::{Command, Output};

use paramreal::dyadic::Dyadic;
use paramreal::interval::DyadicInterval;
use paramreal::meter::attach;
use paramreal::names::{cauchy_of_dyadic, cauchy_of_rational, parse_tabulated, write_tabulated, TabulatedName};
use paramreal::translate::cauchy_to_interval;

fn pr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pr")).args(args).output().expect("pr runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf8")
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn write(name: &str, text: &str) -> String {
    let p = tmp(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn eval_reports_and_exit_codes() {
    let ok = pr(&["eval", "--expr", "1/2 * 2", "--prec", "10", "--strategy", "restart"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["enclosure"]["approx"], 1.0);

    let syntax = pr(&["eval", "--expr", "(1+2", "--prec", "4"]);
    assert_eq!(syntax.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&syntax.stderr).contains("offset 4"));

    let zero_div = pr(&["eval", "--expr", "1/0", "--prec", "4"]);
    assert_eq!(zero_div.status.code(), Some(1));

    let bound = pr(&["eval", "--expr", "iterate(x -> r*x*(1-x), 20, 1/2)", "--prec", "40", "--bind", "r=7/2"]);
    assert_eq!(bound.status.code(), Some(0));
}

#[test]
fn reports_are_deterministic() {
    let args = ["eval", "--expr", "iterate(x -> x*x - 1/2, 5, 3/4)", "--prec", "30"];
    assert_eq!(stdout(&pr(&args)), stdout(&pr(&args)));
}

#[test]
fn translate_then_measure_the_zero_name() {
    let input = write("zero.cauchy", &write_tabulated(&cauchy_of_dyadic(Dyadic::zero()), 40).unwrap());
    let out = tmp("zero.interval").to_string_lossy().into_owned();
    let t = pr(&["translate", "--in", &input, "--from", "cauchy", "--to", "interval", "--depth", "32", "--out", &out]);
    assert_eq!(t.status.code(), Some(0), "{}", String::from_utf8_lossy(&t.stderr));
    let TabulatedName::Interval(phi) = parse_tabulated(&std::fs::read_to_string(&out).unwrap()).unwrap() else {
        panic!("not an interval file")
    };
    for n in 0..=32u64 {
        assert_eq!(phi.query(&n).unwrap(), DyadicInterval::ball(Dyadic::zero(), Dyadic::pow2(-(n as i64))));
    }

    let m = pr(&["measure", "--in", &out, "--repr", "interval", "--n", "0..8"]);
    assert_eq!(m.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&m)).unwrap();
    for (n, row) in v["rows"].as_array().unwrap().iter().enumerate() {
        assert_eq!(row["conv_index"], n as u64 + 1);
        // No finite enclosure of nonzero width certifies the magnitude 0.
        assert_eq!((row["mag_low"].as_u64(), row["mag_high"].as_u64()), (Some(0), Some(1)));
    }

    let wrong = pr(&["measure", "--in", &out, "--repr", "cauchy", "--n", "0..2"]);
    assert_eq!(wrong.status.code(), Some(2));
    let back = pr(&["translate", "--in", &out, "--from", "interval", "--to", "cauchy", "--depth", "8"]);
    assert_eq!(back.status.code(), Some(0));
    assert!(stdout(&back).starts_with("# repr: cauchy"));
}

#[test]
fn format_errors_name_the_line() {
    let bad = write("bad.cauchy", "# repr: cauchy\n0\t+ 0 0\nthree\t+ 1 0\n");
    let o = pr(&["translate", "--in", &bad, "--from", "cauchy", "--to", "interval", "--depth", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let missing = pr(&["measure", "--in", "/nonexistent/file", "--repr", "interval", "--n", "0..1"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn check_bound_verdicts() {
    let phi = cauchy_of_rational(1, 3).unwrap();
    let (input, trace) = attach(&phi);
    let out = cauchy_to_interval(&input);
    for n in 0..=16 {
        out.query(&n).unwrap();
    }
    let trace_path = write("third.trace.json", &trace.snapshot().to_json("cauchy_to_interval input"));
    let table = write("third.table", "0 1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18\n");
    let ok = pr(&["check-bound", "--trace", &trace_path, "--sop", "X*X + 10", "--table", &table]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let bad = pr(&["check-bound", "--trace", &trace_path, "--sop", "1", "--table", &table]);
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&bad)).unwrap();
    assert_eq!(v["verdict"], "violated");
}

#[test]
fn benches() {
    let s = pr(&["bench", "strategies", "--prec", "8,24"]);
    assert_eq!(s.status.code(), Some(0), "{}", stdout(&s));
    let m = pr(&["bench", "modulus", "--family", "K=4..8"]);
    assert_eq!(m.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&m)).unwrap();
    assert!(v["growth_ratio"].as_f64().unwrap() > 1.5);
    let starved = pr(&["bench", "modulus", "--family", "K=10..10", "--fuel", "5"]);
    assert_eq!(starved.status.code(), Some(3));
    let t = pr(&["bench", "translations", "--n-max", "8"]);
    assert_eq!(t.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&t)).unwrap();
    assert!(v["delay"]["C"].as_u64().unwrap() > 0);
}
