//! Command drivers. Every command yields a report and an exit code; reports
//! are JSON objects carrying `"schema": 1` and nothing time dependent.

use std::fmt;
use std::fs;
use std::sync::Arc;

use paramreal::bitcodec::MonotoneTable;
use paramreal::dyadic::Dyadic;
use paramreal::funcspace::psi_k_probes;
use paramreal::interval::DyadicInterval;
use paramreal::meter::{self, attach, check_bound, fit, CostTrace, Verdict};
use paramreal::names::{
    cauchy_corpus, measure_mu_interval, measure_table, parse_tabulated, validate, write_tabulated, Kind,
    NameError, TabulatedName,
};
use paramreal::sop::{Polynomial, Sop};
use paramreal::translate::{
    cauchy_to_interval, cauchy_to_interval_staged, delay_transform, interval_to_cauchy, irram_to_interval,
    normalize_interval, ResumableTranslation,
};
use serde_json::{json, Value};

use crate::expr::{eval_expr, logistic, parse, parse_binding, EvalError, Expr, Strategy, TREE_NODE_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FUEL: i32 = 3;

/// A failed command; `code` is the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CmdError {}

fn usage(message: impl Into<String>) -> CmdError {
    CmdError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<NameError> for CmdError {
    fn from(e: NameError) -> Self {
        let code = match e {
            NameError::FuelExhausted { .. } => EXIT_FUEL,
            NameError::OutOfTable(_) | NameError::Table(_) | NameError::Codec(_) => EXIT_USAGE,
            _ => EXIT_VERIFY,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for CmdError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Name(n) => n.into(),
            EvalError::Syntax { .. } | EvalError::Unbound(_) | EvalError::UnknownFunction(_) => usage(e.to_string()),
            e if e.is_fuel() => CmdError {
                code: EXIT_FUEL,
                message: e.to_string(),
            },
            e => CmdError {
                code: EXIT_VERIFY,
                message: e.to_string(),
            },
        }
    }
}

/// A finished command: its report and exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub code: i32,
}

impl Outcome {
    fn json(v: Value, code: i32) -> Self {
        Outcome {
            report: serde_json::to_string_pretty(&v).expect("json value") + "\n",
            code,
        }
    }
}

fn read(path: &str) -> Result<String, CmdError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))
}

fn interval_json(j: &DyadicInterval) -> Value {
    match j.endpoints() {
        None => json!({ "text": j.to_text() }),
        Some((lo, hi)) => json!({
            "text": j.to_text(),
            "lo": lo.to_string(),
            "hi": hi.to_string(),
            "approx": j.center().map(Dyadic::to_f64),
        }),
    }
}

fn trace_json(t: &CostTrace) -> Value {
    json!({
        "work_units": t.work_units,
        "query_count": t.query_count,
        "bits_read": t.bits_read,
        "bits_written": t.bits_written,
        "peak_live_nodes": t.peak_live_nodes,
    })
}

/// Parses `A..B` (inclusive) or a single natural.
pub fn parse_range(text: &str) -> Result<(u64, u64), CmdError> {
    let bad = || usage(format!("bad range `{text}`, expected A..B"));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

// ---------------------------------------------------------------------------
// eval

pub fn cmd_eval(expr: &str, prec: u64, strategy: Strategy, binds: &[String]) -> Result<Outcome, CmdError> {
    let e = parse(expr)?;
    let mut env = std::collections::HashMap::new();
    for b in binds {
        let (k, v) = parse_binding(b)?;
        env.insert(k, v);
    }
    let e = e.bind(&env);
    let (result, trace) = eval_expr(&e, prec, strategy);
    let j = result?;
    Ok(Outcome::json(
        json!({
            "schema": 1,
            "command": "eval",
            "expr": e.to_string(),
            "prec": prec,
            "strategy": format!("{strategy:?}").to_lowercase(),
            "enclosure": interval_json(&j),
            "cost": trace_json(&trace),
        }),
        EXIT_OK,
    ))
}

// ---------------------------------------------------------------------------
// translate / measure

fn load(path: &str, declared: Kind) -> Result<TabulatedName, CmdError> {
    let name = parse_tabulated(&read(path)?).map_err(|e| usage(format!("{path}:{e}")))?;
    if name.kind() != declared {
        return Err(usage(format!("{path}: file holds a {} name, not {declared}", name.kind())));
    }
    Ok(name)
}

fn parse_kind(text: &str) -> Result<Kind, CmdError> {
    text.parse().map_err(|e: NameError| usage(e.to_string()))
}

/// Converts a tabulated real name and tabulates the result on `0..=depth`.
/// The output is validated to `depth`; a violation gives exit code 1.
pub fn cmd_translate(path: &str, from: &str, to: &str, depth: u64) -> Result<Outcome, CmdError> {
    let (from, to) = (parse_kind(from)?, parse_kind(to)?);
    let input = load(path, from)?;
    let (text, report) = match (input, to) {
        (TabulatedName::Cauchy(phi), Kind::Interval) => {
            let out = cauchy_to_interval(&phi);
            (write_tabulated(&out, depth)?, validate(&out, depth, None))
        }
        (TabulatedName::Cauchy(phi), Kind::Cauchy) => (write_tabulated(&phi, depth)?, validate(&phi, depth, None)),
        (TabulatedName::Interval(phi), Kind::Cauchy) => {
            let out = interval_to_cauchy(&phi);
            (write_tabulated(&out, depth)?, validate(&out, depth, None))
        }
        (TabulatedName::Interval(phi), Kind::Interval) => {
            let out = normalize_interval(&phi, &Polynomial::x())?;
            (write_tabulated(&out, depth)?, validate(&out, depth, None))
        }
        (TabulatedName::Irram(phi), Kind::Interval) => {
            let out = irram_to_interval(&phi);
            (write_tabulated(&out, depth)?, validate(&out, depth, None))
        }
        (TabulatedName::Irram(phi), Kind::Cauchy) => {
            let out = interval_to_cauchy(&irram_to_interval(&phi));
            (write_tabulated(&out, depth)?, validate(&out, depth, None))
        }
        (_, to) => return Err(usage(format!("no translation from {from} to {to}"))),
    };
    if report.is_valid() {
        Ok(Outcome {
            report: text,
            code: EXIT_OK,
        })
    } else {
        Err(CmdError {
            code: EXIT_VERIFY,
            message: format!("translated name fails validation: {report}"),
        })
    }
}

pub fn cmd_measure(path: &str, repr: &str, range: (u64, u64), fuel: u64) -> Result<Outcome, CmdError> {
    let kind = parse_kind(repr)?;
    let input = load(path, kind)?;
    let mut rows = Vec::new();
    for n in range.0..=range.1 {
        let b = match &input {
            TabulatedName::Cauchy(phi) => measure_mu_interval(&cauchy_to_interval(phi), n, fuel)?,
            TabulatedName::Interval(phi) => measure_mu_interval(phi, n, fuel)?,
            TabulatedName::Irram(phi) => measure_mu_interval(phi, n, fuel)?,
        };
        rows.push(json!({
            "n": n,
            "conv_index": b.conv_index,
            "mag_low": b.mag_low,
            "mag_high": b.mag_high,
            "mu": b.mu(),
            "estimate": b.estimate,
        }));
    }
    Ok(Outcome::json(
        json!({ "schema": 1, "command": "measure", "repr": kind.to_string(), "rows": rows }),
        EXIT_OK,
    ))
}

// ---------------------------------------------------------------------------
// check-bound

pub fn cmd_check_bound(trace_path: &str, sop: &str, table_path: &str, n: Option<u64>) -> Result<Outcome, CmdError> {
    let trace = CostTrace::from_json(&read(trace_path)?).map_err(|e| usage(format!("{trace_path}: {e}")))?;
    let sop = Sop::parse(sop).map_err(|e| usage(e.to_string()))?;
    let table = MonotoneTable::parse_text(&read(table_path)?).map_err(|e| usage(format!("{table_path}: {e}")))?;
    let n = n.unwrap_or(u64::MAX);
    let verdict = check_bound(&trace, &sop, &table, n).map_err(|e| usage(e.to_string()))?;
    let (v, code) = match verdict {
        Verdict::Dominated => (json!({ "verdict": "dominated" }), EXIT_OK),
        Verdict::Violated(r) => (
            json!({ "verdict": "violated", "n": r.n, "observed": r.observed, "bound": r.bound }),
            EXIT_VERIFY,
        ),
    };
    let mut report = json!({ "schema": 1, "command": "check-bound", "sop": sop.to_string() });
    report.as_object_mut().expect("object").extend(v.as_object().expect("object").clone());
    Ok(Outcome::json(report, code))
}

// ---------------------------------------------------------------------------
// bench

/// `x_{i+1} = r x_i (1 - x_i)` in exact dyadic arithmetic.
pub fn exact_logistic(r: &Dyadic, x0: &Dyadic, count: u64) -> Dyadic {
    let mut x = x0.clone();
    for _ in 0..count {
        let one_minus = &Dyadic::one() - &x;
        x = &(r * &x) * &one_minus;
    }
    x
}

pub struct LogisticRun {
    pub strategy: Strategy,
    pub result: Result<DyadicInterval, EvalError>,
    pub trace: CostTrace,
}

/// Runs the logistic program under all three strategies.
pub fn logistic_runs(r: &Dyadic, x0: &Dyadic, count: u64, prec: u64) -> Vec<LogisticRun> {
    let e = logistic(Expr::Dyadic(r.clone()), count, Expr::Dyadic(x0.clone()));
    [Strategy::Dag, Strategy::Restart, Strategy::Tree]
        .into_iter()
        .map(|strategy| {
            let (result, trace) = eval_expr(&e, prec, strategy);
            LogisticRun { strategy, result, trace }
        })
        .collect()
}

pub fn bench_logistic(r: &Dyadic, x0: &Dyadic, count: u64, prec: u64) -> Outcome {
    let exact = exact_logistic(r, x0, count);
    let e = logistic(Expr::Dyadic(r.clone()), count, Expr::Dyadic(x0.clone()));
    let mut all_contain = true;
    let runs: Vec<Value> = logistic_runs(r, x0, count, prec)
        .into_iter()
        .map(|run| {
            let outcome = match &run.result {
                Ok(j) => {
                    let contains = j.contains(&exact);
                    all_contain &= contains;
                    json!({ "enclosure": interval_json(j), "contains_exact": contains })
                }
                Err(err) => {
                    // The tree strategy is expected to stop at its node cap.
                    all_contain &= run.strategy == Strategy::Tree;
                    json!({ "error": err.to_string() })
                }
            };
            json!({
                "strategy": format!("{:?}", run.strategy).to_lowercase(),
                "outcome": outcome,
                "cost": trace_json(&run.trace),
            })
        })
        .collect();
    Outcome::json(
        json!({
            "schema": 1,
            "command": "bench logistic",
            "r": r.to_string(),
            "x0": x0.to_string(),
            "iterations": count,
            "prec": prec,
            "expression_size": e.size(),
            "tree_node_cap": TREE_NODE_CAP,
            "exact_bits": exact.bit_len(),
            "runs": runs,
        }),
        if all_contain { EXIT_OK } else { EXIT_VERIFY },
    )
}

pub fn bench_modulus(ks: (u64, u64), fuel: u64) -> Result<Outcome, CmdError> {
    let mut series = Vec::new();
    for k in ks.0..=ks.1 {
        series.push((k, psi_k_probes(k, fuel)?));
    }
    let rows: Vec<Value> = series.iter().map(|&(k, p)| json!({ "k": k, "probes": p })).collect();
    Ok(Outcome::json(
        json!({
            "schema": 1,
            "command": "bench modulus",
            "rows": rows,
            "growth_ratio": fit::growth_ratio(&series),
        }),
        EXIT_OK,
    ))
}

/// Expressions compared by `bench strategies`.
pub const STRATEGY_CORPUS: [&str; 6] = [
    "1/2 * 2",
    "1/3 + 1/3 * 1/3",
    "apply(sqrt, 2) * apply(sqrt, 2) - 2",
    "iterate(x -> x*x - 1/2, 6, 3/4)",
    "iterate(x -> 7/2*x*(1-x), 8, 1/2)",
    "apply(y -> y*y*y, 7/8 - 1/3)",
];

pub fn bench_strategies(precs: &[u64]) -> Result<Outcome, CmdError> {
    let mut rows = Vec::new();
    let mut agree = true;
    for src in STRATEGY_CORPUS {
        let e = parse(src)?;
        for &n in precs {
            let (a, ta) = eval_expr(&e, n, Strategy::Dag);
            let (b, tb) = eval_expr(&e, n, Strategy::Restart);
            let (a, b) = (a?, b?);
            let meets = a.intersect(&b).is_ok();
            agree &= meets;
            rows.push(json!({
                "expr": src,
                "n": n,
                "dag": { "enclosure": interval_json(&a), "cost": trace_json(&ta) },
                "restart": { "enclosure": interval_json(&b), "cost": trace_json(&tb) },
                "intersect": meets,
            }));
        }
    }
    Ok(Outcome::json(
        json!({ "schema": 1, "command": "bench strategies", "rows": rows }),
        if agree { EXIT_OK } else { EXIT_VERIFY },
    ))
}

/// Per-query work of `interval_to_cauchy` on `cauchy_to_interval(phi)`,
/// with the input's own work kept out of the count.
pub fn interval_to_cauchy_costs(phi_interval: &paramreal::names::IntervalRealName, n_max: u64) -> Vec<(u64, u64)> {
    (0..=n_max)
        .map(|n| {
            let (input, _) = attach(phi_interval);
            let t = interval_to_cauchy(&input);
            let (_, trace) = meter::measure(|| t.query(&n));
            (n, trace.work_units)
        })
        .collect()
}

/// Per-query work of the delayed `cauchy_to_interval(phi)`.
pub fn delay_costs(phi: &paramreal::names::CauchyName, budget: u64, n_max: u64) -> Vec<(u64, u64)> {
    (0..=n_max)
        .map(|n| {
            let (input, _) = attach(phi);
            let t: Arc<dyn ResumableTranslation> = Arc::new(cauchy_to_interval_staged(&input));
            let out = delay_transform(t, budget);
            let (_, trace) = meter::measure(|| out.query(&n));
            (n, trace.work_units)
        })
        .collect()
}

/// Default fuel per bit of the delay benchmark.
pub const DELAY_BUDGET: u64 = 64;

/// Fits `A`, `B` of `A*X*l(X) + B` for interval_to_cauchy and `C` of the
/// delayed cauchy_to_interval over the Cauchy corpus.
pub fn bench_translations(n_max: u64, fuel: u64) -> Result<Outcome, CmdError> {
    let mut features = Vec::new();
    let mut delay = Vec::new();
    for (_, phi, _) in cauchy_corpus() {
        let psi = cauchy_to_interval(&phi);
        let l = measure_table(&psi, n_max, fuel)?;
        for (n, w) in interval_to_cauchy_costs(&psi, n_max) {
            let ln = l.get(n as u128).expect("hold-last table");
            features.push((n * ln, w));
        }
        delay.extend(delay_costs(&phi, DELAY_BUDGET, n_max));
    }
    let (a, b) = fit::affine(&features, |f| f);
    Ok(Outcome::json(
        json!({
            "schema": 1,
            "command": "bench translations",
            "n_max": n_max,
            "interval_to_cauchy": { "bound": format!("{a}*X*l(X) + {b}"), "A": a, "B": b },
            "delay": { "budget_per_bit": DELAY_BUDGET, "C": fit::linear_constant(&delay) },
        }),
        EXIT_OK,
    ))
}
