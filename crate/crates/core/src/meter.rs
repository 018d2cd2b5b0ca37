//! Work-unit cost model, per-computation traces and bound checks.
//!
//! Declared costs: a dyadic addition or comparison costs the larger bit
//! length, a multiplication the product of bit lengths, rounding to the
//! `2^(-n)` grid costs the bit length plus `n`, and an interval operation the
//! sum of its dyadic operations. Posing a query costs `1 + size` to the
//! caller, where the size of a precision query `n` is `n`.
//!
//! Charges go to the innermost active frame on the current thread. A memo
//! miss on any name charges its query cost there; the name's own work is
//! charged there too unless the name was wrapped by [`attach`], which runs
//! it in a fresh frame and records it in its own trace instead.

use std::cell::RefCell;
use std::io;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::bitcodec::MonotoneTable;
use crate::dyadic::Dyadic;
use crate::interval::DyadicInterval;
use crate::names::{Answer, Name, Query, Repr};
use crate::sop::{saturate, Sop, SopError};

/// One answered query of a metered name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    /// Size in the cost model (`n` for precision queries).
    pub query_size: u64,
    /// Length of the query code.
    pub query_bits: u64,
    /// Length of the answer code.
    pub answer_bits: u64,
    /// Work spent answering, including the query step.
    pub work: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostTrace {
    pub query_count: u64,
    pub bits_read: u64,
    pub bits_written: u64,
    pub work_units: u64,
    pub peak_live_nodes: u64,
    pub per_query_log: Vec<QueryRecord>,
}

/// JSON envelope for exported traces.
#[derive(Serialize, Deserialize)]
struct TraceReport<'a> {
    schema: u32,
    #[serde(borrow)]
    label: &'a str,
    trace: CostTrace,
}

#[derive(Deserialize)]
struct OwnedTraceReport {
    schema: u32,
    trace: CostTrace,
}

impl CostTrace {
    fn absorb_record(&mut self, r: QueryRecord, peak: u64) {
        self.query_count += 1;
        self.bits_read += r.answer_bits;
        self.bits_written += r.query_bits;
        self.work_units += r.work;
        self.peak_live_nodes = self.peak_live_nodes.max(peak);
        self.per_query_log.push(r);
    }

    /// Work of the record answering the query of size `n`, if logged.
    pub fn work_at(&self, n: u64) -> Option<u64> {
        self.per_query_log
            .iter()
            .find(|r| r.query_size == n)
            .map(|r| r.work)
    }

    pub fn to_json(&self, label: &str) -> String {
        serde_json::to_string_pretty(&TraceReport {
            schema: 1,
            label,
            trace: self.clone(),
        })
        .expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<CostTrace, serde_json::Error> {
        let r: OwnedTraceReport = serde_json::from_str(text)?;
        if r.schema != 1 {
            return Err(serde::de::Error::custom(format!(
                "unsupported schema {}",
                r.schema
            )));
        }
        Ok(r.trace)
    }

    /// Flat table: one row per logged query, preceded by a `schema` comment.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["schema", "query_size", "query_bits", "answer_bits", "work"])?;
        for r in &self.per_query_log {
            w.write_record([
                "1".to_string(),
                r.query_size.to_string(),
                r.query_bits.to_string(),
                r.answer_bits.to_string(),
                r.work.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shared handle to the trace of one metered computation.
#[derive(Clone, Debug, Default)]
pub struct Trace(Arc<Mutex<CostTrace>>);

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> CostTrace {
        self.0.lock().expect("trace lock").clone()
    }

    pub(crate) fn record(&self, r: QueryRecord, peak: u64) {
        self.0.lock().expect("trace lock").absorb_record(r, peak);
    }
}

/// Counters of the innermost computation on this thread.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Frame {
    pub work: u64,
    pub queries: u64,
    pub bits_read: u64,
    pub bits_written: u64,
    pub live_nodes: u64,
    pub peak_live_nodes: u64,
}

thread_local! {
    static FRAMES: RefCell<Vec<Frame>> = const { RefCell::new(Vec::new()) };
}

struct FrameGuard;

impl Drop for FrameGuard {
    fn drop(&mut self) {
        FRAMES.with(|f| {
            f.borrow_mut().pop();
        });
    }
}

/// Runs `f` in a fresh frame and returns its counters.
pub fn in_frame<R>(f: impl FnOnce() -> R) -> (R, Frame) {
    FRAMES.with(|s| s.borrow_mut().push(Frame::default()));
    let guard = FrameGuard;
    let out = f();
    let frame = FRAMES.with(|s| *s.borrow().last().expect("frame pushed"));
    drop(guard);
    (out, frame)
}

/// Runs `f` in a fresh frame and reports it as a trace.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, CostTrace) {
    let (out, frame) = in_frame(f);
    let trace = CostTrace {
        query_count: frame.queries,
        bits_read: frame.bits_read,
        bits_written: frame.bits_written,
        work_units: frame.work,
        peak_live_nodes: frame.peak_live_nodes,
        per_query_log: Vec::new(),
    };
    (out, trace)
}

fn with_top(f: impl FnOnce(&mut Frame)) {
    FRAMES.with(|s| {
        if let Some(top) = s.borrow_mut().last_mut() {
            f(top)
        }
    });
}

/// Adds work units to the current frame; a no-op outside any frame.
pub fn charge(units: u64) {
    with_top(|f| f.work = f.work.saturating_add(units));
}

/// Accounts one answered query to the current frame.
pub(crate) fn charge_query(query_size: u64, query_bits: u64, answer_bits: u64) {
    with_top(|f| {
        f.work = f.work.saturating_add(1 + query_size);
        f.queries += 1;
        f.bits_written += query_bits;
        f.bits_read += answer_bits;
    });
}

/// Sets the number of live nodes of the current frame, tracking its peak.
pub fn set_live_nodes(n: u64) {
    with_top(|f| {
        f.live_nodes = n;
        f.peak_live_nodes = f.peak_live_nodes.max(n);
    });
}

/// Adjusts the live-node count by `delta`.
pub fn adjust_live_nodes(delta: i64) {
    with_top(|f| {
        f.live_nodes = f.live_nodes.saturating_add_signed(delta);
        f.peak_live_nodes = f.peak_live_nodes.max(f.live_nodes);
    });
}

/// A metered copy of `name` and the handle of its trace.
///
/// Each distinct query posed to the copy is logged once; the work recorded
/// for it is everything the wrapped oracle did to answer, so the caller is
/// charged only the query step, as for a one-step oracle.
pub fn attach<R: Repr>(name: &Name<R>) -> (Name<R>, Trace) {
    let trace = Trace::new();
    let handle = trace.clone();
    let inner = name.clone();
    let metered = Name::from_callback(format!("metered {}", name.note()), move |q: &R::Q| {
        let (answer, frame) = in_frame(|| inner.query(q));
        let answer = answer?;
        handle.record(
            QueryRecord {
                query_size: q.cost_size(),
                query_bits: q.code_len(),
                answer_bits: answer.code_len(),
                work: frame.work,
            },
            frame.peak_live_nodes,
        );
        Ok(answer)
    });
    (metered, trace)
}

/// Declared operation costs.
pub mod cost {
    use super::*;

    pub fn add(a: &Dyadic, b: &Dyadic) -> u64 {
        a.bit_len().max(b.bit_len())
    }

    pub fn cmp(a: &Dyadic, b: &Dyadic) -> u64 {
        add(a, b)
    }

    pub fn mul(a: &Dyadic, b: &Dyadic) -> u64 {
        a.bit_len().saturating_mul(b.bit_len())
    }

    pub fn round(x: &Dyadic, n: u64) -> u64 {
        x.bit_len() + n
    }

    fn endpoints(j: &DyadicInterval) -> u64 {
        match j {
            DyadicInterval::Finite { center, radius } => 2 * add(center, radius),
            DyadicInterval::Infinite => 1,
        }
    }

    pub fn iadd(a: &DyadicInterval, b: &DyadicInterval) -> u64 {
        match (a, b) {
            (
                DyadicInterval::Finite { center: c1, radius: r1 },
                DyadicInterval::Finite { center: c2, radius: r2 },
            ) => add(c1, c2) + add(r1, r2),
            _ => 1,
        }
    }

    pub fn imul(a: &DyadicInterval, b: &DyadicInterval) -> u64 {
        match (a.endpoints(), b.endpoints()) {
            (Some((a0, a1)), Some((b0, b1))) => {
                let products = mul(&a0, &b0) + mul(&a0, &b1) + mul(&a1, &b0) + mul(&a1, &b1);
                endpoints(a) + endpoints(b) + 2 * products
            }
            _ => 1,
        }
    }

    pub fn intersect(a: &DyadicInterval, b: &DyadicInterval) -> u64 {
        endpoints(a) + endpoints(b) + 2
    }

    pub fn outward_round(j: &DyadicInterval, p: u64) -> u64 {
        match j {
            DyadicInterval::Finite { center, radius } => {
                endpoints(j) + 2 * (center.bit_len().max(radius.bit_len()) + p)
            }
            DyadicInterval::Infinite => 1,
        }
    }

    pub fn widen_to_grid(j: &DyadicInterval, w: u64) -> u64 {
        outward_round(j, w)
    }
}

/// Operations that charge their declared cost to the current frame.
pub mod ops {
    use super::*;
    use crate::interval::IntervalError;

    pub fn charge_cmp(a: &Dyadic, b: &Dyadic) {
        charge(cost::cmp(a, b));
    }

    pub fn add(a: &Dyadic, b: &Dyadic) -> Dyadic {
        charge(cost::add(a, b));
        a + b
    }

    pub fn sub(a: &Dyadic, b: &Dyadic) -> Dyadic {
        charge(cost::add(a, b));
        a - b
    }

    pub fn mul(a: &Dyadic, b: &Dyadic) -> Dyadic {
        charge(cost::mul(a, b));
        a * b
    }

    pub fn round_nearest(x: &Dyadic, n: u64) -> Dyadic {
        charge(cost::round(x, n));
        x.round_nearest(n)
    }

    pub fn iadd(a: &DyadicInterval, b: &DyadicInterval) -> DyadicInterval {
        charge(cost::iadd(a, b));
        a.add(b)
    }

    pub fn isub(a: &DyadicInterval, b: &DyadicInterval) -> DyadicInterval {
        charge(cost::iadd(a, b));
        a.sub(b)
    }

    pub fn imul(a: &DyadicInterval, b: &DyadicInterval) -> DyadicInterval {
        charge(cost::imul(a, b));
        a.mul(b)
    }

    pub fn intersect(
        a: &DyadicInterval,
        b: &DyadicInterval,
    ) -> Result<DyadicInterval, IntervalError> {
        charge(cost::intersect(a, b));
        a.intersect(b)
    }

    pub fn outward_round(j: &DyadicInterval, p: u64) -> DyadicInterval {
        charge(cost::outward_round(j, p));
        j.outward_round(p)
    }

    pub fn widen_to_grid(j: &DyadicInterval, w: u64) -> DyadicInterval {
        charge(cost::widen_to_grid(j, w));
        j.widen_to_grid(w)
    }
}

/// A step budget for resumable computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fuel {
    remaining: Option<u64>,
}

impl Fuel {
    pub fn new(units: u64) -> Self {
        Fuel {
            remaining: Some(units),
        }
    }

    pub fn unlimited() -> Self {
        Fuel { remaining: None }
    }

    pub fn remaining(&self) -> Option<u64> {
        self.remaining
    }

    /// Deducts `units` if affordable; no meter charge.
    pub fn try_spend(&mut self, units: u64) -> bool {
        match &mut self.remaining {
            None => true,
            Some(r) if *r >= units => {
                *r -= units;
                true
            }
            Some(_) => false,
        }
    }

    /// Deducts `units` if affordable and charges them to the current frame.
    pub fn pay(&mut self, units: u64) -> bool {
        let ok = self.try_spend(units);
        if ok {
            charge(units);
        }
        ok
    }
}

/// Outcome of a bound check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Dominated,
    Violated(ViolationRecord),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationRecord {
    pub n: u64,
    pub observed: u64,
    pub bound: u64,
}

/// Checks `P(l, m) >= work` for every logged query of size `m <= n`.
pub fn check_bound(
    trace: &CostTrace,
    p: &Sop,
    l: &MonotoneTable,
    n: u64,
) -> Result<Verdict, SopError> {
    for r in trace.per_query_log.iter().filter(|r| r.query_size <= n) {
        let bound = p.eval(l, r.query_size)?;
        if bound < r.work.into() {
            return Ok(Verdict::Violated(ViolationRecord {
                n: r.query_size,
                observed: r.work,
                bound: saturate(&bound),
            }));
        }
    }
    Ok(Verdict::Dominated)
}

/// Checks `P(l, n) >= observed` for `(n, observed)` pairs.
pub fn check_series(
    series: &[(u64, u64)],
    p: &Sop,
    l: &MonotoneTable,
) -> Result<Verdict, SopError> {
    for &(n, observed) in series {
        let bound = p.eval(l, n)?;
        if bound < observed.into() {
            return Ok(Verdict::Violated(ViolationRecord {
                n,
                observed,
                bound: saturate(&bound),
            }));
        }
    }
    Ok(Verdict::Dominated)
}

/// Constants fitted to observed `(n, value)` series.
pub mod fit {
    fn slope(points: &[(f64, f64)]) -> f64 {
        let k = points.len() as f64;
        let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / k, b + y / k));
        let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    }

    /// `C` with `value <= C*n + C` on every sample and `C` at least the
    /// fitted slope, so that an intercept cannot absorb part of the growth.
    pub fn linear_constant(series: &[(u64, u64)]) -> u64 {
        let (a, b) = affine(series, |n| n);
        let tight = series.iter().map(|&(n, w)| w.div_ceil(n + 1)).max().unwrap_or(0);
        tight.max(a).max(b)
    }

    /// `(A, B)` with `value <= A*f(n) + B` on every sample; `A` is the
    /// least-squares slope rounded up and `B` the largest remaining excess.
    pub fn affine(series: &[(u64, u64)], feature: impl Fn(u64) -> u64) -> (u64, u64) {
        let pts: Vec<(f64, f64)> = series.iter().map(|&(n, w)| (feature(n) as f64, w as f64)).collect();
        let a = slope(&pts).max(0.0).ceil() as u64;
        let b = series
            .iter()
            .map(|&(n, w)| w.saturating_sub(a.saturating_mul(feature(n))))
            .max()
            .unwrap_or(0);
        (a, b)
    }

    /// `2^s` for the least-squares slope `s` of `log2(y)` against `x`.
    pub fn growth_ratio(series: &[(u64, u64)]) -> f64 {
        let pts: Vec<(f64, f64)> = series.iter().map(|&(x, y)| (x as f64, (y.max(1) as f64).log2())).collect();
        slope(&pts).exp2()
    }
}
