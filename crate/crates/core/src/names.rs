//! Names: memoizing oracles for real numbers and functions.
//!
//! A [`Name`] answers queries through a callback and remembers every answer,
//! so a name is extensionally a pure function and each distinct query costs
//! once. A memo miss charges `1 + size` of the query to the current meter
//! frame (see [`crate::meter`]). Validity is never assumed: [`validate`]
//! checks the invariant of each representation post hoc.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::marker::PhantomData;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::bitcodec::{
    dyadic_code_len, interval_code_len, pair_len, query_code_len, BitString, CodecError,
    MonotoneTable, TableError,
};
use crate::dyadic::Dyadic;
use crate::interval::{Diam, DyadicInterval, IntervalError};
use crate::meter;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NameError {
    #[error("broken name: {0}")]
    Broken(String),
    #[error("fuel exhausted after {spent} steps: {context}")]
    FuelExhausted { spent: u64, context: String },
    #[error("query {0} lies beyond the tabulated range")]
    OutOfTable(String),
    #[error("bound {bound} is below the answer length {length}")]
    BoundViolated { bound: u64, length: u64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// A query together with its sizes in the cost model.
pub trait Query: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static {
    /// Size charged when posing the query (`n` for precision queries).
    fn cost_size(&self) -> u64;
    /// Length of the query's code.
    fn code_len(&self) -> u64;
}

pub trait Answer: Clone + fmt::Debug + Send + Sync + 'static {
    /// Length of the answer's code.
    fn code_len(&self) -> u64;
}

impl Query for u64 {
    fn cost_size(&self) -> u64 {
        *self
    }
    fn code_len(&self) -> u64 {
        query_code_len(*self)
    }
}

impl Query for DyadicInterval {
    fn cost_size(&self) -> u64 {
        interval_code_len(self)
    }
    fn code_len(&self) -> u64 {
        interval_code_len(self)
    }
}

impl Query for BitString {
    fn cost_size(&self) -> u64 {
        self.len() as u64
    }
    fn code_len(&self) -> u64 {
        self.len() as u64
    }
}

/// Query `(r, n)` of a function name in the Kawamura-Cook representation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct KcQuery {
    pub r: Dyadic,
    pub n: u64,
}

impl Query for KcQuery {
    fn cost_size(&self) -> u64 {
        dyadic_code_len(&self.r) + self.n
    }
    fn code_len(&self) -> u64 {
        pair_len(dyadic_code_len(&self.r), query_code_len(self.n))
    }
}

impl Answer for Dyadic {
    fn code_len(&self) -> u64 {
        dyadic_code_len(self)
    }
}

impl Answer for DyadicInterval {
    fn code_len(&self) -> u64 {
        interval_code_len(self)
    }
}

impl Answer for BitString {
    fn code_len(&self) -> u64 {
        self.len() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Cauchy,
    Interval,
    Irram,
    IntervalFunction,
    IrramFunction,
    KcFunction,
    StringFunction,
    Pair,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Cauchy => "cauchy",
            Kind::Interval => "interval",
            Kind::Irram => "irram",
            Kind::IntervalFunction => "interval-function",
            Kind::IrramFunction => "irram-function",
            Kind::KcFunction => "kc-function",
            Kind::StringFunction => "string-function",
            Kind::Pair => "pair",
        })
    }
}

impl FromStr for Kind {
    type Err = NameError;
    fn from_str(s: &str) -> Result<Self, NameError> {
        Ok(match s.trim() {
            "cauchy" => Kind::Cauchy,
            "interval" => Kind::Interval,
            "irram" => Kind::Irram,
            "interval-function" => Kind::IntervalFunction,
            "irram-function" => Kind::IrramFunction,
            "kc-function" => Kind::KcFunction,
            "string-function" => Kind::StringFunction,
            other => return Err(NameError::Invalid(format!("unknown representation `{other}`"))),
        })
    }
}

/// A representation: the query and answer types of its names.
pub trait Repr: Send + Sync + 'static {
    type Q: Query;
    type A: Answer;
    const KIND: Kind;
}

macro_rules! repr {
    ($(#[$m:meta])* $name:ident, $q:ty, $a:ty, $kind:expr) => {
        $(#[$m])*
        #[derive(Debug)]
        pub struct $name;
        impl Repr for $name {
            type Q = $q;
            type A = $a;
            const KIND: Kind = $kind;
        }
    };
}

repr!(
    /// `|answer(n) - x| <= 2^(-n)`.
    Cauchy, u64, Dyadic, Kind::Cauchy
);
repr!(
    /// Nested enclosures shrinking to `x`.
    Interval, u64, DyadicInterval, Kind::Interval
);
repr!(
    /// Enclosures of `x` converging in the Hausdorff metric, not necessarily nested.
    Irram, u64, DyadicInterval, Kind::Irram
);
repr!(
    /// Monotone interval maps transporting point names to value names.
    IntervalFun, DyadicInterval, DyadicInterval, Kind::IntervalFunction
);
repr!(
    /// Interval maps transporting point names, without monotonicity.
    IrramFun, DyadicInterval, DyadicInterval, Kind::IrramFunction
);
repr!(
    /// `|answer(r, n) - f(r)| <= 2^(-n)` at dyadic points.
    KcFun, KcQuery, Dyadic, Kind::KcFunction
);
repr!(
    /// Plain string functions.
    StringFun, BitString, BitString, Kind::StringFunction
);

pub type CauchyName = Name<Cauchy>;
pub type IntervalRealName = Name<Interval>;
pub type IrramRealName = Name<Irram>;
pub type StringFunctionName = Name<StringFun>;

type Oracle<Q, A> = Box<dyn Fn(&Q) -> Result<A, NameError> + Send + Sync>;

struct Inner<Q, A> {
    oracle: Oracle<Q, A>,
    memo: Mutex<HashMap<Q, A>>,
    note: String,
}

/// A memoizing oracle of representation `R`. Clones share the memo.
pub struct Name<R: Repr> {
    inner: Arc<Inner<R::Q, R::A>>,
    _repr: PhantomData<fn() -> R>,
}

impl<R: Repr> Clone for Name<R> {
    fn clone(&self) -> Self {
        Name {
            inner: Arc::clone(&self.inner),
            _repr: PhantomData,
        }
    }
}

impl<R: Repr> fmt::Debug for Name<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name<{}>({})", R::KIND, self.inner.note)
    }
}

impl<R: Repr> Name<R> {
    /// Wraps `f` as a name; the caller vouches for the representation's
    /// invariant, which [`validate`] can check afterwards.
    pub fn from_callback(
        note: impl Into<String>,
        f: impl Fn(&R::Q) -> Result<R::A, NameError> + Send + Sync + 'static,
    ) -> Self {
        Name {
            inner: Arc::new(Inner {
                oracle: Box::new(f),
                memo: Mutex::new(HashMap::new()),
                note: note.into(),
            }),
            _repr: PhantomData,
        }
    }

    pub fn kind(&self) -> Kind {
        R::KIND
    }

    pub fn note(&self) -> &str {
        &self.inner.note
    }

    fn cached(&self, q: &R::Q) -> Option<R::A> {
        self.inner.memo.lock().expect("memo lock").get(q).cloned()
    }

    fn compute(&self, q: &R::Q) -> Result<R::A, NameError> {
        let a = (self.inner.oracle)(q)?;
        meter::charge_query(q.cost_size(), q.code_len(), a.code_len());
        Ok(a)
    }

    /// Answers `q`, computing it at most once. Errors are not memoized.
    pub fn query(&self, q: &R::Q) -> Result<R::A, NameError> {
        if let Some(a) = self.cached(q) {
            return Ok(a);
        }
        let a = self.compute(q)?;
        // The lock is not held across the oracle, so a concurrent query may
        // insert first; both values are equal.
        self.inner
            .memo
            .lock()
            .expect("memo lock")
            .entry(q.clone())
            .or_insert_with(|| a.clone());
        Ok(a)
    }

    /// Like [`Name::query`] but leaves the memo unchanged on a miss; for
    /// bulk probing that would otherwise retain every answer.
    pub fn query_transient(&self, q: &R::Q) -> Result<R::A, NameError> {
        match self.cached(q) {
            Some(a) => Ok(a),
            None => self.compute(q),
        }
    }

    pub fn memo_len(&self) -> usize {
        self.inner.memo.lock().expect("memo lock").len()
    }

    pub fn same_oracle<S: Repr>(&self, other: &Name<S>) -> bool {
        Arc::as_ptr(&self.inner) as *const () == Arc::as_ptr(&other.inner) as *const ()
    }

    /// The same oracle read under another representation with the same
    /// query and answer types; the memo stays shared.
    pub fn reinterpret<S: Repr<Q = R::Q, A = R::A>>(&self) -> Name<S> {
        Name {
            inner: Arc::clone(&self.inner),
            _repr: PhantomData,
        }
    }
}

// ---------------------------------------------------------------------------
// Exact values

/// An exactly comparable real used to check names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Rational(BigRational),
    /// `offset + sqrt(radicand)`, `radicand >= 0`.
    SqrtPlus {
        offset: BigRational,
        radicand: BigRational,
    },
}

pub fn dyadic_to_rational(d: &Dyadic) -> BigRational {
    let e = d.exponent();
    if e >= 0 {
        BigRational::new(d.mantissa().clone(), BigInt::one() << (e as u64))
    } else {
        BigRational::from_integer(d.mantissa() << ((-e) as u64))
    }
}

impl Witness {
    pub fn dyadic(d: &Dyadic) -> Self {
        Witness::Rational(dyadic_to_rational(d))
    }

    pub fn rational(p: i64, q: i64) -> Self {
        Witness::Rational(BigRational::new(p.into(), q.into()))
    }

    pub fn sqrt2_minus_one() -> Self {
        Witness::SqrtPlus {
            offset: BigRational::from_integer((-1).into()),
            radicand: BigRational::from_integer(2.into()),
        }
    }

    /// Exact sign of `self - d`.
    pub fn cmp_dyadic(&self, d: &Dyadic) -> Ordering {
        let d = dyadic_to_rational(d);
        match self {
            Witness::Rational(x) => x.cmp(&d),
            Witness::SqrtPlus { offset, radicand } => {
                // sqrt(b) vs t = d - a
                let t = d - offset;
                if t.is_negative() {
                    Ordering::Greater
                } else {
                    radicand.cmp(&(&t * &t))
                }
            }
        }
    }

    pub fn in_interval(&self, j: &DyadicInterval) -> bool {
        match j.endpoints() {
            None => true,
            Some((lo, hi)) => {
                self.cmp_dyadic(&lo) != Ordering::Less && self.cmp_dyadic(&hi) != Ordering::Greater
            }
        }
    }

    /// `|d - self| <= 2^(-n)`.
    pub fn within(&self, d: &Dyadic, n: u64) -> bool {
        let eps = Dyadic::pow2(-(n as i64));
        self.in_interval(&DyadicInterval::ball(d.clone(), eps))
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        match self {
            Witness::Rational(x) => x.to_f64().unwrap_or(f64::NAN),
            Witness::SqrtPlus { offset, radicand } => {
                offset.to_f64().unwrap_or(f64::NAN) + radicand.to_f64().unwrap_or(f64::NAN).sqrt()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Builders

pub fn cauchy_of_dyadic(d: Dyadic) -> CauchyName {
    let note = format!("dyadic {d}");
    Name::from_callback(note, move |_| Ok(d.clone()))
}

/// `n -> [d ± 2^(-n)]`.
pub fn interval_of_dyadic(d: Dyadic) -> IntervalRealName {
    let note = format!("interval {d}");
    Name::from_callback(note, move |&n: &u64| {
        Ok(DyadicInterval::ball(d.clone(), Dyadic::pow2(-(n as i64))))
    })
}

/// Long division to `n + 1` bits: `floor(p * 2^(n+1) / q) / 2^(n+1)`.
pub fn cauchy_of_rational(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<CauchyName, NameError> {
    let (p, q) = (p.into(), q.into());
    if q.is_zero() {
        return Err(NameError::Invalid("rational with zero denominator".into()));
    }
    let note = format!("rational {p}/{q}");
    Ok(Name::from_callback(note, move |&n: &u64| {
        let k = n + 1;
        let num = &p << k;
        meter::charge(num.bits().max(1) * q.bits().max(1));
        Ok(Dyadic::new(num.div_floor(&q), k as i64))
    }))
}

/// `floor(sqrt(v))` by Newton iteration from above.
pub fn isqrt_newton(v: &BigInt) -> BigInt {
    assert!(!v.is_negative(), "square root of a negative integer");
    if v.is_zero() {
        return BigInt::zero();
    }
    let mut x = BigInt::one() << v.bits().div_ceil(2);
    loop {
        let y = (&x + v / &x) >> 1u32;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// `sqrt(d)` for `d >= 0`: `isqrt(floor(d * 4^(n+1))) / 2^(n+1)`.
pub fn cauchy_sqrt(d: Dyadic) -> Result<CauchyName, NameError> {
    if d.is_negative() {
        return Err(NameError::Invalid(format!("square root of negative {d}")));
    }
    let note = format!("sqrt {d}");
    Ok(Name::from_callback(note, move |&n: &u64| {
        let k = (n + 1) as i64;
        let v = d.floor_scaled(2 * k);
        let b = v.bits().max(1);
        // Each Newton step is a division of b-bit numbers; about lb(b) steps.
        meter::charge(b * b * (64 - b.leading_zeros() as u64));
        Ok(Dyadic::new(isqrt_newton(&v), k))
    }))
}

pub fn sqrt2_minus_one() -> CauchyName {
    let s = cauchy_sqrt(Dyadic::from_int(2)).expect("2 is nonnegative");
    Name::from_callback("sqrt 2 - 1", move |n: &u64| {
        Ok(&s.query(n)? - &Dyadic::one())
    })
}

/// The real-number corpus: names with exact witnesses.
pub fn cauchy_corpus() -> Vec<(&'static str, CauchyName, Witness)> {
    let d = |m: i64, e: i64| Dyadic::from_ratio(m, e);
    vec![
        ("0", cauchy_of_dyadic(Dyadic::zero()), Witness::dyadic(&Dyadic::zero())),
        ("1", cauchy_of_dyadic(Dyadic::one()), Witness::dyadic(&Dyadic::one())),
        ("1/2", cauchy_of_dyadic(d(1, 1)), Witness::dyadic(&d(1, 1))),
        ("1/3", cauchy_of_rational(1, 3).expect("nonzero"), Witness::rational(1, 3)),
        ("7/8", cauchy_of_dyadic(d(7, 3)), Witness::dyadic(&d(7, 3))),
        ("sqrt2-1", sqrt2_minus_one(), Witness::sqrt2_minus_one()),
    ]
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    /// The oracle returned an error.
    Query,
    /// `|answer(n) - x| <= 2^(-n)` against a witness.
    CauchyBound,
    /// `|answer(n) - answer(m)| <= 2^(-n) + 2^(-m)`.
    Consistency,
    Nested,
    Containment,
    /// Enclosures of one value must overlap.
    Overlap,
    Convergence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub index: u64,
    pub check: Check,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub kind: Kind,
    pub depth: u64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Least index violating `check`.
    pub fn first(&self, check: Check) -> Option<u64> {
        self.violations
            .iter()
            .filter(|v| v.check == check)
            .map(|v| v.index)
            .min()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "{} name valid to depth {}", self.kind, self.depth);
        }
        writeln!(f, "{} name: {} violation(s) up to depth {}", self.kind, self.violations.len(), self.depth)?;
        for v in &self.violations {
            writeln!(f, "  n = {}: {:?}: {}", v.index, v.check, v.detail)?;
        }
        Ok(())
    }
}

/// Real-number names that [`validate`] understands.
pub trait Validate {
    fn validate(&self, depth: u64, witness: Option<&Witness>) -> ValidationReport;
}

/// Checks the defining invariant of `name`'s representation for queries `0..=depth`.
pub fn validate<N: Validate>(name: &N, depth: u64, witness: Option<&Witness>) -> ValidationReport {
    name.validate(depth, witness)
}

fn violation(index: u64, check: Check, detail: impl Into<String>) -> Violation {
    Violation {
        index,
        check,
        detail: detail.into(),
    }
}

impl Validate for CauchyName {
    fn validate(&self, depth: u64, witness: Option<&Witness>) -> ValidationReport {
        let mut violations = Vec::new();
        let mut answers = Vec::new();
        for n in 0..=depth {
            match self.query(&n) {
                Ok(d) => answers.push(d),
                Err(e) => {
                    violations.push(violation(n, Check::Query, e.to_string()));
                    break;
                }
            }
        }
        for (n, d) in answers.iter().enumerate() {
            let n = n as u64;
            if let Some(x) = witness {
                if !x.within(d, n) {
                    violations.push(violation(n, Check::CauchyBound, format!("answer {d}")));
                }
            }
            // Consistency with the next and the deepest answer.
            let last = answers.len() as u64 - 1;
            for m in [n + 1, last] {
                if m > n && m <= last {
                    let dm = &answers[m as usize];
                    let gap = (d - dm).abs();
                    let allowed = &Dyadic::pow2(-(n as i64)) + &Dyadic::pow2(-(m as i64));
                    if gap > allowed {
                        violations.push(violation(
                            n,
                            Check::Consistency,
                            format!("answers {d} and {dm} at {m} too far apart"),
                        ));
                    }
                }
            }
        }
        ValidationReport {
            kind: Kind::Cauchy,
            depth,
            violations,
        }
    }
}

fn validate_enclosures(
    kind: Kind,
    query: impl Fn(u64) -> Result<DyadicInterval, NameError>,
    depth: u64,
    witness: Option<&Witness>,
) -> ValidationReport {
    let nested_required = kind == Kind::Interval;
    let mut violations = Vec::new();
    let mut answers = Vec::new();
    for n in 0..=depth {
        match query(n) {
            Ok(j) => answers.push(j),
            Err(e) => {
                violations.push(violation(n, Check::Query, e.to_string()));
                break;
            }
        }
    }
    let Some(last) = answers.last().cloned() else {
        return ValidationReport {
            kind,
            depth,
            violations,
        };
    };
    for (n, j) in answers.iter().enumerate() {
        let n = n as u64;
        if nested_required && n > 0 && !j.subset(&answers[n as usize - 1]) {
            violations.push(violation(
                n,
                Check::Nested,
                format!("{j} not inside {}", answers[n as usize - 1]),
            ));
        }
        match witness {
            Some(x) if !x.in_interval(j) => {
                violations.push(violation(n, Check::Containment, format!("{j} misses the value")));
            }
            _ => {}
        }
        if j.intersect(&last).is_err() {
            violations.push(violation(n, Check::Overlap, format!("{j} disjoint from {last}")));
        }
    }
    let top = answers.len() as u64 - 1;
    if top > 0 {
        let d_top = last.diam();
        let d_half = answers[(top / 2) as usize].diam();
        if d_top != Diam::Finite(Dyadic::zero()) && d_top >= d_half {
            violations.push(violation(
                top,
                Check::Convergence,
                format!("diameter did not shrink between {} and {top}", top / 2),
            ));
        }
    }
    ValidationReport {
        kind,
        depth,
        violations,
    }
}

impl Validate for IntervalRealName {
    fn validate(&self, depth: u64, witness: Option<&Witness>) -> ValidationReport {
        validate_enclosures(Kind::Interval, |n| self.query(&n), depth, witness)
    }
}

impl Validate for IrramRealName {
    fn validate(&self, depth: u64, witness: Option<&Witness>) -> ValidationReport {
        validate_enclosures(Kind::Irram, |n| self.query(&n), depth, witness)
    }
}

// ---------------------------------------------------------------------------
// Parameter measurement

/// Measured parameter of an enclosure name at one precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamBound {
    pub conv_index: u64,
    pub mag_low: u64,
    pub mag_high: u64,
    /// Set when `conv_index` comes from a sampled window rather than an exact search.
    pub estimate: bool,
}

impl ParamBound {
    /// `conv_index + mag_high`, the sound value used by bound checks.
    pub fn mu(&self) -> u64 {
        self.conv_index + self.mag_high
    }
}

/// Names whose answers are enclosures at precision queries.
pub trait EnclosureRepr: Repr<Q = u64, A = DyadicInterval> {}
impl EnclosureRepr for Interval {}
impl EnclosureRepr for Irram {}

fn fuel_exhausted(spent: u64, context: impl Into<String>) -> NameError {
    NameError::FuelExhausted {
        spent,
        context: context.into(),
    }
}

/// Least `N < fuel` with `diam(phi(N)) <= 2^(-n)`, by linear search.
fn first_below<R: EnclosureRepr>(phi: &Name<R>, n: i64, fuel: u64) -> Result<u64, NameError> {
    for m in 0..fuel {
        if phi.query(&m)?.diam().at_most_pow2(n) {
            return Ok(m);
        }
    }
    Err(fuel_exhausted(fuel, format!("no enclosure of diameter <= 2^-{n}")))
}

/// Offsets `0, 1, 2, 4, ..., window` sampled after a candidate index.
fn window_offsets(window: u64) -> impl Iterator<Item = u64> {
    std::iter::once(0)
        .chain((0..64).map(|k| 1u64 << k).take_while(move |&o| o < window))
        .chain(std::iter::once(window))
}

/// Measures the parameter of `phi` at precision `n` within `fuel` probes
/// per search. For iRRAM names the convergence index is the least `N` whose
/// sampled window `[N, N + fuel]` satisfies the bound, flagged as an estimate.
pub fn measure_mu_interval<R: EnclosureRepr>(
    phi: &Name<R>,
    n: u64,
    fuel: u64,
) -> Result<ParamBound, NameError> {
    if fuel == 0 {
        return Err(NameError::Invalid("measurement needs positive fuel".into()));
    }
    let n_i = n as i64;
    let (conv_index, coarse, estimate) = if R::KIND == Kind::Irram {
        let mut found = None;
        'candidates: for cand in 0..fuel {
            for off in window_offsets(fuel) {
                if !phi.query(&(cand + off))?.diam().at_most_pow2(n_i) {
                    continue 'candidates;
                }
            }
            found = Some(cand);
            break;
        }
        let conv = found.ok_or_else(|| fuel_exhausted(fuel, format!("no window of diameter <= 2^-{n}")))?;
        (conv, first_below(phi, 0, fuel)?, true)
    } else {
        let conv = first_below(phi, n_i, fuel)?;
        (conv, first_below(phi, 0, fuel.max(conv + 1))?, false)
    };
    let j = phi.query(&coarse)?;
    let lo = j.min_abs().expect("finite enclosure");
    let hi = j.max_abs().expect("finite enclosure");
    Ok(ParamBound {
        conv_index,
        mag_low: lo.mag_bound(),
        mag_high: hi.mag_bound(),
        estimate,
    })
}

/// `n -> mu(phi)(n)` for `n <= n_max`, as a hold-last table.
pub fn measure_table<R: EnclosureRepr>(
    phi: &Name<R>,
    n_max: u64,
    fuel: u64,
) -> Result<MonotoneTable, NameError> {
    let mut values = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        values.push(measure_mu_interval(phi, n, fuel)?.mu());
    }
    Ok(MonotoneTable::hold_last(values)?)
}

// ---------------------------------------------------------------------------
// Pairs

/// Query of a pair name: the empty query, or one routed to a component.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum PairQuery<A, B> {
    Empty,
    First(A),
    Second(B),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PairAnswer<A, B> {
    Empty,
    First(A),
    Second(B),
}

impl<A: Query, B: Query> Query for PairQuery<A, B> {
    fn cost_size(&self) -> u64 {
        match self {
            PairQuery::Empty => 0,
            PairQuery::First(q) => 1 + q.cost_size(),
            PairQuery::Second(q) => 1 + q.cost_size(),
        }
    }
    fn code_len(&self) -> u64 {
        match self {
            PairQuery::Empty => 0,
            PairQuery::First(q) => 1 + q.code_len(),
            PairQuery::Second(q) => 1 + q.code_len(),
        }
    }
}

impl<A: Answer, B: Answer> Answer for PairAnswer<A, B> {
    fn code_len(&self) -> u64 {
        match self {
            PairAnswer::Empty => 0,
            PairAnswer::First(a) => a.code_len(),
            PairAnswer::Second(b) => b.code_len(),
        }
    }
}

/// Product of two representations.
#[derive(Debug)]
pub struct Pair<RA, RB>(PhantomData<fn() -> (RA, RB)>);

impl<RA: Repr, RB: Repr> Repr for Pair<RA, RB> {
    type Q = PairQuery<RA::Q, RB::Q>;
    type A = PairAnswer<RA::A, RB::A>;
    const KIND: Kind = Kind::Pair;
}

/// The name of a pair: `First` queries go to `a`, `Second` queries to `b`.
pub fn pair_names<RA: Repr, RB: Repr>(a: &Name<RA>, b: &Name<RB>) -> Name<Pair<RA, RB>> {
    let (a, b) = (a.clone(), b.clone());
    let note = format!("pair({}, {})", a.note(), b.note());
    Name::from_callback(note, move |q: &PairQuery<RA::Q, RB::Q>| {
        Ok(match q {
            PairQuery::Empty => PairAnswer::Empty,
            PairQuery::First(q) => PairAnswer::First(a.query(q)?),
            PairQuery::Second(q) => PairAnswer::Second(b.query(q)?),
        })
    })
}

/// The same pairing on plain strings: `0q -> a(q)`, `1q -> b(q)`, empty to empty.
pub fn pair_string_names(a: &StringFunctionName, b: &StringFunctionName) -> StringFunctionName {
    let (a, b) = (a.clone(), b.clone());
    let note = format!("pair({}, {})", a.note(), b.note());
    Name::from_callback(note, move |q: &BitString| match q.split_first() {
        None => Ok(BitString::new()),
        Some((false, rest)) => a.query(&rest),
        Some((true, rest)) => b.query(&rest),
    })
}

/// Parameter of a pair: the pointwise maximum of the components' parameters.
pub fn product_parameter(a: &MonotoneTable, b: &MonotoneTable) -> Result<MonotoneTable, TableError> {
    a.pointwise_max(b)
}

/// `phi` as a string function: the code of `n` maps to the code of `phi(n)`.
pub fn cauchy_as_string(phi: &CauchyName) -> StringFunctionName {
    let phi = phi.clone();
    Name::from_callback(format!("string view of {}", phi.note()), move |a: &BitString| {
        let n = crate::bitcodec::decode_query(a);
        Ok(crate::bitcodec::encode_dyadic(&phi.query(&n)?))
    })
}

// ---------------------------------------------------------------------------
// Tabulated names

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

/// A real-number name loaded from a table.
#[derive(Clone, Debug)]
pub enum TabulatedName {
    Cauchy(CauchyName),
    Interval(IntervalRealName),
    Irram(IrramRealName),
}

impl TabulatedName {
    pub fn kind(&self) -> Kind {
        match self {
            TabulatedName::Cauchy(_) => Kind::Cauchy,
            TabulatedName::Interval(_) => Kind::Interval,
            TabulatedName::Irram(_) => Kind::Irram,
        }
    }
}

fn table_name<R: Repr<Q = u64>>(kind: Kind, rows: HashMap<u64, R::A>) -> Name<R> {
    Name::from_callback(format!("tabulated {kind}"), move |n: &u64| {
        rows.get(n).cloned().ok_or_else(|| NameError::OutOfTable(n.to_string()))
    })
}

fn format_error(line: usize, message: impl Into<String>) -> FormatError {
    FormatError {
        line,
        message: message.into(),
    }
}

/// Parses `# repr: <kind>` followed by `n<TAB>answer` records.
pub fn parse_tabulated(text: &str) -> Result<TabulatedName, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| format_error(1, "empty file"))?;
    let kind_text = header
        .strip_prefix("# repr:")
        .ok_or_else(|| format_error(1, "expected header `# repr: <kind>`"))?;
    let kind: Kind = kind_text.parse().map_err(|e: NameError| format_error(1, e.to_string()))?;
    let mut dyadics = HashMap::new();
    let mut intervals = HashMap::new();
    for (line, l) in lines {
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let (n, answer) = l
            .split_once('\t')
            .ok_or_else(|| format_error(line, "expected `n<TAB>answer`"))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| format_error(line, format!("bad precision `{n}`")))?;
        let fresh = match kind {
            Kind::Cauchy => {
                let d = Dyadic::parse_text(answer).map_err(|e| format_error(line, e.to_string()))?;
                dyadics.insert(n, d).is_none()
            }
            Kind::Interval | Kind::Irram => {
                let j = DyadicInterval::parse_text(answer).map_err(|e| format_error(line, e.to_string()))?;
                intervals.insert(n, j).is_none()
            }
            other => return Err(format_error(1, format!("{other} names are not tabulated here"))),
        };
        if !fresh {
            return Err(format_error(line, format!("duplicate record for n = {n}")));
        }
    }
    Ok(match kind {
        Kind::Cauchy => TabulatedName::Cauchy(table_name(kind, dyadics)),
        Kind::Interval => TabulatedName::Interval(table_name(kind, intervals)),
        _ => TabulatedName::Irram(table_name(kind, intervals)),
    })
}

/// Answers that print in the tabulated format.
pub trait Tabulate: Answer {
    fn to_record(&self) -> String;
}

impl Tabulate for Dyadic {
    fn to_record(&self) -> String {
        self.to_text()
    }
}

impl Tabulate for DyadicInterval {
    fn to_record(&self) -> String {
        self.to_text()
    }
}

/// Tabulates `phi` on `0..=depth`.
pub fn write_tabulated<R>(phi: &Name<R>, depth: u64) -> Result<String, NameError>
where
    R: Repr<Q = u64>,
    R::A: Tabulate,
{
    let mut out = format!("# repr: {}\n", R::KIND);
    for n in 0..=depth {
        out.push_str(&format!("{n}\t{}\n", phi.query(&n)?.to_record()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meter::measure;

    fn d(m: i64, e: i64) -> Dyadic {
        Dyadic::from_ratio(m, e)
    }

    #[test]
    fn builders_answer_as_documented() {
        assert_eq!(cauchy_of_dyadic(d(1, 1)).query(&7).unwrap(), d(1, 1));
        let third = cauchy_of_rational(1, 3).unwrap();
        assert!(Witness::rational(1, 3).within(&third.query(&4).unwrap(), 4));
        assert_eq!(third.query(&4).unwrap(), d(10, 5));
        assert!(matches!(cauchy_of_rational(1, 0), Err(NameError::Invalid(_))));
        assert_eq!(
            interval_of_dyadic(Dyadic::zero()).query(&3).unwrap(),
            DyadicInterval::ball(Dyadic::zero(), d(1, 3))
        );
    }

    #[test]
    fn newton_square_root() {
        for v in 0u64..2000 {
            let s = isqrt_newton(&BigInt::from(v));
            let s: u64 = s.try_into().unwrap();
            assert!(s * s <= v && (s + 1) * (s + 1) > v, "{v}");
        }
        let r = sqrt2_minus_one();
        assert!(validate(&r, 64, Some(&Witness::sqrt2_minus_one())).is_valid());
    }

    #[test]
    fn witness_comparisons_are_exact() {
        let w = Witness::sqrt2_minus_one();
        assert_eq!(w.cmp_dyadic(&d(53, 7)), Ordering::Greater); // 0.4140625
        assert_eq!(w.cmp_dyadic(&d(27, 6)), Ordering::Less); // 0.421875
        assert_eq!(Witness::rational(1, 3).cmp_dyadic(&d(1, 2)), Ordering::Greater);
    }

    #[test]
    fn memo_charges_once() {
        let phi = cauchy_of_dyadic(d(3, 2));
        let (_, t) = measure(|| {
            phi.query(&5).unwrap();
            phi.query(&5).unwrap();
        });
        assert_eq!(t.query_count, 1);
        assert_eq!(t.work_units, 6);
        assert_eq!(phi.memo_len(), 1);
    }

    #[test]
    fn corpus_validates() {
        for (label, phi, x) in cauchy_corpus() {
            let r = validate(&phi, 64, Some(&x));
            assert!(r.is_valid(), "{label}: {r}");
        }
    }

    fn appendix_irram() -> IrramRealName {
        Name::from_callback("non-nested", |&n: &u64| {
            Ok(match n {
                0 => DyadicInterval::ball(Dyadic::zero(), Dyadic::one()),
                1 => DyadicInterval::from_endpoints(d(-1, 2), d(5, 2)),
                _ => DyadicInterval::ball(d(1, 1), Dyadic::pow2(-(n as i64))),
            })
        })
    }

    #[test]
    fn irram_example_fails_only_as_interval_name() {
        let phi = appendix_irram();
        let x = Witness::rational(1, 2);
        assert!(validate(&phi, 32, Some(&x)).is_valid());
        let as_interval: IntervalRealName = phi.reinterpret();
        let r = validate(&as_interval, 32, Some(&x));
        assert_eq!(r.first(Check::Nested), Some(1));
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn broken_and_stalled_names_are_reported() {
        let stalled: IntervalRealName =
            Name::from_callback("stalled", |_| Ok(DyadicInterval::ball(Dyadic::zero(), Dyadic::one())));
        let r = validate(&stalled, 32, None);
        assert_eq!(r.first(Check::Convergence), Some(32));
        assert!(matches!(
            measure_mu_interval(&stalled, 3, 100),
            Err(NameError::FuelExhausted { spent: 100, .. })
        ));
        let jump: IntervalRealName = Name::from_callback("jump", |&n: &u64| {
            let c = if n == 5 { d(1, 1) } else { Dyadic::zero() };
            Ok(DyadicInterval::ball(c, Dyadic::pow2(-(n as i64))))
        });
        assert_eq!(validate(&jump, 10, None).first(Check::Nested), Some(5));
    }

    #[test]
    fn zero_name_parameter() {
        let phi = interval_of_dyadic(Dyadic::zero());
        for n in 0..20 {
            let b = measure_mu_interval(&phi, n, 1 << 20).unwrap();
            assert_eq!(b.conv_index, n + 1);
            assert_eq!((b.mag_low, b.mag_high), (0, 1));
            assert!(!b.estimate);
        }
    }

    #[test]
    fn irram_parameter_is_an_estimate() {
        let phi = appendix_irram();
        let b = measure_mu_interval(&phi, 4, 64).unwrap();
        assert!(b.estimate);
        assert_eq!(b.conv_index, 5);
    }

    #[test]
    fn pairs_route_by_tag() {
        let x = cauchy_of_dyadic(d(1, 1));
        let y = interval_of_dyadic(Dyadic::one());
        let p = pair_names(&x, &y);
        assert_eq!(p.query(&PairQuery::First(3)).unwrap(), PairAnswer::First(d(1, 1)));
        assert_eq!(p.query(&PairQuery::Empty).unwrap(), PairAnswer::Empty);
        let xs = cauchy_as_string(&x);
        let ys = cauchy_as_string(&cauchy_of_dyadic(Dyadic::one()));
        let ps = pair_string_names(&xs, &ys);
        let q = crate::bitcodec::encode_query(3);
        let mut tagged = BitString::from_bits(vec![false]);
        tagged.extend_from(&q);
        assert_eq!(ps.query(&tagged).unwrap(), xs.query(&q).unwrap());
        assert!(ps.query(&BitString::new()).unwrap().is_empty());
    }

    #[test]
    fn tabulated_round_trip() {
        let phi = interval_of_dyadic(d(1, 1));
        let text = write_tabulated(&phi, 5).unwrap();
        let TabulatedName::Interval(back) = parse_tabulated(&text).unwrap() else {
            panic!("kind changed");
        };
        for n in 0..=5 {
            assert_eq!(back.query(&n).unwrap(), phi.query(&n).unwrap());
        }
        assert!(matches!(back.query(&6), Err(NameError::OutOfTable(_))));
        let err = parse_tabulated("# repr: cauchy\n0\t+ 1 0\n1 oops\n").unwrap_err();
        assert_eq!(err.line, 3);
    }
}
