//! Continuous functions on `[0, 1]` as interval maps.
//!
//! Builders clamp query intervals into `[0, 1]` before approximating, so
//! every name is total on all dyadic intervals. Function names are ordinary
//! [`Name`]s with interval queries; the modulus of a monotone name is
//! certified by probing half-step covers of `[0, 1]`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::bitcodec::{
    decode_dyadic, decode_query, encode_dyadic, unpair, BitString, MonotoneTable,
};
use crate::dyadic::Dyadic;
use crate::interval::DyadicInterval;
use crate::meter::{charge, cost, ops, Fuel};
use crate::names::{
    measure_mu_interval, CauchyName, FormatError, IntervalFun, IntervalRealName, IrramFun,
    KcFun, KcQuery, Name, NameError, Query, Repr, StringFunctionName,
};
use crate::sop::Polynomial;
use crate::translate::{cauchy_to_interval, interval_to_cauchy, Stage, Staged};

pub type IntervalFunctionName = Name<IntervalFun>;
pub type IrramFunctionName = Name<IrramFun>;

/// Probe budget of the sanity check in [`irram_fun_to_interval_fun`].
pub const SANITY_FUEL: u64 = 1 << 14;

/// Finest cover level a modulus search visits.
pub const MAX_LEVEL: u64 = 62;

/// Consecutive cover levels the sanity check requires to pass.
pub const SANITY_WINDOW: u64 = 4;

/// Precision used for queries of radius zero in [`curry_from_evaluator`].
pub const POINT_QUERY_PRECISION: u64 = 64;

/// Representations whose names map intervals to intervals.
pub trait FunRepr: Repr<Q = DyadicInterval, A = DyadicInterval> {}
impl FunRepr for IntervalFun {}
impl FunRepr for IrramFun {}

fn pow2(k: i64) -> Dyadic {
    Dyadic::pow2(k)
}

/// A name `J -> f(clamp(J))` with `f` an interval extension on `[0, 1]`.
pub fn interval_fun(
    note: impl Into<String>,
    f: impl Fn(&DyadicInterval) -> DyadicInterval + Send + Sync + 'static,
) -> IntervalFunctionName {
    Name::from_callback(note, move |j: &DyadicInterval| Ok(f(&j.clamp_unit())))
}

pub fn identity() -> IntervalFunctionName {
    interval_fun("identity", |j| j.clone())
}

pub fn constant(c: Dyadic) -> IntervalFunctionName {
    interval_fun(format!("constant {c}"), move |_| DyadicInterval::point(c.clone()))
}

/// `x -> a x + b`.
pub fn affine(a: Dyadic, b: Dyadic) -> IntervalFunctionName {
    let (ja, jb) = (DyadicInterval::point(a.clone()), DyadicInterval::point(b.clone()));
    interval_fun(format!("{a} x + {b}"), move |j| ops::iadd(&ops::imul(&ja, j), &jb))
}

/// `x -> a x^2 + b x + c`.
pub fn quadratic(a: Dyadic, b: Dyadic, c: Dyadic) -> IntervalFunctionName {
    let note = format!("{a} x^2 + {b} x + {c}");
    let (ja, jb, jc) = (
        DyadicInterval::point(a),
        DyadicInterval::point(b),
        DyadicInterval::point(c),
    );
    interval_fun(note, move |j| {
        let sq = ops::imul(j, j);
        ops::iadd(&ops::iadd(&ops::imul(&ja, &sq), &ops::imul(&jb, j)), &jc)
    })
}

/// A name of the zero function that is exact only on intervals of
/// diameter at most `2^(-k)`; its modulus search is exponential in `k`.
pub fn psi_k(k: u64) -> IntervalFunctionName {
    interval_fun(format!("psi_{k}"), move |j| {
        if j.diam().at_most_pow2(k as i64) {
            DyadicInterval::point(Dyadic::zero())
        } else {
            DyadicInterval::ball(Dyadic::zero(), Dyadic::one())
        }
    })
}

/// `[3 * 2^(-n-2) ± 2^(-n-2)] -> [1/2 ± 1/2]`, everything else to `[0 ± 0]`:
/// a name of the zero function without a modulus.
pub fn pathological() -> IrramFunctionName {
    Name::from_callback("pathological", |j: &DyadicInterval| {
        Ok(match j {
            DyadicInterval::Finite { center, radius }
                if !radius.is_zero()
                    && radius.mantissa() == &1.into()
                    && radius.exponent() >= 2
                    && *center == radius * &Dyadic::from_int(3) =>
            {
                DyadicInterval::ball(pow2(-1), pow2(-1))
            }
            _ => DyadicInterval::point(Dyadic::zero()),
        })
    })
}

/// A non-monotone name of `x -> x`: `[c ± r]` becomes `[c ± 3r]` when
/// `floor(-lb r)` is even and stays `[c ± r]` otherwise.
pub fn hausdorff_identity() -> IrramFunctionName {
    Name::from_callback("hausdorff identity", |j: &DyadicInterval| {
        let j = j.clamp_unit();
        let DyadicInterval::Finite { center, radius } = &j else {
            unreachable!("clamped")
        };
        if radius.is_zero() {
            return Ok(j);
        }
        let k = floor_neg_lb(radius);
        Ok(if k % 2 == 0 {
            DyadicInterval::ball(center.clone(), radius * &Dyadic::from_int(3))
        } else {
            j.clone()
        })
    })
}

/// `floor(-lb r)` for `r > 0`.
fn floor_neg_lb(r: &Dyadic) -> i64 {
    // r = m 2^(-e) with m odd: lb r = lb m - e and floor(lb r) = bits(m) - 1 - e.
    let bits = r.mantissa().bits() as i64;
    let floor_lb = bits - 1 - r.exponent();
    let exact = r.mantissa() == &1.into();
    // ceil(lb r) = -floor(-lb r)
    let ceil_lb = if exact { floor_lb } else { floor_lb + 1 };
    -ceil_lb
}

pub fn compose<RO: FunRepr, RI: FunRepr>(outer: &Name<RO>, inner: &Name<RI>) -> IntervalFunctionName {
    let (o, i) = (outer.clone(), inner.clone());
    Name::from_callback(format!("{} . {}", o.note(), i.note()), move |j: &DyadicInterval| {
        o.query(&i.query(j)?)
    })
}

fn lift_op(
    op: &'static str,
    a: &IntervalFunctionName,
    b: &IntervalFunctionName,
    f: fn(&DyadicInterval, &DyadicInterval) -> DyadicInterval,
) -> IntervalFunctionName {
    let (a, b) = (a.clone(), b.clone());
    Name::from_callback(format!("({} {op} {})", a.note(), b.note()), move |j: &DyadicInterval| {
        Ok(f(&a.query(j)?, &b.query(j)?))
    })
}

pub fn fadd(a: &IntervalFunctionName, b: &IntervalFunctionName) -> IntervalFunctionName {
    lift_op("+", a, b, ops::iadd)
}

pub fn fsub(a: &IntervalFunctionName, b: &IntervalFunctionName) -> IntervalFunctionName {
    lift_op("-", a, b, ops::isub)
}

pub fn fmul(a: &IntervalFunctionName, b: &IntervalFunctionName) -> IntervalFunctionName {
    lift_op("*", a, b, ops::imul)
}

pub fn fneg(a: &IntervalFunctionName) -> IntervalFunctionName {
    let a = a.clone();
    Name::from_callback(format!("-{}", a.note()), move |j: &DyadicInterval| Ok(a.query(j)?.neg()))
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalStage {
    psi: IntervalFunctionName,
    phi: IntervalRealName,
    p: Polynomial,
}

impl Stage for EvalStage {
    fn stage(&self, k: u64, fuel: &mut Fuel) -> Result<Option<DyadicInterval>, NameError> {
        if !fuel.try_spend(1 + k) {
            return Ok(None);
        }
        let j = self.phi.query(&k)?;
        if !fuel.try_spend(1 + j.cost_size()) {
            return Ok(None);
        }
        let image = self.psi.query(&j)?;
        let pk = self.p.eval(k);
        if !fuel.pay(cost::outward_round(&image, pk)) {
            return Ok(None);
        }
        Ok(Some(image.outward_round(pk)))
    }

    fn describe(&self) -> String {
        format!("evaluate({}, {}, {})", self.psi.note(), self.phi.note(), self.p)
    }
}

/// `n -> ⋂_{k <= n} outward_round(psi(phi(k)), p(k))`.
pub fn evaluate(
    psi: &IntervalFunctionName,
    phi: &IntervalRealName,
    p: &Polynomial,
) -> IntervalRealName {
    Staged::new(EvalStage {
        psi: psi.clone(),
        phi: phi.clone(),
        p: p.clone(),
    })
    .name()
}

// ---------------------------------------------------------------------------
// Modulus search

/// Result of a modulus search at one precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModulusSearch {
    /// Least level `N` whose half-step cover maps to diameters `<= 2^(-n)`.
    pub level: u64,
    pub probes: u64,
}

/// The cover `[j 2^(-N-1) ± radius]`, `j = 0..=2^(N+1)`, maps into
/// diameters `<= 2^(-n)`. Stops at the first failure.
fn cover_ok<R: FunRepr>(
    psi: &Name<R>,
    level: u64,
    radius: &Dyadic,
    n: u64,
    fuel: &mut u64,
    probes: &mut u64,
) -> Result<bool, NameError> {
    if level > MAX_LEVEL {
        return Err(NameError::FuelExhausted {
            spent: *probes,
            context: format!("modulus search at precision {n} passed level {MAX_LEVEL}"),
        });
    }
    let count = 1u64 << (level + 1);
    for j in 0..=count {
        if *fuel == 0 {
            return Err(NameError::FuelExhausted {
                spent: *probes,
                context: format!("modulus search at precision {n}"),
            });
        }
        *fuel -= 1;
        *probes += 1;
        let q = DyadicInterval::ball(Dyadic::from_ratio(j as i64, level as i64 + 1), radius.clone());
        if !psi.query_transient(&q)?.diam().at_most_pow2(n as i64) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Least `N >= start` whose cover passes, searching `N = start, start + 1, ...`;
/// each step doubles the cover resolution. `fuel` counts probes.
pub fn modulus_search_from<R: FunRepr>(
    psi: &Name<R>,
    n: u64,
    start: u64,
    fuel: u64,
) -> Result<ModulusSearch, NameError> {
    if fuel == 0 {
        return Err(NameError::Invalid("modulus search needs positive fuel".into()));
    }
    let mut left = fuel;
    let mut probes = 0;
    for level in start.. {
        let radius = pow2(-(level as i64) - 1);
        if cover_ok(psi, level, &radius, n, &mut left, &mut probes)? {
            return Ok(ModulusSearch { level, probes });
        }
    }
    unreachable!("levels are unbounded")
}

/// Least `N` such that the covers of levels `N..=N + window` all pass.
/// Without monotonicity one passing level certifies nothing, so this is
/// the check used on iRRAM function names.
pub fn modulus_search_windowed<R: FunRepr>(
    psi: &Name<R>,
    n: u64,
    window: u64,
    fuel: u64,
) -> Result<ModulusSearch, NameError> {
    let mut left = fuel;
    let mut probes = 0;
    let mut run = 0;
    for level in 0.. {
        let radius = pow2(-(level as i64) - 1);
        if cover_ok(psi, level, &radius, n, &mut left, &mut probes)? {
            run += 1;
            if run > window {
                return Ok(ModulusSearch {
                    level: level - window,
                    probes,
                });
            }
        } else {
            run = 0;
        }
    }
    unreachable!("levels are unbounded")
}

/// By monotonicity of `psi`, every interval of diameter at most `2^(-N-1)`
/// maps into diameter `2^(-n)`, so `N + 1` bounds the modulus part.
pub fn modulus_upper_bound<R: FunRepr>(psi: &Name<R>, n: u64, fuel: u64) -> Result<u64, NameError> {
    Ok(modulus_search_from(psi, n, 0, fuel)?.level)
}

/// Measured parameter of a function name at one precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FunParamBound {
    pub modulus_part_upper: u64,
    pub modulus_part_lower: u64,
    pub norm_mag_upper: u64,
}

/// Upper bound of the modulus part from a passing cover at `level`: `level`
/// itself when the double-radius cover also passes, else `level + 1`.
fn certified_upper<R: FunRepr>(psi: &Name<R>, level: u64, n: u64, fuel: &mut u64) -> Result<u64, NameError> {
    let mut probes = 0;
    let wide = pow2(-(level as i64));
    Ok(if cover_ok(psi, level, &wide, n, fuel, &mut probes)? {
        level
    } else {
        level + 1
    })
}

pub fn measure_mu_if<R: FunRepr>(psi: &Name<R>, n: u64, fuel: u64) -> Result<FunParamBound, NameError> {
    let s = modulus_search_from(psi, n, 0, fuel)?;
    let mut left = fuel.saturating_sub(s.probes).max(1);
    let upper = certified_upper(psi, s.level, n, &mut left)?;
    // Level s.level - 1 failed: some interval of diameter 2^(1 - s.level) maps too wide.
    let lower = s.level;
    let coarse = modulus_search_from(psi, 0, 0, fuel)?.level;
    let mut norm = 0;
    for j in 0..=(1u64 << (coarse + 1)) {
        let q = DyadicInterval::ball(Dyadic::from_ratio(j as i64, coarse as i64 + 1), pow2(-(coarse as i64) - 1))
            .clamp_unit();
        let image = psi.query_transient(&q)?;
        let m = image.max_abs().ok_or_else(|| NameError::Invalid("unbounded enclosure at accuracy 1".into()))?;
        norm = norm.max(m.mag_bound());
    }
    Ok(FunParamBound {
        modulus_part_upper: upper,
        modulus_part_lower: lower,
        norm_mag_upper: norm,
    })
}

/// Certified modulus upper bounds for `n <= n_max`, resuming each search
/// where the previous precision stopped.
pub fn modulus_table<R: FunRepr>(psi: &Name<R>, n_max: u64, fuel: u64) -> Result<Vec<u64>, NameError> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut start = 0;
    for n in 0..=n_max {
        let s = modulus_search_from(psi, n, start, fuel)?;
        start = s.level;
        let mut left = fuel;
        out.push(certified_upper(psi, s.level, n, &mut left)?);
    }
    Ok(out)
}

/// Probe counts of the modulus search on `psi_k` at precision 1.
pub fn psi_k_probes(k: u64, fuel: u64) -> Result<u64, NameError> {
    Ok(modulus_search_from(&psi_k(k), 1, 0, fuel)?.probes)
}

// ---------------------------------------------------------------------------
// Currying

/// The point oracle handed to an evaluator; records the largest query.
#[derive(Clone)]
pub struct PointOracle {
    r: Dyadic,
    exact_from: u64,
    max_query: Arc<Mutex<Option<u64>>>,
}

impl PointOracle {
    /// Answers `m` with `round_nearest(r, m)` below `exact_from` and `r` itself from
    /// there on; answers are within `2^(-m)` of every point of `[r ± 2^(-exact_from)]`
    /// for `m <= exact_from`.
    pub fn new(r: Dyadic, exact_from: u64) -> Self {
        PointOracle {
            r,
            exact_from,
            max_query: Arc::new(Mutex::new(None)),
        }
    }

    pub fn query(&self, m: u64) -> Dyadic {
        {
            let mut k = self.max_query.lock().expect("oracle lock");
            *k = Some(k.map_or(m, |k| k.max(m)));
        }
        charge(1 + m);
        if m < self.exact_from {
            ops::round_nearest(&self.r, m)
        } else {
            self.r.clone()
        }
    }

    pub fn max_query(&self) -> Option<u64> {
        *self.max_query.lock().expect("oracle lock")
    }

    /// The oracle as a Cauchy name.
    pub fn as_cauchy(&self) -> CauchyName {
        let o = self.clone();
        Name::from_callback("point oracle", move |&m: &u64| Ok(o.query(m)))
    }
}

/// An evaluator: `d` with `|d - f(x)| <= 2^(-i)` whenever the oracle's answers
/// at `m` lie within `2^(-m)` of `x`.
pub type Evaluator = dyn Fn(&PointOracle, u64) -> Result<Dyadic, NameError> + Send + Sync;

/// The interval function computed from an evaluator by tracking its largest
/// oracle query.
///
/// A query `J` of diameter above 1 maps to the infinite interval. Otherwise
/// `J` is clamped to `[r ± e]` inside `[0, 1]`, `n = max{k : e <= 2^(-k)}`
/// (capped for points), and the evaluator runs at `i = n, n-1, ..., 0`; the
/// first run whose largest query is at most `n` gives `[d ± 2^(-i)]`.
pub fn curry_from_evaluator(note: impl Into<String>, e: Arc<Evaluator>) -> IntervalFunctionName {
    Name::from_callback(note, move |j: &DyadicInterval| {
        if !j.diam().at_most_pow2(0) {
            return Ok(DyadicInterval::Infinite);
        }
        let DyadicInterval::Finite { center, radius } = j.clamp_unit() else {
            unreachable!("clamped")
        };
        let n = if radius.is_zero() {
            POINT_QUERY_PRECISION
        } else {
            floor_neg_lb(&radius).clamp(0, POINT_QUERY_PRECISION as i64) as u64
        };
        for i in (0..=n).rev() {
            let oracle = PointOracle::new(center.clone(), n);
            let d = e(&oracle, i)?;
            if oracle.max_query().is_none_or(|k| k <= n) {
                return Ok(DyadicInterval::ball(d, pow2(-(i as i64))));
            }
        }
        Ok(DyadicInterval::Infinite)
    })
}

/// `(f, g) -> (x -> H(f(x), g(x)))` through [`curry_from_evaluator`], with `h`
/// acting on interval-real names.
pub fn lift2(
    h: Arc<dyn Fn(&IntervalRealName, &IntervalRealName) -> IntervalRealName + Send + Sync>,
    f: &IntervalFunctionName,
    g: &IntervalFunctionName,
) -> IntervalFunctionName {
    let (f, g) = (f.clone(), g.clone());
    let note = format!("lift2({}, {})", f.note(), g.note());
    let eval: Arc<Evaluator> = Arc::new(move |oracle: &PointOracle, i: u64| {
        let x = cauchy_to_interval(&oracle.as_cauchy());
        let p = Polynomial::x();
        let out = h(&evaluate(&f, &x, &p), &evaluate(&g, &x, &p));
        interval_to_cauchy(&out).query(&i)
    });
    curry_from_evaluator(note, eval)
}

/// `n -> a(n + 1) + b(n + 1)`.
pub fn real_add(a: &IntervalRealName, b: &IntervalRealName) -> IntervalRealName {
    let (a, b) = (a.clone(), b.clone());
    Name::from_callback(format!("{} + {}", a.note(), b.note()), move |&n: &u64| {
        Ok(ops::iadd(&a.query(&(n + 1))?, &b.query(&(n + 1))?))
    })
}

/// `n -> max(a(n), b(n))` endpointwise.
pub fn real_max(a: &IntervalRealName, b: &IntervalRealName) -> IntervalRealName {
    let (a, b) = (a.clone(), b.clone());
    Name::from_callback(format!("max({}, {})", a.note(), b.note()), move |&n: &u64| {
        let (ja, jb) = (a.query(&n)?, b.query(&n)?);
        Ok(match (ja.endpoints(), jb.endpoints()) {
            (Some((a0, a1)), Some((b0, b1))) => {
                DyadicInterval::from_endpoints(a0.max(b0), a1.max(b1))
            }
            _ => DyadicInterval::Infinite,
        })
    })
}

// ---------------------------------------------------------------------------
// Kawamura-Cook names

/// A KC function name with its declared modulus table `s`.
#[derive(Clone, Debug)]
pub struct KcFunctionName {
    pub name: Name<KcFun>,
    pub modulus: MonotoneTable,
}

impl KcFunctionName {
    pub fn query(&self, r: &Dyadic, n: u64) -> Result<Dyadic, NameError> {
        self.name.query(&KcQuery { r: r.clone(), n })
    }
}

fn clamp_point(r: &Dyadic) -> Dyadic {
    r.clone().max(Dyadic::zero()).min(Dyadic::one())
}

/// `(r, n) -> round_nearest(f(clamp(r)), n + 1)` for an exact `f`.
pub fn kc_from_exact(
    note: impl Into<String>,
    f: impl Fn(&Dyadic) -> Dyadic + Send + Sync + 'static,
    modulus: MonotoneTable,
) -> KcFunctionName {
    let name = Name::from_callback(note, move |q: &KcQuery| {
        Ok(ops::round_nearest(&f(&clamp_point(&q.r)), q.n + 1))
    });
    KcFunctionName { name, modulus }
}

/// Length of the declared modulus tables of the built-in KC names; past it
/// the tables hold their last value.
pub const KC_TABLE_LEN: u64 = 512;

fn shifted_identity(shift: i64) -> MonotoneTable {
    MonotoneTable::from_fn(KC_TABLE_LEN - 1, |n| (n as i64 + shift).max(0) as u64)
        .expect("shifted identity is monotone")
}

/// `x -> x` with modulus `s(n) = n`.
pub fn kc_identity() -> KcFunctionName {
    kc_from_exact("kc identity", |x| x.clone(), shifted_identity(0))
}

/// `x -> x/2 + 1/4` with modulus `s(n) = n - 1`.
pub fn kc_half_affine() -> KcFunctionName {
    kc_from_exact(
        "kc x/2 + 1/4",
        |x| &x.half() + &pow2(-2),
        shifted_identity(-1),
    )
}

/// `x -> x^2` with modulus `s(n) = n + 1`.
pub fn kc_square() -> KcFunctionName {
    kc_from_exact("kc x^2", |x| x * x, shifted_identity(1))
}

/// `x -> c` with modulus `s = 0`.
pub fn kc_constant(c: Dyadic) -> KcFunctionName {
    let note = format!("kc constant {c}");
    kc_from_exact(note, move |_| c.clone(), MonotoneTable::hold_last(vec![0]).expect("constant"))
}

/// Curries the KC evaluator: at precision `i` query the point oracle at
/// `m = s(i + 1)` and answer `kappa(r_m, i + 1)`.
pub fn kc_to_interval_fun(kappa: &KcFunctionName) -> IntervalFunctionName {
    let k = kappa.clone();
    let note = format!("curried {}", kappa.name.note());
    let eval: Arc<Evaluator> = Arc::new(move |oracle: &PointOracle, i: u64| {
        let m = k.modulus.get(u128::from(i + 1))?;
        k.query(&oracle.query(m), i + 1)
    });
    curry_from_evaluator(note, eval)
}

/// The KC name as a string function on paired codes `<r, n>`; queries
/// outside the image of the pairing answer the empty string.
pub fn kc_as_string(kappa: &KcFunctionName) -> StringFunctionName {
    let k = kappa.clone();
    Name::from_callback(format!("string view of {}", kappa.name.note()), move |a: &BitString| {
        let Ok((rc, nc)) = unpair(a) else {
            return Ok(BitString::new());
        };
        let Ok(r) = decode_dyadic(&rc) else {
            return Ok(BitString::new());
        };
        Ok(encode_dyadic(&k.query(&r, decode_query(&nc))?))
    })
}

/// Converts an iRRAM function name after a bounded modulus probe at
/// precisions 1 to 4; the evaluator intersects point intervals until the
/// image is narrow enough and answers its midpoint.
pub fn irram_fun_to_interval_fun(psi: &IrramFunctionName, fuel: u64) -> Result<IntervalFunctionName, NameError> {
    for n in 1..=4 {
        modulus_search_windowed(psi, n, SANITY_WINDOW, SANITY_FUEL)?;
    }
    let psi = psi.clone();
    let note = format!("monotone {}", psi.note());
    let eval: Arc<Evaluator> = Arc::new(move |oracle: &PointOracle, i: u64| {
        let mut acc = DyadicInterval::Infinite;
        for m in 0..fuel {
            let rm = oracle.query(m);
            acc = ops::intersect(&acc, &DyadicInterval::ball(rm, pow2(-(m as i64))))?;
            let image = psi.query(&acc)?;
            if image.diam().at_most_pow2(i as i64) {
                return Ok(image.midpoint()?);
            }
        }
        Err(NameError::FuelExhausted {
            spent: fuel,
            context: format!("no image of diameter <= 2^-{i}"),
        })
    });
    Ok(curry_from_evaluator(note, eval))
}

// ---------------------------------------------------------------------------
// KC files

/// Parses `# size: <table>` followed by `r n<TAB>d` records, dyadics in `m/2^e` form.
pub fn parse_kc_file(text: &str) -> Result<KcFunctionName, FormatError> {
    let err = |line: usize, message: String| FormatError { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let table = header
        .strip_prefix("# size:")
        .ok_or_else(|| err(1, "expected header `# size: <table>`".into()))?;
    let modulus = MonotoneTable::parse_text(table).map_err(|e| err(1, e.to_string()))?;
    let mut rows = HashMap::new();
    for (line, l) in lines {
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, d) = l.split_once('\t').ok_or_else(|| err(line, "expected `r n<TAB>d`".into()))?;
        let (r, n) = key
            .trim()
            .split_once(' ')
            .ok_or_else(|| err(line, "expected `r n` before the tab".into()))?;
        let r = Dyadic::parse_ratio(r).map_err(|e| err(line, e.to_string()))?;
        let n: u64 = n.trim().parse().map_err(|_| err(line, format!("bad precision `{n}`")))?;
        let d = Dyadic::parse_ratio(d).map_err(|e| err(line, e.to_string()))?;
        if rows.insert(KcQuery { r, n }, d).is_some() {
            return Err(err(line, "duplicate record".into()));
        }
    }
    let name = Name::from_callback("tabulated kc", move |q: &KcQuery| {
        rows.get(q)
            .cloned()
            .ok_or_else(|| NameError::OutOfTable(format!("({}, {})", q.r, q.n)))
    });
    Ok(KcFunctionName { name, modulus })
}

/// Tabulates `kappa` at the given points and precisions.
pub fn write_kc_file(kappa: &KcFunctionName, points: &[Dyadic], precisions: &[u64]) -> Result<String, NameError> {
    let mut out = format!("# size: {}", kappa.modulus.to_text());
    for r in points {
        for &n in precisions {
            out.push_str(&format!("{r} {n}\t{}\n", kappa.query(r, n)?));
        }
    }
    Ok(out)
}

/// Convergence index of `evaluate(psi, phi, p)` at precision `n`.
pub fn eval_conv_index(out: &IntervalRealName, n: u64, fuel: u64) -> Result<u64, NameError> {
    Ok(measure_mu_interval(out, n, fuel)?.conv_index)
}
