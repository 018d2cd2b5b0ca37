//! Bit-exact codes over `{0, 1}`: integers, dyadics, intervals, the
//! three-track string pairing, size functions and monotone tables.
//!
//! Every "size" measured elsewhere is the length of one of these codes.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::interval::DyadicInterval;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("symbol `{0}` is not a bit")]
    NotABit(char),
    #[error("separator pair `10` is malformed at bit {0}")]
    MalformedSeparator(usize),
    #[error("missing binary-point separator")]
    MissingSeparator,
    #[error("integer part lacks a sign bit")]
    MissingSign,
    #[error("pairing of length {0} is not a whole number of triples")]
    RaggedPairing(usize),
    #[error("pairing header is malformed")]
    MalformedHeader,
    #[error("prefix of length {have} is shorter than the required {need}")]
    PrefixTooShort { have: usize, need: usize },
    #[error("empty interval code")]
    EmptyInterval,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("table decreases at index {index}: {prev} > {next}")]
    NotMonotone { index: usize, prev: u64, next: u64 },
    #[error("index {index} outside a table of length {len} with the fail extension")]
    OutOfRange { index: u128, len: usize },
    #[error("malformed table entry `{0}`")]
    Malformed(String),
}

/// A finite word over `{0, 1}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(n: usize) -> Self {
        BitString(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        BitString(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b)
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn prefix(&self, n: usize) -> BitString {
        BitString(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> BitString {
        BitString(self.0[n.min(self.0.len())..].to_vec())
    }

    /// The string with its first bit removed, and that bit.
    pub fn split_first(&self) -> Option<(bool, BitString)> {
        self.0
            .split_first()
            .map(|(b, rest)| (*b, BitString(rest.to_vec())))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = CodecError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CodecError::NotABit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

fn push_binary(out: &mut BitString, m: &BigUint) {
    if m.is_zero() {
        return;
    }
    for c in m.to_str_radix(2).bytes() {
        out.push(c == b'1');
    }
}

fn binary_value(bits: &[bool]) -> BigUint {
    let mut v = BigUint::zero();
    for &b in bits {
        v <<= 1u32;
        if b {
            v += 1u32;
        }
    }
    v
}

/// Sign bit, then the binary numeral of `|z|` with its leading 1; zero is `0`.
pub fn encode_int(z: &BigInt) -> BitString {
    let mut out = BitString::new();
    out.push(z.is_negative());
    push_binary(&mut out, z.magnitude());
    out
}

/// `(-1)^{a_0} * sum_{i=1}^{L-1} a_i 2^{L-1-i}`; strings of length at most 1 decode to 0.
pub fn decode_int(a: &BitString) -> BigInt {
    let Some((&sign, rest)) = a.0.split_first() else {
        return BigInt::zero();
    };
    let mag = BigInt::from(binary_value(rest));
    if sign {
        -mag
    } else {
        mag
    }
}

/// Code of the precision query `n`: the integer `2^n`, of length `n + 2`.
pub fn encode_query(n: u64) -> BitString {
    let mut out = BitString::new();
    out.push(false);
    out.push(true);
    out.0.extend(std::iter::repeat(false).take(n as usize));
    out
}

/// Total inverse of [`encode_query`]: `floor(log2 v)` for the decoded `v >= 1`, else 0.
pub fn decode_query(a: &BitString) -> u64 {
    let v = decode_int(a);
    if v.is_positive() {
        v.bits() - 1
    } else {
        0
    }
}

/// Length of the query code of `n`; the constant `c` of the Cauchy/interval
/// translation is `query_code_len(0)`.
pub fn query_code_len(n: u64) -> u64 {
    n + 2
}

/// Integer part (sign bit plus numeral of `floor(|d|)`) written with doubled
/// bits, the separator `01`, then the fraction bits of `|d|`.
pub fn encode_dyadic(d: &Dyadic) -> BitString {
    let mag = d.mantissa().magnitude();
    let e = d.exponent();
    let (int_part, frac_bits): (BigUint, Vec<bool>) = if e <= 0 {
        (mag << ((-e) as u64), Vec::new())
    } else {
        let e = e as u64;
        let int_part = mag >> e;
        let low = mag - (&int_part << e);
        let s = low.to_str_radix(2);
        let mut frac = vec![false; (e as usize).saturating_sub(s.len())];
        frac.extend(s.bytes().map(|c| c == b'1'));
        (int_part, frac)
    };
    let mut head = BitString::new();
    head.push(d.is_negative());
    push_binary(&mut head, &int_part);
    let mut out = BitString::new();
    for b in head.0 {
        out.push(b);
        out.push(b);
    }
    out.push(false);
    out.push(true);
    out.0.extend(frac_bits);
    out
}

/// `encode_dyadic(d).len()`, without building the code.
pub fn dyadic_code_len(d: &Dyadic) -> u64 {
    let mag_bits = d.mantissa().magnitude().bits();
    let e = d.exponent();
    let (int_bits, frac_bits) = if e <= 0 {
        (if mag_bits == 0 { 0 } else { mag_bits + (-e) as u64 }, 0)
    } else {
        (mag_bits.saturating_sub(e as u64), e as u64)
    };
    2 * (1 + int_bits) + 2 + frac_bits
}

/// `pair_strings(a, b).len()` for `|a| = la`, `|b| = lb`.
pub fn pair_len(la: u64, lb: u64) -> u64 {
    let m = la.min(lb);
    let longer = la.max(lb);
    3 * if longer >= m + 2 { longer } else { m + 4 }
}

/// `encode_interval(j).len()`, without building the code.
pub fn interval_code_len(j: &DyadicInterval) -> u64 {
    match j {
        DyadicInterval::Infinite => 1,
        DyadicInterval::Finite { center, radius } => {
            1 + pair_len(dyadic_code_len(center), dyadic_code_len(radius))
        }
    }
}

pub fn decode_dyadic(a: &BitString) -> Result<Dyadic, CodecError> {
    let bits = &a.0;
    let mut head = Vec::new();
    let mut i = 0;
    loop {
        if i + 1 >= bits.len() {
            return Err(CodecError::MissingSeparator);
        }
        match (bits[i], bits[i + 1]) {
            (false, false) => head.push(false),
            (true, true) => head.push(true),
            (false, true) => break,
            (true, false) => return Err(CodecError::MalformedSeparator(i)),
        }
        i += 2;
    }
    let (&sign, int_bits) = head.split_first().ok_or(CodecError::MissingSign)?;
    let frac = &bits[i + 2..];
    let int_part = BigInt::from(binary_value(int_bits));
    let frac_part = BigInt::from(binary_value(frac));
    let k = frac.len() as i64;
    let mag = Dyadic::new((int_part << (k as u64)) + frac_part, k);
    Ok(if sign { -mag } else { mag })
}

/// `0` for the infinite interval, else `1` followed by the pairing of the
/// center and radius codes.
pub fn encode_interval(j: &DyadicInterval) -> BitString {
    match j {
        DyadicInterval::Infinite => BitString(vec![false]),
        DyadicInterval::Finite { center, radius } => {
            let mut out = BitString(vec![true]);
            out.extend_from(&pair_strings(&encode_dyadic(center), &encode_dyadic(radius)));
            out
        }
    }
}

pub fn decode_interval(a: &BitString) -> Result<DyadicInterval, CodecError> {
    match a.split_first() {
        None => Err(CodecError::EmptyInterval),
        Some((false, _)) => Ok(DyadicInterval::Infinite),
        Some((true, rest)) => {
            let (c, r) = unpair(&rest)?;
            let radius = decode_dyadic(&r)?;
            if radius.is_negative() {
                return Err(CodecError::MalformedHeader);
            }
            Ok(DyadicInterval::ball(decode_dyadic(&c)?, radius))
        }
    }
}

/// Three-track interleaving: triples `(a_i, b_i, c_i)` with the header track
/// `c = 1^min 0 flag 0...` (flag set iff `a` is strictly longer) and both
/// strings zero-padded to the track length.
///
/// When the longer string exceeds the shorter by at most one bit, the
/// track is extended to `min + 4` with `c = 1^min 0 flag 1 eq` so the
/// lengths stay recoverable; the layout is otherwise unchanged.
pub fn pair_strings(a: &BitString, b: &BitString) -> BitString {
    let m = a.len().min(b.len());
    let longer = a.len().max(b.len());
    let flag = a.len() > b.len();
    let mut c = vec![true; m];
    c.push(false);
    c.push(flag);
    let len = if longer >= m + 2 {
        c.resize(longer, false);
        longer
    } else {
        c.push(true);
        c.push(a.len() == b.len());
        m + 4
    };
    let mut out = Vec::with_capacity(3 * len);
    for (i, &ci) in c.iter().enumerate() {
        out.push(a.get(i).unwrap_or(false));
        out.push(b.get(i).unwrap_or(false));
        out.push(ci);
    }
    BitString(out)
}

fn tracks(c: &BitString, triples: usize) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
    let mut ta = Vec::with_capacity(triples);
    let mut tb = Vec::with_capacity(triples);
    let mut tc = Vec::with_capacity(triples);
    for t in c.0.chunks_exact(3).take(triples) {
        ta.push(t[0]);
        tb.push(t[1]);
        tc.push(t[2]);
    }
    (ta, tb, tc)
}

/// Inverse of [`pair_strings`]; rejects strings outside its image.
pub fn unpair(c: &BitString) -> Result<(BitString, BitString), CodecError> {
    if c.len() % 3 != 0 {
        return Err(CodecError::RaggedPairing(c.len()));
    }
    let len = c.len() / 3;
    let (ta, tb, tc) = tracks(c, len);
    let m = tc.iter().take_while(|&&b| b).count();
    if m + 2 > len {
        return Err(CodecError::MalformedHeader);
    }
    let flag = tc[m + 1];
    let (la, lb) = if m + 2 < len && tc[m + 2] {
        if len != m + 4 {
            return Err(CodecError::MalformedHeader);
        }
        match (tc[m + 3], flag) {
            (true, false) => (m, m),
            (false, true) => (m + 1, m),
            (false, false) => (m, m + 1),
            (true, true) => return Err(CodecError::MalformedHeader),
        }
    } else {
        if tc[m + 2..].iter().any(|&b| b) {
            return Err(CodecError::MalformedHeader);
        }
        if flag {
            (len, m)
        } else {
            (m, len)
        }
    };
    if ta[la..].iter().chain(&tb[lb..]).any(|&b| b) {
        return Err(CodecError::MalformedHeader);
    }
    Ok((BitString(ta[..la].to_vec()), BitString(tb[..lb].to_vec())))
}

/// Reads the `n`-prefixes of both paired strings from the first `3(n+2)`
/// bits of the pairing alone. A string the visible header shows to be
/// shorter than `n` is returned whole.
pub fn unpair_prefix(c: &BitString, n: usize) -> Result<(BitString, BitString), CodecError> {
    let need = 3 * (n + 2);
    if c.len() < need {
        return Err(CodecError::PrefixTooShort { have: c.len(), need });
    }
    let (ta, tb, tc) = tracks(&c.prefix(need), n + 2);
    let mut a = BitString(ta[..n].to_vec());
    let mut b = BitString(tb[..n].to_vec());
    let m = tc.iter().take_while(|&&x| x).count();
    if m < n {
        // m < n implies the flag at m + 1 <= n + 1 is visible.
        let flag = tc[m + 1];
        let degenerate = m + 3 <= n + 1 && tc[m + 2];
        let (shorter, longer) = if flag { (&mut b, &mut a) } else { (&mut a, &mut b) };
        *shorter = shorter.prefix(m);
        if degenerate {
            let extra = usize::from(!tc[m + 3]);
            *longer = longer.prefix(m + extra);
        }
    }
    Ok((a, b))
}

/// Where a size value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeOf {
    /// Maximum over logged queries only: a lower bound on the true size.
    Observed(u64),
    /// Analytic size of a structured name.
    Exact(u64),
}

impl SizeOf {
    pub fn value(self) -> u64 {
        match self {
            SizeOf::Observed(v) | SizeOf::Exact(v) => v,
        }
    }
}

pub enum SizeSource<'a> {
    /// `(query length, answer length)` records.
    Log(&'a [(u64, u64)]),
    Analytic(&'a dyn Fn(u64) -> u64),
}

/// `|φ|(n) = max_{|a| <= n} |φ(a)|`.
pub fn size_of(phi: &SizeSource<'_>, n: u64) -> SizeOf {
    match phi {
        SizeSource::Log(log) => SizeOf::Observed(
            log.iter()
                .filter(|(q, _)| *q <= n)
                .map(|(_, a)| *a)
                .max()
                .unwrap_or(0),
        ),
        SizeSource::Analytic(f) => SizeOf::Exact(f(n)),
    }
}

/// All strings of length exactly `len`, in lexicographic order.
pub fn all_strings(len: usize) -> impl Iterator<Item = BitString> {
    (0u64..(1u64 << len)).map(move |v| {
        BitString((0..len).map(|i| (v >> (len - 1 - i)) & 1 == 1).collect())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Extension {
    HoldLast,
    Fail,
}

/// A nondecreasing finite table of naturals with an extension rule.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MonotoneTable {
    values: Vec<u64>,
    extension: Extension,
}

impl MonotoneTable {
    pub fn new(values: Vec<u64>, extension: Extension) -> Result<Self, TableError> {
        if let Some(i) = values.windows(2).position(|w| w[0] > w[1]) {
            return Err(TableError::NotMonotone {
                index: i + 1,
                prev: values[i],
                next: values[i + 1],
            });
        }
        Ok(MonotoneTable { values, extension })
    }

    pub fn hold_last(values: Vec<u64>) -> Result<Self, TableError> {
        Self::new(values, Extension::HoldLast)
    }

    /// The table `m ↦ f(m)` on `0..=n_max`; `f` must be nondecreasing.
    pub fn from_fn(n_max: u64, f: impl Fn(u64) -> u64) -> Result<Self, TableError> {
        Self::hold_last((0..=n_max).map(f).collect())
    }

    pub fn identity(n_max: u64) -> Self {
        MonotoneTable {
            values: (0..=n_max).collect(),
            extension: Extension::HoldLast,
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: u128) -> Result<u64, TableError> {
        if let Some(v) = usize::try_from(index).ok().and_then(|i| self.values.get(i)) {
            return Ok(*v);
        }
        match (self.extension, self.values.last()) {
            (Extension::HoldLast, Some(last)) => Ok(*last),
            _ => Err(TableError::OutOfRange {
                index,
                len: self.values.len(),
            }),
        }
    }

    /// Pointwise maximum, over the longer of the two ranges.
    pub fn pointwise_max(&self, other: &MonotoneTable) -> Result<MonotoneTable, TableError> {
        let n = self.len().max(other.len());
        let values = (0..n as u128)
            .map(|i| Ok(self.get(i)?.max(other.get(i)?)))
            .collect::<Result<Vec<_>, TableError>>()?;
        MonotoneTable::new(values, self.extension)
    }

    /// Whitespace-separated naturals; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self, TableError> {
        let mut values = Vec::new();
        for line in text.lines() {
            let body = line.split('#').next().unwrap_or("");
            for tok in body.split_whitespace() {
                values.push(
                    tok.parse::<u64>()
                        .map_err(|_| TableError::Malformed(tok.to_string()))?,
                );
            }
        }
        Self::hold_last(values)
    }

    pub fn to_text(&self) -> String {
        let body: Vec<String> = self.values.iter().map(u64::to_string).collect();
        format!("{}\n", body.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn code_lengths_match_encodings() {
        for m in -40i64..40 {
            for e in -4i64..6 {
                let d = Dyadic::new(BigInt::from(m), e);
                assert_eq!(dyadic_code_len(&d), encode_dyadic(&d).len() as u64, "{d}");
                let j = DyadicInterval::ball(d.clone(), d.abs());
                assert_eq!(interval_code_len(&j), encode_interval(&j).len() as u64);
            }
        }
        assert_eq!(interval_code_len(&DyadicInterval::Infinite), 1);
    }

    #[test]
    fn integer_codes() {
        assert_eq!(encode_int(&BigInt::from(-5)), bs("1101"));
        assert_eq!(encode_int(&BigInt::from(1)), bs("01"));
        assert_eq!(encode_int(&BigInt::from(0)), bs("0"));
        for s in ["", "0", "1"] {
            assert_eq!(decode_int(&bs(s)), BigInt::zero());
        }
        for z in -8..=8 {
            assert_eq!(decode_int(&encode_int(&BigInt::from(z))), BigInt::from(z));
        }
    }

    #[test]
    fn query_codes() {
        assert_eq!(encode_query(0), bs("01"));
        assert_eq!(encode_query(3), bs("01000"));
        for n in 0..20 {
            assert_eq!(decode_query(&encode_query(n)), n);
            assert_eq!(encode_query(n).len() as u64, query_code_len(n));
        }
    }

    #[test]
    fn dyadic_codes() {
        for (num, den) in [(3, 3), (0, 0), (-1, 1), (7, 0), (-13, 5), (1, -4)] {
            let d = Dyadic::from_ratio(num, den);
            assert_eq!(decode_dyadic(&encode_dyadic(&d)).unwrap(), d);
        }
        assert_eq!(encode_dyadic(&Dyadic::zero()), bs("0001"));
        assert_eq!(encode_dyadic(&Dyadic::from_ratio(3, 3)), bs("0001011"));
        let lens: Vec<usize> = (1..=64)
            .map(|k| encode_dyadic(&Dyadic::pow2(-k)).len())
            .collect();
        assert!(lens.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(matches!(
            decode_dyadic(&bs("0010")),
            Err(CodecError::MalformedSeparator(2))
        ));
        assert!(decode_dyadic(&bs("0000")).is_err());
    }

    #[test]
    fn interval_codes() {
        for j in [
            DyadicInterval::Infinite,
            DyadicInterval::ball(Dyadic::from_ratio(3, 3), Dyadic::pow2(-7)),
            DyadicInterval::point(Dyadic::from_int(-4)),
        ] {
            assert_eq!(decode_interval(&encode_interval(&j)).unwrap(), j);
        }
    }

    #[test]
    fn pairing_matches_worked_layout() {
        assert_eq!(
            pair_strings(&bs("000"), &bs("100110")),
            bs("011001001010010000")
        );
    }

    #[test]
    fn pairing_of_empty_strings_is_header_only() {
        let p = pair_strings(&BitString::new(), &BitString::new());
        let (ta, tb, tc) = tracks(&p, p.len() / 3);
        assert!(ta.iter().chain(&tb).all(|&b| !b));
        assert!(tc.iter().any(|&b| b));
        assert_eq!(unpair(&p).unwrap(), (BitString::new(), BitString::new()));
    }

    #[test]
    fn pairing_is_injective_up_to_length_8() {
        let strings: Vec<BitString> = (0..=8).flat_map(all_strings).collect();
        let mut seen = std::collections::HashSet::new();
        for a in &strings {
            for b in &strings {
                let p = pair_strings(a, b);
                assert_eq!(unpair(&p).unwrap(), (a.clone(), b.clone()));
                assert!(seen.insert(p), "collision at ({a}, {b})");
            }
        }
    }

    #[test]
    fn prefix_readability() {
        let strings: Vec<BitString> = (0..=16)
            .flat_map(|len| all_strings(len).step_by(if len > 6 { 97 } else { 1 }))
            .collect();
        for a in &strings {
            for b in &strings {
                let p = pair_strings(a, b);
                for n in 0..=a.len().min(b.len()) {
                    let (pa, pb) = unpair_prefix(&p.prefix(3 * (n + 2)), n).unwrap();
                    assert_eq!((pa, pb), (a.prefix(n), b.prefix(n)));
                }
            }
        }
        assert!(unpair_prefix(&bs("011"), 0).is_err());
    }

    #[test]
    fn size_functions() {
        let constant = |_n: u64| 2;
        assert_eq!(size_of(&SizeSource::Analytic(&constant), 7), SizeOf::Exact(2));
        let log = [(3, 5), (1, 2)];
        assert_eq!(size_of(&SizeSource::Log(&log), 3), SizeOf::Observed(5));
        assert_eq!(size_of(&SizeSource::Log(&log), 2), SizeOf::Observed(2));
    }

    #[test]
    fn monotone_tables() {
        assert!(MonotoneTable::hold_last(vec![1, 3, 2]).is_err());
        let t = MonotoneTable::hold_last(vec![1, 3, 3]).unwrap();
        assert_eq!(t.get(10).unwrap(), 3);
        let f = MonotoneTable::new(vec![1, 3], Extension::Fail).unwrap();
        assert!(f.get(2).is_err());
        let m = t
            .pointwise_max(&MonotoneTable::hold_last(vec![2, 2, 2, 9]).unwrap())
            .unwrap();
        assert_eq!(m.values(), &[2, 3, 3, 9]);
        assert_eq!(MonotoneTable::parse_text(&t.to_text()).unwrap(), t);
    }
}
