//! Exact dyadic rationals `mantissa * 2^(-exponent)`.
//!
//! Values are kept canonical (odd mantissa, or the pair `(0, 0)`), so
//! structural equality coincides with numeric equality and dyadics can key
//! memo tables directly. Nothing here rounds unless its name says so.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DyadicParseError {
    #[error("expected three fields `sign mantissa exponent`, found {0}")]
    FieldCount(usize),
    #[error("sign must be `+` or `-`, found `{0}`")]
    Sign(String),
    #[error("mantissa must be a binary numeral, found `{0}`")]
    Mantissa(String),
    #[error("exponent must be a decimal integer, found `{0}`")]
    Exponent(String),
}

/// The dyadic rational `mantissa * 2^(-exponent)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    /// Builds `mantissa * 2^(-exponent)` and brings it into canonical form.
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        if mantissa.is_zero() {
            return Self::zero();
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        if tz == 0 {
            return Dyadic { mantissa, exponent };
        }
        Dyadic {
            mantissa: mantissa >> tz,
            exponent: exponent - tz as i64,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: 0,
        }
    }

    pub fn from_int(z: impl Into<BigInt>) -> Self {
        Self::new(z.into(), 0)
    }

    /// `num / 2^den_log2`.
    pub fn from_ratio(num: impl Into<BigInt>, den_log2: i64) -> Self {
        Self::new(num.into(), den_log2)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        Dyadic {
            mantissa: BigInt::one(),
            exponent: -k,
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// `self * 2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Dyadic {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent - k,
        }
    }

    pub fn half(&self) -> Self {
        self.mul_pow2(-1)
    }

    pub fn is_integer(&self) -> bool {
        self.exponent <= 0
    }

    /// True iff `self` is a multiple of `2^(-n)`.
    pub fn on_grid(&self, n: i64) -> bool {
        self.exponent <= n
    }

    /// Storage size in bits: mantissa bits plus exponent bits, at least 1.
    pub fn bit_len(&self) -> u64 {
        let m = self.mantissa.bits();
        let e = 64 - self.exponent.unsigned_abs().leading_zeros() as u64;
        (m + e).max(1)
    }

    /// `floor(self * 2^n)`.
    pub fn floor_scaled(&self, n: i64) -> BigInt {
        let shift = n - self.exponent;
        if shift >= 0 {
            &self.mantissa << (shift as u64)
        } else {
            let d = BigInt::one() << ((-shift) as u64);
            self.mantissa.div_floor(&d)
        }
    }

    /// `ceil(self * 2^n)`.
    pub fn ceil_scaled(&self, n: i64) -> BigInt {
        -(-self).floor_scaled(n)
    }

    /// Least multiple of `2^(-n)` strictly greater than `self`.
    pub fn round_up_strict(&self, n: u64) -> Self {
        let n = n as i64;
        Self::new(self.floor_scaled(n) + 1, n)
    }

    /// Greatest multiple of `2^(-n)` strictly less than `self`.
    pub fn round_down_strict(&self, n: u64) -> Self {
        let n = n as i64;
        Self::new(self.ceil_scaled(n) - 1, n)
    }

    /// Greatest multiple of `2^(-n)` not above `self`.
    pub fn floor_to(&self, n: u64) -> Self {
        let n = n as i64;
        Self::new(self.floor_scaled(n), n)
    }

    /// Least multiple of `2^(-n)` not below `self`.
    pub fn ceil_to(&self, n: u64) -> Self {
        let n = n as i64;
        Self::new(self.ceil_scaled(n), n)
    }

    /// Nearest multiple of `2^(-n)`; ties go toward negative infinity.
    pub fn round_nearest(&self, n: u64) -> Self {
        let n = n as i64;
        if self.on_grid(n) {
            return self.clone();
        }
        // ceil(x * 2^n - 1/2) = ceil((2x * 2^n - 1) / 2)
        let twice = self.mul_pow2(1).floor_scaled(n);
        let exact_twice = self.mul_pow2(1).on_grid(n);
        let k = if exact_twice {
            // x * 2^n is a half-integer: the tie goes down.
            (twice - BigInt::one()).div_floor(&BigInt::from(2))
        } else {
            // x * 2^n - 1/2 is not an integer, so ceil = floor + 1.
            let scaled = self.floor_scaled(n);
            let frac_ge_half = (&twice - (&scaled << 1u32)).is_one();
            if frac_ge_half {
                scaled + 1
            } else {
                scaled
            }
        };
        Self::new(k, n)
    }

    /// `ceil(log2(|self| + 1))`, exactly.
    pub fn mag_bound(&self) -> u64 {
        // 2^k >= y for an integer power iff 2^k >= ceil(y); y >= 1 here.
        let y = self.abs() + Dyadic::one();
        let c = y.ceil_scaled(0);
        let c_minus_one: BigInt = c - 1;
        c_minus_one.bits()
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mantissa.to_f64().unwrap_or(f64::NAN);
        if m.is_finite() {
            return m * 2f64.powi(-(self.exponent.clamp(-2000, 2000) as i32));
        }
        let bits = self.mantissa.bits() as i64;
        let shift = bits - 60;
        let top = (&self.mantissa >> shift as u64).to_f64().unwrap_or(0.0);
        top * 2f64.powf((shift - self.exponent) as f64)
    }

    /// Bit-exact textual form `sign mantissa exponent`, e.g. `+ 101 3` for 5/8.
    pub fn to_text(&self) -> String {
        let sign = if self.is_negative() { '-' } else { '+' };
        format!(
            "{} {} {}",
            sign,
            self.mantissa.magnitude().to_str_radix(2),
            self.exponent
        )
    }

    pub fn parse_text(s: &str) -> Result<Self, DyadicParseError> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(DyadicParseError::FieldCount(fields.len()));
        }
        Self::from_fields(fields[0], fields[1], fields[2])
    }

    /// Parses the [`Display`](fmt::Display) form: `m` or `m/2^e`.
    pub fn parse_ratio(s: &str) -> Result<Self, DyadicParseError> {
        let s = s.trim();
        let (m, e) = match s.split_once("/2^") {
            Some((m, e)) => (m, e.parse::<i64>().map_err(|_| DyadicParseError::Exponent(e.to_string()))?),
            None => (s, 0),
        };
        let m: BigInt = m.parse().map_err(|_| DyadicParseError::Mantissa(m.to_string()))?;
        Ok(Self::new(m, e))
    }

    pub(crate) fn from_fields(sign: &str, mant: &str, exp: &str) -> Result<Self, DyadicParseError> {
        let negative = match sign {
            "+" => false,
            "-" => true,
            other => return Err(DyadicParseError::Sign(other.to_string())),
        };
        if mant.is_empty() || !mant.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(DyadicParseError::Mantissa(mant.to_string()));
        }
        let m = BigInt::parse_bytes(mant.as_bytes(), 2)
            .ok_or_else(|| DyadicParseError::Mantissa(mant.to_string()))?;
        let e: i64 = exp
            .parse()
            .map_err(|_| DyadicParseError::Exponent(exp.to_string()))?;
        Ok(Self::new(if negative { -m } else { m }, e))
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Dyadic {
    fn from(z: i64) -> Self {
        Dyadic::from_int(z)
    }
}

impl FromStr for Dyadic {
    type Err = DyadicParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_text(s)
    }
}

fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
    let e = a.exponent.max(b.exponent);
    let ma = &a.mantissa << ((e - a.exponent) as u64);
    let mb = &b.mantissa << ((e - b.exponent) as u64);
    (ma, mb, e)
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (ma, mb, e) = aligned(self, rhs);
        Dyadic::new(ma + mb, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        // Odd times odd stays odd, so the result is already canonical.
        Dyadic {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -&self.mantissa,
            exponent: self.exponent,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: &Dyadic) -> Dyadic {
                (&self).$m(rhs)
            }
        }
        impl $tr<Dyadic> for &Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.sign(), other.mantissa.sign());
        if sa != sb {
            return rank(sa).cmp(&rank(sb));
        }
        if self.exponent == other.exponent {
            return self.mantissa.cmp(&other.mantissa);
        }
        let (ma, mb, _) = aligned(self, other);
        ma.cmp(&mb)
    }
}

fn rank(s: Sign) -> i8 {
    match s {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Rational notation: `5/8`, `-3`, `0`.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent <= 0 {
            write!(f, "{}", &self.mantissa << ((-self.exponent) as u64))
        } else {
            write!(f, "{}/2^{}", self.mantissa, self.exponent)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(num: i64, den_log2: i64) -> Dyadic {
        Dyadic::from_ratio(num, den_log2)
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(d(1, 1) + d(1, 2), d(3, 2));
        assert_eq!(d(3, 3) + d(5, 3), Dyadic::one());
        let one = d(3, 3) + d(5, 3);
        assert_eq!((one.mantissa().clone(), one.exponent()), (BigInt::one(), 0));
        assert_eq!(d(1, 1) * d(1, 1), d(1, 2));
        assert_eq!(d(7, 1) * d(3, 2), d(21, 3));
        assert_eq!(d(5, 0) + Dyadic::zero(), d(5, 0));
    }

    #[test]
    fn strict_rounding_examples() {
        assert_eq!(d(3, 2).round_up_strict(3), d(7, 3));
        assert_eq!(Dyadic::zero().round_up_strict(3), d(1, 3));
        assert_eq!(d(1, 3).round_up_strict(3), d(1, 2));
        assert_eq!(d(1, 2).round_down_strict(3), d(1, 3));
        assert_eq!(Dyadic::zero().round_down_strict(3), d(-1, 3));
        assert_eq!(d(7, 3).round_down_strict(3), d(3, 2));
    }

    #[test]
    fn nearest_rounding_examples() {
        assert_eq!(d(5, 4).round_nearest(2), d(1, 2));
        assert_eq!(d(3, 3).round_nearest(2), d(1, 2));
        assert_eq!(d(-3, 3).round_nearest(2), d(-1, 1));
        assert_eq!(d(7, 3).round_nearest(3), d(7, 3));
        assert_eq!(d(7, 4).round_nearest(2), d(1, 1));
    }

    #[test]
    fn mag_bound_examples() {
        assert_eq!(Dyadic::zero().mag_bound(), 0);
        assert_eq!(d(3, 0).mag_bound(), 2);
        assert_eq!(d(1, 1).mag_bound(), 1);
        assert_eq!(d(1, 0).mag_bound(), 1);
        assert_eq!(d(-7, 0).mag_bound(), 3);
        assert_eq!(d(8, 0).mag_bound(), 4);
    }

    #[test]
    fn shift_right_of_negative_floors() {
        assert_eq!(d(-1, 2).floor_scaled(0), BigInt::from(-1));
        assert_eq!(d(-1, 2).ceil_scaled(0), BigInt::zero());
    }

    #[test]
    fn text_round_trip() {
        for x in [d(5, 3), d(-5, 3), Dyadic::zero(), d(12, 0), d(1, -3)] {
            assert_eq!(Dyadic::parse_text(&x.to_text()).unwrap(), x);
        }
        assert_eq!(d(5, 3).to_text(), "+ 101 3");
        assert!(Dyadic::parse_text("+ 102 3").is_err());
        assert!(Dyadic::parse_text("* 1 3").is_err());
    }
}
