//! Closed dyadic intervals `[c ± r]` plus the infinite interval.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::dyadic::{Dyadic, DyadicParseError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    /// Two enclosures of the same value were disjoint.
    #[error("broken name: disjoint enclosures {0} and {1}")]
    BrokenName(String, String),
    #[error("midpoint of the infinite interval")]
    InfiniteMidpoint,
    #[error("negative radius {0}")]
    NegativeRadius(String),
    #[error("malformed interval text `{0}`")]
    Malformed(String),
    #[error(transparent)]
    Dyadic(#[from] DyadicParseError),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum DyadicInterval {
    /// `[center - radius, center + radius]`, `radius >= 0`.
    Finite { center: Dyadic, radius: Dyadic },
    Infinite,
}

/// Diameter of an interval; `Top` exceeds every dyadic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Diam {
    Finite(Dyadic),
    Top,
}

impl Diam {
    /// `diam <= 2^(-n)`.
    pub fn at_most_pow2(&self, n: i64) -> bool {
        match self {
            Diam::Finite(d) => *d <= Dyadic::pow2(-n),
            Diam::Top => false,
        }
    }

    pub fn finite(&self) -> Option<&Dyadic> {
        match self {
            Diam::Finite(d) => Some(d),
            Diam::Top => None,
        }
    }
}

impl Ord for Diam {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Diam::Top, Diam::Top) => Ordering::Equal,
            (Diam::Top, _) => Ordering::Greater,
            (_, Diam::Top) => Ordering::Less,
            (Diam::Finite(a), Diam::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Diam {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl DyadicInterval {
    pub fn new(center: Dyadic, radius: Dyadic) -> Result<Self, IntervalError> {
        if radius.is_negative() {
            return Err(IntervalError::NegativeRadius(radius.to_string()));
        }
        Ok(DyadicInterval::Finite { center, radius })
    }

    /// `[c ± r]`; panics on a negative radius.
    pub fn ball(center: Dyadic, radius: Dyadic) -> Self {
        assert!(!radius.is_negative(), "negative radius");
        DyadicInterval::Finite { center, radius }
    }

    pub fn point(x: Dyadic) -> Self {
        DyadicInterval::Finite {
            center: x,
            radius: Dyadic::zero(),
        }
    }

    /// `[lo, hi]`; requires `lo <= hi`.
    pub fn from_endpoints(lo: Dyadic, hi: Dyadic) -> Self {
        debug_assert!(lo <= hi);
        let center = (&lo + &hi).half();
        let radius = (&hi - &lo).half();
        DyadicInterval::Finite { center, radius }
    }

    /// `[0, 1]`.
    pub fn unit() -> Self {
        Self::ball(Dyadic::pow2(-1), Dyadic::pow2(-1))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, DyadicInterval::Infinite)
    }

    pub fn endpoints(&self) -> Option<(Dyadic, Dyadic)> {
        match self {
            DyadicInterval::Finite { center, radius } => Some((center - radius, center + radius)),
            DyadicInterval::Infinite => None,
        }
    }

    pub fn center(&self) -> Option<&Dyadic> {
        match self {
            DyadicInterval::Finite { center, .. } => Some(center),
            DyadicInterval::Infinite => None,
        }
    }

    pub fn radius(&self) -> Option<&Dyadic> {
        match self {
            DyadicInterval::Finite { radius, .. } => Some(radius),
            DyadicInterval::Infinite => None,
        }
    }

    pub fn midpoint(&self) -> Result<Dyadic, IntervalError> {
        self.center().cloned().ok_or(IntervalError::InfiniteMidpoint)
    }

    pub fn diam(&self) -> Diam {
        match self {
            DyadicInterval::Finite { radius, .. } => Diam::Finite(radius.mul_pow2(1)),
            DyadicInterval::Infinite => Diam::Top,
        }
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        match self.endpoints() {
            Some((lo, hi)) => lo <= *x && *x <= hi,
            None => true,
        }
    }

    /// `self ⊆ other`.
    pub fn subset(&self, other: &DyadicInterval) -> bool {
        match (self.endpoints(), other.endpoints()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            DyadicInterval::Finite { center, radius } => DyadicInterval::Finite {
                center: -center,
                radius: radius.clone(),
            },
            DyadicInterval::Infinite => DyadicInterval::Infinite,
        }
    }

    pub fn add(&self, other: &DyadicInterval) -> Self {
        match (self, other) {
            (
                DyadicInterval::Finite { center: c1, radius: r1 },
                DyadicInterval::Finite { center: c2, radius: r2 },
            ) => DyadicInterval::Finite {
                center: c1 + c2,
                radius: r1 + r2,
            },
            _ => DyadicInterval::Infinite,
        }
    }

    pub fn sub(&self, other: &DyadicInterval) -> Self {
        self.add(&other.neg())
    }

    /// Tightest enclosure of the product, from the four endpoint products.
    pub fn mul(&self, other: &DyadicInterval) -> Self {
        let (Some((a, b)), Some((c, d))) = (self.endpoints(), other.endpoints()) else {
            return DyadicInterval::Infinite;
        };
        let products = [&a * &c, &a * &d, &b * &c, &b * &d];
        let lo = products.iter().min().expect("four products").clone();
        let hi = products.iter().max().expect("four products").clone();
        Self::from_endpoints(lo, hi)
    }

    /// Exact intersection; disjoint inputs mean a broken name.
    pub fn intersect(&self, other: &DyadicInterval) -> Result<Self, IntervalError> {
        let (a, b) = match (self.endpoints(), other.endpoints()) {
            (None, _) => return Ok(other.clone()),
            (_, None) => return Ok(self.clone()),
            (Some(x), Some(y)) => (x, y),
        };
        let lo = a.0.max(b.0);
        let hi = a.1.min(b.1);
        if lo > hi {
            return Err(IntervalError::BrokenName(self.to_string(), other.to_string()));
        }
        Ok(Self::from_endpoints(lo, hi))
    }

    /// Clamps both endpoints into `[0, 1]`; the infinite interval becomes `[0, 1]`.
    pub fn clamp_unit(&self) -> Self {
        let Some((lo, hi)) = self.endpoints() else {
            return Self::unit();
        };
        let clamp = |x: Dyadic| x.max(Dyadic::zero()).min(Dyadic::one());
        Self::from_endpoints(clamp(lo), clamp(hi))
    }

    /// Outward rounding onto the `2^(-p)` grid with strictly smaller lower and
    /// strictly larger upper endpoint.
    ///
    /// Center and radius enter exactly; an approximation of them at
    /// `2^(-p-1)` would break the diameter bound `diam(J) + 2^(1-p)`.
    pub fn outward_round(&self, p: u64) -> Self {
        let Some((lo, hi)) = self.endpoints() else {
            return DyadicInterval::Infinite;
        };
        Self::from_endpoints(lo.round_down_strict(p), hi.round_up_strict(p))
    }

    /// Smallest enclosure with endpoints on the `2^(-w)` grid.
    pub fn widen_to_grid(&self, w: u64) -> Self {
        let Some((lo, hi)) = self.endpoints() else {
            return DyadicInterval::Infinite;
        };
        Self::from_endpoints(lo.floor_to(w), hi.ceil_to(w))
    }

    /// Largest absolute value in the interval, `None` if infinite.
    pub fn max_abs(&self) -> Option<Dyadic> {
        self.endpoints().map(|(lo, hi)| lo.abs().max(hi.abs()))
    }

    /// Smallest absolute value in the interval, `None` if infinite.
    pub fn min_abs(&self) -> Option<Dyadic> {
        self.endpoints().map(|(lo, hi)| {
            if lo <= Dyadic::zero() && Dyadic::zero() <= hi {
                Dyadic::zero()
            } else {
                lo.abs().min(hi.abs())
            }
        })
    }

    pub fn bit_len(&self) -> u64 {
        match self {
            DyadicInterval::Finite { center, radius } => center.bit_len() + radius.bit_len(),
            DyadicInterval::Infinite => 1,
        }
    }

    /// Textual form `[c ± r]` with dyadic fields in `sign mantissa exponent` form, or `INF`.
    pub fn to_text(&self) -> String {
        match self {
            DyadicInterval::Finite { center, radius } => {
                format!("[{} ± {}]", center.to_text(), radius.to_text())
            }
            DyadicInterval::Infinite => "INF".to_string(),
        }
    }

    pub fn parse_text(s: &str) -> Result<Self, IntervalError> {
        let s = s.trim();
        if s == "INF" {
            return Ok(DyadicInterval::Infinite);
        }
        let inner = s
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| IntervalError::Malformed(s.to_string()))?;
        let (c, r) = inner
            .split_once('±')
            .ok_or_else(|| IntervalError::Malformed(s.to_string()))?;
        Self::new(Dyadic::parse_text(c)?, Dyadic::parse_text(r)?)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DyadicInterval::Finite { center, radius } => write!(f, "[{center} ± {radius}]"),
            DyadicInterval::Infinite => write!(f, "INF"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(num: i64, den_log2: i64) -> Dyadic {
        Dyadic::from_ratio(num, den_log2)
    }

    fn iv(c: Dyadic, r: Dyadic) -> DyadicInterval {
        DyadicInterval::ball(c, r)
    }

    #[test]
    fn arithmetic_examples() {
        let unit = iv(d(0, 0), d(1, 0));
        assert_eq!(unit.mul(&unit), unit);
        assert_eq!(
            iv(d(1, 0), d(1, 0)).mul(&iv(d(2, 0), d(1, 0))),
            iv(d(3, 0), d(3, 0))
        );
        assert!(iv(d(1, 1), d(1, 2)).add(&DyadicInterval::Infinite).is_infinite());
        assert!(DyadicInterval::point(Dyadic::zero())
            .mul(&DyadicInterval::Infinite)
            .is_infinite());
    }

    #[test]
    fn intersection_examples() {
        let a = iv(d(0, 0), d(1, 0));
        assert_eq!(a.intersect(&iv(d(1, 0), d(1, 0))).unwrap(), iv(d(1, 1), d(1, 1)));
        assert_eq!(a.intersect(&DyadicInterval::Infinite).unwrap(), a);
        assert!(matches!(
            a.intersect(&iv(d(3, 0), d(1, 0))),
            Err(IntervalError::BrokenName(..))
        ));
    }

    #[test]
    fn queries() {
        assert!(iv(d(1, 1), d(1, 2)).subset(&iv(d(1, 1), d(1, 1))));
        assert_eq!(iv(d(1, 2), d(1, 2)).midpoint().unwrap(), d(1, 2));
        assert_eq!(iv(d(0, 0), d(1, 3)).diam(), Diam::Finite(d(1, 2)));
        assert!(DyadicInterval::Infinite.midpoint().is_err());
        assert!(Diam::Top > Diam::Finite(d(1, -100)));
    }

    #[test]
    fn outward_round_examples() {
        assert_eq!(
            iv(d(1, 1), d(1, 2)).outward_round(3),
            DyadicInterval::from_endpoints(d(1, 3), d(7, 3))
        );
        assert_eq!(iv(d(1, 1), d(1, 2)).outward_round(3), iv(d(1, 1), d(3, 3)));
        assert!(DyadicInterval::Infinite.outward_round(5).is_infinite());
        assert_eq!(
            DyadicInterval::point(Dyadic::zero()).outward_round(4),
            DyadicInterval::from_endpoints(d(-1, 4), d(1, 4))
        );
    }

    #[test]
    fn text_round_trip() {
        for j in [iv(d(3, 3), d(1, 5)), DyadicInterval::Infinite, iv(d(-7, 0), d(0, 0))] {
            assert_eq!(DyadicInterval::parse_text(&j.to_text()).unwrap(), j);
        }
        assert!(DyadicInterval::parse_text("[+ 1 0 , + 1 0]").is_err());
        assert!(DyadicInterval::parse_text("[+ 1 0 ± - 1 0]").is_err());
    }
}
