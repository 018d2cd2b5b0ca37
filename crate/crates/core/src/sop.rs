//! Second-order polynomials in a function variable `l` and a number variable `X`.
//!
//! Values are evaluated exactly as big naturals; `l` is a [`MonotoneTable`],
//! whose extension rule decides what happens past the measured range.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::bitcodec::{MonotoneTable, TableError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SopError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// A polynomial in `ℕ[X]`, coefficients indexed by degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<u64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<u64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn constant(c: u64) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    /// `X`.
    pub fn x() -> Self {
        Polynomial { coeffs: vec![0, 1] }
    }

    /// `c X^k`.
    pub fn monomial(c: u64, k: usize) -> Self {
        let mut coeffs = vec![0; k + 1];
        coeffs[k] = c;
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|&c| c == 0)
    }

    pub fn eval_big(&self, n: &BigUint) -> BigUint {
        let mut acc = BigUint::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * n + BigUint::from(c);
        }
        acc
    }

    /// Saturating evaluation at a machine-size argument.
    pub fn eval(&self, n: u64) -> u64 {
        self.eval_big(&BigUint::from(n)).to_u64().unwrap_or(u64::MAX)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sop {
    FirstOrder(Polynomial),
    Apply(Box<Sop>),
    Sum(Box<Sop>, Box<Sop>),
    Product(Box<Sop>, Box<Sop>),
}

impl Sop {
    pub fn constant(c: u64) -> Sop {
        Sop::FirstOrder(Polynomial::constant(c))
    }

    pub fn x() -> Sop {
        Sop::FirstOrder(Polynomial::x())
    }

    pub fn poly(coeffs: Vec<u64>) -> Sop {
        Sop::FirstOrder(Polynomial::new(coeffs))
    }

    pub fn apply(inner: Sop) -> Sop {
        Sop::Apply(Box::new(inner))
    }

    pub fn sum(a: Sop, b: Sop) -> Sop {
        Sop::Sum(Box::new(a), Box::new(b))
    }

    pub fn product(a: Sop, b: Sop) -> Sop {
        Sop::Product(Box::new(a), Box::new(b))
    }

    pub fn depth(&self) -> usize {
        match self {
            Sop::FirstOrder(_) => 0,
            Sop::Apply(p) => 1 + p.depth(),
            Sop::Sum(a, b) | Sop::Product(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// `P(l, n)`.
    pub fn eval(&self, l: &MonotoneTable, n: u64) -> Result<BigUint, SopError> {
        self.eval_with(&|m: &BigUint| table_at(l, m), &BigUint::from(n))
    }

    /// `P(l, n)` for an arbitrary function argument.
    pub fn eval_with(
        &self,
        l: &dyn Fn(&BigUint) -> Result<BigUint, SopError>,
        n: &BigUint,
    ) -> Result<BigUint, SopError> {
        Ok(match self {
            Sop::FirstOrder(p) => p.eval_big(n),
            Sop::Apply(inner) => l(&inner.eval_with(l, n)?)?,
            Sop::Sum(a, b) => a.eval_with(l, n)? + b.eval_with(l, n)?,
            Sop::Product(a, b) => a.eval_with(l, n)? * b.eval_with(l, n)?,
        })
    }

    /// The polynomial with semantics `(l, n) ↦ P(l, Q(l, n))`.
    pub fn compose_arg(&self, q: &Sop) -> Sop {
        match self {
            Sop::FirstOrder(p) => substitute(p, q),
            Sop::Apply(inner) => Sop::apply(inner.compose_arg(q)),
            Sop::Sum(a, b) => Sop::sum(a.compose_arg(q), b.compose_arg(q)),
            Sop::Product(a, b) => Sop::product(a.compose_arg(q), b.compose_arg(q)),
        }
    }

    /// The polynomial with semantics `(l, n) ↦ P(Q(l, ·), n)`.
    pub fn compose_fun(&self, q: &Sop) -> Sop {
        match self {
            Sop::FirstOrder(p) => Sop::FirstOrder(p.clone()),
            Sop::Apply(inner) => q.compose_arg(&inner.compose_fun(q)),
            Sop::Sum(a, b) => Sop::sum(a.compose_fun(q), b.compose_fun(q)),
            Sop::Product(a, b) => Sop::product(a.compose_fun(q), b.compose_fun(q)),
        }
    }

    /// True iff `P(l, n) >= observed` for every record `(l, n, observed)`.
    pub fn dominates(&self, trace: &[(MonotoneTable, u64, u64)]) -> Result<bool, SopError> {
        for (l, n, observed) in trace {
            if self.eval(l, *n)? < BigUint::from(*observed) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn parse(text: &str) -> Result<Sop, SopError> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let s = p.sum()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(s)
    }
}

fn table_at(l: &MonotoneTable, m: &BigUint) -> Result<BigUint, SopError> {
    let index = m.to_u128().unwrap_or(u128::MAX);
    Ok(BigUint::from(l.get(index)?))
}

/// `p(Q)` as a sum of products of copies of `Q`.
fn substitute(p: &Polynomial, q: &Sop) -> Sop {
    let mut terms = p.coeffs().iter().enumerate().filter(|(_, &c)| c != 0).map(|(k, &c)| {
        let mut term = Sop::constant(c);
        for _ in 0..k {
            term = Sop::product(term, q.clone());
        }
        term
    });
    let first = terms.next().unwrap_or_else(|| Sop::constant(0));
    terms.fold(first, Sop::sum)
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| match (k, c) {
                (0, c) => c.to_string(),
                (1, 1) => "X".to_string(),
                (1, c) => format!("{c}X"),
                (k, 1) => format!("X^{k}"),
                (k, c) => format!("{c}X^{k}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl fmt::Display for Sop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sop::FirstOrder(p) => write!(f, "{p}"),
            Sop::Apply(inner) => write!(f, "l({inner})"),
            Sop::Sum(a, b) => write!(f, "{a} + {b}"),
            Sop::Product(a, b) => {
                let wrap = |s: &Sop| match s {
                    Sop::Sum(..) => format!("({s})"),
                    Sop::FirstOrder(p) if p.coeffs().iter().filter(|&&c| c != 0).count() > 1 => {
                        format!("({s})")
                    }
                    _ => s.to_string(),
                };
                write!(f, "{}*{}", wrap(a), wrap(b))
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> SopError {
        SopError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), SopError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Sop, SopError> {
        let mut acc = self.product()?;
        while self.peek() == Some(b'+') {
            self.pos += 1;
            acc = Sop::sum(acc, self.product()?);
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Sop, SopError> {
        let mut acc = self.atom()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = Sop::product(acc, self.atom()?);
        }
        Ok(acc)
    }

    fn number(&mut self) -> Result<u64, SopError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(SopError::Syntax {
                offset: start,
                message: "expected a natural number".to_string(),
            })
    }

    /// `X` or `X^k`, with the `X` already consumed.
    fn power(&mut self) -> Result<usize, SopError> {
        if self.src.get(self.pos) == Some(&b'^') {
            self.pos += 1;
            Ok(self.number()? as usize)
        } else {
            Ok(1)
        }
    }

    fn atom(&mut self) -> Result<Sop, SopError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let c = self.number()?;
                if self.src.get(self.pos) == Some(&b'X') {
                    self.pos += 1;
                    let k = self.power()?;
                    Ok(Sop::FirstOrder(Polynomial::monomial(c, k)))
                } else {
                    Ok(Sop::constant(c))
                }
            }
            Some(b'X') => {
                self.pos += 1;
                let k = self.power()?;
                Ok(Sop::FirstOrder(Polynomial::monomial(1, k)))
            }
            Some(b'l') => {
                self.pos += 1;
                self.expect(b'(')?;
                let inner = self.sum()?;
                self.expect(b')')?;
                Ok(Sop::apply(inner))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(_) => Err(self.error("expected a number, `X`, `l(` or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// `BigUint` to `u64`, saturating.
pub fn saturate(v: &BigUint) -> u64 {
    v.to_u64().unwrap_or(u64::MAX)
}
