//! Real expressions: parsing, printing and three evaluation strategies.
//!
//! Grammar (multiplication binds tighter than `+`/`-`, all left associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary ('*' unary)*
//! unary := '-' unary | atom
//! atom  := INT | INT 'p' ['-'] INT | INT '/' INT | IDENT | '(' expr ')'
//!        | 'iterate' '(' IDENT '->' expr ',' INT ',' expr ')'
//!        | 'apply' '(' (IDENT | IDENT '->' expr) ',' expr ')'
//! ```
//!
//! `5p-3` is the dyadic `5 * 2^(-3)`; `a/b` is a rational literal. The only
//! named function is `sqrt`.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use paramreal::dyadic::Dyadic;
use paramreal::interval::DyadicInterval;
use paramreal::meter::{self, ops, CostTrace};
use paramreal::names::{cauchy_of_rational, isqrt_newton, CauchyName, Name, NameError};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Fun {
    Named(String),
    Lambda(String, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Dyadic(Dyadic),
    Rational(BigInt, BigInt),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Apply(Fun, Box<Expr>),
    Iterate {
        var: String,
        body: Box<Expr>,
        count: u64,
        seed: Box<Expr>,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("square root of a negative value")]
    NegativeSqrt,
    #[error("expression tree exceeds the node cap {0}")]
    NodeCap(usize),
    #[error("no working precision up to {0} bits reached the target")]
    Divergence(u64),
    #[error(transparent)]
    Name(#[from] NameError),
}

impl EvalError {
    pub fn is_fuel(&self) -> bool {
        matches!(
            self,
            EvalError::Divergence(_) | EvalError::NodeCap(_) | EvalError::Name(NameError::FuelExhausted { .. })
        )
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> EvalError {
    EvalError::Syntax {
        offset,
        message: message.into(),
    }
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), EvalError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(self.pos, format!("expected `{}`", c as char)))
        }
    }

    fn expect_arrow(&mut self) -> Result<(), EvalError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(b"->") {
            self.pos += 2;
            Ok(())
        } else {
            Err(syntax(self.pos, "expected `->`"))
        }
    }

    fn digits(&mut self) -> Result<BigInt, EvalError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(syntax(start, "expected a natural number"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(text.parse().expect("digits parse"))
    }

    fn natural(&mut self) -> Result<u64, EvalError> {
        let at = self.pos;
        let v = self.digits()?;
        u64::try_from(v).map_err(|_| syntax(at, "count too large"))
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        let ok_start = |c: u8| c.is_ascii_alphabetic() || c == b'_';
        if self.pos < self.src.len() && ok_start(self.src[self.pos]) {
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            Some(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii").to_string())
        } else {
            None
        }
    }

    fn expr(&mut self) -> Result<Expr, EvalError> {
        let mut lhs = self.term()?;
        loop {
            if self.peek() == Some(b'-') && self.src.get(self.pos + 1) == Some(&b'>') {
                return Ok(lhs);
            }
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, EvalError> {
        let mut lhs = self.unary()?;
        while self.eat(b'*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, EvalError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn lambda(&mut self) -> Result<(String, Expr), EvalError> {
        let at = self.pos;
        let var = self.ident().ok_or_else(|| syntax(at, "expected a variable"))?;
        self.expect_arrow()?;
        Ok((var, self.expr()?))
    }

    fn atom(&mut self) -> Result<Expr, EvalError> {
        match self.peek() {
            None => Err(syntax(self.pos, "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let m = self.digits()?;
                if self.src.get(self.pos) == Some(&b'p') {
                    self.pos += 1;
                    let neg = self.src.get(self.pos) == Some(&b'-');
                    if neg {
                        self.pos += 1;
                    }
                    let at = self.pos;
                    let k = i64::try_from(self.digits()?).map_err(|_| syntax(at, "exponent too large"))?;
                    let e = if neg { k } else { -k };
                    Ok(Expr::Dyadic(Dyadic::new(m, e)))
                } else if self.eat(b'/') {
                    Ok(Expr::Rational(m, self.digits()?))
                } else {
                    Ok(Expr::Dyadic(Dyadic::from_int(m)))
                }
            }
            Some(_) => {
                let at = self.pos;
                let Some(id) = self.ident() else {
                    return Err(syntax(at, format!("unexpected `{}`", self.src[at] as char)));
                };
                match id.as_str() {
                    "iterate" => {
                        self.expect(b'(')?;
                        let (var, body) = self.lambda()?;
                        self.expect(b',')?;
                        let count = self.natural()?;
                        self.expect(b',')?;
                        let seed = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Iterate {
                            var,
                            body: Box::new(body),
                            count,
                            seed: Box::new(seed),
                        })
                    }
                    "apply" => {
                        self.expect(b'(')?;
                        let fat = self.pos;
                        let f = self.ident().ok_or_else(|| syntax(fat, "expected a function"))?;
                        self.skip_ws();
                        let fun = if self.src[self.pos..].starts_with(b"->") {
                            self.expect_arrow()?;
                            Fun::Lambda(f, Box::new(self.expr()?))
                        } else {
                            Fun::Named(f)
                        };
                        self.expect(b',')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Apply(fun, Box::new(arg)))
                    }
                    _ => Ok(Expr::Var(id)),
                }
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, EvalError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(syntax(p.pos, "trailing input"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Printing

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        Expr::Neg(..) => 3,
        _ => 4,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Dyadic(d) if d.is_negative() => write!(f, "-{}", Expr::Dyadic(d.abs())),
            Expr::Dyadic(d) if d.exponent() <= 0 => write!(f, "{d}"),
            Expr::Dyadic(d) => write!(f, "{}p-{}", d.mantissa(), d.exponent()),
            Expr::Rational(p, q) => write!(f, "{p}/{q}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                f.write_str(" * ")?;
                write_child(f, b, 3)
            }
            Expr::Apply(Fun::Named(g), a) => write!(f, "apply({g}, {a})"),
            Expr::Apply(Fun::Lambda(v, body), a) => write!(f, "apply({v} -> {body}, {a})"),
            Expr::Iterate {
                var,
                body,
                count,
                seed,
            } => write!(f, "iterate({var} -> {body}, {count}, {seed})"),
        }
    }
}

impl Expr {
    /// Number of AST nodes, each iterate body counted once.
    pub fn size(&self) -> usize {
        match self {
            Expr::Dyadic(_) | Expr::Rational(..) | Expr::Var(_) => 1,
            Expr::Neg(a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => 1 + a.size() + b.size(),
            Expr::Apply(Fun::Named(_), a) => 1 + a.size(),
            Expr::Apply(Fun::Lambda(_, body), a) => 1 + body.size() + a.size(),
            Expr::Iterate { body, seed, .. } => 1 + body.size() + seed.size(),
        }
    }

    /// Replaces free occurrences of the bound names.
    pub fn bind(&self, env: &HashMap<String, Expr>) -> Expr {
        let rec = |e: &Expr| Box::new(e.bind(env));
        let without = |v: &str| {
            let mut inner = env.clone();
            inner.remove(v);
            inner
        };
        match self {
            Expr::Var(v) => env.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Dyadic(_) | Expr::Rational(..) => self.clone(),
            Expr::Neg(a) => Expr::Neg(rec(a)),
            Expr::Add(a, b) => Expr::Add(rec(a), rec(b)),
            Expr::Sub(a, b) => Expr::Sub(rec(a), rec(b)),
            Expr::Mul(a, b) => Expr::Mul(rec(a), rec(b)),
            Expr::Apply(Fun::Named(g), a) => Expr::Apply(Fun::Named(g.clone()), rec(a)),
            Expr::Apply(Fun::Lambda(v, body), a) => Expr::Apply(
                Fun::Lambda(v.clone(), Box::new(body.bind(&without(v)))),
                rec(a),
            ),
            Expr::Iterate {
                var,
                body,
                count,
                seed,
            } => Expr::Iterate {
                var: var.clone(),
                body: Box::new(body.bind(&without(var))),
                count: *count,
                seed: rec(seed),
            },
        }
    }
}

/// Parses `name=value` bindings; values are closed expressions.
pub fn parse_binding(text: &str) -> Result<(String, Expr), EvalError> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| syntax(0, "binding must look like `name=value`"))?;
    Ok((name.trim().to_string(), parse(value)?))
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Shared memoized Cauchy names with precision demands pushed down.
    Dag,
    /// Whole-expression interval arithmetic at doubling working precision.
    Restart,
    /// Like `Dag` without sharing; capped at [`TREE_NODE_CAP`] nodes.
    Tree,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dag" => Ok(Strategy::Dag),
            "restart" => Ok(Strategy::Restart),
            "tree" => Ok(Strategy::Tree),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

pub const TREE_NODE_CAP: usize = 1 << 16;

/// Working precision past which the restart strategy gives up.
pub const RESTART_MAX_PRECISION: u64 = 1 << 16;

/// Evaluates `e` to an enclosure of diameter at most `2^(-n)`.
pub fn eval_expr(e: &Expr, n: u64, strategy: Strategy) -> (Result<DyadicInterval, EvalError>, CostTrace) {
    meter::measure(|| match strategy {
        Strategy::Dag => eval_names(e, n, true),
        Strategy::Tree => eval_names(e, n, false),
        Strategy::Restart => eval_restart(e, n),
    })
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Op {
    Const(Dyadic),
    Rational(BigInt, BigInt),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Sqrt(usize),
}

#[derive(Clone)]
enum Binding {
    Node(usize),
    Deferred(Rc<Expr>, Env),
}

type Env = Rc<HashMap<String, Binding>>;

struct Graph {
    share: bool,
    ops: HashMap<Op, usize>,
    names: Vec<CauchyName>,
}

fn mag(x: &CauchyName) -> Result<u64, NameError> {
    Ok(x.query(&0)?.mag_bound())
}

fn node_name(op: &Op, names: &[CauchyName]) -> Result<CauchyName, EvalError> {
    let get = |i: usize| names[i].clone();
    Ok(match op {
        Op::Const(d) => {
            let d = d.clone();
            Name::from_callback(format!("{d}"), move |_| Ok(d.clone()))
        }
        Op::Rational(p, q) => {
            if q.is_zero() {
                return Err(NameError::Invalid("rational with zero denominator".into()).into());
            }
            if rational_is_dyadic(p, q) {
                let d = rational_to_dyadic(p, q);
                Name::from_callback(format!("{d}"), move |_| Ok(d.clone()))
            } else {
                cauchy_of_rational(p.clone(), q.clone())?
            }
        }
        Op::Neg(a) => {
            let a = get(*a);
            Name::from_callback("neg", move |n: &u64| Ok(-a.query(n)?))
        }
        Op::Add(a, b) | Op::Sub(a, b) => {
            let (a, b, sub) = (get(*a), get(*b), matches!(op, Op::Sub(..)));
            Name::from_callback("add", move |&n: &u64| {
                let (x, y) = (a.query(&(n + 1))?, b.query(&(n + 1))?);
                Ok(if sub { ops::sub(&x, &y) } else { ops::add(&x, &y) })
            })
        }
        Op::Mul(a, b) => {
            let (a, b) = (get(*a), get(*b));
            Name::from_callback("mul", move |&n: &u64| {
                // |a| <= 2^ma and |b(k)| <= 2^(mb + 1).
                let (ma, mb) = (mag(&a)?, mag(&b)?);
                let x = a.query(&(n + 3 + mb))?;
                let y = b.query(&(n + 2 + ma))?;
                Ok(ops::round_nearest(&ops::mul(&x, &y), n + 1))
            })
        }
        Op::Sqrt(a) => {
            let a = get(*a);
            Name::from_callback("sqrt", move |&n: &u64| {
                // sqrt is 1/2-Hoelder: |sqrt a - sqrt y| <= |a - y|^(1/2) <= 2^(-n-1).
                let y = a.query(&(2 * n + 2))?;
                if y < -Dyadic::pow2(-(2 * n as i64) - 2) {
                    return Err(NameError::Invalid("square root of a negative value".into()));
                }
                let y = y.max(Dyadic::zero());
                let k = (n + 2) as i64;
                let v = y.floor_scaled(2 * k);
                meter::charge(v.bits().max(1).pow(2));
                Ok(Dyadic::new(isqrt_newton(&v), k))
            })
        }
    })
}

fn rational_is_dyadic(_p: &BigInt, q: &BigInt) -> bool {
    let m = q.magnitude();
    !m.is_zero() && (m & (m - 1u32)).is_zero()
}

fn rational_to_dyadic(p: &BigInt, q: &BigInt) -> Dyadic {
    let k = q.magnitude().bits() as i64 - 1;
    let d = Dyadic::new(p.clone(), k);
    if q.is_negative() { -d } else { d }
}

impl Graph {
    fn node(&mut self, op: Op) -> Result<usize, EvalError> {
        if self.share {
            if let Some(&id) = self.ops.get(&op) {
                return Ok(id);
            }
        } else if self.names.len() >= TREE_NODE_CAP {
            return Err(EvalError::NodeCap(TREE_NODE_CAP));
        }
        let name = node_name(&op, &self.names)?;
        self.names.push(name);
        let id = self.names.len() - 1;
        if self.share {
            self.ops.insert(op, id);
        }
        meter::set_live_nodes(self.names.len() as u64);
        Ok(id)
    }

    fn bind(&mut self, env: &Env, var: &str, arg: &Expr) -> Result<Env, EvalError> {
        let binding = if self.share {
            Binding::Node(self.build(arg, env)?)
        } else {
            Binding::Deferred(Rc::new(arg.clone()), env.clone())
        };
        let mut inner = (**env).clone();
        inner.insert(var.to_string(), binding);
        Ok(Rc::new(inner))
    }

    fn build(&mut self, e: &Expr, env: &Env) -> Result<usize, EvalError> {
        match e {
            Expr::Dyadic(d) => self.node(Op::Const(d.clone())),
            Expr::Rational(p, q) => self.node(Op::Rational(p.clone(), q.clone())),
            Expr::Var(v) => match env.get(v) {
                None => Err(EvalError::Unbound(v.clone())),
                Some(Binding::Node(id)) => Ok(*id),
                Some(Binding::Deferred(e, env)) => {
                    let (e, env) = (Rc::clone(e), env.clone());
                    self.build(&e, &env)
                }
            },
            Expr::Neg(a) => {
                let a = self.build(a, env)?;
                self.node(Op::Neg(a))
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                let (x, y) = (self.build(a, env)?, self.build(b, env)?);
                self.node(match e {
                    Expr::Add(..) => Op::Add(x, y),
                    Expr::Sub(..) => Op::Sub(x, y),
                    _ => Op::Mul(x, y),
                })
            }
            Expr::Apply(Fun::Named(g), a) => {
                if g != "sqrt" {
                    return Err(EvalError::UnknownFunction(g.clone()));
                }
                let a = self.build(a, env)?;
                self.node(Op::Sqrt(a))
            }
            Expr::Apply(Fun::Lambda(v, body), a) => {
                let inner = self.bind(env, v, a)?;
                self.build(body, &inner)
            }
            Expr::Iterate {
                var,
                body,
                count,
                seed,
            } => {
                let mut current = (**seed).clone();
                let mut cur_env = env.clone();
                if self.share {
                    let mut id = self.build(seed, env)?;
                    for _ in 0..*count {
                        let mut inner = (**env).clone();
                        inner.insert(var.clone(), Binding::Node(id));
                        id = self.build(body, &Rc::new(inner))?;
                    }
                    return Ok(id);
                }
                // Without sharing every occurrence of the variable rebuilds
                // the previous iterate.
                for _ in 0..*count {
                    let mut inner = (**env).clone();
                    inner.insert(var.clone(), Binding::Deferred(Rc::new(current), cur_env));
                    cur_env = Rc::new(inner);
                    current = (**body).clone();
                }
                self.build(&current, &cur_env)
            }
        }
    }
}

fn eval_names(e: &Expr, n: u64, share: bool) -> Result<DyadicInterval, EvalError> {
    let mut g = Graph {
        share,
        ops: HashMap::new(),
        names: Vec::new(),
    };
    let root = g.build(e, &Rc::new(HashMap::new()))?;
    let d = g.names[root].query(&(n + 1))?;
    Ok(DyadicInterval::ball(d, Dyadic::pow2(-(n as i64) - 1)))
}

/// Counts an interval value as live while it is held.
struct Live(DyadicInterval);

impl Live {
    fn new(j: DyadicInterval) -> Self {
        meter::adjust_live_nodes(1);
        Live(j)
    }
}

impl Drop for Live {
    fn drop(&mut self) {
        meter::adjust_live_nodes(-1);
    }
}

fn sqrt_interval(j: &DyadicInterval, w: u64) -> Result<DyadicInterval, EvalError> {
    let Some((lo, hi)) = j.endpoints() else {
        return Ok(DyadicInterval::Infinite);
    };
    if hi.is_negative() {
        return Err(EvalError::NegativeSqrt);
    }
    let w = w as i64;
    let lo = lo.max(Dyadic::zero());
    let down = isqrt_newton(&lo.floor_scaled(2 * w));
    let up_arg = hi.ceil_scaled(2 * w);
    let mut up = isqrt_newton(&up_arg);
    if &up * &up < up_arg {
        up += BigInt::one();
    }
    meter::charge(up_arg.bits().max(1).pow(2));
    Ok(DyadicInterval::from_endpoints(Dyadic::new(down, w), Dyadic::new(up, w)))
}

fn rational_interval(p: &BigInt, q: &BigInt, w: u64) -> Result<DyadicInterval, EvalError> {
    if q.is_zero() {
        return Err(NameError::Invalid("rational with zero denominator".into()).into());
    }
    if rational_is_dyadic(p, q) {
        return Ok(DyadicInterval::point(rational_to_dyadic(p, q)));
    }
    let (p, q) = if q.is_negative() { (-p, -q) } else { (p.clone(), q.clone()) };
    let num = &p << w;
    meter::charge(num.bits().max(1) * q.bits().max(1));
    let (fl, rem) = num.div_mod_floor(&q);
    let ce = if rem.is_zero() { fl.clone() } else { &fl + 1 };
    Ok(DyadicInterval::from_endpoints(Dyadic::new(fl, w as i64), Dyadic::new(ce, w as i64)))
}

fn interval_eval(e: &Expr, w: u64, env: &HashMap<String, Rc<Live>>) -> Result<Live, EvalError> {
    let grid = |j: DyadicInterval| Live::new(ops::widen_to_grid(&j, w));
    Ok(match e {
        Expr::Dyadic(d) => grid(DyadicInterval::point(d.clone())),
        Expr::Rational(p, q) => grid(rational_interval(p, q, w)?),
        Expr::Var(v) => Live::new(env.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?.0.clone()),
        Expr::Neg(a) => Live::new(interval_eval(a, w, env)?.0.neg()),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            let x = interval_eval(a, w, env)?;
            let y = interval_eval(b, w, env)?;
            grid(match e {
                Expr::Add(..) => ops::iadd(&x.0, &y.0),
                Expr::Sub(..) => ops::isub(&x.0, &y.0),
                _ => ops::imul(&x.0, &y.0),
            })
        }
        Expr::Apply(Fun::Named(g), a) => {
            if g != "sqrt" {
                return Err(EvalError::UnknownFunction(g.clone()));
            }
            let x = interval_eval(a, w, env)?;
            Live::new(sqrt_interval(&x.0, w)?)
        }
        Expr::Apply(Fun::Lambda(v, body), a) => {
            let x = Rc::new(interval_eval(a, w, env)?);
            let mut inner = env.clone();
            inner.insert(v.clone(), x);
            interval_eval(body, w, &inner)?
        }
        Expr::Iterate {
            var,
            body,
            count,
            seed,
        } => {
            let mut x = Rc::new(interval_eval(seed, w, env)?);
            for _ in 0..*count {
                let mut inner = env.clone();
                inner.insert(var.clone(), Rc::clone(&x));
                let next = interval_eval(body, w, &inner)?;
                drop(inner);
                x = Rc::new(next);
            }
            Rc::try_unwrap(x).unwrap_or_else(|rc| Live::new(rc.0.clone()))
        }
    })
}

fn eval_restart(e: &Expr, n: u64) -> Result<DyadicInterval, EvalError> {
    let mut w = n.max(1);
    while w <= RESTART_MAX_PRECISION {
        let j = interval_eval(e, w, &HashMap::new())?;
        if j.0.diam().at_most_pow2(n as i64) {
            return Ok(j.0.clone());
        }
        w *= 2;
    }
    Err(EvalError::Divergence(RESTART_MAX_PRECISION))
}

/// The logistic program `iterate(x -> r*x*(1-x), count, x0)`.
pub fn logistic(r: Expr, count: u64, x0: Expr) -> Expr {
    let body = parse("r*x*(1-x)").expect("fixed source");
    let mut env = HashMap::new();
    env.insert("r".to_string(), r);
    Expr::Iterate {
        var: "x".into(),
        body: Box::new(body.bind(&env)),
        count,
        seed: Box::new(x0),
    }
}
