use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use paramreal::dyadic::Dyadic;
use paramreal::names::dyadic_to_rational;
use paramreal_cli::expr::{eval_expr, parse, Expr, Fun, Strategy as Eval};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x", "y", "z"];

fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..100, 0i64..6).prop_map(|(m, e)| Expr::Dyadic(Dyadic::new(BigInt::from(m), e))),
        (0i64..50, 1i64..20).prop_map(|(p, q)| Expr::Rational(p.into(), q.into())),
    ]
}

/// Expressions over the given free variables.
fn expr(vars: Vec<&'static str>, depth: u32) -> BoxedStrategy<Expr> {
    let leaf = if vars.is_empty() {
        literal().boxed()
    } else {
        prop_oneof![literal(), prop::sample::select(vars.clone()).prop_map(|v| Expr::Var(v.into()))].boxed()
    };
    if depth == 0 {
        return leaf;
    }
    let sub = || expr(vars.clone(), depth - 1);
    let bound = VARS[vars.len().min(2)];
    let mut with_bound = vars.clone();
    with_bound.push(bound);
    prop_oneof![
        3 => leaf,
        1 => sub().prop_map(|a| Expr::Neg(Box::new(a))),
        2 => (sub(), sub()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
        2 => (sub(), sub()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
        2 => (sub(), sub()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
        1 => (expr(with_bound.clone(), depth - 1), sub())
            .prop_map(move |(body, arg)| Expr::Apply(Fun::Lambda(bound.into(), Box::new(body)), Box::new(arg))),
        1 => (expr(with_bound, (depth - 1).min(1)), 0u64..3, sub()).prop_map(move |(body, count, seed)| {
            Expr::Iterate { var: bound.into(), body: Box::new(body), count, seed: Box::new(seed) }
        }),
    ]
    .boxed()
}

fn exact(e: &Expr, env: &HashMap<String, BigRational>) -> BigRational {
    let rec = |a: &Expr| exact(a, env);
    match e {
        Expr::Dyadic(d) => dyadic_to_rational(d),
        Expr::Rational(p, q) => BigRational::new(p.clone(), q.clone()),
        Expr::Var(v) => env[v].clone(),
        Expr::Neg(a) => -rec(a),
        Expr::Add(a, b) => rec(a) + rec(b),
        Expr::Sub(a, b) => rec(a) - rec(b),
        Expr::Mul(a, b) => rec(a) * rec(b),
        Expr::Apply(Fun::Lambda(v, body), a) => {
            let mut inner = env.clone();
            inner.insert(v.clone(), rec(a));
            exact(body, &inner)
        }
        Expr::Apply(Fun::Named(_), _) => unreachable!("not generated"),
        Expr::Iterate { var, body, count, seed } => {
            let mut x = rec(seed);
            for _ in 0..*count {
                let mut inner = env.clone();
                inner.insert(var.clone(), x);
                x = exact(body, &inner);
            }
            x
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_then_parse_is_identity(e in expr(vec!["x"], 4)) {
        let text = e.to_string();
        match parse(&text) {
            Ok(back) => prop_assert_eq!(back, e, "{}", text),
            Err(err) => prop_assert!(false, "{}: {}", text, err),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn strategies_agree_with_the_exact_value(e in expr(vec![], 3), n in prop::sample::select(vec![0u64, 8, 32, 64])) {
        let v = exact(&e, &HashMap::new());
        let (a, _) = eval_expr(&e, n, Eval::Dag);
        let (b, _) = eval_expr(&e, n, Eval::Restart);
        let (a, b) = (a.unwrap(), b.unwrap());
        for (label, j) in [("dag", &a), ("restart", &b)] {
            let (lo, hi) = j.endpoints().expect("finite");
            prop_assert!(dyadic_to_rational(&lo) <= v && v <= dyadic_to_rational(&hi), "{} misses {} in {}", label, v, j);
            prop_assert!(j.diam().at_most_pow2(n as i64), "{} too wide: {}", label, j);
        }
        prop_assert!(a.intersect(&b).is_ok());
    }
}

#[test]
fn sqrt_against_newton_bounds() {
    // s = isqrt(2 * 4^k) gives s / 2^k <= sqrt 2 < (s + 1) / 2^k.
    let k = 80u32;
    let s = (BigInt::from(2) << (2 * k)).sqrt();
    let lo = BigRational::new(s.clone(), BigInt::from(1) << k);
    let hi = BigRational::new(s + 1, BigInt::from(1) << k);
    let e = parse("apply(sqrt, 2) - 1").unwrap();
    for strategy in [Eval::Dag, Eval::Restart] {
        for n in [0u64, 16, 64] {
            let (j, _) = eval_expr(&e, n, strategy);
            let (a, b) = j.unwrap().endpoints().unwrap();
            let one = BigRational::from_integer(1.into());
            assert!(dyadic_to_rational(&a) <= &lo - &one, "{strategy:?} {n}");
            assert!(&hi - &one <= dyadic_to_rational(&b), "{strategy:?} {n}");
        }
    }
}

#[test]
fn evaluation_errors() {
    let (r, _) = eval_expr(&parse("1/0 + 1").unwrap(), 8, Eval::Restart);
    assert!(r.is_err());
    let (r, _) = eval_expr(&parse("apply(sqrt, 0 - 1)").unwrap(), 8, Eval::Dag);
    assert!(r.is_err());
    let (r, _) = eval_expr(&parse("apply(cos, 1)").unwrap(), 8, Eval::Dag);
    assert!(r.is_err());
    assert!(BigRational::new(BigInt::from(0), BigInt::from(3)).is_zero());
}

#[test]
fn dag_nodes_grow_linearly() {
    let peaks: Vec<u64> = [5u64, 10, 20, 40]
        .iter()
        .map(|&k| {
            let e = parse(&format!("iterate(x -> 7/2*x*(1-x), {k}, 1/2)")).unwrap();
            eval_expr(&e, 16, Eval::Dag).1.peak_live_nodes
        })
        .collect();
    // Three fresh nodes per iteration after the shared constants.
    let steps: Vec<u64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    assert_eq!(steps, vec![15, 30, 60], "{peaks:?}");
}
