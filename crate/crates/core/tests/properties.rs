use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Signed;
use paramreal::bitcodec::{
    decode_dyadic, decode_interval, dyadic_code_len, encode_dyadic, encode_interval, interval_code_len,
    pair_strings, unpair, BitString, MonotoneTable,
};
use paramreal::dyadic::Dyadic;
use paramreal::funcspace::{affine, compose, fadd, fmul, quadratic, IntervalFunctionName};
use paramreal::interval::DyadicInterval;
use paramreal::meter;
use paramreal::names::{cauchy_of_rational, dyadic_to_rational, measure_mu_interval, Witness};
use paramreal::sop::Sop;
use paramreal::translate::cauchy_to_interval;
use proptest::prelude::*;

fn dyadic() -> impl Strategy<Value = Dyadic> {
    (-(1i64 << 40)..(1i64 << 40), -8i64..24).prop_map(|(m, e)| Dyadic::new(BigInt::from(m), e))
}

fn unit_dyadic() -> impl Strategy<Value = Dyadic> {
    (0i64..=256).prop_map(|m| Dyadic::from_ratio(m, 8))
}

fn interval() -> impl Strategy<Value = DyadicInterval> {
    (dyadic(), dyadic()).prop_map(|(c, r)| DyadicInterval::ball(c, r.abs()))
}

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..max).prop_map(BitString::from_bits)
}

fn q(d: &Dyadic) -> BigRational {
    dyadic_to_rational(d)
}

/// A point of `j` chosen by `t` in `[0, 1]` (eighths).
fn point_in(j: &DyadicInterval, t: u8) -> Dyadic {
    let (lo, hi) = j.endpoints().expect("finite");
    let w = &hi - &lo;
    &lo + &(&w * &Dyadic::from_ratio(i64::from(t % 9), 3))
}

fn sop(depth: u32) -> impl Strategy<Value = Sop> {
    let leaf = prop::collection::vec(0u64..4, 1..4).prop_map(Sop::poly);
    leaf.prop_recursive(depth, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Sop::apply),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Sop::sum(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Sop::product(a, b)),
        ]
    })
}

fn table() -> impl Strategy<Value = MonotoneTable> {
    prop::collection::vec(0u64..3, 1..12).prop_map(|steps| {
        let mut acc = 0;
        MonotoneTable::hold_last(
            steps
                .into_iter()
                .map(|s| {
                    acc += s;
                    acc
                })
                .collect(),
        )
        .expect("nondecreasing")
    })
}

fn lookup(l: &MonotoneTable) -> impl Fn(&BigUint) -> Result<BigUint, paramreal::sop::SopError> + '_ {
    move |m| Ok(BigUint::from(l.get(m.try_into().unwrap_or(u128::MAX))?))
}

proptest! {
    #[test]
    fn ring_operations_are_exact(a in dyadic(), b in dyadic()) {
        prop_assert_eq!(q(&(&a + &b)), q(&a) + q(&b));
        prop_assert_eq!(q(&(&a - &b)), q(&a) - q(&b));
        prop_assert_eq!(q(&(&a * &b)), q(&a) * q(&b));
        prop_assert_eq!(a.cmp(&b), q(&a).cmp(&q(&b)));
    }

    #[test]
    fn nearest_rounding_within_half_step(a in dyadic(), n in 0u64..40) {
        let r = a.round_nearest(n);
        prop_assert!(r.on_grid(n as i64));
        let err = (q(&r) - q(&a)).abs();
        prop_assert!(err <= q(&Dyadic::pow2(-(n as i64) - 1)));
    }

    #[test]
    fn interval_ops_enclose_point_results(a in interval(), b in interval(), s in 0u8..9, t in 0u8..9) {
        let (x, y) = (point_in(&a, s), point_in(&b, t));
        prop_assert!(a.add(&b).contains(&(&x + &y)));
        prop_assert!(a.sub(&b).contains(&(&x - &y)));
        prop_assert!(a.mul(&b).contains(&(&x * &y)));
        prop_assert!(a.neg().contains(&-&x));
    }

    #[test]
    fn rounding_widens(a in interval(), p in 0u64..32) {
        prop_assert!(a.subset(&a.outward_round(p)));
        prop_assert!(a.subset(&a.widen_to_grid(p)));
        let (lo, hi) = a.outward_round(p).endpoints().expect("finite");
        prop_assert!(lo.on_grid(p as i64) && hi.on_grid(p as i64));
    }

    #[test]
    fn intersection_is_contained(a in interval(), s in 0u8..9) {
        let x = point_in(&a, s);
        let b = DyadicInterval::ball(x.clone(), Dyadic::pow2(-3));
        let c = a.intersect(&b).expect("both contain x");
        prop_assert!(c.subset(&a) && c.subset(&b) && c.contains(&x));
    }

    #[test]
    fn dyadic_codes_round_trip(a in dyadic()) {
        let code = encode_dyadic(&a);
        prop_assert_eq!(code.len() as u64, dyadic_code_len(&a));
        prop_assert_eq!(decode_dyadic(&code).expect("own code"), a);
    }

    #[test]
    fn interval_codes_round_trip(a in interval()) {
        let code = encode_interval(&a);
        prop_assert_eq!(code.len() as u64, interval_code_len(&a));
        prop_assert_eq!(decode_interval(&code).expect("own code"), a);
    }

    #[test]
    fn pairing_is_injective(a in bits(24), b in bits(24)) {
        let c = pair_strings(&a, &b);
        prop_assert_eq!(unpair(&c).expect("own pair"), (a, b));
    }

    #[test]
    fn sop_monotone(p in sop(4), l in table(), bump in 0u64..3, n in 0u64..5, dn in 0u64..3) {
        let l2 = MonotoneTable::hold_last(l.values().iter().map(|v| v + bump).collect()).expect("shifted");
        prop_assert!(p.eval(&l, n).unwrap() <= p.eval(&l2, n + dn).unwrap());
    }

    #[test]
    fn sop_compose_arg(p in sop(3), r in sop(2), l in table(), n in 0u64..4) {
        let inner = r.eval(&l, n).unwrap();
        let direct = p.eval_with(&lookup(&l), &inner).unwrap();
        prop_assert_eq!(p.compose_arg(&r).eval(&l, n).unwrap(), direct);
    }

    #[test]
    fn sop_compose_fun(p in sop(3), r in sop(2), l in table(), n in 0u64..4) {
        let rl = |m: &BigUint| r.eval_with(&lookup(&l), m);
        let direct = p.eval_with(&rl, &BigUint::from(n)).unwrap();
        prop_assert_eq!(p.compose_fun(&r).eval(&l, n).unwrap(), direct);
    }

    #[test]
    fn sop_text_round_trip(p in sop(3), l in table(), n in 0u64..4) {
        let back = Sop::parse(&p.to_string()).unwrap();
        prop_assert_eq!(back.eval(&l, n).unwrap(), p.eval(&l, n).unwrap());
    }

    #[test]
    fn function_names_are_monotone(c in unit_dyadic(), r in 0i64..6, s in 0i64..4, which in 0usize..5) {
        let funs: [IntervalFunctionName; 5] = [
            affine(Dyadic::from_ratio(3, 2), Dyadic::from_ratio(1, 3)),
            quadratic(Dyadic::from_ratio(1, 1), Dyadic::from_ratio(-1, 2), Dyadic::zero()),
            compose(&affine(Dyadic::from_ratio(1, 1), Dyadic::zero()), &quadratic(Dyadic::one(), Dyadic::zero(), Dyadic::zero())),
            fadd(&affine(Dyadic::one(), Dyadic::zero()), &quadratic(Dyadic::one(), Dyadic::zero(), Dyadic::zero())),
            fmul(&affine(Dyadic::one(), Dyadic::zero()), &affine(Dyadic::from_int(-1), Dyadic::one())),
        ];
        let f = &funs[which];
        let inner = DyadicInterval::ball(c.clone(), Dyadic::pow2(-r - s));
        let outer = DyadicInterval::ball(c, Dyadic::pow2(-r));
        prop_assert!(f.query(&inner).unwrap().subset(&f.query(&outer).unwrap()));
    }

    #[test]
    fn rational_names_meet_the_cauchy_bound(p in -50i64..50, den in 1i64..40, n in 0u64..80) {
        let phi = cauchy_of_rational(p, den).unwrap();
        prop_assert!(Witness::rational(p, den).within(&phi.query(&n).unwrap(), n));
    }
}

#[test]
fn memo_charges_once() {
    let phi = cauchy_of_rational(1, 3).unwrap();
    let ((), t) = meter::measure(|| {
        phi.query(&7).unwrap();
        phi.query(&7).unwrap();
    });
    assert_eq!(t.query_count, 1);
}

#[test]
fn measured_convergence_is_monotone() {
    let psi = cauchy_to_interval(&cauchy_of_rational(5, 7).unwrap());
    let conv: Vec<u64> = (0..40)
        .map(|n| measure_mu_interval(&psi, n, 1 << 12).unwrap().conv_index)
        .collect();
    assert!(conv.windows(2).all(|w| w[0] <= w[1]), "{conv:?}");
}
