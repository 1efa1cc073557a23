use num_bigint::BigInt;
use padicx::padic::*;
use proptest::prelude::*;

const N: i64 = 20;

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![3u32, 5, 7, 11])
}

fn nonzero(p: u32) -> impl Strategy<Value = PadicNumber> {
    (-3i64..4, 1i64..1_000_000).prop_filter_map("unit", move |(v, u)| {
        (u % p as i64 != 0).then(|| PadicNumber::from_scaled(p, N, v, &BigInt::from(u)))
    })
}

fn principal_unit(p: u32) -> impl Strategy<Value = PadicNumber> {
    (0i64..1_000_000_000).prop_map(move |k| PadicNumber::from_int(p, 1 + p as i64 * k, N))
}

#[test]
fn documented_examples() {
    let two = PadicNumber::from_int(5, 2, 4);
    let three = PadicNumber::from_int(5, 3, 4);
    assert_eq!((&two + &three).to_string(), "5^1 * 1 + O(5^4)");
    let half = PadicNumber::one(5, 4).checked_div(&two).unwrap();
    assert_eq!(half.to_string(), "5^0 * 313 + O(5^4)");
    assert!((&two - &two).is_zero());
    assert_eq!(teichmuller(2, 5, 4).unwrap().to_string(), "5^0 * 182 + O(5^4)");
    assert_eq!(teichmuller(1, 5, 4).unwrap(), PadicNumber::one(5, 4));
    assert_eq!(teichmuller(5, 5, 4), Err(PadicError::ZeroResidue));
    assert!(iwasawa_log(&PadicNumber::from_int(5, 5, 10)).unwrap().is_zero());
    assert!(iwasawa_log(&PadicNumber::one(5, 10)).unwrap().is_zero());
    assert_eq!(iwasawa_log(&PadicNumber::zero(5, 10)), Err(PadicError::ZeroInput));
    assert_eq!(PadicNumber::one(5, 4).checked_div(&PadicNumber::zero(5, 4)), Err(PadicError::DivisionByZero));
    assert_eq!(PadicNumber::one(5, 4).checked_add(&PadicNumber::one(3, 4)), Err(PadicError::PrimeMismatch(5, 3)));
}

#[test]
fn log_of_one_plus_p_series() {
    // log(1+5) = 5 − 25/2 + 125/3 − ... summed directly at N = 6
    let p = 5;
    let x = PadicNumber::from_int(p, 6, 6);
    let mut want = PadicNumber::zero(p, 6);
    let t = PadicNumber::from_int(p, 5, 12);
    for k in 1..=12i64 {
        let term = t.pow(k).unwrap().div_int(k).cap(6);
        want = if k % 2 == 1 { &want + &term } else { &want - &term };
    }
    assert_eq!(iwasawa_log(&x).unwrap(), want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn display_parse_roundtrip(x in prime().prop_flat_map(nonzero)) {
        let back: PadicNumber = x.to_string().parse().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn field_laws(p in prime(), seed in any::<u64>()) {
        let mk = |s: u64| PadicNumber::from_scaled(p, N, (s % 5) as i64 - 2, &BigInt::from(s / 5 % 1_000_003 * p as u64 + 1));
        let (a, b, c) = (mk(seed), mk(seed.rotate_left(21)), mk(seed.rotate_left(42)));
        prop_assert!(((&a * &b) * &c).agreement(&(&a * &(&b * &c))) >= N - 8);
        prop_assert!((&a * &(&b + &c)).agreement(&(&(&a * &b) + &(&a * &c))) >= N - 8);
        prop_assert!((&(&a / &b) * &b).agreement(&a) >= N - 8);
        prop_assert_eq!(&a + &b, &b + &a);
    }

    #[test]
    fn precision_propagation(x in prime().prop_flat_map(nonzero)) {
        let y = x.with_prec(N - 3);
        prop_assert_eq!((&x + &y).prec(), N - 3);
        let v = x.valuation().unwrap();
        let prod = &x * &x;
        prop_assert_eq!(prod.prec() - prod.valuation().unwrap(), N - v);
    }

    #[test]
    fn log_is_homomorphism((x, y) in prime().prop_flat_map(|p| (nonzero(p), nonzero(p)))) {
        let lhs = iwasawa_log(&(&x * &y)).unwrap();
        let rhs = &iwasawa_log(&x).unwrap() + &iwasawa_log(&y).unwrap();
        prop_assert!(lhs.agreement(&rhs) >= N - 6, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn exp_log_roundtrip(x in prime().prop_flat_map(principal_unit)) {
        let back = exp_p(&iwasawa_log(&x).unwrap()).unwrap();
        prop_assert!(back.agreement(&x) >= N - 1);
    }

    #[test]
    fn teichmuller_is_multiplicative(p in prime(), a in 1i64..100, b in 1i64..100) {
        prop_assume!(a % p as i64 != 0 && b % p as i64 != 0);
        let ta = teichmuller(a, p, N).unwrap();
        let tb = teichmuller(b, p, N).unwrap();
        prop_assert_eq!(&ta * &tb, teichmuller(a * b, p, N).unwrap());
        prop_assert!((&ta.pow(p as i64 - 1).unwrap() - &PadicNumber::one(p, N)).is_zero());
    }

    #[test]
    fn branch_log_kills_u_and_is_additive(p in prime(), v in 1i64..4, k in 1i64..100_000, x in 1i64..100_000, y in 1i64..100_000) {
        prop_assume!(k % p as i64 != 0);
        let u = PadicNumber::from_scaled(p, N, v, &BigInt::from(k));
        let br = LogBranch::new(u.clone()).unwrap();
        prop_assert!(br.log(&u).unwrap().is_zero());
        let (x, y) = (PadicNumber::from_int(p, x, N), PadicNumber::from_int(p, y, N));
        let lhs = br.log(&(&x * &y)).unwrap();
        let rhs = &br.log(&x).unwrap() + &br.log(&y).unwrap();
        prop_assert!(lhs.agreement(&rhs) >= N - 8);
    }

    #[test]
    fn qp2_conjugation(p in prime(), a in 1i64..10_000, b in 1i64..10_000, c in 0i64..10_000, d in 1i64..10_000) {
        let x = Qp2Number::new(PadicNumber::from_int(p, a, N), PadicNumber::from_int(p, b, N));
        let y = Qp2Number::new(PadicNumber::from_int(p, c, N), PadicNumber::from_int(p, d, N));
        prop_assert_eq!(x.conj().conj(), x.clone());
        prop_assert_eq!((&x * &y).conj(), &x.conj() * &y.conj());
        prop_assert!((&x * &y).norm().agreement(&(&x.norm() * &y.norm())) >= N - 4);
        prop_assert!(x.norm().agreement(&(&x * &x.conj()).a().clone()) >= N - 4);
    }
}
