use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use padicx::local_factors::*;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    case: String,
    params: LocalParamsFile,
    expected: String,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn toric_fixtures_match() {
    let text = include_str!("fixtures/toric_p.json");
    let fixtures: Vec<Fixture> = serde_json::from_str(text).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for f in fixtures {
        let case = ToricCase::parse(&f.case).unwrap();
        seen.insert(case);
        let params = LocalParams::try_from(f.params).unwrap();
        let got = toric_p_value(case, &params).unwrap();
        assert_eq!(got.to_string(), f.expected, "case {}", f.case);
    }
    assert_eq!(seen.len(), ToricCase::ALL.len());
}

#[test]
fn toric_missing_param() {
    let p = LocalParams::default();
    assert_eq!(toric_p_value(ToricCase::SplitPrincipal, &p), Err(LocalError::MissingParam("abs_df")));
}

#[test]
fn pairing_examples() {
    let a = pairing_b_value(&PairingCase::Archimedean { k: 2 }).unwrap();
    assert_eq!(a, Expr::rational(q(1, 16)).times_token(Token::Pi, -2));
    let plus = pairing_b_value(&PairingCase::Special { place: "v".into(), eps: 1, abs_d: q(1, 5) }).unwrap();
    let minus = pairing_b_value(&PairingCase::Special { place: "v".into(), eps: -1, abs_d: q(1, 5) }).unwrap();
    assert_eq!(minus, plus.scale(&q(-1, 1)));
    let u = pairing_b_value(&PairingCase::Unramified { place: "v".into(), abs_d: q(1, 1) }).unwrap();
    assert_eq!(u.to_string(), "1 * zeta_v(1) * zeta_v(2)^-1 * L_v(1,Ad)");
}

#[test]
fn volume_examples() {
    let base = volume_formula(2, &q(1, 1), &q(1, 4), 1, &[]).unwrap();
    assert_eq!(base, Expr::rational(q(1, 1)));
    let place = |n| VolumePlace { name: "p".into(), kind: PlaceKind::Split, q_inv: q(1, 3), level: n };
    let one = volume_formula(2, &q(1, 1), &q(1, 4), 1, &[place(2)]).unwrap();
    let one_c = one.clone();
    assert_eq!(one_c, base.clone().scale(&q(1, 9)).times_token(Token::Zeta { place: "p".into(), s: 1 }, 1));
    let doubled = volume_formula(2, &q(1, 1), &q(1, 4), 1, &[place(4)]).unwrap();
    assert_eq!(doubled, one.clone().scale(&q(1, 9)));
    let inert = VolumePlace { name: "l".into(), kind: PlaceKind::Inert, q_inv: q(1, 5), level: 1 };
    let both = volume_formula(2, &q(1, 1), &q(1, 4), 1, &[place(2), inert.clone()]).unwrap();
    let alone = volume_formula(1, &q(1, 1), &q(1, 1), 1, &[inert]).unwrap();
    assert_eq!(both, one.mul(&alone));
}

#[test]
fn whittaker_macdonald_small() {
    let c = RepCase::Unramified { mu1: q(2, 1), mu2: q(1, 2) };
    // n = 1: μ₁ + μ₂ times |ϖ|^{1/2}
    let w = whittaker_value(&c, 1, &q(1, 4)).unwrap();
    assert_eq!(w, Expr::rational(q(5, 4)));
}

fn small_rat() -> impl Strategy<Value = BigRational> {
    (-30i64..30, 1i64..30).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn zeta_identity_exact(mu1 in small_rat(), mu2 in small_rat(), chi in small_rat(), x in small_rat(), d in small_rat(), t in 0u32..12, special in any::<bool>()) {
        let case = if special { RepCase::Special { mu: mu1.clone() } } else { RepCase::Unramified { mu1: mu1.clone(), mu2: mu2.clone() } };
        match zeta_integral_check(&case, &chi, &x, &d, t) {
            Ok(z) => prop_assert!(z.holds()),
            Err(LocalError::DivergentParameters(_)) | Err(LocalError::Degenerate) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn l_factor_swap_symmetric(mu1 in small_rat(), mu2 in small_rat(), x in small_rat()) {
        let a = local_l_factor(&RepCase::Unramified { mu1: mu1.clone(), mu2: mu2.clone() }, &BigRational::one(), &x);
        let b = local_l_factor(&RepCase::Unramified { mu1: mu2, mu2: mu1 }, &BigRational::one(), &x);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn expr_inverse(n in 1i64..50, d in 1i64..50, k in -3i64..3) {
        let e = Expr::rational(q(n, d)).times_power(&q(d, n + d), &q(1, 2)).times_token(Token::Pi, k);
        let one = e.mul(&e.inv().unwrap());
        prop_assert_eq!(one.as_rational(), Some(&BigRational::one()));
        prop_assert!(!e.coeff().is_zero());
    }
}
