use num_bigint::BigInt;
use num_rational::BigRational;
use padicx::distribution::*;
use padicx::harmonic::HarmonicCocycle;
use padicx::padic::{LogBranch, PadicNumber, Qp2Number};
use padicx::tree::{Disc, HyperbolicAxis, TreeVertex};

fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[test]
fn orbit_lambda_matches_closed_form() {
    let p = 3;
    let n = 20;
    let qt = PadicNumber::from_int(p, 3 * 4, n);
    let c = HarmonicCocycle::orbit_cocycle(&qt, 1, &[(r(4), 1), (r(1), -1)], 10).unwrap();
    let axis = HyperbolicAxis::new(&qt).unwrap();
    let br = LogBranch::iwasawa(p, n);
    let z0 = default_z0(p, n);
    let lam = lambda_value(&c, axis.gamma(), &br, &z0, 8).unwrap();
    let four = PadicNumber::from_int(p, 4, n);
    let want = &br.log(&qt).unwrap() + &br.log(&four).unwrap();
    let tail = lam.value.error_val;
    assert!(tail >= 6, "tail bound {tail}");
    assert!(lam.value.value.agreement(&want) >= tail, "{} vs {}", lam.value.value, want);
    // δ = a·h for unit atoms
    let d = schneider_value(&c, axis.gamma(), &TreeVertex::origin(p)).unwrap();
    assert_eq!(d, PadicNumber::one(p, n));
}

#[test]
fn lambda_independent_of_z0() {
    let p = 5;
    let n = 20;
    let qt = PadicNumber::from_int(p, 5 * 6, n);
    let c = HarmonicCocycle::axis_cocycle(&qt, 9).unwrap();
    let axis = HyperbolicAxis::new(&qt).unwrap();
    let br = LogBranch::iwasawa(p, n);
    let z0 = default_z0(p, n);
    let z1 = &z0 + &Qp2Number::from_padic(&PadicNumber::from_int(p, 2, n));
    let a = lambda_value(&c, axis.gamma(), &br, &z0, 8).unwrap();
    let b = lambda_value(&c, axis.gamma(), &br, &z1, 8).unwrap();
    let cj = lambda_value(&c, axis.gamma(), &br, &z0.conj(), 8).unwrap();
    assert_eq!(a.value.value, b.value.value);
    assert_eq!(a.value.value, cj.value.value);
    assert!(a.raw.in_qp());
}

#[test]
fn key_compute_gated_on_atoms() {
    let p = 3;
    let n = 20;
    let qt = PadicNumber::from_int(p, 3 * 4, n);
    let br = LogBranch::new(qt.clone()).unwrap();
    let axis = HyperbolicAxis::new(&qt).unwrap();
    let z0 = default_z0(p, n);
    let axis_c = HarmonicCocycle::axis_cocycle(&qt, 9).unwrap();
    assert_eq!(key_compute_check(&axis_c, &axis, &br, &z0, 7).unwrap_err(), DistError::EndpointAtoms);
    let orbit = HarmonicCocycle::orbit_cocycle(&qt, 0, &[(r(4), 1), (r(1), -1)], 9).unwrap();
    let k = key_compute_check(&orbit, &axis, &br, &z0, 7).unwrap();
    let prec = k.telescoped.error_val.min(6);
    assert!(k.lambda.agreement(&k.telescoped.value) >= prec, "{} vs {}", k.lambda, k.telescoped.value);
}

#[test]
fn integrate_examples() {
    let p = 3;
    let n = 20;
    let qt = PadicNumber::from_int(p, 3, n);
    let c = HarmonicCocycle::axis_cocycle(&qt, 9).unwrap();
    let d = TreeDistribution::new(&c);
    let one = LocallyAnalyticFunction::indicator(Disc::ball_int(p, 0, 0), p, n);
    for m in 0..6 {
        let e = d.integrate(&one, m).unwrap();
        assert_eq!(e.value, PadicNumber::one(p, n));
    }
    let x = LocallyAnalyticFunction::new(vec![(
        Disc::ball_int(p, 0, 0),
        Piece::Poly { center: r(0), coeffs: vec![PadicNumber::zero(p, n), PadicNumber::one(p, n)] },
    )])
    .unwrap();
    let e = d.integrate(&x, 5).unwrap();
    assert!(e.value.is_zero());
    assert!(e.error_val >= 5);
    assert!(matches!(d.integrate(&one, 40), Err(DistError::DepthTooShallow { .. })));
}
