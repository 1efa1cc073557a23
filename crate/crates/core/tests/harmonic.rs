use num_bigint::BigInt;
use num_rational::BigRational;
use padicx::harmonic::*;
use padicx::padic::PadicNumber;
use padicx::tree::{Mat2, TreeEdge, TwistedMatrix};
use proptest::prelude::*;

fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn qtilde() -> impl Strategy<Value = PadicNumber> {
    (prop::sample::select(vec![3u32, 5]), 1u32..3, 1i64..30).prop_filter_map("unit part", |(p, h, u)| {
        (u % p as i64 != 0).then(|| PadicNumber::from_int(p, i64::from(p).pow(h) * u, 20))
    })
}

/// Balanced unit atoms: weights summing to zero at points of small valuation.
fn atoms() -> impl Strategy<Value = Vec<(BigRational, i64)>> {
    prop::collection::vec((1i64..40, -3i64..=3), 1..4).prop_map(|mut v| {
        let s: i64 = v.iter().map(|a| a.1).sum();
        v.push((41, -s));
        v.into_iter().map(|(x, w)| (r(x), w)).collect()
    })
}

#[test]
fn invalid_json_is_rejected() {
    assert!(HarmonicCocycle::from_json("{\"p\": 3}").is_err());
    assert!(HarmonicCocycle::from_json("not json").is_err());
}

#[test]
fn unbalanced_orbit_is_rejected() {
    let qt = PadicNumber::from_int(3, 12, 20);
    let err = HarmonicCocycle::orbit_cocycle(&qt, 1, &[(r(4), 1)], 4).unwrap_err();
    assert_eq!(err, HarmonicError::Unbalanced);
}

#[test]
fn multi_cocycle_needs_matching_components() {
    let a = HarmonicCocycle::axis_cocycle(&PadicNumber::from_int(3, 3, 20), 3).unwrap();
    let b = HarmonicCocycle::axis_cocycle(&PadicNumber::from_int(5, 5, 20), 3).unwrap();
    assert!(MultiCocycle::new(vec![a.clone(), b]).is_err());
    let m = MultiCocycle::new(vec![a.clone(), a]).unwrap();
    assert_eq!(m.rank(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn orbit_cocycles_are_harmonic(qt in qtilde(), a in -2i64..=2, atoms in atoms()) {
        let c = HarmonicCocycle::orbit_cocycle(&qt, a, &atoms, 4).unwrap();
        let rep = c.validate();
        prop_assert!(rep.is_valid(), "{}", rep);
    }

    #[test]
    fn single_perturbation_is_detected(qt in qtilde(), pick in any::<prop::sample::Index>()) {
        let c = HarmonicCocycle::axis_cocycle(&qt, 3).unwrap();
        let edges: Vec<TreeEdge> = c.entries().map(|(e, _)| e.clone()).collect();
        let e = pick.get(&edges).clone();
        let mut broken = c.clone();
        let old = c.value(&e).unwrap();
        broken.set_entry(e, vec![&old + &PadicNumber::one(qt.p(), 20)]).unwrap();
        prop_assert!(!broken.validate().is_valid());
    }

    #[test]
    fn weight_four_atoms_are_harmonic(y in prop::collection::btree_set(-20i64..20, 4)) {
        let y: Vec<BigRational> = y.into_iter().map(r).collect();
        // divided-difference weights kill polynomials of degree ≤ 2
        let atoms: Vec<(BigRational, BigRational)> = (0..4)
            .map(|i| {
                let d = (0..4).filter(|&j| j != i).fold(r(1), |acc, j| acc * (&y[i] - &y[j]));
                (y[i].clone(), d.recip())
            })
            .collect();
        let c = HarmonicCocycle::from_atoms(5, 4, 3, 20, &atoms).unwrap();
        prop_assert!(c.validate().is_valid(), "{}", c.validate());
    }

    #[test]
    fn json_roundtrip(qt in qtilde(), atoms in atoms()) {
        let c = HarmonicCocycle::orbit_cocycle(&qt, 1, &atoms, 3).unwrap();
        let back = HarmonicCocycle::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), c.to_json());
        prop_assert!(back.validate().is_valid());
    }

    #[test]
    fn diagonal_action_preserves_harmonicity(qt in qtilde(), k in 1i64..8) {
        let p = qt.p();
        let c = HarmonicCocycle::axis_cocycle(&qt, 4).unwrap();
        let g = TwistedMatrix::plain(Mat2::from_ints(k * p as i64 + 1, 0, 0, 1)).unwrap();
        let moved = c.act_star(&g).unwrap();
        prop_assert!(moved.validate().is_valid(), "{}", moved.validate());
    }

    #[test]
    fn periodic_lookup_beyond_the_table(qt in qtilde(), n in 1i64..4) {
        let c = HarmonicCocycle::axis_cocycle(&qt, 3).unwrap();
        let axis = c.period().unwrap().clone();
        let e0 = TreeEdge::e0(qt.p());
        prop_assert_eq!(c.value(&axis.translate_edge(&e0, n)).unwrap(), c.value(&e0).unwrap());
    }
}
