use num_bigint::BigInt;
use num_rational::BigRational;
use padicx::tree::*;
use proptest::prelude::*;

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![2u32, 3, 5, 7])
}

fn vertex(p: u32) -> impl Strategy<Value = TreeVertex> {
    (-4i64..10, 0i64..1_000_000, 0u32..4)
        .prop_map(move |(n, c, d)| TreeVertex::new(p, n, &BigRational::new(BigInt::from(c), BigInt::from(p).pow(d))))
}

fn matrix() -> impl Strategy<Value = Mat2> {
    (-20i64..20, -20i64..20, -20i64..20, -20i64..20)
        .prop_filter_map("invertible", |(a, b, c, d)| (a * d - b * c != 0).then(|| Mat2::from_ints(a, b, c, d)))
}

#[test]
fn small_examples() {
    let o = TreeVertex::origin(3);
    assert_eq!(o.neighbors().len(), 4);
    let e0 = TreeEdge::e0(3);
    assert_eq!(e0.disc(), Disc::ball_int(3, 0, 0));
    assert_eq!(e0.reverse().disc(), Disc::ball_int(3, 0, 0).complement());
    assert!(e0.reverse().disc().contains_infinity());
    let axis = HyperbolicAxis::from_rational(3, &BigRational::from_integer(BigInt::from(27 * 4))).unwrap();
    assert_eq!(axis.translation_length(), 3);
    assert!(HyperbolicAxis::from_rational(3, &BigRational::from_integer(BigInt::from(4))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn regular_of_degree_p_plus_one(v in prime().prop_flat_map(vertex)) {
        let nb = v.neighbors();
        prop_assert_eq!(nb.len(), v.p() as usize + 1);
        for w in &nb {
            prop_assert_eq!(v.distance(w), 1);
            prop_assert!(w.neighbors().contains(&v));
        }
    }

    #[test]
    fn edge_disc_roundtrip(v in prime().prop_flat_map(vertex), flip in any::<bool>()) {
        let e = TreeEdge::down_to(v);
        let e = if flip { e.reverse() } else { e };
        prop_assert_eq!(e.disc().to_edge(), e.clone());
        prop_assert_eq!(e.reverse().disc(), e.disc().complement());
        let back = TreeEdge::parse(e.p(), &e.label()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn action_commutes_with_discs((v, g) in prime().prop_flat_map(|p| (vertex(p), matrix())), flip in any::<bool>()) {
        let g = TwistedMatrix::plain(g).unwrap();
        let e = TreeEdge::down_to(v);
        let e = if flip { e.reverse() } else { e };
        prop_assert_eq!(g.act_edge(&e).disc(), g.act_disc(&e.disc()));
        prop_assert_eq!(g.inverse().act_edge(&g.act_edge(&e)), e);
    }

    #[test]
    fn action_is_isometric((a, b, g) in prime().prop_flat_map(|p| (vertex(p), vertex(p), matrix()))) {
        let g = TwistedMatrix::plain(g).unwrap();
        prop_assert_eq!(g.act_vertex(&a).distance(&g.act_vertex(&b)), a.distance(&b));
        let path = geodesic(&a, &b);
        prop_assert_eq!(path.len() as i64, a.distance(&b));
    }

    #[test]
    fn axis_translation(v in prime().prop_flat_map(vertex), h in 1u32..4, u in 1i64..50) {
        let p = v.p();
        prop_assume!(u % p as i64 != 0);
        let q = BigRational::from_integer(BigInt::from(p).pow(h) * u);
        let axis = HyperbolicAxis::from_rational(p, &q).unwrap();
        let o = TreeVertex::origin(p);
        prop_assert_eq!(o.distance(&axis.translate_vertex(&o, 1)), h as i64);
        prop_assert_eq!(axis.translate_vertex(&axis.translate_vertex(&v, 2), -2), v);
    }
}
