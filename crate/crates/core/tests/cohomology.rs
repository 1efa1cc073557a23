use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use padicx::cohomology::*;
use padicx::distribution::{default_z0, l_invariant, TreeDistribution};
use padicx::harmonic::HarmonicCocycle;
use padicx::padic::{LogBranch, PadicNumber};
use padicx::tree::HyperbolicAxis;
use proptest::prelude::*;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn one() -> BigRational {
    BigRational::one()
}

fn group(h: Vec<u32>, logs: Vec<Vec<i64>>) -> DeltaGroup<BigRational> {
    let names = (0..h.len()).map(|i| format!("p{i}")).collect();
    let logs = logs.into_iter().map(|r| r.into_iter().map(q).collect()).collect();
    DeltaGroup::new(names, h, logs, &one()).unwrap()
}

fn group_strategy() -> impl Strategy<Value = DeltaGroup<BigRational>> {
    (1usize..=3)
        .prop_flat_map(|r| (prop::collection::vec(1u32..=3, r), prop::collection::vec(prop::collection::vec(-5i64..=5, r), r)))
        .prop_map(|(h, logs)| group(h, logs))
}

fn word(r: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-2i64..=2, r)
}

#[test]
fn c_log_examples() {
    let g = group(vec![2, 1], vec![vec![0, 3], vec![4, 0]]);
    let u = one();
    // q = p: log·1_D
    let v = c_log_eval(&g, 0, &g.generator(0));
    assert_eq!(v, RegionFunction::log(2, &u, 0).mul(&RegionFunction::d(2, &u, 0, 2)));
    // q ≠ p: −log(β_q)·1_B
    let w = c_log_eval(&g, 0, &g.generator(1));
    assert_eq!(w, RegionFunction::b(2, &u, 0).scale(&q(-3)));
    // linearity in the functional
    let t = Cocycle1::LogTrivial { p: 0, log_omega: q(6) }.eval(&g, &[1, -1]);
    let s = Cocycle1::LogTrivial { p: 0, log_omega: q(2) }.eval(&g, &[1, -1]);
    assert_eq!(t, s.scale(&q(3)));
    // a nonzero own log adds −l(β_p)·1_{v≥h}
    let g2 = group(vec![2], vec![vec![5]]);
    let want = g2.c_log_display(0, 0).sub(&RegionFunction::ind(1, &u, 0, 2).scale(&q(5)));
    assert_eq!(c_log_eval(&g2, 0, &[1]), want);
}

#[test]
fn cup_examples() {
    let g = group(vec![2, 3], vec![vec![0, 1], vec![2, 0]]);
    let u = one();
    let c0 = Cocycle1::Ord { p: 0 };
    let c1 = Cocycle1::Ord { p: 1 };
    let one_slot = cup_eval(&g, &[c0.clone()], &[g.generator(0)]).unwrap();
    assert_eq!(one_slot, c_ord_eval(&g, 0, &g.generator(0)));
    let v = cup_eval(&g, &[c0.clone(), c1.clone()], &[g.generator(0), g.generator(1)]).unwrap();
    assert_eq!(v, g.c_ord_display(0, 0).mul(&g.c_ord_display(1, 1)));
    assert!(!v.is_zero());
    let w = cup_eval(&g, &[c1, c0], &[g.generator(0), g.generator(1)]).unwrap();
    assert_eq!(w, v.neg());
    let _ = u;
}

#[test]
fn trivial_and_first_order_expansions() {
    let u = one();
    assert!(one_minus_gamma_expand(&[0, 0], &[q(2), q(3)], &u).is_empty());
    let single = one_minus_gamma_expand(&[1], &[q(7)], &u);
    assert_eq!(single.into_iter().collect::<Vec<_>>(), vec![(vec![0], q(-7))]);
    let sq = one_minus_gamma_expand(&[2], &[q(7)], &u);
    assert_eq!(sq.get(&vec![1]), Some(&q(-14)));
    assert_eq!(sq.get(&vec![0]), Some(&q(-49)));
}

#[test]
fn determinant_expansion_examples() {
    let u = one();
    let e = determinant_expansion(&[vec![q(4), q(-4)]], &u).unwrap();
    assert_eq!(e.by_determinant.get(&vec![0]), Some(&q(1)));
    assert_eq!(e.by_determinant.get(&vec![]), Some(&q(-4)));
    assert!(e.agrees());
    let z = determinant_expansion(&[vec![q(0); 3], vec![q(0); 3]], &u).unwrap();
    assert_eq!(z.by_determinant.len(), 1);
    assert_eq!(z.by_determinant.get(&vec![0, 1]), Some(&q(1)));
    assert!(z.agrees());
    let h2 = determinant_expansion(&[vec![q(1), q(2), q(-3)], vec![q(5), q(-1), q(-4)]], &u).unwrap();
    assert!(h2.agrees(), "{h2:?}");
    assert!(matches!(determinant_expansion(&[vec![q(1), q(1)]], &u), Err(CohomologyError::RowSumNonzero { row: 0 })));
}

fn zero_row_sum_matrix(k: usize, m: usize) -> impl Strategy<Value = Vec<Vec<BigRational>>> {
    prop::collection::vec(prop::collection::vec((-9i64..=9, 1i64..=4), m - 1), k).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let mut row: Vec<BigRational> = r.into_iter().map(|(n, d)| BigRational::new(n.into(), d.into())).collect();
                let s: BigRational = row.iter().sum();
                row.push(-s);
                row
            })
            .collect()
    })
}

fn km() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4).prop_flat_map(|m| (1usize..=m, Just(m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cocycle_law(g in group_strategy(), seed in any::<u64>()) {
        let r = g.rank();
        let mut rng = seed;
        let mut next = || { rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((rng >> 33) % 5) as i64 - 2 };
        let a: Vec<i64> = (0..r).map(|_| next()).collect();
        let b: Vec<i64> = (0..r).map(|_| next()).collect();
        let ab: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        for p in 0..r {
            for c in [Cocycle1::Ord { p }, Cocycle1::Log { p }] {
                let lhs = c.eval(&g, &ab);
                let rhs = c.eval(&g, &a).add(&c.eval(&g, &b).act(&g, &a));
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn trivial_ord_identity(g in group_strategy(), w in word(3), lo in -6i64..=6) {
        let w = &w[..g.rank()];
        let lo = q(lo);
        for p in 0..g.rank() {
            let lhs = Cocycle1::LogTrivial { p, log_omega: lo.clone() }.eval(&g, w);
            prop_assert_eq!(lhs, c_ord_eval(&g, p, w).scale(&lo));
        }
    }

    #[test]
    fn display_on_generators(g in group_strategy()) {
        for p in 0..g.rank() {
            for qi in 0..g.rank() {
                prop_assert_eq!(c_ord_eval(&g, p, &g.generator(qi)), g.c_ord_display(p, qi));
                if g.local_logs()[p][p] == q(0) {
                    prop_assert_eq!(c_log_eval(&g, p, &g.generator(qi)), g.c_log_display(p, qi));
                }
            }
        }
    }

    #[test]
    fn cup_alternating_and_multilinear(g in group_strategy(), a in word(3), b in word(3), c in word(3)) {
        prop_assume!(g.rank() >= 2);
        let r = g.rank();
        let (a, b, c) = (&a[..r], &b[..r], &c[..r]);
        let cs = [Cocycle1::Log { p: 0 }, Cocycle1::Ord { p: 1 }];
        let swapped = [cs[1].clone(), cs[0].clone()];
        let v = cup_eval(&g, &cs, &[a.to_vec(), b.to_vec()]).unwrap();
        prop_assert_eq!(cup_eval(&g, &swapped, &[a.to_vec(), b.to_vec()]).unwrap(), v.neg());
        prop_assert_eq!(cup_eval(&g, &cs, &[b.to_vec(), a.to_vec()]).unwrap(), v.neg());
        // linear in each cocycle slot
        let lin = Cocycle1::LogTrivial { p: 0, log_omega: q(3) };
        let l3 = cup_eval(&g, &[lin, cs[1].clone()], &[a.to_vec(), c.to_vec()]).unwrap();
        let o1 = cup_eval(&g, &[Cocycle1::Ord { p: 0 }, cs[1].clone()], &[a.to_vec(), c.to_vec()]).unwrap();
        prop_assert_eq!(l3, o1.scale(&q(3)));
    }

    #[test]
    fn expansion_matches_product_rule(t in prop::collection::vec(0u32..=3, 1..=3), l in prop::collection::vec(-4i64..=4, 3)) {
        let l: Vec<BigRational> = l[..t.len()].iter().map(|&x| q(x)).collect();
        let a = one_minus_gamma_expand(&t, &l, &one());
        prop_assert_eq!(&a, &one_minus_gamma_product_rule(&t, &l, &one()));
        for (i, &ti) in t.iter().enumerate() {
            if ti > 0 {
                let mut tp = t.clone();
                tp[i] -= 1;
                let want = -(q(ti as i64) * &l[i]);
                let got = a.get(&tp).cloned().unwrap_or_else(|| q(0));
                prop_assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn determinant_identity(c in (1usize..=3).prop_flat_map(|h| (h..=4).prop_flat_map(move |m| zero_row_sum_matrix(h, m)))) {
        prop_assert!(determinant_expansion(&c, &one()).unwrap().agrees());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn spiess_identity(c in km().prop_flat_map(|(k, m)| zero_row_sum_matrix(k, m))) {
        let r = spiess_det_check(&c, &one()).unwrap();
        prop_assert!(r.holds(), "{:?}", r);
    }
}

#[test]
fn spiess_zero_matrix() {
    let z = vec![vec![q(0); 4]; 3];
    let r = spiess_det_check(&z, &one()).unwrap();
    assert_eq!(r.det_side, q(0));
    assert!(r.holds());
}

#[test]
fn key_identity_against_orbit_measure() {
    let p = 3;
    let n = 20;
    let qt = PadicNumber::from_int(p, 12, n);
    let c = HarmonicCocycle::orbit_cocycle(&qt, 1, &[(q(4), 1), (q(1), -1)], 24).unwrap();
    let branch = LogBranch::new(qt.clone()).unwrap();
    let axis = HyperbolicAxis::new(&qt).unwrap();
    let l = l_invariant(&c, &axis, &branch, &default_z0(p, n), 20).unwrap().value;
    let unit = PadicNumber::one(p, n);
    let own = branch.log(&qt).unwrap();
    assert!(own.is_zero());
    let g = DeltaGroup::new(vec!["p".into()], vec![axis.translation_length() as u32], vec![vec![own]], &unit).unwrap();
    let dist = TreeDistribution::new(&c);
    let lhs = pair_with_measure(&c_log_eval(&g, 0, &[1]), &dist, &branch, 20).unwrap();
    let rhs = pair_with_measure(&c_ord_eval(&g, 0, &[1]), &dist, &branch, 20).unwrap();
    let rhs = &l.value * &rhs.value;
    let prec = lhs.error_val.min(l.error_val).min(n - 6);
    assert!(prec >= 12, "precision {prec}");
    assert!(lhs.value.agreement(&rhs) >= prec, "{} vs {}", lhs.value, rhs);
}
