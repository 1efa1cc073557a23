use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use padicx::anticyclo::{trivial_character, LevelIndex};
use padicx::harmonic::HarmonicCocycle;
use padicx::padic::{LogBranch, PadicNumber};
use padicx::theta::*;

fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn orbit(p: u32, q: i64, depth: i64) -> HarmonicCocycle {
    let qt = PadicNumber::from_int(p, q, 20);
    HarmonicCocycle::orbit_cocycle(&qt, 1, &[(r(1 + p as i64), 1), (r(1), -1)], depth).unwrap()
}

#[test]
fn built_data_is_compatible_through_level_5() {
    let c = orbit(3, 12, 10);
    let d = build_gross_data_from_cocycle(&[c], 5).unwrap();
    assert!(d.trace_violations().unwrap().is_empty());
    for n in 0..5 {
        assert!(check_compatibility(&d, &LevelIndex::single(n + 1), &LevelIndex::single(n)).unwrap());
    }
    let mut broken = d.clone();
    let g = broken.tower().level(&LevelIndex::single(3)).unwrap().generator(2);
    let v = broken.value(&LevelIndex::single(3), &g).unwrap();
    broken.set_value(&LevelIndex::single(3), g, &v + &PadicNumber::one(3, 20)).unwrap();
    assert!(!check_compatibility(&broken, &LevelIndex::single(3), &LevelIndex::single(2)).unwrap());
}

#[test]
fn flagship_rank_one() {
    let p = 3;
    let c = orbit(p, 12, 22);
    let d = build_gross_data_from_cocycle(&[c.clone()], 5).unwrap();
    let chi = trivial_character(d.tower(), p, 20).unwrap();
    let branch = LogBranch::new(PadicNumber::from_int(p, 12, 20)).unwrap();
    let rep = leading_term_check(&d, &[c], &branch, &chi, 20).unwrap();
    assert!(rep.branch_consistent);
    assert!(rep.lower_vanish, "{:?}", rep.coeffs);
    assert!(!rep.derivative.is_zero());
    assert!(rep.agreement >= 14, "{} vs {}", rep.derivative, rep.predicted);
    let four = PadicNumber::from_int(p, 4, 20);
    assert!(rep.derivative.agreement(&branch.log(&four).unwrap()) >= 14);
}

#[test]
fn rank_two_lower_terms_vanish() {
    let p = 3;
    let c1 = orbit(p, 12, 8);
    let c2 = orbit(p, 3 * 7, 8);
    let d = build_gross_data_from_cocycle(&[c1.clone(), c2.clone()], 3).unwrap();
    assert!(d.trace_violations().unwrap().is_empty());
    assert!(restriction_law_check(&[c1.clone(), c2.clone()], 0, 2).unwrap());
    let chi = trivial_character(d.tower(), p, 20).unwrap();
    let logs = built_logs(&d, &LogBranch::iwasawa(p, 20)).unwrap();
    let dir: BTreeMap<String, PadicNumber> = logs.iter().map(|l| (l.sigma().to_string(), PadicNumber::one(p, 20))).collect();
    let s = l_series(&d, &chi, &logs, &dir, 2).unwrap();
    assert!(s.coeffs[0].is_zero());
    assert!(s.coeffs[1].is_zero());
    assert!(!s.coeffs[2].is_zero());
}
