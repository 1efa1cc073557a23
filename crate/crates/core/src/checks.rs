//! The fourteen acceptance checks, each with an independent oracle and a time budget.
//! All randomness is seeded so every run is identical.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::anticyclo::{split_tower, trivial_character, ClassGroupTower, LevelIndex};
use crate::cohomology::spiess_det_check;
use crate::distribution::{default_z0, l_invariant, vanishing_check, LocallyAnalyticFunction, Piece, TreeDistribution};
use crate::harmonic::{HarmonicCocycle, MultiCocycle, Region, Violation};
use crate::local_factors::{
    period_ratio_check, toric_p_value, whittaker_value, zeta_integral_check, LocalError, LocalParams, LocalParamsFile,
    RepCase, RootNumber, ToricCase,
};
use crate::padic::{exp_p, iwasawa_log, teichmuller, LogBranch, PadicNumber};
use crate::theta::{
    build_gross_data_from_cocycle, check_compatibility, leading_term_check, multiplier_e, script_l, GrossPointData,
    MultiplierParams, PrimeCase,
};
use crate::tree::{Disc, HyperbolicAxis, Mat2, TreeEdge, TreeVertex, TwistedMatrix};

const N: i64 = 20;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    /// The oracle held and the run finished inside the budget.
    pub passed: bool,
    pub oracle_held: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<22} {:>8.3}s / {:>4}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail.trim_end().trim_end_matches(';')
        )
    }
}

type CheckResult = Result<(bool, String), String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget_secs: u64,
    run: fn() -> CheckResult,
}

const CRITERIA: [Criterion; 14] = [
    Criterion { id: 1, name: "padic-core", budget_secs: 1, run: padic_core },
    Criterion { id: 2, name: "tree", budget_secs: 1, run: tree },
    Criterion { id: 3, name: "harmonicity", budget_secs: 60, run: harmonicity },
    Criterion { id: 4, name: "moments", budget_secs: 5, run: moments },
    Criterion { id: 5, name: "multi-vanishing", budget_secs: 10, run: multi_vanishing },
    Criterion { id: 6, name: "l-invariant-oracle", budget_secs: 30, run: l_invariant_oracle },
    Criterion { id: 7, name: "branch-change", budget_secs: 30, run: branch_change },
    Criterion { id: 8, name: "theta-compatibility", budget_secs: 5, run: theta_compatibility },
    Criterion { id: 9, name: "multiplier", budget_secs: 1, run: multiplier },
    Criterion { id: 10, name: "exceptional-vanishing", budget_secs: 10, run: exceptional_vanishing },
    Criterion { id: 11, name: "spiess-determinant", budget_secs: 5, run: spiess },
    Criterion { id: 12, name: "flagship", budget_secs: 60, run: flagship },
    Criterion { id: 13, name: "rank-two-order", budget_secs: 120, run: rank_two },
    Criterion { id: 14, name: "local-formulas", budget_secs: 5, run: local_formulas },
];

/// Suite names accepted by `check`, with the criteria each one runs.
pub const SUITES: [(&str, &[u8]); 15] = [
    ("all", &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14]),
    ("padic", &[1]),
    ("tree", &[2]),
    ("harmonic", &[3]),
    ("moments", &[4]),
    ("vanishing", &[5, 10]),
    ("linvariant", &[6, 7]),
    ("branch", &[7]),
    ("theta", &[8]),
    ("multiplier", &[9]),
    ("cohomology", &[11]),
    ("spiess", &[11]),
    ("exceptional", &[12]),
    ("rank-two", &[13]),
    ("local", &[14]),
];

pub fn suite(name: &str) -> Option<&'static [u8]> {
    SUITES.iter().find(|(n, _)| *n == name).map(|(_, ids)| *ids)
}

pub fn run(id: u8) -> Option<Outcome> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let res = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(c.budget_secs);
    let (oracle_held, mut detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    let in_budget = elapsed <= budget;
    if !in_budget {
        detail.push_str(" (over time budget)");
    }
    Some(Outcome { id, name: c.name, passed: oracle_held && in_budget, oracle_held, detail, elapsed, budget })
}

pub fn run_suite(name: &str) -> Option<Vec<Outcome>> {
    Some(suite(name)?.iter().filter_map(|&id| run(id)).collect())
}

fn e<E: fmt::Display>(err: E) -> String {
    err.to_string()
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pad(p: u32, n: i64) -> PadicNumber {
    PadicNumber::from_int(p, n, N)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_below(r: &mut ChaCha8Rng, p: u32, digits: u32) -> BigInt {
    (0..digits).fold(BigInt::zero(), |acc, _| acc * p + r.gen_range(0..p))
}

fn random_unit(r: &mut ChaCha8Rng, p: u32, digits: u32) -> BigInt {
    random_below(r, p, digits) * p + r.gen_range(1..p)
}

fn padic_core() -> CheckResult {
    let mut r = rng(1);
    let mut worst = i64::MAX;
    let mut bad = Vec::new();
    for p in [3u32, 5, 7] {
        for _ in 0..200 {
            let x = PadicNumber::from_int(p, BigInt::one() + random_below(&mut r, p, (N - 1) as u32) * p, N);
            let back = exp_p(&iwasawa_log(&x).map_err(e)?).map_err(e)?;
            let agree = back.agreement(&x);
            worst = worst.min(agree);
            if agree < N - 1 {
                bad.push(format!("exp(log({x})) at p={p}"));
            }
        }
        for a in 1..p as i64 {
            let t = teichmuller(a, p, N).map_err(e)?;
            if !(&t.pow(p as i64 - 1).map_err(e)? - &PadicNumber::one(p, N)).is_zero() || t.residue() as i64 != a {
                bad.push(format!("teichmuller({a}) at p={p}"));
            }
        }
        for _ in 0..20 {
            let v = r.gen_range(1..4);
            let u = PadicNumber::from_int(p, random_unit(&mut r, p, 8) * BigInt::from(p).pow(v), N);
            let br = LogBranch::new(u.clone()).map_err(e)?;
            if !br.log(&u).map_err(e)?.is_zero() {
                bad.push(format!("log_u(u) for u={u}"));
            }
        }
    }
    Ok((bad.is_empty(), format!("min roundtrip agreement {worst}/{N}; {} failures {}", bad.len(), first(&bad))))
}

fn first(v: &[String]) -> String {
    v.first().map(|s| format!("first failure: {s}")).unwrap_or_default()
}

fn random_vertex(r: &mut ChaCha8Rng, p: u32) -> TreeVertex {
    let n = r.gen_range(-3..=8);
    let c = BigRational::new(random_below(r, p, 11), BigInt::from(p).pow(3));
    TreeVertex::new(p, n, &c)
}

fn random_edge(r: &mut ChaCha8Rng, p: u32) -> TreeEdge {
    let e = TreeEdge::down_to(random_vertex(r, p));
    if r.gen_bool(0.5) {
        e.reverse()
    } else {
        e
    }
}

fn random_matrix(r: &mut ChaCha8Rng, p: u32) -> TwistedMatrix {
    loop {
        let mut x = || BigRational::new(BigInt::from(r.gen_range(-30i64..=30)), BigInt::from(p).pow(r.gen_range(0..3)));
        let m = Mat2::new(x(), x(), x(), x());
        if let Ok(g) = TwistedMatrix::plain(m) {
            return g;
        }
    }
}

fn tree() -> CheckResult {
    let mut r = rng(2);
    let mut bad = Vec::new();
    for p in [3u32, 5, 7] {
        for _ in 0..100 {
            let v = random_vertex(&mut r, p);
            let nb = v.neighbors();
            let distinct: BTreeSet<&TreeVertex> = nb.iter().collect();
            if nb.len() != p as usize + 1 || distinct.len() != nb.len() || nb.iter().any(|w| v.distance(w) != 1) {
                bad.push(format!("degree at {}", v.label()));
            }
        }
    }
    for i in 0..1000 {
        let p = [3u32, 5, 7][i % 3];
        let ed = random_edge(&mut r, p);
        if ed.disc().to_edge() != ed {
            bad.push(format!("edge/disc roundtrip at {}", ed.label()));
        }
    }
    for i in 0..100 {
        let p = [3u32, 5][i % 2];
        let ed = random_edge(&mut r, p);
        let g = random_matrix(&mut r, p);
        if g.act_edge(&ed).disc() != g.act_disc(&ed.disc()) {
            bad.push(format!("U_ge != gU_e at {}", ed.label()));
        }
    }
    Ok((bad.is_empty(), format!("{} failures {}", bad.len(), first(&bad))))
}

fn region_vertices(region: &Region) -> Vec<TreeVertex> {
    let a = region.anchor();
    let mut seen: BTreeSet<TreeVertex> = [a.source().clone(), a.target().clone()].into();
    let mut queue: VecDeque<TreeVertex> = seen.iter().cloned().collect();
    while let Some(v) = queue.pop_front() {
        for w in v.neighbors() {
            if region.contains_vertex(&w) && seen.insert(w.clone()) {
                queue.push_back(w);
            }
        }
    }
    seen.into_iter().collect()
}

fn harmonicity() -> CheckResult {
    let depth = 3;
    let mut perturbations = 0usize;
    let mut bad = Vec::new();
    for p in [3u32, 5] {
        for h in 1..=3u32 {
            let qt = pad(p, i64::from(p).pow(h) * (1 + i64::from(p)));
            let c = HarmonicCocycle::axis_cocycle(&qt, depth).map_err(e)?;
            let rep = c.validate();
            if !rep.is_valid() {
                bad.push(format!("axis p={p} h={h} rejected: {rep}"));
                continue;
            }
            let axis = c.period().expect("axis cocycles are periodic").clone();
            let edges: Vec<TreeEdge> = region_vertices(c.region())
                .into_iter()
                .filter(|v| c.region().contains_vertex(&v.parent()))
                .flat_map(|v| {
                    let d = TreeEdge::down_to(v);
                    [d.reverse(), d]
                })
                .collect();
            for ed in edges {
                let mut broken = c.clone();
                let old = c.evaluate(&ed).map_err(e)?;
                broken.set_entry(ed.clone(), vec![&old[0] + &PadicNumber::one(p, N)]).map_err(e)?;
                perturbations += 1;
                let rep = broken.validate();
                if rep.is_valid() {
                    bad.push(format!("undetected perturbation at {}", ed.label()));
                    continue;
                }
                let mut near_edges: BTreeSet<String> = BTreeSet::new();
                for x in [ed.clone(), ed.reverse()] {
                    for k in [-1, 0, 1] {
                        near_edges.insert(axis.translate_edge(&x, k).label());
                    }
                }
                let near_vertices: BTreeSet<String> = [ed.source().label(), ed.target().label()].into();
                let localized = rep.violations.iter().all(|v| match v {
                    Violation::VertexSum { vertex } => near_vertices.contains(vertex),
                    Violation::Antisymmetry { edge } | Violation::Periodicity { edge } | Violation::OutsideRegion { edge } => {
                        near_edges.contains(edge)
                    }
                });
                if !localized {
                    bad.push(format!("report for {} not localized: {rep}", ed.label()));
                }
            }
        }
    }
    Ok((bad.is_empty(), format!("{perturbations} perturbations; {} failures {}", bad.len(), first(&bad))))
}

fn weight_four(p: u32, depth: i64) -> Result<HarmonicCocycle, String> {
    let atoms = [(rat(0), rat(-1)), (rat(1), rat(3)), (rat(2), rat(-3)), (rat(3), rat(1))];
    HarmonicCocycle::from_atoms(p, 4, depth, N, &atoms).map_err(e)
}

fn weight_four_spread(p: u32, depth: i64) -> Result<HarmonicCocycle, String> {
    // Second differences of x^2 at three far-apart points, plus one outside Z_p.
    let pts = [ratio(1, p as i64), rat(1 + p as i64), rat(1 + 2 * p as i64 * p as i64)];
    let mut atoms: Vec<(BigRational, BigRational)> = Vec::new();
    // weights w solve Σ w y^j = 0 for j ≤ 2 with a fourth point y = 0
    let y = [rat(0), pts[0].clone(), pts[1].clone(), pts[2].clone()];
    let w = null_vector(&y);
    for (yi, wi) in y.iter().zip(w) {
        atoms.push((yi.clone(), wi));
    }
    HarmonicCocycle::from_atoms(p, 4, depth, N, &atoms).map_err(e)
}

/// A nonzero w with Σ w_i y_i^j = 0 for j = 0, 1, 2 (divided differences on four points).
fn null_vector(y: &[BigRational]) -> Vec<BigRational> {
    (0..y.len())
        .map(|i| {
            let prod = (0..y.len()).filter(|&j| j != i).fold(BigRational::one(), |acc, j| acc * (&y[i] - &y[j]));
            prod.recip()
        })
        .collect()
}

fn moments() -> CheckResult {
    let mut bad = Vec::new();
    let mut discs = 0usize;
    let cases: Vec<(String, HarmonicCocycle, HarmonicCocycle)> = vec![
        ("axis p=3".into(), HarmonicCocycle::axis_cocycle(&pad(3, 12), 3).map_err(e)?, HarmonicCocycle::axis_cocycle(&pad(3, 12), 5).map_err(e)?),
        (
            "orbit p=3".into(),
            HarmonicCocycle::orbit_cocycle(&pad(3, 12), 1, &[(rat(4), 1), (rat(1), -1)], 3).map_err(e)?,
            HarmonicCocycle::orbit_cocycle(&pad(3, 12), 1, &[(rat(4), 1), (rat(1), -1)], 5).map_err(e)?,
        ),
        ("weight 4 p=5".into(), weight_four(5, 2)?, weight_four(5, 4)?),
        ("weight 4 spread p=3".into(), weight_four_spread(3, 2)?, weight_four_spread(3, 5)?),
    ];
    for (name, shallow, deep) in &cases {
        let k = deep.weight();
        let n = k - 2;
        let d = TreeDistribution::new(deep);
        let region = deep.region();
        for v in region_vertices(region).into_iter().filter(|v| region.is_interior(v) && region.contains_vertex(&v.parent())) {
            discs += 1;
            let ball = Disc::ball(v.p(), v.center(), v.level());
            for j in 0..=n {
                let parent = d.moment(&ball, j).map_err(e)?;
                let sum = v.children().try_fold(PadicNumber::zero(v.p(), N), |acc, w| {
                    d.moment(&Disc::ball(w.p(), w.center(), w.level()), j).map(|m| &acc + &m)
                });
                let sum = sum.map_err(e)?;
                if !(&parent - &sum).is_zero() {
                    bad.push(format!("{name}: raw moment {j} at {}", v.label()));
                }
                // recentred: ∫_U (x−a)^j = Σ_c Σ_i binom(j,i) (c−a)^{j−i} ∫_{U_c} (x−c)^i
                let a = v.center();
                let centred = d.centered_moment(a, v.level(), j).map_err(e)?;
                let mut acc = PadicNumber::zero(v.p(), N);
                for w in v.children() {
                    let shift = w.center() - a;
                    for i in 0..=j {
                        let coef = BigRational::from_integer(binom(j, i)) * num_traits::pow(shift.clone(), (j - i) as usize);
                        acc = &acc + &d.centered_moment(w.center(), w.level(), i).map_err(e)?.mul_rational(&coef);
                    }
                }
                if !(&centred - &acc).is_zero() {
                    bad.push(format!("{name}: centred moment {j} at {}", v.label()));
                }
            }
        }
        // growth bound: A measured on the shallow table must bound every ball of the deep one
        let a_val = TreeDistribution::new(shallow).growth_constant().map_err(e)?;
        let Some(a_val) = a_val else {
            bad.push(format!("{name}: zero table"));
            continue;
        };
        let kk = k as i64;
        for v in region_vertices(region).into_iter().filter(|v| region.contains_vertex(&v.parent())) {
            for j in 0..=n {
                let mom = d.centered_moment(v.center(), v.level(), j).map_err(e)?;
                let bound = a_val + d.center_factor_val(v.center()) + v.level() * (j as i64 + 1 - kk / 2);
                if mom.val_or_prec() < bound.min(mom.prec()) {
                    bad.push(format!("{name}: growth bound at {} j={j}", v.label()));
                }
            }
        }
    }
    Ok((bad.is_empty(), format!("{discs} discs; {} failures {}", bad.len(), first(&bad))))
}

fn binom(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

fn multi_vanishing() -> CheckResult {
    let p = 3;
    let m = 6;
    let c1 = HarmonicCocycle::axis_cocycle(&pad(p, 3), m + 1).map_err(e)?;
    let c2 = HarmonicCocycle::axis_cocycle(&pad(p, 9 * 4), m + 1).map_err(e)?;
    let multi = MultiCocycle::new(vec![c1, c2]).map_err(e)?;
    let fs = vec![
        LocallyAnalyticFunction::indicator(Disc::ball_int(p, 0, 0), p, N),
        LocallyAnalyticFunction::new(vec![(
            Disc::ball_int(p, 0, 0),
            Piece::Poly { center: rat(0), coeffs: vec![pad(p, 1), pad(p, 2)] },
        )])
        .map_err(e)?,
        LocallyAnalyticFunction::new(vec![(Disc::ball_int(p, 1, 1), Piece::constant(pad(p, 5)))]).map_err(e)?,
    ];
    let mut bad = Vec::new();
    let mut min_prec = i64::MAX;
    for idx in 0..2 {
        for f in &fs {
            let est = vanishing_check(&multi, idx, std::slice::from_ref(f), m).map_err(e)?;
            let bound = est.error_val.min(N);
            min_prec = min_prec.min(bound);
            if est.value.val_or_prec() < bound {
                bad.push(format!("idx {idx}: {} above bound {bound}", est.value));
            }
        }
    }
    Ok((bad.is_empty(), format!("6 integrals, zero to >= {min_prec} digits; {}", first(&bad))))
}

fn l_invariant_oracle() -> CheckResult {
    let mut bad = Vec::new();
    let mut worst = i64::MAX;
    let mut count = 0;
    for p in [3u32, 5] {
        let pi = p as i64;
        let z0 = default_z0(p, N);
        let branches = [LogBranch::iwasawa(p, N), LogBranch::new(pad(p, pi * (pi + 2))).map_err(e)?];
        for q in [pi, pi * (1 + pi), pi * pi * (1 + pi + pi * pi)] {
            let qt = pad(p, q);
            let axis = HyperbolicAxis::new(&qt).map_err(e)?;
            let c = HarmonicCocycle::axis_cocycle(&qt, 9).map_err(e)?;
            for br in &branches {
                let li = l_invariant(&c, &axis, br, &z0, 8).map_err(e)?;
                let want = br.log(&qt).map_err(e)?.div_int(qt.valuation().expect("nonzero"));
                let agree = li.value.value.agreement(&want);
                worst = worst.min(agree);
                count += 1;
                if agree < N - 5 {
                    bad.push(format!("p={p} q={q} u={}: {} vs {want}", br.u(), li.value.value));
                }
            }
        }
    }
    Ok((bad.is_empty(), format!("{count} cases, min agreement {worst}/{N}; {}", first(&bad))))
}

fn branch_change() -> CheckResult {
    let mut r = rng(7);
    let mut bad = Vec::new();
    let mut worst = i64::MAX;
    let random_branch = |r: &mut ChaCha8Rng, p: u32| -> Result<LogBranch, String> {
        let v = r.gen_range(1..=3u32);
        LogBranch::new(PadicNumber::from_int(p, random_unit(r, p, 6) * BigInt::from(p).pow(v), N)).map_err(e)
    };
    let z0s = [default_z0(3, N), default_z0(5, N)];
    let axes = [
        (HarmonicCocycle::axis_cocycle(&pad(3, 12), 9).map_err(e)?, HyperbolicAxis::new(&pad(3, 12)).map_err(e)?),
        (HarmonicCocycle::axis_cocycle(&pad(5, 30), 9).map_err(e)?, HyperbolicAxis::new(&pad(5, 30)).map_err(e)?),
    ];
    let orbit = HarmonicCocycle::orbit_cocycle(&pad(3, 12), 1, &[(rat(4), 1), (rat(1), -1)], 22).map_err(e)?;
    let orbit_axis = HyperbolicAxis::new(&pad(3, 12)).map_err(e)?;
    for i in 0..20 {
        let which = if i < 3 { 0 } else { i % 2 };
        let p = [3u32, 5][which];
        let (u1, u2) = (random_branch(&mut r, p)?, random_branch(&mut r, p)?);
        let (c, axis, m) = if i < 3 { (&orbit, &orbit_axis, 20) } else { (&axes[which].0, &axes[which].1, 8) };
        let l1 = l_invariant(c, axis, &u1, &z0s[which], m).map_err(e)?;
        let l2 = l_invariant(c, axis, &u2, &z0s[which], m).map_err(e)?;
        let lhs = &l1.value.value - &l2.value.value;
        let pp = pad(p, p as i64);
        let rhs = &u1.log(&pp).map_err(e)? - &u2.log(&pp).map_err(e)?;
        let agree = lhs.agreement(&rhs);
        worst = worst.min(agree);
        if agree < N - 5 {
            bad.push(format!("u1={} u2={}: {lhs} vs {rhs}", u1.u(), u2.u()));
        }
    }
    Ok((bad.is_empty(), format!("20 pairs (3 on an orbit measure), min agreement {worst}/{N}; {}", first(&bad))))
}

/// Random values at the top level pushed down the tower, then written out and read back.
fn ingested_data(p: u32, top: u32) -> Result<GrossPointData, String> {
    let tower = split_tower(p, 2, top);
    let mut r = rng(8);
    let top_idx = LevelIndex::single(top);
    let top_group = tower.level(&top_idx).map_err(e)?.clone();
    let top_vals: Vec<_> = top_group
        .elements()
        .map_err(e)?
        .into_iter()
        .map(|g| (g, PadicNumber::from_int(p, r.gen_range(-50i64..50), N)))
        .collect();
    let mut values = BTreeMap::new();
    for (n, _) in tower.levels() {
        let mut level_vals: BTreeMap<_, PadicNumber> = BTreeMap::new();
        for (g, v) in &top_vals {
            let img = tower.project(&top_idx, n, g).map_err(e)?;
            let slot = level_vals.entry(img).or_insert_with(|| PadicNumber::zero(p, N));
            *slot = &*slot + v;
        }
        values.insert(n.clone(), level_vals);
    }
    let data = GrossPointData::new(tower.clone(), p, N, vec![PadicNumber::one(p, N)], vec![true], values).map_err(e)?;
    let json = serde_json::to_string(&data.to_file()).map_err(e)?;
    let tower_json = serde_json::to_string(&tower.to_file()).map_err(e)?;
    let (tower_back, _) = ClassGroupTower::from_json(&tower_json).map_err(e)?;
    let file = serde_json::from_str(&json).map_err(e)?;
    GrossPointData::from_file(&file, tower_back).map_err(e)
}

fn theta_compatibility() -> CheckResult {
    let ingested = ingested_data(3, 5)?;
    let c = HarmonicCocycle::orbit_cocycle(&pad(3, 12), 1, &[(rat(4), 1), (rat(1), -1)], 10).map_err(e)?;
    let built = build_gross_data_from_cocycle(&[c], 5).map_err(e)?;
    let mut bad = Vec::new();
    for (name, d) in [("ingested", &ingested), ("built", &built)] {
        for n in 0..5 {
            if !check_compatibility(d, &LevelIndex::single(n + 1), &LevelIndex::single(n)).map_err(e)? {
                bad.push(format!("{name}: level {} -> {n}", n + 1));
            }
        }
    }
    // a single changed value must break compatibility
    let mut broken = ingested.clone();
    let lvl = LevelIndex::single(4);
    let g = broken.tower().level(&lvl).map_err(e)?.generator(2);
    let v = broken.value(&lvl, &g).map_err(e)?;
    broken.set_value(&lvl, g, &v + &PadicNumber::one(3, N)).map_err(e)?;
    if check_compatibility(&broken, &lvl, &LevelIndex::single(3)).map_err(e)? {
        bad.push("perturbed value not detected".into());
    }
    Ok((bad.is_empty(), format!("levels 5 -> 0 on ingested and built data; {}", first(&bad))))
}

fn multiplier() -> CheckResult {
    let mut bad = Vec::new();
    let mut literal_counterexamples = Vec::new();
    let alphas = [rat(1), rat(-1), rat(2), ratio(1, 3), ratio(-5, 2)];
    // finite-order characters take root-of-unity values; the rational ones are ±1
    let chis = [rat(1), rat(-1)];
    let mut cases = 0;
    for p in [3i64, 5] {
        for f in 1..=2u32 {
            let norm = BigRational::new(BigInt::one(), BigInt::from(p).pow(f));
            for alpha in &alphas {
                let r_ps: &[u32] = if alpha.abs().is_one() { &[0, 1] } else { &[0] };
                for &r_p in r_ps {
                    for chi in &chis {
                        // anticyclotomic: χ(𝔓̄) = χ(𝔓)^{-1}
                        let params = MultiplierParams {
                            case: PrimeCase::Split,
                            alpha: alpha.clone(),
                            norm: norm.clone(),
                            r_p,
                            s: 0,
                            chi_p: Some(chi.clone()),
                            chi_pbar: Some(chi.recip()),
                        };
                        let m = multiplier_e(&params).map_err(e)?;
                        let e_disp = m.e_display.ok_or("split case has a display value")?;
                        cases += 1;
                        let literal = alpha.is_one() && chi.is_one();
                        if e_disp.is_zero() != literal {
                            literal_counterexamples.push(format!("α={alpha} χ(P)={chi}"));
                        }
                        // the zero set is exactly α·χ(𝔓) = 1 or α·χ(𝔓̄) = 1
                        let expected_zero = (alpha * chi).is_one() || (alpha / chi).is_one();
                        if e_disp.is_zero() != expected_zero {
                            bad.push(format!("zero set at α={alpha} χ={chi}"));
                        }
                        if literal && !e_disp.is_zero() {
                            bad.push(format!("α=1, χ=1 gives e={e_disp}"));
                        }
                    }
                    for s in 1..=4u32 {
                        let params = MultiplierParams {
                            case: PrimeCase::Split,
                            alpha: alpha.clone(),
                            norm: norm.clone(),
                            r_p,
                            s,
                            chi_p: None,
                            chi_pbar: None,
                        };
                        let m = multiplier_e(&params).map_err(e)?;
                        let want = BigRational::from_integer(BigInt::from(p).pow(s * f))
                            / num_traits::pow(alpha.clone(), 2 * s as usize);
                        cases += 1;
                        if m.e_display.as_ref() != Some(&want) {
                            bad.push(format!("s={s} α={alpha}: {:?} vs {want}", m.e_display));
                        }
                    }
                }
            }
        }
    }
    // the only departures from the literal statement are α = −1 with χ(𝔓) = χ(𝔓̄) = −1
    let allowed = literal_counterexamples.iter().all(|c| c == "α=-1 χ(P)=-1");
    if !allowed {
        bad.push(format!("unexpected zeros {literal_counterexamples:?}"));
    }
    Ok((
        bad.is_empty(),
        format!(
            "{cases} cases; zero set {{α·χ(P)=1 or α·χ(P̄)=1}}; literal 'iff' also vanishes at {} (α=-1, χ=-1); {}",
            literal_counterexamples.len(),
            first(&bad)
        ),
    ))
}

fn exceptional_vanishing() -> CheckResult {
    let p = 3;
    let mut bad = Vec::new();
    let mut worst = i64::MAX;
    for (q, atoms) in [(12i64, vec![(rat(4), 1), (rat(1), -1)]), (3 * 7, vec![(rat(7), 2), (rat(2), -2)]), (3, vec![])] {
        let c = HarmonicCocycle::orbit_cocycle(&pad(p, q), 1, &atoms, 10).map_err(e)?;
        let d = build_gross_data_from_cocycle(&[c], 5).map_err(e)?;
        let chi = trivial_character(d.tower(), p, N).map_err(e)?;
        let v = script_l(&d, &chi).map_err(e)?;
        worst = worst.min(v.val_or_prec());
        if v.val_or_prec() < N - 5 {
            bad.push(format!("q̃={q}: {v}"));
        }
    }
    Ok((bad.is_empty(), format!("3 built towers, script_L(1) zero to >= {worst} digits; {}", first(&bad))))
}

fn zero_row_sum_matrix(r: &mut ChaCha8Rng, k: usize, m: usize) -> Vec<Vec<BigRational>> {
    (0..k)
        .map(|_| {
            let mut row: Vec<BigRational> =
                (0..m - 1).map(|_| ratio(r.gen_range(-9..=9), r.gen_range(1..=6))).collect();
            let s: BigRational = row.iter().sum();
            row.push(-s);
            row
        })
        .collect()
}

fn spiess() -> CheckResult {
    let mut r = rng(11);
    let mut bad = Vec::new();
    let mut count = 0;
    let unit = BigRational::one();
    for m in 1..=4 {
        for k in 1..=m {
            for _ in 0..50 {
                let c = zero_row_sum_matrix(&mut r, k, m);
                let rep = spiess_det_check(&c, &unit).map_err(e)?;
                count += 1;
                if !rep.holds() {
                    bad.push(format!("{k}x{m}: det {} vs sum {}", rep.det_side, rep.sum_side));
                }
            }
        }
    }
    Ok((bad.is_empty(), format!("{count} matrices; {} failures {}", bad.len(), first(&bad))))
}

fn flagship() -> CheckResult {
    let p = 3;
    let qt = pad(p, 12);
    let branch = LogBranch::new(qt.clone()).map_err(e)?;
    let mut bad = Vec::new();
    // data from the bare axis measure: both sides vanish identically
    let axis_c = HarmonicCocycle::axis_cocycle(&qt, 10).map_err(e)?;
    let axis_d = build_gross_data_from_cocycle(&[axis_c.clone()], 5).map_err(e)?;
    let chi = trivial_character(axis_d.tower(), p, N).map_err(e)?;
    let axis_rep = leading_term_check(&axis_d, &[axis_c], &branch, &chi, 8).map_err(e)?;
    if !axis_rep.lower_vanish || axis_rep.derivative.val_or_prec() < N - 6 || axis_rep.predicted.val_or_prec() < N - 6 {
        bad.push(format!("axis: c = {:?}, predicted {}", axis_rep.coeffs, axis_rep.predicted));
    }
    // data from the axis plus a γ-orbit of atoms: a nonzero derivative
    let c = HarmonicCocycle::orbit_cocycle(&qt, 1, &[(rat(4), 1), (rat(1), -1)], 22).map_err(e)?;
    let d = build_gross_data_from_cocycle(&[c.clone()], 5).map_err(e)?;
    let chi = trivial_character(d.tower(), p, N).map_err(e)?;
    let rep = leading_term_check(&d, &[c], &branch, &chi, 20).map_err(e)?;
    let c0 = rep.coeffs[0].val_or_prec();
    if c0 < N - 5 {
        bad.push(format!("c0 = {}", rep.coeffs[0]));
    }
    if rep.derivative.is_zero() || rep.agreement < N - 6 {
        bad.push(format!("c1 = {} vs h·L·μ = {}", rep.derivative, rep.predicted));
    }
    if !rep.branch_consistent {
        bad.push("branch does not kill q̃".into());
    }
    Ok((
        bad.is_empty(),
        format!(
            "orbit data: c0 zero to {c0} digits, c1 = {} agrees with h·L·μ(Z_p) to {} digits (L = {}); {}",
            rep.derivative,
            rep.agreement,
            rep.l_invariants[0],
            first(&bad)
        ),
    ))
}

fn rank_two() -> CheckResult {
    let p = 3;
    let c1 = HarmonicCocycle::orbit_cocycle(&pad(p, 12), 1, &[(rat(4), 1), (rat(1), -1)], 8).map_err(e)?;
    let c2 = HarmonicCocycle::orbit_cocycle(&pad(p, 21), 1, &[(rat(4), 1), (rat(1), -1)], 8).map_err(e)?;
    let d = build_gross_data_from_cocycle(&[c1, c2], 3).map_err(e)?;
    let chi = trivial_character(d.tower(), p, N).map_err(e)?;
    let logs = crate::theta::built_logs(&d, &LogBranch::iwasawa(p, N)).map_err(e)?;
    let dir: BTreeMap<String, PadicNumber> = logs.iter().map(|l| (l.sigma().to_string(), PadicNumber::one(p, N))).collect();
    let s = crate::theta::l_series(&d, &chi, &logs, &dir, 2).map_err(e)?;
    let v0 = s.coeffs[0].val_or_prec();
    let v1 = s.coeffs[1].val_or_prec();
    let ok = v0 >= N - 5 && v1 >= N - 5;
    Ok((ok, format!("c0, c1 zero to {v0}, {v1} digits; c2 = {}", s.coeffs[2])))
}

#[derive(Deserialize)]
struct ToricFixture {
    case: String,
    params: LocalParamsFile,
    expected: String,
}

fn local_formulas() -> CheckResult {
    let mut r = rng(14);
    let mut bad = Vec::new();
    let mut zeta_cases = 0;
    while zeta_cases < 1000 {
        let mut q = || ratio(r.gen_range(-12..=12), r.gen_range(1..=12));
        let (mu1, mu2, chi, dfac) = (q(), q(), q(), q());
        let special = r.gen_bool(0.3);
        let q_inv = ratio(1, [2, 3, 4, 5, 7, 9][r.gen_range(0..6)]);
        let x = q_inv.clone() * ratio(r.gen_range(1..=3), 4);
        let t: u32 = r.gen_range(0..10);
        let case = if special { RepCase::Special { mu: mu1.clone() } } else { RepCase::Unramified { mu1, mu2 } };
        let z = match zeta_integral_check(&case, &chi, &x, &dfac, t) {
            Ok(z) => z,
            Err(LocalError::DivergentParameters(_)) | Err(LocalError::Degenerate) | Err(LocalError::PoleAtS) => continue,
            Err(err) => return Err(err.to_string()),
        };
        zeta_cases += 1;
        // independent partial sum Σ W⁰(ϖ^n) χ(ϖ)^n |ϖ|^{n(s−1/2)}, with x = |ϖ|^s
        let mut partial = BigRational::zero();
        for n in 0..=t as i64 {
            let w = whittaker_value(&case, n, &q_inv).map_err(e)?;
            let term = w.times_power(&q_inv, &BigRational::new(BigInt::from(-n), BigInt::from(2)));
            let c = term.as_rational().ok_or("W⁰ times |ϖ|^{-n/2} should be rational")?.clone();
            partial += c * num_traits::pow(&chi * &x, n as usize);
        }
        partial *= &dfac;
        if partial != z.partial || !z.holds() {
            bad.push(format!("zeta at {case:?}, χ={chi}, X={x}, T={t}"));
        }
    }
    let fixtures: Vec<ToricFixture> = serde_json::from_str(include_str!("../tests/fixtures/toric_p.json")).map_err(e)?;
    let mut seen = BTreeSet::new();
    for f in &fixtures {
        let case = ToricCase::parse(&f.case).ok_or_else(|| format!("unknown case {}", f.case))?;
        seen.insert(case);
        let params = LocalParams::try_from(f.params.clone()).map_err(e)?;
        let got = toric_p_value(case, &params).map_err(e)?.to_string();
        if got != f.expected {
            bad.push(format!("toric {}: {got} vs {}", f.case, f.expected));
        }
    }
    if seen.len() != ToricCase::ALL.len() {
        bad.push(format!("fixtures cover {} of {} cases", seen.len(), ToricCase::ALL.len()));
    }
    let factorized: Vec<(String, RootNumber)> =
        ["3", "5", "7"].iter().map(|s| (s.to_string(), RootNumber::Factorized { mu_squared_is_abs: true })).collect();
    let (is_one, expr) = period_ratio_check(&factorized).map_err(e)?;
    if !is_one {
        bad.push(format!("period ratio reduced to {expr}"));
    }
    let (control, _) = period_ratio_check(&[("3".into(), RootNumber::Factorized { mu_squared_is_abs: false })]).map_err(e)?;
    if control {
        bad.push("unfactorized root number reduced to 1".into());
    }
    Ok((
        bad.is_empty(),
        format!("{zeta_cases} zeta sets, {} toric fixtures, period ratio -> {expr}; {}", fixtures.len(), first(&bad)),
    ))
}
