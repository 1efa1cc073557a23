//! Ring-class-group towers as ingested data: finite abelian levels with
//! projections, the `log_σ` functionals on the free quotient, the analytic
//! family `ε^s`, and finite-order characters with their conductors.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{exp_p, PadicError, PadicNumber};

/// Largest group the brute-force checks will enumerate.
const ENUM_LIMIT: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnticycloError {
    #[error("s_{sigma} has valuation {val}, the family needs at least {need}")]
    DomainViolation { sigma: String, val: i64, need: i64 },
    #[error("character is not multiplicative: {0}")]
    NotMultiplicative(String),
    #[error("level {0} is not in the tower")]
    MissingLevel(String),
    #[error("no projection from {0} to {1}")]
    NoProjection(String, String),
    #[error("bad group element {0}")]
    BadElement(String),
    #[error("tower format: {0}")]
    Format(String),
    #[error("group of order {0} is too large to enumerate")]
    TooLarge(u64),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// A level index `n⃗`, one entry per tower prime.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LevelIndex(pub Vec<u32>);

impl LevelIndex {
    pub fn zero(r: usize) -> Self {
        LevelIndex(vec![0; r])
    }

    pub fn single(n: u32) -> Self {
        LevelIndex(vec![n])
    }

    /// Componentwise `self ≥ other`.
    pub fn dominates(&self, other: &LevelIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for LevelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl FromStr for LevelIndex {
    type Err = AnticycloError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches("n=").trim();
        let inner = t
            .strip_prefix('[')
            .and_then(|x| x.strip_suffix(']'))
            .ok_or_else(|| AnticycloError::Format(format!("level {s:?}")))?;
        if inner.trim().is_empty() {
            return Ok(LevelIndex(Vec::new()));
        }
        inner
            .split(',')
            .map(|x| x.trim().parse::<u32>().map_err(|_| AnticycloError::Format(format!("level {s:?}"))))
            .collect::<Result<_, _>>()
            .map(LevelIndex)
    }
}

/// An element of a product of cyclic groups, as reduced exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElem(pub Vec<u64>);

impl fmt::Display for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for GroupElem {
    type Err = AnticycloError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(|| AnticycloError::BadElement(s.to_string()))?;
        if inner.trim().is_empty() {
            return Ok(GroupElem(Vec::new()));
        }
        inner
            .split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|_| AnticycloError::BadElement(s.to_string())))
            .collect::<Result<_, _>>()
            .map(GroupElem)
    }
}

/// One level `G_n⃗ = ∏ Z/d_i` with factor labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    orders: Vec<u64>,
    labels: Vec<String>,
}

impl FiniteAbelianGroup {
    pub fn new(orders: Vec<u64>, labels: Vec<String>) -> Result<Self, AnticycloError> {
        if orders.iter().any(|&d| d == 0) {
            return Err(AnticycloError::Format("cyclic order 0".into()));
        }
        if labels.len() != orders.len() {
            return Err(AnticycloError::Format("label count differs from factor count".into()));
        }
        let distinct: HashSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(AnticycloError::Format("duplicate factor label".into()));
        }
        Ok(FiniteAbelianGroup { orders, labels })
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn identity(&self) -> GroupElem {
        GroupElem(vec![0; self.orders.len()])
    }

    pub fn generator(&self, i: usize) -> GroupElem {
        let mut e = self.identity();
        e.0[i] = 1 % self.orders[i];
        e
    }

    /// Reduces arbitrary integer exponents into the group.
    pub fn reduce(&self, exps: &[i64]) -> GroupElem {
        GroupElem(exps.iter().zip(&self.orders).map(|(&e, &d)| e.rem_euclid(d as i64) as u64).collect())
    }

    pub fn contains(&self, g: &GroupElem) -> bool {
        g.0.len() == self.orders.len() && g.0.iter().zip(&self.orders).all(|(e, d)| e < d)
    }

    pub fn op(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        GroupElem(a.0.iter().zip(&b.0).zip(&self.orders).map(|((x, y), d)| (x + y) % d).collect())
    }

    pub fn inverse(&self, a: &GroupElem) -> GroupElem {
        GroupElem(a.0.iter().zip(&self.orders).map(|(x, d)| (d - x) % d).collect())
    }

    /// All elements in lexicographic order.
    pub fn elements(&self) -> Result<Vec<GroupElem>, AnticycloError> {
        let n = self.order();
        if n > ENUM_LIMIT {
            return Err(AnticycloError::TooLarge(n));
        }
        let mut out = Vec::with_capacity(n as usize);
        let mut cur = vec![0u64; self.orders.len()];
        loop {
            out.push(GroupElem(cur.clone()));
            let mut i = cur.len();
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < self.orders[i] {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    pub fn factor_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A homomorphism between levels, given by the images of the source generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    images: Vec<Vec<i64>>,
}

impl Projection {
    pub fn new(images: Vec<Vec<i64>>) -> Self {
        Projection { images }
    }

    pub fn images(&self) -> &[Vec<i64>] {
        &self.images
    }

    pub fn apply(&self, target: &FiniteAbelianGroup, g: &GroupElem) -> GroupElem {
        let mut acc = vec![0i64; target.orders.len()];
        for (e, img) in g.0.iter().zip(&self.images) {
            for ((a, x), d) in acc.iter_mut().zip(img).zip(&target.orders) {
                *a = (*a + (*e as i64 % *d as i64) * x.rem_euclid(*d as i64)).rem_euclid(*d as i64);
            }
        }
        target.reduce(&acc)
    }

    pub fn compose(&self, after: &Projection, mid: &FiniteAbelianGroup, target: &FiniteAbelianGroup) -> Projection {
        let images = self
            .images
            .iter()
            .map(|img| {
                let m = mid.reduce(img);
                after.apply(target, &m).0.iter().map(|&x| x as i64).collect()
            })
            .collect();
        Projection { images }
    }
}

/// A tower of finite abelian levels with projections `π_{n⃗′,n⃗}`.
#[derive(Clone, Debug)]
pub struct ClassGroupTower {
    primes: Vec<u32>,
    c0: i64,
    conductor: String,
    levels: BTreeMap<LevelIndex, FiniteAbelianGroup>,
    explicit: BTreeMap<(LevelIndex, LevelIndex), Projection>,
    free: Vec<String>,
}

impl ClassGroupTower {
    pub fn new(
        primes: Vec<u32>,
        c0: i64,
        levels: BTreeMap<LevelIndex, FiniteAbelianGroup>,
        free: Vec<String>,
    ) -> Result<Self, AnticycloError> {
        if c0 == 0 {
            return Err(AnticycloError::Format("c0 must be nonzero".into()));
        }
        for n in levels.keys() {
            if n.0.len() != primes.len() {
                return Err(AnticycloError::Format(format!("level {n} has the wrong length")));
            }
        }
        Ok(ClassGroupTower { primes, c0, conductor: String::new(), levels, explicit: BTreeMap::new(), free })
    }

    pub fn with_conductor(mut self, tag: &str) -> Self {
        self.conductor = tag.to_string();
        self
    }

    pub fn with_projection(mut self, from: LevelIndex, to: LevelIndex, proj: Projection) -> Self {
        self.explicit.insert((from, to), proj);
        self
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn c0(&self) -> i64 {
        self.c0
    }

    pub fn conductor(&self) -> &str {
        &self.conductor
    }

    pub fn free_labels(&self) -> &[String] {
        &self.free
    }

    pub fn levels(&self) -> impl Iterator<Item = (&LevelIndex, &FiniteAbelianGroup)> {
        self.levels.iter()
    }

    pub fn level(&self, n: &LevelIndex) -> Result<&FiniteAbelianGroup, AnticycloError> {
        self.levels.get(n).ok_or_else(|| AnticycloError::MissingLevel(n.to_string()))
    }

    /// Canonical reduction: each target factor takes the source factor with the same label.
    fn canonical(&self, src: &FiniteAbelianGroup, dst: &FiniteAbelianGroup) -> Option<Projection> {
        let mut images = vec![vec![0i64; dst.orders.len()]; src.orders.len()];
        for (j, label) in dst.labels.iter().enumerate() {
            let i = src.factor_index(label)?;
            if src.orders[i] % dst.orders[j] != 0 {
                return None;
            }
            images[i][j] = 1;
        }
        Some(Projection { images })
    }

    /// The projection `π_{from,to}`: an explicit one, a composite through an
    /// explicit intermediate step, or the canonical label reduction.
    pub fn projection(&self, from: &LevelIndex, to: &LevelIndex) -> Result<Projection, AnticycloError> {
        let none = || AnticycloError::NoProjection(from.to_string(), to.to_string());
        if !from.dominates(to) {
            return Err(none());
        }
        let src = self.level(from)?;
        let dst = self.level(to)?;
        if from == to {
            let images = (0..src.orders.len())
                .map(|i| (0..src.orders.len()).map(|j| i64::from(i == j)).collect())
                .collect();
            return Ok(Projection { images });
        }
        if let Some(p) = self.explicit.get(&(from.clone(), to.clone())) {
            return Ok(p.clone());
        }
        for ((a, mid), first) in &self.explicit {
            if a == from && mid != to && mid.dominates(to) {
                if let Ok(rest) = self.projection(mid, to) {
                    return Ok(first.compose(&rest, self.level(mid)?, dst));
                }
            }
        }
        self.canonical(src, dst).ok_or_else(none)
    }

    pub fn project(&self, from: &LevelIndex, to: &LevelIndex, g: &GroupElem) -> Result<GroupElem, AnticycloError> {
        let dst = self.level(to)?;
        Ok(self.projection(from, to)?.apply(dst, g))
    }

    pub fn to_file(&self) -> TowerFile {
        TowerFile {
            primes: self.primes.clone(),
            c0: self.c0,
            conductor: (!self.conductor.is_empty()).then(|| self.conductor.clone()),
            levels: self
                .levels
                .iter()
                .map(|(n, g)| LevelSpec { n: n.0.clone(), cyclic: g.orders.clone(), labels: Some(g.labels.clone()) })
                .collect(),
            projections: self
                .explicit
                .iter()
                .map(|((a, b), p)| (format!("{a}->{b}"), p.images.clone()))
                .collect(),
            free: self.free.clone(),
            logs: BTreeMap::new(),
        }
    }

    pub fn from_file(f: &TowerFile) -> Result<Self, AnticycloError> {
        let mut levels = BTreeMap::new();
        for spec in &f.levels {
            let labels = match &spec.labels {
                Some(l) => l.clone(),
                None => (0..spec.cyclic.len()).map(|i| format!("g{i}")).collect(),
            };
            let n = LevelIndex(spec.n.clone());
            if levels.insert(n.clone(), FiniteAbelianGroup::new(spec.cyclic.clone(), labels)?).is_some() {
                return Err(AnticycloError::Format(format!("duplicate level {n}")));
            }
        }
        let mut t = ClassGroupTower::new(f.primes.clone(), f.c0, levels, f.free.clone())?;
        if let Some(c) = &f.conductor {
            t.conductor = c.clone();
        }
        for (key, images) in &f.projections {
            let (a, b) = key
                .split_once("->")
                .ok_or_else(|| AnticycloError::Format(format!("projection key {key:?}")))?;
            t.explicit.insert((a.parse()?, b.parse()?), Projection { images: images.clone() });
        }
        Ok(t)
    }

    /// Reads a tower file together with its `log_σ` table.
    pub fn from_json(s: &str) -> Result<(Self, Vec<LogFunctional>), AnticycloError> {
        let f: TowerFile = serde_json::from_str(s).map_err(|e| AnticycloError::Format(e.to_string()))?;
        let t = Self::from_file(&f)?;
        let logs = f
            .logs
            .iter()
            .map(|(sigma, vals)| {
                let values = vals
                    .iter()
                    .map(|(g, v)| Ok((g.clone(), v.parse::<PadicNumber>()?)))
                    .collect::<Result<BTreeMap<_, _>, AnticycloError>>()?;
                LogFunctional::new(&t, sigma, values)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((t, logs))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LevelSpec {
    pub n: Vec<u32>,
    pub cyclic: Vec<u64>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

/// The JSON tower format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TowerFile {
    pub primes: Vec<u32>,
    pub c0: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conductor: Option<String>,
    pub levels: Vec<LevelSpec>,
    #[serde(default)]
    pub projections: BTreeMap<String, Vec<Vec<i64>>>,
    #[serde(default)]
    pub free: Vec<String>,
    #[serde(default)]
    pub logs: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TowerReport {
    pub violations: Vec<String>,
}

impl TowerReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn subgroup_size(g: &FiniteAbelianGroup, gens: &[GroupElem]) -> u64 {
    let mut seen: HashSet<GroupElem> = HashSet::new();
    let mut stack = vec![g.identity()];
    seen.insert(g.identity());
    while let Some(x) = stack.pop() {
        for s in gens {
            let y = g.op(&x, s);
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    seen.len() as u64
}

/// Structural checks: level zero present, every comparable pair has a
/// well-defined surjective projection, and projections compose.
pub fn tower_validate(t: &ClassGroupTower) -> TowerReport {
    let mut violations = Vec::new();
    let zero = LevelIndex::zero(t.primes.len());
    if !t.levels.contains_key(&zero) {
        violations.push(format!("level {zero} is missing"));
    }
    for label in &t.free {
        if t.levels.values().all(|g| g.factor_index(label).is_none()) {
            violations.push(format!("free factor {label} appears at no level"));
        }
    }
    let keys: Vec<&LevelIndex> = t.levels.keys().collect();
    for a in &keys {
        for b in &keys {
            if a == b || !a.dominates(b) {
                continue;
            }
            let (src, dst) = (&t.levels[*a], &t.levels[*b]);
            let proj = match t.projection(a, b) {
                Ok(p) => p,
                Err(e) => {
                    violations.push(e.to_string());
                    continue;
                }
            };
            if proj.images.len() != src.orders.len() || proj.images.iter().any(|i| i.len() != dst.orders.len()) {
                violations.push(format!("projection {a}->{b} has the wrong shape"));
                continue;
            }
            // well-defined: d_i · image_i = 0
            for (i, img) in proj.images.iter().enumerate() {
                let scaled: Vec<i64> = img.iter().map(|x| x * src.orders[i] as i64).collect();
                if dst.reduce(&scaled) != dst.identity() {
                    violations.push(format!("projection {a}->{b} is not well defined on factor {}", src.labels[i]));
                }
            }
            let gens: Vec<GroupElem> = proj.images.iter().map(|i| dst.reduce(i)).collect();
            if dst.order() <= ENUM_LIMIT && subgroup_size(dst, &gens) != dst.order() {
                violations.push(format!("projection {a}->{b} is not surjective"));
            }
            for c in &keys {
                if c == b || c == a || !b.dominates(c) {
                    continue;
                }
                let (Ok(bc), Ok(ac)) = (t.projection(b, c), t.projection(a, c)) else {
                    continue;
                };
                let dst_c = &t.levels[*c];
                let broken = (0..src.orders.len()).any(|i| {
                    let g = src.generator(i);
                    bc.apply(dst_c, &proj.apply(dst, &g)) != ac.apply(dst_c, &g)
                });
                if broken {
                    violations.push(format!("projections {a}->{b}->{c} and {a}->{c} disagree"));
                }
            }
        }
    }
    TowerReport { violations }
}

/// `log_σ` on the free quotient, given by its values on the free generators.
/// Torsion factors are killed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogFunctional {
    sigma: String,
    values: BTreeMap<String, PadicNumber>,
}

impl LogFunctional {
    pub fn new(t: &ClassGroupTower, sigma: &str, values: BTreeMap<String, PadicNumber>) -> Result<Self, AnticycloError> {
        let floor = -vp_int(t.primes.first().copied().unwrap_or(2), t.c0) - 1;
        for (g, v) in &values {
            if !t.free.contains(g) {
                return Err(AnticycloError::Format(format!("log_{sigma} is given on {g}, which is not a free factor")));
            }
            if let Some(val) = v.valuation() {
                if val < floor {
                    return Err(AnticycloError::Format(format!(
                        "log_{sigma}({g}) has valuation {val} below {floor}"
                    )));
                }
            }
        }
        Ok(LogFunctional { sigma: sigma.to_string(), values })
    }

    pub fn sigma(&self) -> &str {
        &self.sigma
    }

    pub fn generator_value(&self, label: &str) -> Option<&PadicNumber> {
        self.values.get(label)
    }

    /// `log_σ` of the lift of `g` with exponents in `[0, d_i)`.
    pub fn eval(&self, group: &FiniteAbelianGroup, g: &GroupElem, p: u32, prec: i64) -> PadicNumber {
        group
            .labels
            .iter()
            .zip(&g.0)
            .filter_map(|(l, &e)| self.values.get(l).map(|v| v.scale_int(e as i64)))
            .fold(PadicNumber::zero(p, prec), |acc, x| &acc + &x)
    }
}

fn vp_int(p: u32, n: i64) -> i64 {
    let mut n = n.unsigned_abs();
    let mut v = 0;
    while n != 0 && n % p as u64 == 0 {
        n /= p as u64;
        v += 1;
    }
    v
}

/// A point `s⃗` of the family, with `|s_σ| ≤ |c₀|_p p^{-2}` enforced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterFamilyPoint {
    s: BTreeMap<String, PadicNumber>,
}

impl CharacterFamilyPoint {
    pub fn new(c0: i64, s: BTreeMap<String, PadicNumber>) -> Result<Self, AnticycloError> {
        for (sigma, v) in &s {
            let need = vp_int(v.p(), c0) + 2;
            if let Some(val) = v.valuation() {
                if val < need {
                    return Err(AnticycloError::DomainViolation { sigma: sigma.clone(), val, need });
                }
            }
        }
        Ok(CharacterFamilyPoint { s })
    }

    pub fn zero() -> Self {
        CharacterFamilyPoint { s: BTreeMap::new() }
    }

    pub fn get(&self, sigma: &str) -> Option<&PadicNumber> {
        self.s.get(sigma)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.s.clone();
        for (k, v) in &other.s {
            let e = s.entry(k.clone()).or_insert_with(|| PadicNumber::zero(v.p(), v.prec()));
            *e = &*e + v;
        }
        CharacterFamilyPoint { s }
    }
}

/// `Σ_σ s_σ·log_σ(g)`.
pub fn family_exponent(
    logs: &[LogFunctional],
    s: &CharacterFamilyPoint,
    group: &FiniteAbelianGroup,
    g: &GroupElem,
    p: u32,
    prec: i64,
) -> PadicNumber {
    logs.iter()
        .filter_map(|l| s.get(&l.sigma).map(|si| si * &l.eval(group, g, p, prec)))
        .fold(PadicNumber::zero(p, prec), |acc, x| &acc + &x)
}

/// `ε^{s⃗}(g) = exp_p(Σ s_σ log_σ(g))`.
pub fn epsilon_eval(
    logs: &[LogFunctional],
    s: &CharacterFamilyPoint,
    group: &FiniteAbelianGroup,
    g: &GroupElem,
    p: u32,
    prec: i64,
) -> Result<PadicNumber, AnticycloError> {
    Ok(exp_p(&family_exponent(logs, s, group, g, p, prec))?)
}

/// A finite-order character, stored by its values on the generators of one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteCharacter {
    level: LevelIndex,
    values: Vec<PadicNumber>,
    conductor: LevelIndex,
}

impl FiniteCharacter {
    pub fn level(&self) -> &LevelIndex {
        &self.level
    }

    pub fn conductor(&self) -> &LevelIndex {
        &self.conductor
    }

    pub fn generator_values(&self) -> &[PadicNumber] {
        &self.values
    }

    /// Value at an element of the character's own level.
    pub fn eval_here(&self, g: &GroupElem) -> Result<PadicNumber, AnticycloError> {
        let p = self.values.first().map(|v| v.p()).unwrap_or(2);
        let prec = self.values.iter().map(|v| v.prec()).min().unwrap_or(1);
        self.values.iter().zip(&g.0).try_fold(PadicNumber::one(p, prec), |acc, (v, &e)| {
            Ok(&acc * &v.pow(e as i64)?)
        })
    }

    /// Value at an element of any level that projects onto the character's level.
    pub fn eval(&self, t: &ClassGroupTower, level: &LevelIndex, g: &GroupElem) -> Result<PadicNumber, AnticycloError> {
        let h = t.project(level, &self.level, g)?;
        self.eval_here(&h)
    }

    /// The character `χ∘π` at a higher level.
    pub fn pullback(&self, t: &ClassGroupTower, level: &LevelIndex) -> Result<FiniteCharacter, AnticycloError> {
        let g = t.level(level)?;
        let values = (0..g.orders.len())
            .map(|i| self.eval(t, level, &g.generator(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FiniteCharacter { level: level.clone(), values, conductor: self.conductor.clone() })
    }

    /// Pointwise product, computed at the larger of the two levels.
    pub fn mul(&self, other: &FiniteCharacter, t: &ClassGroupTower) -> Result<FiniteCharacter, AnticycloError> {
        let (hi, lo) = if self.level.dominates(&other.level) { (self, other) } else { (other, self) };
        if !hi.level.dominates(&lo.level) {
            return Err(AnticycloError::NoProjection(hi.level.to_string(), lo.level.to_string()));
        }
        let lo_up = lo.pullback(t, &hi.level)?;
        let values: Vec<PadicNumber> = hi.values.iter().zip(&lo_up.values).map(|(a, b)| a * b).collect();
        finite_character(t, &hi.level, values)
    }
}

/// Builds a character of `G_n⃗` from generator values (roots of unity embedded
/// in Q_p, or approximate p-power roots `1 + p^{N−1}a` at precision N) and
/// computes its conductor, the minimal level it factors through.
pub fn finite_character(
    t: &ClassGroupTower,
    level: &LevelIndex,
    values: Vec<PadicNumber>,
) -> Result<FiniteCharacter, AnticycloError> {
    let g = t.level(level)?;
    if values.len() != g.orders.len() {
        return Err(AnticycloError::Format(format!("{} values for {} generators", values.len(), g.orders.len())));
    }
    for ((v, &d), label) in values.iter().zip(&g.orders).zip(&g.labels) {
        let one = PadicNumber::one(v.p(), v.prec());
        let r = v.pow(d as i64)?;
        if !(&r - &one).is_zero() {
            return Err(AnticycloError::NotMultiplicative(format!(
                "value on {label} does not have order dividing {d}"
            )));
        }
    }
    let mut chi = FiniteCharacter { level: level.clone(), values, conductor: level.clone() };
    chi.conductor = conductor_of(t, &chi)?;
    Ok(chi)
}

/// The trivial character at level zero.
pub fn trivial_character(t: &ClassGroupTower, p: u32, prec: i64) -> Result<FiniteCharacter, AnticycloError> {
    let zero = LevelIndex::zero(t.primes.len());
    let n = t.level(&zero)?.orders.len();
    finite_character(t, &zero, vec![PadicNumber::one(p, prec); n])
}

fn factors_through(t: &ClassGroupTower, chi: &FiniteCharacter, to: &LevelIndex) -> Result<bool, AnticycloError> {
    let src = t.level(&chi.level)?;
    let proj = t.projection(&chi.level, to)?;
    let dst = t.level(to)?;
    let mut seen: HashMap<GroupElem, PadicNumber> = HashMap::new();
    for g in src.elements()? {
        let v = chi.eval_here(&g)?;
        let img = proj.apply(dst, &g);
        match seen.get(&img) {
            Some(w) if !(w - &v).is_zero() => return Ok(false),
            Some(_) => {}
            None => {
                seen.insert(img, v);
            }
        }
    }
    Ok(true)
}

fn conductor_of(t: &ClassGroupTower, chi: &FiniteCharacter) -> Result<LevelIndex, AnticycloError> {
    let candidates: BTreeSet<(u32, LevelIndex)> = t
        .levels
        .keys()
        .filter(|n| chi.level.dominates(n))
        .map(|n| (n.total(), n.clone()))
        .collect();
    for (_, n) in candidates {
        if t.projection(&chi.level, &n).is_ok() && factors_through(t, chi, &n)? {
            return Ok(n);
        }
    }
    Ok(chi.level.clone())
}

/// The split-prime tower `G_n = Z/h × Z/(p−1) × Z/p^{n−1}` (level 0: `Z/h`)
/// for levels `0..=max_level`, with free factor `gamma`.
pub fn split_tower(p: u32, h: u64, max_level: u32) -> ClassGroupTower {
    let mut levels = BTreeMap::new();
    for n in 0..=max_level {
        let g = if n == 0 {
            FiniteAbelianGroup::new(vec![h], vec!["pi".into()])
        } else {
            FiniteAbelianGroup::new(
                vec![h, u64::from(p - 1), u64::from(p).pow(n - 1)],
                vec!["pi".into(), "zeta".into(), "gamma".into()],
            )
        };
        levels.insert(LevelIndex::single(n), g.expect("valid shape"));
    }
    ClassGroupTower::new(vec![p], 1, levels, vec!["gamma".into()]).expect("valid tower")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pad(p: u32, n: i64) -> PadicNumber {
        PadicNumber::from_int(p, n, 20)
    }

    #[test]
    fn split_tower_is_valid() {
        let t = split_tower(3, 2, 4);
        assert!(tower_validate(&t).is_valid(), "{:?}", tower_validate(&t));
        let g = GroupElem(vec![1, 1, 5]);
        let img = t.project(&LevelIndex::single(3), &LevelIndex::single(2), &g).unwrap();
        assert_eq!(img, GroupElem(vec![1, 1, 2]));
    }

    #[test]
    fn broken_projection_is_reported() {
        let t = split_tower(3, 1, 2).with_projection(
            LevelIndex::single(2),
            LevelIndex::single(1),
            Projection::new(vec![vec![0, 0, 0], vec![0, 0, 0], vec![0, 0, 0]]),
        );
        let r = tower_validate(&t);
        assert!(r.violations.iter().any(|v| v.contains("not surjective")), "{r:?}");
    }

    #[test]
    fn epsilon_series_example() {
        let t = split_tower(5, 1, 2);
        let l = LogFunctional::new(&t, "s", [("gamma".to_string(), pad(5, 5))].into()).unwrap();
        let g = t.level(&LevelIndex::single(2)).unwrap().clone();
        // s = p violates the family bound
        let bad = CharacterFamilyPoint::new(1, [("s".to_string(), pad(5, 5))].into());
        assert!(matches!(bad, Err(AnticycloError::DomainViolation { .. })));
        let s = CharacterFamilyPoint::new(1, [("s".to_string(), pad(5, 25))].into()).unwrap();
        let e = epsilon_eval(&[l], &s, &g, &g.generator(2), 5, 20).unwrap();
        assert_eq!(e, exp_p(&pad(5, 125)).unwrap());
    }

    #[test]
    fn conductor_of_order_p_character() {
        let t = split_tower(3, 1, 3);
        let one = pad(3, 1);
        // order p on gamma at level 2, embedded as 1 + p^{N-1}
        let zp = &one + &PadicNumber::from_scaled(3, 20, 19, &1.into());
        let chi = finite_character(&t, &LevelIndex::single(3), vec![one.clone(), one.clone(), zp]).unwrap();
        assert_eq!(chi.conductor(), &LevelIndex::single(2));
        let sign = finite_character(&t, &LevelIndex::single(2), vec![one.clone(), -&one, one.clone()]).unwrap();
        assert_eq!(sign.conductor(), &LevelIndex::single(1));
        let triv = finite_character(&t, &LevelIndex::single(3), vec![one.clone(); 3]).unwrap();
        assert_eq!(triv.conductor(), &LevelIndex::single(0));
        assert!(matches!(
            finite_character(&t, &LevelIndex::single(2), vec![one.clone(), pad(3, 2), one]),
            Err(AnticycloError::NotMultiplicative(_))
        ));
    }
}
