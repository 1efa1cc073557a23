//! Theta elements over ring-class towers: Gross-point value tables, their
//! compatibility under projection, character values, the interpolation
//! multipliers, log-power integrals, and the leading-term check at an
//! exceptional zero.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anticyclo::{
    AnticycloError, ClassGroupTower, FiniteAbelianGroup, FiniteCharacter, GroupElem, LevelIndex, LogFunctional,
};
use crate::distribution::{default_z0, l_invariant, DistError};
use crate::harmonic::{HarmonicCocycle, HarmonicError};
use crate::padic::{ppow, teichmuller, LogBranch, PadicError, PadicNumber};
use crate::tree::{HyperbolicAxis, TreeEdge, TreeVertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThetaError {
    #[error("level {0} is not in the data")]
    MissingLevel(String),
    #[error("no level at or above the conductor {0}")]
    LevelUnavailable(String),
    #[error("no stabilization: best {best} at level {level}, consecutive agreement {gap}")]
    NoStabilization { best: PadicNumber, level: String, gap: i64 },
    #[error("inconsistent multiplier parameters: {0}")]
    InconsistentCase(String),
    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),
    #[error("table too shallow: {0}")]
    DepthTooShallow(String),
    #[error("data format: {0}")]
    Format(String),
    #[error(transparent)]
    Tower(#[from] AnticycloError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

impl From<HarmonicError> for ThetaError {
    fn from(e: HarmonicError) -> Self {
        match e {
            HarmonicError::OutOfTable(s) => ThetaError::DepthTooShallow(s),
            other => ThetaError::InvalidCocycle(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Ingested,
    Cocycle,
}

/// Value tables `φ†(a·ς^{(n⃗)})·ν(a)` per level, with the U_p-eigenvalues.
#[derive(Clone, Debug)]
pub struct GrossPointData {
    tower: ClassGroupTower,
    p: u32,
    prec: i64,
    alpha: Vec<PadicNumber>,
    split: Vec<bool>,
    values: BTreeMap<LevelIndex, BTreeMap<GroupElem, PadicNumber>>,
    provenance: Provenance,
}

impl GrossPointData {
    pub fn new(
        tower: ClassGroupTower,
        p: u32,
        prec: i64,
        alpha: Vec<PadicNumber>,
        split: Vec<bool>,
        values: BTreeMap<LevelIndex, BTreeMap<GroupElem, PadicNumber>>,
    ) -> Result<Self, ThetaError> {
        let r = tower.primes().len();
        if alpha.len() != r || split.len() != r {
            return Err(ThetaError::Format(format!("need {r} eigenvalues and split flags")));
        }
        for a in &alpha {
            if a.valuation() != Some(0) {
                return Err(ThetaError::Format(format!("α = {a} is not a unit")));
            }
        }
        for (n, row) in &values {
            let g = tower.level(n)?;
            if let Some(bad) = row.keys().find(|x| !g.contains(x)) {
                return Err(ThetaError::Format(format!("{bad} is not an element of level {n}")));
            }
        }
        Ok(GrossPointData { tower, p, prec, alpha, split, values, provenance: Provenance::Ingested })
    }

    /// Values 1 at the image of `g` (an element of `top`) and 0 elsewhere, α = 1.
    pub fn dirac(tower: ClassGroupTower, p: u32, prec: i64, top: &LevelIndex, g: &GroupElem) -> Result<Self, ThetaError> {
        let mut values = BTreeMap::new();
        let keys: Vec<LevelIndex> = tower.levels().map(|(n, _)| n.clone()).filter(|n| top.dominates(n)).collect();
        for n in keys {
            let img = tower.project(top, &n, g)?;
            values.insert(n, BTreeMap::from([(img, PadicNumber::one(p, prec))]));
        }
        let r = tower.primes().len();
        Self::new(tower, p, prec, vec![PadicNumber::one(p, prec); r], vec![true; r], values)
    }

    pub fn tower(&self) -> &ClassGroupTower {
        &self.tower
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn alpha(&self) -> &[PadicNumber] {
        &self.alpha
    }

    pub fn is_split(&self, i: usize) -> bool {
        self.split[i]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn levels(&self) -> impl Iterator<Item = &LevelIndex> {
        self.values.keys()
    }

    pub fn value(&self, n: &LevelIndex, g: &GroupElem) -> Result<PadicNumber, ThetaError> {
        let row = self.values.get(n).ok_or_else(|| ThetaError::MissingLevel(n.to_string()))?;
        Ok(row.get(g).cloned().unwrap_or_else(|| PadicNumber::zero(self.p, self.prec)))
    }

    pub fn set_value(&mut self, n: &LevelIndex, g: GroupElem, v: PadicNumber) -> Result<(), ThetaError> {
        let row = self.values.get_mut(n).ok_or_else(|| ThetaError::MissingLevel(n.to_string()))?;
        row.insert(g, v);
        Ok(())
    }

    pub fn scaled(&self, s: &PadicNumber) -> Self {
        let mut out = self.clone();
        for row in out.values.values_mut() {
            for v in row.values_mut() {
                *v = &*v * s;
            }
        }
        out
    }

    /// Violations of `Σ_{fiber} value = α_p · value` for each prime and each
    /// pair of levels differing by one step in that prime.
    pub fn trace_violations(&self) -> Result<Vec<String>, ThetaError> {
        let mut out = Vec::new();
        for (n, row) in &self.values {
            for i in 0..self.alpha.len() {
                let mut up = n.clone();
                up.0[i] += 1;
                let Some(urow) = self.values.get(&up) else { continue };
                let pushed = self.pushforward(urow, &up, n)?;
                let g = self.tower.level(n)?;
                for x in g.elements()? {
                    let lhs = pushed.get(&x).cloned().unwrap_or_else(|| PadicNumber::zero(self.p, self.prec));
                    let base = row.get(&x).cloned().unwrap_or_else(|| PadicNumber::zero(self.p, self.prec));
                    if !(&lhs - &(&self.alpha[i] * &base)).is_zero() {
                        out.push(format!("trace {up}->{n} fails at {x}"));
                    }
                }
            }
        }
        Ok(out)
    }

    fn pushforward(
        &self,
        row: &BTreeMap<GroupElem, PadicNumber>,
        from: &LevelIndex,
        to: &LevelIndex,
    ) -> Result<BTreeMap<GroupElem, PadicNumber>, ThetaError> {
        let proj = self.tower.projection(from, to)?;
        let dst = self.tower.level(to)?;
        let mut out: BTreeMap<GroupElem, PadicNumber> = BTreeMap::new();
        for (g, v) in row {
            let img = proj.apply(dst, g);
            let e = out.entry(img).or_insert_with(|| PadicNumber::zero(self.p, self.prec));
            *e = &*e + v;
        }
        Ok(out)
    }

    pub fn to_file(&self) -> GrossPointFile {
        GrossPointFile {
            tower: String::new(),
            alpha: self.alpha.iter().enumerate().map(|(i, a)| (i.to_string(), a.to_string())).collect(),
            split: self.split.iter().enumerate().map(|(i, s)| (i.to_string(), *s)).collect(),
            values: self
                .values
                .iter()
                .map(|(n, row)| {
                    let m = row.iter().filter(|(_, v)| !v.is_zero()).map(|(g, v)| (g.to_string(), v.to_string())).collect();
                    (format!("n={n}"), m)
                })
                .collect(),
            provenance: Some(self.provenance),
        }
    }

    /// Reads a data file against an already loaded tower. Eigenvalues and split
    /// flags are keyed by prime, or by position when primes repeat.
    pub fn from_file(f: &GrossPointFile, tower: ClassGroupTower) -> Result<Self, ThetaError> {
        let primes = tower.primes().to_vec();
        let p = *primes.first().ok_or_else(|| ThetaError::Format("tower has no primes".into()))?;
        let key = |i: usize| [primes[i].to_string(), i.to_string()];
        let mut alpha = Vec::new();
        let mut split = Vec::new();
        for i in 0..primes.len() {
            let a = key(i)
                .iter()
                .find_map(|k| f.alpha.get(k))
                .ok_or_else(|| ThetaError::Format(format!("no α for prime {}", primes[i])))?;
            alpha.push(a.parse::<PadicNumber>()?);
            split.push(key(i).iter().find_map(|k| f.split.get(k)).copied().unwrap_or(true));
        }
        let prec = alpha.iter().map(|a| a.prec()).min().unwrap_or(1);
        let mut values = BTreeMap::new();
        for (n, row) in &f.values {
            let n: LevelIndex = n.parse()?;
            let row = row
                .iter()
                .map(|(g, v)| Ok((g.parse::<GroupElem>()?, v.parse::<PadicNumber>()?)))
                .collect::<Result<BTreeMap<_, _>, ThetaError>>()?;
            values.insert(n, row);
        }
        let mut d = Self::new(tower, p, prec, alpha, split, values)?;
        d.provenance = f.provenance.unwrap_or(Provenance::Ingested);
        Ok(d)
    }
}

/// The JSON Gross-point data format; `tower` is a path resolved by the caller.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GrossPointFile {
    pub tower: String,
    pub alpha: BTreeMap<String, String>,
    #[serde(default)]
    pub split: BTreeMap<String, bool>,
    pub values: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// `Θ_n⃗ = (∏ α^{n})^{-1} Σ_a values[a]·[a]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaElement {
    level: LevelIndex,
    coeffs: BTreeMap<GroupElem, PadicNumber>,
}

impl ThetaElement {
    pub fn level(&self) -> &LevelIndex {
        &self.level
    }

    pub fn coeffs(&self) -> &BTreeMap<GroupElem, PadicNumber> {
        &self.coeffs
    }

    pub fn coeff(&self, g: &GroupElem, p: u32, prec: i64) -> PadicNumber {
        self.coeffs.get(g).cloned().unwrap_or_else(|| PadicNumber::zero(p, prec))
    }

    /// `Σ_a Θ[a]·χ(a)`.
    pub fn eval(&self, t: &ClassGroupTower, chi: &FiniteCharacter, p: u32, prec: i64) -> Result<PadicNumber, ThetaError> {
        self.coeffs.iter().try_fold(PadicNumber::zero(p, prec), |acc, (g, v)| {
            Ok(&acc + &(v * &chi.eval(t, &self.level, g)?))
        })
    }
}

pub fn theta_element(data: &GrossPointData, n: &LevelIndex) -> Result<ThetaElement, ThetaError> {
    let row = data.values.get(n).ok_or_else(|| ThetaError::MissingLevel(n.to_string()))?;
    let scale = data
        .alpha
        .iter()
        .zip(&n.0)
        .try_fold(PadicNumber::one(data.p, data.prec), |acc, (a, &k)| Ok::<_, PadicError>(&acc * &a.pow(-(k as i64))?))?;
    let coeffs = row.iter().map(|(g, v)| (g.clone(), v * &scale)).collect();
    Ok(ThetaElement { level: n.clone(), coeffs })
}

/// `π(Θ_{n⃗′}) = Θ_n⃗`, compared coefficientwise.
pub fn check_compatibility(data: &GrossPointData, upper: &LevelIndex, lower: &LevelIndex) -> Result<bool, ThetaError> {
    let hi = theta_element(data, upper)?;
    let lo = theta_element(data, lower)?;
    let pushed = data.pushforward(&hi.coeffs, upper, lower)?;
    let g = data.tower.level(lower)?;
    for x in g.elements()? {
        let a = pushed.get(&x).cloned().unwrap_or_else(|| PadicNumber::zero(data.p, data.prec));
        if !(&a - &lo.coeff(&x, data.p, data.prec)).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The smallest data level dominating the character's conductor.
pub fn level_for(data: &GrossPointData, chi: &FiniteCharacter) -> Result<LevelIndex, ThetaError> {
    data.values
        .keys()
        .filter(|n| n.dominates(chi.conductor()))
        .filter(|n| n.dominates(chi.level()) || chi.level().dominates(n))
        .min_by_key(|n| (n.total(), (*n).clone()))
        .cloned()
        .ok_or_else(|| ThetaError::LevelUnavailable(chi.conductor().to_string()))
}

fn character_at(data: &GrossPointData, chi: &FiniteCharacter, n: &LevelIndex) -> Result<FiniteCharacter, ThetaError> {
    if n.dominates(chi.level()) {
        Ok(chi.pullback(&data.tower, n)?)
    } else {
        // χ factors through its conductor, so restrict via the conductor level.
        let base = chi.pullback(&data.tower, chi.level())?;
        let cond = chi.conductor();
        let g = data.tower.level(cond)?;
        let lift = |i: usize| -> Result<PadicNumber, ThetaError> {
            let src = data.tower.level(chi.level())?;
            let target = g.generator(i);
            for x in src.elements()? {
                if data.tower.project(chi.level(), cond, &x)? == target {
                    return Ok(base.eval_here(&x)?);
                }
            }
            Err(ThetaError::LevelUnavailable(cond.to_string()))
        };
        let vals = (0..g.orders().len()).map(lift).collect::<Result<Vec<_>, _>>()?;
        let at_cond = crate::anticyclo::finite_character(&data.tower, cond, vals)?;
        Ok(at_cond.pullback(&data.tower, n)?)
    }
}

/// `𝓛(χ) = Θ(χ)` at the smallest level through which χ factors.
pub fn script_l(data: &GrossPointData, chi: &FiniteCharacter) -> Result<PadicNumber, ThetaError> {
    let n = level_for(data, chi)?;
    script_l_at(data, chi, &n)
}

pub fn script_l_at(data: &GrossPointData, chi: &FiniteCharacter, n: &LevelIndex) -> Result<PadicNumber, ThetaError> {
    if !n.dominates(chi.conductor()) {
        return Err(ThetaError::LevelUnavailable(chi.conductor().to_string()));
    }
    let th = theta_element(data, n)?;
    let chi_n = character_at(data, chi, n)?;
    th.eval(&data.tower, &chi_n, data.p, data.prec)
}

/// `L(χ) = 𝓛(χ)²`.
pub fn l_value(data: &GrossPointData, chi: &FiniteCharacter) -> Result<PadicNumber, ThetaError> {
    let s = script_l(data, chi)?;
    Ok(&s * &s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimeCase {
    Split,
    Inert,
    Ramified,
}

/// Local data for `e_p`: `norm = |p|_p` (the inverse residue size `p^{-f}`),
/// `r_p = ord_p(conductor)`, and the character's conductor exponent `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplierParams {
    pub case: PrimeCase,
    pub alpha: BigRational,
    pub norm: BigRational,
    pub r_p: u32,
    pub s: u32,
    pub chi_p: Option<BigRational>,
    pub chi_pbar: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiplier {
    pub e_bar: BigRational,
    pub e_tilde: BigRational,
    pub e: BigRational,
    /// The closed form `α²(1−αχ(𝔓))(1−αχ(𝔓̄))|p|²` or `|p|^{-n}/α^{2n}`, split case only.
    pub e_display: Option<BigRational>,
}

fn rpow(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

pub fn multiplier_e(m: &MultiplierParams) -> Result<Multiplier, ThetaError> {
    let bad = |s: &str| Err(ThetaError::InconsistentCase(s.to_string()));
    let one = BigRational::one();
    if m.alpha.is_zero() {
        return bad("α = 0");
    }
    if !(m.norm > BigRational::zero() && m.norm < one) {
        return bad("|p| must lie in (0,1)");
    }
    if m.r_p > 1 {
        return bad("r_p must be 0 or 1");
    }
    if m.r_p == 1 && m.alpha.abs() != one {
        return bad("r_p = 1 forces α = ±1");
    }
    let ainv = m.alpha.recip();
    let e_bar = if m.s > 0 {
        one.clone()
    } else {
        match m.case {
            PrimeCase::Split => {
                let (Some(x), Some(y)) = (&m.chi_p, &m.chi_pbar) else {
                    return bad("split unramified needs χ(𝔓) and χ(𝔓̄)");
                };
                (&one - &ainv * x) * (&one - &ainv * y)
            }
            PrimeCase::Inert => &one - &ainv * &ainv,
            PrimeCase::Ramified => {
                let Some(x) = &m.chi_p else {
                    return bad("ramified unramified-character case needs χ(𝔓)");
                };
                &one - &ainv * x
            }
        }
    };
    let factor = if m.s == 0 { &m.alpha * &m.alpha * &m.norm * &m.norm } else { rpow(&m.norm, m.s as i64) };
    let e_tilde = rpow(&e_bar, 2 - m.r_p as i64) * factor;
    let e = rpow(&(&m.alpha * &m.alpha * &m.norm), -(m.s as i64)) * &e_tilde;
    let e_display = (m.case == PrimeCase::Split).then(|| {
        if m.s == 0 {
            let x = m.chi_p.clone().unwrap_or_else(BigRational::one);
            let y = m.chi_pbar.clone().unwrap_or_else(BigRational::one);
            &m.alpha * &m.alpha * (&one - &m.alpha * x) * (&one - &m.alpha * y) * &m.norm * &m.norm
        } else {
            rpow(&m.norm, -(m.s as i64)) / rpow(&m.alpha, 2 * m.s as i64)
        }
    });
    Ok(Multiplier { e_bar, e_tilde, e, e_display })
}

/// A primitive root mod p.
fn primitive_root(p: u32) -> u32 {
    let n = p - 1;
    let mut fs = Vec::new();
    let mut m = n;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            fs.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        fs.push(m);
    }
    let pb = BigInt::from(p);
    (2..p)
        .find(|&g| fs.iter().all(|f| BigInt::from(g).modpow(&BigInt::from(n / f), &pb) != BigInt::one()))
        .unwrap_or(1)
}

/// An h-th root of a p-adic unit in Z_p^×, mod p^prec (p ∤ h).
fn unit_root(p: u32, u: &BigRational, h: i64, prec: i64) -> Option<BigInt> {
    let modulus = ppow(p, prec + 1);
    let den = crate::padic::inv_mod(&u.denom().mod_floor(&modulus), &modulus)?;
    let u = (u.numer() * den).mod_floor(&modulus);
    if h == 1 {
        return Some(u);
    }
    if (h % p as i64) == 0 {
        return None;
    }
    let pb = BigInt::from(p);
    let hb = BigInt::from(h);
    let r0 = (1..p).map(BigInt::from).find(|r| r.modpow(&hb, &pb) == u.mod_floor(&pb))?;
    let mut y = r0;
    for _ in 0..(prec + 2) {
        let f = (y.modpow(&hb, &modulus) - &u).mod_floor(&modulus);
        if f.is_zero() {
            break;
        }
        let d = (&hb * y.modpow(&BigInt::from(h - 1), &modulus)).mod_floor(&modulus);
        let dinv = crate::padic::inv_mod(&d, &modulus)?;
        y = (&y - f * dinv).mod_floor(&modulus);
    }
    Some(y)
}

/// Coordinates on `Q_p^×/q̃^Z ≅ Z/h × μ_{p−1} × (1+pZ_p)` for one periodic cocycle.
#[derive(Clone, Debug)]
pub struct TorusChart {
    p: u32,
    h: i64,
    prec: i64,
    pi: BigInt,
    zeta: BigInt,
    gamma: BigInt,
}

impl TorusChart {
    pub fn new(axis: &HyperbolicAxis, prec: i64) -> Result<Self, ThetaError> {
        let p = axis.p();
        let h = axis.translation_length();
        let q = axis.qtilde();
        let unit = q / BigRational::from_integer(ppow(p, h));
        let y = unit_root(p, &unit, h, prec)
            .ok_or_else(|| ThetaError::InvalidCocycle(format!("unit part of q̃ has no {h}-th root in Z_p")))?;
        let zeta = teichmuller(primitive_root(p) as i64, p, prec + 1)?;
        Ok(TorusChart {
            p,
            h,
            prec,
            pi: BigInt::from(p) * y,
            zeta: zeta.to_integer().expect("integral"),
            gamma: BigInt::from(p + 1),
        })
    }

    pub fn h(&self) -> i64 {
        self.h
    }

    /// The group `G_n` with factors `pi`, `zeta`, `gamma` (level 0: `pi` only).
    pub fn group(&self, n: u32, suffix: &str) -> FiniteAbelianGroup {
        let l = |s: &str| format!("{s}{suffix}");
        if n == 0 {
            FiniteAbelianGroup::new(vec![self.h as u64], vec![l("pi")]).expect("shape")
        } else {
            FiniteAbelianGroup::new(
                vec![self.h as u64, u64::from(self.p - 1), u64::from(self.p).pow(n - 1)],
                vec![l("pi"), l("zeta"), l("gamma")],
            )
            .expect("shape")
        }
    }

    /// The representative `π'^i ζ^j (1+p)^k` mod `p^{i+n}`.
    pub fn representative(&self, e: &GroupElem, n: u32) -> BigInt {
        let m = ppow(self.p, self.prec + self.h + 2);
        let mut c = self.pi.modpow(&BigInt::from(e.0[0]), &m);
        if n > 0 {
            c = c * self.zeta.modpow(&BigInt::from(e.0[1]), &m) * self.gamma.modpow(&BigInt::from(e.0[2]), &m);
        }
        c.mod_floor(&ppow(self.p, e.0[0] as i64 + n as i64))
    }

    /// `μ(c·(1 + p^n Z_p))`, or the annulus `μ(p^i Z_p^×)` at level 0.
    pub fn cell_mass(&self, c: &HarmonicCocycle, e: &GroupElem, n: u32) -> Result<PadicNumber, ThetaError> {
        let i = e.0[0] as i64;
        let ball = |lvl: i64, center: &BigInt| {
            let v = TreeVertex::new(self.p, lvl, &BigRational::from_integer(center.clone()));
            c.value(&TreeEdge::down_to(v))
        };
        if n == 0 {
            let z = BigInt::zero();
            Ok(&ball(i, &z)? - &ball(i + 1, &z)?)
        } else {
            Ok(ball(i + n as i64, &self.representative(e, n))?)
        }
    }

    /// `log` of the representative, killed on `π'` and `ζ`.
    pub fn log_gamma(&self, branch: &LogBranch) -> Result<PadicNumber, ThetaError> {
        Ok(branch.log(&PadicNumber::from_int(self.p, self.gamma.clone(), self.prec))?)
    }
}

fn check_cocycle(c: &HarmonicCocycle) -> Result<&HyperbolicAxis, ThetaError> {
    if c.weight() != 2 {
        return Err(ThetaError::InvalidCocycle(format!("weight {} (need 2)", c.weight())));
    }
    let report = c.validate();
    if !report.is_valid() {
        return Err(ThetaError::InvalidCocycle(report.to_string()));
    }
    c.period().ok_or_else(|| ThetaError::InvalidCocycle("cocycle is not periodic".into()))
}

fn all_levels(r: usize, max: u32) -> Vec<LevelIndex> {
    let mut out = vec![LevelIndex(Vec::new())];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|n| {
                (0..=max).map(move |k| {
                    let mut m = n.0.clone();
                    m.push(k);
                    LevelIndex(m)
                })
            })
            .collect();
    }
    out
}

/// Builds Gross-point data from one periodic weight-2 cocycle per exceptional
/// prime: level-`n⃗` values are products of the cell masses, and α = 1.
pub fn build_gross_data_from_cocycle(cocycles: &[HarmonicCocycle], max_level: u32) -> Result<GrossPointData, ThetaError> {
    let first = cocycles.first().ok_or_else(|| ThetaError::InvalidCocycle("no cocycles".into()))?;
    let p = first.p();
    let prec = cocycles.iter().map(|c| c.prec()).min().unwrap_or(1);
    let charts = cocycles
        .iter()
        .map(|c| {
            if c.p() != p {
                return Err(ThetaError::InvalidCocycle("components over different primes".into()));
            }
            TorusChart::new(check_cocycle(c)?, prec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let r = cocycles.len();
    let suffix = |i: usize| if r == 1 { String::new() } else { (i + 1).to_string() };
    // per-component level tables
    let mut tables: Vec<Vec<Vec<(GroupElem, PadicNumber)>>> = Vec::new();
    for (i, (c, ch)) in cocycles.iter().zip(&charts).enumerate() {
        let mut per_level = Vec::new();
        for n in 0..=max_level {
            let g = ch.group(n, &suffix(i));
            let row = g
                .elements()?
                .into_iter()
                .map(|e| {
                    let m = ch.cell_mass(c, &e, n)?;
                    Ok((e, m))
                })
                .collect::<Result<Vec<_>, ThetaError>>()?;
            per_level.push(row);
        }
        tables.push(per_level);
    }
    let mut levels = BTreeMap::new();
    let mut values = BTreeMap::new();
    for n in all_levels(r, max_level) {
        let mut orders = Vec::new();
        let mut labels = Vec::new();
        for (i, ch) in charts.iter().enumerate() {
            let g = ch.group(n.0[i], &suffix(i));
            orders.extend_from_slice(g.orders());
            labels.extend(g.labels().iter().cloned());
        }
        levels.insert(n.clone(), FiniteAbelianGroup::new(orders, labels)?);
        let mut row: Vec<(GroupElem, PadicNumber)> = vec![(GroupElem(Vec::new()), PadicNumber::one(p, prec))];
        for (i, t) in tables.iter().enumerate() {
            row = row
                .into_iter()
                .flat_map(|(g, v)| {
                    t[n.0[i] as usize].iter().map(move |(e, m)| {
                        let mut gg = g.0.clone();
                        gg.extend_from_slice(&e.0);
                        (GroupElem(gg), &v * m)
                    })
                })
                .collect();
        }
        values.insert(n, row.into_iter().filter(|(_, v)| !v.is_zero()).collect());
    }
    let free = (0..r).map(|i| format!("gamma{}", suffix(i))).collect();
    let tower = ClassGroupTower::new(vec![p; r], 1, levels, free)?.with_conductor("1");
    let mut d = GrossPointData::new(tower, p, prec, vec![PadicNumber::one(p, prec); r], vec![true; r], values)?;
    d.provenance = Provenance::Cocycle;
    Ok(d)
}

/// The functionals `log_i` on built data: `log_i(gamma_i) = log_u(1+p)`, torsion killed.
pub fn built_logs(data: &GrossPointData, branch: &LogBranch) -> Result<Vec<LogFunctional>, ThetaError> {
    let onep = PadicNumber::from_int(data.p, data.p as i64 + 1, data.prec);
    let v = branch.log(&onep)?;
    data.tower
        .free_labels()
        .iter()
        .enumerate()
        .map(|(i, l)| Ok(LogFunctional::new(&data.tower, &format!("s{}", i + 1), BTreeMap::from([(l.clone(), v.clone())]))?))
        .collect()
}

/// `l(a) = Σ_σ s_σ·log_σ(a)` for a direction `s⃗` (no domain bound).
pub fn direction_value(
    logs: &[LogFunctional],
    direction: &BTreeMap<String, PadicNumber>,
    group: &FiniteAbelianGroup,
    g: &GroupElem,
    p: u32,
    prec: i64,
) -> PadicNumber {
    logs.iter()
        .filter_map(|l| direction.get(l.sigma()).map(|s| s * &l.eval(group, g, p, prec)))
        .fold(PadicNumber::zero(p, prec), |acc, x| &acc + &x)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stabilized {
    pub value: PadicNumber,
    pub level: LevelIndex,
    /// Agreement of the last two level sums.
    pub agreement: i64,
}

/// The chain of data levels at or above the conductor, one step at a time.
fn level_chain(data: &GrossPointData, chi: &FiniteCharacter) -> Result<Vec<LevelIndex>, ThetaError> {
    let start = level_for(data, chi)?;
    let mut chain = vec![start.clone()];
    let mut cur = start;
    loop {
        let next = LevelIndex(cur.0.iter().map(|k| k + 1).collect());
        if !data.values.contains_key(&next) {
            break;
        }
        chain.push(next.clone());
        cur = next;
    }
    Ok(chain)
}

fn level_sum(
    data: &GrossPointData,
    chi: &FiniteCharacter,
    logs: &[LogFunctional],
    direction: &BTreeMap<String, PadicNumber>,
    k: u32,
    n: &LevelIndex,
) -> Result<PadicNumber, ThetaError> {
    let th = theta_element(data, n)?;
    let chi_n = character_at(data, chi, n)?;
    let g = data.tower.level(n)?;
    th.coeffs.iter().try_fold(PadicNumber::zero(data.p, data.prec), |acc, (a, v)| {
        let l = direction_value(logs, direction, g, a, data.p, data.prec);
        let term = v * &chi_n.eval_here(a)? * &l.pow(k as i64)?;
        Ok(&acc + &term)
    })
}

/// Whether every free factor of the level is nontrivial, so that `l` is not
/// identically zero there merely for lack of resolution.
fn resolves_logs(data: &GrossPointData, n: &LevelIndex) -> bool {
    let Ok(g) = data.tower.level(n) else { return false };
    data.tower
        .free_labels()
        .iter()
        .all(|l| g.factor_index(l).is_some_and(|i| g.orders()[i] > 1))
}

/// `∫ χ·l^k dμ̃` as level sums, stopping when two consecutive levels agree to
/// N − 2 digits. For `k ≥ 1` only levels that resolve every free factor count.
pub fn integrate_log_power(
    data: &GrossPointData,
    chi: &FiniteCharacter,
    logs: &[LogFunctional],
    k: u32,
    direction: &BTreeMap<String, PadicNumber>,
) -> Result<Stabilized, ThetaError> {
    let mut chain = level_chain(data, chi)?;
    if k > 0 {
        chain.retain(|n| resolves_logs(data, n));
        if chain.is_empty() {
            return Err(ThetaError::LevelUnavailable("no level resolves the free quotient".into()));
        }
    }
    let target = data.prec - 2;
    let mut prev: Option<PadicNumber> = None;
    let mut best = (PadicNumber::zero(data.p, data.prec), chain[0].clone(), i64::MIN);
    for n in &chain {
        let s = level_sum(data, chi, logs, direction, k, n)?;
        if let Some(pv) = &prev {
            let agree = s.agreement(pv);
            if agree >= target {
                return Ok(Stabilized { value: s, level: n.clone(), agreement: agree });
            }
            best = (s.clone(), n.clone(), agree);
        } else {
            best = (s.clone(), n.clone(), i64::MIN);
        }
        prev = Some(s);
    }
    if k == 0 {
        // k = 0 is exact at every level by compatibility.
        return Ok(Stabilized { value: best.0, level: best.1, agreement: data.prec });
    }
    Err(ThetaError::NoStabilization { best: best.0, level: best.1.to_string(), gap: best.2 })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LSeries {
    /// `c_k = ∫ χ·l^k dμ̃ / k!`.
    pub coeffs: Vec<PadicNumber>,
    /// Coefficients of the square `L = 𝓛²`.
    pub square: Vec<PadicNumber>,
    pub levels: Vec<LevelIndex>,
}

fn factorial(k: u32) -> i64 {
    (1..=k as i64).product()
}

pub fn l_series(
    data: &GrossPointData,
    chi: &FiniteCharacter,
    logs: &[LogFunctional],
    direction: &BTreeMap<String, PadicNumber>,
    order: u32,
) -> Result<LSeries, ThetaError> {
    let mut coeffs = Vec::new();
    let mut levels = Vec::new();
    for k in 0..=order {
        let st = integrate_log_power(data, chi, logs, k, direction)?;
        coeffs.push(st.value.div_int(factorial(k)));
        levels.push(st.level);
    }
    let square = (0..coeffs.len())
        .map(|n| {
            (0..=n).fold(PadicNumber::zero(data.p, data.prec), |acc, i| &acc + &(&coeffs[i] * &coeffs[n - i]))
        })
        .collect();
    Ok(LSeries { coeffs, square, levels })
}

/// `Σ_a Θ[a]·χ(a)·exp(t·l(a))` at the top level of the chain, for comparing
/// with the truncated series at small `t`.
pub fn family_value(
    data: &GrossPointData,
    chi: &FiniteCharacter,
    logs: &[LogFunctional],
    direction: &BTreeMap<String, PadicNumber>,
    t: &PadicNumber,
) -> Result<PadicNumber, ThetaError> {
    let chain = level_chain(data, chi)?;
    let n = chain.last().expect("nonempty chain");
    let th = theta_element(data, n)?;
    let chi_n = character_at(data, chi, n)?;
    let g = data.tower.level(n)?;
    th.coeffs.iter().try_fold(PadicNumber::zero(data.p, data.prec), |acc, (a, v)| {
        let l = direction_value(logs, direction, g, a, data.p, data.prec);
        let e = crate::padic::exp_p(&(t * &l))?;
        Ok(&acc + &(v * &chi_n.eval_here(a)? * &e))
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeadingTermReport {
    pub rank: usize,
    pub coeffs: Vec<PadicNumber>,
    /// `r!·c_r`, the r-th derivative at 0.
    pub derivative: PadicNumber,
    pub l_invariants: Vec<PadicNumber>,
    pub translation_lengths: Vec<i64>,
    /// `∏ μ_i(Z_p)`, the measure restricted to the point `[1]` in each exceptional coordinate.
    pub restricted: PadicNumber,
    /// `r!·∏(h_i·L_i)·restricted`.
    pub predicted: PadicNumber,
    pub agreement: i64,
    /// Whether the branch kills every `q̃_i`, i.e. descends to the torus quotient.
    pub branch_consistent: bool,
    pub lower_vanish: bool,
}

/// Both sides of the leading-term identity at an exceptional zero of rank r:
/// `c_k = 0` for `k < r`, and `r!·c_r = r!·∏(h·L^Tei)·(restricted value)`.
pub fn leading_term_check(
    data: &GrossPointData,
    cocycles: &[HarmonicCocycle],
    branch: &LogBranch,
    chi: &FiniteCharacter,
    depth: i64,
) -> Result<LeadingTermReport, ThetaError> {
    let r = cocycles.len();
    let p = data.p;
    let prec = data.prec;
    let logs = built_logs(data, branch)?;
    let direction: BTreeMap<String, PadicNumber> =
        logs.iter().map(|l| (l.sigma().to_string(), PadicNumber::one(p, prec))).collect();
    let series = l_series(data, chi, &logs, &direction, r as u32)?;
    let z0 = default_z0(p, prec);
    let mut l_invs = Vec::new();
    let mut hs = Vec::new();
    let mut restricted = PadicNumber::one(p, prec);
    let mut consistent = true;
    for c in cocycles {
        let axis = check_cocycle(c)?;
        let q = PadicNumber::from_rational(p, axis.qtilde(), prec);
        consistent &= branch.log(&q)?.is_zero();
        let li = l_invariant(c, axis, branch, &z0, depth)?;
        l_invs.push(li.value.value);
        hs.push(axis.translation_length());
        restricted = &restricted * &c.value(&TreeEdge::e0(p))?;
    }
    let fact = factorial(r as u32);
    let derivative = series.coeffs[r].scale_int(fact);
    let predicted = l_invs
        .iter()
        .zip(&hs)
        .fold(restricted.scale_int(fact), |acc, (l, &h)| &acc * &l.scale_int(h));
    let tol = prec - 5;
    let lower_vanish = series.coeffs[..r].iter().all(|c| c.val_or_prec() >= tol);
    Ok(LeadingTermReport {
        rank: r,
        agreement: derivative.agreement(&predicted),
        coeffs: series.coeffs,
        derivative,
        l_invariants: l_invs,
        translation_lengths: hs,
        restricted,
        predicted,
        branch_consistent: consistent,
        lower_vanish,
    })
}

/// `μ̃_J(O_p × V) = μ̃_{J∖{p}}([1] × V)` on built product data. The left side
/// is the product of `μ_idx(Z_p)` (the cocycle value on `e₀`) with the cell masses
/// of the other components read from the tree; the right side is the data
/// built from the remaining cocycles, scaled by the point mass at `[1]`.
/// Also checks that summing the full table over the idx-coordinate gives
/// `μ_idx(F)` times the restricted table.
pub fn restriction_law_check(cocycles: &[HarmonicCocycle], idx: usize, level: u32) -> Result<bool, ThetaError> {
    if cocycles.len() < 2 || idx >= cocycles.len() {
        return Err(ThetaError::InvalidCocycle("restriction needs at least two components".into()));
    }
    let p = cocycles[0].p();
    let full = build_gross_data_from_cocycle(cocycles, level)?;
    let rest: Vec<HarmonicCocycle> =
        cocycles.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, c)| c.clone()).collect();
    let sub = build_gross_data_from_cocycle(&rest, level)?;
    let prec = full.prec;
    let charts = cocycles
        .iter()
        .map(|c| TorusChart::new(check_cocycle(c)?, prec))
        .collect::<Result<Vec<_>, ThetaError>>()?;
    let mass = cocycles[idx].value(&TreeEdge::e0(p))?;
    let width = charts[idx].group(level, "").orders().len();
    let start = idx * width;
    let n = LevelIndex(vec![level; cocycles.len()]);
    let sn = LevelIndex(vec![level; rest.len()]);
    let mut marg: BTreeMap<GroupElem, PadicNumber> = BTreeMap::new();
    for x in full.tower.level(&n)?.elements()? {
        let v = full.value(&n, &x)?;
        if v.is_zero() {
            continue;
        }
        let mut coords = x.0.clone();
        coords.drain(start..start + width);
        let e = marg.entry(GroupElem(coords)).or_insert_with(|| PadicNumber::zero(p, prec));
        *e = &*e + &v;
    }
    let f_mass = (0..charts[idx].h())
        .map(|i| charts[idx].cell_mass(&cocycles[idx], &GroupElem(vec![i as u64]), 0))
        .try_fold(PadicNumber::zero(p, prec), |acc, m| Ok::<_, ThetaError>(&acc + &m?))?;
    let rest_charts: Vec<&TorusChart> = charts.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, c)| c).collect();
    for x in sub.tower.level(&sn)?.elements()? {
        let base = sub.value(&sn, &x)?;
        let lhs = marg.get(&x).cloned().unwrap_or_else(|| PadicNumber::zero(p, prec));
        if !(&lhs - &(&base * &f_mass)).is_zero() {
            return Ok(false);
        }
        let mut direct = mass.clone();
        let mut off = 0;
        for (c, ch) in rest.iter().zip(&rest_charts) {
            let w = ch.group(level, "").orders().len();
            let e = GroupElem(x.0[off..off + w].to_vec());
            direct = &direct * &ch.cell_mass(c, &e, level)?;
            off += w;
        }
        if !(&direct - &(&base * &mass)).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anticyclo::{finite_character, split_tower, trivial_character};

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn dirac_tower_is_compatible() {
        let t = split_tower(3, 1, 3);
        let g = GroupElem(vec![0, 1, 2]);
        let d = GrossPointData::dirac(t.clone(), 3, 20, &LevelIndex::single(3), &g).unwrap();
        assert!(d.trace_violations().unwrap().is_empty());
        assert!(check_compatibility(&d, &LevelIndex::single(3), &LevelIndex::single(1)).unwrap());
        let one = PadicNumber::one(3, 20);
        let sign = finite_character(&t, &LevelIndex::single(1), vec![one.clone(), -&one, one.clone()]).unwrap();
        assert_eq!(script_l(&d, &sign).unwrap(), -&one);
        assert_eq!(l_value(&d, &sign).unwrap(), one);
    }

    #[test]
    fn multiplier_examples() {
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let base = MultiplierParams {
            case: PrimeCase::Split,
            alpha: r(1),
            norm: third.clone(),
            r_p: 0,
            s: 0,
            chi_p: Some(r(1)),
            chi_pbar: Some(r(1)),
        };
        let m = multiplier_e(&base).unwrap();
        assert!(m.e.is_zero());
        assert!(m.e_display.unwrap().is_zero());
        let ram = MultiplierParams { s: 2, alpha: r(-1), ..base.clone() };
        assert_eq!(multiplier_e(&ram).unwrap().e_display, Some(r(9)));
        let inert = MultiplierParams { case: PrimeCase::Inert, alpha: r(-1), chi_p: None, chi_pbar: None, ..base };
        let m = multiplier_e(&inert).unwrap();
        assert!(m.e_bar.is_zero() && m.e.is_zero());
    }

    #[test]
    fn axis_data_is_zero_and_compatible() {
        let q = PadicNumber::from_int(3, 3 * 4, 20);
        let c = HarmonicCocycle::axis_cocycle(&q, 9).unwrap();
        let d = build_gross_data_from_cocycle(&[c], 4).unwrap();
        assert!(d.trace_violations().unwrap().is_empty());
        let chi = trivial_character(d.tower(), 3, 20).unwrap();
        assert!(script_l(&d, &chi).unwrap().is_zero());
    }
}
