//! Exact evaluators for local formulas: L-factors, Whittaker newform values,
//! the zeta-integral identity, pairing values, toric integrals, volumes, and
//! the period-ratio reduction. Transcendental quantities are opaque tokens.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocalError {
    #[error("pole: the Euler factor denominator vanishes")]
    PoleAtS,
    #[error("degenerate Macdonald denominator mu1 = mu2")]
    Degenerate,
    #[error("geometric ratio {0} has absolute value >= 1")]
    DivergentParameters(String),
    #[error("missing parameter {0}")]
    MissingParam(&'static str),
    #[error("bad parameter: {0}")]
    BadParam(String),
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn rpow(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

fn exact_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (num_integer::Roots::sqrt(x.numer()), num_integer::Roots::sqrt(x.denom()));
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| BigRational::new(n, d))
}

/// Opaque transcendental symbols.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Pi,
    /// Γ at a non-integer argument.
    Gamma(BigRational),
    /// `ζ_{F_v}(s)`.
    Zeta { place: String, s: i64 },
    /// `L(1, Ad π_v)`.
    LAd(String),
    /// `L(1, τ_{K_v/F_v})`.
    LTau(String),
    /// `ε(1/2, μ_v, ψ_v)`.
    EpsMu(String),
    /// `ε(1/2, μ_v|·|^{-1}, ψ_v)`.
    EpsMuTwist(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Pi => write!(f, "pi"),
            Token::Gamma(x) => write!(f, "Gamma({x})"),
            Token::Zeta { place, s } => write!(f, "zeta_{place}({s})"),
            Token::LAd(v) => write!(f, "L_{v}(1,Ad)"),
            Token::LTau(v) => write!(f, "L_{v}(1,tau)"),
            Token::EpsMu(v) => write!(f, "eps_{v}(mu)"),
            Token::EpsMuTwist(v) => write!(f, "eps_{v}(mu|.|^-1)"),
        }
    }
}

/// `coeff · ∏ base^{e} · ∏ token^{k}` with radical exponents in `(0,1)` and
/// integer token exponents. Equality of values means equality of this normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    coeff: BigRational,
    radicals: BTreeMap<BigRational, BigRational>,
    tokens: BTreeMap<Token, i64>,
}

impl Expr {
    pub fn rational(c: BigRational) -> Self {
        Expr { coeff: c, radicals: BTreeMap::new(), tokens: BTreeMap::new() }.normalized()
    }

    pub fn int(n: i64) -> Self {
        Self::rational(rat(n))
    }

    pub fn token(t: Token, k: i64) -> Self {
        Self::int(1).times_token(t, k)
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn radicals(&self) -> &BTreeMap<BigRational, BigRational> {
        &self.radicals
    }

    pub fn tokens(&self) -> &BTreeMap<Token, i64> {
        &self.tokens
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// The rational value when no radicals or tokens remain.
    pub fn as_rational(&self) -> Option<&BigRational> {
        (self.radicals.is_empty() && self.tokens.is_empty()).then_some(&self.coeff)
    }

    pub fn times_token(mut self, t: Token, k: i64) -> Self {
        *self.tokens.entry(t).or_insert(0) += k;
        self.normalized()
    }

    /// Multiplies by `base^e` for a positive rational base and rational exponent.
    pub fn times_power(mut self, base: &BigRational, e: &BigRational) -> Self {
        *self.radicals.entry(base.clone()).or_insert_with(BigRational::zero) += e;
        self.normalized()
    }

    pub fn scale(mut self, c: &BigRational) -> Self {
        self.coeff *= c;
        self.normalized()
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        let mut out = self.clone();
        out.coeff *= &o.coeff;
        for (b, e) in &o.radicals {
            *out.radicals.entry(b.clone()).or_insert_with(BigRational::zero) += e;
        }
        for (t, k) in &o.tokens {
            *out.tokens.entry(t.clone()).or_insert(0) += k;
        }
        out.normalized()
    }

    pub fn inv(&self) -> Option<Expr> {
        if self.coeff.is_zero() {
            return None;
        }
        Some(
            Expr {
                coeff: self.coeff.recip(),
                radicals: self.radicals.iter().map(|(b, e)| (b.clone(), -e)).collect(),
                tokens: self.tokens.iter().map(|(t, k)| (t.clone(), -k)).collect(),
            }
            .normalized(),
        )
    }

    fn normalized(mut self) -> Self {
        if self.coeff.is_zero() {
            return Expr { coeff: BigRational::zero(), radicals: BTreeMap::new(), tokens: BTreeMap::new() };
        }
        // Γ at positive integers is rational.
        let gammas: Vec<(BigRational, i64)> = self
            .tokens
            .iter()
            .filter_map(|(t, k)| match t {
                Token::Gamma(x) if x.is_integer() && x.is_positive() => Some((x.clone(), *k)),
                _ => None,
            })
            .collect();
        for (x, k) in gammas {
            self.tokens.remove(&Token::Gamma(x.clone()));
            let n = x.to_integer();
            let mut f = BigInt::one();
            let mut i = BigInt::one();
            while i < n {
                f *= &i;
                i += 1;
            }
            self.coeff *= rpow(&BigRational::from_integer(f), k);
        }
        // ε(μ)ε(μ|·|^{-1}) = 1 when μ²|·|^{-1} = 1 (Tate's local functional equation).
        let places: Vec<String> = self
            .tokens
            .keys()
            .filter_map(|t| if let Token::EpsMu(v) = t { Some(v.clone()) } else { None })
            .collect();
        for v in places {
            let a = self.tokens.get(&Token::EpsMu(v.clone())).copied().unwrap_or(0);
            let b = self.tokens.get(&Token::EpsMuTwist(v.clone())).copied().unwrap_or(0);
            let m = if a.signum() == b.signum() { a.abs().min(b.abs()) * a.signum() } else { 0 };
            *self.tokens.get_mut(&Token::EpsMu(v.clone())).expect("present") -= m;
            *self.tokens.entry(Token::EpsMuTwist(v)).or_insert(0) -= m;
        }
        self.tokens.retain(|_, k| *k != 0);
        let rads = std::mem::take(&mut self.radicals);
        for (b, e) in rads {
            if b.is_one() || e.is_zero() {
                continue;
            }
            let fl = e.floor();
            self.coeff *= rpow(&b, fl.to_integer().try_into().expect("small exponent"));
            let frac = &e - &fl;
            if frac.is_zero() {
                continue;
            }
            if frac == BigRational::new(1.into(), 2.into()) {
                if let Some(s) = exact_sqrt(&b) {
                    self.coeff *= s;
                    continue;
                }
            }
            *self.radicals.entry(b).or_insert_with(BigRational::zero) += frac;
        }
        self
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (b, e) in &self.radicals {
            write!(f, " * ({b})^({e})")?;
        }
        for (t, k) in &self.tokens {
            if *k == 1 {
                write!(f, " * {t}")?;
            } else {
                write!(f, " * {t}^{k}")?;
            }
        }
        Ok(())
    }
}

/// The local representation: unramified principal series `π(μ₁,μ₂)` or the
/// unramified special `σ(μ, μ|·|^{-1})`, by the values at ϖ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepCase {
    Unramified { mu1: BigRational, mu2: BigRational },
    Special { mu: BigRational },
}

/// `L(s, π⊗χ)` at `X = |ϖ|^s`.
pub fn local_l_factor(case: &RepCase, chi: &BigRational, x: &BigRational) -> Result<BigRational, LocalError> {
    let one = BigRational::one();
    let den = match case {
        RepCase::Unramified { mu1, mu2 } => (&one - chi * mu1 * x) * (&one - chi * mu2 * x),
        RepCase::Special { mu } => &one - chi * mu * x,
    };
    if den.is_zero() {
        return Err(LocalError::PoleAtS);
    }
    Ok(den.recip())
}

/// `W⁰(diag(a,1))` for `v(a) = n`, with `q_inv = |ϖ|`.
pub fn whittaker_value(case: &RepCase, n: i64, q_inv: &BigRational) -> Result<Expr, LocalError> {
    if let RepCase::Unramified { mu1, mu2 } = case {
        if mu1 == mu2 {
            return Err(LocalError::Degenerate);
        }
    }
    if n < 0 {
        return Ok(Expr::int(0));
    }
    let c = match case {
        RepCase::Special { mu } => rpow(mu, n),
        RepCase::Unramified { mu1, mu2 } => (rpow(mu1, n + 1) - rpow(mu2, n + 1)) / (mu1 - mu2),
    };
    Ok(Expr::rational(c).times_power(q_inv, &BigRational::new(n.into(), 2.into())))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaCheck {
    pub partial: BigRational,
    pub closed: BigRational,
    pub tail: BigRational,
}

impl ZetaCheck {
    pub fn holds(&self) -> bool {
        &self.partial + &self.tail == self.closed
    }
}

/// `Ψ(s, W_π, χ) = L(s, π⊗χ)·χ(𝔇)|𝔇|^s`: the series through `T` terms, the
/// closed form, and the exact geometric tail. `dfac = χ(𝔇)|𝔇|^s`.
pub fn zeta_integral_check(
    case: &RepCase,
    chi: &BigRational,
    x: &BigRational,
    dfac: &BigRational,
    t: u32,
) -> Result<ZetaCheck, LocalError> {
    let one = BigRational::one();
    let ratios: Vec<BigRational> = match case {
        RepCase::Special { mu } => vec![chi * mu * x],
        RepCase::Unramified { mu1, mu2 } => {
            if mu1 == mu2 {
                return Err(LocalError::Degenerate);
            }
            vec![chi * mu1 * x, chi * mu2 * x]
        }
    };
    if let Some(r) = ratios.iter().find(|r| r.abs() >= one) {
        return Err(LocalError::DivergentParameters(r.to_string()));
    }
    let closed = dfac * local_l_factor(case, chi, x)?;
    let n = t as i64;
    let (partial, tail) = match case {
        RepCase::Special { mu } => {
            let r = chi * mu * x;
            let partial: BigRational = (0..=n).map(|i| rpow(&r, i)).sum();
            let tail = rpow(&r, n + 1) / (&one - &r);
            (partial, tail)
        }
        RepCase::Unramified { mu1, mu2 } => {
            let cx = chi * x;
            let partial: BigRational = (0..=n)
                .map(|i| (rpow(mu1, i + 1) - rpow(mu2, i + 1)) / (mu1 - mu2) * rpow(&cx, i))
                .sum();
            let (r1, r2) = (mu1 * &cx, mu2 * &cx);
            let tail = (mu1 * rpow(&r1, n + 1) / (&one - &r1) - mu2 * rpow(&r2, n + 1) / (&one - &r2)) / (mu1 - mu2);
            (partial, tail)
        }
    };
    Ok(ZetaCheck { partial: dfac * partial, closed, tail: dfac * tail })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairingCase {
    Archimedean { k: u32 },
    Unramified { place: String, abs_d: BigRational },
    Special { place: String, eps: i8, abs_d: BigRational },
}

/// `b_v(W, W')` for the newform pairings.
pub fn pairing_b_value(case: &PairingCase) -> Result<Expr, LocalError> {
    let half = BigRational::new(1.into(), 2.into());
    Ok(match case {
        PairingCase::Archimedean { k } => {
            let k = *k as i64;
            Expr::rational(rpow(&rat(4), -k)).times_token(Token::Pi, -k).times_token(Token::Gamma(rat(k)), 1)
        }
        PairingCase::Unramified { place, abs_d } => Expr::int(1)
            .times_token(Token::Zeta { place: place.clone(), s: 1 }, 1)
            .times_token(Token::Zeta { place: place.clone(), s: 2 }, -1)
            .times_token(Token::LAd(place.clone()), 1)
            .times_power(abs_d, &half),
        PairingCase::Special { place, eps, abs_d } => {
            check_sign(*eps, "eps")?;
            Expr::int(*eps as i64).times_token(Token::LAd(place.clone()), 1).times_power(abs_d, &half)
        }
    })
}

fn check_sign(x: i8, name: &str) -> Result<(), LocalError> {
    if x == 1 || x == -1 {
        Ok(())
    } else {
        Err(LocalError::BadParam(format!("{name} must be +1 or -1")))
    }
}

/// The toric-integral cases, one per displayed formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ToricCase {
    /// p ∉ J split, unramified principal series.
    SplitPrincipal,
    /// p ∉ J split, unramified special.
    SplitSpecial,
    /// p ∉ J inert or ramified, unramified principal series.
    NonsplitPrincipal,
    /// p ∉ J inert, unramified special (also v | n⁻/n⁻_b inert with v ∤ n_ν).
    InertSpecial,
    /// p ∉ J ramified, unramified special.
    RamifiedSpecial,
    /// v split, v ∤ n⁺.
    SplitAway,
    /// v | n⁺.
    SplitNPlus,
    /// v inert or ramified, v ∤ n⁻.
    NonsplitAway,
    /// v | n⁻/n⁻_b.
    NMinus,
    /// v | n⁻_b inert.
    NbInert,
    /// v | n⁻_b ramified.
    NbRamified,
    /// Archimedean, weight k and index m.
    Archimedean,
}

impl ToricCase {
    pub const ALL: [ToricCase; 12] = [
        ToricCase::SplitPrincipal,
        ToricCase::SplitSpecial,
        ToricCase::NonsplitPrincipal,
        ToricCase::InertSpecial,
        ToricCase::RamifiedSpecial,
        ToricCase::SplitAway,
        ToricCase::SplitNPlus,
        ToricCase::NonsplitAway,
        ToricCase::NMinus,
        ToricCase::NbInert,
        ToricCase::NbRamified,
        ToricCase::Archimedean,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ToricCase::SplitPrincipal => "split-principal",
            ToricCase::SplitSpecial => "split-special",
            ToricCase::NonsplitPrincipal => "nonsplit-principal",
            ToricCase::InertSpecial => "inert-special",
            ToricCase::RamifiedSpecial => "ramified-special",
            ToricCase::SplitAway => "split-away",
            ToricCase::SplitNPlus => "split-nplus",
            ToricCase::NonsplitAway => "nonsplit-away",
            ToricCase::NMinus => "nminus",
            ToricCase::NbInert => "nb-inert",
            ToricCase::NbRamified => "nb-ramified",
            ToricCase::Archimedean => "archimedean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == s)
    }
}

/// Local parameters. `q_inv = |ϖ|_v`; signs are ±1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalParams {
    pub place: String,
    pub q_inv: Option<BigRational>,
    pub abs_df: Option<BigRational>,
    pub abs_dk: Option<BigRational>,
    pub eps: Option<i8>,
    pub alpha: Option<i8>,
    /// `χ_𝔓(ϖ_𝔓)`, `χ_v((ϖ_v,1))`, or `χ_w(𝔑⁺)` depending on the case.
    pub chi: Option<BigRational>,
    pub phi_norm: Option<BigRational>,
    pub beta_val_odd: Option<bool>,
    pub c_v: Option<u32>,
    pub ramified: Option<bool>,
    /// `ν_v(ϖ̃_v) = +α` (true) or `−α` (false).
    pub nu_matches_alpha: Option<bool>,
    pub k: Option<u32>,
    pub m: Option<i64>,
}

/// JSON form of [`LocalParams`]; rationals are strings like `"1/3"`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalParamsFile {
    #[serde(default)]
    pub place: Option<String>,
    #[serde(default)]
    pub q_inv: Option<String>,
    #[serde(default)]
    pub abs_df: Option<String>,
    #[serde(default)]
    pub abs_dk: Option<String>,
    #[serde(default)]
    pub eps: Option<i8>,
    #[serde(default)]
    pub alpha: Option<i8>,
    #[serde(default)]
    pub chi: Option<String>,
    #[serde(default)]
    pub phi_norm: Option<String>,
    #[serde(default)]
    pub beta_val_odd: Option<bool>,
    #[serde(default)]
    pub c_v: Option<u32>,
    #[serde(default)]
    pub ramified: Option<bool>,
    #[serde(default)]
    pub nu_matches_alpha: Option<bool>,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub m: Option<i64>,
}

pub fn parse_rational(s: &str) -> Result<BigRational, LocalError> {
    s.trim().parse::<BigRational>().map_err(|_| LocalError::BadParam(format!("not a rational: {s}")))
}

impl TryFrom<LocalParamsFile> for LocalParams {
    type Error = LocalError;

    fn try_from(f: LocalParamsFile) -> Result<Self, LocalError> {
        let r = |x: &Option<String>| x.as_deref().map(parse_rational).transpose();
        let q_inv = r(&f.q_inv)?;
        if let Some(q) = &q_inv {
            if !q.is_positive() || *q >= BigRational::one() {
                return Err(LocalError::BadParam("|ϖ| must lie in (0,1)".into()));
            }
        }
        Ok(LocalParams {
            place: f.place.unwrap_or_else(|| "v".into()),
            q_inv,
            abs_df: r(&f.abs_df)?,
            abs_dk: r(&f.abs_dk)?,
            eps: f.eps,
            alpha: f.alpha,
            chi: r(&f.chi)?,
            phi_norm: r(&f.phi_norm)?,
            beta_val_odd: f.beta_val_odd,
            c_v: f.c_v,
            ramified: f.ramified,
            nu_matches_alpha: f.nu_matches_alpha,
            k: f.k,
            m: f.m,
        })
    }
}

fn need<T: Clone>(x: &Option<T>, name: &'static str) -> Result<T, LocalError> {
    x.clone().ok_or(LocalError::MissingParam(name))
}

/// `|d_K|·|d_F|^{-1/2}`.
fn disc_ratio(p: &LocalParams) -> Result<Expr, LocalError> {
    let dk = need(&p.abs_dk, "abs_dk")?;
    let df = need(&p.abs_df, "abs_df")?;
    Ok(Expr::rational(dk).times_power(&df, &BigRational::new((-1).into(), 2.into())))
}

/// The local toric integral `P` for each case.
pub fn toric_p_value(case: ToricCase, p: &LocalParams) -> Result<Expr, LocalError> {
    let one = BigRational::one();
    let place = p.place.clone();
    let eps = || -> Result<BigRational, LocalError> {
        let e = need(&p.eps, "eps")?;
        check_sign(e, "eps")?;
        Ok(rat(e as i64))
    };
    Ok(match case {
        ToricCase::SplitPrincipal => Expr::rational(need(&p.abs_df, "abs_df")?),
        ToricCase::SplitSpecial | ToricCase::SplitNPlus => {
            let v = eps()? / need(&p.phi_norm, "phi_norm")? * need(&p.chi, "chi")? * need(&p.abs_df, "abs_df")?;
            Expr::rational(v)
        }
        ToricCase::NonsplitPrincipal => disc_ratio(p)?,
        ToricCase::InertSpecial => {
            let q = need(&p.q_inv, "q_inv")?;
            let a = need(&p.alpha, "alpha")?;
            check_sign(a, "alpha")?;
            let f = &q * (eps()? + rat(a as i64)) / (&one - &q * &q);
            disc_ratio(p)?.scale(&f)
        }
        ToricCase::RamifiedSpecial => {
            let q = need(&p.q_inv, "q_inv")?;
            disc_ratio(p)?.scale(&(rat(2) * (&one + &q) / eps()?))
        }
        ToricCase::SplitAway => {
            let df = need(&p.abs_df, "abs_df")?;
            if need(&p.beta_val_odd, "beta_val_odd")? {
                Expr::rational(df * need(&p.chi, "chi")?)
            } else {
                Expr::rational(df)
            }
        }
        ToricCase::NonsplitAway => {
            let c = need(&p.c_v, "c_v")?;
            let base = disc_ratio(p)?;
            if c == 0 {
                base
            } else {
                let q = need(&p.q_inv, "q_inv")?;
                base.scale(&rpow(&q, c as i64)).times_token(Token::LTau(place), 2)
            }
        }
        ToricCase::NMinus => {
            let q = need(&p.q_inv, "q_inv")?;
            let c = need(&p.c_v, "c_v")?;
            let base = disc_ratio(p)?.scale(&((&one + &q) / eps()?));
            if c == 0 {
                if !need(&p.ramified, "ramified")? {
                    return Err(LocalError::BadParam("c_v = 0 needs v ramified in K".into()));
                }
                base.scale(&rat(2))
            } else {
                base.scale(&rpow(&q, c as i64)).times_token(Token::LTau(place), 2)
            }
        }
        ToricCase::NbInert => disc_ratio(p)?.times_token(Token::Zeta { place, s: 1 }, -1),
        ToricCase::NbRamified => {
            if need(&p.nu_matches_alpha, "nu_matches_alpha")? {
                disc_ratio(p)?.scale(&rat(2)).times_token(Token::Zeta { place, s: 1 }, -1)
            } else {
                Expr::int(0)
            }
        }
        ToricCase::Archimedean => {
            let k = need(&p.k, "k")? as i64;
            let m = need(&p.m, "m")?;
            let half_k = BigRational::new(k.into(), 2.into());
            let (a, b) = (&half_k + rat(m), &half_k - rat(m));
            if !a.is_positive() || !b.is_positive() {
                return Err(LocalError::BadParam("need |m| < k/2".into()));
            }
            Expr::int(1)
                .times_token(Token::Gamma(rat(k)), 1)
                .times_token(Token::Pi, -1)
                .times_token(Token::Gamma(a), -1)
                .times_token(Token::Gamma(b), -1)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaceKind {
    Split,
    Inert,
}

/// A place in `J` or dividing 𝔠: its kind, `|ϖ|`, and level `n` (0 for 𝔠).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VolumePlace {
    pub name: String,
    pub kind: PlaceKind,
    pub q_inv: BigRational,
    pub level: u32,
}

/// `vol(Ô×_{n,𝔠}/…) = [unit index]^{-1}·(|N𝔇_F|/|N𝔇_K|)^{1/2}·(N𝔠·∏|ϖ|^{-n})^{-1}
/// ·∏_{inert} L(1,τ)·∏_{split} ζ(1)`.
pub fn volume_formula(
    unit_index: u64,
    norm_df: &BigRational,
    norm_dk: &BigRational,
    norm_c: u64,
    places: &[VolumePlace],
) -> Result<Expr, LocalError> {
    if unit_index == 0 || norm_c == 0 {
        return Err(LocalError::BadParam("unit index and N𝔠 must be positive".into()));
    }
    let half = BigRational::new(1.into(), 2.into());
    let mut e = Expr::rational(BigRational::new(1.into(), (unit_index * norm_c).into()))
        .times_power(&(norm_df / norm_dk), &half);
    for v in places {
        e = e.scale(&rpow(&v.q_inv, v.level as i64));
        e = match v.kind {
            PlaceKind::Inert => e.times_token(Token::LTau(v.name.clone()), 1),
            PlaceKind::Split => e.times_token(Token::Zeta { place: v.name.clone(), s: 1 }, 1),
        };
    }
    Ok(e)
}

/// How a split exceptional prime's root number is supplied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootNumber {
    /// A bare value with no factorization.
    Value(i8),
    /// `ε(1/2,π) = ε(1/2,μ)ε(1/2,μ|·|^{-1})` with `μ²|·|^{-1} = 1` asserted or not.
    Factorized { mu_squared_is_abs: bool },
}

/// `Ω_{J₂}/Ω_{J_p} = ∏_{p ∈ J₁} ε(1/2, π_p, ψ_p)`, reduced. Returns whether it is 1.
pub fn period_ratio_check(primes: &[(String, RootNumber)]) -> Result<(bool, Expr), LocalError> {
    let mut e = Expr::int(1);
    for (name, rn) in primes {
        e = match rn {
            RootNumber::Value(x) => {
                check_sign(*x, "root number")?;
                e.scale(&rat(*x as i64))
            }
            RootNumber::Factorized { mu_squared_is_abs: true } => {
                e.times_token(Token::EpsMu(name.clone()), 1).times_token(Token::EpsMuTwist(name.clone()), 1)
            }
            RootNumber::Factorized { mu_squared_is_abs: false } => {
                // without μ² = |·| the two factors are unrelated symbols
                e.times_token(Token::EpsMu(name.clone()), 1).times_token(Token::EpsMuTwist(format!("{name}'")), 1)
            }
        };
    }
    Ok((e == Expr::int(1), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn l_factor_examples() {
        let sp = RepCase::Special { mu: rat(1) };
        assert_eq!(local_l_factor(&sp, &rat(1), &rat(0)).unwrap(), rat(1));
        assert_eq!(local_l_factor(&sp, &rat(1), &q(1, 2)).unwrap(), rat(2));
        let a = RepCase::Unramified { mu1: q(2, 3), mu2: q(3, 2) };
        let b = RepCase::Unramified { mu1: q(3, 2), mu2: q(2, 3) };
        assert_eq!(local_l_factor(&a, &rat(1), &q(1, 5)), local_l_factor(&b, &rat(1), &q(1, 5)));
        assert_eq!(local_l_factor(&sp, &rat(1), &rat(1)), Err(LocalError::PoleAtS));
    }

    #[test]
    fn whittaker_examples() {
        let sp = RepCase::Special { mu: q(1, 3) };
        assert_eq!(whittaker_value(&sp, 0, &q(1, 9)).unwrap(), Expr::int(1));
        assert_eq!(whittaker_value(&sp, 2, &q(1, 9)).unwrap(), Expr::rational(q(1, 81)));
        assert!(whittaker_value(&sp, -1, &q(1, 9)).unwrap().is_zero());
        let deg = RepCase::Unramified { mu1: rat(2), mu2: rat(2) };
        assert_eq!(whittaker_value(&deg, 1, &q(1, 9)), Err(LocalError::Degenerate));
    }

    #[test]
    fn zeta_examples() {
        let sp = RepCase::Special { mu: rat(1) };
        let z = zeta_integral_check(&sp, &rat(1), &q(1, 3), &rat(1), 5).unwrap();
        assert_eq!(z.closed, q(3, 2));
        assert_eq!(z.tail, rpow(&q(1, 3), 6) * q(3, 2));
        assert!(z.holds());
        let z0 = zeta_integral_check(&sp, &rat(1), &q(1, 3), &q(1, 7), 0).unwrap();
        assert_eq!(z0.partial, q(1, 7));
    }

    #[test]
    fn archimedean_p() {
        let p = LocalParams { k: Some(2), m: Some(0), ..Default::default() };
        let e = toric_p_value(ToricCase::Archimedean, &p).unwrap();
        assert_eq!(e, Expr::token(Token::Pi, -1));
    }

    #[test]
    fn period_ratio() {
        assert!(period_ratio_check(&[]).unwrap().0);
        let one = [("p".to_string(), RootNumber::Factorized { mu_squared_is_abs: true })];
        assert!(period_ratio_check(&one).unwrap().0);
        let (ok, e) = period_ratio_check(&[("p".to_string(), RootNumber::Value(-1))]).unwrap();
        assert!(!ok);
        assert_eq!(e, Expr::int(-1));
    }
}
