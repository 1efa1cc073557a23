//! The distribution `μ_c` of a bounded harmonic cocycle: disc moments, Riemann
//! sums with tail bounds, the Schneider and Coleman evaluations, the Teitelbaum
//! L-invariant, and the Tate parameter of a j-invariant.

use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::harmonic::{HarmonicCocycle, HarmonicError, MultiCocycle};
use crate::padic::{LogBranch, PadicError, PadicNumber, Qp2Number};
use crate::tree::{geodesic, vp, Disc, HyperbolicAxis, Mat2, TreeVertex, TwistedMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("{0} is outside the table")]
    OutOfTable(String),
    #[error("moment index {0} exceeds weight - 2 = {1}")]
    BadMomentIndex(u32, u32),
    #[error("depth {requested} exceeds the usable table depth {usable}")]
    DepthTooShallow { requested: i64, usable: i64 },
    #[error("z0 must have a nonzero omega-coordinate")]
    Z0InQp,
    #[error("Schneider value is zero")]
    ZeroSchneider,
    #[error("j-invariant is integral (v(j) = {0})")]
    IntegralJInvariant(i64),
    #[error("operation needs at least two components")]
    NeedsMultipleComponents,
    #[error("operation supports weight 2 only, got {0}")]
    WeightUnsupported(u32),
    #[error("function piece is not analytic on {0}")]
    NotAnalytic(String),
    #[error("pieces overlap: {0} and {1}")]
    OverlappingPieces(String, String),
    #[error("endpoint masses do not vanish; the telescoped identity does not apply")]
    EndpointAtoms,
    #[error("branch does not kill the period")]
    BranchNotPeriod,
    #[error(transparent)]
    Harmonic(HarmonicError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

impl From<HarmonicError> for DistError {
    fn from(e: HarmonicError) -> Self {
        match e {
            HarmonicError::OutOfTable(s) => DistError::OutOfTable(s),
            other => DistError::Harmonic(other),
        }
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `p^e` as a rational, any sign of `e`.
pub fn pow_p(p: u32, e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(crate::padic::ppow(p, e))
    } else {
        BigRational::new(BigInt::one(), crate::padic::ppow(p, -e))
    }
}

fn binom(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |r, i| r * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// A value known modulo `p^error_val` from truncation, on top of its own precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Estimate {
    pub value: PadicNumber,
    /// Riemann tail bound: the exact integral agrees with `value` modulo `p^error_val`.
    pub error_val: i64,
}

impl Estimate {
    /// `min(arithmetic precision, tail bound)`.
    pub fn precision(&self) -> i64 {
        self.value.prec().min(self.error_val)
    }
}

/// A piece of a locally analytic function.
#[derive(Clone, Debug)]
pub enum Piece {
    /// `Σ c_i (x − center)^i`.
    Poly { center: BigRational, coeffs: Vec<PadicNumber> },
    /// `log_u(x)` on a disc avoiding 0.
    Log { branch: LogBranch },
    /// `ord_p(x)` on a disc avoiding 0.
    Ord,
}

impl Piece {
    pub fn constant(c: PadicNumber) -> Self {
        Piece::Poly { center: BigRational::zero(), coeffs: vec![c] }
    }

    /// First `count` Taylor coefficients at `a`.
    fn taylor(&self, p: u32, prec: i64, a: &BigRational, count: usize) -> Result<Vec<PadicNumber>, DistError> {
        match self {
            Piece::Poly { center, coeffs } => {
                let d = a - center;
                Ok((0..count)
                    .map(|i| {
                        let mut acc = PadicNumber::zero(p, prec);
                        for (l, c) in coeffs.iter().enumerate().skip(i) {
                            let f = BigRational::from_integer(binom(l as u32, i as u32)) * num_traits::pow(d.clone(), l - i);
                            acc = &acc + &c.mul_rational(&f);
                        }
                        acc
                    })
                    .collect())
            }
            Piece::Log { branch } => {
                let x = PadicNumber::from_rational(p, a, prec + vp(p, a).unwrap_or(0).max(0));
                let mut out = vec![branch.log(&x)?];
                for i in 1..count as i64 {
                    let ai = num_traits::pow(a.clone(), i as usize);
                    let sign = if i % 2 == 1 { 1 } else { -1 };
                    out.push(PadicNumber::from_rational(p, &(rat(sign) / (rat(i) * ai)), prec));
                }
                Ok(out)
            }
            Piece::Ord => {
                let v = vp(p, a).ok_or_else(|| DistError::NotAnalytic("ord at 0".into()))?;
                let mut out = vec![PadicNumber::from_int(p, v, prec)];
                out.resize(count, PadicNumber::zero(p, prec));
                Ok(out)
            }
        }
    }

    /// Lower bound for `min_{i ≥ from} v(t_i) + m·(i + 1 − k/2)` on the ball `(a, m)`; `None` for +∞.
    fn tail_val(&self, p: u32, a: &BigRational, m: i64, weight: u32) -> Result<Option<i64>, DistError> {
        let from = (weight - 1) as i64;
        let shift = 1 - (weight as i64) / 2;
        match self {
            Piece::Poly { center, coeffs } => {
                let d = a - center;
                let mut best: Option<i64> = None;
                for i in from..coeffs.len() as i64 {
                    let mut t = BigRational::zero();
                    let mut ok = false;
                    for (l, c) in coeffs.iter().enumerate().skip(i as usize) {
                        if c.is_zero() {
                            continue;
                        }
                        ok = true;
                        t += c.to_rational()
                            * BigRational::from_integer(binom(l as u32, i as u32))
                            * num_traits::pow(d.clone(), l - i as usize);
                    }
                    let prec_floor = coeffs.iter().map(|c| c.prec()).min().unwrap_or(0);
                    if ok {
                        let v = vp(p, &t).unwrap_or(prec_floor).min(prec_floor);
                        let b = v + m * (i + shift);
                        best = Some(best.map_or(b, |x: i64| x.min(b)));
                    }
                }
                Ok(best)
            }
            Piece::Log { .. } => {
                let va = vp(p, a).ok_or_else(|| DistError::NotAnalytic("log at 0".into()))?;
                if m <= va {
                    return Err(DistError::NotAnalytic(format!("log on D({a};{m})")));
                }
                let best = (from..from + 128)
                    .map(|i| {
                        let vi = crate::padic::split_p(p, &BigInt::from(i)).0;
                        -vi - i * va + m * (i + shift)
                    })
                    .min();
                Ok(best)
            }
            Piece::Ord => {
                let va = vp(p, a).ok_or_else(|| DistError::NotAnalytic("ord at 0".into()))?;
                if m <= va {
                    return Err(DistError::NotAnalytic(format!("ord on D({a};{m})")));
                }
                Ok(None)
            }
        }
    }
}

/// A function given by analytic pieces on pairwise disjoint discs, zero elsewhere.
#[derive(Clone, Debug, Default)]
pub struct LocallyAnalyticFunction {
    pieces: Vec<(Disc, Piece)>,
}

impl LocallyAnalyticFunction {
    pub fn new(pieces: Vec<(Disc, Piece)>) -> Result<Self, DistError> {
        for (i, (d1, _)) in pieces.iter().enumerate() {
            for (d2, _) in &pieces[i + 1..] {
                if discs_meet(d1, d2) {
                    return Err(DistError::OverlappingPieces(d1.label(), d2.label()));
                }
            }
        }
        Ok(LocallyAnalyticFunction { pieces })
    }

    pub fn indicator(d: Disc, p: u32, prec: i64) -> Self {
        LocallyAnalyticFunction { pieces: vec![(d, Piece::constant(PadicNumber::one(p, prec)))] }
    }

    pub fn pieces(&self) -> &[(Disc, Piece)] {
        &self.pieces
    }
}

fn discs_meet(a: &Disc, b: &Disc) -> bool {
    match (a, b) {
        (Disc::CoBall { .. }, Disc::CoBall { .. }) => true,
        (Disc::Ball { p, a: c1, m: m1 }, Disc::Ball { a: c2, m: m2, .. }) => {
            let m = (*m1).min(*m2);
            vp(*p, &(c1 - c2)).map_or(true, |v| v >= m)
        }
        (Disc::Ball { p, a: c, m }, Disc::CoBall { a: c2, m: m2, .. })
        | (Disc::CoBall { a: c2, m: m2, .. }, Disc::Ball { p, a: c, m }) => {
            // The ball misses the co-ball only if it sits inside the removed ball.
            let inside = *m >= *m2 && vp(*p, &(c - c2)).map_or(true, |v| v >= *m2);
            !inside
        }
    }
}

/// Moment/Riemann-sum view of a harmonic cocycle.
pub struct TreeDistribution<'a> {
    c: &'a HarmonicCocycle,
    cache: RwLock<HashMap<(Disc, u32), PadicNumber>>,
}

impl<'a> TreeDistribution<'a> {
    pub fn new(c: &'a HarmonicCocycle) -> Self {
        TreeDistribution { c, cache: RwLock::new(HashMap::new()) }
    }

    pub fn cocycle(&self) -> &HarmonicCocycle {
        self.c
    }

    fn p(&self) -> u32 {
        self.c.p()
    }

    fn k(&self) -> u32 {
        self.c.weight()
    }

    /// Largest depth at which every cover disc stays inside the table.
    pub fn usable_depth(&self) -> i64 {
        self.c.depth() - 1
    }

    fn check_depth(&self, m: i64) -> Result<(), DistError> {
        let usable = self.usable_depth();
        if m > usable {
            return Err(DistError::DepthTooShallow { requested: m, usable });
        }
        Ok(())
    }

    /// `∫_U x^j dμ = ⟨c(e), X^j Y^{k−2−j}⟩ / binom(k−2, j)` with `U = U_e`.
    pub fn moment(&self, disc: &Disc, j: u32) -> Result<PadicNumber, DistError> {
        let n = self.k() - 2;
        if j > n {
            return Err(DistError::BadMomentIndex(j, n));
        }
        let key = (disc.clone(), j);
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let v = self.c.evaluate(&disc.to_edge())?;
        let m = v[j as usize].mul_rational(&BigRational::new(BigInt::one(), binom(n, j)));
        self.cache.write().expect("cache lock").insert(key, m.clone());
        Ok(m)
    }

    /// `∫_{a + p^m Z_p} (x − a)^j dμ` by binomial recentering.
    pub fn centered_moment(&self, a: &BigRational, m: i64, j: u32) -> Result<PadicNumber, DistError> {
        let disc = Disc::ball(self.p(), a, m);
        let mut acc: Option<PadicNumber> = None;
        for i in 0..=j {
            let coef = BigRational::from_integer(binom(j, i)) * num_traits::pow(-a.clone(), (j - i) as usize);
            let term = self.moment(&disc, i)?.mul_rational(&coef);
            acc = Some(match acc {
                None => term,
                Some(s) => &s + &term,
            });
        }
        Ok(acc.expect("j >= 0"))
    }

    /// The same centered moment through the transport rule: `p^{m(j+1−k/2)}` times
    /// the `x^j` moment of `g⋆c` on `Z_p`, with `g = [[1, −a], [0, p^m]]`.
    pub fn transported_moment(&self, a: &BigRational, m: i64, j: u32) -> Result<PadicNumber, DistError> {
        let p = self.p();
        let pm = pow_p(p, m);
        let g = TwistedMatrix::plain(Mat2::new(rat(1), -a.clone(), rat(0), pm)).map_err(HarmonicError::from)?;
        let moved = self.c.act_star(&g)?;
        let base = TreeDistribution::new(&moved).moment(&Disc::ball_int(p, 0, 0), j)?;
        let e = m * (j as i64 + 1 - self.k() as i64 / 2);
        Ok(base.mul_rational(&pow_p(p, e)))
    }

    /// `v(A(a))` with `A(a) = max(1, |a|)^{k−2}`.
    pub fn center_factor_val(&self, a: &BigRational) -> i64 {
        (self.k() as i64 - 2) * vp(self.p(), a).map_or(0, |v| v.min(0))
    }

    /// Valuation of the growth constant `A`, measured on the stored table:
    /// the minimum over stored balls of `v(∫(x−a)^j) − m(j+1−k/2) − v(A(a))`.
    /// `None` for the zero cocycle.
    pub fn growth_constant(&self) -> Result<Option<i64>, DistError> {
        let k = self.k() as i64;
        let mut best: Option<i64> = None;
        for (e, _) in self.c.entries() {
            let child = e.child();
            for j in 0..=(self.k() - 2) {
                let mom = self.centered_moment(child.center(), child.level(), j)?;
                if let Some(v) = mom.valuation() {
                    let b = v - child.level() * (j as i64 + 1 - k / 2) - self.center_factor_val(child.center());
                    best = Some(best.map_or(b, |x| x.min(b)));
                }
            }
        }
        Ok(best)
    }

    /// Sub-balls of `(a, m0)` at level `m` that carry support, found by pruned descent.
    fn supported_subballs(&self, a: &BigRational, m0: i64, m: i64) -> Result<Vec<TreeVertex>, DistError> {
        let mut out = Vec::new();
        let mut stack = vec![TreeVertex::new(self.p(), m0, a)];
        while let Some(v) = stack.pop() {
            if !self.c.has_support_below(&v)? {
                continue;
            }
            if v.level() >= m {
                out.push(v);
            } else {
                stack.extend(v.children());
            }
        }
        Ok(out)
    }

    /// Depth-`m` Riemann sum of `f` with the tail bound of the growth estimate.
    pub fn integrate(&self, f: &LocallyAnalyticFunction, m: i64) -> Result<Estimate, DistError> {
        self.check_depth(m)?;
        let p = self.p();
        let k = self.k();
        let prec = self.c.prec();
        let a_val = self.growth_constant()?;
        let mut total = PadicNumber::zero(p, prec);
        let mut err = i64::MAX;
        for (disc, piece) in f.pieces() {
            match disc {
                Disc::CoBall { .. } => {
                    let Piece::Poly { center, coeffs } = piece else {
                        return Err(DistError::NotAnalytic(disc.label()));
                    };
                    if !center.is_zero() || coeffs.len() > (k - 1) as usize {
                        return Err(DistError::NotAnalytic(disc.label()));
                    }
                    for (j, c) in coeffs.iter().enumerate() {
                        total = &total + &(c * &self.moment(disc, j as u32)?);
                    }
                }
                Disc::Ball { a: a0, m: m0, .. } => {
                    let level = m.max(*m0);
                    for ball in self.supported_subballs(a0, *m0, level)? {
                        let a = ball.center();
                        let t = piece.taylor(p, prec, a, (k - 1) as usize)?;
                        for (j, tj) in t.iter().enumerate() {
                            let mom = if k == 2 {
                                self.moment(&Disc::ball(p, a, level), 0)?
                            } else {
                                self.centered_moment(a, level, j as u32)?
                            };
                            total = &total + &(tj * &mom);
                        }
                        if let (Some(av), Some(tv)) = (a_val, piece.tail_val(p, a, level, k)?) {
                            err = err.min(av + self.center_factor_val(a) + tv);
                        }
                    }
                }
            }
        }
        Ok(Estimate { value: total, error_val: err })
    }

    /// Discs of the depth-`m` cover of P¹ around `V(0;0)` that carry support,
    /// with their masses. Weight 2.
    pub fn p1_cover(&self, m: i64) -> Result<Vec<(Disc, PadicNumber)>, DistError> {
        if self.k() != 2 {
            return Err(DistError::WeightUnsupported(self.k()));
        }
        self.check_depth(m)?;
        let p = self.p();
        let origin = TreeVertex::origin(p);
        let mut out = Vec::new();
        // (disc, depth reached) ; start from the p+1 edges at the origin.
        let mut stack: Vec<(Disc, i64)> = origin
            .children()
            .map(|v| (Disc::ball(p, v.center(), v.level()), 1))
            .chain(std::iter::once((Disc::infinite(p, 0), 1)))
            .collect();
        while let Some((d, depth)) = stack.pop() {
            match &d {
                Disc::Ball { a, m: lvl, .. } => {
                    let v = TreeVertex::new(p, *lvl, a);
                    if !self.c.has_support_below(&v)? {
                        continue;
                    }
                    if depth >= m {
                        let mass = self.moment(&d, 0)?;
                        out.push((d, mass));
                    } else {
                        stack.extend(v.children().map(|w| (Disc::ball(p, w.center(), w.level()), depth + 1)));
                    }
                }
                Disc::CoBall { a, m: lvl, .. } => {
                    if depth >= m {
                        let mass = self.moment(&d, 0)?;
                        out.push((d, mass));
                        continue;
                    }
                    let removed = TreeVertex::new(p, *lvl, a);
                    let parent = removed.parent();
                    for w in parent.children().filter(|w| *w != removed) {
                        stack.push((Disc::ball(p, w.center(), w.level()), depth + 1));
                    }
                    stack.push((Disc::ball(p, parent.center(), parent.level()).complement(), depth + 1));
                }
            }
        }
        Ok(out)
    }

    /// Total mass of the depth-`m` cover of P¹ (zero for any harmonic cocycle).
    pub fn total_mass(&self, m: i64) -> Result<PadicNumber, DistError> {
        let zero = PadicNumber::zero(self.p(), self.c.prec());
        Ok(self.p1_cover(m)?.iter().fold(zero, |acc, (_, w)| &acc + w))
    }
}

/// `δ(γ) = Σ_{e ∈ v → γv} c(e)`.
pub fn schneider_value(c: &HarmonicCocycle, gamma: &TwistedMatrix, v: &TreeVertex) -> Result<PadicNumber, DistError> {
    if c.weight() != 2 {
        return Err(DistError::WeightUnsupported(c.weight()));
    }
    let w = gamma.act_vertex(v);
    let mut sum = PadicNumber::zero(c.p(), c.prec());
    for e in geodesic(v, &w) {
        sum = &sum + &c.value(&e)?;
    }
    Ok(sum)
}

fn qp2_from_rational(p: u32, x: &BigRational, prec: i64) -> Qp2Number {
    Qp2Number::from_padic(&PadicNumber::from_rational(p, x, prec))
}

/// Möbius action on Q_{p²}.
pub fn mobius_qp2(m: &Mat2, z: &Qp2Number) -> Result<Qp2Number, DistError> {
    let p = z.p();
    let n = z.prec();
    let num = &(z * &qp2_from_rational(p, &m.a, n)) + &qp2_from_rational(p, &m.b, n);
    let den = &(z * &qp2_from_rational(p, &m.c, n)) + &qp2_from_rational(p, &m.d, n);
    Ok(num.checked_div(&den)?)
}

/// The default `z₀`: the generator ω of Q_{p²}.
pub fn default_z0(p: u32, prec: i64) -> Qp2Number {
    Qp2Number::omega(p, prec)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaValue {
    /// The Q_p-coordinate of the Riemann sum.
    pub value: Estimate,
    /// The full Q_{p²} Riemann sum; its ω-coordinate vanishes in the limit.
    pub raw: Qp2Number,
    pub depth: i64,
}

/// `∫ log_u((t − γz₀)/(t − z₀)) dμ_c(t)` as a depth-`m` Riemann sum over P¹.
pub fn lambda_value(
    c: &HarmonicCocycle,
    gamma: &TwistedMatrix,
    branch: &LogBranch,
    z0: &Qp2Number,
    m: i64,
) -> Result<LambdaValue, DistError> {
    if c.weight() != 2 {
        return Err(DistError::WeightUnsupported(c.weight()));
    }
    if z0.b().is_zero() {
        return Err(DistError::Z0InQp);
    }
    let p = c.p();
    let dist = TreeDistribution::new(c);
    let prec = c.prec().min(z0.prec());
    let z0 = z0.cap(prec);
    let gz0 = mobius_qp2(gamma.effective(), &z0)?;
    let a_val = dist.growth_constant()?;
    let mut total = qp2_from_rational(p, &BigRational::zero(), prec);
    let mut err = i64::MAX;
    for (disc, mass) in dist.p1_cover(m)? {
        match &disc {
            Disc::Ball { a, m: lvl, .. } => {
                let t = qp2_from_rational(p, a, prec + 2 * vp(p, a).unwrap_or(0).abs());
                let ratio = (&t - &gz0).checked_div(&(&t - &z0))?;
                let f = branch.log_qp2(&ratio)?;
                total = &total + &f.scale(&mass);
                if let Some(av) = a_val {
                    for w in [&gz0, &z0] {
                        let bound = match vp(p, a) {
                            // Far from 0 the chart s = 1/x is finer: |s − 1/a| = p^{−(lvl − 2v(a))}.
                            Some(va) if va < 0 => w.valuation().unwrap_or(prec) + lvl - 2 * va,
                            _ => lvl - (&t - w).valuation().unwrap_or(prec),
                        };
                        err = err.min(av + bound);
                    }
                }
            }
            Disc::CoBall { m: lvl, .. } => {
                // f(∞) = 0; the bound uses the chart 1/x on {v(x) <= lvl − 1}.
                if let Some(av) = a_val {
                    let vw = gz0.valuation().unwrap_or(prec).min(z0.valuation().unwrap_or(prec));
                    err = err.min(av + (1 - lvl) + vw);
                }
            }
        }
    }
    Ok(LambdaValue { value: Estimate { value: total.a().clone(), error_val: err }, raw: total, depth: m })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LInvariant {
    pub value: Estimate,
    pub lambda: Estimate,
    pub delta: PadicNumber,
}

/// `L = λ/δ` for the hyperbolic `x ↦ q̃x`, with δ taken at `V(0;0)`.
pub fn l_invariant(
    c: &HarmonicCocycle,
    axis: &HyperbolicAxis,
    branch: &LogBranch,
    z0: &Qp2Number,
    m: i64,
) -> Result<LInvariant, DistError> {
    let delta = schneider_value(c, axis.gamma(), &TreeVertex::origin(c.p()))?;
    if delta.is_zero() {
        return Err(DistError::ZeroSchneider);
    }
    let lambda = lambda_value(c, axis.gamma(), branch, z0, m)?.value;
    let dv = delta.valuation().expect("nonzero");
    let value = Estimate { value: lambda.value.checked_div(&delta)?, error_val: lambda.error_val.saturating_sub(dv) };
    Ok(LInvariant { value, lambda, delta })
}

/// `∫ (f ⊗ x^0) dμ` on a product of trees, with `x^0` in coordinate `idx` integrated
/// over all of P¹ and `f = ⊗_{i≠idx} f_i` on the others.
pub fn vanishing_check(
    multi: &MultiCocycle,
    idx: usize,
    others: &[LocallyAnalyticFunction],
    m: i64,
) -> Result<Estimate, DistError> {
    if multi.rank() < 2 {
        return Err(DistError::NeedsMultipleComponents);
    }
    let comps = multi.components();
    if others.len() != comps.len() - 1 || idx >= comps.len() {
        return Err(DistError::NeedsMultipleComponents);
    }
    let mut fs = others.iter();
    let mut value: Option<PadicNumber> = None;
    let mut err = i64::MAX;
    let mut vals = Vec::new();
    for (i, c) in comps.iter().enumerate() {
        let d = TreeDistribution::new(c);
        let est = if i == idx {
            Estimate { value: d.total_mass(m)?, error_val: i64::MAX }
        } else {
            d.integrate(fs.next().expect("length checked"), m)?
        };
        vals.push(est);
    }
    // Product of factors; the error of a product is bounded through the other factors' sizes.
    for (i, est) in vals.iter().enumerate() {
        let others_val: i64 = vals
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| e.value.valuation().unwrap_or(e.value.prec()).min(e.error_val))
            .sum();
        if est.error_val != i64::MAX {
            err = err.min(est.error_val.saturating_add(others_val));
        }
        value = Some(match value {
            None => est.value.clone(),
            Some(v) => &v * &est.value,
        });
    }
    Ok(Estimate { value: value.expect("rank >= 2"), error_val: err })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyCompute {
    pub lambda: PadicNumber,
    pub telescoped: Estimate,
}

/// With no mass at the fixed points 0 and ∞ and a branch killing `q̃`, the Coleman
/// integral telescopes to `∫_F (log_u x − log_u z₀) dμ` over `F = {0 ≤ v(x) < h}`.
/// (The sign matches `γ: x ↦ q̃x`; the inverse convention flips it.)
pub fn key_compute_check(
    c: &HarmonicCocycle,
    axis: &HyperbolicAxis,
    branch: &LogBranch,
    z0: &Qp2Number,
    m: i64,
) -> Result<KeyCompute, DistError> {
    let p = c.p();
    let q = PadicNumber::from_rational(p, axis.qtilde(), c.prec());
    if !branch.log(&q)?.is_zero() {
        return Err(DistError::BranchNotPeriod);
    }
    let dist = TreeDistribution::new(c);
    let h = axis.translation_length();
    let usable = dist.usable_depth();
    let near0 = dist.moment(&Disc::ball_int(p, 0, usable), 0)?;
    let near_inf = dist.moment(&Disc::infinite(p, usable - 1), 0)?;
    if !near0.is_zero() || !near_inf.is_zero() {
        return Err(DistError::EndpointAtoms);
    }
    let lambda = lambda_value(c, axis.gamma(), branch, z0, m)?;
    let logz0 = branch.log_qp2(z0)?;
    let mut pieces = Vec::new();
    for i in 0..h {
        for u in 1..p as i64 {
            let center = rat(u) * BigRational::from_integer(crate::padic::ppow(p, i));
            pieces.push((Disc::ball(p, &center, i + 1), Piece::Log { branch: branch.clone() }));
        }
    }
    let f = LocallyAnalyticFunction::new(pieces)?;
    let logs = dist.integrate(&f, m)?;
    let mass_f = dist.integrate(
        &LocallyAnalyticFunction::new(
            (0..h)
                .flat_map(|i| {
                    (1..p as i64).map(move |u| {
                        Disc::ball(p, &(rat(u) * BigRational::from_integer(crate::padic::ppow(p, i))), i + 1)
                    })
                })
                .map(|d| (d, Piece::constant(PadicNumber::one(p, c.prec()))))
                .collect(),
        )?,
        m,
    )?;
    if !logz0.b().is_zero() && !mass_f.value.is_zero() {
        // log_u(z0) has an ω-part; its contribution must be carried in Q_{p²}.
        let full = &Qp2Number::from_padic(&logs.value) - &logz0.scale(&mass_f.value);
        return Ok(KeyCompute {
            lambda: lambda.value.value,
            telescoped: Estimate { value: full.a().clone(), error_val: logs.error_val.min(mass_f.error_val) },
        });
    }
    let value = &logs.value - &(logz0.a() * &mass_f.value);
    Ok(KeyCompute {
        lambda: lambda.value.value,
        telescoped: Estimate { value, error_val: logs.error_val.min(mass_f.error_val) },
    })
}

/// Coefficients `f_n` of `q·j(q) = Σ f_n q^n`, from `E₄³/Δ`, for `n < order`.
pub fn j_series(order: usize) -> Vec<BigInt> {
    let sigma3 = |n: usize| -> BigInt { (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d).pow(3)).sum() };
    let mul = |a: &[BigInt], b: &[BigInt]| -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); order];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate().take(order - i) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut e4 = vec![BigInt::zero(); order];
    e4[0] = BigInt::one();
    for (n, slot) in e4.iter_mut().enumerate().skip(1) {
        *slot = BigInt::from(240) * sigma3(n);
    }
    let e4_cubed = mul(&mul(&e4, &e4), &e4);
    // Π (1 − q^n)^24 truncated.
    let mut eta24 = vec![BigInt::zero(); order];
    eta24[0] = BigInt::one();
    for n in 1..order {
        for _ in 0..24 {
            for i in (n..order).rev() {
                let t = eta24[i - n].clone();
                eta24[i] -= t;
            }
        }
    }
    // Series division by a series with constant term 1.
    let mut f = vec![BigInt::zero(); order];
    for i in 0..order {
        let mut s = e4_cubed[i].clone();
        for j in 1..=i {
            s -= &eta24[j] * &f[i - j];
        }
        f[i] = s;
    }
    f
}

fn eval_series(coeffs: &[BigInt], x: &PadicNumber) -> PadicNumber {
    let p = x.p();
    let prec = x.prec();
    coeffs.iter().rev().fold(PadicNumber::zero(p, prec), |acc, c| &(&acc * x) + &PadicNumber::from_int(p, c.clone(), prec))
}

/// `j(q) = 1/q + 744 + 196884 q + …`.
pub fn j_of_q(q: &PadicNumber) -> Result<PadicNumber, DistError> {
    let v = q.valuation().ok_or(PadicError::ZeroInput)?;
    let order = (q.prec() / v.max(1) + 2) as usize;
    let f = eval_series(&j_series(order), q);
    Ok(f.checked_div(q)?)
}

/// Solves `j(q) = j` for `v(j) < 0` by the contraction `q ↦ (1/j)·F(q)`.
pub fn tate_parameter(j: &PadicNumber) -> Result<PadicNumber, DistError> {
    let vj = j.valuation().ok_or(DistError::IntegralJInvariant(j.prec()))?;
    if vj >= 0 {
        return Err(DistError::IntegralJInvariant(vj));
    }
    let v = -vj;
    let u = j.inv()?;
    let target = u.prec();
    let order = (target / v + 2) as usize;
    let coeffs = j_series(order.max(2));
    let mut q = u.clone();
    for _ in 0..(target / v + 2) {
        q = &u * &eval_series(&coeffs, &q);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_series_known_coefficients() {
        let f = j_series(4);
        assert_eq!(f[0], BigInt::from(1));
        assert_eq!(f[1], BigInt::from(744));
        assert_eq!(f[2], BigInt::from(196884));
        assert_eq!(f[3], BigInt::from(21493760));
    }

    #[test]
    fn tate_parameter_roundtrip() {
        let p = 5;
        let j = PadicNumber::from_scaled(p, 20, -5, &BigInt::from(7));
        let q = tate_parameter(&j).unwrap();
        assert_eq!(q.valuation(), Some(5));
        assert!(j_of_q(&q).unwrap().agreement(&j) >= 18);
        assert_eq!((&q * &j).residue(), 1);
    }

    #[test]
    fn axis_moments() {
        let p = 3;
        let c = HarmonicCocycle::axis_cocycle(&PadicNumber::from_int(p, 3, 20), 6).unwrap();
        let d = TreeDistribution::new(&c);
        for m in 0..5 {
            assert_eq!(d.moment(&Disc::ball_int(p, 0, m), 0).unwrap(), PadicNumber::one(p, 20));
        }
        assert!(d.moment(&Disc::ball_int(p, 1, 1), 0).unwrap().is_zero());
        assert!(d.moment(&Disc::ball_int(p, 0, 0), 1).is_err());
        assert!(d.total_mass(4).unwrap().is_zero());
    }

    #[test]
    fn axis_lambda_is_log_q() {
        let p = 3;
        let qt = PadicNumber::from_int(p, 3 * 4, 20);
        let c = HarmonicCocycle::axis_cocycle(&qt, 8).unwrap();
        let axis = HyperbolicAxis::new(&qt).unwrap();
        let br = LogBranch::iwasawa(p, 20);
        let l = l_invariant(&c, &axis, &br, &default_z0(p, 20), 6).unwrap();
        let want = br.log(&qt).unwrap();
        assert!(l.value.value.agreement(&want) >= 15);
        assert_eq!(l.delta, PadicNumber::one(p, 20));
    }
}
