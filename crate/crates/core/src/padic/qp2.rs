use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::number::{ppow, PadicNumber};
use super::PadicError;

/// Minimal polynomial data of the Teichmüller generator ω: `ω² = t·ω − n`.
#[derive(Debug)]
struct OmegaData {
    digits: i64,
    trace: BigInt,
    norm: BigInt,
}

fn omega_cache() -> &'static Mutex<HashMap<u32, Arc<OmegaData>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<OmegaData>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

// Arithmetic in Z/p^w [x]/(x² − t x + n).
fn qmul(a: &(BigInt, BigInt), b: &(BigInt, BigInt), t: &BigInt, n: &BigInt, m: &BigInt) -> (BigInt, BigInt) {
    let c2 = &a.1 * &b.1;
    let c0 = &a.0 * &b.0 - &c2 * n;
    let c1 = &a.0 * &b.1 + &a.1 * &b.0 + &c2 * t;
    (c0.mod_floor(m), c1.mod_floor(m))
}

fn qpow(a: &(BigInt, BigInt), e: &BigInt, t: &BigInt, n: &BigInt, m: &BigInt) -> (BigInt, BigInt) {
    let mut result = (BigInt::one(), BigInt::zero());
    let bits = e.bits();
    for i in (0..bits).rev() {
        result = qmul(&result, &result, t, n, m);
        if e.bit(i) {
            result = qmul(&result, a, t, n, m);
        }
    }
    result
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn compute_omega(p: u32, digits: i64) -> OmegaData {
    let pb = BigInt::from(p);
    let order = (p as u64) * (p as u64) - 1;
    let factors = prime_factors(order);
    // Smallest (t0, n0) whose root generates F_{p²}^× (primitive implies irreducible).
    let (t0, n0) = (0..p)
        .flat_map(|t| (1..p).map(move |n| (t, n)))
        .find(|&(t, n)| {
            let (tb, nb) = (BigInt::from(t), BigInt::from(n));
            let x = (BigInt::zero(), BigInt::one());
            let disc = (t as i64 * t as i64 - 4 * n as i64).rem_euclid(p as i64);
            let is_square = (0..p as i64).any(|y| (y * y - disc).rem_euclid(p as i64) == 0);
            !is_square
                && factors.iter().all(|&q| {
                    let r = qpow(&x, &BigInt::from(order / q), &tb, &nb, &pb);
                    r != (BigInt::one(), BigInt::zero())
                })
        })
        .expect("F_{p^2} has a primitive element");
    let (tb, nb) = (BigInt::from(t0), BigInt::from(n0));
    let m = ppow(p, digits);
    let p2 = BigInt::from(p) * BigInt::from(p);
    let mut w = (BigInt::zero(), BigInt::one());
    for _ in 0..digits {
        w = qpow(&w, &p2, &tb, &nb, &m);
    }
    let wp = qpow(&w, &BigInt::from(p), &tb, &nb, &m);
    let tr = ((&w.0 + &wp.0).mod_floor(&m), (&w.1 + &wp.1).mod_floor(&m));
    let nm = qmul(&w, &wp, &tb, &nb, &m);
    debug_assert!(tr.1.is_zero() && nm.1.is_zero());
    OmegaData { digits, trace: tr.0, norm: nm.0 }
}

fn omega_data(p: u32, digits: i64) -> Arc<OmegaData> {
    let mut cache = omega_cache().lock().expect("omega cache");
    if let Some(d) = cache.get(&p) {
        if d.digits >= digits {
            return d.clone();
        }
    }
    let d = Arc::new(compute_omega(p, digits.max(64)));
    cache.insert(p, d.clone());
    d
}

/// `a + b·ω` in the unramified quadratic extension of Q_p, where ω is the
/// Teichmüller lift of a fixed generator of F_{p²}^×.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Qp2Number {
    a: PadicNumber,
    b: PadicNumber,
}

impl Qp2Number {
    pub fn new(a: PadicNumber, b: PadicNumber) -> Self {
        assert_eq!(a.p(), b.p(), "coordinates over different primes");
        let prec = a.prec().min(b.prec());
        Qp2Number { a: a.cap(prec), b: b.cap(prec) }
    }

    pub fn from_padic(a: &PadicNumber) -> Self {
        Self::new(a.clone(), PadicNumber::zero(a.p(), a.prec()))
    }

    /// The generator ω itself.
    pub fn omega(p: u32, prec: i64) -> Self {
        Self::new(PadicNumber::zero(p, prec), PadicNumber::one(p, prec))
    }

    pub fn p(&self) -> u32 {
        self.a.p()
    }

    pub fn prec(&self) -> i64 {
        self.a.prec().min(self.b.prec())
    }

    pub fn a(&self) -> &PadicNumber {
        &self.a
    }

    pub fn b(&self) -> &PadicNumber {
        &self.b
    }

    /// `ω + ω^p` and `ω^{p+1}`, the trace and norm of ω, at `prec` digits.
    pub fn omega_trace_norm(p: u32, prec: i64) -> (PadicNumber, PadicNumber) {
        let d = omega_data(p, prec + 8);
        (
            PadicNumber::from_scaled(p, d.digits, 0, &d.trace),
            PadicNumber::from_scaled(p, d.digits, 0, &d.norm),
        )
    }

    fn tn(&self) -> (PadicNumber, PadicNumber) {
        Self::omega_trace_norm(self.p(), self.prec().max(1) + 8)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// `None` for zero; otherwise `min(v(a), v(b))` (ω is a unit of an integral basis).
    pub fn valuation(&self) -> Option<i64> {
        match (self.a.valuation(), self.b.valuation()) {
            (None, None) => None,
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(y),
            (Some(x), Some(y)) => Some(x.min(y)),
        }
    }

    pub fn in_qp(&self) -> bool {
        self.b.is_zero()
    }

    pub fn with_prec(&self, prec: i64) -> Self {
        Qp2Number { a: self.a.with_prec(prec), b: self.b.with_prec(prec) }
    }

    pub fn cap(&self, prec: i64) -> Self {
        Qp2Number { a: self.a.cap(prec), b: self.b.cap(prec) }
    }

    /// The Frobenius conjugate `a + b·σ(ω) = (a + b·t) − b·ω`.
    pub fn conj(&self) -> Self {
        let (t, _) = self.tn();
        Self::new(&self.a + &(&self.b * &t), -&self.b)
    }

    /// `x·conj(x) = a² + a b t + b² n`, an element of Q_p.
    pub fn norm(&self) -> PadicNumber {
        let (t, n) = self.tn();
        let ab = &self.a * &self.b;
        &(&(&self.a * &self.a) + &(&ab * &t)) + &(&(&self.b * &self.b) * &n)
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, PadicError> {
        let n = other.norm();
        if n.is_zero() {
            return Err(PadicError::DivisionByZero);
        }
        let num = self * &other.conj();
        Ok(Self::new(num.a.checked_div(&n)?, num.b.checked_div(&n)?))
    }

    pub fn scale(&self, c: &PadicNumber) -> Self {
        Self::new(&self.a * c, &self.b * c)
    }

    pub fn div_int(&self, k: i64) -> Self {
        Self::new(self.a.div_int(k), self.b.div_int(k))
    }

    /// Multiplication by `p^k` (shifts both coordinates' valuations).
    pub fn shift(&self, k: i64) -> Self {
        let f = |x: &PadicNumber| match x.valuation() {
            None => PadicNumber::zero(x.p(), x.prec() + k),
            Some(v) => PadicNumber::from_scaled(x.p(), x.prec() + k, v + k, x.unit()),
        };
        Self::new(f(&self.a), f(&self.b))
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut result = Self::from_padic(&PadicNumber::one(self.p(), self.prec().max(1)));
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn agreement(&self, other: &Self) -> i64 {
        let d = self - other;
        d.a.val_or_prec().min(d.b.val_or_prec())
    }
}

impl fmt::Display for Qp2Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})*w", self.a, self.b)
    }
}

impl fmt::Debug for Qp2Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'a> Add<&'a Qp2Number> for &'a Qp2Number {
    type Output = Qp2Number;
    fn add(self, rhs: &'a Qp2Number) -> Qp2Number {
        Qp2Number::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl<'a> Sub<&'a Qp2Number> for &'a Qp2Number {
    type Output = Qp2Number;
    fn sub(self, rhs: &'a Qp2Number) -> Qp2Number {
        Qp2Number::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl<'a> Mul<&'a Qp2Number> for &'a Qp2Number {
    type Output = Qp2Number;
    fn mul(self, rhs: &'a Qp2Number) -> Qp2Number {
        let (t, n) = Qp2Number::omega_trace_norm(self.p(), self.prec().max(rhs.prec()).max(1) + 8);
        let bd = &self.b * &rhs.b;
        let a = &(&self.a * &rhs.a) - &(&bd * &n);
        let b = &(&(&self.a * &rhs.b) + &(&self.b * &rhs.a)) + &(&bd * &t);
        Qp2Number::new(a, b)
    }
}

impl<'a> Div<&'a Qp2Number> for &'a Qp2Number {
    type Output = Qp2Number;
    fn div(self, rhs: &'a Qp2Number) -> Qp2Number {
        self.checked_div(rhs).expect("Qp2 division by zero")
    }
}

impl Neg for &Qp2Number {
    type Output = Qp2Number;
    fn neg(self) -> Qp2Number {
        Qp2Number::new(-&self.a, -&self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_is_root_of_unity() {
        for p in [3u32, 5, 7, 11] {
            let w = Qp2Number::omega(p, 20);
            let one = Qp2Number::from_padic(&PadicNumber::one(p, 20));
            let r = w.pow((p * p - 1) as u64);
            assert!((&r - &one).is_zero(), "p={p}");
            assert!(!w.in_qp());
            assert!(w.pow((p + 1) as u64).in_qp());
        }
    }

    #[test]
    fn conj_is_involution_and_multiplicative() {
        let p = 5;
        let x = Qp2Number::new(PadicNumber::from_int(p, 7, 15), PadicNumber::from_int(p, 3, 15));
        let y = Qp2Number::new(PadicNumber::from_ratio(p, 2, 25, 15), PadicNumber::from_int(p, 11, 15));
        assert_eq!(x.conj().conj(), x);
        assert!((&(&x * &y).conj() - &(&x.conj() * &y.conj())).is_zero());
        assert!(x.norm().valuation() == Some(0));
    }

    #[test]
    fn division_inverts_multiplication() {
        let p = 3;
        let x = Qp2Number::new(PadicNumber::from_int(p, 4, 12), PadicNumber::from_int(p, 9, 12));
        let y = Qp2Number::new(PadicNumber::from_int(p, 1, 12), PadicNumber::from_int(p, 2, 12));
        let z = &(&x * &y) / &y;
        assert!(z.agreement(&x) >= 11);
    }
}
