use std::cmp::min;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::PadicError;

/// `p^k` as a big integer.
pub fn ppow(p: u32, k: i64) -> BigInt {
    assert!(k >= 0, "negative exponent in ppow");
    num_traits::pow(BigInt::from(p), k as usize)
}

/// Inverse of `a` modulo `m`, assuming `gcd(a, m) = 1`.
pub fn inv_mod(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(m);
    let g = a.extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

/// Splits a nonzero integer into `(v_p(n), n / p^v)`.
pub fn split_p(p: u32, n: &BigInt) -> (i64, BigInt) {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (v, m);
        }
        m = q;
        v += 1;
    }
}

/// Odd-prime check used at construction boundaries.
pub fn is_odd_prime(p: u32) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of Q_p known modulo `p^prec`, stored as `p^v * u` with `u` a unit
/// reduced modulo `p^(prec - v)`. Zero (to the stated precision) has no valuation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PadicNumber {
    p: u32,
    prec: i64,
    val: Option<i64>,
    unit: BigInt,
}

impl PadicNumber {
    /// `O(p^prec)`.
    pub fn zero(p: u32, prec: i64) -> Self {
        PadicNumber { p, prec, val: None, unit: BigInt::zero() }
    }

    pub fn one(p: u32, prec: i64) -> Self {
        Self::from_int(p, 1, prec)
    }

    /// `p^val * m + O(p^prec)` for an arbitrary integer `m`, normalized.
    pub fn from_scaled(p: u32, prec: i64, val: i64, m: &BigInt) -> Self {
        if m.is_zero() || val >= prec {
            return Self::zero(p, prec);
        }
        let (dv, m) = split_p(p, m);
        let val = val + dv;
        if val >= prec {
            return Self::zero(p, prec);
        }
        let modulus = ppow(p, prec - val);
        PadicNumber { p, prec, val: Some(val), unit: m.mod_floor(&modulus) }
    }

    pub fn from_int<T: Into<BigInt>>(p: u32, n: T, prec: i64) -> Self {
        Self::from_scaled(p, prec, 0, &n.into())
    }

    pub fn from_rational(p: u32, q: &BigRational, prec: i64) -> Self {
        if q.numer().is_zero() {
            return Self::zero(p, prec);
        }
        let (vn, n) = split_p(p, q.numer());
        let (vd, d) = split_p(p, q.denom());
        let val = vn - vd;
        if val >= prec {
            return Self::zero(p, prec);
        }
        let modulus = ppow(p, prec - val);
        let dinv = inv_mod(&d, &modulus).expect("unit denominator");
        Self::from_scaled(p, prec, val, &(n * dinv))
    }

    pub fn from_ratio(p: u32, num: i64, den: i64, prec: i64) -> Self {
        Self::from_rational(p, &BigRational::new(num.into(), den.into()), prec)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Absolute precision: the value is known modulo `p^prec`.
    pub fn prec(&self) -> i64 {
        self.prec
    }

    /// `None` when the value is zero to the stated precision.
    pub fn valuation(&self) -> Option<i64> {
        self.val
    }

    /// Valuation with zero mapped to its precision (a lower bound for the true valuation).
    pub fn val_or_prec(&self) -> i64 {
        self.val.unwrap_or(self.prec)
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// Relative precision `prec - v`; zero for an indistinguishable-from-zero value.
    pub fn rel_prec(&self) -> i64 {
        match self.val {
            Some(v) => self.prec - v,
            None => 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    /// The canonical rational representative `p^v * u`.
    pub fn to_rational(&self) -> BigRational {
        match self.val {
            None => BigRational::zero(),
            Some(v) if v >= 0 => BigRational::from_integer(ppow(self.p, v) * &self.unit),
            Some(v) => BigRational::new(self.unit.clone(), ppow(self.p, -v)),
        }
    }

    /// Integer representative in `[0, p^prec)` for values with `v >= 0`.
    pub fn to_integer(&self) -> Option<BigInt> {
        match self.val {
            None => Some(BigInt::zero()),
            Some(v) if v >= 0 => Some(ppow(self.p, v) * &self.unit),
            Some(_) => None,
        }
    }

    /// Same representative, precision changed. Raising precision treats the
    /// representative as exact (zero-padding); lowering truncates.
    pub fn with_prec(&self, prec: i64) -> Self {
        match self.val {
            None => Self::zero(self.p, prec),
            Some(v) => Self::from_scaled(self.p, prec, v, &self.unit),
        }
    }

    /// Truncates to `min(self.prec, prec)`.
    pub fn cap(&self, prec: i64) -> Self {
        if prec >= self.prec {
            self.clone()
        } else {
            self.with_prec(prec)
        }
    }

    fn check_prime(&self, other: &Self) -> Result<(), PadicError> {
        if self.p != other.p {
            return Err(PadicError::PrimeMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_prime(other)?;
        let prec = min(self.prec, other.prec);
        Ok(match (self.val, other.val) {
            (None, _) => other.cap(prec),
            (_, None) => self.cap(prec),
            (Some(a), Some(b)) => {
                let v = min(a, b);
                let m = &self.unit * ppow(self.p, a - v) + &other.unit * ppow(self.p, b - v);
                Self::from_scaled(self.p, prec, v, &m)
            }
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PadicError> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_prime(other)?;
        Ok(match (self.val, other.val) {
            (None, None) => Self::zero(self.p, self.prec + other.prec),
            (None, Some(b)) => Self::zero(self.p, self.prec + b),
            (Some(a), None) => Self::zero(self.p, other.prec + a),
            (Some(a), Some(b)) => {
                let rel = min(self.prec - a, other.prec - b);
                let v = a + b;
                Self::from_scaled(self.p, v + rel, v, &(&self.unit * &other.unit))
            }
        })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, PadicError> {
        self.check_prime(other)?;
        let b = other.val.ok_or(PadicError::DivisionByZero)?;
        Ok(match self.val {
            None => Self::zero(self.p, self.prec - b),
            Some(a) => {
                let rel = min(self.prec - a, other.prec - b);
                let v = a - b;
                let modulus = ppow(self.p, rel);
                let inv = inv_mod(&other.unit, &modulus).expect("unit");
                Self::from_scaled(self.p, v + rel, v, &(&self.unit * inv))
            }
        })
    }

    pub fn inv(&self) -> Result<Self, PadicError> {
        let one = Self::from_int(self.p, 1, self.rel_prec().max(1));
        one.checked_div(self)
    }

    fn neg_ref(&self) -> Self {
        match self.val {
            None => self.clone(),
            Some(v) => Self::from_scaled(self.p, self.prec, v, &-&self.unit),
        }
    }

    pub fn pow(&self, e: i64) -> Result<Self, PadicError> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        if e == 0 {
            return Ok(Self::one(self.p, self.rel_prec().max(self.prec).max(1)));
        }
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => &r * &base,
                });
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result.expect("positive exponent"))
    }

    /// Multiplication by an exact integer: keeps absolute precision shifted by v_p(k).
    pub fn scale_int(&self, k: i64) -> Self {
        let kb = BigInt::from(k);
        if k == 0 {
            return Self::zero(self.p, self.prec);
        }
        let (vk, _) = split_p(self.p, &kb);
        match self.val {
            None => Self::zero(self.p, self.prec + vk),
            Some(v) => Self::from_scaled(self.p, self.prec + vk, v, &(&self.unit * kb)),
        }
    }

    /// Multiplication by an exact rational: absolute precision shifts by `v_p(r)`.
    pub fn mul_rational(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero(self.p, self.prec);
        }
        let (vn, n) = split_p(self.p, r.numer());
        let (vd, d) = split_p(self.p, r.denom());
        let vr = vn - vd;
        match self.val {
            None => Self::zero(self.p, self.prec + vr),
            Some(v) => {
                let modulus = ppow(self.p, self.prec - v);
                let dinv = inv_mod(&d, &modulus).expect("unit denominator");
                Self::from_scaled(self.p, self.prec + vr, v + vr, &(&self.unit * n * dinv))
            }
        }
    }

    /// Division by an exact nonzero integer: absolute precision drops by v_p(k).
    pub fn div_int(&self, k: i64) -> Self {
        assert!(k != 0, "division by integer zero");
        let kb = BigInt::from(k);
        let (vk, ku) = split_p(self.p, &kb);
        match self.val {
            None => Self::zero(self.p, self.prec - vk),
            Some(v) => {
                let rel = self.prec - v;
                let modulus = ppow(self.p, rel);
                let inv = inv_mod(&ku, &modulus).expect("unit");
                Self::from_scaled(self.p, self.prec - vk, v - vk, &(&self.unit * inv))
            }
        }
    }

    /// Number of agreeing p-adic digits: the valuation of the difference, capped by
    /// the joint precision.
    pub fn agreement(&self, other: &Self) -> i64 {
        let d = self - other;
        d.val_or_prec()
    }

    /// Residue of a unit-or-integral value modulo p.
    pub fn residue(&self) -> u32 {
        match self.val {
            Some(0) => (&self.unit % BigInt::from(self.p)).to_u32().unwrap(),
            _ => 0,
        }
    }

    pub fn is_integral(&self) -> bool {
        self.val.map_or(true, |v| v >= 0)
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.val {
            None => write!(f, "0 + O({}^{})", self.p, self.prec),
            Some(v) => write!(f, "{}^{} * {} + O({}^{})", self.p, v, self.unit, self.p, self.prec),
        }
    }
}

impl fmt::Debug for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PadicNumber {
    type Err = PadicError;

    /// Parses `p^v * u + O(p^N)` or `0 + O(p^N)`; rejects non-canonical units.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PadicError::Parse(s.to_string());
        let (head, tail) = s.split_once(" + O(").ok_or_else(bad)?;
        let tail = tail.strip_suffix(')').ok_or_else(bad)?;
        let (pt, nt) = tail.split_once('^').ok_or_else(bad)?;
        let p: u32 = pt.trim().parse().map_err(|_| bad())?;
        let prec: i64 = nt.trim().parse().map_err(|_| bad())?;
        if !is_odd_prime(p) {
            return Err(PadicError::NotOddPrime(p));
        }
        if head.trim() == "0" {
            return Ok(Self::zero(p, prec));
        }
        let (pv, ut) = head.split_once(" * ").ok_or_else(bad)?;
        let (p2, vt) = pv.split_once('^').ok_or_else(bad)?;
        if p2.trim().parse::<u32>().map_err(|_| bad())? != p {
            return Err(bad());
        }
        let v: i64 = vt.trim().parse().map_err(|_| bad())?;
        let u: BigInt = ut.trim().parse().map_err(|_| bad())?;
        if v >= prec || u.is_negative() || u.is_zero() || (&u % BigInt::from(p)).is_zero() || u >= ppow(p, prec - v) {
            return Err(bad());
        }
        Ok(PadicNumber { p, prec, val: Some(v), unit: u })
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a> $tr<&'a PadicNumber> for &'a PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: &'a PadicNumber) -> PadicNumber {
                self.$checked(rhs).expect(concat!("p-adic ", stringify!($method)))
            }
        }
        impl $tr<PadicNumber> for PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: PadicNumber) -> PadicNumber {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a PadicNumber> for PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: &'a PadicNumber) -> PadicNumber {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for &PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_ref()
    }
}

impl Neg for PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        self.neg_ref()
    }
}

/// Teichmüller lift of a nonzero residue class: the unique (p-1)-th root of unity
/// congruent to `a` mod p, exact to precision `prec`.
pub fn teichmuller(a: i64, p: u32, prec: i64) -> Result<PadicNumber, PadicError> {
    let pb = BigInt::from(p);
    let a = BigInt::from(a).mod_floor(&pb);
    if a.is_zero() {
        return Err(PadicError::ZeroResidue);
    }
    let modulus = ppow(p, prec);
    let mut x = a;
    for _ in 0..prec {
        x = x.modpow(&pb, &modulus);
    }
    Ok(PadicNumber::from_scaled(p, prec, 0, &x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_carries_into_valuation() {
        let x = PadicNumber::from_int(5, 2, 4) + PadicNumber::from_int(5, 3, 4);
        assert_eq!(x.valuation(), Some(1));
        assert_eq!(x.unit(), &BigInt::from(1));
    }

    #[test]
    fn half_mod_625() {
        let h = PadicNumber::from_int(5, 1, 4) / PadicNumber::from_int(5, 2, 4);
        assert_eq!(h.to_integer().unwrap(), BigInt::from(313));
    }

    #[test]
    fn cancellation_is_zero() {
        let x = PadicNumber::from_ratio(7, 3, 49, 10);
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn display_roundtrip() {
        let x = PadicNumber::from_ratio(5, 7, 25, 10);
        let s = x.to_string();
        assert_eq!(s, "5^-2 * 7 + O(5^10)");
        assert_eq!(s.parse::<PadicNumber>().unwrap(), x);
        assert!("5^0 * 5 + O(5^4)".parse::<PadicNumber>().is_err());
    }

    #[test]
    fn teichmuller_two_mod_625() {
        let t = teichmuller(2, 5, 4).unwrap();
        assert_eq!(t.to_integer().unwrap(), BigInt::from(182));
        assert!(teichmuller(5, 5, 4).is_err());
    }

    #[test]
    fn mul_precision_is_relative() {
        let x = PadicNumber::from_scaled(3, 5, 2, &BigInt::from(1));
        let y = PadicNumber::from_int(3, 2, 10);
        let z = &x * &y;
        assert_eq!(z.valuation(), Some(2));
        assert_eq!(z.prec(), 5);
    }
}
