use super::number::PadicNumber;
use super::qp2::Qp2Number;
use super::PadicError;

/// Largest `e` with `p^e <= k`.
fn ilog(p: u32, k: i64) -> i64 {
    let mut e = 0;
    let mut q = p as i64;
    while q <= k {
        q *= p as i64;
        e += 1;
    }
    e
}

/// Operations the log series needs, shared by Q_p and Q_{p²}.
trait SeriesElem: Clone {
    fn prime(&self) -> u32;
    fn val(&self) -> Option<i64>;
    fn lift(&self, prec: i64) -> Self;
    fn truncate(&self, prec: i64) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn div_k(&self, k: i64) -> Self;
    fn zero_like(&self, prec: i64) -> Self;
}

impl SeriesElem for PadicNumber {
    fn prime(&self) -> u32 {
        self.p()
    }
    fn val(&self) -> Option<i64> {
        self.valuation()
    }
    fn lift(&self, prec: i64) -> Self {
        self.with_prec(prec)
    }
    fn truncate(&self, prec: i64) -> Self {
        self.cap(prec)
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn div_k(&self, k: i64) -> Self {
        self.div_int(k)
    }
    fn zero_like(&self, prec: i64) -> Self {
        PadicNumber::zero(self.p(), prec)
    }
}

impl SeriesElem for Qp2Number {
    fn prime(&self) -> u32 {
        self.p()
    }
    fn val(&self) -> Option<i64> {
        self.valuation()
    }
    fn lift(&self, prec: i64) -> Self {
        self.with_prec(prec)
    }
    fn truncate(&self, prec: i64) -> Self {
        self.cap(prec)
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn div_k(&self, k: i64) -> Self {
        self.div_int(k)
    }
    fn zero_like(&self, prec: i64) -> Self {
        Qp2Number::from_padic(&PadicNumber::zero(self.p(), prec))
    }
}

/// `Σ_{k≥1} (−1)^{k+1} t^k / k` for `v(t) ≥ 1`, correct modulo `p^target`.
fn log1p_series<T: SeriesElem>(t: &T, target: i64) -> T {
    let p = t.prime();
    let vt = match t.val() {
        None => return t.zero_like(target),
        Some(v) => v,
    };
    debug_assert!(vt >= 1);
    // Terms with k·vt − v_p(k) ≥ target are negligible; the bound is monotone in k.
    let mut kmax = 1;
    while kmax * vt - ilog(p, kmax) < target {
        kmax += 1;
    }
    let extra = ilog(p, kmax);
    let t = t.lift(target + extra);
    let mut power = t.clone();
    let mut sum = t.zero_like(target + extra);
    for k in 1..=kmax {
        let term = power.div_k(k);
        sum = if k % 2 == 1 { sum.add(&term) } else { sum.sub(&term) };
        power = power.mul(&t);
    }
    sum.truncate(target)
}

/// The Iwasawa logarithm on Q_p^×: `log(p) = 0`, roots of unity map to 0.
/// The result is known modulo `p^r`, with `r` the relative precision of `x`.
pub fn iwasawa_log(x: &PadicNumber) -> Result<PadicNumber, PadicError> {
    let v = x.valuation().ok_or(PadicError::ZeroInput)?;
    let p = x.p();
    let r = x.prec() - v;
    let y = PadicNumber::from_scaled(p, r, 0, x.unit());
    // y^{p−1} ≡ 1 mod p kills the Teichmüller factor.
    let z = y.pow((p - 1) as i64)?;
    let t = &z - &PadicNumber::one(p, r);
    Ok(log1p_series(&t, r).div_int((p - 1) as i64))
}

/// The Iwasawa logarithm on Q_{p²}^×, normalized by `log(p) = 0`.
pub fn iwasawa_log_qp2(x: &Qp2Number) -> Result<Qp2Number, PadicError> {
    let v = x.valuation().ok_or(PadicError::ZeroInput)?;
    let p = x.p();
    let y = x.shift(-v);
    let r = y.prec();
    let e = (p as u64) * (p as u64) - 1;
    let z = y.pow(e);
    let one = Qp2Number::from_padic(&PadicNumber::one(p, r));
    let t = &z - &one;
    Ok(log1p_series(&t, r).div_int(e as i64))
}

/// `exp(x) = Σ x^k / k!` for `v(x) ≥ 1`, known to the absolute precision of `x`.
pub fn exp_p(x: &PadicNumber) -> Result<PadicNumber, PadicError> {
    let p = x.p();
    let target = x.prec();
    let vx = match x.valuation() {
        None => return Ok(PadicNumber::one(p, target.max(1))),
        Some(v) => v,
    };
    if vx < 1 {
        return Err(PadicError::ConvergenceDomain(vx));
    }
    // v_p(k!) ≤ (k−1)/(p−1), so k·vx − (k−1)/(p−1) ≥ target bounds the tail.
    let pm1 = (p - 1) as i64;
    let mut kmax = 1;
    while kmax * vx - (kmax - 1) / pm1 < target {
        kmax += 1;
    }
    let extra = (kmax - 1) / pm1 + 1;
    let xw = x.with_prec(target + extra);
    let mut term = PadicNumber::one(p, target + extra);
    let mut sum = term.clone();
    for k in 1..=kmax {
        term = (&term * &xw).div_int(k);
        sum = &sum + &term;
    }
    Ok(sum.cap(target))
}

/// A branch `log_u` of the p-adic logarithm: the homomorphism extending the
/// convergent series with `log_u(u) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogBranch {
    u: PadicNumber,
    h: i64,
    log_u: PadicNumber,
}

impl LogBranch {
    pub fn new(u: PadicNumber) -> Result<Self, PadicError> {
        let h = match u.valuation() {
            Some(h) if h >= 1 => h,
            _ => return Err(PadicError::BadBranch),
        };
        let log_u = iwasawa_log(&u)?;
        Ok(LogBranch { u, h, log_u })
    }

    /// The Iwasawa branch (`u = p`).
    pub fn iwasawa(p: u32, prec: i64) -> Self {
        Self::new(PadicNumber::from_int(p, p, prec + 1)).expect("p has valuation 1")
    }

    pub fn u(&self) -> &PadicNumber {
        &self.u
    }

    pub fn h(&self) -> i64 {
        self.h
    }

    /// The correction `(v/h)·log_Iw(u)` subtracted from the Iwasawa logarithm.
    fn correction(&self, v: i64) -> PadicNumber {
        self.log_u.scale_int(v).div_int(self.h)
    }

    pub fn log(&self, x: &PadicNumber) -> Result<PadicNumber, PadicError> {
        let v = x.valuation().ok_or(PadicError::ZeroInput)?;
        Ok(&iwasawa_log(x)? - &self.correction(v))
    }

    pub fn log_qp2(&self, x: &Qp2Number) -> Result<Qp2Number, PadicError> {
        let v = x.valuation().ok_or(PadicError::ZeroInput)?;
        let l = iwasawa_log_qp2(x)?;
        Ok(&l - &Qp2Number::from_padic(&self.correction(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_of_one_and_p() {
        let p = 5;
        assert!(iwasawa_log(&PadicNumber::one(p, 20)).unwrap().is_zero());
        assert!(iwasawa_log(&PadicNumber::from_int(p, 5, 20)).unwrap().is_zero());
        assert!(iwasawa_log(&PadicNumber::zero(p, 20)).is_err());
    }

    #[test]
    fn log_one_plus_p_matches_rational_partial_sum() {
        // Independent oracle: exact rational partial sum of the series, reduced mod 5^6.
        use num_bigint::BigInt;
        use num_rational::BigRational;
        let p = 5u32;
        let mut s = BigRational::from_integer(BigInt::from(0));
        let five = BigRational::from_integer(BigInt::from(5));
        let mut pw = five.clone();
        for k in 1..40i64 {
            let term = &pw / BigRational::from_integer(BigInt::from(k));
            s = if k % 2 == 1 { s + term } else { s - term };
            pw = &pw * &five;
        }
        let oracle = PadicNumber::from_rational(p, &s, 6);
        let got = iwasawa_log(&PadicNumber::from_int(p, 6, 7)).unwrap();
        assert_eq!(got.cap(6), oracle);
        assert_eq!(got.prec(), 7);
    }

    #[test]
    fn exp_log_roundtrip() {
        let p = 7;
        let w = PadicNumber::from_int(p, 1 + 7 * 3 + 49 * 5, 20);
        let back = exp_p(&iwasawa_log(&w).unwrap()).unwrap();
        assert!(back.agreement(&w) >= 19);
    }

    #[test]
    fn branch_examples() {
        let p = 3;
        let n = 20;
        let lp = LogBranch::iwasawa(p, n);
        let x = PadicNumber::from_int(p, 7, n);
        assert_eq!(lp.log(&x).unwrap(), iwasawa_log(&x).unwrap());
        let u = PadicNumber::from_int(p, 3 * 4, n);
        let b = LogBranch::new(u.clone()).unwrap();
        assert!(b.log(&u).unwrap().is_zero());
        let l3 = b.log(&PadicNumber::from_int(p, 3, n)).unwrap();
        let l4 = iwasawa_log(&PadicNumber::from_int(p, 4, n)).unwrap();
        assert!((&l3 + &l4).is_zero());
    }

    #[test]
    fn qp2_log_restricts_to_qp_log() {
        let p = 5;
        let x = PadicNumber::from_int(p, 1 + 5 * 7, 20);
        let l2 = iwasawa_log_qp2(&Qp2Number::from_padic(&x)).unwrap();
        assert!(l2.in_qp());
        assert!(l2.a().agreement(&iwasawa_log(&x).unwrap()) >= 19);
    }
}
