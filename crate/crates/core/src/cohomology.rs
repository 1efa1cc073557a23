//! The free abelian group Δ = ⟨β_𝔭⟩, its 1-cocycles `c_ord` and `c_log` with
//! values in a closed algebra of region functions, cup products, the Spieß
//! determinant lemma, and the `(1−β*)` expansion engine.
//!
//! A region function is a finite sum of tensor products over the primes of Δ.
//! Each factor is `log^a · s(v)` where `v` is the valuation and `s` is one of
//! `δ_{v=j}`, `v^b·1_{v≥0}` or `v^b` on all of `F_𝔭^×`. Every function that is
//! polynomial in `v` for `v ≫ 0` and zero for `v ≪ 0` has exactly one such
//! expansion, so equality of values is equality of normal forms.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::distribution::{DistError, Estimate, LocallyAnalyticFunction, Piece, TreeDistribution};
use crate::padic::{LogBranch, PadicNumber};
use crate::tree::Disc;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohomologyError {
    #[error("row {row} does not sum to zero")]
    RowSumNonzero { row: usize },
    #[error("shape: {0}")]
    Shape(String),
    #[error("cannot pair {0} with a measure")]
    Unsupported(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// The coefficient rings used here. Constants are built from an existing
/// element so that p-adic precision carries over.
pub trait Ring: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn from_int_like(&self, n: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero_elem(&self) -> bool;

    fn zero_like(&self) -> Self {
        self.from_int_like(0)
    }
    fn one_like(&self) -> Self {
        self.from_int_like(1)
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn pow(&self, e: u32) -> Self {
        (0..e).fold(self.one_like(), |acc, _| acc.mul(self))
    }
}

impl Ring for BigRational {
    fn from_int_like(&self, n: i64) -> Self {
        BigRational::from_integer(n.into())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
}

impl Ring for PadicNumber {
    fn from_int_like(&self, n: i64) -> Self {
        PadicNumber::from_int(self.p(), n, self.prec())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn ipow(j: i64, b: u32) -> i64 {
    j.checked_pow(b).expect("small valuation power")
}

/// Valuation profile of one prime factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    /// `δ_{v=j}`.
    Delta(i64),
    /// `v^b · 1_{v≥0}`.
    Tail(u32),
    /// `v^b` on all of `F_𝔭^×`.
    All(u32),
}

/// `log^a · shape` at one prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub log: u32,
    pub shape: Shape,
}

impl Atom {
    pub const ONE: Atom = Atom { log: 0, shape: Shape::All(0) };

    /// Pointwise product as `(integer factor, atom)`, or `None` when zero.
    fn mul(&self, o: &Atom) -> Option<(i64, Atom)> {
        use Shape::*;
        let log = self.log + o.log;
        let (c, shape) = match (self.shape, o.shape) {
            (Delta(a), Delta(b)) => (a == b).then_some((1, Delta(a)))?,
            (Delta(j), Tail(b)) | (Tail(b), Delta(j)) => (j >= 0).then(|| (ipow(j, b), Delta(j)))?,
            (Delta(j), All(b)) | (All(b), Delta(j)) => (ipow(j, b), Delta(j)),
            (Tail(a), Tail(b)) | (Tail(a), All(b)) | (All(a), Tail(b)) => (1, Tail(a + b)),
            (All(a), All(b)) => (1, All(a + b)),
        };
        (c != 0).then_some((c, Atom { log, shape }))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log > 0 {
            write!(f, "log^{}·", self.log)?;
        }
        match self.shape {
            Shape::Delta(j) => write!(f, "δ[v={j}]"),
            Shape::Tail(b) => write!(f, "v^{b}·1[v≥0]"),
            Shape::All(b) => write!(f, "v^{b}"),
        }
    }
}

/// Finite linear combination of tensor products of atoms, one atom per prime.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionFunction<R: Ring> {
    unit: R,
    terms: BTreeMap<Vec<Atom>, R>,
    rank: usize,
}

impl<R: Ring> RegionFunction<R> {
    pub fn zero(rank: usize, unit: &R) -> Self {
        RegionFunction { unit: unit.one_like(), terms: BTreeMap::new(), rank }
    }

    pub fn constant(rank: usize, c: &R) -> Self {
        Self::zero(rank, c).plus_term(vec![Atom::ONE; rank], c.clone())
    }

    /// A single atom at prime `p`, constant 1 elsewhere.
    pub fn atom(rank: usize, unit: &R, p: usize, a: Atom) -> Self {
        let mut m = vec![Atom::ONE; rank];
        m[p] = a;
        Self::zero(rank, unit).plus_term(m, unit.one_like())
    }

    /// `1_{ϖ^i B_𝔭} = 1_{v ≥ i}`.
    pub fn ind(rank: usize, unit: &R, p: usize, i: i64) -> Self {
        let mut f = Self::atom(rank, unit, p, Atom { log: 0, shape: Shape::Tail(0) });
        for j in 0.min(i)..0.max(i) {
            let d = Self::atom(rank, unit, p, Atom { log: 0, shape: Shape::Delta(j) });
            f = if i > 0 { f.sub(&d) } else { f.add(&d) };
        }
        f
    }

    /// `1_{B_𝔭}`.
    pub fn b(rank: usize, unit: &R, p: usize) -> Self {
        Self::ind(rank, unit, p, 0)
    }

    /// `1_{D_𝔭}`, `D = {0 ≤ v < h}`.
    pub fn d(rank: usize, unit: &R, p: usize, h: u32) -> Self {
        Self::ind(rank, unit, p, 0).sub(&Self::ind(rank, unit, p, h as i64))
    }

    /// `1_{D̲_𝔭} = 1_{O^×}`.
    pub fn d_under(rank: usize, unit: &R, p: usize) -> Self {
        Self::ind(rank, unit, p, 0).sub(&Self::ind(rank, unit, p, 1))
    }

    /// `ord_𝔭` and `log_𝔭` on all of `F_𝔭^×`.
    pub fn ord(rank: usize, unit: &R, p: usize) -> Self {
        Self::atom(rank, unit, p, Atom { log: 0, shape: Shape::All(1) })
    }

    pub fn log(rank: usize, unit: &R, p: usize) -> Self {
        Self::atom(rank, unit, p, Atom { log: 1, shape: Shape::All(0) })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Atom>, R> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn plus_term(mut self, m: Vec<Atom>, c: R) -> Self {
        self.add_term(m, c);
        self
    }

    fn add_term(&mut self, m: Vec<Atom>, c: R) {
        if c.is_zero_elem() {
            return;
        }
        let sum = match self.terms.get(&m) {
            Some(old) => old.add(&c),
            None => c,
        };
        if sum.is_zero_elem() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &R) -> Self {
        let mut out = Self::zero(self.rank, &self.unit);
        for (m, x) in &self.terms {
            out.add_term(m.clone(), x.mul(c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&self.unit.from_int_like(-1))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Pointwise product.
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.rank, &self.unit);
        for (m1, c1) in &self.terms {
            'terms: for (m2, c2) in &o.terms {
                let mut k = 1i64;
                let mut m = Vec::with_capacity(self.rank);
                for (a, b) in m1.iter().zip(m2) {
                    match a.mul(b) {
                        Some((f, atom)) => {
                            k *= f;
                            m.push(atom);
                        }
                        None => continue 'terms,
                    }
                }
                out.add_term(m, c1.mul(c2).mul(&self.unit.from_int_like(k)));
            }
        }
        out
    }

    /// `x ↦ f(βx)` for one atom, where `v(βx) = v(x) − s` and `log(βx) = log(x) + λ`.
    fn act_atom(&self, a: &Atom, s: i64, lambda: &R) -> Vec<(R, Atom)> {
        let u = &self.unit;
        let logs: Vec<(R, u32)> =
            (0..=a.log).map(|c| (lambda.pow(a.log - c).mul(&u.from_int_like(binom(a.log, c))), c)).collect();
        let mut shapes: Vec<(i64, Shape)> = Vec::new();
        match a.shape {
            Shape::Delta(j) => shapes.push((1, Shape::Delta(j + s))),
            Shape::All(b) => {
                for c in 0..=b {
                    shapes.push((binom(b, c) * ipow(-s, b - c), Shape::All(c)));
                }
            }
            Shape::Tail(b) => {
                // (v−s)^b·1_{v≥s}, then move the threshold back to 0
                for c in 0..=b {
                    let k = binom(b, c) * ipow(-s, b - c);
                    shapes.push((k, Shape::Tail(c)));
                    if s > 0 {
                        shapes.extend((0..s).map(|j| (-k * ipow(j, c), Shape::Delta(j))));
                    } else {
                        shapes.extend((s..0).map(|j| (k * ipow(j, c), Shape::Delta(j))));
                    }
                }
            }
        }
        let mut out = Vec::new();
        for (lc, l) in &logs {
            for (k, sh) in &shapes {
                if *k != 0 {
                    out.push((lc.mul(&u.from_int_like(*k)), Atom { log: *l, shape: *sh }));
                }
            }
        }
        out
    }

    fn act_generator(&self, g: &DeltaGroup<R>, q: usize, sign: i64) -> Self {
        let mut out = Self::zero(self.rank, &self.unit);
        for (m, c) in &self.terms {
            let mut partial: Vec<(R, Vec<Atom>)> = vec![(c.clone(), Vec::new())];
            for (p, a) in m.iter().enumerate() {
                let s = if p == q { g.h[p] as i64 * sign } else { 0 };
                let lambda = g.local_logs[p][q].mul(&self.unit.from_int_like(sign));
                let images = self.act_atom(a, s, &lambda);
                partial = partial
                    .iter()
                    .flat_map(|(c0, m0)| {
                        images.iter().map(move |(c1, a1)| {
                            let mut m1 = m0.clone();
                            m1.push(*a1);
                            (c0.mul(c1), m1)
                        })
                    })
                    .collect();
            }
            for (c1, m1) in partial {
                out.add_term(m1, c1);
            }
        }
        out
    }

    /// `γ* f` for `γ = ∏ β_q^{e_q}`.
    pub fn act(&self, g: &DeltaGroup<R>, gamma: &[i64]) -> Self {
        let mut f = self.clone();
        for (q, &e) in gamma.iter().enumerate() {
            for _ in 0..e.unsigned_abs() {
                f = f.act_generator(g, q, e.signum());
            }
        }
        f
    }
}

impl<R: Ring> fmt::Display for RegionFunction<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (p, a) in m.iter().enumerate() {
                if *a != Atom::ONE {
                    write!(f, "·[{p}]{a}")?;
                }
            }
        }
        Ok(())
    }
}

/// Δ with generators `β_𝔭`, translation lengths `h_𝔭`, and the local log
/// values `local_logs[𝔭][𝔮] = _𝔭l(β_𝔮)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaGroup<R: Ring> {
    names: Vec<String>,
    h: Vec<u32>,
    local_logs: Vec<Vec<R>>,
    unit: R,
}

impl<R: Ring> DeltaGroup<R> {
    pub fn new(names: Vec<String>, h: Vec<u32>, local_logs: Vec<Vec<R>>, unit: &R) -> Result<Self, CohomologyError> {
        let r = names.len();
        if h.len() != r || local_logs.len() != r || local_logs.iter().any(|row| row.len() != r) {
            return Err(CohomologyError::Shape(format!("rank {r} needs {r} lengths and an {r}×{r} log matrix")));
        }
        if h.contains(&0) {
            return Err(CohomologyError::Shape("translation lengths must be ≥ 1".into()));
        }
        Ok(DeltaGroup { names, h, local_logs, unit: unit.one_like() })
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn h(&self) -> &[u32] {
        &self.h
    }

    pub fn local_logs(&self) -> &[Vec<R>] {
        &self.local_logs
    }

    pub fn unit(&self) -> &R {
        &self.unit
    }

    /// The generator `β_q` as an exponent vector.
    pub fn generator(&self, q: usize) -> Vec<i64> {
        let mut e = vec![0; self.rank()];
        e[q] = 1;
        e
    }

    /// The displayed value of `c_𝔭,ord(β_𝔮)`.
    pub fn c_ord_display(&self, p: usize, q: usize) -> RegionFunction<R> {
        let r = self.rank();
        if p != q {
            return RegionFunction::zero(r, &self.unit);
        }
        (1..=self.h[p] as i64)
            .map(|i| RegionFunction::ind(r, &self.unit, p, i))
            .fold(RegionFunction::zero(r, &self.unit), |a, b| a.add(&b))
    }

    /// The displayed value of `c_𝔭,log(β_𝔮)`; it assumes `_𝔭l(β_𝔭) = 0`.
    pub fn c_log_display(&self, p: usize, q: usize) -> RegionFunction<R> {
        let r = self.rank();
        if p == q {
            RegionFunction::log(r, &self.unit, p).mul(&RegionFunction::d(r, &self.unit, p, self.h[p]))
        } else {
            RegionFunction::b(r, &self.unit, p).scale(&self.local_logs[p][q].neg())
        }
    }
}

/// A degree-one cocycle `γ ↦ (γ* − 1)(−F·1_{O_𝔭})`.
#[derive(Clone, Debug, PartialEq)]
pub enum Cocycle1<R: Ring> {
    /// `F = ord_𝔭`.
    Ord { p: usize },
    /// `F = _𝔭log_ι`.
    Log { p: usize },
    /// `F = _𝔭log_σ` for σ outside Σ_𝔭, which is `log_σ(ϖ)·ord` on `F_𝔭^×`.
    LogTrivial { p: usize, log_omega: R },
}

impl<R: Ring> Cocycle1<R> {
    pub fn prime(&self) -> usize {
        match self {
            Cocycle1::Ord { p } | Cocycle1::Log { p } | Cocycle1::LogTrivial { p, .. } => *p,
        }
    }

    fn potential(&self, g: &DeltaGroup<R>) -> RegionFunction<R> {
        let r = g.rank();
        let u = &g.unit;
        let p = self.prime();
        let o = RegionFunction::b(r, u, p);
        let f = match self {
            Cocycle1::Ord { .. } => RegionFunction::ord(r, u, p),
            Cocycle1::Log { .. } => RegionFunction::log(r, u, p),
            Cocycle1::LogTrivial { log_omega, .. } => RegionFunction::ord(r, u, p).scale(log_omega),
        };
        f.mul(&o).neg()
    }

    pub fn eval(&self, g: &DeltaGroup<R>, gamma: &[i64]) -> RegionFunction<R> {
        let f = self.potential(g);
        f.act(g, gamma).sub(&f)
    }
}

pub fn c_ord_eval<R: Ring>(g: &DeltaGroup<R>, p: usize, gamma: &[i64]) -> RegionFunction<R> {
    Cocycle1::Ord { p }.eval(g, gamma)
}

pub fn c_log_eval<R: Ring>(g: &DeltaGroup<R>, p: usize, gamma: &[i64]) -> RegionFunction<R> {
    Cocycle1::Log { p }.eval(g, gamma)
}

/// All permutations of `0..k` with their signs.
pub fn signed_permutations(k: usize) -> Vec<(Vec<usize>, i64)> {
    if k == 0 {
        return vec![(Vec::new(), 1)];
    }
    let mut out = Vec::new();
    for (perm, sign) in signed_permutations(k - 1) {
        // insert k−1 at position i; it passes k−1−i entries
        for i in 0..=perm.len() {
            let mut p = perm.clone();
            p.insert(i, k - 1);
            let s = if (k - 1 - i) % 2 == 0 { sign } else { -sign };
            out.push((p, s));
        }
    }
    out
}

/// `Σ_P (−1)^P c₁(g_{P(1)})⋯c_k(g_{P(k)})`.
pub fn cup_eval<R: Ring>(
    g: &DeltaGroup<R>,
    cocycles: &[Cocycle1<R>],
    args: &[Vec<i64>],
) -> Result<RegionFunction<R>, CohomologyError> {
    let k = cocycles.len();
    if args.len() != k || k > g.rank() {
        return Err(CohomologyError::Shape(format!("{k} cocycles, {} arguments, rank {}", args.len(), g.rank())));
    }
    let r = g.rank();
    let values: Vec<Vec<RegionFunction<R>>> =
        cocycles.iter().map(|c| args.iter().map(|a| c.eval(g, a)).collect()).collect();
    let mut total = RegionFunction::zero(r, &g.unit);
    for (perm, sign) in signed_permutations(k) {
        let term = perm
            .iter()
            .enumerate()
            .fold(RegionFunction::constant(r, &g.unit), |acc, (j, &pj)| acc.mul(&values[j][pj]));
        total = total.add(&term.scale(&g.unit.from_int_like(sign)));
    }
    Ok(total)
}

/// Maps `f: {0..k} → {0..m}` with `f(S) ⊄ S` for every nonempty `S ⊆ {0..k}`.
pub fn admissible_maps(k: usize, m: usize) -> Result<Vec<Vec<usize>>, CohomologyError> {
    if k > m || k > 20 {
        return Err(CohomologyError::Shape(format!("need k ≤ m, got k={k}, m={m}")));
    }
    let total = (m as u64).checked_pow(k as u32).filter(|t| *t <= 50_000_000);
    let Some(total) = total else {
        return Err(CohomologyError::Shape("too many maps to enumerate".into()));
    };
    let mut out = Vec::new();
    for code in 0..total {
        let mut f = Vec::with_capacity(k);
        let mut c = code;
        for _ in 0..k {
            f.push((c % m as u64) as usize);
            c /= m as u64;
        }
        let closed = (1u32..(1 << k)).any(|s| {
            (0..k).filter(|i| s & (1 << i) != 0).all(|i| f[i] < k && s & (1 << f[i]) != 0)
        });
        if !closed {
            out.push(f);
        }
    }
    Ok(out)
}

/// Leibniz determinant.
pub fn determinant<R: Ring>(a: &[Vec<R>], unit: &R) -> R {
    let k = a.len();
    let mut total = unit.zero_like();
    for (perm, sign) in signed_permutations(k) {
        let t = perm.iter().enumerate().fold(unit.from_int_like(sign), |acc, (i, &j)| acc.mul(&a[i][j]));
        total = total.add(&t);
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpiessReport<R> {
    pub det_side: R,
    pub sum_side: R,
}

impl<R: PartialEq> SpiessReport<R> {
    pub fn holds(&self) -> bool {
        self.det_side == self.sum_side
    }
}

fn check_row_sums<R: Ring>(c: &[Vec<R>], unit: &R) -> Result<(), CohomologyError> {
    for (i, row) in c.iter().enumerate() {
        if !row.iter().fold(unit.zero_like(), |a, x| a.add(x)).is_zero_elem() {
            return Err(CohomologyError::RowSumNonzero { row: i });
        }
    }
    Ok(())
}

/// `det(−c_ij)_{i,j≤k}` against `Σ_f ∏_i c_{i f(i)}` over admissible maps.
pub fn spiess_det_check<R: Ring>(c: &[Vec<R>], unit: &R) -> Result<SpiessReport<R>, CohomologyError> {
    let k = c.len();
    let m = c.first().map_or(0, |r| r.len());
    if c.iter().any(|r| r.len() != m) || k > m {
        return Err(CohomologyError::Shape(format!("need a k×m matrix with k ≤ m, got {k} rows of width {m}")));
    }
    check_row_sums(c, unit)?;
    let minus: Vec<Vec<R>> = c.iter().map(|r| r[..k].iter().map(|x| x.neg()).collect()).collect();
    let det_side = determinant(&minus, unit);
    let sum_side = admissible_maps(k, m)?
        .iter()
        .map(|f| f.iter().enumerate().fold(unit.one_like(), |acc, (i, &j)| acc.mul(&c[i][j])))
        .fold(unit.zero_like(), |a, b| a.add(&b));
    Ok(SpiessReport { det_side, sum_side })
}

/// `(1 − β*) ℓ^t` using `β*ℓ_i = ℓ_i + ℓ_i(β)`: the coefficients of `ℓ^{t'}`.
pub fn one_minus_gamma_expand<R: Ring>(t: &[u32], ell_beta: &[R], unit: &R) -> BTreeMap<Vec<u32>, R> {
    let mut out: BTreeMap<Vec<u32>, R> = BTreeMap::new();
    let mut tp = vec![0u32; t.len()];
    loop {
        if tp != t {
            let c = tp.iter().zip(t).zip(ell_beta).fold(unit.one_like(), |acc, ((&a, &b), l)| {
                acc.mul(&unit.from_int_like(binom(b, a))).mul(&l.pow(b - a))
            });
            if !c.is_zero_elem() {
                out.insert(tp.clone(), c.neg());
            }
        }
        // odometer over 0..=t_i
        let mut i = 0;
        while i < t.len() && tp[i] == t[i] {
            tp[i] = 0;
            i += 1;
        }
        if i == t.len() {
            break;
        }
        tp[i] += 1;
    }
    out
}

/// The same expansion computed only from the product rule
/// `(1−β*)(fg) = (1−β*)f·g + f·(1−β*)g − (1−β*)f·(1−β*)g` and `(1−β*)ℓ_i = −ℓ_i(β)`.
pub fn one_minus_gamma_product_rule<R: Ring>(t: &[u32], ell_beta: &[R], unit: &R) -> BTreeMap<Vec<u32>, R> {
    type Poly<R> = BTreeMap<Vec<u32>, R>;
    let n = t.len();
    let add_into = |acc: &mut Poly<R>, m: Vec<u32>, c: R| {
        let s = match acc.get(&m) {
            Some(o) => o.add(&c),
            None => c,
        };
        if s.is_zero_elem() {
            acc.remove(&m);
        } else {
            acc.insert(m, s);
        }
    };
    let mul = |a: &Poly<R>, b: &Poly<R>| -> Poly<R> {
        let mut out = Poly::new();
        for (m1, c1) in a {
            for (m2, c2) in b {
                let m: Vec<u32> = m1.iter().zip(m2).map(|(x, y)| x + y).collect();
                add_into(&mut out, m, c1.mul(c2));
            }
        }
        out
    };
    // Build ℓ^t one factor at a time, tracking (f, (1−β*)f).
    let mut f: Poly<R> = [(vec![0; n], unit.one_like())].into_iter().collect();
    let mut df: Poly<R> = Poly::new();
    for (i, &ti) in t.iter().enumerate() {
        let mut mono = vec![0; n];
        mono[i] = 1;
        let g: Poly<R> = [(mono, unit.one_like())].into_iter().collect();
        let dg: Poly<R> = [(vec![0; n], ell_beta[i].neg())].into_iter().collect();
        for _ in 0..ti {
            let mut next_df = mul(&df, &g);
            for (m, c) in mul(&f, &dg) {
                add_into(&mut next_df, m, c);
            }
            for (m, c) in mul(&df, &dg) {
                add_into(&mut next_df, m, c.neg());
            }
            f = mul(&f, &g);
            df = next_df;
        }
    }
    df
}

/// The two sides of the Λ-determinant identity, keyed by Ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct DetExpansion<R> {
    /// Coefficient of `Λ_{l,Ξ}` in `det(δ_ij Λ_{l,𝔭_i} − _{𝔭_i}l(β_{𝔭_j}) Λ_∅)`.
    pub by_determinant: BTreeMap<Vec<usize>, R>,
    /// `Σ_{f ∈ M(complement of Ξ)} ∏ _{f(v)}l(β_v)`.
    pub by_maps: BTreeMap<Vec<usize>, R>,
}

impl<R: PartialEq> DetExpansion<R> {
    pub fn agrees(&self) -> bool {
        self.by_determinant == self.by_maps
    }
}

/// `c[i][j] = _{v_j} l(β_{𝔭_i})` for `i < h` and places `v_0..v_{m−1}`, the
/// first `h` places being `𝔭_1..𝔭_h`. Each row sums to zero.
pub fn determinant_expansion<R: Ring>(c: &[Vec<R>], unit: &R) -> Result<DetExpansion<R>, CohomologyError> {
    let h = c.len();
    let m = c.first().map_or(h, |r| r.len());
    if c.iter().any(|r| r.len() != m) || h > m || h > 16 {
        return Err(CohomologyError::Shape(format!("need an h×m matrix with h ≤ m, got {h} rows of width {m}")));
    }
    check_row_sums(c, unit)?;
    // Multilinear Leibniz expansion; polynomials keyed by the Λ-subset mask.
    let mut by_mask: BTreeMap<u32, R> = BTreeMap::new();
    for (perm, sign) in signed_permutations(h) {
        let mut poly: BTreeMap<u32, R> = [(0u32, unit.from_int_like(sign))].into_iter().collect();
        for (i, &j) in perm.iter().enumerate() {
            let off = c[j][i].neg();
            let mut next = BTreeMap::new();
            for (mask, coef) in &poly {
                let mut push = |k: u32, v: R| {
                    let s = match next.get(&k) {
                        Some(o) => R::add(o, &v),
                        None => v,
                    };
                    next.insert(k, s);
                };
                push(*mask, coef.mul(&off));
                if i == j {
                    push(mask | (1 << i), coef.clone());
                }
            }
            poly = next;
        }
        for (mask, coef) in poly {
            let s = match by_mask.get(&mask) {
                Some(o) => o.add(&coef),
                None => coef,
            };
            by_mask.insert(mask, s);
        }
    }
    let subset = |mask: u32| (0..h).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>();
    let by_determinant: BTreeMap<Vec<usize>, R> =
        by_mask.into_iter().filter(|(_, c)| !c.is_zero_elem()).map(|(k, c)| (subset(k), c)).collect();
    let mut by_maps = BTreeMap::new();
    for mask in 0u32..(1 << h) {
        let rows: Vec<usize> = (0..h).filter(|i| mask & (1 << i) == 0).collect();
        // columns: the rows' own places first, then everything else
        let mut cols = rows.clone();
        cols.extend((0..m).filter(|j| !rows.contains(j)));
        let total = admissible_maps(rows.len(), m)?
            .iter()
            .map(|f| {
                f.iter().enumerate().fold(unit.one_like(), |acc, (a, &b)| acc.mul(&c[rows[a]][cols[b]]))
            })
            .fold(unit.zero_like(), |a, b| a.add(&b));
        if !total.is_zero_elem() {
            by_maps.insert(subset(mask), total);
        }
    }
    Ok(DetExpansion { by_determinant, by_maps })
}

/// `∫ f dμ` for a one-prime region function built from `log^{≤1}·δ_{v=j}` and
/// `1_{v≥0}`, by Riemann sums at depth `m`.
pub fn pair_with_measure(
    f: &RegionFunction<PadicNumber>,
    dist: &TreeDistribution<'_>,
    branch: &LogBranch,
    m: i64,
) -> Result<Estimate, CohomologyError> {
    if f.rank() != 1 {
        return Err(CohomologyError::Unsupported("functions of more than one prime".into()));
    }
    let p = branch.u().p();
    let prec = branch.u().prec();
    let mut value = PadicNumber::zero(p, prec);
    let mut err = i64::MAX;
    for (mono, c) in f.terms() {
        let a = mono[0];
        let pieces: Vec<(Disc, Piece)> = match (a.log, a.shape) {
            (0, Shape::Tail(0)) => vec![(Disc::ball_int(p, 0, 0), Piece::constant(PadicNumber::one(p, prec)))],
            (l @ (0 | 1), Shape::Delta(j)) => {
                let pj = crate::distribution::pow_p(p, j);
                (1..p as i64)
                    .map(|u| {
                        let piece = if l == 0 {
                            Piece::constant(PadicNumber::one(p, prec))
                        } else {
                            Piece::Log { branch: branch.clone() }
                        };
                        (Disc::ball(p, &(&pj * BigRational::from_integer(u.into())), j + 1), piece)
                    })
                    .collect()
            }
            _ => return Err(CohomologyError::Unsupported(a.to_string())),
        };
        let e = dist.integrate(&LocallyAnalyticFunction::new(pieces)?, m)?;
        value = &value + &(c * &e.value);
        err = err.min(e.error_val + c.val_or_prec().min(0));
    }
    Ok(Estimate { value, error_val: err.min(prec) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn group(h: Vec<u32>, logs: Vec<Vec<i64>>) -> DeltaGroup<BigRational> {
        let names = (0..h.len()).map(|i| format!("p{i}")).collect();
        let logs = logs.into_iter().map(|r| r.into_iter().map(q).collect()).collect();
        DeltaGroup::new(names, h, logs, &BigRational::one()).unwrap()
    }

    #[test]
    fn c_ord_matches_display() {
        let g = group(vec![3, 2], vec![vec![0, 5], vec![-7, 0]]);
        for p in 0..2 {
            for qi in 0..2 {
                assert_eq!(c_ord_eval(&g, p, &g.generator(qi)), g.c_ord_display(p, qi));
                assert_eq!(c_log_eval(&g, p, &g.generator(qi)), g.c_log_display(p, qi));
            }
        }
        let sq = c_ord_eval(&g, 0, &[2, 0]);
        let want = (1..=6).map(|i| RegionFunction::ind(2, &BigRational::one(), 0, i)).fold(
            RegionFunction::zero(2, &BigRational::one()),
            |a, b| a.add(&b),
        );
        assert_eq!(sq, want);
    }

    #[test]
    fn small_admissible_counts() {
        assert!(admissible_maps(1, 1).unwrap().is_empty());
        assert_eq!(admissible_maps(1, 2).unwrap(), vec![vec![1]]);
        for k in 1usize..=4 {
            for m in k..=5 {
                let want = (m - k) * m.pow(k as u32 - 1);
                assert_eq!(admissible_maps(k, m).unwrap().len(), want);
            }
        }
    }

    #[test]
    fn spiess_one_by_two() {
        let c = vec![vec![q(-3), q(3)]];
        let r = spiess_det_check(&c, &BigRational::one()).unwrap();
        assert_eq!(r.det_side, q(3));
        assert!(r.holds());
        let bad = vec![vec![q(1), q(3)]];
        assert_eq!(spiess_det_check(&bad, &BigRational::one()), Err(CohomologyError::RowSumNonzero { row: 0 }));
    }
}
