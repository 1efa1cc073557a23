//! The Bruhat–Tits tree of GL₂(Q_p) in ball coordinates.
//!
//! A vertex `V(n;c)` is the homothety class of the lattice spanned by the columns
//! `(p^n, 0)` and `(c, 1)`; it corresponds to the closed ball `c + p^n Z_p`.
//! An oriented edge from a ball to one of its `p` maximal sub-balls has end set
//! `U_e` equal to that sub-ball; the reverse edge has the complement. The source
//! of the standard edge `e₀ = V(-1;0) → V(0;0)` is the larger lattice and
//! `U_{e₀} = Z_p`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::padic::{inv_mod, ppow, split_p, PadicNumber};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("singular matrix")]
    SingularMatrix,
    #[error("element is not hyperbolic (valuation 0)")]
    NotHyperbolic,
    #[error("vertices are not adjacent")]
    NotAdjacent,
    #[error("cannot parse label {0:?}")]
    Parse(String),
}

/// p-adic valuation of a rational; `None` for zero.
pub fn vp(p: u32, x: &BigRational) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    Some(split_p(p, x.numer()).0 - split_p(p, x.denom()).0)
}

/// Canonical representative of `x mod p^n Z_p`: the unique rational with
/// p-power denominator whose p-adic digits sit in positions `< n`, in `[0, p^n)`.
pub fn reduce_mod(p: u32, x: &BigRational, n: i64) -> BigRational {
    let v = match vp(p, x) {
        None => return BigRational::zero(),
        Some(v) => v,
    };
    if v >= n {
        return BigRational::zero();
    }
    let k = (-v).max(0);
    let (_, num) = split_p(p, x.numer());
    let (dv, den) = split_p(p, x.denom());
    // x·p^k = num · p^{vn + k − dv} / den with non-p den.
    let shift = v + k;
    debug_assert!(shift >= 0 && dv >= 0);
    let modulus = ppow(p, n + k);
    let dinv = inv_mod(&den, &modulus).expect("non-p denominator");
    let r = (num * ppow(p, shift) * dinv).mod_floor(&modulus);
    BigRational::new(r, ppow(p, k))
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn ppow_rat(p: u32, k: i64) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(ppow(p, k))
    } else {
        BigRational::new(BigInt::one(), ppow(p, -k))
    }
}

fn fmt_rat(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

fn parse_rat(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((a, b)) => {
            let d: BigInt = b.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(a.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.trim().parse().ok()?)),
    }
}

/// A point of P¹(Q) ⊂ P¹(Q_p).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum P1Point {
    Finite(BigRational),
    Infinity,
}

impl P1Point {
    pub fn from_padic(x: &PadicNumber) -> Self {
        P1Point::Finite(x.to_rational())
    }
}

/// Canonical vertex label `(n, c mod p^n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    p: u32,
    n: i64,
    c: BigRational,
}

impl TreeVertex {
    pub fn new(p: u32, n: i64, c: &BigRational) -> Self {
        TreeVertex { p, n, c: reduce_mod(p, c, n) }
    }

    pub fn from_int(p: u32, n: i64, c: i64) -> Self {
        Self::new(p, n, &rat(c))
    }

    pub fn origin(p: u32) -> Self {
        Self::from_int(p, 0, 0)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn level(&self) -> i64 {
        self.n
    }

    pub fn center(&self) -> &BigRational {
        &self.c
    }

    pub fn parent(&self) -> Self {
        Self::new(self.p, self.n - 1, &self.c)
    }

    pub fn children(&self) -> impl Iterator<Item = TreeVertex> + '_ {
        let step = ppow_rat(self.p, self.n);
        (0..self.p as i64).map(move |j| TreeVertex {
            p: self.p,
            n: self.n + 1,
            c: &self.c + &step * rat(j),
        })
    }

    /// The `p + 1` adjacent vertices: the parent ball and the `p` maximal sub-balls.
    pub fn neighbors(&self) -> Vec<TreeVertex> {
        std::iter::once(self.parent()).chain(self.children()).collect()
    }

    pub fn contains_point(&self, x: &P1Point) -> bool {
        match x {
            P1Point::Infinity => false,
            P1Point::Finite(x) => vp(self.p, &(x - &self.c)).map_or(true, |v| v >= self.n),
        }
    }

    /// Ball containment `self ⊆ other`.
    pub fn is_descendant_of(&self, other: &TreeVertex) -> bool {
        self.n >= other.n && other.contains_point(&P1Point::Finite(self.c.clone()))
    }

    /// Level of the smallest ball containing both.
    fn join_level(&self, other: &TreeVertex) -> i64 {
        let m = self.n.min(other.n);
        match vp(self.p, &(&self.c - &other.c)) {
            None => m,
            Some(v) => m.min(v),
        }
    }

    pub fn distance(&self, other: &TreeVertex) -> i64 {
        let m = self.join_level(other);
        (self.n - m) + (other.n - m)
    }

    /// Ancestor at level `k <= n`.
    pub fn ancestor(&self, k: i64) -> TreeVertex {
        debug_assert!(k <= self.n);
        Self::new(self.p, k, &self.c)
    }

    /// The vertex on the ray toward `x` at level `n`.
    pub fn on_ray(p: u32, x: &BigRational, n: i64) -> Self {
        Self::new(p, n, x)
    }

    pub fn label(&self) -> String {
        format!("V({};{})", self.n, fmt_rat(&self.c))
    }

    pub fn parse(p: u32, s: &str) -> Result<Self, TreeError> {
        let bad = || TreeError::Parse(s.to_string());
        let inner = s.trim().strip_prefix("V(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let (n, c) = inner.split_once(';').ok_or_else(bad)?;
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let c = parse_rat(c).ok_or_else(bad)?;
        Ok(Self::new(p, n, &c))
    }

    /// Lattice basis columns `(p^n, 0)` and `(c, 1)`.
    fn basis(&self) -> [(BigRational, BigRational); 2] {
        [(ppow_rat(self.p, self.n), BigRational::zero()), (self.c.clone(), BigRational::one())]
    }

    /// Canonical vertex of the lattice spanned by two column vectors.
    fn from_columns(p: u32, u: (BigRational, BigRational), w: (BigRational, BigRational)) -> Result<Self, TreeError> {
        let (mut u, mut w) = (u, w);
        let vu = vp(p, &u.1);
        let vw = vp(p, &w.1);
        let swap = match (vu, vw) {
            (None, None) => return Err(TreeError::SingularMatrix),
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a < b,
        };
        if swap {
            std::mem::swap(&mut u, &mut w);
        }
        let k = &u.1 / &w.1;
        let u0 = &u.0 - &k * &w.0;
        let x = &u0 / &w.1;
        let c = &w.0 / &w.1;
        let n = vp(p, &x).ok_or(TreeError::SingularMatrix)?;
        Ok(Self::new(p, n, &c))
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// An oriented edge between adjacent vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeEdge {
    source: TreeVertex,
    target: TreeVertex,
}

impl TreeEdge {
    pub fn new(source: TreeVertex, target: TreeVertex) -> Result<Self, TreeError> {
        if source.p != target.p || source.distance(&target) != 1 {
            return Err(TreeError::NotAdjacent);
        }
        Ok(TreeEdge { source, target })
    }

    /// Edge from the parent ball down to `child`.
    pub fn down_to(child: TreeVertex) -> Self {
        TreeEdge { source: child.parent(), target: child }
    }

    /// The standard edge `e₀` with `U_{e₀} = Z_p`.
    pub fn e0(p: u32) -> Self {
        Self::down_to(TreeVertex::origin(p))
    }

    pub fn source(&self) -> &TreeVertex {
        &self.source
    }

    pub fn target(&self) -> &TreeVertex {
        &self.target
    }

    pub fn p(&self) -> u32 {
        self.source.p
    }

    pub fn reverse(&self) -> Self {
        TreeEdge { source: self.target.clone(), target: self.source.clone() }
    }

    /// True when the edge points from a ball into a sub-ball.
    pub fn is_downward(&self) -> bool {
        self.target.n == self.source.n + 1
    }

    /// The smaller of the two balls, which keys the edge up to orientation.
    pub fn child(&self) -> &TreeVertex {
        if self.is_downward() {
            &self.target
        } else {
            &self.source
        }
    }

    pub fn label(&self) -> String {
        format!("E({};{})>({};{})", self.source.n, fmt_rat(&self.source.c), self.target.n, fmt_rat(&self.target.c))
    }

    pub fn parse(p: u32, s: &str) -> Result<Self, TreeError> {
        let bad = || TreeError::Parse(s.to_string());
        let rest = s.trim().strip_prefix('E').ok_or_else(bad)?;
        let (a, b) = rest.split_once(">").ok_or_else(bad)?;
        let v1 = TreeVertex::parse(p, &format!("V{a}"))?;
        let v2 = TreeVertex::parse(p, &format!("V{b}"))?;
        Self::new(v1, v2)
    }

    pub fn disc(&self) -> Disc {
        let child = self.child();
        let ball = Disc::Ball { p: child.p, a: child.c.clone(), m: child.n };
        if self.is_downward() {
            ball
        } else {
            ball.complement()
        }
    }
}

impl fmt::Display for TreeEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A disc of P¹(Q_p): a ball `a + p^m Z_p` or the complement of one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Disc {
    Ball { p: u32, a: BigRational, m: i64 },
    CoBall { p: u32, a: BigRational, m: i64 },
}

impl Disc {
    pub fn ball(p: u32, a: &BigRational, m: i64) -> Self {
        Disc::Ball { p, a: reduce_mod(p, a, m), m }
    }

    pub fn ball_int(p: u32, a: i64, m: i64) -> Self {
        Self::ball(p, &rat(a), m)
    }

    /// `{x : v(x) <= -m - 1} ∪ {∞}`, the complement of `p^{-m} Z_p`.
    pub fn infinite(p: u32, m: i64) -> Self {
        Disc::CoBall { p, a: BigRational::zero(), m: -m }
    }

    pub fn p(&self) -> u32 {
        match self {
            Disc::Ball { p, .. } | Disc::CoBall { p, .. } => *p,
        }
    }

    pub fn complement(&self) -> Self {
        match self {
            Disc::Ball { p, a, m } => Disc::CoBall { p: *p, a: a.clone(), m: *m },
            Disc::CoBall { p, a, m } => Disc::Ball { p: *p, a: a.clone(), m: *m },
        }
    }

    pub fn contains(&self, x: &P1Point) -> bool {
        match self {
            Disc::Ball { p, a, m } => TreeVertex { p: *p, n: *m, c: a.clone() }.contains_point(x),
            Disc::CoBall { .. } => !self.complement().contains(x),
        }
    }

    pub fn contains_infinity(&self) -> bool {
        matches!(self, Disc::CoBall { .. })
    }

    /// The oriented edge whose end set is this disc.
    pub fn to_edge(&self) -> TreeEdge {
        match self {
            Disc::Ball { p, a, m } => TreeEdge::down_to(TreeVertex::new(*p, *m, a)),
            Disc::CoBall { .. } => self.complement().to_edge().reverse(),
        }
    }

    /// A canonical point of the disc: the center of a ball, ∞ for a complement.
    pub fn center(&self) -> P1Point {
        match self {
            Disc::Ball { a, .. } => P1Point::Finite(a.clone()),
            Disc::CoBall { .. } => P1Point::Infinity,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Disc::Ball { a, m, .. } => format!("D({};{})", fmt_rat(a), m),
            Disc::CoBall { a, m, .. } if a.is_zero() => format!("Dinf({})", -m),
            Disc::CoBall { a, m, .. } => format!("Dc({};{})", fmt_rat(a), m),
        }
    }

    pub fn parse(p: u32, s: &str) -> Result<Self, TreeError> {
        let bad = || TreeError::Parse(s.to_string());
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("Dinf(").and_then(|r| r.strip_suffix(')')) {
            return Ok(Self::infinite(p, inner.trim().parse().map_err(|_| bad())?));
        }
        let (co, inner) = if let Some(r) = s.strip_prefix("Dc(") {
            (true, r)
        } else if let Some(r) = s.strip_prefix("D(") {
            (false, r)
        } else {
            return Err(bad());
        };
        let inner = inner.strip_suffix(')').ok_or_else(bad)?;
        let (a, m) = inner.split_once(';').ok_or_else(bad)?;
        let a = parse_rat(a).ok_or_else(bad)?;
        let m: i64 = m.trim().parse().map_err(|_| bad())?;
        let ball = Self::ball(p, &a, m);
        Ok(if co { ball.complement() } else { ball })
    }
}

impl fmt::Display for Disc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A 2×2 matrix over Q (exact representatives of Q_p entries).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigRational,
    pub d: BigRational,
}

impl Mat2 {
    pub fn new(a: BigRational, b: BigRational, c: BigRational, d: BigRational) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::new(rat(a), rat(b), rat(c), rat(d))
    }

    pub fn identity() -> Self {
        Self::from_ints(1, 0, 0, 1)
    }

    pub fn det(&self) -> BigRational {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        Some(Mat2::new(&self.d / &det, -&self.b / &det, -&self.c / &det, &self.a / &det))
    }
}

/// A group element acting on the tree, optionally through the twist `g ↦ ħ g ħ⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistedMatrix {
    g: Mat2,
    twist: Option<Mat2>,
    effective: Mat2,
}

impl TwistedMatrix {
    pub fn plain(g: Mat2) -> Result<Self, TreeError> {
        if g.det().is_zero() {
            return Err(TreeError::SingularMatrix);
        }
        Ok(TwistedMatrix { effective: g.clone(), g, twist: None })
    }

    pub fn twisted(g: Mat2, hbar: Mat2) -> Result<Self, TreeError> {
        let hinv = hbar.inverse().ok_or(TreeError::SingularMatrix)?;
        if g.det().is_zero() {
            return Err(TreeError::SingularMatrix);
        }
        let effective = hbar.mul(&g).mul(&hinv);
        Ok(TwistedMatrix { g, twist: Some(hbar), effective })
    }

    pub fn identity() -> Self {
        Self::plain(Mat2::identity()).expect("identity")
    }

    /// `diag(t₁, t₂)`, acting on points by `x ↦ t₁ x / t₂`.
    pub fn diagonal(t1: &BigRational, t2: &BigRational) -> Result<Self, TreeError> {
        Self::plain(Mat2::new(t1.clone(), BigRational::zero(), BigRational::zero(), t2.clone()))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.g
    }

    pub fn is_twisted(&self) -> bool {
        self.twist.is_some()
    }

    /// The matrix whose Möbius action realizes this element.
    pub fn effective(&self) -> &Mat2 {
        &self.effective
    }

    pub fn compose(&self, other: &TwistedMatrix) -> TwistedMatrix {
        let g = self.g.mul(&other.g);
        match &self.twist {
            Some(h) => Self::twisted(g, h.clone()).expect("nonsingular"),
            None => Self::plain(g).expect("nonsingular"),
        }
    }

    pub fn inverse(&self) -> TwistedMatrix {
        let g = self.g.inverse().expect("nonsingular");
        match &self.twist {
            Some(h) => Self::twisted(g, h.clone()).expect("nonsingular"),
            None => Self::plain(g).expect("nonsingular"),
        }
    }

    pub fn act_point(&self, x: &P1Point) -> P1Point {
        let m = &self.effective;
        match x {
            P1Point::Infinity => {
                if m.c.is_zero() {
                    P1Point::Infinity
                } else {
                    P1Point::Finite(&m.a / &m.c)
                }
            }
            P1Point::Finite(x) => {
                let den = &m.c * x + &m.d;
                if den.is_zero() {
                    P1Point::Infinity
                } else {
                    P1Point::Finite((&m.a * x + &m.b) / den)
                }
            }
        }
    }

    pub fn act_vertex(&self, v: &TreeVertex) -> TreeVertex {
        let m = &self.effective;
        let [u, w] = v.basis();
        let gu = (&m.a * &u.0 + &m.b * &u.1, &m.c * &u.0 + &m.d * &u.1);
        let gw = (&m.a * &w.0 + &m.b * &w.1, &m.c * &w.0 + &m.d * &w.1);
        TreeVertex::from_columns(v.p, gu, gw).expect("nonsingular action")
    }

    pub fn act_edge(&self, e: &TreeEdge) -> TreeEdge {
        TreeEdge { source: self.act_vertex(&e.source), target: self.act_vertex(&e.target) }
    }

    /// Image disc, computed through the edge dictionary `U_{ge} = g U_e`.
    pub fn act_disc(&self, d: &Disc) -> Disc {
        self.act_edge(&d.to_edge()).disc()
    }
}

/// Vertices along the unique path, in order.
pub fn geodesic_vertices(v1: &TreeVertex, v2: &TreeVertex) -> Vec<TreeVertex> {
    let m = v1.join_level(v2);
    let mut out: Vec<TreeVertex> = (m..=v1.n).rev().map(|k| v1.ancestor(k)).collect();
    out.extend((m + 1..=v2.n).map(|k| v2.ancestor(k)));
    out
}

/// Oriented edges of the path `v1 → v2`.
pub fn geodesic(v1: &TreeVertex, v2: &TreeVertex) -> Vec<TreeEdge> {
    geodesic_vertices(v1, v2)
        .windows(2)
        .map(|w| TreeEdge { source: w[0].clone(), target: w[1].clone() })
        .collect()
}

pub fn distance(v1: &TreeVertex, v2: &TreeVertex) -> i64 {
    v1.distance(v2)
}

/// The hyperbolic element `x ↦ q̃ x` with axis through 0 and ∞.
#[derive(Clone, Debug)]
pub struct HyperbolicAxis {
    p: u32,
    qtilde: BigRational,
    h: i64,
    gamma: TwistedMatrix,
}

impl HyperbolicAxis {
    pub fn new(qtilde: &PadicNumber) -> Result<Self, TreeError> {
        Self::from_rational(qtilde.p(), &qtilde.to_rational())
    }

    pub fn from_rational(p: u32, qtilde: &BigRational) -> Result<Self, TreeError> {
        let h = vp(p, qtilde).ok_or(TreeError::SingularMatrix)?;
        if h <= 0 {
            return Err(TreeError::NotHyperbolic);
        }
        let gamma = TwistedMatrix::diagonal(qtilde, &BigRational::one())?;
        Ok(HyperbolicAxis { p, qtilde: qtilde.clone(), h, gamma })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn qtilde(&self) -> &BigRational {
        &self.qtilde
    }

    /// Translation length `v(q̃)`.
    pub fn translation_length(&self) -> i64 {
        self.h
    }

    pub fn gamma(&self) -> &TwistedMatrix {
        &self.gamma
    }

    /// `γ^k` applied to a vertex, computed directly from the scaling.
    pub fn translate_vertex(&self, v: &TreeVertex, k: i64) -> TreeVertex {
        let s = self.qtilde_pow(k);
        TreeVertex::new(self.p, v.n + k * self.h, &(&v.c * s))
    }

    pub fn translate_edge(&self, e: &TreeEdge, k: i64) -> TreeEdge {
        TreeEdge { source: self.translate_vertex(&e.source, k), target: self.translate_vertex(&e.target, k) }
    }

    pub fn qtilde_pow(&self, k: i64) -> BigRational {
        if k >= 0 {
            num_traits::pow(self.qtilde.clone(), k as usize)
        } else {
            num_traits::pow(self.qtilde.recip(), (-k) as usize)
        }
    }

    /// Axis edges oriented from ∞ toward 0 in the fundamental strip: `V(k-1;0) → V(k;0)`, `0 <= k < h`.
    pub fn axis_edges(&self) -> impl Iterator<Item = TreeEdge> + '_ {
        (0..self.h).map(move |k| TreeEdge::down_to(TreeVertex::from_int(self.p, k, 0)))
    }

    /// Level at which the ray from a vertex meets the axis.
    pub fn axis_position(v: &TreeVertex) -> i64 {
        match vp(v.p, &v.c) {
            None => v.n,
            Some(c) => c.min(v.n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_of_v1_2() {
        let v = TreeVertex::from_int(5, 1, 2);
        let mut got: Vec<String> = v.neighbors().iter().map(|w| w.label()).collect();
        got.sort();
        let mut want: Vec<String> =
            ["V(0;0)", "V(2;2)", "V(2;7)", "V(2;12)", "V(2;17)", "V(2;22)"].iter().map(|s| s.to_string()).collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn standard_edge_is_zp() {
        let e = TreeEdge::e0(3);
        assert_eq!(e.disc(), Disc::ball_int(3, 0, 0));
        assert_eq!(e.reverse().disc(), Disc::infinite(3, 0));
        assert_eq!(e.reverse().disc().label(), "Dinf(0)");
    }

    #[test]
    fn diag_p_moves_zp() {
        let g = TwistedMatrix::plain(Mat2::from_ints(5, 0, 0, 1)).unwrap();
        assert_eq!(g.act_disc(&Disc::ball_int(5, 0, 0)), Disc::ball_int(5, 0, 1));
    }

    #[test]
    fn geodesic_along_axis() {
        let a = TreeVertex::origin(3);
        let b = TreeVertex::from_int(3, 2, 0);
        assert_eq!(geodesic(&a, &b).len(), 2);
        assert!(geodesic(&a, &a).is_empty());
    }

    #[test]
    fn reduce_handles_fractions() {
        let x = BigRational::new(BigInt::from(1), BigInt::from(2));
        let r = reduce_mod(5, &x, 3);
        assert_eq!(r, rat(63));
        let y = BigRational::new(BigInt::from(7), BigInt::from(25));
        assert_eq!(reduce_mod(5, &y, 0), BigRational::new(BigInt::from(7), BigInt::from(25)));
        assert_eq!(reduce_mod(5, &y, -1), BigRational::new(BigInt::from(2), BigInt::from(25)));
    }

    #[test]
    fn labels_roundtrip() {
        let v = TreeVertex::new(3, -2, &BigRational::new(BigInt::from(1), BigInt::from(27)));
        assert_eq!(TreeVertex::parse(3, &v.label()).unwrap(), v);
        let e = TreeEdge::down_to(v);
        assert_eq!(TreeEdge::parse(3, &e.label()).unwrap(), e);
        let d = Disc::ball_int(3, 2, 3);
        assert_eq!(Disc::parse(3, &d.label()).unwrap(), d);
        assert_eq!(d.to_edge().disc(), d);
    }
}
