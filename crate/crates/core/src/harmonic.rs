//! Harmonic cocycles on the Bruhat–Tits tree as finite edge tables with
//! optional periodicity under a hyperbolic `x ↦ q̃x`.
//!
//! Values for weight `k` are vectors of length `k − 1` in the monomial basis
//! `X^j Y^{k−2−j}`. The table covers the edges whose endpoints lie within the
//! table depth of the anchor edge (`e₀` for freshly built cocycles). Edges missing
//! from the table but inside it are zero; a missing orientation is the negative of
//! the stored one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{PadicError, PadicNumber};
use crate::tree::{vp, HyperbolicAxis, Mat2, P1Point, TreeEdge, TreeError, TreeVertex, TwistedMatrix};

pub type CoeffVec = Vec<PadicNumber>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarmonicError {
    #[error("edge {0} is outside the table")]
    OutOfTable(String),
    #[error("weight must be even and at least 2, got {0}")]
    BadWeight(u32),
    #[error("value for {0} has {1} coefficients, expected {2}")]
    BadLength(String, usize, usize),
    #[error("atom weights do not have vanishing total moments")]
    Unbalanced,
    #[error("unit part of the period has no usable form: {0}")]
    BadPeriod(String),
    #[error("invalid cocycle: {0}")]
    Invalid(ValidationReport),
    #[error("malformed cocycle file: {0}")]
    Format(String),
    #[error("components must share the prime and have weight 2")]
    IncompatibleComponents,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// Edges with both endpoints within `depth` of the anchor's endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    anchor: TreeEdge,
    depth: i64,
}

impl Region {
    pub fn new(anchor: TreeEdge, depth: i64) -> Self {
        Region { anchor, depth }
    }

    pub fn anchor(&self) -> &TreeEdge {
        &self.anchor
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    pub fn vertex_distance(&self, v: &TreeVertex) -> i64 {
        v.distance(self.anchor.source()).min(v.distance(self.anchor.target()))
    }

    pub fn contains_vertex(&self, v: &TreeVertex) -> bool {
        self.vertex_distance(v) <= self.depth
    }

    pub fn contains_edge(&self, e: &TreeEdge) -> bool {
        self.contains_vertex(e.source()) && self.contains_vertex(e.target())
    }

    /// Every edge at `v` lies in the region.
    pub fn is_interior(&self, v: &TreeVertex) -> bool {
        self.vertex_distance(v) < self.depth
    }

    fn image(&self, g: &TwistedMatrix) -> Region {
        Region { anchor: g.act_edge(&self.anchor), depth: self.depth }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    OutsideRegion { edge: String },
    Antisymmetry { edge: String },
    VertexSum { vertex: String },
    Periodicity { edge: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutsideRegion { edge } => write!(f, "edge {edge} lies outside the table depth"),
            Violation::Antisymmetry { edge } => write!(f, "c(e) + c(reverse e) != 0 at {edge}"),
            Violation::VertexSum { vertex } => write!(f, "vertex sum != 0 at {vertex}"),
            Violation::Periodicity { edge } => write!(f, "periodicity fails at {edge}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

fn binom(n: u32, k: u32) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(a: &[BigRational], e: u32) -> Vec<BigRational> {
    (0..e).fold(vec![BigRational::one()], |acc, _| poly_mul(&acc, a))
}

/// Matrix of `ρ̌(g)` on weight-`k` coefficient vectors: entry `[j][i]` is
/// `binom(k−2,j)/binom(k−2,i)` times the `x^i` coefficient of
/// `(ax+b)^j (cx+d)^{k−2−j} / det^{k/2−1}`.
pub fn rho_check(g: &Mat2, k: u32) -> Vec<Vec<BigRational>> {
    let n = k - 2;
    let det_pow = num_traits::pow(g.det(), (k / 2 - 1) as usize);
    let lin1 = [g.b.clone(), g.a.clone()];
    let lin2 = [g.d.clone(), g.c.clone()];
    (0..=n)
        .map(|j| {
            let poly = poly_mul(&poly_pow(&lin1, j), &poly_pow(&lin2, n - j));
            (0..=n)
                .map(|i| {
                    let coef = poly.get(i as usize).cloned().unwrap_or_else(BigRational::zero);
                    coef * BigRational::new(binom(n, j), binom(n, i)) / &det_pow
                })
                .collect()
        })
        .collect()
}

pub fn apply_matrix(m: &[Vec<BigRational>], v: &[PadicNumber]) -> CoeffVec {
    m.iter()
        .map(|row| {
            let mut terms = row.iter().zip(v).filter(|(r, _)| !r.is_zero()).map(|(r, x)| x.mul_rational(r));
            let first = terms.next().unwrap_or_else(|| PadicNumber::zero(v[0].p(), v[0].prec()));
            terms.fold(first, |acc, t| &acc + &t)
        })
        .collect()
}

fn neg_vec(v: &[PadicNumber]) -> CoeffVec {
    v.iter().map(|x| -x).collect()
}

fn is_zero_vec(v: &[PadicNumber]) -> bool {
    v.iter().all(PadicNumber::is_zero)
}

fn add_vec(a: &[PadicNumber], b: &[PadicNumber]) -> CoeffVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// A γ-invariant weight-2 measure: `a·(δ₀ − δ_∞) + Σ_k Σ_i w_i δ_{q̃^k x_i}` with `Σ w_i = 0`.
#[derive(Clone, Debug)]
pub struct OrbitMeasure {
    axis: HyperbolicAxis,
    axis_weight: i64,
    atoms: Vec<(BigRational, i64, i64)>,
}

impl OrbitMeasure {
    pub fn new(axis: HyperbolicAxis, axis_weight: i64, atoms: &[(BigRational, i64)]) -> Result<Self, HarmonicError> {
        if atoms.iter().map(|a| a.1).sum::<i64>() != 0 {
            return Err(HarmonicError::Unbalanced);
        }
        let p = axis.p();
        let atoms = atoms
            .iter()
            .map(|(x, w)| vp(p, x).map(|v| (x.clone(), *w, v)).ok_or(HarmonicError::Unbalanced))
            .collect::<Result<_, _>>()?;
        Ok(OrbitMeasure { axis, axis_weight, atoms })
    }

    /// Mass of the ball `V(n;c)`, exact.
    pub fn ball_mass(&self, ball: &TreeVertex) -> i64 {
        let h = self.axis.translation_length();
        let n = ball.level();
        let c = ball.center();
        if c.is_zero() {
            // Regularized count of orbit points in p^n Z_p; the divergent part cancels since Σ w = 0.
            let tail: i64 = self.atoms.iter().map(|(_, w, v)| w * Integer::div_ceil(&(n - v), &h)).sum();
            return self.axis_weight - tail;
        }
        let va = vp(ball.p(), c).expect("nonzero center");
        self.atoms
            .iter()
            .filter(|(_, _, v)| (va - v).rem_euclid(h) == 0)
            .filter(|(x, _, v)| {
                let y = x * self.axis.qtilde_pow((va - v) / h);
                ball.contains_point(&P1Point::Finite(y))
            })
            .map(|(_, w, _)| *w)
            .sum()
    }

    /// Orbit points whose rays can meet a region of the given depth around `e₀`.
    fn points_near(&self, depth: i64) -> Vec<BigRational> {
        let h = self.axis.translation_length();
        let mut pts = vec![BigRational::zero()];
        for (x, _, v) in &self.atoms {
            let lo = Integer::div_floor(&(-depth - 2 - v), &h);
            let hi = Integer::div_ceil(&(depth + 2 - v), &h);
            pts.extend((lo..=hi).map(|k| x * self.axis.qtilde_pow(k)));
        }
        pts
    }
}

/// Child vertices of the in-region edges on the ray from ∞ to `y`.
fn ray_children(region: &Region, p: u32, y: &BigRational) -> Vec<TreeVertex> {
    let d = region.depth + region.anchor.target().level().abs() + 2;
    (-d..=d)
        .map(|n| TreeVertex::on_ray(p, y, n))
        .filter(|v| region.contains_edge(&TreeEdge::down_to(v.clone())))
        .collect()
}

#[derive(Clone, Debug)]
pub struct HarmonicCocycle {
    p: u32,
    weight: u32,
    prec: i64,
    region: Region,
    entries: BTreeMap<TreeEdge, CoeffVec>,
    period: Option<HyperbolicAxis>,
    support: BTreeSet<TreeVertex>,
}

impl HarmonicCocycle {
    /// Raw constructor. Does not validate harmonicity.
    pub fn new(
        p: u32,
        weight: u32,
        depth: i64,
        entries: BTreeMap<TreeEdge, CoeffVec>,
        period: Option<HyperbolicAxis>,
    ) -> Result<Self, HarmonicError> {
        if weight < 2 || weight % 2 == 1 {
            return Err(HarmonicError::BadWeight(weight));
        }
        let len = (weight - 1) as usize;
        for (e, v) in &entries {
            if v.len() != len {
                return Err(HarmonicError::BadLength(e.label(), v.len(), len));
            }
        }
        let prec = entries.values().flatten().map(PadicNumber::prec).min().unwrap_or_else(crate::padic::default_precision);
        let mut c = HarmonicCocycle {
            p,
            weight,
            prec,
            region: Region::new(TreeEdge::e0(p), depth),
            entries,
            period,
            support: BTreeSet::new(),
        };
        c.rebuild_support();
        Ok(c)
    }

    pub fn zero(p: u32, weight: u32, depth: i64) -> Result<Self, HarmonicError> {
        Self::new(p, weight, depth, BTreeMap::new(), None)
    }

    fn rebuild_support(&mut self) {
        let mut support = BTreeSet::new();
        for (e, v) in &self.entries {
            if is_zero_vec(v) {
                continue;
            }
            let mut w = e.child().clone();
            while self.region.contains_vertex(&w) && support.insert(w.clone()) {
                w = w.parent();
            }
        }
        self.support = support;
    }

    fn from_ball_masses(
        p: u32,
        weight: u32,
        depth: i64,
        prec: i64,
        children: impl IntoIterator<Item = TreeVertex>,
        period: Option<HyperbolicAxis>,
        mass: impl Fn(&TreeVertex) -> Vec<BigRational>,
    ) -> Result<Self, HarmonicError> {
        let mut entries = BTreeMap::new();
        for child in children {
            let m = mass(&child);
            if m.iter().all(Zero::is_zero) {
                continue;
            }
            let vals: CoeffVec = m.iter().map(|x| PadicNumber::from_rational(p, x, prec)).collect();
            let e = TreeEdge::down_to(child);
            entries.insert(e.reverse(), neg_vec(&vals));
            entries.insert(e, vals);
        }
        let mut c = Self::new(p, weight, depth, entries, period)?;
        c.prec = prec;
        Ok(c)
    }

    /// The weight-2 cocycle of `δ₀ − δ_∞`: `+1` on axis edges pointing toward 0, periodic under `x ↦ q̃x`.
    pub fn axis_cocycle(qtilde: &PadicNumber, depth: i64) -> Result<Self, HarmonicError> {
        Self::orbit_cocycle(qtilde, 1, &[], depth)
    }

    /// Weight-2 cocycle of `a·(δ₀ − δ_∞) + Σ_k Σ_i w_i δ_{q̃^k x_i}`, periodic under `x ↦ q̃x`.
    pub fn orbit_cocycle(
        qtilde: &PadicNumber,
        axis_weight: i64,
        atoms: &[(BigRational, i64)],
        depth: i64,
    ) -> Result<Self, HarmonicError> {
        let axis = HyperbolicAxis::new(qtilde)?;
        let p = axis.p();
        let measure = OrbitMeasure::new(axis.clone(), axis_weight, atoms)?;
        let region = Region::new(TreeEdge::e0(p), depth);
        let children: BTreeSet<TreeVertex> =
            measure.points_near(depth).iter().flat_map(|y| ray_children(&region, p, y)).collect();
        Self::from_ball_masses(p, 2, depth, qtilde.prec(), children, Some(axis), |v| {
            vec![BigRational::from_integer(BigInt::from(measure.ball_mass(v)))]
        })
    }

    /// Cocycle of a finite point distribution `Σ w_i δ_{y_i}`. For weight `k` the
    /// value on `e` is `binom(k−2,j)·Σ_{y_i ∈ U_e} w_i y_i^j`; all total moments of
    /// degree `≤ k−2` must vanish.
    pub fn from_atoms(
        p: u32,
        weight: u32,
        depth: i64,
        prec: i64,
        atoms: &[(BigRational, BigRational)],
    ) -> Result<Self, HarmonicError> {
        if weight < 2 || weight % 2 == 1 {
            return Err(HarmonicError::BadWeight(weight));
        }
        let n = weight - 2;
        let moments = |pts: &mut dyn Iterator<Item = &(BigRational, BigRational)>| -> Vec<BigRational> {
            let mut m = vec![BigRational::zero(); (n + 1) as usize];
            for (y, w) in pts {
                let mut pw = BigRational::one();
                for (j, slot) in m.iter_mut().enumerate() {
                    *slot += w * &pw * BigRational::from_integer(binom(n, j as u32));
                    pw *= y;
                }
            }
            m
        };
        if moments(&mut atoms.iter()).iter().any(|x| !x.is_zero()) {
            return Err(HarmonicError::Unbalanced);
        }
        let region = Region::new(TreeEdge::e0(p), depth);
        let children: BTreeSet<TreeVertex> = atoms.iter().flat_map(|(y, _)| ray_children(&region, p, y)).collect();
        Self::from_ball_masses(p, weight, depth, prec, children, None, |v| {
            moments(&mut atoms.iter().filter(|(y, _)| v.contains_point(&P1Point::Finite(y.clone()))))
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn depth(&self) -> i64 {
        self.region.depth
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn period(&self) -> Option<&HyperbolicAxis> {
        self.period.as_ref()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&TreeEdge, &CoeffVec)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Overwrites one stored oriented value.
    pub fn set_entry(&mut self, e: TreeEdge, v: CoeffVec) -> Result<(), HarmonicError> {
        if v.len() != (self.weight - 1) as usize {
            return Err(HarmonicError::BadLength(e.label(), v.len(), (self.weight - 1) as usize));
        }
        self.entries.insert(e, v);
        self.rebuild_support();
        Ok(())
    }

    pub fn scaled(&self, s: &PadicNumber) -> Self {
        let mut c = self.clone();
        for v in c.entries.values_mut() {
            for x in v.iter_mut() {
                *x = &*x * s;
            }
        }
        c.prec = c.entries.values().flatten().map(PadicNumber::prec).min().unwrap_or(self.prec);
        c.rebuild_support();
        c
    }

    fn zero_vec(&self) -> CoeffVec {
        vec![PadicNumber::zero(self.p, self.prec); (self.weight - 1) as usize]
    }

    /// Table lookup without periodic reduction.
    fn lookup(&self, e: &TreeEdge) -> Option<CoeffVec> {
        if !self.region.contains_edge(e) {
            return None;
        }
        if let Some(v) = self.entries.get(e) {
            return Some(v.clone());
        }
        Some(self.entries.get(&e.reverse()).map(|v| neg_vec(v)).unwrap_or_else(|| self.zero_vec()))
    }

    /// Shifts `k` for which `γ^k` may bring the vertex into the table.
    fn reduction_shifts(&self, v: &TreeVertex) -> Vec<i64> {
        let Some(axis) = &self.period else { return vec![] };
        let h = axis.translation_length();
        let j = HyperbolicAxis::axis_position(v);
        let j0 = HyperbolicAxis::axis_position(self.region.anchor.target());
        let k0 = Integer::div_floor(&(j0 - j), &h);
        vec![k0, k0 + 1, k0 - 1, k0 + 2]
    }

    fn rho_gamma_pow(&self, k: i64) -> Option<Vec<Vec<BigRational>>> {
        if self.weight == 2 {
            return None;
        }
        let axis = self.period.as_ref()?;
        let q = axis.qtilde_pow(k);
        Some(rho_check(&Mat2::new(q, BigRational::zero(), BigRational::zero(), BigRational::one()), self.weight))
    }

    pub fn evaluate(&self, e: &TreeEdge) -> Result<CoeffVec, HarmonicError> {
        if let Some(v) = self.lookup(e) {
            return Ok(v);
        }
        if let Some(axis) = &self.period {
            for k in self.reduction_shifts(e.child()) {
                if let Some(v) = self.lookup(&axis.translate_edge(e, k)) {
                    // c(e) = ρ̌(γ^{-k}) c(γ^k e)
                    return Ok(match self.rho_gamma_pow(-k) {
                        Some(m) => apply_matrix(&m, &v),
                        None => v,
                    });
                }
            }
        }
        Err(HarmonicError::OutOfTable(e.label()))
    }

    /// Weight-2 convenience: the scalar value.
    pub fn value(&self, e: &TreeEdge) -> Result<PadicNumber, HarmonicError> {
        Ok(self.evaluate(e)?.swap_remove(0))
    }

    /// Whether some nonzero edge lies below the ball `v` (after periodic reduction).
    pub fn has_support_below(&self, v: &TreeVertex) -> Result<bool, HarmonicError> {
        if self.region.contains_vertex(v) {
            return Ok(self.support.contains(v));
        }
        if let Some(axis) = &self.period {
            for k in self.reduction_shifts(v) {
                let w = axis.translate_vertex(v, k);
                if self.region.contains_vertex(&w) {
                    return Ok(self.support.contains(&w));
                }
            }
        }
        Err(HarmonicError::OutOfTable(v.label()))
    }

    /// All violated antisymmetry, vertex-sum, and periodicity constraints.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for e in self.entries.keys() {
            if !self.region.contains_edge(e) {
                violations.push(Violation::OutsideRegion { edge: e.label() });
            }
        }
        for (e, v) in &self.entries {
            if !e.is_downward() {
                continue;
            }
            if let Some(w) = self.entries.get(&e.reverse()) {
                if !is_zero_vec(&add_vec(v, w)) {
                    violations.push(Violation::Antisymmetry { edge: e.label() });
                }
            }
        }
        let vertices: BTreeSet<&TreeVertex> = self.entries.keys().flat_map(|e| [e.source(), e.target()]).collect();
        for v in vertices {
            if !self.region.is_interior(v) {
                continue;
            }
            let mut incoming = self.zero_vec();
            let mut outgoing = self.zero_vec();
            for w in v.neighbors() {
                let inn = TreeEdge::new(w.clone(), v.clone()).expect("adjacent");
                incoming = add_vec(&incoming, &self.lookup(&inn).expect("interior"));
                outgoing = add_vec(&outgoing, &self.lookup(&inn.reverse()).expect("interior"));
            }
            if !is_zero_vec(&incoming) || !is_zero_vec(&outgoing) {
                violations.push(Violation::VertexSum { vertex: v.label() });
            }
        }
        if let Some(axis) = &self.period {
            let fwd = self.rho_gamma_pow(1);
            let back = self.rho_gamma_pow(-1);
            for (e, v) in &self.entries {
                for (k, m) in [(1, &fwd), (-1, &back)] {
                    let moved = axis.translate_edge(e, k);
                    if let Some(w) = self.lookup(&moved) {
                        let expect = match m {
                            Some(m) => apply_matrix(m, v),
                            None => v.clone(),
                        };
                        let diff: CoeffVec = w.iter().zip(&expect).map(|(a, b)| a - b).collect();
                        if !is_zero_vec(&diff) {
                            violations.push(Violation::Periodicity { edge: e.label() });
                            break;
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// `(g⋆c)(e) = ρ̌(g) c(g⁻¹e)`, as a table over the image region. Periodicity is
    /// kept when `g` is diagonal (it then commutes with the period).
    pub fn act_star(&self, g: &TwistedMatrix) -> Result<Self, HarmonicError> {
        let m = g.effective();
        let rho = (self.weight > 2).then(|| rho_check(m, self.weight));
        let entries = self
            .entries
            .iter()
            .map(|(e, v)| {
                let val = match &rho {
                    Some(r) => apply_matrix(r, v),
                    None => v.clone(),
                };
                (g.act_edge(e), val)
            })
            .collect();
        let diagonal = m.b.is_zero() && m.c.is_zero();
        let mut out = HarmonicCocycle {
            p: self.p,
            weight: self.weight,
            prec: self.prec,
            region: self.region.image(g),
            entries,
            period: if diagonal { self.period.clone() } else { None },
            support: BTreeSet::new(),
        };
        out.rebuild_support();
        Ok(out)
    }

    /// `max |ρ̌(g) c(g⁻¹e₀)|` over the sampled `g` whose preimage edge is in the table.
    pub fn boundedness_norm(&self, samples: &[TwistedMatrix]) -> BigRational {
        let e0 = TreeEdge::e0(self.p);
        let mut best: Option<i64> = None;
        for g in samples {
            let Ok(v) = self.evaluate(&g.inverse().act_edge(&e0)) else { continue };
            let v = if self.weight > 2 { apply_matrix(&rho_check(g.effective(), self.weight), &v) } else { v };
            for x in &v {
                if let Some(val) = x.valuation() {
                    best = Some(best.map_or(val, |b| b.min(val)));
                }
            }
        }
        match best {
            None => BigRational::zero(),
            Some(v) if v >= 0 => BigRational::new(BigInt::one(), crate::padic::ppow(self.p, v)),
            Some(v) => BigRational::from_integer(crate::padic::ppow(self.p, -v)),
        }
    }

    pub fn to_file(&self) -> CocycleFile {
        CocycleFile {
            p: self.p,
            weight: self.weight,
            depth: self.region.depth,
            periodic: self.period.as_ref().map(|a| PeriodicSpec {
                qtilde: PadicNumber::from_rational(self.p, a.qtilde(), self.prec).to_string(),
            }),
            edges: self
                .entries
                .iter()
                .map(|(e, v)| (e.label(), v.iter().map(|x| x.to_string()).collect()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    /// Parses and validates a cocycle file; invalid tables are rejected with the full report.
    pub fn from_file(f: &CocycleFile) -> Result<Self, HarmonicError> {
        let mut entries = BTreeMap::new();
        for (label, vals) in &f.edges {
            let e = TreeEdge::parse(f.p, label)?;
            let v = vals.iter().map(|s| s.parse::<PadicNumber>()).collect::<Result<CoeffVec, _>>()?;
            if v.iter().any(|x| x.p() != f.p) {
                return Err(HarmonicError::Format(format!("prime mismatch in {label}")));
            }
            entries.insert(e, v);
        }
        let period = match &f.periodic {
            None => None,
            Some(spec) => {
                let q: PadicNumber = spec.qtilde.parse()?;
                Some(HyperbolicAxis::new(&q)?)
            }
        };
        let c = Self::new(f.p, f.weight, f.depth, entries, period)?;
        let report = c.validate();
        if !report.is_valid() {
            return Err(HarmonicError::Invalid(report));
        }
        Ok(c)
    }

    pub fn from_json(s: &str) -> Result<Self, HarmonicError> {
        let f: CocycleFile = serde_json::from_str(s).map_err(|e| HarmonicError::Format(e.to_string()))?;
        Self::from_file(&f)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PeriodicSpec {
    pub qtilde: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CocycleFile {
    pub p: u32,
    pub weight: u32,
    pub depth: i64,
    pub periodic: Option<PeriodicSpec>,
    pub edges: BTreeMap<String, Vec<String>>,
}

/// Weight-2 cocycles on a product of trees, `c(e₁,…,e_r) = Π c_i(e_i)`.
#[derive(Clone, Debug)]
pub struct MultiCocycle {
    components: Vec<HarmonicCocycle>,
}

impl MultiCocycle {
    pub fn new(components: Vec<HarmonicCocycle>) -> Result<Self, HarmonicError> {
        let Some(first) = components.first() else { return Err(HarmonicError::IncompatibleComponents) };
        if components.iter().any(|c| c.weight != 2 || c.p != first.p) {
            return Err(HarmonicError::IncompatibleComponents);
        }
        Ok(MultiCocycle { components })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[HarmonicCocycle] {
        &self.components
    }

    pub fn evaluate(&self, edges: &[TreeEdge]) -> Result<PadicNumber, HarmonicError> {
        if edges.len() != self.components.len() {
            return Err(HarmonicError::IncompatibleComponents);
        }
        let mut acc: Option<PadicNumber> = None;
        for (c, e) in self.components.iter().zip(edges) {
            let v = c.value(e)?;
            acc = Some(match acc {
                None => v,
                Some(a) => &a * &v,
            });
        }
        Ok(acc.expect("nonempty"))
    }

    /// Checks both harmonicity conditions of the product in every coordinate,
    /// with the other coordinates held at the given edges.
    pub fn validate_at(&self, base: &[TreeEdge], vertices: &[Vec<TreeVertex>]) -> Result<ValidationReport, HarmonicError> {
        let mut violations = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            violations.extend(c.validate().violations);
            for v in vertices.get(i).into_iter().flatten() {
                if !c.region.is_interior(v) {
                    continue;
                }
                let mut sum = PadicNumber::zero(c.p, c.prec);
                for w in v.neighbors() {
                    let mut tuple = base.to_vec();
                    let e = TreeEdge::new(w, v.clone())?;
                    tuple[i] = e.clone();
                    let a = self.evaluate(&tuple)?;
                    tuple[i] = e.reverse();
                    let b = self.evaluate(&tuple)?;
                    if !(&a + &b).is_zero() {
                        violations.push(Violation::Antisymmetry { edge: e.label() });
                    }
                    sum = &sum + &a;
                }
                if !sum.is_zero() {
                    violations.push(Violation::VertexSum { vertex: v.label() });
                }
            }
        }
        Ok(ValidationReport { violations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: u32, n: i64) -> PadicNumber {
        PadicNumber::from_int(p, n, 20)
    }

    #[test]
    fn axis_values() {
        let c = HarmonicCocycle::axis_cocycle(&q(3, 3), 4).unwrap();
        assert!(c.validate().is_valid());
        let e0 = TreeEdge::e0(3);
        assert_eq!(c.value(&e0).unwrap(), q(3, 1));
        assert_eq!(c.value(&e0.reverse()).unwrap(), q(3, -1));
        let off = TreeEdge::down_to(TreeVertex::from_int(3, 1, 1));
        assert!(c.value(&off).unwrap().is_zero());
        let far = TreeEdge::down_to(TreeVertex::from_int(3, 40, 0));
        assert_eq!(c.value(&far).unwrap(), q(3, 1));
    }

    #[test]
    fn perturbation_is_localized() {
        let mut c = HarmonicCocycle::axis_cocycle(&q(5, 5), 3).unwrap();
        let e0 = TreeEdge::e0(5);
        c.set_entry(e0.clone(), vec![q(5, 2)]).unwrap();
        let r = c.validate();
        let sums = r.violations.iter().filter(|v| matches!(v, Violation::VertexSum { .. })).count();
        let anti = r.violations.iter().filter(|v| matches!(v, Violation::Antisymmetry { .. })).count();
        assert_eq!((sums, anti), (2, 1));
    }

    #[test]
    fn orbit_cocycle_is_harmonic_and_periodic() {
        let p = 3;
        let qt = q(p, 3 * 4);
        let atoms = [(BigRational::from_integer(4.into()), 1), (BigRational::one(), -1)];
        let c = HarmonicCocycle::orbit_cocycle(&qt, 1, &atoms, 5).unwrap();
        assert!(c.validate().is_valid(), "{}", c.validate());
    }

    #[test]
    fn weight_four_atoms() {
        let p = 5;
        let r = |n: i64| BigRational::from_integer(n.into());
        let atoms = [(r(0), r(-1)), (r(1), r(3)), (r(2), r(-3)), (r(3), r(1))];
        let c = HarmonicCocycle::from_atoms(p, 4, 3, 20, &atoms).unwrap();
        assert!(c.validate().is_valid(), "{}", c.validate());
        let bad = [(r(0), r(1)), (r(1), r(-1))];
        assert_eq!(HarmonicCocycle::from_atoms(p, 4, 3, 20, &bad).unwrap_err(), HarmonicError::Unbalanced);
    }

    #[test]
    fn json_roundtrip() {
        let c = HarmonicCocycle::axis_cocycle(&q(3, 3), 3).unwrap();
        let back = HarmonicCocycle::from_json(&c.to_json()).unwrap();
        assert_eq!(back.entries, c.entries);
    }
}
