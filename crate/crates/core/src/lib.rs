//! Desk-scale p-adic L-function machinery: capped-precision p-adics, the
//! Bruhat–Tits tree of GL₂(Q_p), harmonic cocycles and their distributions,
//! Teitelbaum L-invariants, theta elements over anticyclotomic towers, local
//! factor formulas, and the cohomological derivative identities.

pub mod padic;
pub mod tree;
pub mod harmonic;
pub mod distribution;
pub mod anticyclo;
pub mod theta;
pub mod local_factors;
pub mod cohomology;
pub mod checks;
