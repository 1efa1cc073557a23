//! Capped-precision arithmetic in Q_p and its unramified quadratic extension,
//! Teichmüller lifts, the exponential, and the logarithm branches `log_u`.

mod log;
mod number;
mod qp2;

pub use log::{exp_p, iwasawa_log, iwasawa_log_qp2, LogBranch};
pub use number::{inv_mod, is_odd_prime, ppow, split_p, teichmuller, PadicNumber};
pub use qp2::Qp2Number;

use thiserror::Error;

/// Default absolute precision in p-adic digits.
pub const DEFAULT_PRECISION: i64 = 20;

/// Working precision: `PADICX_PRECISION` when set to a positive integer, else 20.
pub fn default_precision() -> i64 {
    std::env::var("PADICX_PRECISION")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(DEFAULT_PRECISION)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),
    #[error("Teichmüller lift of a residue divisible by p")]
    ZeroResidue,
    #[error("logarithm of zero")]
    ZeroInput,
    #[error("exponential needs valuation >= 1, got {0}")]
    ConvergenceDomain(i64),
    #[error("branch point must have positive valuation")]
    BadBranch,
    #[error("{0} is not an odd prime")]
    NotOddPrime(u32),
    #[error("cannot parse p-adic value {0:?}")]
    Parse(String),
}
