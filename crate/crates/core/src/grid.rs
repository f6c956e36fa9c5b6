//! Geometric discretization of weight-space.

use num::traits::{One, Signed};

use crate::error::{Error, Result};
use crate::rational::{ceil_log, floor_log, format_q, pow, q, Q};

/// Intervals `I_u = [(1+eps)^(u-1), (1+eps)^u)` with `nu = ceil(log_{1+eps} total_weight)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightIntervalGrid {
    eps: Q,
    base: Q,
    nu: i64,
}

impl WeightIntervalGrid {
    pub fn new(eps: &Q, total_weight: &Q) -> Result<Self> {
        check_eps(eps)?;
        let base = Q::one() + eps;
        let nu = if total_weight.is_positive() { ceil_log(&base, total_weight) } else { 0 };
        Ok(WeightIntervalGrid { eps: eps.clone(), base, nu })
    }

    pub fn eps(&self) -> &Q {
        &self.eps
    }

    /// `1 + eps`.
    pub fn base(&self) -> &Q {
        &self.base
    }

    pub fn nu(&self) -> i64 {
        self.nu
    }

    /// `(1+eps)^k`.
    pub fn power(&self, k: i64) -> Q {
        pow(&self.base, k)
    }

    pub fn lo(&self, u: i64) -> Q {
        self.power(u - 1)
    }

    pub fn hi(&self, u: i64) -> Q {
        self.power(u)
    }

    /// `|I_u| = eps (1+eps)^(u-1)`.
    pub fn len(&self, u: i64) -> Q {
        &self.eps * self.power(u - 1)
    }

    /// Index `u` of the interval containing `w > 0`.
    pub fn index_of(&self, w: &Q) -> i64 {
        floor_log(&self.base, w) + 1
    }

    /// Smallest integer power of `1+eps` that is at least `w > 0`.
    pub fn round_up(&self, w: &Q) -> Q {
        self.power(ceil_log(&self.base, w))
    }
}

/// Accepts `0 < eps < 1/2`.
pub fn check_eps(eps: &Q) -> Result<()> {
    if !eps.is_positive() || *eps >= q(1, 2) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1/2), got {}", format_q(eps))));
    }
    Ok(())
}
