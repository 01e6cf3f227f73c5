//! Log-domain arithmetic for energies that overflow `f64` at large exponents.

use serde::{Deserialize, Serialize};

/// A nonnegative quantity stored through its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEnergy {
    pub log_value: f64,
    pub is_zero: bool,
}

impl LogEnergy {
    pub const ZERO: LogEnergy = LogEnergy {
        log_value: f64::NEG_INFINITY,
        is_zero: true,
    };

    pub const ONE: LogEnergy = LogEnergy {
        log_value: 0.0,
        is_zero: false,
    };

    pub fn from_log(log_value: f64) -> Self {
        if log_value == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogEnergy {
                log_value,
                is_zero: false,
            }
        }
    }

    pub fn from_value(value: f64) -> Self {
        debug_assert!(value >= 0.0);
        Self::from_log(value.ln())
    }

    /// `ln` of the value, `-inf` when zero.
    pub fn ln(&self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_value
        }
    }

    /// The plain value; may be `inf` for huge energies.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    pub fn log_add(self, other: LogEnergy) -> LogEnergy {
        LogEnergy::from_log(logaddexp(self.ln(), other.ln()))
    }

    pub fn scale_log(self, log_factor: f64) -> LogEnergy {
        if self.is_zero {
            self
        } else {
            LogEnergy::from_log(self.log_value + log_factor)
        }
    }
}

#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum(exp(x)))`, `-inf` for an empty or all `-inf` input.
pub fn logsumexp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    logsumexp_slice(&terms)
}

pub fn logsumexp_slice(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// `k * ln|x|` with the convention `|x|^0 = 1` (also at `x = 0`).
#[inline]
pub(crate) fn pow_log(ln_abs: f64, k: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * ln_abs
    }
}
