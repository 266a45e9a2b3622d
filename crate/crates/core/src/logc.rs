//! Complex numbers stored as `(ln |z|, arg z)` so that integer powers with
//! exponents in the thousands stay representable.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    pub log_mag: f64,
    /// Radians in `(-pi, pi]`.
    pub arg: f64,
}

fn wrap(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

impl LogComplex {
    pub const ZERO: Self = Self {
        log_mag: f64::NEG_INFINITY,
        arg: 0.0,
    };
    pub const ONE: Self = Self {
        log_mag: 0.0,
        arg: 0.0,
    };

    pub fn new(log_mag: f64, arg: f64) -> Self {
        Self {
            log_mag,
            arg: wrap(arg),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        Self {
            log_mag: z.norm().ln(),
            arg: z.arg(),
        }
    }

    /// Positive real `exp(log_value)`.
    pub fn from_ln(log_value: f64) -> Self {
        Self {
            log_mag: log_value,
            arg: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.log_mag.exp(), self.arg)
    }

    /// `self * exp(-log_ref)` as an ordinary complex number.
    pub fn scaled(self, log_ref: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar((self.log_mag - log_ref).exp(), self.arg)
    }

    pub fn powi(self, m: i64) -> Self {
        if self.is_zero() {
            return if m == 0 { Self::ONE } else { Self::ZERO };
        }
        let mf = m as f64;
        Self::new(mf * self.log_mag, mf * self.arg)
    }

    pub fn conj(self) -> Self {
        Self::new(self.log_mag, -self.arg)
    }

    pub fn inv(self) -> Self {
        Self::new(-self.log_mag, -self.arg)
    }

    /// Multiply by the positive real `exp(log_factor)`.
    pub fn mul_ln(self, log_factor: f64) -> Self {
        Self {
            log_mag: self.log_mag + log_factor,
            arg: self.arg,
        }
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex::new(self.log_mag + rhs.log_mag, self.arg + rhs.arg)
    }
}

impl From<Complex64> for LogComplex {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

/// Neumaier-compensated sum of real values in the given order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln(sum exp(x_i))` without overflow; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + neumaier_sum(values.iter().map(|v| (v - max).exp())).ln()
}

/// Sum of log-represented terms, smallest magnitude first with compensation.
/// Returns `(sum * exp(-log_ref), log_ref)` with `log_ref` the largest term's
/// log-magnitude.
pub fn sum_scaled(terms: &mut [LogComplex]) -> (Complex64, f64) {
    terms.sort_by(|a, b| a.log_mag.total_cmp(&b.log_mag));
    let log_ref = terms
        .last()
        .map(|t| t.log_mag)
        .filter(|l| l.is_finite())
        .unwrap_or(0.0);
    let scaled: Vec<Complex64> = terms.iter().map(|t| t.scaled(log_ref)).collect();
    let re = neumaier_sum(scaled.iter().map(|z| z.re));
    let im = neumaier_sum(scaled.iter().map(|z| z.im));
    (Complex64::new(re, im), log_ref)
}

/// [`sum_scaled`] converted back to an ordinary complex number.
pub fn sum_terms(terms: &mut [LogComplex]) -> Complex64 {
    let (s, log_ref) = sum_scaled(terms);
    s * log_ref.exp()
}
