//! Signed log-domain scalars and the generalized rising-factorial calculus.
//!
//! Every probability-scale quantity in the crate is carried as a
//! [`SignedLogValue`]: a sign in `{-1, 0, +1}` and the natural log of the
//! magnitude. Products are additions of logs; sums go through [`log_sum`],
//! which shifts by the largest magnitude and accumulates with Neumaier
//! compensation in ascending-magnitude order.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Products are accumulated in plain `f64` and folded into the log whenever the
/// running magnitude leaves `[2^-800, 2^800]`.
const FOLD_HI: f64 = 6.668_014_432_879_854e240; // 2^800
const FOLD_LO: f64 = 1.499_696_813_895_631_6e-241; // 2^-800

/// A real number stored as `sign · exp(log_mag)`.
///
/// `sign == 0` is exact zero, in which case `log_mag` is `-inf`.
#[derive(Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    sign: i8,
    log_mag: f64,
}

impl SignedLogValue {
    pub const ZERO: Self = Self {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: Self = Self {
        sign: 1,
        log_mag: 0.0,
    };

    /// Builds a value from a sign and a log-magnitude. A zero sign or a
    /// `-inf` log-magnitude both produce exact zero.
    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            debug_assert!(!log_mag.is_nan(), "NaN log-magnitude");
            Self {
                sign: sign.signum(),
                log_mag,
            }
        }
    }

    /// Positive value with the given natural log.
    pub fn from_ln(ln: f64) -> Self {
        Self::new(1, ln)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_mag.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of `|self|`; `-inf` for zero.
    pub fn log_mag(self) -> f64 {
        self.log_mag
    }

    /// Natural log of a positive value, `-inf` for zero, NaN for negatives.
    pub fn ln(self) -> f64 {
        match self.sign {
            1 => self.log_mag,
            0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.log_mag)
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        Self::new(self.sign, -self.log_mag)
    }

    /// `self^e` for a non-negative integer exponent.
    pub fn powi(self, e: u32) -> Self {
        if e == 0 {
            return Self::ONE;
        }
        let sign = if e % 2 == 0 { self.sign.abs() } else { self.sign };
        Self::new(sign, self.log_mag * f64::from(e))
    }

    /// `|self - other| / max(|self|, |other|)`, zero when both are zero.
    pub fn relative_gap(self, other: Self) -> f64 {
        let scale = self.log_mag.max(other.log_mag);
        if scale == f64::NEG_INFINITY {
            return 0.0;
        }
        let a = self.scaled(scale);
        let b = other.scaled(scale);
        (a - b).abs()
    }

    fn scaled(self, ln_scale: f64) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * (self.log_mag - ln_scale).exp(),
        }
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        self.log_mag.total_cmp(&other.log_mag)
    }
}

impl Default for SignedLogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SLV({:+}·e^{})", self.sign, self.log_mag)
    }
}

impl fmt::Display for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl From<f64> for SignedLogValue {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for SignedLogValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            Self::ZERO
        } else {
            Self::new(self.sign * rhs.sign, self.log_mag + rhs.log_mag)
        }
    }
}

impl Div for SignedLogValue {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for SignedLogValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.sign, self.log_mag)
    }
}

impl Add for SignedLogValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        log_sum(&[self, rhs])
    }
}

impl Sub for SignedLogValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        log_sum(&[self, -rhs])
    }
}

impl std::iter::Sum for SignedLogValue {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let values: Vec<Self> = iter.collect();
        log_sum(&values)
    }
}

impl std::iter::Product for SignedLogValue {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, |acc, x| acc * x)
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of plain reals.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(values);
    acc.value()
}

/// Signed sum in the log domain.
///
/// Terms are shifted by the largest log-magnitude, sorted by ascending
/// magnitude and accumulated with Neumaier compensation, so the result does
/// not depend on the input order beyond ~1e-13 relative.
pub fn log_sum(values: &[SignedLogValue]) -> SignedLogValue {
    let mut terms: Vec<SignedLogValue> = values.iter().copied().filter(|v| !v.is_zero()).collect();
    match terms.len() {
        0 => return SignedLogValue::ZERO,
        1 => return terms[0],
        _ => {}
    }
    terms.sort_by(SignedLogValue::cmp_magnitude);
    let shift = terms[terms.len() - 1].log_mag;
    let total = compensated_sum(terms.iter().map(|t| t.scaled(shift)));
    if total == 0.0 {
        SignedLogValue::ZERO
    } else {
        SignedLogValue::new(if total > 0.0 { 1 } else { -1 }, shift + total.abs().ln())
    }
}

/// Streaming product of reals that never overflows: the running product is
/// kept in `f64` and folded into a log whenever it leaves a safe window.
#[derive(Clone, Copy, Debug)]
pub struct LogProduct {
    sign: i8,
    log_mag: f64,
    running: f64,
}

impl Default for LogProduct {
    fn default() -> Self {
        Self {
            sign: 1,
            log_mag: 0.0,
            running: 1.0,
        }
    }
}

impl LogProduct {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mul(&mut self, x: f64) {
        if self.sign == 0 {
            return;
        }
        if x == 0.0 {
            self.sign = 0;
            return;
        }
        if x < 0.0 {
            self.sign = -self.sign;
        }
        self.running *= x.abs();
        if !(FOLD_LO..=FOLD_HI).contains(&self.running) {
            self.log_mag += self.running.ln();
            self.running = 1.0;
        }
    }

    pub fn value(&self) -> SignedLogValue {
        if self.sign == 0 {
            SignedLogValue::ZERO
        } else {
            SignedLogValue::new(self.sign, self.log_mag + self.running.ln())
        }
    }
}

/// Generalized rising factorial `(x)_{n↑h} = ∏_{i<n} (x + i·h)`.
///
/// The empty product `(x)_{0↑h}` is 1.
pub fn rising_factorial(x: f64, n: usize, h: f64) -> SignedLogValue {
    let mut acc = LogProduct::new();
    for i in 0..n {
        acc.mul(x + i as f64 * h);
    }
    acc.value()
}

/// Natural log of a rising factorial with positive factors. Returns `-inf`
/// when a factor vanishes and NaN when the product is negative.
pub fn ln_rising(x: f64, n: usize, h: f64) -> f64 {
    rising_factorial(x, n, h).ln()
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let mut acc = LogProduct::new();
    for i in 1..=k {
        acc.mul((n - k + i) as f64 / i as f64);
    }
    acc.value().ln()
}

/// Binomial coefficient as a float, exact while it fits in 128 bits.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        match c.checked_mul(n as u128 - k as u128 + i) {
            Some(v) => c = v / i,
            None => return ln_binomial(n, k).exp(),
        }
    }
    c as f64
}

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    let mut acc = LogProduct::new();
    for i in 2..=n {
        acc.mul(i as f64);
    }
    acc.value().ln()
}
