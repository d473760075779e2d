#![allow(dead_code)]

use gpk_core::numerics::{binomial, log_sum, rising_factorial, SignedLogValue};
use gpk_core::oracle::enumerate_compositions;
use gpk_core::{GibbsModel, PartitionState, VTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn state(sizes: &[usize]) -> PartitionState {
    PartitionState::new(sizes.to_vec()).unwrap()
}

pub fn py(alpha: f64, theta: f64) -> GibbsModel {
    GibbsModel::pitman_yor(alpha, theta).unwrap()
}

pub fn dp(theta: f64) -> GibbsModel {
    GibbsModel::dirichlet(theta).unwrap()
}

/// Table model from the backward recursion with a smooth, strictly positive
/// last row.
pub fn recursion_table(alpha: f64, n_max: usize, wiggle: f64) -> GibbsModel {
    let last: Vec<f64> = (1..=n_max)
        .map(|k| (1.0 + 0.5 * (k as f64 * wiggle).sin()) * (k as f64).powf(0.3))
        .collect();
    GibbsModel::from_table(VTable::by_backward_recursion(alpha, &last).unwrap()).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// `(x)_{n+r↑h}` against `(x)_{n↑h} (x+nh)_{r↑h}`.
pub fn multiplicative_gap(x: f64, h: f64, n: usize, r: usize) -> f64 {
    let lhs = rising_factorial(x, n + r, h);
    let rhs = rising_factorial(x, n, h) * rising_factorial(x + n as f64 * h, r, h);
    lhs.relative_gap(rhs)
}

/// `(x+y)_{n↑h}` against `Σ_k C(n,k) (x)_{k↑h} (y)_{n−k↑h}`.
pub fn binomial_gap(x: f64, y: f64, h: f64, n: usize) -> f64 {
    let terms: Vec<_> = (0..=n)
        .map(|k| {
            SignedLogValue::from_f64(binomial(n, k))
                * rising_factorial(x, k, h)
                * rising_factorial(y, n - k, h)
        })
        .collect();
    rising_factorial(x + y, n, h).relative_gap(log_sum(&terms))
}

/// `(Σ x_i)_{n↑h}` against the multinomial expansion over weak compositions.
pub fn multinomial_gap(xs: &[f64], h: f64, n: usize) -> f64 {
    let terms: Vec<_> = enumerate_compositions(n, xs.len(), true)
        .map(|parts| {
            let mut coef = 1.0;
            let mut left = n;
            let mut v = SignedLogValue::ONE;
            for (&x, &p) in xs.iter().zip(&parts) {
                coef *= binomial(left, p);
                left -= p;
                v = v * rising_factorial(x, p, h);
            }
            SignedLogValue::from_f64(coef) * v
        })
        .collect();
    rising_factorial(xs.iter().sum(), n, h).relative_gap(log_sum(&terms))
}

/// `(z)_{n+m−1↑}` against `(z)_{m−1↑} (z+m−1)_{n↑}`.
pub fn shift_gap(z: f64, n: usize, m: usize) -> f64 {
    let lhs = rising_factorial(z, n + m - 1, 1.0);
    let rhs = rising_factorial(z, m - 1, 1.0) * rising_factorial(z + (m - 1) as f64, n, 1.0);
    lhs.relative_gap(rhs)
}

/// Mean of the beta-binomial-type law `C(m,s)(x)_s(y)_{m−s}/(x+y)_m`
/// against `m x / (x+y)`.
pub fn mean_identity_gap(x: f64, y: f64, m: usize) -> f64 {
    let denom = rising_factorial(x + y, m, 1.0);
    let terms: Vec<_> = (0..=m)
        .map(|s| {
            SignedLogValue::from_f64(s as f64 * binomial(m, s))
                * rising_factorial(x, s, 1.0)
                * rising_factorial(y, m - s, 1.0)
                / denom
        })
        .collect();
    rel(log_sum(&terms).to_f64(), m as f64 * x / (x + y))
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn rising_exact(x: &BigRational, n: usize) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, i| acc * (x + BigRational::from_integer(BigInt::from(i))))
}

/// Exact `S(n, k; α, γ)`, `k = 0..=n`, as the connection coefficients of
/// `(αy − γ)_{n↑} = Σ_k S(n,k;α,γ) α^k (y)_{k↑}`: Newton divided differences
/// of the left side at `y = 0, −1, …, −n`, divided by `α^k`. Needs `α ≠ 0`.
pub fn exact_noncentral_row(alpha: &BigRational, gamma: &BigRational, n: usize) -> Vec<BigRational> {
    assert!(!alpha.is_zero());
    let nodes: Vec<BigRational> = (0..=n)
        .map(|i| -BigRational::from_integer(BigInt::from(i)))
        .collect();
    let mut diffs: Vec<BigRational> = nodes
        .iter()
        .map(|y| rising_exact(&(alpha * y - gamma), n))
        .collect();
    let mut coeffs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        coeffs.push(diffs[0].clone());
        diffs = (0..diffs.len() - 1)
            .map(|i| (&diffs[i + 1] - &diffs[i]) / (&nodes[i + k + 1] - &nodes[i]))
            .collect();
    }
    let mut power = BigRational::one();
    coeffs
        .into_iter()
        .map(|c| {
            let v = c / &power;
            power = &power * alpha;
            v
        })
        .collect()
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
