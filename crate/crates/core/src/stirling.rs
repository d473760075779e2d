//! Partial Bell polynomials and generalized Stirling numbers.
//!
//! `S(n, k; α)` denotes the connection coefficients in
//! `(x)_{n↑1} = Σ_k S(n, k; α) (x)_{k↑α}`. They are the partial Bell
//! polynomials `B_{n,k}` evaluated at the weights `w_j = (1-α)_{j-1↑}` and are
//! tabulated by the triangular recurrence
//!
//! ```text
//! S(n+1, k) = S(n, k-1) + (n - kα) S(n, k),    S(0, 0) = 1.
//! ```
//!
//! The non-central numbers `S(n, k; α, γ)` are obtained by convolving the
//! central ones with rising factorials of `-γ`.

use crate::error::{Error, Result};
use crate::numerics::{ln_binomial, log_sum, rising_factorial, SignedLogValue};

/// Triangular cache of `S(n, k; α)` for `0 ≤ k ≤ n ≤ n_max`.
#[derive(Clone, Debug)]
pub struct StirlingTable {
    alpha: f64,
    n_max: usize,
    rows: Vec<Vec<SignedLogValue>>,
}

impl StirlingTable {
    /// Fills the table up to `n_max` eagerly. Requires a finite `α < 1`.
    pub fn new(alpha: f64, n_max: usize) -> Result<Self> {
        if !alpha.is_finite() || alpha >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Stirling table needs finite alpha < 1, got {alpha}"
            )));
        }
        let mut rows: Vec<Vec<SignedLogValue>> = Vec::with_capacity(n_max + 1);
        rows.push(vec![SignedLogValue::ONE]);
        for n in 0..n_max {
            let prev = &rows[n];
            let mut next = vec![SignedLogValue::ZERO; n + 2];
            for (k, slot) in next.iter_mut().enumerate().skip(1) {
                let carried = prev[k - 1];
                let stayed = if k <= n {
                    // n - kα > 0 whenever α < 1 and k ≤ n
                    SignedLogValue::from_f64(n as f64 - k as f64 * alpha) * prev[k]
                } else {
                    SignedLogValue::ZERO
                };
                *slot = carried + stayed;
            }
            rows.push(next);
        }
        Ok(Self { alpha, n_max, rows })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `S(n, k; α)`; zero for `k > n`.
    pub fn get(&self, n: usize, k: usize) -> Result<SignedLogValue> {
        let row = self.row(n)?;
        Ok(row.get(k).copied().unwrap_or(SignedLogValue::ZERO))
    }

    /// Row `n`, holding `S(n, 0..=n; α)`.
    pub fn row(&self, n: usize) -> Result<&[SignedLogValue]> {
        self.rows.get(n).map(Vec::as_slice).ok_or(Error::OutOfTable {
            n,
            n_max: self.n_max,
        })
    }

    /// Non-central number
    /// `S(n, k; α, γ) = Σ_{s=k}^{n} C(n, s) S(s, k; α) (-γ)_{n-s↑1}`.
    pub fn noncentral(&self, gamma: f64, n: usize, k: usize) -> Result<SignedLogValue> {
        if k > n {
            return Err(Error::InvalidIndex {
                n,
                k,
                reason: "k > n",
            });
        }
        if n > self.n_max {
            return Err(Error::OutOfTable {
                n,
                n_max: self.n_max,
            });
        }
        let terms: Vec<SignedLogValue> = (k..=n)
            .map(|s| {
                SignedLogValue::from_ln(ln_binomial(n, s))
                    * self.rows[s][k]
                    * rising_factorial(-gamma, n - s, 1.0)
            })
            .collect();
        Ok(log_sum(&terms))
    }

    /// `S(n, 0..=n; α, γ)`.
    pub fn noncentral_row(&self, gamma: f64, n: usize) -> Result<Vec<SignedLogValue>> {
        (0..=n).map(|k| self.noncentral(gamma, n, k)).collect()
    }
}

/// `S(n, k; α)` looked up in a prebuilt table.
pub fn stirling(table: &StirlingTable, n: usize, k: usize) -> Result<SignedLogValue> {
    table.get(n, k)
}

/// Non-central generalized Stirling number `S(n, k; α, γ)`.
pub fn noncentral_stirling(alpha: f64, gamma: f64, n: usize, k: usize) -> Result<SignedLogValue> {
    if k > n {
        return Err(Error::InvalidIndex {
            n,
            k,
            reason: "k > n",
        });
    }
    StirlingTable::new(alpha, n)?.noncentral(gamma, n, k)
}

/// Generalized factorial coefficient `C(n, k; α) = α^k S(n, k; α)`, the
/// connection coefficients of `(αy)_{n↑} = Σ_k C(n, k; α) (y)_{k↑}`.
pub fn factorial_coefficient(alpha: f64, n: usize, k: usize) -> Result<SignedLogValue> {
    if alpha == 0.0 {
        return Err(Error::InvalidParameter(
            "factorial coefficients are undefined at alpha = 0".into(),
        ));
    }
    let s = StirlingTable::new(alpha, n)?.get(n, k)?;
    Ok(SignedLogValue::from_f64(alpha).powi(k as u32) * s)
}

/// Partial Bell polynomial `B_{n,k}(w_1, w_2, …)`; `w[0]` is `w_1`.
///
/// Evaluated with the first-block recurrence
/// `B_{n,k} = Σ_i C(n-1, i-1) w_i B_{n-i,k-1}` (the block holding element 1
/// has size `i`).
pub fn bell_polynomial(n: usize, k: usize, w: &[f64]) -> Result<SignedLogValue> {
    if k == 0 || k > n {
        return Err(Error::InvalidIndex {
            n,
            k,
            reason: "need 1 <= k <= n",
        });
    }
    if w.len() < n - k + 1 {
        return Err(Error::InvalidParameter(format!(
            "B_{{{n},{k}}} needs {} weights, got {}",
            n - k + 1,
            w.len()
        )));
    }
    let w: Vec<SignedLogValue> = w.iter().map(|&x| SignedLogValue::from_f64(x)).collect();
    // table[j][i] = B_{i,j} for 0 ≤ j ≤ k, 0 ≤ i ≤ n
    let mut table = vec![vec![SignedLogValue::ZERO; n + 1]; k + 1];
    table[0][0] = SignedLogValue::ONE;
    for j in 1..=k {
        for i in j..=n {
            let terms: Vec<SignedLogValue> = (1..=i - j + 1)
                .map(|size| {
                    SignedLogValue::from_ln(ln_binomial(i - 1, size - 1))
                        * w[size - 1]
                        * table[j - 1][i - size]
                })
                .collect();
            table[j][i] = log_sum(&terms);
        }
    }
    Ok(table[k][n])
}

/// Weights `(1-α)_{j-1↑}` for `j = 1..=len`.
pub fn gibbs_block_weights(alpha: f64, len: usize) -> Vec<f64> {
    (1..=len)
        .map(|j| rising_factorial(1.0 - alpha, j - 1, 1.0).to_f64())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ln_factorial;
    use crate::oracle::{enumerate_compositions, enumerate_partitions};

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    /// Set-partition form: Σ over partitions of [n] with k blocks of ∏ w_{|A|}.
    fn bell_by_partitions(n: usize, k: usize, w: &[f64]) -> f64 {
        enumerate_partitions(n)
            .unwrap()
            .filter(|p| p.num_blocks() == k)
            .map(|p| p.block_sizes().iter().map(|&b| w[b - 1]).product::<f64>())
            .sum()
    }

    /// Composition form: (n!/k!) Σ over compositions of ∏ w_{n_i}/n_i!.
    fn bell_by_compositions(n: usize, k: usize, w: &[f64]) -> f64 {
        let scale = (ln_factorial(n) - ln_factorial(k)).exp();
        let inner: f64 = enumerate_compositions(n, k, false)
            .map(|c| {
                c.iter()
                    .map(|&ni| w[ni - 1] / ln_factorial(ni).exp())
                    .product::<f64>()
            })
            .sum();
        scale * inner
    }

    /// Unsigned Stirling numbers of the first kind, exact.
    fn first_kind(n_max: usize) -> Vec<Vec<u128>> {
        let mut c = vec![vec![0u128; n_max + 1]; n_max + 1];
        c[0][0] = 1;
        for n in 0..n_max {
            for k in 1..=n + 1 {
                c[n + 1][k] = c[n][k - 1] + n as u128 * c[n][k];
            }
        }
        c
    }

    #[test]
    fn bell_polynomial_examples() {
        let w = gibbs_block_weights(0.5, 3);
        let b = bell_polynomial(3, 2, &w).unwrap().to_f64();
        assert!(rel(b, 1.5) < 1e-15);
        assert!(rel(bell_by_partitions(3, 2, &w), 1.5) < 1e-15);

        let w = [1.0, 7.0, -3.0, 11.0];
        for n in 1..=4 {
            assert!(rel(bell_polynomial(n, n, &w).unwrap().to_f64(), 1.0) < 1e-15);
        }

        let w: Vec<f64> = (1..=4).map(|j| ln_factorial(j - 1).exp()).collect();
        assert!(rel(bell_polynomial(4, 1, &w).unwrap().to_f64(), 6.0) < 1e-15);
    }

    #[test]
    fn bell_polynomial_rejects_bad_indices() {
        let w = [1.0; 5];
        assert!(bell_polynomial(3, 4, &w).is_err());
        assert!(bell_polynomial(3, 0, &w).is_err());
        assert!(bell_polynomial(5, 1, &w[..2]).is_err());
    }

    #[test]
    fn bell_polynomial_three_routes_agree() {
        let w = [0.7, -1.3, 2.2, 0.4, -0.9, 1.1, 3.0];
        for n in 1..=7 {
            for k in 1..=n {
                let fast = bell_polynomial(n, k, &w).unwrap().to_f64();
                let parts = bell_by_partitions(n, k, &w);
                let comps = bell_by_compositions(n, k, &w);
                let scale = fast.abs().max(1.0);
                assert!((fast - parts).abs() <= 1e-12 * scale, "n={n} k={k}");
                assert!((fast - comps).abs() <= 1e-12 * scale, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn stirling_examples() {
        let t = StirlingTable::new(0.5, 12).unwrap();
        for n in 0..=12 {
            assert_eq!(stirling(&t, n, n).unwrap(), SignedLogValue::ONE);
        }
        assert!(rel(stirling(&t, 3, 2).unwrap().to_f64(), 1.5) < 1e-15);
        let t0 = StirlingTable::new(0.0, 5).unwrap();
        assert!(rel(stirling(&t0, 5, 2).unwrap().to_f64(), 50.0) < 1e-14);
        assert!(matches!(t.get(13, 1), Err(Error::OutOfTable { .. })));
        assert!(t.get(3, 5).unwrap().is_zero());
    }

    #[test]
    fn table_boundary_invariants() {
        for &alpha in &[-2.0, -0.3, 0.0, 0.25, 0.9] {
            let t = StirlingTable::new(alpha, 20).unwrap();
            assert_eq!(t.get(0, 0).unwrap(), SignedLogValue::ONE);
            for n in 1..=20 {
                assert!(t.get(n, 0).unwrap().is_zero());
                let single = rising_factorial(1.0 - alpha, n - 1, 1.0);
                assert!(t.get(n, 1).unwrap().relative_gap(single) < 1e-13);
                for k in 1..=n {
                    assert!(t.get(n, k).unwrap().is_positive(), "alpha={alpha} n={n} k={k}");
                }
            }
        }
        assert!(StirlingTable::new(1.0, 3).is_err());
        assert!(StirlingTable::new(f64::NAN, 3).is_err());
    }

    #[test]
    fn recurrence_matches_bell_sum() {
        for &alpha in &[0.0, 0.1, 0.5, 0.9, -1.5] {
            let t = StirlingTable::new(alpha, 12).unwrap();
            let w = gibbs_block_weights(alpha, 12);
            for n in 1..=12 {
                for k in 1..=n {
                    let bell = bell_polynomial(n, k, &w).unwrap();
                    assert!(t.get(n, k).unwrap().relative_gap(bell) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn alpha_zero_is_first_kind() {
        let exact = first_kind(12);
        let t = StirlingTable::new(0.0, 12).unwrap();
        for n in 0..=12 {
            for k in 0..=n {
                let v = t.get(n, k).unwrap().to_f64().round() as u128;
                assert_eq!(v, exact[n][k], "n={n} k={k}");
            }
        }
    }

    #[test]
    fn noncentral_examples() {
        let t = StirlingTable::new(0.5, 10).unwrap();
        for n in 0..=10 {
            for k in 0..=n {
                let central = t.get(n, k).unwrap();
                let nc = t.noncentral(0.0, n, k).unwrap();
                assert!(central.relative_gap(nc) < 1e-14);
            }
            for &g in &[-2.0, 0.3, 1.7] {
                assert!(t.noncentral(g, n, n).unwrap().relative_gap(SignedLogValue::ONE) < 1e-14);
            }
        }
        // Newton divided differences of (αy - γ)_{3↑} at y = 0, -1: (13.125 - 6) / 0.5
        let v = noncentral_stirling(0.5, -1.5, 3, 1).unwrap().to_f64();
        assert!(rel(v, 14.25) < 1e-14);
        assert!(noncentral_stirling(0.5, 1.0, 2, 3).is_err());
    }

    #[test]
    fn factorial_coefficient_examples() {
        for n in 0..6 {
            let c = factorial_coefficient(0.3, n, n).unwrap().to_f64();
            assert!(rel(c, 0.3f64.powi(n as i32)) < 1e-14);
        }
        assert!(rel(factorial_coefficient(0.5, 3, 2).unwrap().to_f64(), 0.375) < 1e-15);
        assert!(factorial_coefficient(0.0, 3, 2).is_err());

        // (αy)_{n↑} = Σ_k C(n, k; α) (y)_{k↑} at y = 2, n = 4
        let alpha = 0.35;
        let y = 2.0;
        let lhs = rising_factorial(alpha * y, 4, 1.0);
        let rhs = log_sum(
            &(0..=4)
                .map(|k| factorial_coefficient(alpha, 4, k).unwrap() * rising_factorial(y, k, 1.0))
                .collect::<Vec<_>>(),
        );
        assert!(lhs.relative_gap(rhs) < 1e-13);
    }

    #[test]
    fn connection_identity() {
        for &alpha in &[0.1, 0.5, 0.9] {
            let t = StirlingTable::new(alpha, 25).unwrap();
            for &x in &[0.3, 1.0, 2.7] {
                for n in 0..=25 {
                    let lhs = rising_factorial(x, n, 1.0);
                    let terms: Vec<_> = (0..=n)
                        .map(|k| t.get(n, k).unwrap() * rising_factorial(x, k, alpha))
                        .collect();
                    assert!(lhs.relative_gap(log_sum(&terms)) <= 1e-9);
                }
            }
        }
    }
}
