//! Gibbs-type EPPFs of type α.
//!
//! A model is a type parameter `α < 1` together with a triangular array of
//! weights `V(n, k)` solving the backward recursion
//! `V(n, k) = (n − kα) V(n+1, k) + V(n+1, k+1)` with `V(1, 1) = 1`. The EPPF is
//! `p(n_1, …, n_k) = V(n, k) ∏_j (1−α)_{n_j−1↑}`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numerics::{ln_rising, log_sum, SignedLogValue};
use crate::pmf::Pmf;

/// Tolerance used when a weight table is loaded.
pub const TABLE_RECURSION_TOL: f64 = 1e-9;

/// Block sizes of the seated customers, in order of appearance.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PartitionState {
    sizes: Vec<usize>,
}

impl PartitionState {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::InvalidState(format!(
                "block sizes must be positive, got {sizes:?}"
            )));
        }
        Ok(Self { sizes })
    }

    /// The state before the first customer arrives.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Seats one more customer: at block `j` (0-based) or at a new block.
    pub fn seat(&mut self, seat: Seat) {
        match seat {
            Seat::Existing(j) => self.sizes[j] += 1,
            Seat::New => self.sizes.push(1),
        }
    }

    pub fn seated(&self, seat: Seat) -> Self {
        let mut next = self.clone();
        next.seat(seat);
        next
    }
}

impl fmt::Display for PartitionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for PartitionState {
    type Err = Error;

    /// Parses a comma list such as `3,2,1`; the empty string is the empty state.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let sizes = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidState(format!("bad block size {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

/// Where the next customer sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Seat {
    /// Existing block, 0-based in order of appearance.
    Existing(usize),
    New,
}

/// Explicit triangular array of `ln V(n, k)`, `1 ≤ k ≤ n ≤ n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct VTable {
    alpha: f64,
    ln_v: Vec<Vec<f64>>,
}

impl VTable {
    /// Wraps rows of natural logs; row `i` holds `ln V(i+1, 1..=i+1)`.
    /// No validation beyond shape.
    pub fn from_ln_rows(alpha: f64, ln_v: Vec<Vec<f64>>) -> Result<Self> {
        if ln_v.is_empty() {
            return Err(Error::InvalidTable("table has no rows".into()));
        }
        for (i, row) in ln_v.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::InvalidTable(format!(
                    "row n={} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    i + 1
                )));
            }
        }
        Ok(Self { alpha, ln_v })
    }

    /// Rows of plain values. Non-positive entries map to `ln = -inf`/NaN and
    /// are caught by [`GibbsModel::from_table`].
    pub fn from_rows(alpha: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let ln = rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| SignedLogValue::from_f64(v).ln()).collect())
            .collect();
        Self::from_ln_rows(alpha, ln)
    }

    /// Solves the backward recursion downwards from a positive last row
    /// `V(n_max, 1..=n_max)` and rescales so that `V(1, 1) = 1`.
    pub fn by_backward_recursion(alpha: f64, last_row: &[f64]) -> Result<Self> {
        let n_max = last_row.len();
        if n_max == 0 {
            return Err(Error::InvalidTable("empty boundary row".into()));
        }
        if !(alpha < 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be < 1, got {alpha}")));
        }
        if last_row.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidTable("boundary row must be positive".into()));
        }
        let mut ln_v = vec![Vec::new(); n_max];
        ln_v[n_max - 1] = last_row.iter().map(|v| v.ln()).collect();
        for n in (1..n_max).rev() {
            let above = &ln_v[n];
            let row: Vec<f64> = (1..=n)
                .map(|k| {
                    let stay = SignedLogValue::from_f64(n as f64 - alpha * k as f64)
                        * SignedLogValue::from_ln(above[k - 1]);
                    (stay + SignedLogValue::from_ln(above[k])).ln()
                })
                .collect();
            ln_v[n - 1] = row;
        }
        let norm = ln_v[0][0];
        for row in &mut ln_v {
            for v in row.iter_mut() {
                *v -= norm;
            }
        }
        Self::from_ln_rows(alpha, ln_v)
    }

    /// Tabulates any model's weights up to `n_max`.
    pub fn from_model(model: &GibbsModel, n_max: usize) -> Result<Self> {
        let ln_v = (1..=n_max)
            .map(|n| (1..=n).map(|k| model.ln_v(n, k)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_ln_rows(model.alpha(), ln_v)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.ln_v.len()
    }

    pub fn ln_v(&self, n: usize, k: usize) -> Result<f64> {
        if n > self.n_max() {
            return Err(Error::OutOfTable {
                n,
                n_max: self.n_max(),
            });
        }
        Ok(match (n, k) {
            (0, 0) => 0.0,
            _ if k == 0 || k > n => f64::NEG_INFINITY,
            _ => self.ln_v[n - 1][k - 1],
        })
    }

    /// Multiplies one entry by `factor`; used to build negative controls.
    pub fn perturb(&mut self, n: usize, k: usize, factor: f64) {
        self.ln_v[n - 1][k - 1] += factor.ln();
    }

    /// Parses `{"alpha": a, "n_max": N, "V": [[V11], [V21, V22], …]}`. Entries
    /// may be decimal strings (any exponent range) or JSON numbers.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidTable(format!("malformed JSON: {e}")))?;
        let alpha = doc
            .get("alpha")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::InvalidTable("missing numeric \"alpha\"".into()))?;
        let n_max = doc
            .get("n_max")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidTable("missing integer \"n_max\"".into()))?
            as usize;
        let rows = doc
            .get("V")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidTable("missing array \"V\"".into()))?;
        if rows.len() != n_max {
            return Err(Error::InvalidTable(format!(
                "n_max = {n_max} but V has {} rows",
                rows.len()
            )));
        }
        let ln_v = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let row = row.as_array().ok_or_else(|| {
                    Error::InvalidTable(format!("row n={} is not an array", i + 1))
                })?;
                row.iter().map(parse_ln_entry).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_ln_rows(alpha, ln_v)
    }

    pub fn to_json_value(&self) -> Value {
        let rows: Vec<Vec<String>> = self
            .ln_v
            .iter()
            .map(|r| r.iter().map(|&l| format_ln_decimal(l)).collect())
            .collect();
        json!({ "alpha": self.alpha, "n_max": self.n_max(), "V": rows })
    }
}

fn parse_ln_entry(v: &Value) -> Result<f64> {
    match v {
        Value::String(s) => parse_ln_decimal(s),
        Value::Number(_) => {
            let x = v.as_f64().unwrap_or(f64::NAN);
            if x > 0.0 {
                Ok(x.ln())
            } else {
                Err(Error::InvalidTable(format!("non-positive weight {v}")))
            }
        }
        other => Err(Error::InvalidTable(format!("weight {other} is not a number"))),
    }
}

/// Natural log of a positive decimal literal whose exponent may lie far
/// outside the `f64` range, e.g. `"3.25e-812"`.
pub fn parse_ln_decimal(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::InvalidTable(format!("bad weight literal {s:?}"));
    let direct: f64 = s.parse().map_err(|_| bad())?;
    if direct.is_nan() || direct < 0.0 {
        return Err(Error::InvalidTable(format!("non-positive weight {s:?}")));
    }
    if direct.is_normal() {
        return Ok(direct.ln());
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => (s, "0"),
    };
    let mantissa: f64 = mantissa.parse().map_err(|_| bad())?;
    let exponent: i64 = exponent.parse().map_err(|_| bad())?;
    if !(mantissa > 0.0 && mantissa.is_finite()) {
        return Err(Error::InvalidTable(format!("non-positive weight {s:?}")));
    }
    Ok(mantissa.ln() + exponent as f64 * std::f64::consts::LN_10)
}

/// Decimal literal for `exp(ln)`, round-trip exact inside the `f64` range.
pub fn format_ln_decimal(ln: f64) -> String {
    if ln.abs() < 700.0 {
        return format!("{:e}", ln.exp());
    }
    let e10 = ln / std::f64::consts::LN_10;
    let exponent = e10.floor();
    let mantissa = 10f64.powf(e10 - exponent);
    format!("{mantissa:.16}e{}", exponent as i64)
}

/// Source of the `V(n, k)` weights.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    /// Two-parameter Poisson-Dirichlet, `V(n,k) = (θ+α)_{k−1↑α} / (θ+1)_{n−1↑}`.
    PitmanYor { theta: f64 },
    /// Pitman-Yor with `α = 0`.
    DirichletProcess { theta: f64 },
    ExplicitTable(VTable),
}

/// A Gibbs partition of type α.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsModel {
    alpha: f64,
    weights: Weights,
}

impl GibbsModel {
    /// Requires `α ∈ [0, 1)` and `θ > −α`.
    pub fn pitman_yor(alpha: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "Pitman-Yor needs alpha in [0, 1), got {alpha}"
            )));
        }
        if !(theta > -alpha && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Pitman-Yor needs theta > -alpha, got theta = {theta}"
            )));
        }
        Ok(Self {
            alpha,
            weights: Weights::PitmanYor { theta },
        })
    }

    pub fn dirichlet(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet process needs theta > 0, got {theta}"
            )));
        }
        Ok(Self {
            alpha: 0.0,
            weights: Weights::DirichletProcess { theta },
        })
    }

    /// Accepts a table only if it is positive, has `V(1,1) = 1` and satisfies
    /// the backward recursion within [`TABLE_RECURSION_TOL`].
    pub fn from_table(table: VTable) -> Result<Self> {
        if !(table.alpha < 1.0 && table.alpha.is_finite()) {
            return Err(Error::InvalidTable(format!(
                "alpha must be finite and < 1, got {}",
                table.alpha
            )));
        }
        let model = Self::from_table_unchecked(table);
        let n_max = model.max_n().unwrap_or(0);
        let report = validate_backward_recursion(&model, n_max, TABLE_RECURSION_TOL);
        if !report.passed() {
            return Err(Error::InvalidTable(report.to_string()));
        }
        Ok(model)
    }

    pub fn from_table_unchecked(table: VTable) -> Self {
        Self {
            alpha: table.alpha,
            weights: Weights::ExplicitTable(table),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Largest `n` for which weights are available; `None` for closed forms.
    pub fn max_n(&self) -> Option<usize> {
        match &self.weights {
            Weights::ExplicitTable(t) => Some(t.n_max()),
            _ => None,
        }
    }

    fn theta(&self) -> Option<f64> {
        match self.weights {
            Weights::PitmanYor { theta } | Weights::DirichletProcess { theta } => Some(theta),
            Weights::ExplicitTable(_) => None,
        }
    }

    /// `ln V(n, k)`. Extended by `V(0, 0) = 1` and `V(n, k) = 0` when `k = 0 < n`
    /// or `k > n`.
    pub fn ln_v(&self, n: usize, k: usize) -> Result<f64> {
        match (&self.weights, self.theta()) {
            (Weights::ExplicitTable(t), _) => t.ln_v(n, k),
            (_, Some(theta)) => Ok(match (n, k) {
                (0, 0) => 0.0,
                _ if k == 0 || k > n => f64::NEG_INFINITY,
                _ => {
                    ln_rising(theta + self.alpha, k - 1, self.alpha)
                        - ln_rising(theta + 1.0, n - 1, 1.0)
                }
            }),
            _ => unreachable!(),
        }
    }

    /// `ln (V(n2, k2) / V(n, k))`. Closed-form models use the telescoped
    /// products `(θ+kα)_{k2−k↑α} / (θ+n)_{n2−n↑}`.
    pub fn ln_v_ratio(&self, n: usize, k: usize, n2: usize, k2: usize) -> Result<f64> {
        if let Some(theta) = self.theta() {
            if n >= 1 && k >= 1 && k <= n && n2 >= n && k2 >= k {
                if k2 > n2 {
                    return Ok(f64::NEG_INFINITY);
                }
                return Ok(ln_rising(theta + k as f64 * self.alpha, k2 - k, self.alpha)
                    - ln_rising(theta + n as f64, n2 - n, 1.0));
            }
        }
        let base = self.ln_v(n, k)?;
        if base == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability);
        }
        Ok(self.ln_v(n2, k2)? - base)
    }

    pub fn v_weight(&self, n: usize, k: usize) -> Result<SignedLogValue> {
        Ok(SignedLogValue::from_ln(self.ln_v(n, k)?))
    }

    /// `ln (1−α)_{size−1↑}`.
    pub fn ln_block_weight(&self, size: usize) -> f64 {
        ln_rising(1.0 - self.alpha, size.saturating_sub(1), 1.0)
    }

    /// Fails early when a table model cannot reach `n`.
    pub fn check_reach(&self, n: usize) -> Result<()> {
        match self.max_n() {
            Some(n_max) if n > n_max => Err(Error::OutOfTable { n, n_max }),
            _ => Ok(()),
        }
    }

    pub fn describe(&self) -> Value {
        match &self.weights {
            Weights::PitmanYor { theta } => {
                json!({"kind": "py", "alpha": self.alpha, "theta": theta})
            }
            Weights::DirichletProcess { theta } => {
                json!({"kind": "dp", "alpha": 0.0, "theta": theta})
            }
            Weights::ExplicitTable(t) => {
                json!({"kind": "table", "alpha": self.alpha, "n_max": t.n_max()})
            }
        }
    }
}

/// `V(n, k)` for the given model.
pub fn v_weight(model: &GibbsModel, n: usize, k: usize) -> Result<SignedLogValue> {
    model.v_weight(n, k)
}

/// `ln p(n_1, …, n_k)`; the empty state has probability one.
pub fn ln_eppf(model: &GibbsModel, state: &PartitionState) -> Result<f64> {
    let blocks: f64 = state.sizes().iter().map(|&s| model.ln_block_weight(s)).sum();
    Ok(model.ln_v(state.n(), state.k())? + blocks)
}

/// `p(n_1, …, n_k) = V(n, k) ∏_j (1−α)_{n_j−1↑}`.
pub fn eppf(model: &GibbsModel, state: &PartitionState) -> Result<f64> {
    Ok(ln_eppf(model, state)?.exp())
}

/// Seating law of the next customer:
/// `p_j ∝ V(n+1,k)/V(n,k) · (n_j − α)`, `p_new = V(n+1,k+1)/V(n,k)`.
/// The first customer always opens a new table.
pub fn predictive(model: &GibbsModel, state: &PartitionState) -> Result<Pmf<Seat>> {
    let (n, k) = (state.n(), state.k());
    if n == 0 {
        return Ok(Pmf::degenerate(Seat::New));
    }
    let stay = model.ln_v_ratio(n, k, n + 1, k)?;
    let open = model.ln_v_ratio(n, k, n + 1, k + 1)?;
    let mut support: Vec<Seat> = (0..k).map(Seat::Existing).collect();
    let mut probs: Vec<f64> = state
        .sizes()
        .iter()
        .map(|&nj| (stay + (nj as f64 - model.alpha()).ln()).exp())
        .collect();
    support.push(Seat::New);
    probs.push(open.exp());
    Ok(Pmf::new(support, probs))
}

/// Outcome of a backward-recursion scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionReport {
    pub n_max: usize,
    pub tol: f64,
    pub checked: usize,
    pub max_rel_residual: f64,
    pub worst: Option<(usize, usize)>,
    /// First equation `(n, k)` over tolerance, scanning rows from `n_max − 1` down.
    pub first_failure: Option<(usize, usize)>,
    pub failures: usize,
}

impl RecursionReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, idx: (usize, usize), residual: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.checked += 1;
        if self.worst.is_none() || residual > self.max_rel_residual {
            self.max_rel_residual = residual;
            self.worst = Some(idx);
        }
        if residual > self.tol {
            self.failures += 1;
            self.first_failure.get_or_insert(idx);
        }
    }
}

impl fmt::Display for RecursionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "backward recursion up to n={}: {} equations, max relative residual {:.3e}",
            self.n_max, self.checked, self.max_rel_residual
        )?;
        if let Some((n, k)) = self.first_failure {
            write!(f, ", {} failures, first at (n={n}, k={k})", self.failures)?;
        }
        Ok(())
    }
}

/// Checks `V(n,k) = (n−αk)V(n+1,k) + V(n+1,k+1)` for `1 ≤ k ≤ n < n_max`,
/// plus `V(1,1) = 1` and positivity. Table models are scanned at most to
/// their own `n_max`.
pub fn validate_backward_recursion(model: &GibbsModel, n_max: usize, tol: f64) -> RecursionReport {
    let n_max = model.max_n().map_or(n_max, |m| m.min(n_max));
    let mut report = RecursionReport {
        n_max,
        tol,
        checked: 0,
        max_rel_residual: 0.0,
        worst: None,
        first_failure: None,
        failures: 0,
    };
    let ln = |n: usize, k: usize| model.ln_v(n, k).unwrap_or(f64::NAN);
    for n in (1..n_max).rev() {
        for k in 1..=n {
            let lhs = ln(n, k);
            let residual = if lhs.is_finite() {
                let rhs = log_sum(&[
                    SignedLogValue::from_f64(n as f64 - model.alpha() * k as f64)
                        * SignedLogValue::from_ln(ln(n + 1, k)),
                    SignedLogValue::from_ln(ln(n + 1, k + 1)),
                ]);
                if rhs.is_positive() {
                    (rhs.ln() - lhs).exp_m1().abs()
                } else {
                    f64::INFINITY
                }
            } else {
                f64::INFINITY
            };
            report.record((n, k), residual);
        }
    }
    if n_max >= 1 {
        let v11 = ln(1, 1);
        report.record((1, 1), v11.exp_m1().abs());
        let nonpositive = (1..=n_max)
            .flat_map(|n| (1..=n).map(move |k| (n, k)))
            .find(|&(n, k)| !ln(n, k).is_finite());
        if let Some(idx) = nonpositive {
            report.record(idx, f64::INFINITY);
        }
    }
    report
}
