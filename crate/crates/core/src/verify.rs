//! Named invariant suites. Each suite evaluates a family of identities and
//! returns one [`Check`] per identity with its worst residual.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::crp::{
    check_conjecture8, deletion_conditional_eppf, joint_kstar_s, new_sizes_marginal, pmf_kstar,
    pmf_s, prob_all_new, prob_all_old, prob_avoid_tables, AvoidanceTerms, GroupOutcome,
};
use crate::error::{Error, Result};
use crate::gibbs::{validate_backward_recursion, GibbsModel, PartitionState, TABLE_RECURSION_TOL};
use crate::numerics::{binomial, log_sum, rising_factorial, CompensatedSum, SignedLogValue};
use crate::oracle::{
    brute_group_law, enumerate_compositions, enumerate_partitions, total_probability,
    MAX_GROUP_M, MAX_GROUP_N,
};
use crate::pmf::Pmf;
use crate::stirling::{bell_polynomial, gibbs_block_weights, StirlingTable};

pub const NORMALIZATION_TOL: f64 = 1e-10;
pub const CONNECTION_TOL: f64 = 1e-9;
pub const BELL_TOL: f64 = 1e-10;
pub const GROUP_TOL: f64 = 1e-12;
pub const CONJECTURE_TOL: f64 = 1e-10;
pub const DELETION_TOL: f64 = 1e-12;

/// One identity and the worst residual observed for it. A check without a
/// tolerance is informational and always passes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: Option<f64>,
    pub cases: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        match self.tol {
            Some(tol) => self.residual <= tol,
            None => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = match (c.tol, c.passed()) {
                (None, _) => "info",
                (Some(_), true) => "pass",
                (Some(_), false) => "FAIL",
            };
            write!(f, "[{verdict}] {}: residual {:.3e}", c.name, c.residual)?;
            if let Some(tol) = c.tol {
                write!(f, " (tol {tol:.0e})")?;
            }
            writeln!(f, " over {} cases", c.cases)?;
        }
        write!(
            f,
            "suite {}: {}",
            self.suite,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Normalization,
    Stirling,
    Group,
    Conjecture8,
    Deletion,
    Avoidance,
    Recursion,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Normalization,
        Suite::Stirling,
        Suite::Group,
        Suite::Conjecture8,
        Suite::Deletion,
        Suite::Avoidance,
        Suite::Recursion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Normalization => "normalization",
            Suite::Stirling => "stirling",
            Suite::Group => "group",
            Suite::Conjecture8 => "conjecture8",
            Suite::Deletion => "deletion",
            Suite::Avoidance => "avoidance",
            Suite::Recursion => "recursion",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let alias = match s.as_str() {
            "stirling-identities" => "stirling",
            "group-vs-sequential" => "group",
            other => other,
        };
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == alias)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown suite '{s}', expected one of: {}",
                    Suite::ALL.map(Suite::name).join(", ")
                ))
            })
    }
}

/// Scale parameters shared by all suites; each suite reads what it needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteScale {
    /// Largest state size `n` (partition enumeration, group states).
    pub n: usize,
    /// Largest row for table-like checks.
    pub n_max: usize,
    /// Largest group size.
    pub m: usize,
}

impl Default for SuiteScale {
    fn default() -> Self {
        Self {
            n: 8,
            n_max: 25,
            m: 4,
        }
    }
}

pub fn run(suite: Suite, model: &GibbsModel, scale: SuiteScale) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Normalization => normalization(model, scale.n)?,
        Suite::Stirling => stirling_identities(model.alpha(), scale.n_max)?,
        Suite::Group => group_vs_sequential(model, scale.n.min(5), scale.m.min(4))?,
        Suite::Conjecture8 => conjecture8(model, scale.n.max(1), scale.m)?,
        Suite::Deletion => deletion(model, scale.n.min(6).max(1))?,
        Suite::Avoidance => avoidance(model, scale.n.min(5), scale.m.min(4))?,
        Suite::Recursion => vec![recursion(model, scale.n_max)],
    };
    Ok(SuiteReport { suite, checks })
}

/// Tracks the worst residual over many cases.
#[derive(Debug)]
struct Worst {
    name: String,
    tol: Option<f64>,
    residual: f64,
    cases: usize,
}

impl Worst {
    fn new(name: impl Into<String>, tol: Option<f64>) -> Self {
        Self {
            name: name.into(),
            tol,
            residual: 0.0,
            cases: 0,
        }
    }

    fn see(&mut self, residual: f64) {
        self.cases += 1;
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.residual = self.residual.max(residual);
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            residual: self.residual,
            tol: self.tol,
            cases: self.cases,
        }
    }
}

fn rel(a: SignedLogValue, b: SignedLogValue) -> f64 {
    a.relative_gap(b)
}

/// Every ordered block-size vector with total `n`.
pub fn states_of_size(n: usize) -> impl Iterator<Item = PartitionState> {
    (1..=n.max(1))
        .filter(move |_| n > 0)
        .flat_map(move |k| enumerate_compositions(n, k, false))
        .map(|c| PartitionState::new(c).expect("compositions are positive"))
}

/// EPPF sums to one over the set partitions of `[i]`, `i = 1..=n`.
pub fn normalization(model: &GibbsModel, n: usize) -> Result<Vec<Check>> {
    let mut w = Worst::new(format!("eppf sums to 1 for n <= {n}"), Some(NORMALIZATION_TOL));
    for i in 1..=n {
        w.see((total_probability(model, i)? - 1.0).abs());
    }
    Ok(vec![w.finish()])
}

/// Non-central numbers from the connection recurrence
/// `S(n+1,k) = S(n,k−1) + (n − kα − γ) S(n,k)`, independent of the
/// convolution used by [`StirlingTable::noncentral`].
fn noncentral_by_recurrence(alpha: f64, gamma: f64, n_max: usize) -> Vec<Vec<SignedLogValue>> {
    let mut rows = vec![vec![SignedLogValue::ONE]];
    for n in 0..n_max {
        let prev = &rows[n];
        let next = (0..=n + 1)
            .map(|k| {
                let carried = if k > 0 { prev[k - 1] } else { SignedLogValue::ZERO };
                let stayed = if k <= n {
                    SignedLogValue::from_f64(n as f64 - k as f64 * alpha - gamma) * prev[k]
                } else {
                    SignedLogValue::ZERO
                };
                carried + stayed
            })
            .collect();
        rows.push(next);
    }
    rows
}

/// Connection identities, Bell-polynomial agreement and the non-central
/// identities at one `α`.
pub fn stirling_identities(alpha: f64, n_max: usize) -> Result<Vec<Check>> {
    let table = StirlingTable::new(alpha, n_max)?;

    let mut conn = Worst::new(
        format!("(x)_n = sum_k S(n,k) (x)_(k,alpha), n <= {n_max}"),
        Some(CONNECTION_TOL),
    );
    for &x in &[0.3, 1.0, 2.7] {
        for n in 0..=n_max {
            let terms: Vec<_> = table
                .row(n)?
                .iter()
                .enumerate()
                .map(|(k, s)| *s * rising_factorial(x, k, alpha))
                .collect();
            conn.see(rel(rising_factorial(x, n, 1.0), log_sum(&terms)));
        }
    }

    let bell_n = n_max.min(12);
    let mut bell = Worst::new(
        format!("recurrence = Bell polynomial, n <= {bell_n}"),
        Some(BELL_TOL),
    );
    let weights = gibbs_block_weights(alpha, bell_n.max(1));
    for n in 1..=bell_n {
        for k in 1..=n {
            bell.see(rel(table.get(n, k)?, bell_polynomial(n, k, &weights)?));
        }
    }

    let nc_n = n_max.min(15);
    let mut nc_rising = Worst::new(
        format!("(y alpha - gamma)_n = sum_k S(n,k;gamma) (y alpha)_(k,alpha), n <= {nc_n}"),
        Some(CONNECTION_TOL),
    );
    let mut nc_scaled = Worst::new(
        format!("(y alpha - gamma)_n = sum_k S(n,k;gamma) alpha^k (y)_k, n <= {nc_n}"),
        Some(CONNECTION_TOL),
    );
    let mut nc_agree = Worst::new(
        format!("convolution = connection recurrence (row-scaled), n <= {nc_n}"),
        Some(CONNECTION_TOL),
    );
    let alpha_slv = SignedLogValue::from_f64(alpha);
    for &gamma in &[-3.0, -0.7, 0.4] {
        let rec = noncentral_by_recurrence(alpha, gamma, nc_n);
        for n in 0..=nc_n {
            let conv = table.noncentral_row(gamma, n)?;
            // entries can vanish exactly for γ > 0, so compare on the row's scale
            let scale = conv.iter().map(|v| v.abs().to_f64()).fold(0.0, f64::max);
            for (a, b) in conv.iter().zip(&rec[n]) {
                nc_agree.see((a.to_f64() - b.to_f64()).abs() / scale);
            }
            for &y in &[1.0, 2.5] {
                let lhs = rising_factorial(y * alpha - gamma, n, 1.0);
                let by_rising: Vec<_> = conv
                    .iter()
                    .enumerate()
                    .map(|(k, s)| *s * rising_factorial(y * alpha, k, alpha))
                    .collect();
                nc_rising.see(rel(lhs, log_sum(&by_rising)));
                let by_scaled: Vec<_> = conv
                    .iter()
                    .enumerate()
                    .map(|(k, s)| *s * alpha_slv.powi(k as u32) * rising_factorial(y, k, 1.0))
                    .collect();
                nc_scaled.see(rel(lhs, log_sum(&by_scaled)));
            }
        }
    }

    Ok(vec![
        conn.finish(),
        bell.finish(),
        nc_rising.finish(),
        nc_scaled.finish(),
        nc_agree.finish(),
    ])
}

/// Number of set partitions of `[s]` whose blocks, in order of their least
/// element, have sizes `sizes`.
fn ordered_partition_count(sizes: &[usize]) -> f64 {
    let mut remaining: usize = sizes.iter().sum();
    let mut count = 1.0;
    for &sj in sizes {
        count *= binomial(remaining - 1, sj - 1);
        remaining -= sj;
    }
    count
}

/// Every closed-form group law against the sequential enumeration, for all
/// states with `1 ≤ n ≤ n_max` (plus the empty state) and `0 ≤ m ≤ m_max`.
pub fn group_vs_sequential(model: &GibbsModel, n_max: usize, m_max: usize) -> Result<Vec<Check>> {
    guard_group(n_max, m_max)?;
    let tol = Some(GROUP_TOL);
    let mut joint = Worst::new("joint (K*, S)", tol);
    let mut s_law = Worst::new("law of S", tol);
    let mut k_law = Worst::new("law of K*", tol);
    let mut sizes = Worst::new("new block sizes marginal", tol);
    let mut all_new = Worst::new("all arrivals at new tables", tol);
    let mut all_old = Worst::new("all arrivals at old tables", tol);
    let mut avoid = Worst::new("table avoidance", tol);
    let mut total = Worst::new("group law total mass", tol);

    let states = std::iter::once(PartitionState::empty()).chain((1..=n_max).flat_map(states_of_size));
    for state in states {
        for m in 0..=m_max {
            if state.is_empty() && m == 0 {
                continue;
            }
            let brute = brute_group_law(model, &state, m)?;
            total.see((brute.sum() - 1.0).abs());
            joint.see(joint_kstar_s(model, &state, m)?.max_abs_diff(&brute.marginal(|o| (o.kstar(), o.s()))));
            s_law.see(pmf_s(model, &state, m)?.max_abs_diff(&brute.marginal(GroupOutcome::s)));
            k_law.see(pmf_kstar(model, &state, m)?.max_abs_diff(&brute.marginal(GroupOutcome::kstar)));

            let by_sizes: Pmf<Vec<usize>> = brute.marginal(|o| o.new_block_sizes().to_vec());
            for (new, p) in by_sizes.iter() {
                let exact = if new.is_empty() {
                    prob_all_old(model, &state, m)?
                } else {
                    new_sizes_marginal(model, &state, m, new)? * ordered_partition_count(new)
                };
                sizes.see((exact - p).abs());
            }

            let brute_sum = |pred: &dyn Fn(&GroupOutcome) -> bool| {
                compensated(brute.iter().filter(|(o, _)| pred(o)).map(|(_, p)| p))
            };
            if m > 0 {
                all_new.see((prob_all_new(model, &state, m)? - brute_sum(&|o| o.s() == m)).abs());
            }
            all_old.see((prob_all_old(model, &state, m)? - brute_sum(&|o| o.s() == 0)).abs());
            for r in 0..=state.k() {
                let untouched = |o: &GroupOutcome| o.old_increments()[r..].iter().all(|&x| x == 0);
                let exact = prob_avoid_tables(model, &state, m, r, AvoidanceTerms::All)?;
                avoid.see((exact - brute_sum(&untouched)).abs());
                let exact_new = prob_avoid_tables(model, &state, m, r, AvoidanceTerms::NewTablesOnly)?;
                avoid.see((exact_new - brute_sum(&|o| untouched(o) && o.kstar() > 0)).abs());
            }
        }
    }
    Ok([joint, s_law, k_law, sizes, all_new, all_old, avoid, total]
        .into_iter()
        .map(Worst::finish)
        .collect())
}

fn compensated(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    values.for_each(|v| acc.add(v));
    acc.value()
}

fn guard_group(n_max: usize, m_max: usize) -> Result<()> {
    if n_max + m_max > MAX_GROUP_N + MAX_GROUP_M || m_max > MAX_GROUP_M || n_max > MAX_GROUP_N {
        return Err(Error::SizeGuard {
            what: "group enumeration n + m",
            limit: MAX_GROUP_N + MAX_GROUP_M,
            got: n_max + m_max,
        });
    }
    Ok(())
}

/// Avoidance probabilities: reductions at `r = k` and `r = 0`, and agreement
/// with enumeration.
pub fn avoidance(model: &GibbsModel, n_max: usize, m_max: usize) -> Result<Vec<Check>> {
    guard_group(n_max, m_max)?;
    let tol = Some(GROUP_TOL);
    let mut keep_all = Worst::new("retaining every table gives 1", tol);
    let mut keep_none = Worst::new("retaining no table gives all-new", tol);
    let mut brute_w = Worst::new("avoidance vs enumeration", tol);
    for state in (1..=n_max).flat_map(states_of_size) {
        for m in 1..=m_max {
            let full = prob_avoid_tables(model, &state, m, state.k(), AvoidanceTerms::All)?;
            keep_all.see((full - 1.0).abs());
            let none = prob_avoid_tables(model, &state, m, 0, AvoidanceTerms::All)?;
            keep_none.see((none - prob_all_new(model, &state, m)?).abs());
            let brute = brute_group_law(model, &state, m)?;
            for r in 0..=state.k() {
                let mass = compensated(
                    brute
                        .iter()
                        .filter(|(o, _)| o.old_increments()[r..].iter().all(|&x| x == 0))
                        .map(|(_, p)| p),
                );
                let exact = prob_avoid_tables(model, &state, m, r, AvoidanceTerms::All)?;
                brute_w.see((exact - mass).abs());
            }
        }
    }
    Ok(vec![keep_all.finish(), keep_none.finish(), brute_w.finish()])
}

/// States used by scaled checks: one block, all singletons, and a mixed
/// configuration.
pub fn probe_states(n: usize) -> Vec<PartitionState> {
    if n == 0 {
        return vec![PartitionState::empty()];
    }
    let mut out = vec![
        PartitionState::new(vec![n]).expect("positive"),
        PartitionState::new(vec![1; n]).expect("positive"),
    ];
    if n >= 3 {
        let mut mixed = Vec::new();
        let mut left = n;
        let mut size = 1;
        while left > 0 {
            let take = size.min(left);
            mixed.push(take);
            left -= take;
            size = size % 4 + 1;
        }
        out.push(PartitionState::new(mixed).expect("positive"));
    }
    out
}

/// Mean identity `E(S) = m V(n+1,k+1)/V(n,k)` over probe states of size
/// `1..=n_max` and groups `1..=m_max`, plus informational gaps between the
/// alternative closed forms for the law of `S`.
pub fn conjecture8(model: &GibbsModel, n_max: usize, m_max: usize) -> Result<Vec<Check>> {
    let mut mean = Worst::new(
        format!("E(S) = m V(n+1,k+1)/V(n,k), n <= {n_max}, m <= {m_max}"),
        Some(CONJECTURE_TOL),
    );
    let mut rising = Worst::new("law of S: Stirling form vs rising form", None);
    let mut weighted = Worst::new("law of S: Stirling form vs weighted form", None);
    for n in 1..=n_max {
        for state in probe_states(n) {
            for m in 1..=m_max {
                if let Some(limit) = model.max_n() {
                    if n + m > limit {
                        continue;
                    }
                }
                let r = check_conjecture8(model, &state, m, CONJECTURE_TOL)?;
                mean.see(r.rel_gap);
                rising.see(r.form_gaps.stirling_vs_rising);
                weighted.see(r.form_gaps.stirling_vs_weighted);
            }
        }
    }
    Ok(vec![mean.finish(), rising.finish(), weighted.finish()])
}

/// The deletion EPPF normalizes over set partitions of `[s]` for
/// `s ≤ s_max` and ignores how the old-table customers are spread.
pub fn deletion(model: &GibbsModel, s_max: usize) -> Result<Vec<Check>> {
    let mut norm = Worst::new(
        format!("deletion eppf sums to 1 for s <= {s_max}"),
        Some(DELETION_TOL),
    );
    let mut invariant = Worst::new("deletion eppf ignores old increments", Some(DELETION_TOL));
    let mut symmetric = Worst::new("deletion eppf is symmetric in block sizes", Some(DELETION_TOL));
    let extra = 2;
    for state in [vec![1], vec![2, 1], vec![1, 3, 2]] {
        let state = PartitionState::new(state)?;
        for s in 1..=s_max {
            let configs: Vec<Vec<usize>> = enumerate_compositions(extra, state.k(), true).collect();
            let mut acc = CompensatedSum::new();
            for p in enumerate_partitions(s)? {
                let sizes = p.block_sizes();
                let base = deletion_conditional_eppf(model, &state, &configs[0], &sizes)?;
                acc.add(base);
                for inc in &configs[1..] {
                    let other = deletion_conditional_eppf(model, &state, inc, &sizes)?;
                    invariant.see((other - base).abs());
                }
                let mut reversed = sizes.clone();
                reversed.reverse();
                let flipped = deletion_conditional_eppf(model, &state, &configs[0], &reversed)?;
                symmetric.see((flipped - base).abs());
            }
            norm.see((acc.value() - 1.0).abs());
        }
    }
    Ok(vec![norm.finish(), invariant.finish(), symmetric.finish()])
}

/// Backward recursion of the weights up to `n_max` (or the table's extent).
pub fn recursion(model: &GibbsModel, n_max: usize) -> Check {
    let report = validate_backward_recursion(model, n_max, TABLE_RECURSION_TOL);
    let mut name = format!("V(n,k) = (n - k alpha) V(n+1,k) + V(n+1,k+1), n <= {}", report.n_max);
    if let Some((n, k)) = report.first_failure {
        name.push_str(&format!(", first failure at (n={n}, k={k})"));
    }
    Check {
        name,
        residual: report.max_rel_residual,
        tol: Some(report.tol),
        cases: report.checked,
    }
}
