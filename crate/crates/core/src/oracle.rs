//! Exhaustive small-case enumeration used as ground truth.
//!
//! Nothing here is fast; every engine is guarded by a hard size limit.

use std::collections::BTreeMap;

use crate::crp::GroupOutcome;
use crate::error::{Error, Result};
use crate::gibbs::{eppf, predictive, GibbsModel, PartitionState};
use crate::numerics::{binomial, CompensatedSum};
use crate::pmf::Pmf;

pub const MAX_PARTITION_N: usize = 13;
pub const MAX_GROUP_N: usize = 6;
pub const MAX_GROUP_M: usize = 5;

/// A set partition of `[n]` as a restricted-growth string: `assignment[i]` is
/// the block of element `i`, blocks numbered by their least element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    assignment: Vec<usize>,
}

impl SetPartition {
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let mut max_seen: Option<usize> = None;
        for &a in &assignment {
            let limit = max_seen.map_or(0, |m| m + 1);
            if a > limit {
                return Err(Error::InvalidState(format!(
                    "{assignment:?} is not a restricted-growth string"
                )));
            }
            max_seen = Some(max_seen.map_or(a, |m| m.max(a)));
        }
        Ok(Self { assignment })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_blocks(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    /// Block sizes in order of appearance.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_blocks()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Lexicographic restricted-growth enumeration of the partitions of `[n]`.
#[derive(Clone, Debug)]
pub struct SetPartitions {
    current: Vec<usize>,
    // prefix_max[i] = max(current[..=i])
    prefix_max: Vec<usize>,
    done: bool,
}

impl Iterator for SetPartitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let out = SetPartition {
            assignment: self.current.clone(),
        };
        // advance: bump the rightmost position that can still grow
        let n = self.current.len();
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] <= self.prefix_max[i - 1] {
                self.current[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.current[i]);
                for j in i + 1..n {
                    self.current[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                break;
            }
        }
        Some(out)
    }
}

/// Every set partition of `[n]`, once each, for `1 ≤ n ≤ 13`.
pub fn enumerate_partitions(n: usize) -> Result<SetPartitions> {
    if n == 0 || n > MAX_PARTITION_N {
        return Err(Error::SizeGuard {
            what: "partition size n",
            limit: MAX_PARTITION_N,
            got: n,
        });
    }
    Ok(SetPartitions {
        current: vec![0; n],
        prefix_max: vec![0; n],
        done: false,
    })
}

/// Ordered `k`-vectors summing to `n`, lexicographically increasing.
#[derive(Clone, Debug)]
pub struct Compositions {
    current: Vec<usize>,
    min_part: usize,
    done: bool,
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        // rightmost i < k-1 whose value can grow by taking from the tail
        let mut advanced = false;
        if k >= 2 {
            for i in (0..k - 1).rev() {
                let tail: usize = self.current[i + 1..].iter().sum();
                let tail_min = (k - 1 - i) * self.min_part;
                if tail > tail_min {
                    self.current[i] += 1;
                    let rest = tail - 1;
                    for j in i + 1..k - 1 {
                        self.current[j] = self.min_part;
                    }
                    self.current[k - 1] = rest - (k - 2 - i) * self.min_part;
                    advanced = true;
                    break;
                }
            }
        }
        self.done = !advanced;
        Some(out)
    }
}

/// All compositions of `n` into `k` parts; parts are `≥ 1` unless
/// `allow_zero`. `k = 0` yields the empty vector iff `n = 0`.
pub fn enumerate_compositions(n: usize, k: usize, allow_zero: bool) -> Compositions {
    let min_part = usize::from(!allow_zero);
    let feasible = if k == 0 { n == 0 } else { n >= k * min_part };
    let mut current = vec![min_part; k];
    if feasible && k > 0 {
        current[k - 1] = n - (k - 1) * min_part;
    }
    Compositions {
        current,
        min_part,
        done: !feasible,
    }
}

/// Number of labeled assignments of the `m` arriving customers that realise
/// `outcome`, with new blocks numbered in order of appearance:
/// `C(m; m_1, …, m_k, s) · ∏_j C(s_j + … + s_{k*} − 1, s_j − 1)`.
pub fn labeled_assignment_count(outcome: &GroupOutcome) -> f64 {
    let mut count = 1.0;
    let mut remaining = outcome.m();
    for &mj in outcome.old_increments() {
        count *= binomial(remaining, mj);
        remaining -= mj;
    }
    for &sj in outcome.new_block_sizes() {
        count *= binomial(remaining - 1, sj - 1);
        remaining -= sj;
    }
    count
}

/// Depth-first walk over every labeled seating of `m` sequential customers,
/// yielding the final state and the product of predictive step probabilities.
pub struct LabeledSeatings<'a> {
    model: &'a GibbsModel,
    target: usize,
    stack: Vec<(PartitionState, f64, usize)>,
}

impl Iterator for LabeledSeatings<'_> {
    type Item = Result<(PartitionState, f64)>;

    fn next(&mut self) -> Option<Self::Item> {
        while let Some((state, prob, depth)) = self.stack.pop() {
            if depth == self.target {
                return Some(Ok((state, prob)));
            }
            match predictive(self.model, &state) {
                Ok(pmf) => {
                    for (&seat, p) in pmf.iter().collect::<Vec<_>>().into_iter().rev() {
                        self.stack.push((state.seated(seat), prob * p, depth + 1));
                    }
                }
                Err(e) => {
                    self.stack.clear();
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

fn check_group_guard(state: &PartitionState, m: usize) -> Result<()> {
    if state.n() > MAX_GROUP_N {
        return Err(Error::SizeGuard {
            what: "state size n",
            limit: MAX_GROUP_N,
            got: state.n(),
        });
    }
    if m > MAX_GROUP_M {
        return Err(Error::SizeGuard {
            what: "group size m",
            limit: MAX_GROUP_M,
            got: m,
        });
    }
    Ok(())
}

pub fn labeled_seatings<'a>(
    model: &'a GibbsModel,
    state: &PartitionState,
    m: usize,
) -> Result<LabeledSeatings<'a>> {
    check_group_guard(state, m)?;
    model.check_reach(state.n() + m)?;
    Ok(LabeledSeatings {
        model,
        target: m,
        stack: vec![(state.clone(), 1.0, 0)],
    })
}

/// Exact law of the group outcome of `m` arrivals, obtained by seating them
/// one at a time with the predictive rule. Guarded to `n ≤ 6`, `m ≤ 5`.
pub fn brute_group_law(
    model: &GibbsModel,
    state: &PartitionState,
    m: usize,
) -> Result<Pmf<GroupOutcome>> {
    let mut masses: BTreeMap<GroupOutcome, CompensatedSum> = BTreeMap::new();
    for leaf in labeled_seatings(model, state, m)? {
        let (fin, p) = leaf?;
        let outcome = GroupOutcome::between(state, &fin)?;
        masses.entry(outcome).or_default().add(p);
    }
    let (support, probs) = masses.into_iter().map(|(o, s)| (o, s.value())).unzip();
    Ok(Pmf::new(support, probs))
}

/// `Σ` of the EPPF over every set partition of `[n]`.
pub fn total_probability(model: &GibbsModel, n: usize) -> Result<f64> {
    model.check_reach(n)?;
    let mut acc = CompensatedSum::new();
    for p in enumerate_partitions(n)? {
        let state = PartitionState::new(p.block_sizes())?;
        acc.add(eppf(model, &state)?);
    }
    Ok(acc.value())
}
