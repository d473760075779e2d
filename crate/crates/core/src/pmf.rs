use serde::Serialize;

use crate::numerics::compensated_sum;

/// A finite probability mass function with labelled atoms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pmf<T> {
    support: Vec<T>,
    probs: Vec<f64>,
}

impl<T> Pmf<T> {
    /// Pairs labels with masses. Masses must be non-negative; normalization
    /// is not enforced here, see [`Pmf::sum`].
    pub fn new(support: Vec<T>, probs: Vec<f64>) -> Self {
        assert_eq!(support.len(), probs.len(), "support/probs length mismatch");
        debug_assert!(probs.iter().all(|p| *p >= 0.0), "negative mass");
        Self { support, probs }
    }

    pub fn degenerate(label: T) -> Self {
        Self::new(vec![label], vec![1.0])
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }

    /// Total mass, compensated.
    pub fn sum(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    /// Push-forward through `f`, merging atoms that share an image. Output
    /// atoms are ordered by first appearance.
    pub fn marginal<U: PartialEq, F: Fn(&T) -> U>(&self, f: F) -> Pmf<U> {
        let mut support: Vec<U> = Vec::new();
        let mut parts: Vec<Vec<f64>> = Vec::new();
        for (label, p) in self.iter() {
            let u = f(label);
            match support.iter().position(|s| *s == u) {
                Some(i) => parts[i].push(p),
                None => {
                    support.push(u);
                    parts.push(vec![p]);
                }
            }
        }
        let probs = parts.into_iter().map(compensated_sum).collect();
        Pmf::new(support, probs)
    }
}

impl<T: PartialEq> Pmf<T> {
    /// Mass at `label`, zero when absent.
    pub fn prob(&self, label: &T) -> f64 {
        self.iter()
            .filter(|(l, _)| *l == label)
            .map(|(_, p)| p)
            .sum()
    }

    /// Total-variation distance, `½ Σ |p − q|` over the union of supports.
    pub fn total_variation(&self, other: &Pmf<T>) -> f64 {
        let mut acc: Vec<f64> = self
            .iter()
            .map(|(l, p)| (p - other.prob(l)).abs())
            .collect();
        acc.extend(
            other
                .iter()
                .filter(|(l, _)| !self.support.contains(l))
                .map(|(_, q)| q),
        );
        0.5 * compensated_sum(acc)
    }

    /// Largest absolute difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Pmf<T>) -> f64 {
        let a = self.iter().map(|(l, p)| (p - other.prob(l)).abs());
        let b = other.iter().map(|(l, q)| (q - self.prob(l)).abs());
        a.chain(b).fold(0.0, f64::max)
    }
}

impl Pmf<usize> {
    pub fn mean(&self) -> f64 {
        compensated_sum(self.iter().map(|(&x, p)| x as f64 * p))
    }
}
