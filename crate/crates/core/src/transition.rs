//! Sparse per-step transition distributions shared by the Monte Carlo
//! engine and the exact oracle.

use crate::network::NodeId;

/// Sparse probability distribution over target nodes, sorted by node id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Distribution {
    entries: Vec<(NodeId, f64)>,
}

impl Distribution {
    /// Entries are sorted by node id; zero-probability entries are dropped.
    pub fn new(mut entries: Vec<(NodeId, f64)>) -> Self {
        entries.retain(|&(_, p)| p != 0.0);
        entries.sort_unstable_by_key(|&(n, _)| n);
        Distribution { entries }
    }

    pub(crate) fn from_sorted(entries: Vec<(NodeId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Distribution { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(NodeId, f64)] {
        &self.entries
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.entries
            .binary_search_by_key(&node, |&(n, _)| n)
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// Number of targets with nonzero probability.
    pub fn support(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }
}

impl FromIterator<(NodeId, f64)> for Distribution {
    fn from_iter<I: IntoIterator<Item = (NodeId, f64)>>(iter: I) -> Self {
        Distribution::new(iter.into_iter().collect())
    }
}

/// Per-step transition probabilities from one source, for steps `1..=S`.
pub trait StepTransitions {
    fn source(&self) -> NodeId;

    fn max_steps(&self) -> usize;

    /// Distribution at step `h` (1-based).
    fn step(&self, h: usize) -> &Distribution;

    /// Probability that a walk is still alive at step `h` (1-based).
    fn survival(&self, h: usize) -> f64;
}
