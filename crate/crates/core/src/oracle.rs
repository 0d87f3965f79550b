//! Exact transition probabilities by exhaustive enumeration of
//! self-avoiding paths, used to check the Monte Carlo engine.
//!
//! Each path carries the product of `1 / k` over its choices, where `k` is
//! the number of unvisited neighbors at that point, which is the same walk
//! law the sampler uses. Enumeration cost grows exponentially with the step
//! count, so every run is bounded by a budget on expanded partial paths.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::accessibility::{accessibility_field, AccessibilityField, AccessibilityOptions};
use crate::error::{Error, Result};
use crate::network::{NodeId, StreetNetwork};
use crate::transition::{Distribution, StepTransitions};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Path probability arithmetic.
pub trait PathWeight: Clone + Send {
    fn one() -> Self;
    fn zero() -> Self;
    /// Probability of taking one of `k` equally likely branches from `self`.
    fn branch(&self, k: usize) -> Self;
    fn accumulate(&mut self, other: &Self);
    fn to_f64(&self) -> f64;
}

impl PathWeight for f64 {
    fn one() -> Self {
        1.0
    }
    fn zero() -> Self {
        0.0
    }
    fn branch(&self, k: usize) -> Self {
        self / k as f64
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl PathWeight for BigRational {
    fn one() -> Self {
        One::one()
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn branch(&self, k: usize) -> Self {
        self / BigRational::from_integer(BigInt::from(k))
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

struct Frame<W> {
    node: NodeId,
    depth: usize,
    weight: W,
    children: Vec<NodeId>,
    next: usize,
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn new(n: usize) -> Self {
        Bitset(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }
}

/// Per-step exact masses keyed by target, for steps `1..=max_steps`.
pub fn enumerate_paths<W: PathWeight>(
    net: &StreetNetwork,
    source: NodeId,
    max_steps: usize,
    budget: u64,
) -> Result<Vec<BTreeMap<NodeId, W>>> {
    net.check_node(source)?;
    let mut per_step: Vec<BTreeMap<NodeId, W>> = vec![BTreeMap::new(); max_steps];
    let mut visited = Bitset::new(net.node_count());
    let mut expanded: u64 = 0;
    let mut stack: Vec<Frame<W>> = Vec::new();

    let mut open =
        |node: NodeId, depth: usize, weight: W, visited: &mut Bitset| -> Result<Frame<W>> {
            expanded += 1;
            if expanded > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            visited.set(node.index());
            if depth >= 1 {
                per_step[depth - 1]
                    .entry(node)
                    .or_insert_with(W::zero)
                    .accumulate(&weight);
            }
            let stops = depth == max_steps || (depth >= 1 && net.neighbors(node).len() == 1);
            let children = if stops {
                Vec::new()
            } else {
                net.neighbors(node)
                    .iter()
                    .copied()
                    .filter(|v| !visited.get(v.index()))
                    .collect()
            };
            Ok(Frame {
                node,
                depth,
                weight,
                children,
                next: 0,
            })
        };

    let root = open(source, 0, W::one(), &mut visited)?;
    stack.push(root);
    while let Some(top) = stack.last_mut() {
        if top.next < top.children.len() {
            let child = top.children[top.next];
            top.next += 1;
            let weight = top.weight.branch(top.children.len());
            let depth = top.depth + 1;
            let frame = open(child, depth, weight, &mut visited)?;
            stack.push(frame);
        } else {
            visited.clear(top.node.index());
            stack.pop();
        }
    }
    Ok(per_step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTransition {
    source: NodeId,
    per_step: Vec<Distribution>,
    survival: Vec<f64>,
}

impl ExactTransition {
    pub fn steps(&self) -> impl Iterator<Item = (usize, &Distribution)> {
        self.per_step.iter().enumerate().map(|(i, d)| (i + 1, d))
    }
}

impl StepTransitions for ExactTransition {
    fn source(&self) -> NodeId {
        self.source
    }

    fn max_steps(&self) -> usize {
        self.per_step.len()
    }

    fn step(&self, h: usize) -> &Distribution {
        &self.per_step[h - 1]
    }

    fn survival(&self, h: usize) -> f64 {
        self.survival[h - 1]
    }
}

fn collect<W: PathWeight>(source: NodeId, raw: Vec<BTreeMap<NodeId, W>>) -> ExactTransition {
    let mut per_step = Vec::with_capacity(raw.len());
    let mut survival = Vec::with_capacity(raw.len());
    for step in raw {
        let mut total = W::zero();
        for w in step.values() {
            total.accumulate(w);
        }
        survival.push(total.to_f64());
        per_step.push(Distribution::new(
            step.into_iter().map(|(n, w)| (n, w.to_f64())).collect(),
        ));
    }
    ExactTransition {
        source,
        per_step,
        survival,
    }
}

/// Exact `P_h(source, j)` for `h = 1..=max_steps` in 64-bit floating point.
pub fn exact_transitions(
    net: &StreetNetwork,
    source: NodeId,
    max_steps: usize,
    budget: u64,
) -> Result<ExactTransition> {
    Ok(collect(
        source,
        enumerate_paths::<f64>(net, source, max_steps, budget)?,
    ))
}

/// Same as [`exact_transitions`] but accumulated in exact rationals before
/// the final conversion.
pub fn exact_transitions_rational(
    net: &StreetNetwork,
    source: NodeId,
    max_steps: usize,
    budget: u64,
) -> Result<ExactTransition> {
    Ok(collect(
        source,
        enumerate_paths::<BigRational>(net, source, max_steps, budget)?,
    ))
}

/// Largest absolute difference between float and rational enumeration over
/// every source, step and target.
pub fn rational_discrepancy(net: &StreetNetwork, max_steps: usize, budget: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in net.nodes() {
        let a = exact_transitions(net, s, max_steps, budget)?;
        let b = exact_transitions_rational(net, s, max_steps, budget)?;
        for h in 1..=max_steps {
            let (da, db) = (a.step(h), b.step(h));
            for (n, _) in da.iter().chain(db.iter()) {
                worst = worst.max((da.get(n) - db.get(n)).abs());
            }
            worst = worst.max((a.survival(h) - b.survival(h)).abs());
        }
    }
    Ok(worst)
}

/// Exact transitions for every node, enumerated in parallel.
pub fn exact_all(
    net: &StreetNetwork,
    max_steps: usize,
    budget: u64,
) -> Result<Vec<ExactTransition>> {
    if max_steps == 0 {
        return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
    }
    let sources: Vec<NodeId> = net.nodes().collect();
    sources
        .par_iter()
        .map(|&s| exact_transitions(net, s, max_steps, budget))
        .collect()
}

/// Exact accessibility field: enumeration piped through the entropy and
/// accessibility formulas. Deterministic and seed-free.
pub fn exact_accessibility(
    net: &StreetNetwork,
    max_steps: usize,
    options: &AccessibilityOptions,
    budget: u64,
) -> Result<AccessibilityField> {
    let all = exact_all(net, max_steps, budget)?;
    accessibility_field(&all, net.node_count(), options)
}
