//! Self-avoiding random walks and Monte Carlo transition estimates.
//!
//! A walk starts at its source and at every step moves to a uniformly chosen
//! neighbor that it has not visited yet. It stops after `max_steps` steps,
//! on arriving at a degree-one node, or when every neighbor of the current
//! node has been visited.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{NodeId, NodeSet, StreetNetwork};
use crate::rng::{source_stream, WalkRng};
use crate::transition::{Distribution, StepTransitions};

pub const DEFAULT_MAX_STEPS: usize = 60;
pub const DEFAULT_WALKS_PER_SOURCE: u32 = 10_000;

/// Which source nodes to estimate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Sources {
    #[default]
    All,
    Set(NodeSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkConfig {
    pub max_steps: usize,
    pub walks_per_source: u32,
    pub master_seed: u64,
    pub sources: Sources,
}

impl WalkConfig {
    pub fn new(max_steps: usize, walks_per_source: u32, master_seed: u64) -> Result<Self> {
        let config = WalkConfig {
            max_steps,
            walks_per_source,
            master_seed,
            sources: Sources::All,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_sources(mut self, sources: Sources) -> Self {
        self.sources = sources;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if self.walks_per_source == 0 {
            return Err(Error::InvalidConfig(
                "walks_per_source must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Requested sources in ascending order.
    pub fn source_list(&self, net: &StreetNetwork) -> Result<Vec<NodeId>> {
        match &self.sources {
            Sources::All => Ok(net.nodes().collect()),
            Sources::Set(set) => {
                set.check_within(net)?;
                Ok(set.to_vec())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    MaxSteps,
    Extremity,
    Trapped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    pub nodes: Vec<NodeId>,
    pub termination: Termination,
}

impl WalkPath {
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Reusable per-worker walk state. Visited marks are epoch stamps so no
/// clearing is needed between walks.
#[derive(Debug)]
struct Walker {
    stamp: Vec<u32>,
    epoch: u32,
    candidates: Vec<NodeId>,
}

impl Walker {
    fn new(node_count: usize) -> Self {
        Walker {
            stamp: vec![0; node_count],
            epoch: 0,
            candidates: Vec::new(),
        }
    }

    /// Runs one walk, calling `visit(h, node)` for each step `h >= 1`.
    #[inline]
    fn walk<R: Rng>(
        &mut self,
        net: &StreetNetwork,
        source: NodeId,
        max_steps: usize,
        rng: &mut R,
        mut visit: impl FnMut(usize, NodeId),
    ) -> Termination {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.stamp[source.index()] = epoch;
        let mut current = source;
        for h in 1..=max_steps {
            self.candidates.clear();
            for &v in net.neighbors(current) {
                if self.stamp[v.index()] != epoch {
                    self.candidates.push(v);
                }
            }
            let next = match self.candidates.len() {
                0 => return Termination::Trapped,
                1 => self.candidates[0],
                k => self.candidates[rng.random_range(0..k)],
            };
            self.stamp[next.index()] = epoch;
            visit(h, next);
            current = next;
            if h == max_steps {
                return Termination::MaxSteps;
            }
            if net.neighbors(next).len() == 1 {
                return Termination::Extremity;
            }
        }
        Termination::MaxSteps
    }
}

/// Samples one self-avoiding walk from `source`.
pub fn sample_walk<R: Rng>(
    net: &StreetNetwork,
    source: NodeId,
    max_steps: usize,
    rng: &mut R,
) -> Result<WalkPath> {
    net.check_node(source)?;
    let mut walker = Walker::new(net.node_count());
    let mut nodes = vec![source];
    let termination = walker.walk(net, source, max_steps, rng, |_, v| nodes.push(v));
    Ok(WalkPath { nodes, termination })
}

/// Monte Carlo estimate of `P_h(source, j)` for `h = 1..=S`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate {
    source: NodeId,
    walks: u32,
    per_step: Vec<Distribution>,
    alive: Vec<u32>,
}

impl TransitionEstimate {
    pub fn walks(&self) -> u32 {
        self.walks
    }

    /// Number of walks still alive at step `h`.
    pub fn alive(&self, h: usize) -> u32 {
        self.alive[h - 1]
    }

    pub fn steps(&self) -> impl Iterator<Item = (usize, &Distribution)> {
        self.per_step.iter().enumerate().map(|(i, d)| (i + 1, d))
    }
}

impl StepTransitions for TransitionEstimate {
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
        f64::from(self.alive[h - 1]) / f64::from(self.walks)
    }
}

/// Above this many `(step, node)` cells a hash map replaces the dense table.
const DENSE_TALLY_LIMIT: usize = 1 << 24;

/// Visit counts keyed by `(h - 1) * N + node`.
#[derive(Debug)]
enum Tally {
    Dense { counts: Vec<u32>, touched: Vec<u32> },
    Sparse(HashMap<u64, u32>),
}

impl Tally {
    fn new(node_count: usize, max_steps: usize) -> Self {
        let cells = node_count.saturating_mul(max_steps);
        if cells <= DENSE_TALLY_LIMIT {
            Tally::Dense {
                counts: vec![0; cells],
                touched: Vec::new(),
            }
        } else {
            Tally::Sparse(HashMap::new())
        }
    }

    #[inline]
    fn hit(&mut self, cell: usize) {
        match self {
            Tally::Dense { counts, touched } => {
                let c = &mut counts[cell];
                if *c == 0 {
                    touched.push(cell as u32);
                }
                *c += 1;
            }
            Tally::Sparse(map) => *map.entry(cell as u64).or_insert(0) += 1,
        }
    }

    /// Drains into sorted `(cell, count)` pairs and resets.
    fn drain_sorted(&mut self) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = match self {
            Tally::Dense { counts, touched } => touched
                .drain(..)
                .map(|cell| {
                    let c = std::mem::take(&mut counts[cell as usize]);
                    (cell as usize, c)
                })
                .collect(),
            Tally::Sparse(map) => map.drain().map(|(k, c)| (k as usize, c)).collect(),
        };
        out.sort_unstable_by_key(|&(cell, _)| cell);
        out
    }
}

/// Per-worker scratch for repeated estimation.
#[derive(Debug)]
struct Scratch {
    walker: Walker,
    tally: Tally,
}

impl Scratch {
    fn new(net: &StreetNetwork, max_steps: usize) -> Self {
        Scratch {
            walker: Walker::new(net.node_count()),
            tally: Tally::new(net.node_count(), max_steps),
        }
    }

    fn estimate(
        &mut self,
        net: &StreetNetwork,
        source: NodeId,
        config: &WalkConfig,
    ) -> TransitionEstimate {
        let n = net.node_count();
        let steps = config.max_steps;
        let mut rng: WalkRng = source_stream(config.master_seed, source);
        let Scratch { walker, tally } = self;
        for _ in 0..config.walks_per_source {
            walker.walk(net, source, steps, &mut rng, |h, v| {
                tally.hit((h - 1) * n + v.index())
            });
        }

        let m = f64::from(config.walks_per_source);
        let mut per_step: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); steps];
        let mut alive = vec![0u32; steps];
        for (cell, count) in tally.drain_sorted() {
            let (h0, node) = (cell / n, cell % n);
            per_step[h0].push((NodeId::from(node), f64::from(count) / m));
            alive[h0] += count;
        }
        TransitionEstimate {
            source,
            walks: config.walks_per_source,
            per_step: per_step
                .into_iter()
                .map(Distribution::from_sorted)
                .collect(),
            alive,
        }
    }
}

/// Runs `walks_per_source` walks from `source` and tallies step positions.
pub fn estimate_transitions(
    net: &StreetNetwork,
    source: NodeId,
    config: &WalkConfig,
) -> Result<TransitionEstimate> {
    config.validate()?;
    net.check_node(source)?;
    Ok(Scratch::new(net, config.max_steps).estimate(net, source, config))
}

/// Progress callback: `(sources_done, sources_total)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))
}

/// Estimates every requested source on `threads` workers and hands the
/// results to `sink` in ascending source order. Only one chunk of estimates
/// is held in memory at a time.
pub fn for_each_estimate(
    net: &StreetNetwork,
    config: &WalkConfig,
    threads: usize,
    progress: Option<Progress<'_>>,
    mut sink: impl FnMut(TransitionEstimate) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    let sources = config.source_list(net)?;
    let pool = build_pool(threads)?;
    let chunk = (threads.max(1) * 8).max(16);
    let total = sources.len();
    let mut done = 0;
    for batch in sources.chunks(chunk) {
        let estimates: Vec<TransitionEstimate> = pool.install(|| {
            batch
                .par_iter()
                .map_init(
                    || Scratch::new(net, config.max_steps),
                    |scratch, &s| scratch.estimate(net, s, config),
                )
                .collect()
        });
        for est in estimates {
            sink(est)?;
        }
        done += batch.len();
        if let Some(report) = progress {
            report(done, total);
        }
    }
    Ok(())
}

/// One estimate per requested source, in ascending source order.
pub fn estimate_all(
    net: &StreetNetwork,
    config: &WalkConfig,
    threads: usize,
) -> Result<Vec<TransitionEstimate>> {
    let mut out = Vec::new();
    for_each_estimate(net, config, threads, None, |e| {
        out.push(e);
        Ok(())
    })?;
    Ok(out)
}
