//! Street network graph model and topological queries.
//!
//! A [`StreetNetwork`] is an immutable, undirected, simple graph. Nodes are
//! densely indexed by [`NodeId`] and keep the external label they were
//! loaded with. Adjacency is stored in compressed sparse rows with every
//! neighbor list sorted ascending.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, RecordContext, Result};

/// Dense node index in `[0, N)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Planar node position in map units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// An ordered set of node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeSet(BTreeSet<NodeId>);

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: NodeId) -> bool {
        self.0.insert(node)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.0.contains(&node)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Members in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.iter().collect()
    }

    /// Fails if any member is not a node of `net`.
    pub fn check_within(&self, net: &StreetNetwork) -> Result<()> {
        match self.0.last() {
            Some(last) if last.index() >= net.node_count() => Err(Error::NodeOutOfRange {
                index: last.index(),
                node_count: net.node_count(),
            }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        NodeSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = NodeId;
    type IntoIter = std::iter::Copied<std::collections::btree_set::Iter<'a, NodeId>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

#[derive(Debug, Clone)]
pub struct StreetNetwork {
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    coordinates: Option<Vec<Point>>,
    edge_count: usize,
}

impl StreetNetwork {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId::from)
    }

    /// Sorted neighbor list. Panics if `u` is out of range.
    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        let i = u.index();
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if u.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index: u.index(),
                node_count: self.node_count(),
            })
        }
    }

    pub fn degree(&self, u: NodeId) -> Result<usize> {
        self.check_node(u)?;
        Ok(self.neighbors(u).len())
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u.index() < self.node_count() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn label(&self, u: NodeId) -> &str {
        &self.labels[u.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    pub fn coordinates(&self) -> Option<&[Point]> {
        self.coordinates.as_deref()
    }

    /// Minimum edge count between `u` and `v`, or `None` when unreachable.
    pub fn bfs_distance(&self, u: NodeId, v: NodeId) -> Result<Option<usize>> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Ok(Some(0));
        }
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::from([u]);
        dist[u.index()] = 0;
        while let Some(x) = queue.pop_front() {
            let d = dist[x.index()] + 1;
            for &y in self.neighbors(x) {
                if dist[y.index()] == usize::MAX {
                    if y == v {
                        return Ok(Some(d));
                    }
                    dist[y.index()] = d;
                    queue.push_back(y);
                }
            }
        }
        Ok(None)
    }

    /// Multi-source BFS distances; `None` marks unreachable nodes or nodes
    /// beyond `max_depth`.
    pub fn bfs_distances(
        &self,
        sources: &NodeSet,
        max_depth: Option<usize>,
    ) -> Result<Vec<Option<usize>>> {
        sources.check_within(self)?;
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        for s in sources {
            dist[s.index()] = Some(0);
            queue.push_back(s);
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x.index()].unwrap_or(0);
            if max_depth.is_some_and(|m| d >= m) {
                continue;
            }
            for &y in self.neighbors(x) {
                if dist[y.index()].is_none() {
                    dist[y.index()] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    /// All nodes within `radius` edges of any center, centers included.
    pub fn neighborhood(&self, centers: &NodeSet, radius: usize) -> Result<NodeSet> {
        if centers.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        let dist = self.bfs_distances(centers, Some(radius))?;
        Ok(dist
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_some())
            .map(|(i, _)| NodeId::from(i))
            .collect())
    }

    /// Number of connected components (isolated nodes count as components).
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.node_count()];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in self.nodes() {
            if seen[s.index()] {
                continue;
            }
            count += 1;
            seen[s.index()] = true;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &y in self.neighbors(x) {
                    if !seen[y.index()] {
                        seen[y.index()] = true;
                        stack.push(y);
                    }
                }
            }
        }
        count
    }

    /// SHA-256 over a canonical text form: labels in index order, then edges.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("nodes {}\n", self.node_count()));
        for label in &self.labels {
            h.update(label.as_bytes());
            h.update(b"\n");
        }
        h.update(format!("edges {}\n", self.edge_count));
        for (u, v) in self.edges() {
            h.update(format!("{} {}\n", u.0, v.0));
        }
        hex::encode(h.finalize())
    }

    /// A builder seeded with this network's nodes and edges.
    pub fn to_builder(&self) -> NetworkBuilder {
        let mut b = NetworkBuilder::with_capacity(self.node_count());
        for u in self.nodes() {
            let p = self.coordinates.as_ref().map(|c| c[u.index()]);
            b.push_node(self.labels[u.index()].clone(), p);
        }
        for (u, v) in self.edges() {
            b.edges.insert((u.0, v.0));
        }
        b
    }
}

/// Incremental, validating constructor for [`StreetNetwork`].
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    coords: Vec<Option<Point>>,
    edges: HashSet<(u32, u32)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        NetworkBuilder {
            labels: Vec::with_capacity(n),
            label_index: HashMap::with_capacity(n),
            coords: Vec::with_capacity(n),
            edges: HashSet::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    fn push_node(&mut self, label: String, position: Option<Point>) -> NodeId {
        let id = NodeId::from(self.labels.len());
        self.label_index.insert(label.clone(), id);
        self.labels.push(label);
        self.coords.push(position);
        id
    }

    pub fn add_node(
        &mut self,
        label: impl Into<String>,
        position: Option<Point>,
        ctx: RecordContext,
    ) -> Result<NodeId> {
        let label = label.into();
        if self.label_index.contains_key(&label) {
            return Err(Error::DuplicateNode { id: label, ctx });
        }
        Ok(self.push_node(label, position))
    }

    pub fn resolve(&self, label: &str, ctx: &RecordContext) -> Result<NodeId> {
        self.label_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownNode {
                id: label.to_owned(),
                ctx: ctx.clone(),
            })
    }

    pub fn add_edge_by_label(&mut self, u: &str, v: &str, ctx: RecordContext) -> Result<()> {
        let a = self.resolve(u, &ctx)?;
        let b = self.resolve(v, &ctx)?;
        self.add_edge(a, b, ctx)
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId, ctx: RecordContext) -> Result<()> {
        let n = self.labels.len();
        for x in [u, v] {
            if x.index() >= n {
                return Err(Error::UnknownNode {
                    id: x.to_string(),
                    ctx,
                });
            }
        }
        if u == v {
            return Err(Error::SelfLoop {
                id: self.labels[u.index()].clone(),
                ctx,
            });
        }
        let key = if u < v { (u.0, v.0) } else { (v.0, u.0) };
        if !self.edges.insert(key) {
            return Err(Error::DuplicateEdge {
                u: self.labels[u.index()].clone(),
                v: self.labels[v.index()].clone(),
                ctx,
            });
        }
        Ok(())
    }

    pub fn build(self) -> Result<StreetNetwork> {
        let n = self.labels.len();
        let with_coords = self.coords.iter().filter(|c| c.is_some()).count();
        let coordinates = if with_coords == 0 {
            None
        } else if with_coords == n {
            Some(
                self.coords
                    .into_iter()
                    .map(|c| c.unwrap_or(Point { x: 0.0, y: 0.0 }))
                    .collect(),
            )
        } else {
            return Err(Error::Malformed {
                message: format!(
                    "{with_coords} of {n} nodes have coordinates; either all or none must"
                ),
                ctx: RecordContext {
                    source: "nodes".into(),
                    line: 0,
                },
            });
        };

        let mut degree = vec![0usize; n];
        for &(u, v) in &self.edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![NodeId(0); offsets[n]];
        for &(u, v) in &self.edges {
            neighbors[fill[u as usize]] = NodeId(v);
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = NodeId(u);
            fill[v as usize] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }

        Ok(StreetNetwork {
            labels: self.labels,
            label_index: self.label_index,
            offsets,
            neighbors,
            coordinates,
            edge_count: self.edges.len(),
        })
    }
}

/// Small synthetic networks used by tests, benches, and the acceptance suite.
/// Labels are the decimal node indices.
pub mod generators {
    use super::*;

    fn ctx() -> RecordContext {
        RecordContext {
            source: "generator".into(),
            line: 0,
        }
    }

    fn from_edges(
        n: usize,
        positions: Option<Vec<Point>>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> StreetNetwork {
        let mut b = NetworkBuilder::with_capacity(n);
        for i in 0..n {
            b.push_node(i.to_string(), positions.as_ref().map(|p| p[i]));
        }
        for (u, v) in edges {
            b.add_edge(NodeId::from(u), NodeId::from(v), ctx())
                .expect("generator edge");
        }
        b.build().expect("generator network")
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> StreetNetwork {
        from_edges(n, None, (1..n).map(|i| (i - 1, i)))
    }

    /// Cycle of `n >= 3` nodes.
    pub fn cycle(n: usize) -> StreetNetwork {
        assert!(n >= 3);
        from_edges(n, None, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Star with center `0` and leaves `1..=leaves`.
    pub fn star(leaves: usize) -> StreetNetwork {
        from_edges(leaves + 1, None, (1..=leaves).map(|i| (0, i)))
    }

    /// Index of `(row, col)` in a `side x side` grid.
    pub fn grid_index(side: usize, row: usize, col: usize) -> usize {
        row * side + col
    }

    /// The horizontal and vertical edges of a `side x side` grid.
    pub fn grid_edges(side: usize) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(2 * side * side.saturating_sub(1));
        for r in 0..side {
            for c in 0..side {
                let i = grid_index(side, r, c);
                if c + 1 < side {
                    edges.push((i, i + 1));
                }
                if r + 1 < side {
                    edges.push((i, i + side));
                }
            }
        }
        edges
    }

    /// Square lattice with 100-unit spacing, node `r * side + c` at `(100c, 100r)`.
    pub fn grid(side: usize) -> StreetNetwork {
        grid_without(side, &[])
    }

    /// Square lattice minus the listed edges (given in either orientation).
    pub fn grid_without(side: usize, removed: &[(usize, usize)]) -> StreetNetwork {
        let removed: HashSet<(usize, usize)> =
            removed.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        let positions = (0..side * side)
            .map(|i| Point {
                x: 100.0 * (i % side) as f64,
                y: 100.0 * (i / side) as f64,
            })
            .collect();
        from_edges(
            side * side,
            Some(positions),
            grid_edges(side)
                .into_iter()
                .filter(|e| !removed.contains(e)),
        )
    }

    /// Grid nodes on the outer ring.
    pub fn grid_boundary(side: usize) -> NodeSet {
        (0..side * side)
            .filter(|&i| {
                let (r, c) = (i / side, i % side);
                r == 0 || c == 0 || r + 1 == side || c + 1 == side
            })
            .map(NodeId::from)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn degrees_of_small_graphs() {
        let c4 = cycle(4);
        assert!(c4.nodes().all(|u| c4.degree(u).unwrap() == 2));
        let s = star(3);
        assert_eq!(s.degree(n(0)).unwrap(), 3);
        assert_eq!(s.degree(n(1)).unwrap(), 1);
        assert!(matches!(s.degree(n(4)), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn degree_sum_is_twice_edge_count() {
        let g = grid(7);
        let total: usize = g.nodes().map(|u| g.degree(u).unwrap()).sum();
        assert_eq!(total, 2 * g.edge_count());
        assert_eq!(g.edge_count(), 2 * 7 * 6);
    }

    #[test]
    fn adjacency_is_symmetric_and_loop_free() {
        let g = grid(5);
        for u in g.nodes() {
            assert!(!g.neighbors(u).contains(&u));
            for &v in g.neighbors(u) {
                assert!(g.neighbors(v).contains(&u));
            }
        }
    }

    #[test]
    fn bfs_distance_cases() {
        let p = path(3);
        assert_eq!(p.bfs_distance(n(0), n(2)).unwrap(), Some(2));
        assert_eq!(p.bfs_distance(n(1), n(1)).unwrap(), Some(0));

        let mut b = NetworkBuilder::new();
        let ctx = RecordContext {
            source: "t".into(),
            line: 1,
        };
        for l in ["a", "b", "c", "d"] {
            b.add_node(l, None, ctx.clone()).unwrap();
        }
        b.add_edge_by_label("a", "b", ctx.clone()).unwrap();
        b.add_edge_by_label("c", "d", ctx).unwrap();
        let g = b.build().unwrap();
        assert_eq!(g.bfs_distance(n(0), n(3)).unwrap(), None);
        assert_eq!(g.component_count(), 2);
        assert!(g.bfs_distance(n(0), n(9)).is_err());
    }

    #[test]
    fn neighborhood_on_path() {
        let p = path(5);
        let got = p.neighborhood(&NodeSet::from_iter([n(2)]), 1).unwrap();
        assert_eq!(got.to_vec(), vec![n(1), n(2), n(3)]);
        let centers = NodeSet::from_iter([n(0), n(4)]);
        assert_eq!(p.neighborhood(&centers, 0).unwrap(), centers);
        assert!(matches!(
            p.neighborhood(&NodeSet::new(), 3),
            Err(Error::EmptyNodeSet)
        ));
    }

    #[test]
    fn grid_diamond_matches_manhattan_ball() {
        let side = 15;
        let g = grid(side);
        let center = grid_index(side, 7, 7);
        let got = g
            .neighborhood(&NodeSet::from_iter([NodeId::from(center)]), 7)
            .unwrap();
        // Independent oracle: enumerate lattice points by Manhattan distance.
        let expected: NodeSet = (0..side * side)
            .filter(|&i| {
                let (r, c) = ((i / side) as i64, (i % side) as i64);
                (r - 7).abs() + (c - 7).abs() <= 7
            })
            .map(NodeId::from)
            .collect();
        assert_eq!(got.len(), 113);
        assert_eq!(got, expected);
    }

    #[test]
    fn builder_rejects_bad_edges() {
        let ctx = RecordContext {
            source: "e".into(),
            line: 3,
        };
        let mut b = NetworkBuilder::new();
        b.add_node("0", None, ctx.clone()).unwrap();
        b.add_node("1", None, ctx.clone()).unwrap();
        assert!(matches!(
            b.add_node("1", None, ctx.clone()),
            Err(Error::DuplicateNode { .. })
        ));
        assert!(matches!(
            b.add_edge_by_label("0", "5", ctx.clone()),
            Err(Error::UnknownNode { .. })
        ));
        assert!(matches!(
            b.add_edge_by_label("0", "0", ctx.clone()),
            Err(Error::SelfLoop { .. })
        ));
        b.add_edge_by_label("0", "1", ctx.clone()).unwrap();
        let err = b.add_edge_by_label("1", "0", ctx).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
        assert!(err.to_string().starts_with("e:3"));
    }

    #[test]
    fn partial_coordinates_rejected() {
        let ctx = RecordContext {
            source: "n".into(),
            line: 1,
        };
        let mut b = NetworkBuilder::new();
        b.add_node("a", Some(Point { x: 0.0, y: 0.0 }), ctx.clone())
            .unwrap();
        b.add_node("b", None, ctx).unwrap();
        assert!(b.build().is_err());
    }

    #[test]
    fn hash_is_stable_under_rebuild() {
        let g = grid(4);
        let h = g.to_builder().build().unwrap();
        assert_eq!(g.content_hash(), h.content_hash());
        assert_ne!(g.content_hash(), grid(5).content_hash());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = StreetNetwork> {
            (2usize..14).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
                    let mut b = NetworkBuilder::new();
                    let ctx = RecordContext {
                        source: "p".into(),
                        line: 0,
                    };
                    for i in 0..n {
                        b.add_node(i.to_string(), None, ctx.clone()).unwrap();
                    }
                    for (u, v) in pairs {
                        let _ = b.add_edge(NodeId::from(u), NodeId::from(v), ctx.clone());
                    }
                    b.build().unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn neighborhood_monotone_in_radius(g in arb_graph(), c in 0usize..14, r1 in 0usize..5, extra in 0usize..5) {
                let c = NodeId::from(c % g.node_count());
                let centers = NodeSet::from_iter([c]);
                let small = g.neighborhood(&centers, r1).unwrap();
                let large = g.neighborhood(&centers, r1 + extra).unwrap();
                prop_assert!(small.is_subset(&large));
            }

            #[test]
            fn bfs_triangle_inequality(g in arb_graph(), a in 0usize..14, b in 0usize..14, c in 0usize..14) {
                let n = g.node_count();
                let (a, b, c) = (NodeId::from(a % n), NodeId::from(b % n), NodeId::from(c % n));
                if let (Some(ab), Some(bc)) = (g.bfs_distance(a, b).unwrap(), g.bfs_distance(b, c).unwrap()) {
                    let ac = g.bfs_distance(a, c).unwrap().expect("same component");
                    prop_assert!(ac <= ab + bc);
                }
            }
        }
    }
}
