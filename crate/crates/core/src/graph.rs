//! Undirected graph with dense node ids and the elementary algorithms the
//! rest of the crate builds on.
//!
//! Self-loops are stored (pooling relies on them) but never contribute to
//! connectivity or to the combinatorial Laplacian.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result};

/// Canonical node identifier, always in `0..num_nodes`.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    /// Sorted external neighbours (self excluded).
    neighbors: Vec<Vec<NodeId>>,
    self_loops: Vec<bool>,
    /// Keyed by `(min, max)`; `None` means every edge has weight 1.
    weights: Option<BTreeMap<(NodeId, NodeId), f64>>,
    features: Option<DMatrix<f64>>,
    labels: Option<Vec<u32>>,
}

/// Incremental construction with duplicate collapsing.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    num_nodes: usize,
    edges: BTreeMap<(NodeId, NodeId), f64>,
    weighted: bool,
    duplicates: usize,
}

impl GraphBuilder {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            edges: BTreeMap::new(),
            weighted: false,
            duplicates: 0,
        }
    }

    /// Adds an unweighted edge. Returns `false` when the edge already existed.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool> {
        self.insert(u, v, 1.0)
    }

    pub fn add_weighted_edge(&mut self, u: NodeId, v: NodeId, weight: f64) -> Result<bool> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(invalid(format!("edge weight {weight} must be finite and non-negative")));
        }
        self.weighted = true;
        self.insert(u, v, weight)
    }

    fn insert(&mut self, u: NodeId, v: NodeId, weight: f64) -> Result<bool> {
        if u >= self.num_nodes || v >= self.num_nodes {
            return Err(invalid(format!(
                "edge ({u}, {v}) references a node outside 0..{}",
                self.num_nodes
            )));
        }
        let key = (u.min(v), u.max(v));
        if self.edges.contains_key(&key) {
            self.duplicates += 1;
            return Ok(false);
        }
        self.edges.insert(key, weight);
        Ok(true)
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn build(self) -> Graph {
        let mut neighbors = vec![Vec::new(); self.num_nodes];
        let mut self_loops = vec![false; self.num_nodes];
        for &(u, v) in self.edges.keys() {
            if u == v {
                self_loops[u] = true;
            } else {
                neighbors[u].push(v);
                neighbors[v].push(u);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Graph {
            num_nodes: self.num_nodes,
            neighbors,
            self_loops,
            weights: self.weighted.then_some(self.edges),
            features: None,
            labels: None,
        }
    }
}

impl Graph {
    /// Unweighted graph from an edge list; duplicates are collapsed.
    pub fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut builder = GraphBuilder::new(num_nodes);
        for (u, v) in edges {
            builder.add_edge(u, v)?;
        }
        Ok(builder.build())
    }

    pub fn empty(num_nodes: usize) -> Self {
        GraphBuilder::new(num_nodes).build()
    }

    pub fn with_features(mut self, features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() != self.num_nodes {
            return Err(invalid(format!(
                "feature matrix has {} rows, graph has {} nodes",
                features.nrows(),
                self.num_nodes
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(invalid(format!(
                "{} labels given for {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.num_nodes == 0
    }

    /// Number of stored edges, self-loops included.
    pub fn num_edges(&self) -> usize {
        let external: usize = self.neighbors.iter().map(Vec::len).sum::<usize>() / 2;
        external + self.self_loops.iter().filter(|&&l| l).count()
    }

    /// All edges as `(u, v)` with `u <= v`, in ascending order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes {
            if self.self_loops[u] {
                out.push((u, u));
            }
            out.extend(self.neighbors[u].iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// External neighbours of `v`, sorted ascending.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[v]
    }

    /// Number of external edges at `v`.
    pub fn degree(&self, v: NodeId) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_self_loop(&self, v: NodeId) -> bool {
        self.self_loops[v]
    }

    pub fn has_all_self_loops(&self) -> bool {
        self.self_loops.iter().all(|&l| l)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        if u == v {
            self.self_loops[u]
        } else {
            self.neighbors[u].binary_search(&v).is_ok()
        }
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Weight of edge `(u, v)`, or 0 when absent.
    pub fn weight(&self, u: NodeId, v: NodeId) -> f64 {
        if !self.has_edge(u, v) {
            return 0.0;
        }
        match &self.weights {
            Some(w) => w[&(u.min(v), u.max(v))],
            None => 1.0,
        }
    }

    pub fn features(&self) -> Option<&DMatrix<f64>> {
        self.features.as_ref()
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Copy of the graph with a unit self-loop on every node that lacks one.
    pub fn with_self_loops(&self) -> Graph {
        let mut g = self.clone();
        for v in 0..g.num_nodes {
            if !g.self_loops[v] {
                g.self_loops[v] = true;
                if let Some(w) = &mut g.weights {
                    w.insert((v, v), 1.0);
                }
            }
        }
        g
    }

    /// Dense weighted adjacency matrix, stored self-loops on the diagonal.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.num_nodes;
        let mut a = DMatrix::zeros(n, n);
        for (u, v) in self.edges() {
            let w = self.weight(u, v);
            a[(u, v)] = w;
            a[(v, u)] = w;
        }
        a
    }

    /// Combinatorial Laplacian `D - A` over external edges only.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.num_nodes;
        let mut l = DMatrix::zeros(n, n);
        for u in 0..n {
            for &v in &self.neighbors[u] {
                let w = self.weight(u, v);
                l[(u, v)] = -w;
                l[(u, u)] += w;
            }
        }
        l
    }

    pub fn connected_components(&self) -> NodePartition {
        let mut uf = UnionFind::new(self.num_nodes);
        for u in 0..self.num_nodes {
            for &v in self.neighbors[u].iter().filter(|&&v| v > u) {
                uf.union(u, v);
            }
        }
        let mut by_root: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        let mut root_order = Vec::new();
        for v in 0..self.num_nodes {
            let r = uf.find(v);
            let block = by_root.entry(r).or_insert_with(|| {
                root_order.push(r);
                Vec::new()
            });
            block.push(v);
        }
        // first appearance in ascending node order == ordering by min member
        let blocks = root_order
            .into_iter()
            .map(|r| by_root.remove(&r).unwrap_or_default())
            .collect();
        NodePartition { blocks }
    }

    pub fn is_connected(&self) -> bool {
        self.num_nodes > 0 && self.connected_components().len() == 1
    }

    /// Subgraph induced by `nodes`, plus the map from new ids to ids in `self`.
    ///
    /// New ids follow the ascending order of the original ids.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Result<(Graph, Vec<NodeId>)> {
        let mut kept: Vec<NodeId> = nodes.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&v| v >= self.num_nodes) {
            return Err(invalid(format!("node {bad} is not in the graph")));
        }
        let mut new_id = vec![usize::MAX; self.num_nodes];
        for (i, &v) in kept.iter().enumerate() {
            new_id[v] = i;
        }
        let mut builder = GraphBuilder::new(kept.len());
        for &u in &kept {
            let edges = self.neighbors[u]
                .iter()
                .copied()
                .filter(|&v| v > u && new_id[v] != usize::MAX)
                .chain(self.self_loops[u].then_some(u));
            for v in edges {
                if self.weights.is_some() {
                    builder.add_weighted_edge(new_id[u], new_id[v], self.weight(u, v))?;
                } else {
                    builder.add_edge(new_id[u], new_id[v])?;
                }
            }
        }
        let mut sub = builder.build();
        if let Some(x) = &self.features {
            sub.features = Some(x.select_rows(kept.iter()));
        }
        if let Some(labels) = &self.labels {
            sub.labels = Some(kept.iter().map(|&v| labels[v]).collect());
        }
        Ok((sub, kept))
    }

    /// Relabels node `i` as `p(i)`; features and labels move with their node.
    pub fn apply_permutation(&self, p: &Permutation) -> Result<Graph> {
        if p.len() != self.num_nodes {
            return Err(invalid(format!(
                "permutation of size {} applied to graph with {} nodes",
                p.len(),
                self.num_nodes
            )));
        }
        let mut builder = GraphBuilder::new(self.num_nodes);
        for (u, v) in self.edges() {
            if self.weights.is_some() {
                builder.add_weighted_edge(p.apply(u), p.apply(v), self.weight(u, v))?;
            } else {
                builder.add_edge(p.apply(u), p.apply(v))?;
            }
        }
        let mut out = builder.build();
        if let Some(x) = &self.features {
            let inv = p.inverse();
            out.features = Some(x.select_rows(inv.as_slice().iter()));
        }
        if let Some(labels) = &self.labels {
            let mut permuted = vec![0; labels.len()];
            for (i, &c) in labels.iter().enumerate() {
                permuted[p.apply(i)] = c;
            }
            out.labels = Some(permuted);
        }
        Ok(out)
    }
}

/// Disjoint, nonempty blocks of node ids, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePartition {
    blocks: Vec<Vec<NodeId>>,
}

impl NodePartition {
    /// Validates disjointness and nonemptiness; sorts members and blocks.
    pub fn new(mut blocks: Vec<Vec<NodeId>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for block in &mut blocks {
            if block.is_empty() {
                return Err(invalid("partition blocks must be nonempty"));
            }
            block.sort_unstable();
            for &v in block.iter() {
                if !seen.insert(v) {
                    return Err(invalid(format!("node {v} appears in two blocks")));
                }
            }
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<NodeId>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vec<NodeId>> {
        self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// A bijection on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &t in &map {
            if t >= map.len() || std::mem::replace(&mut seen[t], true) {
                return Err(invalid("permutation is not a bijection"));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Self(map)
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &t) in self.0.iter().enumerate() {
            inv[t] = i;
        }
        Self(inv)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// `out[p(i)] = values[i]`.
    pub fn permute_slice<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let inv = self.inverse();
        (0..values.len()).map(|j| values[inv.0[j]].clone()).collect()
    }
}

/// Union by size with path halving.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn bfs_components(g: &Graph) -> Vec<Vec<usize>> {
        let mut seen = vec![false; g.num_nodes()];
        let mut out = Vec::new();
        for s in 0..g.num_nodes() {
            if seen[s] {
                continue;
            }
            let mut block = vec![];
            let mut queue = VecDeque::from([s]);
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                block.push(u);
                for &v in g.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            block.sort_unstable();
            out.push(block);
        }
        out
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = vec![];
        for u in 0..n {
            for v in u..n {
                if rand::Rng::random::<f64>(&mut rng) < p {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn path_is_one_component() {
        assert_eq!(path(4).connected_components().blocks(), &[vec![0, 1, 2, 3]]);
    }

    #[test]
    fn isolated_node_is_own_component() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(g.connected_components().blocks(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn two_triangles_match_bfs() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let cc = g.connected_components();
        assert_eq!(cc.len(), 2);
        assert_eq!(cc.blocks(), bfs_components(&g).as_slice());
    }

    #[test]
    fn self_loops_do_not_connect() {
        let g = Graph::from_edges(2, [(0, 0), (1, 1)]).unwrap();
        assert_eq!(g.connected_components().len(), 2);
        assert_eq!(g.laplacian(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn empty_graph_has_empty_partition() {
        assert!(Graph::empty(0).connected_components().is_empty());
    }

    #[test]
    fn induced_path_subset() {
        let (sub, map) = path(4).induced_subgraph(&[0, 1, 3]).unwrap();
        assert_eq!(map, vec![0, 1, 3]);
        assert_eq!(sub.edges(), vec![(0, 1)]);
        assert_eq!(sub.degree(2), 0);
    }

    #[test]
    fn induced_full_set_is_identity() {
        let g = random_graph(12, 0.3, 7);
        let all: Vec<_> = (0..12).collect();
        let (sub, map) = g.induced_subgraph(&all).unwrap();
        assert_eq!(map, all);
        assert_eq!(sub, g);
    }

    #[test]
    fn induced_triangle_pair() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let (sub, _) = tri.induced_subgraph(&[0, 2]).unwrap();
        // edge-filter oracle
        let expected: Vec<_> = tri
            .edges()
            .into_iter()
            .filter(|&(u, v)| [0, 2].contains(&u) && [0, 2].contains(&v))
            .collect();
        assert_eq!(expected.len(), 1);
        assert_eq!(sub.edges(), vec![(0, 1)]);
    }

    #[test]
    fn induced_unknown_node_fails() {
        assert!(path(3).induced_subgraph(&[0, 5]).is_err());
    }

    #[test]
    fn identity_permutation_is_noop() {
        let g = random_graph(10, 0.4, 1);
        assert_eq!(g.apply_permutation(&Permutation::identity(10)).unwrap(), g);
    }

    #[test]
    fn swap_ends_of_path() {
        let g = path(3);
        let p = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(g.apply_permutation(&p).unwrap().edges(), g.edges());
    }

    #[test]
    fn permutation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(15, 0.3, 11)
            .with_features(DMatrix::from_fn(15, 2, |i, j| (i * 3 + j) as f64))
            .unwrap();
        let p = Permutation::random(15, &mut rng);
        let back = g
            .apply_permutation(&p)
            .unwrap()
            .apply_permutation(&p.inverse())
            .unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn permutation_moves_feature_rows() {
        let g = path(3)
            .with_features(DMatrix::from_row_slice(3, 1, &[10.0, 20.0, 30.0]))
            .unwrap();
        let p = Permutation::new(vec![1, 2, 0]).unwrap();
        let h = g.apply_permutation(&p).unwrap();
        for i in 0..3 {
            assert_eq!(g.features().unwrap()[(i, 0)], h.features().unwrap()[(p.apply(i), 0)]);
        }
    }

    #[test]
    fn non_bijection_rejected() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3]).is_err());
        assert!(path(3).apply_permutation(&Permutation::identity(4)).is_err());
    }

    #[test]
    fn laplacian_of_single_edge() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(g.laplacian(), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn laplacian_of_triangle() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let l = g.laplacian();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn laplacian_smallest_eigenvalue_is_zero() {
        let g = random_graph(20, 0.25, 5);
        let eig = g.laplacian().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min.abs() < 1e-10);
        let ones = nalgebra::DVector::from_element(20, 1.0);
        assert!((g.laplacian() * ones).amax() < 1e-12);
    }

    #[test]
    fn duplicates_are_collapsed() {
        let mut b = GraphBuilder::new(2);
        assert!(b.add_edge(0, 1).unwrap());
        assert!(!b.add_edge(1, 0).unwrap());
        assert_eq!(b.duplicates(), 1);
        assert_eq!(b.build().num_edges(), 1);
    }

    #[test]
    fn features_must_match_rows() {
        assert!(path(3).with_features(DMatrix::zeros(2, 1)).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (1usize..25).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..60).prop_map(move |edges| Graph::from_edges(n, edges).unwrap())
        })
    }

    fn sorted_spectrum(g: &Graph) -> Vec<f64> {
        let mut ev: Vec<f64> = g.laplacian().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    proptest! {
        #[test]
        fn components_partition_vertices(g in arb_graph()) {
            let cc = g.connected_components();
            let mut all: Vec<usize> = cc.blocks().iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..g.num_nodes()).collect::<Vec<_>>());
            let expected = bfs_components(&g);
            prop_assert_eq!(cc.blocks(), expected.as_slice());
        }

        #[test]
        fn induced_edge_count(g in arb_graph(), mask in proptest::collection::vec(any::<bool>(), 25)) {
            let nodes: Vec<usize> = (0..g.num_nodes()).filter(|&v| mask[v]).collect();
            let (sub, _) = g.induced_subgraph(&nodes).unwrap();
            let expected = g.edges().iter().filter(|(u, v)| mask[*u] && mask[*v]).count();
            prop_assert_eq!(sub.num_edges(), expected);
        }

        #[test]
        fn permutation_preserves_invariants(g in arb_graph(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = Permutation::random(g.num_nodes(), &mut rng);
            let h = g.apply_permutation(&p).unwrap();
            let mut dg: Vec<_> = (0..g.num_nodes()).map(|v| g.degree(v)).collect();
            let mut dh: Vec<_> = (0..h.num_nodes()).map(|v| h.degree(v)).collect();
            dg.sort_unstable();
            dh.sort_unstable();
            prop_assert_eq!(dg, dh);
            prop_assert_eq!(g.connected_components().len(), h.connected_components().len());
            for (a, b) in sorted_spectrum(&g).iter().zip(sorted_spectrum(&h)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn laplacian_rows_sum_to_zero(g in arb_graph()) {
            let l = g.laplacian();
            for i in 0..l.nrows() {
                prop_assert!(l.row(i).sum().abs() <= 1e-12);
            }
        }
    }
}
