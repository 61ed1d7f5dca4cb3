//! Per-node lens functions: PageRank, Fiedler vector, RBF graph density and
//! externally supplied values.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, NodeId};

/// Largest graph handed to the dense eigensolver.
pub const FIEDLER_MAX_NODES: usize = 2000;

/// Highest lens dimension accepted; larger parametrisations are rejected.
pub const MAX_LENS_DIM: usize = 3;

/// Column ranges below this (relative to the column magnitude) count as constant.
const CONSTANT_COLUMN_RTOL: f64 = 1e-12;

/// Row-major `N x d` lens values.
#[derive(Debug, Clone, PartialEq)]
pub struct LensVector {
    dim: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl LensVector {
    /// Wraps raw row-major values. `dim` must be in `1..=3`.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_LENS_DIM {
            return Err(invalid(format!("lens dimension {dim} outside 1..={MAX_LENS_DIM}")));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(invalid("lens value count is not a multiple of its dimension"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("lens contains non-finite value {bad}")));
        }
        Ok(Self {
            dim,
            values,
            normalized: false,
        })
    }

    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let values = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        Self::new(m.ncols(), values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn point(&self, v: NodeId) -> &[f64] {
        &self.values[v * self.dim..(v + 1) * self.dim]
    }

    pub fn value(&self, v: NodeId, axis: usize) -> f64 {
        self.values[v * self.dim + axis]
    }

    pub fn column(&self, axis: usize) -> Vec<f64> {
        (0..self.len()).map(|v| self.value(v, axis)).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.values)
    }

    /// `(min, max)` of each column. Empty lenses yield `(0, 0)`.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|axis| {
                let col = self.column(axis);
                if col.is_empty() {
                    return (0.0, 0.0);
                }
                col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                })
            })
            .collect()
    }

    /// Per-column min-max map onto `[0, 1]`; constant columns become 0.5.
    pub fn normalize(mut self) -> Self {
        let ranges = self.column_ranges();
        let n = self.len();
        for (axis, &(lo, hi)) in ranges.iter().enumerate() {
            let span = hi - lo;
            let constant = span <= CONSTANT_COLUMN_RTOL * hi.abs().max(lo.abs()).max(1.0);
            for v in 0..n {
                let x = &mut self.values[v * self.dim + axis];
                *x = if constant {
                    0.5
                } else {
                    ((*x - lo) / span).clamp(0.0, 1.0)
                };
            }
        }
        self.normalized = true;
        self
    }

    pub(crate) fn check_len(&self, graph: &Graph) -> Result<()> {
        if self.len() != graph.num_nodes() {
            return Err(invalid(format!(
                "lens has {} rows, graph has {} nodes",
                self.len(),
                graph.num_nodes()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    /// Probability of following an edge rather than teleporting.
    pub alpha: f64,
    /// L1 change between successive iterates at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Raw PageRank scores by power iteration (sum to 1).
///
/// Walks follow edges proportionally to their weight; self-loops count as
/// ordinary neighbours. Nodes without edges teleport uniformly.
pub fn pagerank_scores(graph: &Graph, cfg: &PageRankConfig) -> Result<Vec<f64>> {
    let n = graph.num_nodes();
    if n == 0 {
        return Err(invalid("PageRank of an empty graph"));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(invalid(format!("alpha {} outside [0, 1]", cfg.alpha)));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(invalid("tolerance must be positive"));
    }

    let out_weight: Vec<f64> = (0..n)
        .map(|v| {
            let loops = graph.weight(v, v);
            graph.neighbors(v).iter().map(|&u| graph.weight(v, u)).sum::<f64>() + loops
        })
        .collect();
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for _ in 0..cfg.max_iter {
        let dangling: f64 = (0..n).filter(|&v| out_weight[v] <= 0.0).map(|v| rank[v]).sum();
        let base = (1.0 - cfg.alpha) / nf + cfg.alpha * dangling / nf;
        for (i, slot) in next.iter_mut().enumerate() {
            let mut inflow = 0.0;
            for &j in graph.neighbors(i) {
                inflow += graph.weight(i, j) * rank[j] / out_weight[j];
            }
            if graph.has_self_loop(i) {
                inflow += graph.weight(i, i) * rank[i] / out_weight[i];
            }
            *slot = base + cfg.alpha * inflow;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < cfg.tol {
            return Ok(rank);
        }
    }
    Err(Error::Convergence {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Min-max normalised PageRank lens.
pub fn pagerank_lens(graph: &Graph, cfg: &PageRankConfig) -> Result<LensVector> {
    Ok(LensVector::from_scalars(pagerank_scores(graph, cfg)?)?.normalize())
}

/// Fiedler pair `(lambda_2, l_2)` of the combinatorial Laplacian.
///
/// `l_2` has unit norm, is orthogonal to the all-ones vector, and its first
/// entry with magnitude above 1e-12 is positive.
pub fn fiedler_vector(graph: &Graph) -> Result<(f64, DVector<f64>)> {
    let n = graph.num_nodes();
    if n < 2 {
        return Err(Error::Domain("Fiedler vector needs at least two nodes".into()));
    }
    if n > FIEDLER_MAX_NODES {
        return Err(invalid(format!(
            "dense eigensolver limited to {FIEDLER_MAX_NODES} nodes, graph has {n}"
        )));
    }
    if !graph.is_connected() {
        return Err(Error::Domain("Fiedler lens requires a connected graph".into()));
    }
    let eig = SymmetricEigen::try_new(graph.laplacian(), f64::EPSILON, 100_000).ok_or(Error::Convergence {
        iterations: 100_000,
        residual: f64::NAN,
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let idx = order[1];
    let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    let mean = v.mean();
    v.add_scalar_mut(-mean);
    let norm = v.norm();
    v /= norm;
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    Ok((eig.eigenvalues[idx], v))
}

/// Fiedler vector as an unnormalised 1-d lens.
pub fn fiedler_lens(graph: &Graph) -> Result<LensVector> {
    let (_, v) = fiedler_vector(graph)?;
    LensVector::from_scalars(v.iter().copied().collect())
}

/// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
pub fn bfs_distances(graph: &Graph, source: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.num_nodes()];
    let mut queue = std::collections::VecDeque::from([source]);
    dist[source] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Raw RBF graph density `f(v) = sum_u exp(-d(u, v) / delta)` with hop distances.
pub fn density_scores(graph: &Graph, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    if graph.is_empty() {
        return Err(invalid("density lens of an empty graph"));
    }
    if !graph.is_connected() {
        return Err(Error::Domain("density lens requires a connected graph".into()));
    }
    Ok((0..graph.num_nodes())
        .into_par_iter()
        .map(|v| {
            bfs_distances(graph, v)
                .into_iter()
                .map(|d| (-(d as f64) / delta).exp())
                .sum()
        })
        .collect())
}

/// Min-max normalised RBF graph density lens.
pub fn density_lens(graph: &Graph, delta: f64) -> Result<LensVector> {
    Ok(LensVector::from_scalars(density_scores(graph, delta)?)?.normalize())
}

/// Lens from externally computed values, one row per node.
pub fn external_lens(graph: &Graph, values: &DMatrix<f64>, normalize: bool) -> Result<LensVector> {
    if values.nrows() != graph.num_nodes() {
        return Err(invalid(format!(
            "lens matrix has {} rows, graph has {} nodes",
            values.nrows(),
            graph.num_nodes()
        )));
    }
    let lens = LensVector::from_matrix(values)?;
    Ok(if normalize { lens.normalize() } else { lens })
}

/// Parses the lens text format: header `d N`, then `N` lines `node_id v1 [v2 [v3]]`.
///
/// Rows may appear in any order but every id in `0..N` must occur exactly once.
/// Blank lines and `#` comments are ignored.
pub fn parse_lens(text: &str) -> Result<LensVector> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing `d N` header".into(),
    })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    if head.len() != 2 {
        return Err(parse_err(hline, "header must be `d N`".into()));
    }
    let dim: usize = head[0]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad dimension `{}`", head[0])))?;
    let n: usize = head[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad node count `{}`", head[1])))?;
    if dim == 0 || dim > MAX_LENS_DIM {
        return Err(parse_err(hline, format!("dimension {dim} outside 1..={MAX_LENS_DIM}")));
    }
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut count = 0;
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad node id `{}`", fields[0])))?;
        if id >= n {
            return Err(parse_err(line, format!("node id {id} outside 0..{n}")));
        }
        let vals = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad value `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if rows[id].replace(vals).is_some() {
            return Err(parse_err(line, format!("duplicate node id {id}")));
        }
        count += 1;
    }
    if count != n {
        return Err(invalid(format!("lens file declares {n} rows but has {count}")));
    }
    LensVector::new(dim, rows.into_iter().flatten().flatten().collect())
}

pub fn format_lens(lens: &LensVector) -> String {
    let mut out = format!("{} {}\n", lens.dim(), lens.len());
    for v in 0..lens.len() {
        let _ = write!(out, "{v}");
        for x in lens.point(v) {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
    }

    fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).unwrap()
    }

    #[test]
    fn regular_graph_pagerank_is_uniform() {
        let scores = pagerank_scores(&cycle(7), &PageRankConfig::default()).unwrap();
        for s in scores {
            assert_abs_diff_eq!(s, 1.0 / 7.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn path_pagerank_matches_linear_solve() {
        // Solving x = 0.15/3 + 0.85 M x by hand: a = 0.07125 / 0.2775, b = 0.05 + 1.7 a.
        let a = 0.07125 / 0.2775;
        let b = 0.05 + 1.7 * a;
        let s = pagerank_scores(&path(3), &PageRankConfig::default()).unwrap();
        assert_abs_diff_eq!(s[0], a, epsilon = 1e-9);
        assert_abs_diff_eq!(s[1], b, epsilon = 1e-9);
        assert_abs_diff_eq!(s[2], a, epsilon = 1e-9);
        assert_abs_diff_eq!(s[0], 0.2568, epsilon = 1e-3);
        assert_abs_diff_eq!(s[1], 0.4865, epsilon = 1e-3);
    }

    #[test]
    fn path_pagerank_lens_normalizes() {
        let lens = pagerank_lens(&path(3), &PageRankConfig::default()).unwrap();
        assert_eq!(lens.column(0), vec![0.0, 1.0, 0.0]);
        assert!(lens.is_normalized());
    }

    #[test]
    fn dangling_nodes_teleport() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let s = pagerank_scores(&g, &PageRankConfig::default()).unwrap();
        assert_abs_diff_eq!(s.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(s[2] < s[0]);
    }

    #[test]
    fn pagerank_reports_non_convergence() {
        let cfg = PageRankConfig {
            max_iter: 2,
            ..Default::default()
        };
        match pagerank_scores(&path(5), &cfg) {
            Err(Error::Convergence { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn pagerank_rejects_bad_alpha() {
        let cfg = PageRankConfig {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(pagerank_scores(&path(3), &cfg).is_err());
        assert!(pagerank_scores(&Graph::empty(0), &PageRankConfig::default()).is_err());
    }

    #[test]
    fn fiedler_single_edge() {
        let lens = fiedler_lens(&path(2)).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(lens.value(0, 0), c, epsilon = 1e-10);
        assert_abs_diff_eq!(lens.value(1, 0), -c, epsilon = 1e-10);
        assert!(!lens.is_normalized());
    }

    #[test]
    fn fiedler_path_of_three() {
        let (lambda, v) = fiedler_vector(&path(3)).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(lambda, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[0], c, epsilon = 1e-10);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v[2], -c, epsilon = 1e-10);
    }

    #[test]
    fn fiedler_complete_graph_eigenvalue() {
        let g = complete(4);
        let (lambda, v) = fiedler_vector(&g).unwrap();
        assert_abs_diff_eq!(lambda, 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        assert!(v.sum().abs() < 1e-8);
        let residual = (g.laplacian() * &v - &v * lambda).norm();
        assert!(residual < 1e-6);
    }

    #[test]
    fn fiedler_rejects_disconnected() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(fiedler_lens(&g), Err(Error::Domain(_))));
        assert!(matches!(fiedler_lens(&Graph::empty(1)), Err(Error::Domain(_))));
    }

    #[test]
    fn density_single_edge() {
        let s = density_scores(&path(2), 1.0).unwrap();
        let expected = 1.0 + (-1.0f64).exp();
        assert_abs_diff_eq!(s[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s[0], 1.3679, epsilon = 1e-4);
    }

    #[test]
    fn density_star_center_dominates() {
        let s = density_scores(&star(3), 1.0).unwrap();
        let e = |k: f64| (-k).exp();
        assert_abs_diff_eq!(s[0], 1.0 + 3.0 * e(1.0), epsilon = 1e-12);
        for &leaf in &s[1..4] {
            assert_abs_diff_eq!(leaf, 1.0 + e(1.0) + 2.0 * e(2.0), epsilon = 1e-12);
        }
        assert!(s[0] > s[1]);
    }

    #[test]
    fn density_vertex_transitive_is_constant() {
        let s = density_scores(&cycle(9), 2.0).unwrap();
        assert!(s.iter().all(|&x| (x - s[0]).abs() < 1e-12));
        let lens = density_lens(&cycle(9), 2.0).unwrap();
        assert!(lens.column(0).iter().all(|&x| x == 0.5));
    }

    #[test]
    fn density_rejects_disconnected_and_bad_delta() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(matches!(density_lens(&g, 1.0), Err(Error::Domain(_))));
        assert!(density_lens(&path(3), 0.0).is_err());
    }

    #[test]
    fn external_lens_affine_normalization() {
        let g = path(3);
        let m = DMatrix::from_row_slice(3, 1, &[0.1, 0.5, 0.9]);
        let lens = external_lens(&g, &m, true).unwrap();
        let col = lens.column(0);
        assert_abs_diff_eq!(col[0], 0.0);
        assert_abs_diff_eq!(col[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(col[2], 1.0);
    }

    #[test]
    fn external_lens_constant_column() {
        let m = DMatrix::from_element(3, 1, 4.2);
        let lens = external_lens(&path(3), &m, true).unwrap();
        assert_eq!(lens.column(0), vec![0.5; 3]);
    }

    #[test]
    fn external_lens_passthrough() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 3.0, 4.5, -7.0, 0.25]);
        let lens = external_lens(&path(3), &m, false).unwrap();
        assert_eq!(lens.to_matrix(), m);
    }

    #[test]
    fn external_lens_validation() {
        assert!(external_lens(&path(3), &DMatrix::zeros(2, 1), false).is_err());
        assert!(external_lens(&path(3), &DMatrix::zeros(3, 4), false).is_err());
    }

    #[test]
    fn lens_text_round_trip() {
        let lens = LensVector::new(2, vec![0.1, 0.2, 1e-17, -3.5, 2.0, 0.0]).unwrap();
        assert_eq!(parse_lens(&format_lens(&lens)).unwrap(), lens);
    }

    #[test]
    fn lens_text_rejects_malformed() {
        assert!(parse_lens("").is_err());
        assert!(parse_lens("4 1\n0 1 2 3 4\n").is_err());
        assert!(parse_lens("1 2\n0 0.5\n0 0.7\n").is_err());
        assert!(parse_lens("1 2\n0 0.5\n").is_err());
        match parse_lens("1 2\n0 0.5\n1 abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let unordered = parse_lens("# comment\n1 2\n1 0.7\n0 0.5\n").unwrap();
        assert_eq!(unordered.column(0), vec![0.5, 0.7]);
    }

    #[test]
    fn lens_text_trailing_comments() {
        let lens = parse_lens("2 2    # d N\n0 0.1 0.9  # first\n1 0.4 0.2\n").unwrap();
        assert_eq!(lens.point(0), &[0.1, 0.9]);
    }
}
