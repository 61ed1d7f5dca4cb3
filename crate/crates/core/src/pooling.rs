//! Soft-cluster pooling and the PageRank-based Mapper pooling operator.
//!
//! A row-stochastic assignment `S` (nodes x clusters) coarsens a graph via
//! `A' = S^T A S` and `X' = S^T X`. MPR pooling derives `S` from interval
//! preimages of normalised PageRank, splitting each node evenly over the
//! intervals that contain it.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::cover::AxisCover;
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::lens::{pagerank_lens, LensVector, PageRankConfig};

const ROW_SUM_TOL: f64 = 1e-9;

/// Row-stochastic `N x K` soft cluster assignment without empty columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    s: DMatrix<f64>,
    /// Originating cover-set (or input column) index of each column.
    provenance: Vec<usize>,
}

impl AssignmentMatrix {
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        let provenance = (0..s.ncols()).collect();
        Self::with_provenance(s, provenance)
    }

    pub fn with_provenance(s: DMatrix<f64>, provenance: Vec<usize>) -> Result<Self> {
        if provenance.len() != s.ncols() {
            return Err(invalid("provenance length differs from column count"));
        }
        if s.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(invalid("assignment entries must be finite and non-negative"));
        }
        for (i, row) in s.row_iter().enumerate() {
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(invalid(format!("assignment row {i} sums to {sum}, not 1")));
            }
        }
        if let Some(j) = (0..s.ncols()).find(|&j| s.column(j).iter().all(|&x| x == 0.0)) {
            return Err(invalid(format!("assignment column {j} is empty")));
        }
        Ok(Self { s, provenance })
    }

    /// Drops all-zero columns, then validates. Provenance keeps the original
    /// column indices.
    pub fn dropping_empty(s: &DMatrix<f64>) -> Result<Self> {
        let kept: Vec<usize> = (0..s.ncols())
            .filter(|&j| s.column(j).iter().any(|&x| x != 0.0))
            .collect();
        Self::with_provenance(s.select_columns(kept.iter()), kept)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn provenance(&self) -> &[usize] {
        &self.provenance
    }

    pub fn num_nodes(&self) -> usize {
        self.s.nrows()
    }

    pub fn num_clusters(&self) -> usize {
        self.s.ncols()
    }

    /// Sparse triplet text: a `# N K` comment, then `i j value` per nonzero.
    pub fn to_triplets(&self) -> String {
        let mut out = format!("# {} {}\n", self.s.nrows(), self.s.ncols());
        for i in 0..self.s.nrows() {
            for j in 0..self.s.ncols() {
                let x = self.s[(i, j)];
                if x != 0.0 {
                    let _ = writeln!(out, "{i} {j} {x}");
                }
            }
        }
        out
    }
}

/// Pooled graph: cluster adjacency, cluster features, and the assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledGraph {
    pub adjacency: DMatrix<f64>,
    pub features: DMatrix<f64>,
    pub assignment: AssignmentMatrix,
}

impl PooledGraph {
    /// Cover-set index of each pooled node.
    pub fn provenance(&self) -> &[usize] {
        self.assignment.provenance()
    }
}

/// Assignment from a normalised 1-d lens over an interval cover of `[0, 1]`:
/// `S[i][j] = 1 / m_i` when node `i` lies in interval `j`, where `m_i` counts
/// the intervals containing it. Empty intervals are dropped.
pub fn mpr_assignment(lens: &LensVector, cover: &AxisCover) -> Result<AssignmentMatrix> {
    if lens.dim() != 1 {
        return Err(invalid("pooling assignment needs a 1-dimensional lens"));
    }
    let n = lens.len();
    let mut s = DMatrix::zeros(n, cover.len());
    let mut uncovered = Vec::new();
    for v in 0..n {
        let sets = cover.membership(lens.value(v, 0));
        if sets.is_empty() {
            uncovered.push(v);
            continue;
        }
        let share = 1.0 / sets.len() as f64;
        for j in sets {
            s[(v, j)] = share;
        }
    }
    if !uncovered.is_empty() {
        return Err(Error::OutOfRange { nodes: uncovered });
    }
    AssignmentMatrix::dropping_empty(&s)
}

/// `S^T A S`, exactly symmetric when `A` is.
pub fn pool_adjacency(a: &DMatrix<f64>, s: &AssignmentMatrix) -> Result<DMatrix<f64>> {
    let n = s.num_nodes();
    if a.nrows() != n || a.ncols() != n {
        return Err(invalid(format!(
            "adjacency is {}x{}, assignment has {n} rows",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(sandwich(a, s.matrix()))
}

pub(crate) fn sandwich(a: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = s.transpose() * (a * s);
    let k = out.nrows();
    for i in 0..k {
        for j in i + 1..k {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

/// Cluster features `S^T X`.
pub fn pool_features(x: &DMatrix<f64>, s: &AssignmentMatrix) -> Result<DMatrix<f64>> {
    if x.nrows() != s.num_nodes() {
        return Err(invalid(format!(
            "feature matrix has {} rows, assignment has {}",
            x.nrows(),
            s.num_nodes()
        )));
    }
    Ok(s.matrix().tr_mul(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MprConfig {
    /// Number of intervals over `[0, 1]`.
    pub intervals: usize,
    pub overlap: f64,
    pub pagerank: PageRankConfig,
}

impl Default for MprConfig {
    fn default() -> Self {
        Self {
            intervals: 5,
            overlap: 0.2,
            pagerank: PageRankConfig::default(),
        }
    }
}

/// MPR pooling. Missing self-loops are added first; a graph without features
/// pools a column of ones (so `X'` holds cluster masses).
pub fn mpr_pool(graph: &Graph, cfg: &MprConfig) -> Result<PooledGraph> {
    let g = if graph.has_all_self_loops() {
        graph.clone()
    } else {
        log::debug!("adding unit self-loops before pooling");
        graph.with_self_loops()
    };
    let lens = pagerank_lens(&g, &cfg.pagerank)?;
    let cover = AxisCover::uniform(cfg.intervals, cfg.overlap, 0.0, 1.0)?;
    let assignment = mpr_assignment(&lens, &cover)?;
    let adjacency = pool_adjacency(&g.adjacency_matrix(), &assignment)?;
    let ones;
    let x = match g.features() {
        Some(x) => x,
        None => {
            ones = DMatrix::from_element(g.num_nodes(), 1, 1.0);
            &ones
        }
    };
    let features = pool_features(x, &assignment)?;
    Ok(PooledGraph {
        adjacency,
        features,
        assignment,
    })
}
