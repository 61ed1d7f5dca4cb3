//! Executable checks of the structural claims behind Mapper pooling:
//!
//! * soft-cluster equivalence: the nerve of the pull back of the 1-hop
//!   expanded assignment on the expanded graph has the same edges as the
//!   support of `S^T A S`;
//! * spectral bipartition: Mapper with the Fiedler lens and the cover
//!   `{(-inf, eps), (-eps, inf)}` returns the sign partition of `l_2`;
//! * permutation invariance of MPR pooling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{AxisCover, Cover, Interval};
use crate::error::{invalid, Result};
use crate::graph::{Graph, GraphBuilder, NodeId, Permutation};
use crate::lens::fiedler_vector;
use crate::mapper::{nerve, pull_back, pull_back_rows, refine, Clustering};
use crate::pooling::{mpr_pool, sandwich, AssignmentMatrix, MprConfig};
use crate::random;

/// Below this magnitude a Fiedler entry counts as zero and the spectral check is skipped.
pub const FIEDLER_ZERO_TOL: f64 = 1e-9;

/// Pooled matrices must agree within this bound under relabelling.
pub const PERMUTATION_TOL: f64 = 1e-9;

/// Each node replaced by a clique with one member per external edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedGraph {
    /// Expanded graph, carrying a self-loop on every node.
    pub graph: Graph,
    clique_of: Vec<Vec<NodeId>>,
    origin_of: Vec<NodeId>,
}

impl ExpandedGraph {
    pub fn clique_of(&self, v: NodeId) -> &[NodeId] {
        &self.clique_of[v]
    }

    pub fn origin_of(&self, x: NodeId) -> NodeId {
        self.origin_of[x]
    }
}

/// Builds the expanded graph.
///
/// A node with `e >= 1` external edges becomes an `e`-clique; an isolated node
/// becomes two nodes joined by an edge. External edges of `v` are taken in
/// ascending neighbour order and matched to clique members in order, so each
/// clique member carries at most one external edge.
pub fn expand_graph(g: &Graph) -> ExpandedGraph {
    let mut clique_of = Vec::with_capacity(g.num_nodes());
    let mut origin_of = Vec::new();
    for v in 0..g.num_nodes() {
        let size = g.degree(v).max(if g.degree(v) == 0 { 2 } else { 1 });
        let start = origin_of.len();
        origin_of.extend(std::iter::repeat_n(v, size));
        clique_of.push((start..start + size).collect::<Vec<_>>());
    }
    let mut b = GraphBuilder::new(origin_of.len());
    let mut add = |x: NodeId, y: NodeId| {
        b.add_edge(x, y).expect("expanded ids in range");
    };
    for clique in &clique_of {
        for (i, &x) in clique.iter().enumerate() {
            add(x, x);
            for &y in &clique[i + 1..] {
                add(x, y);
            }
        }
    }
    for u in 0..g.num_nodes() {
        for (slot_u, &v) in g.neighbors(u).iter().enumerate() {
            if v > u {
                let slot_v = g.neighbors(v).binary_search(&u).expect("symmetric adjacency");
                add(clique_of[u][slot_u], clique_of[v][slot_v]);
            }
        }
    }
    ExpandedGraph {
        graph: b.build(),
        clique_of,
        origin_of,
    }
}

/// Every expanded node inherits the assignment row of its origin.
pub fn expand_assignment(s: &AssignmentMatrix, eg: &ExpandedGraph) -> Result<AssignmentMatrix> {
    if s.num_nodes() != eg.clique_of.len() {
        return Err(invalid(format!(
            "assignment has {} rows, original graph has {} nodes",
            s.num_nodes(),
            eg.clique_of.len()
        )));
    }
    let rows = s.matrix().select_rows(eg.origin_of.iter());
    AssignmentMatrix::with_provenance(rows, s.provenance().to_vec())
}

/// Row-normalised `A S`. Requires every row of `A S` to have positive mass.
pub fn one_hop_expansion(a: &DMatrix<f64>, s: &AssignmentMatrix) -> Result<AssignmentMatrix> {
    if a.nrows() != s.num_nodes() || a.ncols() != s.num_nodes() {
        return Err(invalid("adjacency and assignment sizes differ"));
    }
    let mut spread = a * s.matrix();
    for (i, mut row) in spread.row_iter_mut().enumerate() {
        let total = row.sum();
        if total.is_nan() || total <= 0.0 {
            return Err(invalid(format!("row {i} of A S has no mass; add self-loops")));
        }
        row /= total;
    }
    AssignmentMatrix::with_provenance(spread, s.provenance().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftClusterReport {
    pub holds: bool,
    /// Clusters remaining after empty columns are dropped.
    pub clusters: usize,
    pub nerve_edges: Vec<(usize, usize)>,
    pub pooled_support: Vec<(usize, usize)>,
}

/// Compares the off-diagonal support of `S^T A S` with the nerve obtained
/// through the expanded graph. Self-loops are added to `g` and empty columns
/// of `s` dropped before either route runs; clusters are matched by column.
pub fn verify_soft_cluster_equivalence(g: &Graph, s: &DMatrix<f64>) -> Result<SoftClusterReport> {
    if s.nrows() != g.num_nodes() {
        return Err(invalid("assignment rows differ from node count"));
    }
    let g = g.with_self_loops();
    let s = AssignmentMatrix::dropping_empty(s)?;
    let k = s.num_clusters();

    let pooled = sandwich(&g.adjacency_matrix(), s.matrix());
    let mut pooled_support = Vec::new();
    for x in 0..k {
        for y in x + 1..k {
            if pooled[(x, y)] != 0.0 {
                pooled_support.push((x, y));
            }
        }
    }

    let eg = expand_graph(&g);
    let expanded = expand_assignment(&s, &eg)?;
    let hop = one_hop_expansion(&eg.graph.adjacency_matrix(), &expanded)?;
    let pb = pull_back_rows(hop.matrix(), &Cover::simplex(k)?)?;
    // every column is nonempty, so pull back set i is cluster i
    debug_assert!(pb.sets.iter().enumerate().all(|(i, set)| set.cover_index == i));
    let rc = refine(&eg.graph, &pb, Clustering::None)?;
    let nerve_edges = nerve(&rc).edge_pairs();

    Ok(SoftClusterReport {
        holds: nerve_edges == pooled_support,
        clusters: k,
        nerve_edges,
        pooled_support,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub holds: bool,
    /// Reason the check did not run, if it was skipped.
    pub skipped: Option<String>,
    pub epsilon: f64,
    pub mapper_partition: Vec<Vec<NodeId>>,
    pub sign_partition: Vec<Vec<NodeId>>,
}

/// Runs Mapper with the Fiedler lens and the two-interval cover at
/// `eps = min |l_2| / 2` and compares the preimages with the sign partition.
pub fn verify_spectral_bipartition(g: &Graph) -> Result<SpectralReport> {
    let (_, l2) = fiedler_vector(g)?;
    let min_abs = l2.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    let negative: Vec<NodeId> = (0..l2.len()).filter(|&v| l2[v] < 0.0).collect();
    let positive: Vec<NodeId> = (0..l2.len()).filter(|&v| l2[v] > 0.0).collect();
    let sign_partition = vec![negative, positive];
    if min_abs <= FIEDLER_ZERO_TOL {
        return Ok(SpectralReport {
            holds: false,
            skipped: Some(format!("Fiedler vector has an entry of magnitude {min_abs:e}")),
            epsilon: 0.0,
            mapper_partition: vec![],
            sign_partition,
        });
    }
    let epsilon = min_abs / 2.0;
    let cover = Cover::Intervals(AxisCover::from_intervals(vec![
        Interval::new(f64::NEG_INFINITY, epsilon),
        Interval::new(-epsilon, f64::INFINITY),
    ])?);
    let lens = crate::lens::LensVector::from_scalars(l2.iter().copied().collect())?;
    let pb = pull_back(g, &lens, &cover)?;
    let mapper_partition: Vec<Vec<NodeId>> = refine(g, &pb, Clustering::None)?
        .clusters
        .into_iter()
        .map(|c| c.members)
        .collect();
    Ok(SpectralReport {
        holds: mapper_partition == sign_partition,
        skipped: None,
        epsilon,
        mapper_partition,
        sign_partition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationViolation {
    pub permutation: Vec<usize>,
    /// Largest entrywise difference; infinite when the pooled shapes differ.
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationReport {
    pub holds: bool,
    pub trials: usize,
    pub violations: Vec<PermutationViolation>,
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    (a - b).amax()
}

/// Pools `g` and `trials` random relabellings of it and compares the pooled
/// adjacency and features entrywise.
pub fn verify_permutation_invariance<R: Rng + ?Sized>(
    g: &Graph,
    trials: usize,
    cfg: &MprConfig,
    rng: &mut R,
) -> Result<PermutationReport> {
    let base = mpr_pool(g, cfg)?;
    let mut violations = Vec::new();
    for _ in 0..trials {
        let p = Permutation::random(g.num_nodes(), rng);
        let pooled = mpr_pool(&g.apply_permutation(&p)?, cfg)?;
        let diff = max_diff(&base.adjacency, &pooled.adjacency).max(max_diff(&base.features, &pooled.features));
        if diff.is_nan() || diff > PERMUTATION_TOL {
            violations.push(PermutationViolation {
                permutation: p.as_slice().to_vec(),
                max_abs_diff: diff,
            });
        }
    }
    Ok(PermutationReport {
        holds: violations.is_empty(),
        trials,
        violations,
    })
}

/// The three checks runnable in batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    SpectralBipartition,
    SoftClusterEquivalence,
    PermutationInvariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig {
    /// Instances that must be checked (skipped spectral draws do not count).
    pub instances: usize,
    pub max_nodes: usize,
    /// Upper bound on clusters for the soft-cluster check.
    pub max_clusters: usize,
    /// Relabellings per graph for the permutation check.
    pub trials: usize,
    pub seed: u64,
}

impl BatchConfig {
    pub fn for_property(property: Property) -> Self {
        let (instances, max_nodes) = match property {
            Property::SpectralBipartition => (50, 60),
            Property::SoftClusterEquivalence => (200, 8),
            Property::PermutationInvariance => (100, 30),
        };
        Self {
            instances,
            max_nodes,
            max_clusters: 4,
            trials: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub instance: usize,
    pub nodes: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub property: Property,
    pub seed: u64,
    pub instances: usize,
    pub passed: usize,
    pub skipped: usize,
    pub failures: Vec<InstanceFailure>,
}

impl BatchReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty() && self.passed == self.instances
    }
}

fn instance_rng(seed: u64, instance: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance as u64);
    rng
}

/// Runs one property over seeded random instances. Instance `i` draws from
/// stream `i` of a ChaCha generator seeded with `cfg.seed`, so results do not
/// depend on scheduling.
pub fn run_batch(property: Property, cfg: &BatchConfig) -> Result<BatchReport> {
    if cfg.max_nodes == 0 || cfg.max_clusters == 0 {
        return Err(invalid("max nodes and max clusters must be positive"));
    }
    let outcomes: Vec<Result<(bool, bool, usize, String)>> = match property {
        Property::SoftClusterEquivalence => (0..cfg.instances)
            .into_par_iter()
            .map(|i| {
                let mut rng = instance_rng(cfg.seed, i);
                let n = rng.random_range(1..=cfg.max_nodes);
                let k = rng.random_range(1..=cfg.max_clusters);
                let p = rng.random_range(0.1..0.7);
                let g = random::erdos_renyi(n, p, &mut rng).with_self_loops();
                let s = random::soft_assignment(n, k, 0.3, &mut rng);
                let r = verify_soft_cluster_equivalence(&g, &s)?;
                let detail = format!("nerve {:?} vs support {:?}", r.nerve_edges, r.pooled_support);
                Ok((r.holds, false, n, detail))
            })
            .collect(),
        Property::PermutationInvariance => (0..cfg.instances)
            .into_par_iter()
            .map(|i| {
                let mut rng = instance_rng(cfg.seed, i);
                let n = rng.random_range(1..=cfg.max_nodes);
                let p = rng.random_range(0.05..0.5);
                let intervals = rng.random_range(1..=10);
                let overlap = [0.0, 0.1, 0.2, 0.3, 0.4][rng.random_range(0..5)];
                let x = random::features(n, 3, &mut rng);
                let g = random::erdos_renyi(n, p, &mut rng).with_features(x)?;
                let mpr = MprConfig {
                    intervals,
                    overlap,
                    ..Default::default()
                };
                let r = verify_permutation_invariance(&g, cfg.trials, &mpr, &mut rng)?;
                let detail = format!("{:?}", r.violations);
                Ok((r.holds, false, n, detail))
            })
            .collect(),
        Property::SpectralBipartition => {
            // draws until enough instances have a Fiedler vector without zero entries
            let mut out = Vec::new();
            let mut checked = 0;
            let mut draw = 0;
            while checked < cfg.instances && draw < cfg.instances.saturating_mul(50) {
                let mut rng = instance_rng(cfg.seed, draw);
                draw += 1;
                let n = rng.random_range(2..=cfg.max_nodes.max(2));
                let p = rng.random_range(0.0..0.3);
                let g = random::connected_graph(n, p, &mut rng);
                let r = verify_spectral_bipartition(&g)?;
                let skipped = r.skipped.is_some();
                if !skipped {
                    checked += 1;
                }
                let detail = format!("mapper {:?} vs sign {:?}", r.mapper_partition, r.sign_partition);
                out.push(Ok((r.holds, skipped, n, detail)));
            }
            out
        }
    };

    let mut report = BatchReport {
        property,
        seed: cfg.seed,
        instances: cfg.instances,
        passed: 0,
        skipped: 0,
        failures: Vec::new(),
    };
    for (instance, outcome) in outcomes.into_iter().enumerate() {
        let (holds, skipped, nodes, detail) = outcome?;
        if skipped {
            report.skipped += 1;
        } else if holds {
            report.passed += 1;
        } else {
            report.failures.push(InstanceFailure {
                instance,
                nodes,
                detail,
            });
        }
    }
    Ok(report)
}
