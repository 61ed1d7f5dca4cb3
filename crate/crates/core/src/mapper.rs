//! The Mapper pipeline on graphs.
//!
//! `pull_back` -> `refine` -> `nerve` (overlap edges) or `sdgm` (structural
//! edges) -> `decorate`. Cluster order is `(cover-set index, min member id)`
//! and defines summary node ids.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cover::Cover;
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, NodeId};
use crate::lens::LensVector;

/// Preimage of one cover set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PullBackSet {
    pub cover_index: usize,
    pub members: Vec<NodeId>,
}

/// Nonempty preimages in cover-set order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PullBackCover {
    pub sets: Vec<PullBackSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clustering {
    /// Split each preimage into the connected components of its induced subgraph.
    #[default]
    Components,
    /// Keep each preimage whole.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub cover_index: usize,
    /// Position among the clusters of the same cover set.
    pub component: usize,
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefinedCover {
    pub clusters: Vec<Cluster>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryMode {
    /// Edges join clusters sharing members; weight is the overlap size.
    Dgm,
    /// Edges come from the normalised cluster adjacency `S^T A S`.
    Sdgm,
}

/// Colour payload of a summary node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Colour {
    MeanLens(Vec<f64>),
    PositiveFraction(f64),
    MajorityClass(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryNode {
    pub id: usize,
    pub members: Vec<NodeId>,
    pub size: usize,
    pub colour: Option<Colour>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryGraph {
    pub mode: SummaryMode,
    pub nodes: Vec<SummaryNode>,
    pub edges: Vec<SummaryEdge>,
}

impl SummaryGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.u, e.v)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapperMode {
    Dgm,
    Sdgm { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapperConfig {
    pub clustering: Clustering,
    pub mode: MapperMode,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            clustering: Clustering::Components,
            mode: MapperMode::Dgm,
        }
    }
}

/// Pull back of `cover` along the lens. Nodes outside every cover set are an error.
pub fn pull_back(graph: &Graph, lens: &LensVector, cover: &Cover) -> Result<PullBackCover> {
    lens.check_len(graph)?;
    if lens.dim() != cover.dim() {
        return Err(invalid(format!(
            "{}-dimensional lens used with a {}-dimensional cover",
            lens.dim(),
            cover.dim()
        )));
    }
    pull_back_points(lens.len(), |v| lens.point(v), cover)
}

/// Pull back over the rows of an arbitrary point matrix (e.g. an assignment
/// matrix against a simplex cover).
pub fn pull_back_rows(rows: &DMatrix<f64>, cover: &Cover) -> Result<PullBackCover> {
    if rows.ncols() != cover.dim() {
        return Err(invalid(format!(
            "points of dimension {} used with a {}-dimensional cover",
            rows.ncols(),
            cover.dim()
        )));
    }
    let points: Vec<Vec<f64>> = rows.row_iter().map(|r| r.iter().copied().collect()).collect();
    pull_back_points(points.len(), |v| &points[v], cover)
}

fn pull_back_points<'a>(n: usize, point: impl Fn(NodeId) -> &'a [f64], cover: &Cover) -> Result<PullBackCover> {
    let mut preimages = vec![Vec::new(); cover.len()];
    let mut outside = Vec::new();
    for v in 0..n {
        let m = cover.membership(point(v))?;
        if m.out_of_range {
            outside.push(v);
        }
        for i in m.sets {
            preimages[i].push(v);
        }
    }
    if !outside.is_empty() {
        return Err(Error::OutOfRange { nodes: outside });
    }
    Ok(PullBackCover {
        sets: preimages
            .into_iter()
            .enumerate()
            .filter(|(_, m)| !m.is_empty())
            .map(|(cover_index, members)| PullBackSet { cover_index, members })
            .collect(),
    })
}

pub fn refine(graph: &Graph, pb: &PullBackCover, clustering: Clustering) -> Result<RefinedCover> {
    let mut clusters = Vec::new();
    for set in &pb.sets {
        match clustering {
            Clustering::None => clusters.push(Cluster {
                cover_index: set.cover_index,
                component: 0,
                members: set.members.clone(),
            }),
            Clustering::Components => {
                let (sub, map) = graph.induced_subgraph(&set.members)?;
                for (component, block) in sub.connected_components().into_blocks().into_iter().enumerate() {
                    clusters.push(Cluster {
                        cover_index: set.cover_index,
                        component,
                        members: block.into_iter().map(|i| map[i]).collect(),
                    });
                }
            }
        }
    }
    Ok(RefinedCover { clusters })
}

fn bare_nodes(rc: &RefinedCover) -> Vec<SummaryNode> {
    rc.clusters
        .iter()
        .enumerate()
        .map(|(id, c)| SummaryNode {
            id,
            members: c.members.clone(),
            size: c.members.len(),
            colour: None,
        })
        .collect()
}

/// For each node, the clusters that contain it.
fn clusters_of(rc: &RefinedCover) -> BTreeMap<NodeId, Vec<usize>> {
    let mut index: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (j, c) in rc.clusters.iter().enumerate() {
        for &v in &c.members {
            index.entry(v).or_default().push(j);
        }
    }
    index
}

/// 1-skeleton of the nerve; edge weight is the number of shared members.
pub fn nerve(rc: &RefinedCover) -> SummaryGraph {
    let mut overlap: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for owners in clusters_of(rc).values() {
        for (a, &x) in owners.iter().enumerate() {
            for &y in &owners[a + 1..] {
                *overlap.entry((x, y)).or_default() += 1;
            }
        }
    }
    SummaryGraph {
        mode: SummaryMode::Dgm,
        nodes: bare_nodes(rc),
        edges: overlap
            .into_iter()
            .map(|((u, v), w)| SummaryEdge { u, v, weight: w as f64 })
            .collect(),
    }
}

/// Sets node colours: mean lens without labels, positive-class fraction for
/// 0/1 labels, otherwise the majority class (ties to the smallest id).
pub fn decorate(mut sg: SummaryGraph, lens: &LensVector, labels: Option<&[u32]>) -> Result<SummaryGraph> {
    let max_member = sg.nodes.iter().flat_map(|n| n.members.iter()).max().copied();
    if let Some(m) = max_member {
        if m >= lens.len() {
            return Err(invalid(format!("summary references node {m} beyond the lens")));
        }
        if let Some(l) = labels {
            if m >= l.len() {
                return Err(invalid(format!("summary references node {m} beyond the labels")));
            }
        }
    }
    let binary = labels.is_some_and(|l| l.iter().all(|&c| c <= 1));
    for node in &mut sg.nodes {
        node.size = node.members.len();
        if node.members.is_empty() {
            node.colour = None;
            continue;
        }
        let count = node.members.len() as f64;
        node.colour = Some(match labels {
            None => Colour::MeanLens(
                (0..lens.dim())
                    .map(|a| node.members.iter().map(|&v| lens.value(v, a)).sum::<f64>() / count)
                    .collect(),
            ),
            Some(l) if binary => {
                Colour::PositiveFraction(node.members.iter().filter(|&&v| l[v] == 1).count() as f64 / count)
            }
            Some(l) => {
                let mut freq: BTreeMap<u32, usize> = BTreeMap::new();
                for &v in &node.members {
                    *freq.entry(l[v]).or_default() += 1;
                }
                let best = freq.values().copied().max().unwrap_or(0);
                let class = freq.into_iter().find(|&(_, c)| c == best).map(|(k, _)| k).unwrap_or(0);
                Colour::MajorityClass(class)
            }
        });
    }
    Ok(sg)
}

/// Soft assignment built from cluster membership: `S[v][j] = 1 / m_v` for
/// each of the `m_v` clusters containing `v`.
pub fn cluster_assignment(num_nodes: usize, rc: &RefinedCover) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(num_nodes, rc.clusters.len());
    for (v, owners) in clusters_of(rc) {
        let share = 1.0 / owners.len() as f64;
        for j in owners {
            s[(v, j)] = share;
        }
    }
    s
}

/// Raw cluster adjacency `S^T A S` with unit self-loops on every node,
/// accumulated over edges without materialising `A`.
pub fn cluster_adjacency(graph: &Graph, rc: &RefinedCover) -> DMatrix<f64> {
    let k = rc.clusters.len();
    let owners = clusters_of(rc);
    let share = |v: NodeId| -> (&[usize], f64) {
        match owners.get(&v) {
            Some(o) => (o.as_slice(), 1.0 / o.len() as f64),
            None => (&[], 0.0),
        }
    };
    let mut w = DMatrix::zeros(k, k);
    for u in 0..graph.num_nodes() {
        let (cu, su) = share(u);
        if cu.is_empty() {
            continue;
        }
        let loop_weight = if graph.has_self_loop(u) {
            graph.weight(u, u)
        } else {
            1.0
        };
        let mut add = |v: NodeId, a: f64| {
            let (cv, sv) = share(v);
            for &x in cu {
                for &y in cv {
                    w[(x, y)] += su * a * sv;
                }
            }
        };
        add(u, loop_weight);
        for &v in graph.neighbors(u) {
            add(v, graph.weight(u, v));
        }
    }
    w
}

/// Structural summary: clusters joined by the max-normalised off-diagonal of
/// `S^T A S`, keeping edges with `w > 0` and `w >= epsilon`.
pub fn sdgm(graph: &Graph, rc: &RefinedCover, epsilon: f64) -> Result<SummaryGraph> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if rc.clusters.is_empty() {
        return Err(invalid("structural summary of an empty refined cover"));
    }
    let w = cluster_adjacency(graph, rc);
    let k = w.nrows();
    let mut max = 0.0f64;
    for x in 0..k {
        for y in x + 1..k {
            max = max.max(w[(x, y)]);
        }
    }
    let mut edges = Vec::new();
    if max > 0.0 {
        for x in 0..k {
            for y in x + 1..k {
                let weight = w[(x, y)] / max;
                if weight > 0.0 && weight >= epsilon {
                    edges.push(SummaryEdge { u: x, v: y, weight });
                }
            }
        }
    }
    Ok(SummaryGraph {
        mode: SummaryMode::Sdgm,
        nodes: bare_nodes(rc),
        edges,
    })
}

/// Full pipeline; labels stored on the graph drive the colouring.
pub fn run_mapper(graph: &Graph, lens: &LensVector, cover: &Cover, cfg: &MapperConfig) -> Result<SummaryGraph> {
    let pb = pull_back(graph, lens, cover)?;
    let rc = refine(graph, &pb, cfg.clustering)?;
    let sg = match cfg.mode {
        MapperMode::Dgm => nerve(&rc),
        MapperMode::Sdgm { epsilon } => sdgm(graph, &rc, epsilon)?,
    };
    decorate(sg, lens, graph.labels())
}
