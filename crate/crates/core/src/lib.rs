//! Mapper summaries of graphs and Mapper-based graph pooling.
//!
//! A lens maps each node to a point in `R^d`, a cover of the lens range is
//! pulled back to node sets, the sets are split into connected components,
//! and the resulting clusters become the nodes of a summary graph. The same
//! clusters, read as a soft assignment matrix `S`, coarsen a graph to
//! `S^T A S` for pooling.

pub mod cover;
pub mod dot;
pub mod error;
pub mod graph;
pub mod io;
pub mod lens;
pub mod mapper;
pub mod pooling;
pub mod random;
pub mod theory;

pub use cover::{AxisCover, Cover, CoverKind, Interval, Membership};
pub use dot::{export_dot, Colormap};
pub use error::{Error, Result};
pub use graph::{Graph, GraphBuilder, NodeId, NodePartition, Permutation};
pub use lens::{LensVector, PageRankConfig};
pub use mapper::{
    Clustering, Colour, MapperConfig, MapperMode, RefinedCover, SummaryEdge, SummaryGraph, SummaryMode, SummaryNode,
};
pub use pooling::{mpr_pool, AssignmentMatrix, MprConfig, PooledGraph};
