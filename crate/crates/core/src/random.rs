//! Seeded random instance generators used by the verifiers, tests and benches.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::graph::{Graph, GraphBuilder};

/// G(n, p) without self-loops.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut b = GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                b.add_edge(u, v).expect("ids in range");
            }
        }
    }
    b.build()
}

/// Random spanning tree (each node attaches to a uniformly chosen earlier
/// node) overlaid with G(n, p) edges. Always connected for `n >= 1`.
pub fn connected_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut b = GraphBuilder::new(n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        b.add_edge(u, v).expect("ids in range");
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                b.add_edge(u, v).expect("ids in range");
            }
        }
    }
    b.build()
}

/// Planted-partition graph; returns the graph and each node's block id.
pub fn planted_partition<R: Rng + ?Sized>(sizes: &[usize], p_in: f64, p_out: f64, rng: &mut R) -> (Graph, Vec<u32>) {
    let blocks: Vec<u32> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b as u32, s))
        .collect();
    let n = blocks.len();
    let mut b = GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..n {
            let p = if blocks[u] == blocks[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                b.add_edge(u, v).expect("ids in range");
            }
        }
    }
    (b.build(), blocks)
}

/// Row-stochastic `n x k` matrix: rows uniform on the simplex, a
/// `hard_fraction` of them replaced by one-hot rows.
pub fn soft_assignment<R: Rng + ?Sized>(n: usize, k: usize, hard_fraction: f64, rng: &mut R) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, k);
    for i in 0..n {
        if rng.random_bool(hard_fraction) {
            s[(i, rng.random_range(0..k))] = 1.0;
            continue;
        }
        let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        for (j, d) in draws.into_iter().enumerate() {
            s[(i, j)] = d / total;
        }
    }
    s
}

pub fn features<R: Rng + ?Sized>(n: usize, f: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, f, |_, _| rng.random_range(-1.0..1.0))
}
