//! Seeded inputs shared by the benchmarks.

use graphmapper_core::random;
use graphmapper_core::Graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Connected sparse graph with mean degree about `mean_degree`.
pub fn sparse_graph(n: usize, mean_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (mean_degree / n.max(2) as f64).min(1.0);
    random::connected_graph(n, p, &mut rng)
}

/// Sparse graph carrying `f` random feature columns.
pub fn featured_graph(n: usize, f: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x = random::features(n, f, &mut rng);
    sparse_graph(n, 6.0, seed).with_features(x).expect("feature rows match")
}
