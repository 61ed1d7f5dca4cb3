use graphmapper_core::io::{format_edges, parse_edges};
use graphmapper_core::lens::{density_scores, fiedler_vector, pagerank_scores};
use graphmapper_core::mapper::{cluster_assignment, nerve, pull_back, refine, run_mapper};
use graphmapper_core::pooling::{pool_adjacency, pool_features};
use graphmapper_core::random;
use graphmapper_core::{
    export_dot, AssignmentMatrix, Clustering, Colormap, Cover, Graph, LensVector, MapperConfig, PageRankConfig,
    Permutation, SummaryGraph,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64, n: usize, p: f64) -> Graph {
    random::erdos_renyi(n, p, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pagerank_is_equivariant(seed in any::<u64>(), n in 1usize..40, p in 0.0f64..0.4) {
        let g = graph(seed, n, p);
        let perm = Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let cfg = PageRankConfig::default();
        let base = pagerank_scores(&g, &cfg).unwrap();
        let moved = pagerank_scores(&g.apply_permutation(&perm).unwrap(), &cfg).unwrap();
        for v in 0..n {
            prop_assert!((base[v] - moved[perm.apply(v)]).abs() < 1e-12);
        }
        prop_assert!(base.iter().all(|&x| x >= 0.0));
        prop_assert!((base.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn density_is_equivariant(seed in any::<u64>(), n in 1usize..30, p in 0.0f64..0.4) {
        let g = random::connected_graph(n, p, &mut ChaCha8Rng::seed_from_u64(seed));
        let perm = Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let base = density_scores(&g, 1.5).unwrap();
        let moved = density_scores(&g.apply_permutation(&perm).unwrap(), 1.5).unwrap();
        for v in 0..n {
            prop_assert!((base[v] - moved[perm.apply(v)]).abs() < 1e-12);
        }
    }

    #[test]
    fn fiedler_pair_satisfies_eigen_equation(seed in any::<u64>(), n in 2usize..40, p in 0.0f64..0.3) {
        let g = random::connected_graph(n, p, &mut ChaCha8Rng::seed_from_u64(seed));
        let (lambda, v) = fiedler_vector(&g).unwrap();
        let l = g.laplacian();
        let rayleigh = v.dot(&(&l * &v)) / v.dot(&v);
        prop_assert!((rayleigh - lambda).abs() < 1e-8);
        prop_assert!((&l * &v - &v * rayleigh).norm() <= 1e-6);
        prop_assert!(v.sum().abs() < 1e-9);
        prop_assert!(lambda > 0.0);
    }

    #[test]
    fn pooling_matches_dense_products(seed in any::<u64>(), n in 1usize..15, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random::erdos_renyi(n, 0.3, &mut rng).with_self_loops();
        let s = AssignmentMatrix::dropping_empty(&random::soft_assignment(n, k, 0.3, &mut rng)).unwrap();
        let x = random::features(n, 3, &mut rng);
        let a = g.adjacency_matrix();
        let expected = s.matrix().transpose() * &a * s.matrix();
        prop_assert!((pool_adjacency(&a, &s).unwrap() - expected).amax() < 1e-12);
        prop_assert!((pool_features(&x, &s).unwrap() - s.matrix().transpose() * &x).amax() < 1e-12);
    }

    #[test]
    fn nerve_edges_are_shared_members(seed in any::<u64>(), n in 1usize..40, intervals in 1usize..8) {
        let g = graph(seed, n, 0.15);
        let values: Vec<f64> = (0..n).map(|v| (v as f64 * 0.618_034 + seed as f64 * 1e-3) % 1.0).collect();
        let lens = LensVector::from_scalars(values).unwrap();
        let cover = Cover::interval(intervals, 0.3, 0.0, 1.0).unwrap();
        let rc = refine(&g, &pull_back(&g, &lens, &cover).unwrap(), Clustering::Components).unwrap();
        let sg = nerve(&rc);
        for e in &sg.edges {
            let a = &sg.nodes[e.u].members;
            let shared = a.iter().filter(|v| sg.nodes[e.v].members.contains(v)).count();
            prop_assert_eq!(shared as f64, e.weight);
        }
        let s = cluster_assignment(n, &rc);
        for row in s.row_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn two_cliques_summarise_to_a_bar() {
    // two 4-cliques joined by a single bridge, lens rising along the bar
    let text = "a b\na c\na d\nb c\nb d\nc d\nd e\ne f\ne g\ne h\nf g\nf h\ng h\n";
    let loaded = parse_edges(text).unwrap();
    let g = loaded.graph;
    let lens = LensVector::from_scalars(vec![0.0, 0.1, 0.2, 0.45, 0.55, 0.8, 0.9, 1.0]).unwrap();
    let cover = Cover::interval(2, 0.2, 0.0, 1.0).unwrap();
    let sg = run_mapper(&g, &lens, &cover, &MapperConfig::default()).unwrap();
    assert_eq!(sg.num_nodes(), 2);
    assert_eq!(sg.edge_pairs(), vec![(0, 1)]);
    assert_eq!(sg.nodes[0].members, vec![0, 1, 2, 3, 4]);
    assert_eq!(sg.nodes[1].members, vec![3, 4, 5, 6, 7]);
    assert_eq!(sg.edges[0].weight, 2.0);

    let json = sg.to_json().unwrap();
    assert_eq!(SummaryGraph::from_json(&json).unwrap().to_json().unwrap(), json);
    let dot = export_dot(&sg, Colormap::for_summary(&sg));
    assert_eq!(dot.matches(" -- ").count(), 1);
}

#[test]
fn edge_file_round_trip_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [0, 1, 5, 40] {
        let g = random::erdos_renyi(n, 0.2, &mut rng);
        let text = format_edges(&g);
        let back = parse_edges(&text).unwrap().graph;
        assert_eq!(back, g);
        assert_eq!(format_edges(&back), text);
    }
}

#[test]
fn laplacian_kernel_is_constant_on_components() {
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
    let l = g.laplacian();
    let mut indicator = DVector::zeros(5);
    for v in [3, 4] {
        indicator[v] = 1.0;
    }
    assert_eq!(&l * indicator, DVector::zeros(5));
    assert_eq!(l.row_sum(), DMatrix::zeros(1, 5));
}
