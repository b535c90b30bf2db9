mod common;

use common::{mean_u64, reference_run};
use ledgerlink::consensus::{
    build_graph, convergence_error, initial_values, simulate, target_mean, AveragingEnv, GossipGraph, Method,
    MethodConfig,
};
use ledgerlink::dlt::AveragingContract;
use ledgerlink::kernel::RngStream;
use proptest::prelude::*;

fn run_both(method: Method, n: usize, p: f64, seed: u64) {
    let graph = build_graph(n, 3.min(n - 1), seed).unwrap();
    let initial = initial_values(n, 0.0, 100.0, seed);
    let cfg = MethodConfig {
        p,
        periods: 12,
        ..MethodConfig::baseline(method)
    };
    let run = simulate(&graph, &initial, &cfg, &AveragingEnv::default(), seed).unwrap();
    let reference = reference_run(method, &graph, &initial, p, cfg.periods, seed);
    let target = target_mean(&initial);
    for (k, rec) in run.records.iter().enumerate() {
        assert_eq!(run.snapshots[k], reference.values[k], "{method} n={n} p={p} seed={seed} period {k}");
        assert_eq!(rec.ul_bytes, mean_u64(&reference.ul[k]), "{method} UL period {k}");
        assert_eq!(rec.dl_bytes, mean_u64(&reference.dl[k]), "{method} DL period {k}");
        assert_eq!(rec.convergence_error, convergence_error(&reference.values[k], target));
    }
}

#[test]
fn every_method_matches_the_straight_line_reference() {
    for method in Method::ALL {
        for n in [2, 3, 5, 10] {
            for p in [0.0, 0.1, 0.5] {
                for seed in 1..=4 {
                    run_both(method, n, p, seed);
                }
            }
        }
    }
}

#[test]
fn contract_mean_matches_direct_recomputation() {
    let mut rng = RngStream::new(7, "contract");
    for trial in 0..200 {
        let len = 1 + rng.index(500);
        let values: Vec<f64> = (0..len).map(|_| rng.uniform(-1e3, 1e3)).collect();
        let c = values.iter().fold(AveragingContract::new(), |c, &v| c.apply(v));
        let direct = values.iter().sum::<f64>() / len as f64;
        let got = c.mean().unwrap();
        let scale = direct.abs().max(1.0);
        assert!((got - direct).abs() <= 1e-9 * scale, "trial {trial}: {got} vs {direct}");
    }
}

fn reachable(adj: &[Vec<u32>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut frontier = vec![from];
    seen[from] = true;
    while let Some(u) = frontier.pop() {
        for &v in &adj[u] {
            if !seen[v as usize] {
                seen[v as usize] = true;
                frontier.push(v as usize);
            }
        }
    }
    seen
}

/// Strong connectivity by checking reachability from every node.
fn strongly_connected_by_exhaustion(g: &GossipGraph) -> bool {
    let adj: Vec<Vec<u32>> = (0..g.len()).map(|i| g.out_neighbors(i as u32).to_vec()).collect();
    (0..g.len()).all(|s| reachable(&adj, s).into_iter().all(|r| r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_graphs_are_regular_simple_and_strongly_connected(n in 6usize..60, k in 2usize..5, seed in 0u64..1000) {
        let k = k.min(n - 1);
        let g = build_graph(n, k, seed).unwrap();
        prop_assert_eq!(g.len(), n);
        for i in 0..n {
            let nb = g.out_neighbors(i as u32);
            prop_assert_eq!(nb.len(), k);
            prop_assert!(nb.iter().all(|&j| j as usize != i && (j as usize) < n));
            let mut s = nb.to_vec();
            s.sort_unstable();
            s.dedup();
            prop_assert_eq!(s.len(), k);
        }
        prop_assert!(strongly_connected_by_exhaustion(&g));
    }

    #[test]
    fn connectivity_check_agrees_with_exhaustion(n in 3usize..12, edges in proptest::collection::vec((0u32..12, 0u32..12), 0..40)) {
        let mut adj: Vec<Vec<u32>> = vec![vec![]; n];
        for (a, b) in edges {
            let (a, b) = (a as usize % n, b % n as u32);
            if a as u32 != b && !adj[a].contains(&b) {
                adj[a].push(b);
            }
        }
        let k = adj.iter().map(Vec::len).min().unwrap();
        let adj: Vec<Vec<u32>> = adj.into_iter().map(|mut v| { v.truncate(k); v }).collect();
        if let Ok(g) = GossipGraph::from_adjacency(adj) {
            prop_assert_eq!(g.is_strongly_connected(), strongly_connected_by_exhaustion(&g));
        }
    }

    #[test]
    fn gossip_and_neighbor_values_stay_in_the_initial_hull(seed in 0u64..500, p in 0.0f64..1.0) {
        let n = 20;
        let graph = build_graph(n, 5, seed).unwrap();
        let initial = initial_values(n, 0.0, 100.0, seed);
        let lo = initial.iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = initial.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        for method in Method::ALL {
            let cfg = MethodConfig { p, periods: 10, ..MethodConfig::baseline(method) };
            let run = simulate(&graph, &initial, &cfg, &AveragingEnv::default(), seed).unwrap();
            for snap in &run.snapshots {
                prop_assert!(snap.iter().all(|&v| v >= lo && v <= hi), "{} left the hull", method);
            }
        }
    }
}
