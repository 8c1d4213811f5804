//! Normalized Dasgupta Cost against an independent brute-force oracle, plus
//! the ordering guarantees a sensible hierarchy metric must satisfy.

mod common;

use avrg::graph::{AttributedGraph, NodeKind};
use avrg::hierarchy::{load_dendrogram, ndc};
use common::oracles::ndc_oracle;
use common::{caterpillar_dendrogram, random_dendrogram, random_graph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ndc_matches_brute_force_on_200_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdc);
    let mut checked = 0;
    while checked < 200 {
        let n = 2 + (checked % 31);
        let g = random_graph(n, 0.3, 2, &mut rng);
        if g.edge_mass() == 0 {
            continue;
        }
        let d = random_dendrogram(&g, &mut rng);
        let expected = ndc_oracle(&d.to_nested(), &g);
        let got = ndc(&d, &g).unwrap();
        assert!(
            (got - expected).abs() <= 1e-12,
            "pair {checked}: got {got}, oracle {expected}"
        );
        checked += 1;
    }
}

#[test]
fn balanced_hierarchy_beats_random_caterpillar_on_clique_unions() {
    // Four 4-cliques plus bridges keeping the graph in one component; the
    // aligned two-level hierarchy must score lower than random-permutation
    // caterpillars.
    let mut g = AttributedGraph::new(["x"]);
    let mut ids = Vec::new();
    for i in 0..16 {
        ids.push(
            g.add_node(format!("v{i}"), NodeKind::Terminal { attr: "x".into() })
                .unwrap(),
        );
    }
    for c in 0..4 {
        for i in 0..4 {
            for j in (i + 1)..4 {
                g.add_edge(ids[4 * c + i], ids[4 * c + j], 1).unwrap();
            }
        }
    }
    g.add_edge(ids[0], ids[4], 1).unwrap();
    g.add_edge(ids[8], ids[12], 1).unwrap();
    g.add_edge(ids[4], ids[8], 1).unwrap();

    let aligned = load_dendrogram(
        "(((v0,v1),(v2,v3)),((v4,v5),(v6,v7)),((v8,v9),(v10,v11)),((v12,v13),(v14,v15)))",
        &g,
    )
    .unwrap();
    let aligned_cost = ndc(&aligned, &g).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10 {
        let caterpillar = caterpillar_dendrogram(&g, &mut rng);
        let caterpillar_cost = ndc(&caterpillar, &g).unwrap();
        assert!(
            aligned_cost < caterpillar_cost,
            "trial {trial}: aligned {aligned_cost} vs caterpillar {caterpillar_cost}"
        );
    }
}
