//! The conductance-bisection builder against exhaustive minimum-conductance
//! search on the nine-node two-cluster fixture.

use avrg::graph::{AttributedGraph, NodeId};
use avrg::hierarchy::{build_dendrogram, ClusteringMethod};
use avrg::synthetic::fixture_two_clusters;
use std::collections::BTreeSet;

fn conductance(g: &AttributedGraph, side: &BTreeSet<NodeId>) -> f64 {
    let mut cut = 0.0;
    let mut vol_s = 0.0;
    let mut vol_t = 0.0;
    for (u, v, k) in g.edges() {
        let w = f64::from(k);
        match (side.contains(&u), side.contains(&v)) {
            (true, true) => vol_s += 2.0 * w,
            (false, false) => vol_t += 2.0 * w,
            _ => {
                cut += w;
                vol_s += w;
                vol_t += w;
            }
        }
    }
    cut / vol_s.min(vol_t)
}

#[test]
fn first_split_is_the_exhaustive_minimum_conductance_cut() {
    let (g, _) = fixture_two_clusters();
    let ids: Vec<NodeId> = g.node_ids().collect();

    // Exhaustive search over all 2^8 cuts that keep the first node on one
    // side (complement symmetry).
    let mut best: Option<(f64, BTreeSet<NodeId>)> = None;
    for mask in 0u32..(1 << (ids.len() - 1)) {
        let mut side = BTreeSet::from([ids[0]]);
        for (bit, &id) in ids.iter().enumerate().skip(1) {
            if (mask >> (bit - 1)) & 1 == 1 {
                side.insert(id);
            }
        }
        if side.len() == ids.len() {
            continue;
        }
        let phi = conductance(&g, &side);
        if best.as_ref().map(|(b, _)| phi < *b).unwrap_or(true) {
            best = Some((phi, side));
        }
    }
    let (best_phi, best_side) = best.unwrap();

    // The brute-force optimum is the blue cluster {a..e} against {f..i}.
    let blue: BTreeSet<NodeId> = ["a", "b", "c", "d", "e"]
        .iter()
        .map(|n| g.node_by_name(n).unwrap())
        .collect();
    assert!(best_side == blue || best_side == ids.iter().copied().filter(|i| !blue.contains(i)).collect());
    assert!((best_phi - 2.0 / 14.0).abs() < 1e-12, "phi {best_phi}");

    // The Fiedler sweep finds exactly that split as the first bisection.
    let d = build_dendrogram(&g, ClusteringMethod::ConductanceBisection, 0).unwrap();
    let root = d.root_internal_id().unwrap();
    let all: BTreeSet<NodeId> = d.leaf_set(root).unwrap();
    assert_eq!(all.len(), 9);
    // The root's first-level children partition the node set; one of them
    // must be the blue cluster.
    let child_sets: Vec<BTreeSet<NodeId>> = d
        .internal_ids()
        .iter()
        .filter(|&&id| id != root)
        .map(|&id| d.leaf_set(id).unwrap())
        .collect();
    assert!(
        child_sets.contains(&blue),
        "no subtree equals the blue cluster: {child_sets:?}"
    );
}

#[test]
fn conductance_dendrogram_is_deterministic_on_the_fixture() {
    let (g, _) = fixture_two_clusters();
    let a = build_dendrogram(&g, ClusteringMethod::ConductanceBisection, 3).unwrap();
    let b = build_dendrogram(&g, ClusteringMethod::ConductanceBisection, 3).unwrap();
    assert_eq!(a.to_nested(), b.to_nested());
}
