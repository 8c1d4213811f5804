//! Shared randomized-fixture helpers for the integration suites. Everything
//! is driven by ChaCha8 so failures reproduce exactly.
#![allow(dead_code)]

pub mod oracles;

use avrg::graph::{AttributedGraph, NodeKind};
use avrg::hierarchy::{load_dendrogram, Dendrogram};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random attributed multigraph: `n` nodes, edge probability `p`, colors
/// drawn from `n_colors` classes, occasional multiplicity-2 edges.
pub fn random_graph(n: usize, p: f64, n_colors: usize, rng: &mut ChaCha8Rng) -> AttributedGraph {
    let colors: Vec<String> = (0..n_colors).map(|c| format!("c{c}")).collect();
    let mut g = AttributedGraph::new(colors.iter().cloned());
    let ids: Vec<_> = (0..n)
        .map(|i| {
            let color = colors[rng.random_range(0..n_colors)].clone();
            g.add_node(format!("v{i}"), NodeKind::Terminal { attr: color })
                .unwrap()
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_range(0.0..1.0) < p {
                let multiplicity = if rng.random_range(0.0..1.0) < 0.1 { 2 } else { 1 };
                g.add_edge(ids[i], ids[j], multiplicity).unwrap();
            }
        }
    }
    g
}

/// Like [`random_graph`] but guaranteed connected (a random spanning tree is
/// laid down first).
pub fn random_connected_graph(
    n: usize,
    extra_p: f64,
    n_colors: usize,
    rng: &mut ChaCha8Rng,
) -> AttributedGraph {
    let colors: Vec<String> = (0..n_colors).map(|c| format!("c{c}")).collect();
    let mut g = AttributedGraph::new(colors.iter().cloned());
    let ids: Vec<_> = (0..n)
        .map(|i| {
            let color = colors[rng.random_range(0..n_colors)].clone();
            g.add_node(format!("v{i}"), NodeKind::Terminal { attr: color })
                .unwrap()
        })
        .collect();
    for i in 1..n {
        let parent = rng.random_range(0..i);
        g.add_edge(ids[i], ids[parent], 1).unwrap();
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if g.multiplicity(ids[i], ids[j]) == 0 && rng.random_range(0.0..1.0) < extra_p {
                g.add_edge(ids[i], ids[j], 1).unwrap();
            }
        }
    }
    g
}

/// Random dendrogram over the graph's nodes: a recursive random partition
/// rendered through the nested-list format.
pub fn random_dendrogram(g: &AttributedGraph, rng: &mut ChaCha8Rng) -> Dendrogram {
    let mut names: Vec<String> = g.nodes().map(|(_, rec)| rec.name.clone()).collect();
    for i in (1..names.len()).rev() {
        names.swap(i, rng.random_range(0..=i));
    }
    let text = nested(&names, rng);
    load_dendrogram(&text, g).expect("generated tree is valid")
}

fn nested(names: &[String], rng: &mut ChaCha8Rng) -> String {
    match names.len() {
        0 => unreachable!("no empty subtrees"),
        1 => names[0].clone(),
        2 => format!("({},{})", names[0], names[1]),
        n => {
            let split = rng.random_range(1..n);
            format!(
                "({},{})",
                nested(&names[..split], rng),
                nested(&names[split..], rng)
            )
        }
    }
}

/// Caterpillar dendrogram over a random permutation of the nodes.
pub fn caterpillar_dendrogram(g: &AttributedGraph, rng: &mut ChaCha8Rng) -> Dendrogram {
    let mut names: Vec<String> = g.nodes().map(|(_, rec)| rec.name.clone()).collect();
    for i in (1..names.len()).rev() {
        names.swap(i, rng.random_range(0..=i));
    }
    let mut text = names[0].clone();
    if names.len() == 1 {
        return load_dendrogram(&text, g).unwrap();
    }
    for name in &names[1..] {
        text = format!("({text},{name})");
    }
    load_dendrogram(&text, g).expect("caterpillar is valid")
}
