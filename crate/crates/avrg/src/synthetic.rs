//! Built-in attributed test graphs: the nine-node two-cluster fixture used
//! throughout the docs and tests, and a class-assortative preferential
//! attachment generator for assortativity sweeps.

use crate::graph::{AttributedGraph, GraphError, NodeKind};
use crate::hierarchy::{load_dendrogram, Dendrogram};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The canonical nine-node fixture: a blue five-clique-ish cluster `a..e` and
/// a pink four-node cluster `f..i`, joined by the two bridges `c-h` and
/// `b-f`; 16 edges total. Returned together with its canonical dendrogram,
/// whose internal nodes are numbered in pre-order (the subtree of internal
/// node 3 covers `{c, d, e}`).
pub fn fixture_two_clusters() -> (AttributedGraph, Dendrogram) {
    let mut g = AttributedGraph::new(["blue", "pink"]);
    for name in ["a", "b", "c", "d", "e"] {
        g.add_node(name, NodeKind::Terminal { attr: "blue".into() })
            .expect("fresh name");
    }
    for name in ["f", "g", "h", "i"] {
        g.add_node(name, NodeKind::Terminal { attr: "pink".into() })
            .expect("fresh name");
    }
    let edges = [
        ("a", "b"),
        ("b", "c"),
        ("c", "d"),
        ("d", "a"),
        ("a", "e"),
        ("e", "c"),
        ("b", "e"),
        ("e", "d"),
        ("c", "h"),
        ("b", "f"),
        ("f", "g"),
        ("g", "h"),
        ("h", "i"),
        ("h", "f"),
        ("f", "i"),
        ("i", "g"),
    ];
    for (u, v) in edges {
        let (u, v) = (g.node_by_name(u).unwrap(), g.node_by_name(v).unwrap());
        g.add_edge(u, v, 1).expect("fixture edges are simple");
    }
    let d = load_dendrogram("(((e,(c,d)),(a,b)),((f,g),(h,i)))", &g)
        .expect("fixture dendrogram is valid");
    (g, d)
}

/// Configuration for the class-assortative preferential-attachment
/// generator: `n` nodes, `m` edges per arriving node, `num_classes` uniform
/// classes, and intra-class preference `p_c` in `[0, 1]`. At `p_c = 1` all
/// post-seed edges are intra-class; at `p_c = 0` they are strictly
/// cross-class; 0.5 reduces to plain preferential attachment.
#[derive(Debug, Clone)]
pub struct CabamConfig {
    pub n: usize,
    pub m: usize,
    pub num_classes: usize,
    pub p_c: f64,
    pub seed: u64,
}

impl CabamConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.m < 1 || self.n <= self.m {
            return Err(format!("need n > m >= 1, got n={}, m={}", self.n, self.m));
        }
        if self.num_classes < 2 {
            return Err(format!("need num_classes >= 2, got {}", self.num_classes));
        }
        if !(0.0..=1.0).contains(&self.p_c) {
            return Err(format!("p_c must lie in [0, 1], got {}", self.p_c));
        }
        Ok(())
    }
}

/// Grows a scale-free attributed graph by preferential attachment with
/// class-aware reweighting.
///
/// The seed graph is an `m`-clique with round-robin class labels. Each
/// arriving node draws a uniform class and attaches `m` edges to distinct
/// existing nodes sampled proportionally to `(degree + 1)` times `p_c` for
/// same-class targets and `(1 - p_c)` for cross-class targets. When every
/// weight vanishes the class factor is dropped for that draw so the graph
/// stays connected.
pub fn cabam_generate(config: &CabamConfig) -> Result<AttributedGraph, GraphError> {
    config
        .validate()
        .map_err(|msg| GraphError::Parse { line: 0, msg })?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes: Vec<String> = (0..config.num_classes).map(|c| format!("c{c}")).collect();
    let mut g = AttributedGraph::new(classes.iter().cloned());

    let mut class_of: Vec<usize> = Vec::with_capacity(config.n);
    let mut ids = Vec::with_capacity(config.n);
    for i in 0..config.m {
        let class = i % config.num_classes;
        class_of.push(class);
        ids.push(
            g.add_node(format!("v{i}"), NodeKind::Terminal { attr: classes[class].clone() })
                .expect("fresh name"),
        );
    }
    for i in 0..config.m {
        for j in (i + 1)..config.m {
            g.add_edge(ids[i], ids[j], 1).expect("seed clique");
        }
    }

    for i in config.m..config.n {
        let class = rng.random_range(0..config.num_classes);
        class_of.push(class);
        let new_id = g
            .add_node(format!("v{i}"), NodeKind::Terminal { attr: classes[class].clone() })
            .expect("fresh name");

        let mut chosen: Vec<usize> = Vec::with_capacity(config.m);
        let edges_to_add = config.m.min(ids.len());
        for _ in 0..edges_to_add {
            let weight_of = |t: usize, class_aware: bool| -> f64 {
                if chosen.contains(&t) {
                    return 0.0;
                }
                let base = g.degree(ids[t]) as f64 + 1.0;
                if !class_aware {
                    return base;
                }
                let factor = if class_of[t] == class { config.p_c } else { 1.0 - config.p_c };
                base * factor
            };
            let mut weights: Vec<f64> = (0..ids.len()).map(|t| weight_of(t, true)).collect();
            let mut total: f64 = weights.iter().sum();
            if total <= 0.0 {
                weights = (0..ids.len()).map(|t| weight_of(t, false)).collect();
                total = weights.iter().sum();
            }
            if total <= 0.0 {
                break;
            }
            let mut draw = rng.random_range(0.0..total);
            let mut pick = 0;
            for (t, w) in weights.iter().enumerate() {
                if *w <= 0.0 {
                    continue;
                }
                if draw < *w {
                    pick = t;
                    break;
                }
                draw -= *w;
            }
            chosen.push(pick);
        }
        for t in chosen {
            g.add_edge(new_id, ids[t], 1).expect("distinct targets");
        }
        ids.push(new_id);
    }

    Ok(g)
}
