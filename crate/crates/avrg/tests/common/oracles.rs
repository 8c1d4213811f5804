//! Independent brute-force oracles for the statistics the library computes.
//! These deliberately avoid the library's own code paths.

use avrg::graph::{AttributedGraph, NodeId};
use avrg::metrics::GraphletKey;
use std::collections::{BTreeMap, BTreeSet};

/// Normalized Dasgupta Cost computed from the nested-list rendering alone:
/// the LCA of two leaves is the smallest subtree leaf set containing both.
pub fn ndc_oracle(nested: &str, g: &AttributedGraph) -> f64 {
    fn subtree_sets(text: &str, out: &mut Vec<BTreeSet<String>>) -> BTreeSet<String> {
        if !text.starts_with('(') {
            let set = BTreeSet::from([text.to_string()]);
            out.push(set.clone());
            return set;
        }
        let inner = &text[1..text.len() - 1];
        let mut depth = 0usize;
        let mut start = 0usize;
        let mut set = BTreeSet::new();
        for (i, ch) in inner.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    set.extend(subtree_sets(&inner[start..i], out));
                    start = i + 1;
                }
                _ => {}
            }
        }
        set.extend(subtree_sets(&inner[start..], out));
        out.push(set.clone());
        set
    }
    let mut sets = Vec::new();
    subtree_sets(nested, &mut sets);

    let name_of = |id: NodeId| g.node(id).unwrap().name.clone();
    let mut total = 0u64;
    for (u, v, k) in g.edges() {
        let (nu, nv) = (name_of(u), name_of(v));
        let lca_size = sets
            .iter()
            .filter(|s| s.contains(&nu) && s.contains(&nv))
            .map(|s| s.len())
            .min()
            .expect("root contains every pair");
        total += u64::from(k) * lca_size as u64;
    }
    total as f64 / (g.node_count() as f64 * g.edge_mass() as f64)
}

/// Textbook Pearson correlation over explicit (x, y) samples.
pub fn pearson(samples: &[(f64, f64)]) -> Option<f64> {
    let n = samples.len() as f64;
    let mx = samples.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = samples.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in samples {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 1e-12 * n || syy <= 1e-12 * n {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Degree assortativity from the materialized oriented endpoint-degree pair
/// list (each edge `kappa` times in both orientations).
pub fn degree_assort_oracle(g: &AttributedGraph) -> Option<f64> {
    let mut samples = Vec::new();
    for (u, v, k) in g.edges() {
        let (du, dv) = (g.degree(u) as f64, g.degree(v) as f64);
        for _ in 0..k {
            samples.push((du, dv));
            samples.push((dv, du));
        }
    }
    if samples.is_empty() {
        return None;
    }
    pearson(&samples)
}

/// Attribute assortativity from a directly counted oriented joint color
/// matrix and the agreement-over-chance formula.
pub fn attribute_assort_oracle(g: &AttributedGraph) -> Option<f64> {
    let colors: Vec<&str> = g.alphabet().iter().map(|s| s.as_str()).collect();
    let dim = colors.len();
    let idx = |c: &str| colors.iter().position(|&x| x == c).unwrap();
    let mut joint = vec![vec![0.0; dim]; dim];
    let mut total = 0.0;
    for (u, v, k) in g.edges() {
        let cu = idx(g.node(u).unwrap().kind.attr().unwrap());
        let cv = idx(g.node(v).unwrap().kind.attr().unwrap());
        for _ in 0..k {
            joint[cu][cv] += 1.0;
            joint[cv][cu] += 1.0;
            total += 2.0;
        }
    }
    if total == 0.0 {
        return None;
    }
    let mut agree = 0.0;
    let mut chance = 0.0;
    for (i, row) in joint.iter().enumerate() {
        agree += row[i] / total;
        let a: f64 = row.iter().sum::<f64>() / total;
        let b: f64 = joint.iter().map(|r| r[i]).sum::<f64>() / total;
        chance += a * b;
    }
    let denom = 1.0 - chance;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((agree - chance) / denom)
}

/// Colored graphlet census by walking every 2-, 3-, and 4-node subset,
/// keeping the connected induced ones, canonicalized by explicit permutation.
pub fn census_oracle(g: &AttributedGraph) -> BTreeMap<GraphletKey, u64> {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let color_of = |id: NodeId| -> u16 {
        let attr = g.node(id).unwrap().kind.attr().unwrap();
        g.alphabet().iter().position(|l| l == attr).unwrap() as u16
    };
    let mut counts = BTreeMap::new();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    let n = ids.len();
    for a in 0..n {
        for b in (a + 1)..n {
            subsets.push(vec![a, b]);
            for c in (b + 1)..n {
                subsets.push(vec![a, b, c]);
                for d in (c + 1)..n {
                    subsets.push(vec![a, b, c, d]);
                }
            }
        }
    }
    for subset in subsets {
        let k = subset.len();
        let mut adj = [[false; 4]; 4];
        for i in 0..k {
            for j in (i + 1)..k {
                if g.multiplicity(ids[subset[i]], ids[subset[j]]) > 0 {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
        }
        let mut seen = [false; 4];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..k {
                if adj[u][v] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if seen[..k].iter().any(|s| !s) {
            continue;
        }

        let colors: Vec<u16> = subset.iter().map(|&i| color_of(ids[i])).collect();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best: Option<(u8, Vec<u16>)> = None;
        loop {
            let mut mask = 0u8;
            let mut bit = 0;
            for i in 0..k {
                for j in (i + 1)..k {
                    if adj[perm[i]][perm[j]] {
                        mask |= 1 << bit;
                    }
                    bit += 1;
                }
            }
            let cols: Vec<u16> = perm.iter().map(|&i| colors[i]).collect();
            let cand = (mask, cols);
            if best.as_ref().map(|b| cand < *b).unwrap_or(true) {
                best = Some(cand);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        let (edges, cols) = best.unwrap();
        *counts
            .entry(GraphletKey {
                size: k as u8,
                edges,
                colors: cols,
            })
            .or_insert(0) += 1;
    }
    counts
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}
