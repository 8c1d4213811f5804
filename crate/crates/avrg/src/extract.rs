//! The extract–contract loop: score and select dendrogram nodes, cut out
//! rules, replace subtrees and subgraphs with nonterminals, and emit the
//! grammar plus a derivation log that supports deterministic replay.

use crate::grammar::{DerivationStepDoc, Grammar, GrammarError, Rule};
use crate::graph::{AttributedGraph, CutEdge, NodeId, NodeKind};
use crate::hierarchy::{Dendrogram, HierarchyError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("graph error during extraction: {0}")]
    Graph(#[from] crate::graph::GraphError),
}

/// One extraction step: which dendrogram node was consumed, which stored rule
/// the extracted rule merged into, the name of the nonterminal introduced by
/// the contraction, and enough positional data to replay the step exactly.
pub type DerivationStep = DerivationStepDoc;

/// Ordered record of extraction steps. Replaying the steps in reverse order
/// reconstructs a graph isomorphic to the extraction input; step count always
/// equals the grammar's total frequency.
#[derive(Debug, Clone, Default)]
pub struct DerivationLog {
    pub steps: Vec<DerivationStep>,
}

/// Scores every internal node by the absolute deviation of its current leaf
/// count from the target size `mu`. Subtrees holding nonterminal leaves from
/// earlier contractions count those leaves at face value.
pub fn score_tree_nodes(d: &Dendrogram, mu: u32) -> BTreeMap<u32, f64> {
    d.internal_leaf_counts()
        .into_iter()
        .map(|(id, leaves)| (id, (leaves as f64 - f64::from(mu)).abs()))
        .collect()
}

/// Picks a uniformly random member of the lowest-scoring set.
pub fn select_tree_node(scores: &BTreeMap<u32, f64>, rng: &mut ChaCha8Rng) -> u32 {
    let min = scores
        .values()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let argmin: Vec<u32> = scores
        .iter()
        .filter(|(_, &s)| s <= min)
        .map(|(&id, _)| id)
        .collect();
    argmin[rng.random_range(0..argmin.len())]
}

/// Cuts out the rule rooted at dendrogram node `eta`: the RHS is the induced
/// subgraph of the subtree's leaves, annotated with boundary degrees; the lhs
/// size is the multiplicity-weighted cut size. Also returns the cut-edge
/// record needed for contraction and the derivation log.
pub fn extract_rule(
    g: &AttributedGraph,
    d: &Dendrogram,
    eta: u32,
) -> Result<(Rule, Vec<CutEdge>), ExtractError> {
    let leaf_set = d.leaf_set(eta)?;
    let mut rhs = g.induced_subgraph(&leaf_set)?;
    let (cut, boundary) = g.boundary_edges(&leaf_set)?;
    let mut omega: u64 = 0;
    for (&node, &b) in &boundary {
        rhs.set_boundary(node, b)?;
        omega += u64::from(b);
    }
    let rule = Rule {
        lhs_size: u32::try_from(omega).expect("cut size fits in u32"),
        rhs,
        frequency: 1,
    };
    Ok((rule, cut))
}

/// Contracts the extracted subtree: removes its nodes from the graph, adds a
/// fresh nonterminal of the rule's size, redirects every cut edge onto it
/// (parallel edges merge into multiplicity), and replaces the dendrogram
/// subtree with a leaf holding the nonterminal.
pub fn contract(
    g: &mut AttributedGraph,
    d: &mut Dendrogram,
    eta: u32,
    rule: &Rule,
    cut: &[CutEdge],
    nonterminal_name: &str,
) -> Result<NodeId, ExtractError> {
    for (id, _) in rule.rhs.nodes() {
        g.remove_node(id)?;
    }
    let x = g.add_node(
        nonterminal_name.to_string(),
        NodeKind::Nonterminal { size: rule.lhs_size },
    )?;
    for edge in cut {
        g.add_edge(x, edge.outside, edge.multiplicity)?;
    }
    d.replace_subtree(eta, x, nonterminal_name)?;
    Ok(x)
}

/// Shortest prefix such that no node name in `g` starts with it; guarantees
/// generated nonterminal names never collide with input identifiers.
fn nonterminal_prefix(g: &AttributedGraph) -> String {
    let mut prefix = String::from("nt");
    while g.nodes().any(|(_, rec)| rec.name.starts_with(&prefix)) {
        prefix.insert(0, '_');
    }
    prefix
}

/// Runs select → extract → upsert → contract until the dendrogram is a single
/// leaf and the graph is one size-0 nonterminal. Ties in tree-node scores are
/// broken uniformly at random under the given seed; the whole run is a pure
/// function of `(g, d, mu, seed)`.
pub fn extract_grammar(
    g: &AttributedGraph,
    d: &Dendrogram,
    mu: u32,
    seed: u64,
) -> Result<(Grammar, DerivationLog), ExtractError> {
    let mut graph = g.clone();
    let mut dendrogram = d.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grammar = Grammar::new(g.alphabet().iter().cloned());
    let mut log = DerivationLog::default();
    let prefix = nonterminal_prefix(g);
    let mut counter = 0u64;

    while !dendrogram.is_single_leaf() {
        let scores = score_tree_nodes(&dendrogram, mu);
        let eta = select_tree_node(&scores, &mut rng);
        let (candidate, cut) = extract_rule(&graph, &dendrogram, eta)?;

        // Per-node externals, multiplicity-expanded and sorted by name, keyed
        // by the candidate node they attach to.
        let mut externals_of: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
        for edge in &cut {
            let name = graph.node(edge.outside).expect("cut endpoint exists").name.clone();
            let entry = externals_of.entry(edge.inside).or_default();
            for _ in 0..edge.multiplicity {
                entry.push(name.clone());
            }
        }
        for list in externals_of.values_mut() {
            list.sort();
        }
        let candidate_positions: Vec<NodeId> =
            candidate.rhs.nodes().map(|(id, _)| id).collect();
        let candidate_names: Vec<String> = candidate
            .rhs
            .nodes()
            .map(|(_, rec)| rec.name.clone())
            .collect();

        let outcome = grammar.upsert_rule(candidate.clone())?;

        // Realign candidate positions onto the stored rule's positions.
        let n = candidate_positions.len();
        let mut rhs_nodes = vec![String::new(); n];
        let mut per_position_externals: Vec<Vec<String>> = vec![Vec::new(); n];
        for (cand_pos, &stored_pos) in outcome.mapping.iter().enumerate() {
            rhs_nodes[stored_pos] = candidate_names[cand_pos].clone();
            if let Some(ext) = externals_of.get(&candidate_positions[cand_pos]) {
                per_position_externals[stored_pos] = ext.clone();
            }
        }
        let externals: Vec<String> = per_position_externals.into_iter().flatten().collect();

        let nt_name = format!("{prefix}{counter}");
        counter += 1;
        contract(&mut graph, &mut dendrogram, eta, &candidate, &cut, &nt_name)?;

        log.steps.push(DerivationStep {
            eta,
            rule: outcome.index,
            created: nt_name,
            rhs_nodes,
            externals,
        });
    }

    debug_assert_eq!(graph.node_count(), 1);
    debug_assert_eq!(
        graph.nodes().next().map(|(_, rec)| rec.kind.clone()),
        Some(NodeKind::Nonterminal { size: 0 })
    );
    grammar.validate_closure()?;
    Ok((grammar, log))
}
