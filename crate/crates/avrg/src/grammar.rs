//! Rule and grammar value types: attribute-aware rule isomorphism with
//! frequency merging, description-length accounting, and persistence.

use crate::graph::{AttributedGraph, MixingMatrix, NodeId, NodeKind, NodeRecord};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("rule invariant violated: boundary degrees sum to {got}, lhs size is {expected}")]
    BoundarySum { got: u64, expected: u32 },
    #[error("rule right-hand side is empty")]
    EmptyRhs,
    #[error("rule frequency must be >= 1")]
    ZeroFrequency,
    #[error("grammar is not closed: no rule with lhs size {0}")]
    MissingBucket(u32),
    #[error("grammar has no size-0 start rule")]
    NoStartRule,
    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// A production `X -> (R, f)`: a nonterminal of size `lhs_size` rewrites to
/// the attributed graph `rhs`, whose nodes all carry boundary degrees summing
/// to `lhs_size`. `frequency` counts how many extraction steps produced an
/// isomorphic copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub lhs_size: u32,
    pub rhs: AttributedGraph,
    pub frequency: u32,
}

impl Rule {
    pub fn validate(&self) -> Result<(), GrammarError> {
        if self.rhs.node_count() == 0 {
            return Err(GrammarError::EmptyRhs);
        }
        if self.frequency == 0 {
            return Err(GrammarError::ZeroFrequency);
        }
        let sum: u64 = self
            .rhs
            .nodes()
            .map(|(_, rec)| u64::from(rec.boundary.unwrap_or(0)))
            .sum();
        if sum != u64::from(self.lhs_size) {
            return Err(GrammarError::BoundarySum {
                got: sum,
                expected: self.lhs_size,
            });
        }
        Ok(())
    }

    /// RHS nodes in position order (ascending node id). Positions are the
    /// stable reference used by derivation logs and serialization.
    pub fn rhs_nodes(&self) -> Vec<(NodeId, &NodeRecord)> {
        self.rhs.nodes().collect()
    }

    /// Count of nonterminal nodes on the right-hand side.
    pub fn rhs_nonterminal_count(&self) -> usize {
        self.rhs
            .nodes()
            .filter(|(_, rec)| !rec.kind.is_terminal())
            .count()
    }

    /// Sizes of RHS nonterminals.
    pub fn rhs_nonterminal_sizes(&self) -> Vec<u32> {
        self.rhs
            .nodes()
            .filter_map(|(_, rec)| rec.kind.size())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Rule isomorphism
// ---------------------------------------------------------------------------

/// Per-node matching signature: kind (attribute value or nonterminal size),
/// boundary degree, and multiplicity-weighted degree.
fn node_signature(g: &AttributedGraph, id: NodeId, rec: &NodeRecord) -> (u8, String, u32, u64) {
    match &rec.kind {
        NodeKind::Terminal { attr } => (0, attr.clone(), rec.boundary.unwrap_or(0), g.degree(id)),
        NodeKind::Nonterminal { size } => {
            (1, size.to_string(), rec.boundary.unwrap_or(0), g.degree(id))
        }
    }
}

/// Backtracking search for a kind-, attribute-, size-, boundary-, and
/// multiplicity-preserving bijection between the two right-hand sides.
/// Returns `mapping[a_pos] = b_pos` when the rules are isomorphic.
pub fn rule_isomorphism(a: &Rule, b: &Rule) -> Option<Vec<usize>> {
    if a.lhs_size != b.lhs_size {
        return None;
    }
    let na: Vec<(NodeId, &NodeRecord)> = a.rhs_nodes();
    let nb: Vec<(NodeId, &NodeRecord)> = b.rhs_nodes();
    if na.len() != nb.len()
        || a.rhs.edge_mass() != b.rhs.edge_mass()
        || a.rhs.edge_key_count() != b.rhs.edge_key_count()
    {
        return None;
    }
    let sig_a: Vec<_> = na.iter().map(|(id, r)| node_signature(&a.rhs, *id, r)).collect();
    let sig_b: Vec<_> = nb.iter().map(|(id, r)| node_signature(&b.rhs, *id, r)).collect();
    {
        let mut sa = sig_a.clone();
        let mut sb = sig_b.clone();
        sa.sort();
        sb.sort();
        if sa != sb {
            return None;
        }
    }

    // Most-constrained-first: rare signatures first, then by position.
    let mut freq: HashMap<&(u8, String, u32, u64), usize> = HashMap::new();
    for s in &sig_a {
        *freq.entry(s).or_insert(0) += 1;
    }
    let mut order: Vec<usize> = (0..na.len()).collect();
    order.sort_by_key(|&i| (freq[&sig_a[i]], i));

    let index_a: HashMap<NodeId, usize> =
        na.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let index_b: HashMap<NodeId, usize> =
        nb.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();

    // Adjacency in position space.
    let mut adj_a = vec![BTreeMap::new(); na.len()];
    for (u, v, k) in a.rhs.edges() {
        let (iu, iv) = (index_a[&u], index_a[&v]);
        adj_a[iu].insert(iv, k);
        adj_a[iv].insert(iu, k);
    }
    let mut adj_b = vec![BTreeMap::new(); nb.len()];
    for (u, v, k) in b.rhs.edges() {
        let (iu, iv) = (index_b[&u], index_b[&v]);
        adj_b[iu].insert(iv, k);
        adj_b[iv].insert(iu, k);
    }

    let mut mapping = vec![usize::MAX; na.len()];
    let mut reverse = vec![usize::MAX; nb.len()];

    #[allow(clippy::too_many_arguments)]
    fn backtrack(
        step: usize,
        order: &[usize],
        sig_a: &[(u8, String, u32, u64)],
        sig_b: &[(u8, String, u32, u64)],
        adj_a: &[BTreeMap<usize, u32>],
        adj_b: &[BTreeMap<usize, u32>],
        mapping: &mut [usize],
        reverse: &mut [usize],
    ) -> bool {
        if step == order.len() {
            return true;
        }
        let u = order[step];
        for v in 0..sig_b.len() {
            if reverse[v] != usize::MAX || sig_a[u] != sig_b[v] {
                continue;
            }
            let forward_ok = adj_a[u].iter().all(|(&w, &k)| {
                let mw = mapping[w];
                mw == usize::MAX || adj_b[v].get(&mw) == Some(&k)
            });
            let backward_ok = adj_b[v].iter().all(|(&w2, &k)| {
                let rw = reverse[w2];
                rw == usize::MAX || adj_a[u].get(&rw) == Some(&k)
            });
            if !forward_ok || !backward_ok {
                continue;
            }
            mapping[u] = v;
            reverse[v] = u;
            if backtrack(step + 1, order, sig_a, sig_b, adj_a, adj_b, mapping, reverse) {
                return true;
            }
            mapping[u] = usize::MAX;
            reverse[v] = usize::MAX;
        }
        false
    }

    if backtrack(0, &order, &sig_a, &sig_b, &adj_a, &adj_b, &mut mapping, &mut reverse) {
        Some(mapping)
    } else {
        None
    }
}

/// True iff the lhs sizes agree and the right-hand sides are isomorphic
/// preserving adjacency with multiplicity, node kind, attribute values,
/// nonterminal sizes, and boundary degrees.
pub fn rules_isomorphic(a: &Rule, b: &Rule) -> bool {
    rule_isomorphism(a, b).is_some()
}

/// Cheap pre-bucket key so upserts only attempt isomorphism against
/// structurally compatible rules.
fn bucket_key(rule: &Rule) -> String {
    let mut node_sigs: Vec<String> = rule
        .rhs
        .nodes()
        .map(|(id, rec)| {
            let (t, label, b, d) = node_signature(&rule.rhs, id, rec);
            format!("{t}:{label}:{b}:{d}")
        })
        .collect();
    node_sigs.sort();
    format!(
        "{}|{}|{}|{}|{}",
        rule.lhs_size,
        rule.rhs.node_count(),
        rule.rhs.edge_key_count(),
        rule.rhs.edge_mass(),
        node_sigs.join(",")
    )
}

/// Deterministic ordering string used to canonically sort rules at save time.
fn signature_string(rule: &Rule) -> String {
    let nodes: Vec<(NodeId, &NodeRecord)> = rule.rhs_nodes();
    let index: HashMap<NodeId, usize> =
        nodes.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let mut edge_sigs: Vec<String> = rule
        .rhs
        .edges()
        .map(|(u, v, k)| {
            let ru = nodes[index[&u]].1;
            let rv = nodes[index[&v]].1;
            let mut ends = [
                format!("{}:{}", label_of(ru), ru.boundary.unwrap_or(0)),
                format!("{}:{}", label_of(rv), rv.boundary.unwrap_or(0)),
            ];
            ends.sort();
            format!("{}~{}~{}", ends[0], ends[1], k)
        })
        .collect();
    edge_sigs.sort();
    format!("{}#{}", bucket_key(rule), edge_sigs.join(";"))
}

fn label_of(rec: &NodeRecord) -> String {
    match &rec.kind {
        NodeKind::Terminal { attr } => attr.clone(),
        NodeKind::Nonterminal { size } => format!("[{size}]"),
    }
}

/// Outcome of inserting a candidate rule into a grammar.
#[derive(Debug, Clone)]
pub struct UpsertOutcome {
    /// Index of the stored rule the candidate landed in.
    pub index: usize,
    /// True when the candidate merged into an existing isomorphic rule.
    pub merged: bool,
    /// `mapping[candidate_pos] = stored_pos` over RHS node positions;
    /// the identity when the candidate was appended.
    pub mapping: Vec<usize>,
}

/// An attributed vertex replacement grammar: the rule multiset plus the
/// terminal alphabet. The full alphabet additionally contains every
/// nonterminal size in use; the start symbol is the size-0 nonterminal.
#[derive(Debug, Clone)]
pub struct Grammar {
    rules: Vec<Rule>,
    terminal_alphabet: Vec<String>,
    buckets: HashMap<String, Vec<usize>>,
}

impl Grammar {
    pub fn new<S: Into<String>>(terminal_alphabet: impl IntoIterator<Item = S>) -> Grammar {
        let mut alphabet: Vec<String> = terminal_alphabet.into_iter().map(Into::into).collect();
        alphabet.sort();
        alphabet.dedup();
        Grammar {
            rules: Vec::new(),
            terminal_alphabet: alphabet,
            buckets: HashMap::new(),
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn terminal_alphabet(&self) -> &[String] {
        &self.terminal_alphabet
    }

    /// Nonterminal sizes in the full alphabet: every lhs size plus every size
    /// appearing on an RHS nonterminal.
    pub fn nonterminal_sizes(&self) -> BTreeSet<u32> {
        let mut sizes = BTreeSet::new();
        for rule in &self.rules {
            sizes.insert(rule.lhs_size);
            sizes.extend(rule.rhs_nonterminal_sizes());
        }
        sizes
    }

    /// Rule indices whose lhs size equals `omega`, in insertion order.
    pub fn bucket(&self, omega: u32) -> Vec<usize> {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.lhs_size == omega)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total_frequency(&self) -> u64 {
        self.rules.iter().map(|r| u64::from(r.frequency)).sum()
    }

    /// Inserts `candidate`, merging its frequency into an existing isomorphic
    /// rule when one exists.
    pub fn upsert_rule(&mut self, candidate: Rule) -> Result<UpsertOutcome, GrammarError> {
        candidate.validate()?;
        let key = bucket_key(&candidate);
        if let Some(indices) = self.buckets.get(&key) {
            for &i in indices {
                if let Some(mapping) = rule_isomorphism(&candidate, &self.rules[i]) {
                    self.rules[i].frequency += candidate.frequency;
                    return Ok(UpsertOutcome {
                        index: i,
                        merged: true,
                        mapping,
                    });
                }
            }
        }
        let index = self.rules.len();
        let mapping = (0..candidate.rhs.node_count()).collect();
        self.rules.push(candidate);
        self.buckets.entry(key).or_default().push(index);
        Ok(UpsertOutcome {
            index,
            merged: false,
            mapping,
        })
    }

    /// Closure: every size appearing on an RHS nonterminal must have a rule,
    /// and a size-0 start rule must exist, so generation can always proceed.
    pub fn validate_closure(&self) -> Result<(), GrammarError> {
        if !self.rules.iter().any(|r| r.lhs_size == 0) {
            return Err(GrammarError::NoStartRule);
        }
        let lhs_sizes: BTreeSet<u32> = self.rules.iter().map(|r| r.lhs_size).collect();
        for rule in &self.rules {
            for size in rule.rhs_nonterminal_sizes() {
                if !lhs_sizes.contains(&size) {
                    return Err(GrammarError::MissingBucket(size));
                }
            }
        }
        Ok(())
    }

    /// The `k` most frequent rules, ties broken by smaller RHS node count and
    /// then by canonical form.
    pub fn top_rules(&self, k: usize) -> Vec<(&Rule, u32)> {
        let mut order: Vec<usize> = (0..self.rules.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&self.rules[a], &self.rules[b]);
            rb.frequency
                .cmp(&ra.frequency)
                .then(ra.rhs.node_count().cmp(&rb.rhs.node_count()))
                .then_with(|| signature_string(ra).cmp(&signature_string(rb)))
        });
        order
            .into_iter()
            .take(k)
            .map(|i| (&self.rules[i], self.rules[i].frequency))
            .collect()
    }

    /// Canonical rule ordering used for serialization: by lhs size, RHS node
    /// count, signature string, then insertion index.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.rules.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&self.rules[a], &self.rules[b]);
            ra.lhs_size
                .cmp(&rb.lhs_size)
                .then(ra.rhs.node_count().cmp(&rb.rhs.node_count()))
                .then_with(|| signature_string(ra).cmp(&signature_string(rb)))
                .then(a.cmp(&b))
        });
        order
    }
}

// ---------------------------------------------------------------------------
// Description length
// ---------------------------------------------------------------------------

/// `log2(n + 1)`: bits to encode a value in `0..=n` under the fixed encoding
/// used throughout description-length accounting.
fn bits(n: u64) -> f64 {
    ((n + 1) as f64).log2()
}

/// Fixed graph encoding: a node-count header, one alphabet symbol per node
/// (nonterminal sizes cost extra), an optional per-node boundary field of
/// `boundary_bits`, and per distinct edge two endpoint references plus
/// multiplicity bits.
fn dl_graph(g: &AttributedGraph, boundary_bits: f64) -> f64 {
    let v = g.node_count() as u64;
    let labels = g.alphabet().len() as u64;
    let mut total = bits(v) + bits(labels + 1);
    for (_, rec) in g.nodes() {
        total += bits(labels + 1) + boundary_bits;
        if let NodeKind::Nonterminal { size } = rec.kind {
            total += bits(u64::from(size));
        }
    }
    for (_, _, k) in g.edges() {
        total += 2.0 * bits(v) + bits(u64::from(k));
    }
    total
}

/// Description length of a plain graph in bits.
pub fn graph_description_length(g: &AttributedGraph) -> f64 {
    dl_graph(g, 0.0)
}

/// Description length of a rule: lhs size, the RHS graph with a per-node
/// boundary-degree field of `log2(lhs+1)` bits, and `log2(f)` for frequency.
pub fn rule_description_length(rule: &Rule) -> f64 {
    let boundary_bits = bits(u64::from(rule.lhs_size));
    bits(u64::from(rule.lhs_size))
        + dl_graph(&rule.rhs, boundary_bits)
        + f64::from(rule.frequency).log2()
}

/// Description length of a grammar: a 2-bit format header, alphabet and rule
/// count fields, plus the per-rule costs. An empty grammar costs exactly the
/// header.
pub fn grammar_description_length(grammar: &Grammar) -> f64 {
    let header =
        2.0 + bits(grammar.terminal_alphabet.len() as u64) + bits(grammar.rules.len() as u64);
    header + grammar.rules.iter().map(rule_description_length).sum::<f64>()
}

/// `DL(grammar) / DL(graph)`: below one means the grammar compresses the
/// input.
pub fn inverse_compression_ratio(grammar: &Grammar, g: &AttributedGraph) -> f64 {
    grammar_description_length(grammar) / graph_description_length(g)
}

// ---------------------------------------------------------------------------
// Persistence (format "avrg/1")
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<u32>,
    pub boundary: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub u: String,
    pub v: String,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleDoc {
    pub lhs: u32,
    pub frequency: u32,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

/// Summary statistics of the extraction input, carried along so generation
/// and evaluation can run from the grammar file alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputStats {
    pub nodes: usize,
    pub edges: u64,
    pub rho_deg: Option<f64>,
    pub rho_attr: Option<f64>,
    pub mixing_matrix: MixingMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivationStepDoc {
    /// Internal dendrogram node consumed by this step.
    pub eta: u32,
    /// Index of the stored rule (in file order) this step's rule merged into.
    pub rule: usize,
    /// Name of the nonterminal node the contraction introduced.
    pub created: String,
    /// Names of the graph nodes at each stored-rule RHS position.
    pub rhs_nodes: Vec<String>,
    /// External endpoints of the cut edges, expanded by multiplicity and
    /// listed slot-by-slot in stored-rule position order.
    pub externals: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrammarDocument {
    pub format: String,
    pub alphabet: Vec<String>,
    pub rules: Vec<RuleDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_stats: Option<InputStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivation: Option<Vec<DerivationStepDoc>>,
}

pub const GRAMMAR_FORMAT: &str = "avrg/1";

fn rule_to_doc(rule: &Rule) -> RuleDoc {
    let nodes = rule
        .rhs_nodes()
        .iter()
        .map(|(_, rec)| match &rec.kind {
            NodeKind::Terminal { attr } => NodeDoc {
                id: rec.name.clone(),
                kind: "terminal".into(),
                attr: Some(attr.clone()),
                size: None,
                boundary: rec.boundary,
            },
            NodeKind::Nonterminal { size } => NodeDoc {
                id: rec.name.clone(),
                kind: "nonterminal".into(),
                attr: None,
                size: Some(*size),
                boundary: rec.boundary,
            },
        })
        .collect();
    let name_of: HashMap<NodeId, &str> = rule
        .rhs
        .nodes()
        .map(|(id, rec)| (id, rec.name.as_str()))
        .collect();
    let edges = rule
        .rhs
        .edges()
        .map(|(u, v, k)| EdgeDoc {
            u: name_of[&u].to_string(),
            v: name_of[&v].to_string(),
            multiplicity: k,
        })
        .collect();
    RuleDoc {
        lhs: rule.lhs_size,
        frequency: rule.frequency,
        nodes,
        edges,
    }
}

fn rule_from_doc(doc: &RuleDoc, alphabet: &[String], path: &str) -> Result<Rule, GrammarError> {
    let mut rhs = AttributedGraph::new(alphabet.iter().cloned());
    let mut ids: HashMap<&str, NodeId> = HashMap::new();
    for (i, n) in doc.nodes.iter().enumerate() {
        let kind = match n.kind.as_str() {
            "terminal" => NodeKind::Terminal {
                attr: n.attr.clone().ok_or_else(|| GrammarError::Schema {
                    path: format!("{path}.nodes[{i}]"),
                    msg: "terminal node missing 'attr'".into(),
                })?,
            },
            "nonterminal" => NodeKind::Nonterminal {
                size: n.size.ok_or_else(|| GrammarError::Schema {
                    path: format!("{path}.nodes[{i}]"),
                    msg: "nonterminal node missing 'size'".into(),
                })?,
            },
            other => {
                return Err(GrammarError::Schema {
                    path: format!("{path}.nodes[{i}]"),
                    msg: format!("unknown node kind '{other}'"),
                })
            }
        };
        let boundary = n.boundary.ok_or_else(|| GrammarError::Schema {
            path: format!("{path}.nodes[{i}]"),
            msg: "missing boundary degree".into(),
        })?;
        let id = rhs
            .add_node(n.id.clone(), kind)
            .map_err(|e| GrammarError::Schema {
                path: format!("{path}.nodes[{i}]"),
                msg: e.to_string(),
            })?;
        rhs.set_boundary(id, boundary).expect("node just added");
        ids.insert(n.id.as_str(), id);
    }
    for (i, e) in doc.edges.iter().enumerate() {
        let &u = ids.get(e.u.as_str()).ok_or_else(|| GrammarError::Schema {
            path: format!("{path}.edges[{i}]"),
            msg: format!("unknown node id '{}'", e.u),
        })?;
        let &v = ids.get(e.v.as_str()).ok_or_else(|| GrammarError::Schema {
            path: format!("{path}.edges[{i}]"),
            msg: format!("unknown node id '{}'", e.v),
        })?;
        rhs.add_edge(u, v, e.multiplicity)
            .map_err(|err| GrammarError::Schema {
                path: format!("{path}.edges[{i}]"),
                msg: err.to_string(),
            })?;
    }
    let rule = Rule {
        lhs_size: doc.lhs,
        rhs,
        frequency: doc.frequency,
    };
    rule.validate().map_err(|e| GrammarError::Schema {
        path: path.to_string(),
        msg: e.to_string(),
    })?;
    Ok(rule)
}

/// Serializes a grammar (with optional derivation log and input statistics)
/// to the versioned JSON document. Rules are written in canonical order and
/// derivation rule indices are remapped to match, so output bytes are stable
/// for a fixed grammar.
pub fn save_grammar(
    grammar: &Grammar,
    derivation: Option<&[DerivationStepDoc]>,
    input_stats: Option<InputStats>,
) -> String {
    let order = grammar.canonical_order();
    let mut new_index = vec![0usize; order.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let rules = order
        .iter()
        .map(|&i| rule_to_doc(&grammar.rules[i]))
        .collect();
    let derivation = derivation.map(|steps| {
        steps
            .iter()
            .map(|s| DerivationStepDoc {
                rule: new_index[s.rule],
                ..s.clone()
            })
            .collect()
    });
    let doc = GrammarDocument {
        format: GRAMMAR_FORMAT.to_string(),
        alphabet: grammar.terminal_alphabet.clone(),
        rules,
        input_stats,
        derivation,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("grammar document serializes");
    text.push('\n');
    text
}

/// Parses and validates a grammar document.
pub fn load_grammar(text: &str) -> Result<(Grammar, GrammarDocument), GrammarError> {
    let doc: GrammarDocument = serde_json::from_str(text)?;
    if doc.format != GRAMMAR_FORMAT {
        return Err(GrammarError::Schema {
            path: "format".into(),
            msg: format!("expected '{GRAMMAR_FORMAT}', got '{}'", doc.format),
        });
    }
    let mut grammar = Grammar::new(doc.alphabet.iter().cloned());
    for (i, rd) in doc.rules.iter().enumerate() {
        let rule = rule_from_doc(rd, &doc.alphabet, &format!("rules[{i}]"))?;
        // Stored rules are already merged; append verbatim to keep indices
        // aligned with the file's derivation log.
        let key = bucket_key(&rule);
        let index = grammar.rules.len();
        grammar.rules.push(rule);
        grammar.buckets.entry(key).or_default().push(index);
    }
    if let Some(steps) = &doc.derivation {
        for (i, s) in steps.iter().enumerate() {
            if s.rule >= grammar.rules.len() {
                return Err(GrammarError::Schema {
                    path: format!("derivation[{i}]"),
                    msg: format!("rule index {} out of range", s.rule),
                });
            }
        }
    }
    Ok((grammar, doc))
}
