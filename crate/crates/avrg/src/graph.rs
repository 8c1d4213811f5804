//! The attributed multigraph value type and its elementary statistics.
//!
//! Graphs are undirected, loop-free, and carry positive edge multiplicities.
//! Nodes are either terminals (holding one discrete attribute value) or
//! nonterminals (holding a size). Boundary degrees are only populated on
//! nodes inside rule right-hand sides.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use thiserror::Error;

/// Stable per-graph node handle. Ids are never reused within a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Terminal nodes carry one attribute value; nonterminals carry a size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Terminal { attr: String },
    Nonterminal { size: u32 },
}

impl NodeKind {
    pub fn is_terminal(&self) -> bool {
        matches!(self, NodeKind::Terminal { .. })
    }

    pub fn attr(&self) -> Option<&str> {
        match self {
            NodeKind::Terminal { attr } => Some(attr),
            NodeKind::Nonterminal { .. } => None,
        }
    }

    pub fn size(&self) -> Option<u32> {
        match self {
            NodeKind::Terminal { .. } => None,
            NodeKind::Nonterminal { size } => Some(*size),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub name: String,
    pub kind: NodeKind,
    /// Count of cut edges incident to this node; only meaningful inside rule
    /// right-hand sides.
    pub boundary: Option<u32>,
}

/// An edge with exactly one endpoint inside a queried node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutEdge {
    pub inside: NodeId,
    pub outside: NodeId,
    pub multiplicity: u32,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("node '{0}' appears in the edge list but has no attribute")]
    MissingAttribute(String),
    #[error("node '{0}' has conflicting attribute values '{1}' and '{2}'")]
    ConflictingAttribute(String, String, String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown node name '{0}'")]
    UnknownName(String),
    #[error("duplicate node name '{0}'")]
    DuplicateName(String),
    #[error("self-loops are not allowed (node {0})")]
    SelfLoop(NodeId),
    #[error("operation requires at least one edge")]
    EmptyEdgeSet,
    #[error("attribute '{0}' is not in the graph alphabet")]
    UnknownAttribute(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Diagnostics from [`load_graph`]: dropped self-loop lines are counted, not
/// fatal.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
}

/// Undirected loop-free multigraph over attributed nodes.
///
/// Edge multiplicities are stored once per unordered pair; adjacency is kept
/// symmetric. All iteration orders are deterministic (`BTreeMap`-backed), so
/// derived artifacts are byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributedGraph {
    nodes: BTreeMap<NodeId, NodeRecord>,
    adj: BTreeMap<NodeId, BTreeMap<NodeId, u32>>,
    alphabet: Vec<String>,
    next_id: u32,
    edge_mass: u64,
}

impl AttributedGraph {
    /// Creates an empty graph over the given attribute alphabet. The alphabet
    /// is sorted and deduplicated so reports are stable across runs.
    pub fn new<S: Into<String>>(alphabet: impl IntoIterator<Item = S>) -> Self {
        let mut alphabet: Vec<String> = alphabet.into_iter().map(Into::into).collect();
        alphabet.sort();
        alphabet.dedup();
        AttributedGraph {
            nodes: BTreeMap::new(),
            adj: BTreeMap::new(),
            alphabet,
            next_id: 0,
            edge_mass: 0,
        }
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Total edge mass: every unordered pair counted with its multiplicity.
    pub fn edge_mass(&self) -> u64 {
        self.edge_mass
    }

    /// Number of distinct unordered edge pairs.
    pub fn edge_key_count(&self) -> usize {
        self.adj.values().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeRecord)> {
        self.nodes.iter().map(|(id, rec)| (*id, rec))
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|(_, rec)| rec.name == name)
            .map(|(id, _)| *id)
    }

    /// Edges as `(u, v, multiplicity)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, u32)> + '_ {
        self.adj.iter().flat_map(|(&u, nbrs)| {
            nbrs.iter()
                .filter(move |(&v, _)| u < v)
                .map(move |(&v, &k)| (u, v, k))
        })
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.adj
            .get(&id)
            .into_iter()
            .flat_map(|nbrs| nbrs.iter().map(|(&v, &k)| (v, k)))
    }

    /// Degree counting multiplicities.
    pub fn degree(&self, id: NodeId) -> u64 {
        self.adj
            .get(&id)
            .map(|nbrs| nbrs.values().map(|&k| u64::from(k)).sum())
            .unwrap_or(0)
    }

    pub fn multiplicity(&self, u: NodeId, v: NodeId) -> u32 {
        self.adj
            .get(&u)
            .and_then(|nbrs| nbrs.get(&v))
            .copied()
            .unwrap_or(0)
    }

    pub fn terminal_count(&self) -> usize {
        self.nodes.values().filter(|r| r.kind.is_terminal()).count()
    }

    pub fn nonterminal_ids(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|(_, r)| !r.kind.is_terminal())
            .map(|(id, _)| *id)
            .collect()
    }

    /// Adds a node, rejecting duplicate names and attributes outside the
    /// alphabet.
    pub fn add_node(&mut self, name: impl Into<String>, kind: NodeKind) -> Result<NodeId, GraphError> {
        let name = name.into();
        if self.nodes.values().any(|r| r.name == name) {
            return Err(GraphError::DuplicateName(name));
        }
        if let NodeKind::Terminal { attr } = &kind {
            if !self.alphabet.iter().any(|a| a == attr) {
                return Err(GraphError::UnknownAttribute(attr.clone()));
            }
        }
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(
            id,
            NodeRecord {
                name,
                kind,
                boundary: None,
            },
        );
        self.adj.insert(id, BTreeMap::new());
        Ok(id)
    }

    /// Adds a node whose name is generated to be unique ("ntK").
    pub fn add_generated_node(&mut self, kind: NodeKind) -> NodeId {
        let mut counter = self.next_id;
        loop {
            let candidate = format!("nt{counter}");
            if !self.nodes.values().any(|r| r.name == candidate) {
                return self
                    .add_node(candidate, kind)
                    .expect("generated name is unique");
            }
            counter += 1;
        }
    }

    pub fn set_boundary(&mut self, id: NodeId, b: u32) -> Result<(), GraphError> {
        self.nodes
            .get_mut(&id)
            .map(|rec| rec.boundary = Some(b))
            .ok_or(GraphError::UnknownNode(id))
    }

    /// Accumulates `by` onto the multiplicity of the unordered pair `{u, v}`.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, by: u32) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !self.nodes.contains_key(&u) {
            return Err(GraphError::UnknownNode(u));
        }
        if !self.nodes.contains_key(&v) {
            return Err(GraphError::UnknownNode(v));
        }
        if by == 0 {
            return Ok(());
        }
        *self.adj.get_mut(&u).unwrap().entry(v).or_insert(0) += by;
        *self.adj.get_mut(&v).unwrap().entry(u).or_insert(0) += by;
        self.edge_mass += u64::from(by);
        Ok(())
    }

    /// Removes a node and all incident edges.
    pub fn remove_node(&mut self, id: NodeId) -> Result<NodeRecord, GraphError> {
        let rec = self.nodes.remove(&id).ok_or(GraphError::UnknownNode(id))?;
        if let Some(nbrs) = self.adj.remove(&id) {
            for (v, k) in nbrs {
                if let Some(n) = self.adj.get_mut(&v) {
                    n.remove(&id);
                }
                self.edge_mass -= u64::from(k);
            }
        }
        Ok(rec)
    }

    /// Subgraph induced by `node_set`: exactly those nodes and every edge with
    /// both endpoints inside, attributes and multiplicities copied.
    pub fn induced_subgraph(&self, node_set: &BTreeSet<NodeId>) -> Result<AttributedGraph, GraphError> {
        for &id in node_set {
            if !self.nodes.contains_key(&id) {
                return Err(GraphError::UnknownNode(id));
            }
        }
        let mut sub = AttributedGraph {
            nodes: BTreeMap::new(),
            adj: BTreeMap::new(),
            alphabet: self.alphabet.clone(),
            next_id: self.next_id,
            edge_mass: 0,
        };
        for &id in node_set {
            sub.nodes.insert(id, self.nodes[&id].clone());
            sub.adj.insert(id, BTreeMap::new());
        }
        for &u in node_set {
            for (&v, &k) in &self.adj[&u] {
                if u < v && node_set.contains(&v) {
                    sub.adj.get_mut(&u).unwrap().insert(v, k);
                    sub.adj.get_mut(&v).unwrap().insert(u, k);
                    sub.edge_mass += u64::from(k);
                }
            }
        }
        Ok(sub)
    }

    /// Cut edges (exactly one endpoint in `node_set`, multiplicities kept) and
    /// the per-inside-node boundary-degree map. The boundary degrees sum to
    /// the multiplicity-weighted cut size.
    pub fn boundary_edges(
        &self,
        node_set: &BTreeSet<NodeId>,
    ) -> Result<(Vec<CutEdge>, BTreeMap<NodeId, u32>), GraphError> {
        for &id in node_set {
            if !self.nodes.contains_key(&id) {
                return Err(GraphError::UnknownNode(id));
            }
        }
        let mut cut = Vec::new();
        let mut boundary: BTreeMap<NodeId, u32> = node_set.iter().map(|&id| (id, 0)).collect();
        for &u in node_set {
            for (&v, &k) in &self.adj[&u] {
                if !node_set.contains(&v) {
                    cut.push(CutEdge {
                        inside: u,
                        outside: v,
                        multiplicity: k,
                    });
                    *boundary.get_mut(&u).unwrap() += k;
                }
            }
        }
        Ok((cut, boundary))
    }

    /// Degree assortativity: Pearson correlation of endpoint degrees over the
    /// oriented, multiplicity-weighted edge list. `None` when either marginal
    /// variance vanishes (regular graphs) or the graph has no edges.
    pub fn degree_assortativity(&self) -> Option<f64> {
        if self.edge_mass == 0 {
            return None;
        }
        let deg: BTreeMap<NodeId, f64> = self
            .nodes
            .keys()
            .map(|&id| (id, self.degree(id) as f64))
            .collect();
        // Two passes: mean first, then centered moments, for stability.
        let n = (2 * self.edge_mass) as f64;
        let mut sum = 0.0;
        for (u, v, k) in self.edges() {
            sum += f64::from(k) * (deg[&u] + deg[&v]);
        }
        let mean = sum / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (u, v, k) in self.edges() {
            let (x, y) = (deg[&u] - mean, deg[&v] - mean);
            // Both orientations contribute; the pair list is symmetric.
            sxy += 2.0 * f64::from(k) * x * y;
            sxx += f64::from(k) * (x * x + y * y);
        }
        if sxx <= 1e-12 * n {
            return None;
        }
        Some(sxy / sxx)
    }

    /// Attribute assortativity via the categorical trace formula
    /// `r = (tr e - sum_i a_i b_i) / (1 - sum_i a_i b_i)` over the mixing
    /// matrix. `None` on edgeless graphs or when the denominator vanishes.
    pub fn attribute_assortativity(&self) -> Option<f64> {
        let m = self.mixing_matrix().ok()?;
        let dim = m.labels.len();
        let mut trace = 0.0;
        let mut agreement_by_chance = 0.0;
        for i in 0..dim {
            trace += m.entries[i][i];
            let a_i: f64 = m.entries[i].iter().sum();
            let b_i: f64 = (0..dim).map(|j| m.entries[j][i]).sum();
            agreement_by_chance += a_i * b_i;
        }
        let denom = 1.0 - agreement_by_chance;
        if denom.abs() < 1e-12 {
            return None;
        }
        Some((trace - agreement_by_chance) / denom)
    }

    /// Symmetric matrix of edge-mass fractions between attribute classes.
    /// Edges with a nonterminal endpoint are excluded (nonterminals have no
    /// color); errors if no terminal-terminal edge mass remains.
    pub fn mixing_matrix(&self) -> Result<MixingMatrix, GraphError> {
        let labels = self.alphabet.clone();
        let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let dim = labels.len();
        let mut counts = vec![vec![0.0_f64; dim]; dim];
        let mut total = 0.0;
        for (u, v, k) in self.edges() {
            let (cu, cv) = match (self.nodes[&u].kind.attr(), self.nodes[&v].kind.attr()) {
                (Some(a), Some(b)) => (index[a], index[b]),
                _ => continue,
            };
            let mass = f64::from(k);
            if cu == cv {
                counts[cu][cv] += mass;
            } else {
                counts[cu][cv] += mass / 2.0;
                counts[cv][cu] += mass / 2.0;
            }
            total += mass;
        }
        if total == 0.0 {
            return Err(GraphError::EmptyEdgeSet);
        }
        for row in &mut counts {
            for cell in row.iter_mut() {
                *cell /= total;
            }
        }
        Ok(MixingMatrix {
            labels,
            entries: counts,
        })
    }

    /// Structural equality keyed by node names rather than internal ids:
    /// same alphabet, same name-to-kind assignment, and the same edge
    /// multiset over name pairs.
    pub fn eq_by_names(&self, other: &AttributedGraph) -> bool {
        if self.alphabet != other.alphabet
            || self.node_count() != other.node_count()
            || self.edge_mass() != other.edge_mass()
        {
            return false;
        }
        let kinds = |g: &AttributedGraph| -> BTreeMap<String, NodeKind> {
            g.nodes()
                .map(|(_, rec)| (rec.name.clone(), rec.kind.clone()))
                .collect()
        };
        if kinds(self) != kinds(other) {
            return false;
        }
        let edge_multiset = |g: &AttributedGraph| -> BTreeMap<(String, String), u32> {
            g.edges()
                .map(|(u, v, k)| {
                    let mut pair = [
                        g.node(u).unwrap().name.clone(),
                        g.node(v).unwrap().name.clone(),
                    ];
                    pair.sort();
                    let [a, b] = pair;
                    ((a, b), k)
                })
                .collect()
        };
        edge_multiset(self) == edge_multiset(other)
    }

    /// Writes the graph as an edge-list file and an attribute file, one
    /// `u<TAB>v` / `node<TAB>label` pair per line. Nonterminal nodes are
    /// written with a `__nt<size>` pseudo-label so partially generated graphs
    /// stay inspectable.
    pub fn save(&self, edges_out: &mut dyn Write, attrs_out: &mut dyn Write) -> Result<(), GraphError> {
        for (_, rec) in self.nodes() {
            match &rec.kind {
                NodeKind::Terminal { attr } => writeln!(attrs_out, "{}\t{}", rec.name, attr)?,
                NodeKind::Nonterminal { size } => writeln!(attrs_out, "{}\t__nt{}", rec.name, size)?,
            }
        }
        for (u, v, k) in self.edges() {
            for _ in 0..k {
                writeln!(edges_out, "{}\t{}", self.nodes[&u].name, self.nodes[&v].name)?;
            }
        }
        Ok(())
    }
}

/// Normalized symmetric matrix of edge fractions between attribute classes.
///
/// A bichromatic edge splits its mass half-and-half between the two
/// off-diagonal cells; a monochrome edge puts its full mass on the diagonal,
/// so the entries sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingMatrix {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl MixingMatrix {
    pub fn get(&self, x: &str, y: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == x)?;
        let j = self.labels.iter().position(|l| l == y)?;
        Some(self.entries[i][j])
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }
}

/// Parses an edge-list stream (`u<TAB>v` per line, `#` comments ignored) and
/// an attribute stream (`node<TAB>label` per line) into a graph.
///
/// Repeated edge lines accumulate multiplicity; self-loop lines are dropped
/// and counted in the report; nodes appearing only in the attribute file
/// become isolated nodes. A node used in the edge list without an attribute
/// is an error.
pub fn load_graph(
    edge_source: impl BufRead,
    attr_source: impl BufRead,
) -> Result<(AttributedGraph, LoadReport), GraphError> {
    let mut attrs: Vec<(String, String)> = Vec::new();
    let mut seen: HashMap<String, String> = HashMap::new();
    for (lineno, line) in attr_source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let (node, label) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(l), None) if !n.is_empty() && !l.is_empty() => (n.trim(), l.trim()),
            _ => {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("expected 'node<TAB>label', got '{trimmed}'"),
                })
            }
        };
        match seen.get(node) {
            Some(prev) if prev != label => {
                return Err(GraphError::ConflictingAttribute(
                    node.to_string(),
                    prev.clone(),
                    label.to_string(),
                ))
            }
            Some(_) => {}
            None => {
                seen.insert(node.to_string(), label.to_string());
                attrs.push((node.to_string(), label.to_string()));
            }
        }
    }

    let mut graph = AttributedGraph::new(attrs.iter().map(|(_, l)| l.clone()));
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    for (node, label) in &attrs {
        let id = graph.add_node(node.clone(), NodeKind::Terminal { attr: label.clone() })?;
        ids.insert(node.clone(), id);
    }

    let mut report = LoadReport::default();
    for (lineno, line) in edge_source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let (u, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(u), Some(v), None) if !u.is_empty() && !v.is_empty() => (u.trim(), v.trim()),
            _ => {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("expected 'u<TAB>v', got '{trimmed}'"),
                })
            }
        };
        let &uid = ids
            .get(u)
            .ok_or_else(|| GraphError::MissingAttribute(u.to_string()))?;
        let &vid = ids
            .get(v)
            .ok_or_else(|| GraphError::MissingAttribute(v.to_string()))?;
        if uid == vid {
            report.self_loops_dropped += 1;
            continue;
        }
        graph.add_edge(uid, vid, 1)?;
    }
    Ok((graph, report))
}
