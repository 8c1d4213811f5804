//! Dendrograms over graph nodes: construction via hierarchical clustering,
//! Normalized Dasgupta Cost, and the nested-list file format.
//!
//! Clustering looks only at topology; attributes play no role here. All
//! builders are pure functions of `(graph, method, seed)`.

use crate::graph::{AttributedGraph, NodeId};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("graph has no edges")]
    EmptyEdgeSet,
    #[error("dendrogram parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
    #[error("dendrogram leaves do not cover the graph: missing {missing:?}, duplicated {duplicated:?}, unknown {unknown:?}")]
    LeafMismatch {
        missing: Vec<String>,
        duplicated: Vec<String>,
        unknown: Vec<String>,
    },
    #[error("unknown internal node \u{3b7}{0}")]
    UnknownInternal(u32),
}

/// Hierarchical clustering backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusteringMethod {
    /// Recursive Louvain modularity clustering; each aggregation level
    /// contributes one tree layer.
    Louvain,
    /// Recursive two-way splits minimizing conductance via a Fiedler-vector
    /// sweep cut.
    ConductanceBisection,
    /// Recursive label-propagation splits.
    LabelProp,
}

impl ClusteringMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ClusteringMethod::Louvain => "louvain",
            ClusteringMethod::ConductanceBisection => "conductance-bisection",
            ClusteringMethod::LabelProp => "label-prop",
        }
    }
}

impl std::str::FromStr for ClusteringMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "louvain" => Ok(ClusteringMethod::Louvain),
            "conductance-bisection" | "conductance" => Ok(ClusteringMethod::ConductanceBisection),
            "label-prop" | "labelprop" => Ok(ClusteringMethod::LabelProp),
            other => Err(format!("unknown clustering method '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
enum Entry {
    Internal {
        id: u32,
        children: Vec<usize>,
        leaves: usize,
        parent: Option<usize>,
    },
    Leaf {
        node: NodeId,
        name: String,
        parent: Option<usize>,
    },
    Free,
}

/// Rooted tree whose leaves biject onto a graph's nodes. Internal nodes carry
/// generated identifiers assigned in pre-order at construction; every internal
/// node has at least two children. The extractor mutates a dendrogram by
/// replacing selected subtrees with single leaves.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    arena: Vec<Entry>,
    root: usize,
    /// Set when the input was disconnected and per-component trees were
    /// joined under a synthetic root.
    pub joined_components: bool,
}

/// Intermediate tree shape used by builders and the parser.
enum Shape {
    Leaf(NodeId, String),
    Node(Vec<Shape>),
}

impl Shape {
    /// Collapses unary chains and empty internals.
    fn normalize(self) -> Shape {
        match self {
            Shape::Leaf(id, name) => Shape::Leaf(id, name),
            Shape::Node(children) => {
                let mut out: Vec<Shape> = children.into_iter().map(Shape::normalize).collect();
                if out.len() == 1 {
                    out.pop().unwrap()
                } else {
                    Shape::Node(out)
                }
            }
        }
    }
}

impl Dendrogram {
    fn from_shape(shape: Shape, joined_components: bool) -> Dendrogram {
        let mut arena = Vec::new();
        let mut next_id = 1u32;
        let root = Self::install(&mut arena, &mut next_id, shape.normalize(), None);
        let mut d = Dendrogram {
            arena,
            root,
            joined_components,
        };
        d.recount(d.root);
        d
    }

    fn install(arena: &mut Vec<Entry>, next_id: &mut u32, shape: Shape, parent: Option<usize>) -> usize {
        let slot = arena.len();
        match shape {
            Shape::Leaf(node, name) => {
                arena.push(Entry::Leaf { node, name, parent });
            }
            Shape::Node(children) => {
                let id = *next_id;
                *next_id += 1;
                arena.push(Entry::Internal {
                    id,
                    children: Vec::new(),
                    leaves: 0,
                    parent,
                });
                let child_slots: Vec<usize> = children
                    .into_iter()
                    .map(|c| Self::install(arena, next_id, c, Some(slot)))
                    .collect();
                if let Entry::Internal { children, .. } = &mut arena[slot] {
                    *children = child_slots;
                }
            }
        }
        slot
    }

    fn recount(&mut self, slot: usize) -> usize {
        let n = match &self.arena[slot] {
            Entry::Leaf { .. } => 1,
            Entry::Internal { children, .. } => {
                let kids = children.clone();
                kids.iter().map(|&c| self.recount(c)).sum()
            }
            Entry::Free => 0,
        };
        if let Entry::Internal { leaves, .. } = &mut self.arena[slot] {
            *leaves = n;
        }
        n
    }

    fn slot_of_internal(&self, id: u32) -> Option<usize> {
        self.arena
            .iter()
            .position(|e| matches!(e, Entry::Internal { id: eid, .. } if *eid == id))
    }

    /// True once the tree has collapsed to a single leaf.
    pub fn is_single_leaf(&self) -> bool {
        matches!(self.arena[self.root], Entry::Leaf { .. })
    }

    pub fn internal_count(&self) -> usize {
        self.arena
            .iter()
            .filter(|e| matches!(e, Entry::Internal { .. }))
            .count()
    }

    /// Internal-node identifiers in ascending order.
    pub fn internal_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .arena
            .iter()
            .filter_map(|e| match e {
                Entry::Internal { id, .. } => Some(*id),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids
    }

    /// `(internal id, current leaf count)` pairs in ascending id order,
    /// gathered in one arena scan.
    pub fn internal_leaf_counts(&self) -> Vec<(u32, usize)> {
        let mut pairs: Vec<(u32, usize)> = self
            .arena
            .iter()
            .filter_map(|e| match e {
                Entry::Internal { id, leaves, .. } => Some((*id, *leaves)),
                _ => None,
            })
            .collect();
        pairs.sort_unstable();
        pairs
    }

    pub fn root_internal_id(&self) -> Option<u32> {
        match &self.arena[self.root] {
            Entry::Internal { id, .. } => Some(*id),
            _ => None,
        }
    }

    pub fn leaf_count_of(&self, internal_id: u32) -> Result<usize, HierarchyError> {
        let slot = self
            .slot_of_internal(internal_id)
            .ok_or(HierarchyError::UnknownInternal(internal_id))?;
        match &self.arena[slot] {
            Entry::Internal { leaves, .. } => Ok(*leaves),
            _ => unreachable!(),
        }
    }

    /// Graph nodes under the subtree rooted at `internal_id`.
    pub fn leaf_set(&self, internal_id: u32) -> Result<BTreeSet<NodeId>, HierarchyError> {
        let slot = self
            .slot_of_internal(internal_id)
            .ok_or(HierarchyError::UnknownInternal(internal_id))?;
        let mut out = BTreeSet::new();
        self.collect_leaves(slot, &mut out);
        Ok(out)
    }

    fn collect_leaves(&self, slot: usize, out: &mut BTreeSet<NodeId>) {
        match &self.arena[slot] {
            Entry::Leaf { node, .. } => {
                out.insert(*node);
            }
            Entry::Internal { children, .. } => {
                for &c in children {
                    self.collect_leaves(c, out);
                }
            }
            Entry::Free => {}
        }
    }

    /// All leaves of the tree.
    pub fn leaves(&self) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        self.collect_leaves(self.root, &mut out);
        out
    }

    /// Replaces the subtree rooted at `internal_id` with a single leaf holding
    /// `node`. Ancestor leaf counts are adjusted.
    pub fn replace_subtree(
        &mut self,
        internal_id: u32,
        node: NodeId,
        name: impl Into<String>,
    ) -> Result<(), HierarchyError> {
        let slot = self
            .slot_of_internal(internal_id)
            .ok_or(HierarchyError::UnknownInternal(internal_id))?;
        let (removed_leaves, parent, children) = match &self.arena[slot] {
            Entry::Internal {
                leaves,
                parent,
                children,
                ..
            } => (*leaves, *parent, children.clone()),
            _ => unreachable!(),
        };
        for c in children {
            self.free_subtree(c);
        }
        self.arena[slot] = Entry::Leaf {
            node,
            name: name.into(),
            parent,
        };
        let delta = removed_leaves - 1;
        let mut cursor = parent;
        while let Some(p) = cursor {
            if let Entry::Internal { leaves, parent, .. } = &mut self.arena[p] {
                *leaves -= delta;
                cursor = *parent;
            } else {
                break;
            }
        }
        Ok(())
    }

    fn free_subtree(&mut self, slot: usize) {
        if let Entry::Internal { children, .. } = &self.arena[slot] {
            for c in children.clone() {
                self.free_subtree(c);
            }
        }
        self.arena[slot] = Entry::Free;
    }

    fn parent_of(&self, slot: usize) -> Option<usize> {
        match &self.arena[slot] {
            Entry::Leaf { parent, .. } => *parent,
            Entry::Internal { parent, .. } => *parent,
            Entry::Free => None,
        }
    }

    /// Leaf count of the subtree rooted at the lowest common ancestor of two
    /// graph nodes.
    fn lca_leaves(&self, leaf_slots: &HashMap<NodeId, usize>, u: NodeId, v: NodeId) -> Option<usize> {
        let (a, b) = (*leaf_slots.get(&u)?, *leaf_slots.get(&v)?);
        let mut on_a_path: std::collections::HashSet<usize> = std::collections::HashSet::new();
        let mut cursor = Some(a);
        while let Some(s) = cursor {
            on_a_path.insert(s);
            cursor = self.parent_of(s);
        }
        let mut slot = b;
        loop {
            if on_a_path.contains(&slot) {
                return match &self.arena[slot] {
                    Entry::Internal { leaves, .. } => Some(*leaves),
                    Entry::Leaf { .. } => Some(1),
                    Entry::Free => None,
                };
            }
            slot = self.parent_of(slot)?;
        }
    }

    fn leaf_slot_index(&self) -> HashMap<NodeId, usize> {
        self.arena
            .iter()
            .enumerate()
            .filter_map(|(slot, e)| match e {
                Entry::Leaf { node, .. } => Some((*node, slot)),
                _ => None,
            })
            .collect()
    }

    /// Serializes to the nested-list format, e.g. `((e,(c,d)),(a,b))`.
    pub fn to_nested(&self) -> String {
        let mut out = String::new();
        self.write_nested(self.root, &mut out);
        out
    }

    fn write_nested(&self, slot: usize, out: &mut String) {
        match &self.arena[slot] {
            Entry::Leaf { name, .. } => {
                let _ = write!(out, "{name}");
            }
            Entry::Internal { children, .. } => {
                out.push('(');
                for (i, &c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write_nested(c, out);
                }
                out.push(')');
            }
            Entry::Free => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Normalized Dasgupta Cost
// ---------------------------------------------------------------------------

/// Normalized Dasgupta Cost:
/// `sum over edges (u,v) of |leaves(LCA(u,v))| / (|V| * |E|)`,
/// multi-edges counted with multiplicity. Lower is better; a good hierarchy
/// puts connected nodes under low common ancestors.
pub fn ndc(d: &Dendrogram, g: &AttributedGraph) -> Result<f64, HierarchyError> {
    if g.edge_mass() == 0 {
        return Err(HierarchyError::EmptyEdgeSet);
    }
    let graph_nodes: BTreeSet<NodeId> = g.node_ids().collect();
    if d.leaves() != graph_nodes {
        return Err(HierarchyError::LeafMismatch {
            missing: vec![],
            duplicated: vec![],
            unknown: vec!["leaf set differs from graph node set".into()],
        });
    }
    let slots = d.leaf_slot_index();
    let mut total: u64 = 0;
    for (u, v, k) in g.edges() {
        let leaves = d
            .lca_leaves(&slots, u, v)
            .expect("leaf coverage checked above") as u64;
        total += u64::from(k) * leaves;
    }
    Ok(total as f64 / (g.node_count() as f64 * g.edge_mass() as f64))
}

// ---------------------------------------------------------------------------
// Nested-list parsing
// ---------------------------------------------------------------------------

/// Parses the nested-list dendrogram format and validates the leaves against
/// `g`'s node names (each node exactly once).
pub fn load_dendrogram(source: &str, g: &AttributedGraph) -> Result<Dendrogram, HierarchyError> {
    let mut pos = 0usize;
    let bytes = source.as_bytes();
    let shape = parse_node(source, bytes, &mut pos)?;
    skip_ws(bytes, &mut pos);
    if pos != bytes.len() {
        return Err(HierarchyError::Parse {
            at: pos,
            msg: "trailing input after tree".into(),
        });
    }

    let mut names = Vec::new();
    collect_names(&shape, &mut names);
    let by_name: HashMap<&str, NodeId> = g
        .nodes()
        .map(|(id, rec)| (rec.name.as_str(), id))
        .collect();

    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut unknown = Vec::new();
    for n in &names {
        *seen.entry(n.clone()).or_insert(0) += 1;
        if !by_name.contains_key(n.as_str()) {
            unknown.push(n.clone());
        }
    }
    let duplicated: Vec<String> = seen
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(n, _)| n.clone())
        .collect();
    let missing: Vec<String> = g
        .nodes()
        .filter(|(_, rec)| !seen.contains_key(&rec.name))
        .map(|(_, rec)| rec.name.clone())
        .collect();
    if !missing.is_empty() || !duplicated.is_empty() || !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(HierarchyError::LeafMismatch {
            missing,
            duplicated,
            unknown,
        });
    }

    fn to_shape(raw: RawTree, by_name: &HashMap<&str, NodeId>) -> Shape {
        match raw {
            RawTree::Leaf(name) => {
                let id = by_name[name.as_str()];
                Shape::Leaf(id, name)
            }
            RawTree::Node(children) => {
                Shape::Node(children.into_iter().map(|c| to_shape(c, by_name)).collect())
            }
        }
    }
    Ok(Dendrogram::from_shape(to_shape(shape, &by_name), false))
}

enum RawTree {
    Leaf(String),
    Node(Vec<RawTree>),
}

fn collect_names(t: &RawTree, out: &mut Vec<String>) {
    match t {
        RawTree::Leaf(n) => out.push(n.clone()),
        RawTree::Node(children) => children.iter().for_each(|c| collect_names(c, out)),
    }
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

fn parse_node(src: &str, bytes: &[u8], pos: &mut usize) -> Result<RawTree, HierarchyError> {
    skip_ws(bytes, pos);
    if *pos >= bytes.len() {
        return Err(HierarchyError::Parse {
            at: *pos,
            msg: "unexpected end of input".into(),
        });
    }
    if bytes[*pos] == b'(' {
        *pos += 1;
        let mut children = Vec::new();
        loop {
            children.push(parse_node(src, bytes, pos)?);
            skip_ws(bytes, pos);
            match bytes.get(*pos) {
                Some(b',') => {
                    *pos += 1;
                }
                Some(b')') => {
                    *pos += 1;
                    return Ok(RawTree::Node(children));
                }
                _ => {
                    return Err(HierarchyError::Parse {
                        at: *pos,
                        msg: "expected ',' or ')'".into(),
                    })
                }
            }
        }
    }
    let start = *pos;
    while *pos < bytes.len() {
        let b = bytes[*pos];
        if b == b'(' || b == b')' || b == b',' || b.is_ascii_whitespace() {
            break;
        }
        *pos += 1;
    }
    if *pos == start {
        return Err(HierarchyError::Parse {
            at: *pos,
            msg: "expected node identifier".into(),
        });
    }
    Ok(RawTree::Leaf(src[start..*pos].to_string()))
}

// ---------------------------------------------------------------------------
// Clustering builders
// ---------------------------------------------------------------------------

/// Compact indexed view of a graph used by the clustering backends.
struct IndexedGraph {
    ids: Vec<NodeId>,
    names: Vec<String>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl IndexedGraph {
    fn from_graph(g: &AttributedGraph) -> IndexedGraph {
        let ids: Vec<NodeId> = g.node_ids().collect();
        let index: HashMap<NodeId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let names = ids
            .iter()
            .map(|id| g.node(*id).unwrap().name.clone())
            .collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (u, v, k) in g.edges() {
            let (iu, iv) = (index[&u], index[&v]);
            adj[iu].push((iv, f64::from(k)));
            adj[iv].push((iu, f64::from(k)));
        }
        IndexedGraph { ids, names, adj }
    }

    fn components(&self, within: &[usize]) -> Vec<Vec<usize>> {
        let member: std::collections::HashSet<usize> = within.iter().copied().collect();
        let mut seen: std::collections::HashSet<usize> = std::collections::HashSet::new();
        let mut comps = Vec::new();
        for &start in within {
            if seen.contains(&start) {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen.insert(start);
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &(v, _) in &self.adj[u] {
                    if member.contains(&v) && seen.insert(v) {
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }
}

/// Builds a dendrogram over `g`'s nodes. Disconnected inputs get per-component
/// trees joined under a synthetic root and `joined_components` is set.
pub fn build_dendrogram(
    g: &AttributedGraph,
    method: ClusteringMethod,
    seed: u64,
) -> Result<Dendrogram, HierarchyError> {
    if g.node_count() == 0 {
        return Err(HierarchyError::EmptyGraph);
    }
    let ig = IndexedGraph::from_graph(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..ig.ids.len()).collect();
    let comps = ig.components(&all);
    let joined = comps.len() > 1;
    let shape = if joined {
        Shape::Node(
            comps
                .into_iter()
                .map(|c| build_subtree(&ig, c, method, &mut rng))
                .collect(),
        )
    } else {
        build_subtree(&ig, all, method, &mut rng)
    };
    Ok(Dendrogram::from_shape(shape, joined))
}

fn leaf_shape(ig: &IndexedGraph, idx: usize) -> Shape {
    Shape::Leaf(ig.ids[idx], ig.names[idx].clone())
}

fn build_subtree(
    ig: &IndexedGraph,
    nodes: Vec<usize>,
    method: ClusteringMethod,
    rng: &mut ChaCha8Rng,
) -> Shape {
    match nodes.len() {
        0 => unreachable!("empty subsets never recurse"),
        1 => leaf_shape(ig, nodes[0]),
        2 => Shape::Node(vec![leaf_shape(ig, nodes[0]), leaf_shape(ig, nodes[1])]),
        _ => {
            let comps = ig.components(&nodes);
            if comps.len() > 1 {
                return Shape::Node(
                    comps
                        .into_iter()
                        .map(|c| build_subtree(ig, c, method, rng))
                        .collect(),
                );
            }
            match method {
                ClusteringMethod::Louvain => louvain_subtree(ig, nodes, rng),
                ClusteringMethod::ConductanceBisection => {
                    let (a, b) = fiedler_bisect(ig, &nodes, rng);
                    Shape::Node(vec![
                        build_subtree(ig, a, method, rng),
                        build_subtree(ig, b, method, rng),
                    ])
                }
                ClusteringMethod::LabelProp => {
                    let parts = label_prop_partition(ig, &nodes, rng);
                    group_shape(ig, parts, method, rng, &nodes)
                }
            }
        }
    }
}

/// Turns a flat partition into a one-layer tree, recursing into each part.
/// Falls back to a Fiedler bisection when the partition fails to split.
fn group_shape(
    ig: &IndexedGraph,
    parts: Vec<Vec<usize>>,
    method: ClusteringMethod,
    rng: &mut ChaCha8Rng,
    nodes: &[usize],
) -> Shape {
    if parts.len() <= 1 {
        let (a, b) = fiedler_bisect(ig, nodes, rng);
        return Shape::Node(vec![
            build_subtree(ig, a, method, rng),
            build_subtree(ig, b, method, rng),
        ]);
    }
    Shape::Node(
        parts
            .into_iter()
            .map(|p| build_subtree(ig, p, method, rng))
            .collect(),
    )
}

// --------------------------- Louvain ---------------------------------------

/// One Louvain run over the node subset: local moving plus aggregation until
/// the partition stabilizes. Each aggregation level becomes one tree layer;
/// finest-level communities larger than two nodes are re-clustered
/// recursively.
fn louvain_subtree(ig: &IndexedGraph, nodes: Vec<usize>, rng: &mut ChaCha8Rng) -> Shape {
    let index: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let n = nodes.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, &u) in nodes.iter().enumerate() {
        for &(v, w) in &ig.adj[u] {
            if let Some(&j) = index.get(&v) {
                adj[i].push((j, w));
            }
        }
    }
    let mut self_loops = vec![0.0; n];

    // groups[i] = members (original graph indices) merged into level-node i.
    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![nodes[i]]).collect();
    let mut layers: Vec<Vec<Vec<usize>>> = Vec::new();

    loop {
        let assignment = louvain_local_moves(&adj, &self_loops, rng);
        let communities = distinct_communities(&assignment);
        if communities.len() == assignment.len() || communities.len() <= 1 {
            break;
        }
        let mut level_groups: Vec<Vec<usize>> = Vec::new();
        for comm in &communities {
            let mut members = Vec::new();
            for &node in comm {
                members.extend(groups[node].iter().copied());
            }
            members.sort_unstable();
            level_groups.push(members);
        }
        layers.push(level_groups.clone());

        let mut comm_of = vec![0usize; assignment.len()];
        for (ci, comm) in communities.iter().enumerate() {
            for &node in comm {
                comm_of[node] = ci;
            }
        }
        let m = communities.len();
        let mut new_adj: Vec<HashMap<usize, f64>> = vec![HashMap::new(); m];
        let mut new_self = vec![0.0; m];
        for (ci, comm) in communities.iter().enumerate() {
            for &node in comm {
                new_self[ci] += self_loops[node];
                for &(v, w) in &adj[node] {
                    let cj = comm_of[v];
                    if cj == ci {
                        // Each internal edge is visited from both endpoints.
                        new_self[ci] += w / 2.0;
                    } else {
                        *new_adj[ci].entry(cj).or_insert(0.0) += w;
                    }
                }
            }
        }
        adj = new_adj
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, f64)> = m.into_iter().collect();
                v.sort_by_key(|&(j, _)| j);
                v
            })
            .collect();
        self_loops = new_self;
        groups = level_groups;
    }

    if layers.is_empty() {
        // No merge improved modularity; a flat root over the leaves.
        return Shape::Node(nodes.iter().map(|&i| leaf_shape(ig, i)).collect());
    }

    // Finest layer first: recurse into its communities, then wrap one tree
    // layer per aggregation level.
    let finest = &layers[0];
    let mut shapes: Vec<Shape> = finest
        .iter()
        .map(|members| match members.len() {
            1 => leaf_shape(ig, members[0]),
            2 => Shape::Node(vec![leaf_shape(ig, members[0]), leaf_shape(ig, members[1])]),
            len if len == nodes.len() => {
                // Non-strict refinement; keep flat to guarantee progress.
                Shape::Node(members.iter().map(|&i| leaf_shape(ig, i)).collect())
            }
            _ => build_subtree(ig, members.clone(), ClusteringMethod::Louvain, rng),
        })
        .collect();
    let mut current: Vec<Vec<usize>> = finest.clone();

    for layer in layers.iter().skip(1) {
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (gi, group) in layer.iter().enumerate() {
            for &m in group {
                owner.insert(m, gi);
            }
        }
        let mut buckets: Vec<Vec<Shape>> = (0..layer.len()).map(|_| Vec::new()).collect();
        let mut bucket_members: Vec<Vec<usize>> = (0..layer.len()).map(|_| Vec::new()).collect();
        for (shape, members) in shapes.into_iter().zip(current) {
            let gi = owner[&members[0]];
            buckets[gi].push(shape);
            bucket_members[gi].extend(members);
        }
        shapes = buckets
            .into_iter()
            .map(|mut b| if b.len() == 1 { b.pop().unwrap() } else { Shape::Node(b) })
            .collect();
        current = bucket_members;
    }

    if shapes.len() == 1 {
        shapes.pop().unwrap()
    } else {
        Shape::Node(shapes)
    }
}

fn distinct_communities(assignment: &[usize]) -> Vec<Vec<usize>> {
    let mut by_comm: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, &c) in assignment.iter().enumerate() {
        by_comm.entry(c).or_default().push(node);
    }
    by_comm.into_values().collect()
}

/// Louvain local-moving phase at one level (resolution 1.0).
fn louvain_local_moves(
    adj: &[Vec<(usize, f64)>],
    self_loops: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = adj.len();
    let strength: Vec<f64> = (0..n)
        .map(|i| adj[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self_loops[i])
        .collect();
    let two_m: f64 = strength.iter().sum();
    if two_m <= 0.0 {
        return (0..n).collect();
    }
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot: Vec<f64> = strength.clone();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut improved = true;
    let mut passes = 0;
    while improved && passes < 100 {
        improved = false;
        passes += 1;
        for &i in &order {
            let own = community[i];
            tot[own] -= strength[i];

            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for &(v, w) in &adj[i] {
                *links.entry(community[v]).or_insert(0.0) += w;
            }
            let stay_gain =
                links.get(&own).copied().unwrap_or(0.0) - strength[i] * tot[own] / two_m;

            let mut best_comm = own;
            let mut best_gain = stay_gain;
            for (&c, &w) in &links {
                if c == own {
                    continue;
                }
                let gain = w - strength[i] * tot[c] / two_m;
                if gain > best_gain + 1e-12 {
                    best_gain = gain;
                    best_comm = c;
                }
            }
            tot[best_comm] += strength[i];
            community[i] = best_comm;
            if best_comm != own {
                improved = true;
            }
        }
    }
    community
}

// ----------------------- Conductance bisection ------------------------------

/// Two-way split of a connected subset minimizing conductance over the sweep
/// cuts of the Fiedler vector. Ties break toward the more balanced cut.
fn fiedler_bisect(
    ig: &IndexedGraph,
    nodes: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let n = nodes.len();
    debug_assert!(n >= 3);
    let index: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, &u) in nodes.iter().enumerate() {
        for &(v, w) in &ig.adj[u] {
            if let Some(&j) = index.get(&v) {
                adj[i].push((j, w));
            }
        }
    }
    let fiedler = fiedler_vector(&adj, rng);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fiedler[a].partial_cmp(&fiedler[b]).unwrap().then(a.cmp(&b)));

    let deg: Vec<f64> = adj
        .iter()
        .map(|nb| nb.iter().map(|&(_, w)| w).sum())
        .collect();
    let total_vol: f64 = deg.iter().sum();

    let mut in_s = vec![false; n];
    let mut cut = 0.0;
    let mut vol_s = 0.0;
    let mut best: Option<(f64, usize, usize)> = None; // (phi, imbalance, prefix)
    for (prefix, &v) in order.iter().enumerate().take(n - 1) {
        let mut to_s = 0.0;
        for &(u, w) in &adj[v] {
            if in_s[u] {
                to_s += w;
            }
        }
        cut += deg[v] - 2.0 * to_s;
        vol_s += deg[v];
        in_s[v] = true;
        let min_vol = vol_s.min(total_vol - vol_s);
        if min_vol <= 0.0 {
            continue;
        }
        let phi = cut / min_vol;
        let size_s = prefix + 1;
        let imbalance = size_s.abs_diff(n - size_s);
        let candidate = (phi, imbalance, prefix);
        best = Some(match best {
            None => candidate,
            Some(b) => {
                if phi < b.0 - 1e-12 || ((phi - b.0).abs() <= 1e-12 && imbalance < b.1) {
                    candidate
                } else {
                    b
                }
            }
        });
    }
    let (_, _, prefix) = best.expect("n >= 3 yields at least one sweep cut");
    let mut a: Vec<usize> = order[..=prefix].iter().map(|&i| nodes[i]).collect();
    let mut b: Vec<usize> = order[prefix + 1..].iter().map(|&i| nodes[i]).collect();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Eigenvector of the second-smallest eigenvalue of the combinatorial
/// Laplacian: dense eigensolve for n <= 64, deflated power iteration on
/// `cI - L` otherwise.
fn fiedler_vector(adj: &[Vec<(usize, f64)>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = adj.len();
    let deg: Vec<f64> = adj
        .iter()
        .map(|nb| nb.iter().map(|&(_, w)| w).sum())
        .collect();
    if n <= 64 {
        let mut l: DMatrix<f64> = DMatrix::zeros(n, n);
        for (i, nb) in adj.iter().enumerate() {
            l[(i, i)] = deg[i];
            for &(j, w) in nb {
                l[(i, j)] -= w;
            }
        }
        let eig = SymmetricEigen::new(l);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let col = idx[1];
        return (0..n).map(|i| eig.eigenvectors[(i, col)]).collect();
    }

    let shift = 1.0 + 2.0 * deg.iter().cloned().fold(0.0, f64::max);
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut y = vec![0.0; n];
    for _ in 0..400 {
        for i in 0..n {
            let mut acc = (shift - deg[i]) * x[i];
            for &(j, w) in &adj[i] {
                acc += w * x[j];
            }
            y[i] = acc;
        }
        let mean: f64 = y.iter().sum::<f64>() / n as f64;
        for v in y.iter_mut() {
            *v -= mean;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            for (i, v) in y.iter_mut().enumerate() {
                *v = if i % 2 == 0 { inv_sqrt_n } else { -inv_sqrt_n };
            }
        } else {
            for v in y.iter_mut() {
                *v /= norm;
            }
        }
        std::mem::swap(&mut x, &mut y);
    }
    x
}

// --------------------------- Label propagation ------------------------------

/// Flat partition via label propagation; labels start distinct and nodes
/// adopt the weighted-majority neighbor label.
fn label_prop_partition(
    ig: &IndexedGraph,
    nodes: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let n = nodes.len();
    let index: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    for _ in 0..50 {
        let mut changed = false;
        for &i in &order {
            let mut weight: BTreeMap<usize, f64> = BTreeMap::new();
            for &(v, w) in &ig.adj[nodes[i]] {
                if let Some(&j) = index.get(&v) {
                    *weight.entry(labels[j]).or_insert(0.0) += w;
                }
            }
            if weight.is_empty() {
                continue;
            }
            let max_w = weight.values().cloned().fold(f64::MIN, f64::max);
            let candidates: Vec<usize> = weight
                .iter()
                .filter(|(_, &w)| (w - max_w).abs() < 1e-12)
                .map(|(&l, _)| l)
                .collect();
            let new = if candidates.contains(&labels[i]) {
                labels[i]
            } else {
                candidates[rng.random_range(0..candidates.len())]
            };
            if new != labels[i] {
                labels[i] = new;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(nodes[i]);
    }
    by_label.into_values().collect()
}
