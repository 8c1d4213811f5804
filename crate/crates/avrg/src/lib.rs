//! Attributed vertex replacement grammars (AVRGs).
//!
//! An AVRG is a set of graph rewriting rules `X -> (R, f)` extracted from a
//! node-attributed graph: `X` is a nonterminal of size `omega`, `R` is an
//! attributed subgraph whose nodes carry boundary degrees summing to `omega`,
//! and `f` counts how often the rule occurred. Extraction walks a hierarchical
//! clustering dendrogram, repeatedly cutting out small subgraphs and
//! contracting them into nonterminal placeholders. Generation runs the process
//! in reverse, stochastically expanding nonterminals until a terminal-only
//! graph remains.
//!
//! The crate is organized around that pipeline:
//!
//! * [`graph`] — the attributed multigraph value type and its statistics
//!   (degrees, mixing matrix, assortativities, subgraphs, boundary edges);
//! * [`hierarchy`] — dendrogram construction (Louvain, conductance bisection,
//!   label propagation), Normalized Dasgupta Cost, and dendrogram file I/O;
//! * [`grammar`] — rules, attribute-aware rule isomorphism, description
//!   length, and grammar persistence;
//! * [`extract`] — the extract–contract loop producing a grammar plus a
//!   replayable derivation log;
//! * [`mod@generate`] — stochastic generation under three rewiring policies, and
//!   deterministic replay of a derivation log;
//! * [`metrics`] — graph-vs-graph fidelity measures (lambda-distance,
//!   assortativity deltas, colored graphlet census);
//! * [`synthetic`] — built-in test graphs (the nine-node worked example and a
//!   class-assortative preferential-attachment generator).
//!
//! All randomness is drawn from ChaCha8 streams seeded with a caller-supplied
//! 64-bit seed, so every operation is a pure function of its inputs.

pub mod extract;
pub mod generate;
pub mod grammar;
pub mod graph;
pub mod hierarchy;
pub mod metrics;
pub mod synthetic;

pub use extract::{extract_grammar, DerivationLog, DerivationStep};
pub use generate::{generate, replay, GenerationConfig, GrowthTrace, RewiringPolicy};
pub use grammar::{Grammar, Rule};
pub use graph::{AttributedGraph, MixingMatrix, NodeId, NodeKind};
pub use hierarchy::{build_dendrogram, ndc, ClusteringMethod, Dendrogram};
pub use metrics::{evaluate, lambda_distance, EvalReport};
