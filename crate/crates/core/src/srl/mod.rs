//! Predicate-argument structure of the utterance being classified.
//!
//! Frames come from an annotation file (no labeller is bundled) and are
//! turned into an undirected graph: one node per distinct token span, an
//! edge between each predicate and its arguments, and an edge between any
//! two nodes whose spans are strictly nested.

mod frames;
mod graph;

pub use frames::{parse_frames, parse_srl_file, srl_key, SrlAnnotations, SrlFrame, Span};
pub use graph::{build_graph, graph_stats, GraphStats, NodeKind, PaGraph, PaNode};
