use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::frames::{Span, SrlFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Predicate,
    Argument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaNode {
    pub id: usize,
    pub span: Span,
    pub kind: NodeKind,
}

/// Undirected predicate-argument graph over token spans.
///
/// Nodes are ordered by span; edges are stored as `(low_id, high_id)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaGraph {
    pub nodes: Vec<PaNode>,
    pub edges: BTreeSet<(usize, usize)>,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub isolated_nodes: usize,
    pub max_degree: usize,
}

fn edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

pub fn build_graph(frames: &[SrlFrame], token_count: usize) -> PaGraph {
    let mut kinds: BTreeMap<Span, NodeKind> = BTreeMap::new();
    for frame in frames {
        kinds.insert(frame.predicate, NodeKind::Predicate);
        for &arg in &frame.arguments {
            kinds.entry(arg).or_insert(NodeKind::Argument);
        }
    }
    let nodes: Vec<PaNode> = kinds
        .into_iter()
        .enumerate()
        .map(|(id, (span, kind))| PaNode { id, span, kind })
        .collect();
    let id_of = |span: &Span| {
        nodes
            .binary_search_by(|n| n.span.cmp(span))
            .expect("every frame span has a node")
    };

    let mut edges = BTreeSet::new();
    for frame in frames {
        let p = id_of(&frame.predicate);
        for arg in &frame.arguments {
            let a = id_of(arg);
            if a != p {
                edges.insert(edge(p, a));
            }
        }
    }
    for a in &nodes {
        for b in &nodes {
            if a.span.strictly_within(&b.span) {
                edges.insert(edge(a.id, b.id));
            }
        }
    }
    PaGraph {
        nodes,
        edges,
        token_count,
    }
}

pub fn graph_stats(g: &PaGraph) -> GraphStats {
    let degrees = g.degrees();
    GraphStats {
        node_count: g.nodes.len(),
        edge_count: g.edges.len(),
        isolated_nodes: degrees.iter().filter(|&&d| d == 0).count(),
        max_degree: degrees.into_iter().max().unwrap_or(0),
    }
}

impl PaGraph {
    pub fn empty(token_count: usize) -> Self {
        Self {
            nodes: Vec::new(),
            edges: BTreeSet::new(),
            token_count,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// Adjacency lists in ascending neighbour order.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj.iter_mut().for_each(|l| l.sort_unstable());
        adj
    }

    /// The graph seen after the first `dropped` tokens of the utterance were
    /// cut off: nodes touching removed tokens disappear with their edges,
    /// and surviving spans are shifted to the remaining tokens.
    pub fn without_leading_tokens(&self, dropped: usize) -> PaGraph {
        if dropped == 0 {
            return self.clone();
        }
        let mut remap = vec![None; self.nodes.len()];
        let mut nodes = Vec::new();
        for node in &self.nodes {
            if node.span.start >= dropped {
                remap[node.id] = Some(nodes.len());
                nodes.push(PaNode {
                    id: nodes.len(),
                    span: Span::new(node.span.start - dropped, node.span.end - dropped),
                    kind: node.kind,
                });
            }
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(a, b)| Some(edge(remap[a]?, remap[b]?)))
            .collect();
        PaGraph {
            nodes,
            edges,
            token_count: self.token_count.saturating_sub(dropped),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(p: [usize; 2], args: &[[usize; 2]]) -> SrlFrame {
        SrlFrame {
            predicate: p.into(),
            arguments: args.iter().map(|&a| a.into()).collect(),
        }
    }

    #[test]
    fn i_love_you() {
        let g = build_graph(&[frame([1, 2], &[[0, 1], [2, 3]])], 3);
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges, BTreeSet::from([(0, 1), (1, 2)]));
        assert_eq!(g.nodes[1].kind, NodeKind::Predicate);
    }

    #[test]
    fn no_frames_no_graph() {
        let g = build_graph(&[], 5);
        assert!(g.is_empty() && g.edges.is_empty());
        let s = graph_stats(&g);
        assert_eq!((s.node_count, s.edge_count, s.isolated_nodes, s.max_degree), (0, 0, 0, 0));
    }

    #[test]
    fn nested_arguments_from_different_frames_are_linked() {
        let g = build_graph(&[frame([5, 6], &[[0, 2]]), frame([6, 7], &[[0, 4]])], 8);
        let a = g.nodes.iter().find(|n| n.span == Span::new(0, 2)).unwrap().id;
        let b = g.nodes.iter().find(|n| n.span == Span::new(0, 4)).unwrap().id;
        assert!(g.edges.contains(&edge(a, b)));
    }

    #[test]
    fn predicate_kind_wins_and_spans_merge() {
        let g = build_graph(&[frame([0, 1], &[[2, 3]]), frame([2, 3], &[[0, 1]])], 3);
        assert_eq!(g.nodes.len(), 2);
        assert!(g.nodes.iter().all(|n| n.kind == NodeKind::Predicate));
        assert_eq!(g.edges.len(), 1);
    }

    #[test]
    fn path_stats() {
        let g = build_graph(&[frame([1, 2], &[[0, 1], [2, 3]])], 3);
        let s = graph_stats(&g);
        assert_eq!((s.max_degree, s.isolated_nodes), (2, 0));
    }

    #[test]
    fn self_argument_is_not_an_edge() {
        let g = build_graph(&[frame([1, 2], &[[1, 2]])], 3);
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
        assert_eq!(graph_stats(&g).isolated_nodes, 1);
    }

    #[test]
    fn leading_truncation_drops_touched_nodes() {
        // nodes [0,1) [1,2) [1,3) [2,3)
        let g = build_graph(&[frame([1, 2], &[[0, 1], [2, 3]]), frame([2, 3], &[[1, 3]])], 3);
        let cut = g.without_leading_tokens(1);
        let spans: Vec<_> = cut.nodes.iter().map(|n| n.span).collect();
        assert_eq!(spans, vec![Span::new(0, 1), Span::new(0, 2), Span::new(1, 2)]);
        assert_eq!(cut.token_count, 2);
        assert!(cut.edges.iter().all(|&(a, b)| a < cut.len() && b < cut.len()));
        assert_eq!(g.without_leading_tokens(3).len(), 0);
    }
}
