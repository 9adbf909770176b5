//! Graph layers on top of the tape. Everything is in row-vector form: node
//! embeddings are the rows of an `[n_nodes, d]` matrix and weights multiply
//! from the right.

use std::ops::Range;

use rand::Rng;
use srlgnn_tensor::{Bound, ParamStore, Scalar, Tape, Tensor, Var};

use super::config::{Activation, AttentionMode, ModelConfig, NeighborTransform};
use crate::error::{Error, Result};
use crate::srl::PaGraph;

/// Smallest `|sum of scores|` accepted by literal-mode attention.
pub const LITERAL_MIN_DENOMINATOR: f64 = 1e-8;

pub fn layer_v(l: usize) -> String {
    format!("gnn.layer{l}.v")
}

pub fn layer_w(l: usize) -> String {
    format!("gnn.layer{l}.w")
}

/// Registers `gnn.*` and `head.*` parameters.
pub fn init_gnn_params<T: Scalar, R: Rng>(cfg: &ModelConfig, store: &mut ParamStore<T>, rng: &mut R) -> Result<()> {
    let (d_lm, d_gcn) = (cfg.d_lm, cfg.d_gcn);
    store.insert_uniform("gnn.w_init", d_lm, d_gcn, d_lm, rng)?;
    for l in 0..cfg.n_gcn_layers {
        if cfg.neighbor_transform == NeighborTransform::Learned {
            store.insert_uniform(layer_v(l), d_gcn, d_gcn, d_gcn, rng)?;
        }
        store.insert_uniform(layer_w(l), d_gcn, d_gcn, d_gcn, rng)?;
    }
    store.insert_uniform("gnn.w_score", d_gcn, d_lm, d_gcn, rng)?;
    store.insert_uniform("head.w", d_lm + d_gcn, 1, d_lm + d_gcn, rng)?;
    store.insert_uniform("head.b", 1, 1, d_lm + d_gcn, rng)?;
    Ok(())
}

pub fn activate<T: Scalar>(tape: &mut Tape<T>, x: Var, act: Activation) -> Result<Var> {
    Ok(match act {
        Activation::Relu => tape.relu(x)?,
        Activation::Tanh => tape.tanh(x)?,
    })
}

/// `[n_nodes, seq_len]` averaging matrix: row `i` holds `1/len` at the
/// absolute positions of node `i`'s tokens.
pub fn pooling_matrix<T: Scalar>(graph: &PaGraph, target_span: &Range<usize>, seq_len: usize) -> Result<Tensor<T>> {
    let mut p = Tensor::zeros(&[graph.len(), seq_len]);
    for node in &graph.nodes {
        let (start, end) = (target_span.start + node.span.start, target_span.start + node.span.end);
        if node.span.is_empty() || end > target_span.end {
            return Err(Error::NodeOutsideTarget {
                start: node.span.start,
                end: node.span.end,
                len: target_span.len(),
            });
        }
        let w = T::of(1.0 / node.span.len() as f64);
        let row = node.id * seq_len;
        p.data_mut()[row + start..row + end].iter_mut().for_each(|v| *v = w);
    }
    Ok(p)
}

/// Row-normalized adjacency: row `i` holds `1/|N_i|` at each neighbour, and
/// is all zeros for isolated nodes.
pub fn mean_adjacency<T: Scalar>(graph: &PaGraph) -> Tensor<T> {
    let n = graph.len();
    let mut a = Tensor::zeros(&[n, n]);
    for (i, nbrs) in graph.neighbors().iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        let w = T::of(1.0 / nbrs.len() as f64);
        for &j in nbrs {
            a.data_mut()[i * n + j] = w;
        }
    }
    a
}

/// Node initialization: each node is the mean of its tokens' contextual
/// embeddings, projected by `gnn.w_init` and activated. `tokens` is the
/// encoder output for the whole input; node spans are relative to the
/// target utterance. Returns `None` for an empty graph.
pub fn init_nodes<T: Scalar>(
    tape: &mut Tape<T>,
    p: &Bound<'_, T>,
    tokens: Var,
    graph: &PaGraph,
    target_span: &Range<usize>,
    act: Activation,
) -> Result<Option<Var>> {
    if graph.is_empty() {
        return Ok(None);
    }
    let seq_len = tape.value(tokens).rows();
    let pool = tape.constant(pooling_matrix(graph, target_span, seq_len)?);
    let mean = tape.matmul(pool, tokens)?;
    let pre = tape.matmul(mean, p.var("gnn.w_init")?)?;
    activate(tape, pre, act).map(Some)
}

/// One propagation step: `H' = act(H W_l + A_mean (H V_l))`, with `V_l`
/// omitted under [`NeighborTransform::Identity`].
pub fn gcn_layer<T: Scalar>(
    tape: &mut Tape<T>,
    p: &Bound<'_, T>,
    h: Var,
    adjacency: Var,
    layer: usize,
    cfg: &ModelConfig,
) -> Result<Var> {
    let messages = match cfg.neighbor_transform {
        NeighborTransform::Learned => tape.matmul(h, p.var(&layer_v(layer))?)?,
        NeighborTransform::Identity => h,
    };
    let z = tape.matmul(adjacency, messages)?;
    let own = tape.matmul(h, p.var(&layer_w(layer))?)?;
    let pre = tape.add(own, z)?;
    activate(tape, pre, cfg.activation)
}

/// Runs initialization plus all configured layers. `None` for an empty graph.
pub fn propagate<T: Scalar>(
    tape: &mut Tape<T>,
    p: &Bound<'_, T>,
    tokens: Var,
    graph: &PaGraph,
    target_span: &Range<usize>,
    cfg: &ModelConfig,
) -> Result<Option<Var>> {
    let Some(mut h) = init_nodes(tape, p, tokens, graph, target_span, cfg.activation)? else {
        return Ok(None);
    };
    if cfg.n_gcn_layers > 0 {
        let adjacency = tape.constant(mean_adjacency(graph));
        for l in 0..cfg.n_gcn_layers {
            h = gcn_layer(tape, p, h, adjacency, l, cfg)?;
        }
    }
    Ok(Some(h))
}

#[derive(Debug, Clone, Copy)]
pub struct Readout {
    /// `[1, n_nodes]`, absent for an empty graph.
    pub alpha: Option<Var>,
    /// `[1, d_gcn]`
    pub graph: Var,
}

/// Attention pooling against the `[CLS]` embedding:
/// `score_i = cls . act(h_i W_score)`, normalized over all nodes, and the
/// graph embedding is the `alpha`-weighted sum of node rows.
pub fn attention_readout<T: Scalar>(
    tape: &mut Tape<T>,
    p: &Bound<'_, T>,
    nodes: Option<Var>,
    cls: Var,
    cfg: &ModelConfig,
) -> Result<Readout> {
    let Some(h) = nodes else {
        let graph = tape.constant(Tensor::zeros(&[1, cfg.d_gcn]));
        return Ok(Readout { alpha: None, graph });
    };
    let proj = tape.matmul(h, p.var("gnn.w_score")?)?;
    let proj = activate(tape, proj, cfg.activation)?;
    let proj_t = tape.transpose(proj)?;
    let scores = tape.matmul(cls, proj_t)?;
    let alpha = match cfg.attention_mode {
        AttentionMode::Softmax => tape.softmax(scores)?,
        AttentionMode::Literal => tape.normalize_sum(scores, LITERAL_MIN_DENOMINATOR)?,
    };
    let graph = tape.matmul(alpha, h)?;
    Ok(Readout {
        alpha: Some(alpha),
        graph,
    })
}

/// `logit = [cls ; graph] . head.w + head.b`, shape `[1, 1]`.
pub fn binary_head<T: Scalar>(tape: &mut Tape<T>, p: &Bound<'_, T>, cls: Var, graph: Var) -> Result<Var> {
    let w = p.var("head.w")?;
    let expected = tape.value(w).rows();
    let actual = tape.value(cls).cols() + tape.value(graph).cols();
    if expected != actual {
        return Err(Error::DimMismatch {
            what: "head input",
            expected,
            actual,
        });
    }
    let joined = tape.concat(&[cls, graph])?;
    let logit = tape.matmul(joined, w)?;
    Ok(tape.add(logit, p.var("head.b")?)?)
}
