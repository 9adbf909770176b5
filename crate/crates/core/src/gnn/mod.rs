//! Predicate-argument graph network: node initialization from token
//! embeddings, mean-neighbour propagation, attention readout against the
//! `[CLS]` embedding, and the binary head over `[CLS ; graph]`.

mod config;
mod layers;
mod model;

pub use config::{Activation, AttentionMode, ModelConfig, NeighborTransform};
pub use layers::{
    activate, attention_readout, binary_head, gcn_layer, init_gnn_params, init_nodes, layer_v, layer_w,
    mean_adjacency, pooling_matrix, propagate, Readout, LITERAL_MIN_DENOMINATOR,
};
pub use model::{argmax_first, Classification, EmotionForward, SrlGnn};
