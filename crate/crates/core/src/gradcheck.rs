//! Finite-difference check of the full classifier on a small fixed input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use srlgnn_tensor::gradcheck::{grad_check_params_smooth, op_suite, DEFAULT_EPS};
use srlgnn_tensor::{ParamStore, Tape};

use crate::corpus::{ContextWindow, LabelSet, Utterance};
use crate::encoder::{tokenize, TransformerEncoder, Vocab};
use crate::error::{Error, Result};
use crate::gnn::{init_gnn_params, ModelConfig, SrlGnn};
use crate::srl::{build_graph, PaGraph, SrlFrame};

#[derive(Debug, Clone, Serialize)]
pub struct GroupError {
    pub group: String,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    /// Generator stream the checked parameters came from.
    pub draw: u64,
    /// Per differentiable tensor op.
    pub ops: Vec<GroupError>,
    /// Per parameter of the full model.
    pub parameters: Vec<GroupError>,
    /// Parameters folded into groups (encoder embeddings, encoder blocks,
    /// node init, each graph layer's transforms, scorer, head).
    pub groups: Vec<GroupError>,
}

/// Largest accepted relative error for a single tensor op.
pub const OP_TOLERANCE: f64 = 1e-6;
/// Largest accepted relative error for a model parameter.
pub const MODEL_TOLERANCE: f64 = 1e-4;

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_op_error() < OP_TOLERANCE && self.max_model_error() < MODEL_TOLERANCE
    }

    pub fn max_op_error(&self) -> f64 {
        self.ops.iter().map(|g| g.max_relative_error).fold(0.0, f64::max)
    }

    pub fn max_model_error(&self) -> f64 {
        self.parameters.iter().map(|g| g.max_relative_error).fold(0.0, f64::max)
    }
}

/// Group a parameter name for reporting.
pub fn param_group(name: &str) -> &'static str {
    match name {
        "enc.tok_emb" | "enc.seg_emb" => "encoder embeddings",
        "gnn.w_init" => "W_init",
        "gnn.w_score" => "W_1",
        n if n.starts_with("enc.") => "encoder blocks",
        n if n.starts_with("gnn.layer") && n.ends_with(".v") => "V_l",
        n if n.starts_with("gnn.layer") && n.ends_with(".w") => "W_l",
        n if n.starts_with("head.") => "head",
        _ => "other",
    }
}

/// Parameter draws tried per seed before giving up.
pub const MAX_DRAWS: u64 = 256;

pub struct GradcheckFixture {
    pub model: SrlGnn<TransformerEncoder>,
    pub params: ParamStore<f64>,
    pub window: ContextWindow,
    pub graph: PaGraph,
    /// Stream of the seed the parameters came from.
    pub draw: u64,
}

/// `d_lm = 8`, `d_gcn = 4`, two encoder blocks, four labels; the target
/// "i love you ." carries one frame giving a three-node path graph.
/// Parameters come from stream `draw` of a generator seeded with `seed`.
pub fn fixture(seed: u64, draw: u64) -> Result<GradcheckFixture> {
    let config = ModelConfig {
        d_lm: 8,
        d_gcn: 4,
        n_heads: 2,
        n_enc_layers: 2,
        t_max: 32,
        seed,
        ..ModelConfig::default()
    };
    let labels = LabelSet::iemocap4();
    let utt = |id: &str, text: &str, gold: Option<&str>| Utterance {
        id: id.into(),
        speaker: "A".into(),
        text: text.into(),
        votes: vec![],
        gold: gold.map(Into::into),
    };
    let window = ContextWindow {
        conv_id: "g".into(),
        target: utt("u1", "i love you .", Some("hap")),
        context: vec![utt("u0", "where were you", None)],
        n_requested: 1,
    };
    let mut vocab = Vocab::new();
    for text in ["where were you i love you .", "that statement expressed"] {
        tokenize(text).iter().for_each(|t| {
            vocab.add(t);
        });
    }
    for w in labels.words() {
        vocab.add(w);
    }
    let frames = [SrlFrame {
        predicate: [1, 2].into(),
        arguments: vec![[0, 1].into(), [2, 3].into()],
    }];
    let graph = build_graph(&frames, 4);

    let encoder = TransformerEncoder::new(config.encoder(), vocab.len())?;
    let model = SrlGnn::new(config, encoder, vocab, labels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    let mut params = ParamStore::new();
    model.encoder.init_params(&mut params, &mut rng)?;
    init_gnn_params(&model.config, &mut params, &mut rng)?;
    Ok(GradcheckFixture {
        model,
        params,
        window,
        graph,
        draw,
    })
}

impl GradcheckFixture {
    /// Whether every parameter tensor receives some nonzero gradient, so
    /// that checking it is not vacuous.
    pub fn all_parameters_live(&self) -> Result<bool> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let (loss, _) = self.model.window_loss(&mut tape, &bound, &self.window, Some(&self.graph))?;
        tape.backward(loss)?;
        Ok(bound.grads(&tape).iter().all(|g| g.data().iter().any(|&v| v != 0.0)))
    }
}

/// Runs the op suite and the end-to-end check of the summed one-vs-all
/// loss with respect to every model parameter, all at 64-bit.
pub fn run(seed: u64) -> Result<GradcheckReport> {
    let ops = op_suite(seed)?
        .into_iter()
        .map(|(name, err)| GroupError {
            group: name.to_string(),
            max_relative_error: err,
        })
        .collect();

    // Draws where a parameter gets no gradient, or where some probe
    // crosses a ReLU kink, cannot say anything about the gradient code;
    // move on to the next stream of the same seed.
    let mut accepted = None;
    for draw in 0..MAX_DRAWS {
        let fx = fixture(seed, draw)?;
        if !fx.all_parameters_live()? {
            continue;
        }
        let checked = grad_check_params_smooth(&fx.params, DEFAULT_EPS, |tape, p| {
            fx.model
                .window_loss(tape, p, &fx.window, Some(&fx.graph))
                .map(|(loss, _)| loss)
        })?;
        if let Some(per_param) = checked {
            accepted = Some((draw, per_param));
            break;
        }
    }
    let (draw, per_param) = accepted.ok_or_else(|| {
        Error::Config(format!("no kink-free gradient-check draw in {MAX_DRAWS} streams of seed {seed}"))
    })?;

    let mut groups: Vec<GroupError> = Vec::new();
    for (name, err) in &per_param {
        let g = param_group(name);
        match groups.iter_mut().find(|e| e.group == g) {
            Some(e) => e.max_relative_error = e.max_relative_error.max(*err),
            None => groups.push(GroupError {
                group: g.to_string(),
                max_relative_error: *err,
            }),
        }
    }
    Ok(GradcheckReport {
        seed,
        draw,
        ops,
        parameters: per_param
            .into_iter()
            .map(|(group, max_relative_error)| GroupError {
                group,
                max_relative_error,
            })
            .collect(),
        groups,
    })
}
