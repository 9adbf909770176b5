mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srlgnn::corpus::{ContextWindow, LabelSet, Utterance};
use srlgnn::encoder::{tokenize, StaticEncoder, StaticTable, Vocab};
use srlgnn::gnn::{
    argmax_first, attention_readout, binary_head, gcn_layer, init_gnn_params, init_nodes, mean_adjacency,
    Activation, AttentionMode, ModelConfig, NeighborTransform, SrlGnn,
};
use srlgnn::srl::{build_graph, PaGraph, SrlFrame};
use srlgnn::Error;
use srlgnn_tensor::{ParamStore, Tape, Tensor, TensorError};
use support::fidelity::stage_errors;
use support::*;

fn cfg(d_lm: usize, d_gcn: usize) -> ModelConfig {
    ModelConfig {
        d_lm,
        d_gcn,
        n_heads: 1,
        ..ModelConfig::default()
    }
}

fn frame(p: [usize; 2], args: &[[usize; 2]]) -> SrlFrame {
    SrlFrame {
        predicate: p.into(),
        arguments: args.iter().map(|&a| a.into()).collect(),
    }
}

fn store(entries: Vec<(&str, Tensor<f64>)>) -> ParamStore<f64> {
    let mut s = ParamStore::new();
    for (name, t) in entries {
        s.insert(name, t).unwrap();
    }
    s
}

#[test]
fn stages_match_scalar_loops() {
    for seed in 0..100 {
        let e = stage_errors(seed);
        assert!(e.init_nodes < 1e-6, "seed {seed}: {e:?}");
        assert!(e.gcn_layer < 1e-6, "seed {seed}: {e:?}");
        assert!(e.attention_readout < 1e-6, "seed {seed}: {e:?}");
        assert!(e.binary_head < 1e-6, "seed {seed}: {e:?}");
    }
}

#[test]
fn single_token_node_with_unit_basis_is_that_basis_vector() {
    // identity-padded W: d_lm = 6, d_gcn = 6
    let table = StaticTable::<f64>::unit_basis(6, 6);
    let tokens = table.embeddings.clone();
    let graph = build_graph(&[frame([0, 1], &[[1, 2]])], 2);
    let s = store(vec![("gnn.w_init", Tensor::identity(6))]);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let tok = tape.constant(tokens);
    let h = init_nodes(&mut tape, &p, tok, &graph, &(3..5), Activation::Relu)
        .unwrap()
        .unwrap();
    assert_eq!(tape.value(h).row_slice(0), table.embeddings.row_slice(3));
    assert_eq!(tape.value(h).row_slice(1), table.embeddings.row_slice(4));
}

#[test]
fn two_token_node_averages() {
    let tokens = Tensor::from_rows(&[vec![0.0, 0.0], vec![1.0, 3.0], vec![2.0, -1.0]]).unwrap();
    let graph = build_graph(&[frame([0, 2], &[])], 2);
    let w = Tensor::from_rows(&[vec![1.0, 0.5], vec![2.0, -1.0]]).unwrap();
    let s = store(vec![("gnn.w_init", w)]);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let tok = tape.constant(tokens);
    let h = init_nodes(&mut tape, &p, tok, &graph, &(1..3), Activation::Tanh)
        .unwrap()
        .unwrap();
    // mean = (1.5, 1.0); pre = (1.5 + 2.0, 0.75 - 1.0)
    let got = tape.value(h).data();
    assert!((got[0] - 3.5f64.tanh()).abs() < 1e-12);
    assert!((got[1] - (-0.25f64).tanh()).abs() < 1e-12);
}

#[test]
fn isolated_node_sees_only_itself() {
    let graph = build_graph(&[frame([0, 1], &[])], 1);
    let w = Tensor::from_rows(&[vec![1.0, -2.0], vec![0.5, 1.0]]).unwrap();
    let s = store(vec![("gnn.layer0.v", Tensor::full(&[2, 2], 9.0)), ("gnn.layer0.w", w)]);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let h = tape.constant(Tensor::row(vec![1.0, 2.0]));
    let adj = tape.constant(mean_adjacency(&graph));
    let out = gcn_layer(&mut tape, &p, h, adj, 0, &cfg(2, 2)).unwrap();
    // h W = (1 + 1, -2 + 2) = (2, 0)
    assert_eq!(tape.value(out).data(), &[2.0, 0.0]);
}

#[test]
fn identity_weights_sum_the_pair() {
    let graph = build_graph(&[frame([0, 1], &[[1, 2]])], 2);
    let s = store(vec![("gnn.layer0.v", Tensor::identity(2)), ("gnn.layer0.w", Tensor::identity(2))]);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let h = tape.constant(Tensor::from_rows(&[vec![1.0, -3.0], vec![0.5, 1.0]]).unwrap());
    let adj = tape.constant(mean_adjacency(&graph));
    let out = gcn_layer(&mut tape, &p, h, adj, 0, &cfg(2, 2)).unwrap();
    assert_eq!(tape.value(out).data(), &[1.5, 0.0, 1.5, 0.0]);
}

#[test]
fn identity_neighbor_transform_skips_v() {
    let graph = build_graph(&[frame([0, 1], &[[1, 2]])], 2);
    let s = store(vec![("gnn.layer0.w", Tensor::zeros(&[2, 2]))]);
    let c = ModelConfig {
        neighbor_transform: NeighborTransform::Identity,
        ..cfg(2, 2)
    };
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let h = tape.constant(Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
    let adj = tape.constant(mean_adjacency(&graph));
    let out = gcn_layer(&mut tape, &p, h, adj, 0, &c).unwrap();
    assert_eq!(tape.value(out).data(), &[3.0, 4.0, 1.0, 2.0]);
}

fn readout_store(d_gcn: usize, d_lm: usize, seed: u64) -> ParamStore<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    store(vec![("gnn.w_score", Tensor::from_rows(&random_mat(&mut rng, d_gcn, d_lm)).unwrap())])
}

#[test]
fn single_node_gets_all_the_weight() {
    for mode in [AttentionMode::Softmax, AttentionMode::Literal] {
        let c = ModelConfig {
            attention_mode: mode,
            ..cfg(3, 2)
        };
        // w_score = identity-like so the score is 0.7 * 0.5 + 0.2 * 0.25 > 0
        let s = store(vec![("gnn.w_score", Tensor::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap())]);
        let mut tape = Tape::new();
        let p = s.bind_frozen(&mut tape);
        let h = tape.constant(Tensor::row(vec![0.5, 0.25]));
        let cls = tape.constant(Tensor::row(vec![0.7, 0.2, -1.0]));
        let out = attention_readout(&mut tape, &p, Some(h), cls, &c).unwrap();
        assert!((tape.value(out.alpha.unwrap()).data()[0] - 1.0).abs() < 1e-12);
        assert_eq!(tape.value(out.graph).data(), &[0.5, 0.25]);
    }
}

#[test]
fn equal_scores_split_evenly() {
    let s = readout_store(2, 3, 1);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let h = tape.constant(Tensor::from_rows(&[vec![0.4, -0.2], vec![0.4, -0.2]]).unwrap());
    let cls = tape.constant(Tensor::row(vec![0.3, 0.1, 0.9]));
    let out = attention_readout(&mut tape, &p, Some(h), cls, &cfg(3, 2)).unwrap();
    assert_eq!(tape.value(out.alpha.unwrap()).data(), &[0.5, 0.5]);
}

#[test]
fn literal_mode_rejects_vanishing_denominator() {
    let c = ModelConfig {
        attention_mode: AttentionMode::Literal,
        ..cfg(2, 2)
    };
    // relu(h W1) is zero for both nodes, so every score is zero
    let s = store(vec![("gnn.w_score", Tensor::identity(2))]);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let h = tape.constant(Tensor::from_rows(&[vec![-1.0, -1.0], vec![-2.0, -0.5]]).unwrap());
    let cls = tape.constant(Tensor::row(vec![1.0, 1.0]));
    let err = attention_readout(&mut tape, &p, Some(h), cls, &c).unwrap_err();
    assert!(matches!(err, Error::Tensor(TensorError::VanishingDenominator { .. })), "{err}");
}

#[test]
fn empty_graph_reads_out_zeros() {
    let s = readout_store(4, 3, 2);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let cls = tape.constant(Tensor::row(vec![0.3, 0.1, 0.9]));
    let out = attention_readout(&mut tape, &p, None, cls, &cfg(3, 4)).unwrap();
    assert!(out.alpha.is_none());
    assert_eq!(tape.value(out.graph).data(), &[0.0; 4]);
}

#[test]
fn zero_head_weights_give_the_bias() {
    let s = store(vec![("head.w", Tensor::zeros(&[5, 1])), ("head.b", Tensor::scalar(-0.8))]);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let cls = tape.constant(Tensor::row(vec![3.0, 1.0, 2.0]));
    let g = tape.constant(Tensor::row(vec![7.0, -1.0]));
    let logit = binary_head(&mut tape, &p, cls, g).unwrap();
    assert_eq!(tape.value(logit).data(), &[-0.8]);
}

#[test]
fn head_rejects_wrong_width() {
    let s = store(vec![("head.w", Tensor::zeros(&[5, 1])), ("head.b", Tensor::scalar(0.0))]);
    let mut tape = Tape::new();
    let p = s.bind_frozen(&mut tape);
    let cls = tape.constant(Tensor::row(vec![3.0, 1.0]));
    let g = tape.constant(Tensor::row(vec![7.0, -1.0]));
    assert!(matches!(
        binary_head(&mut tape, &p, cls, g),
        Err(Error::DimMismatch { expected: 5, actual: 4, .. })
    ));
}

/// A static-encoder model over a tiny vocabulary.
fn static_model(seed: u64) -> (SrlGnn<StaticEncoder<f64>>, ParamStore<f64>, ContextWindow) {
    let labels = LabelSet::iemocap4();
    let mut vocab = Vocab::new();
    for t in tokenize("i love you . that statement expressed") {
        vocab.add(&t);
    }
    for w in labels.words() {
        vocab.add(w);
    }
    let d_lm = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = StaticTable::new(Tensor::from_rows(&random_mat(&mut rng, vocab.len(), d_lm)).unwrap());
    let config = ModelConfig {
        d_lm,
        d_gcn: 3,
        n_heads: 1,
        ..ModelConfig::default()
    };
    let mut params = ParamStore::new();
    init_gnn_params(&config, &mut params, &mut rng).unwrap();
    let window = ContextWindow {
        conv_id: "c".into(),
        target: Utterance {
            id: "u".into(),
            speaker: "A".into(),
            text: "I love you.".into(),
            votes: vec![],
            gold: Some("sad".into()),
        },
        context: vec![],
        n_requested: 0,
    };
    (
        SrlGnn::new(config, StaticEncoder::new(table), vocab, labels),
        params,
        window,
    )
}

#[test]
fn empty_graph_logit_is_head_of_cls_and_zero() {
    let (model, params, window) = static_model(5);
    let out = model.classify(&params, &window, None).unwrap();
    assert!(out.alphas.values().all(Vec::is_empty));
    for (i, label) in model.labels.iter().enumerate() {
        let seq = srlgnn::encoder::build_input(&window, model.labels.word(i), &model.vocab, 128).unwrap();
        let cls = model.encoder.table.embeddings.row_slice(seq.token_ids[0]);
        let w = params.get("head.w").unwrap().data();
        let b = params.get("head.b").unwrap().data()[0];
        let want = oracle_head(cls, &[0.0; 3], w, b);
        assert!((out.logits[label] - want).abs() < 1e-12);
    }
}

#[test]
fn graph_changes_logits_and_alphas_sum_to_one() {
    let (model, params, window) = static_model(6);
    let graph = build_graph(&[frame([1, 2], &[[0, 1], [2, 3]])], 4);
    let with = model.classify(&params, &window, Some(&graph)).unwrap();
    let without = model.classify(&params, &window, None).unwrap();
    assert_ne!(with.logits, without.logits);
    for alpha in with.alphas.values() {
        assert_eq!(alpha.len(), 3);
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let mut forced = model.clone();
    forced.force_empty_graph = true;
    assert_eq!(forced.classify(&params, &window, Some(&graph)).unwrap().logits, without.logits);
}

#[test]
fn truncated_target_drops_graph_nodes() {
    let (mut model, params, mut window) = static_model(7);
    window.context = vec![window.target.clone()];
    // [CLS] + 2 target tokens + [SEP] + 4 aux + [SEP] = 9: drops "i love"
    model.config.t_max = 9;
    let graph = build_graph(&[frame([1, 2], &[[0, 1], [2, 3]])], 4);
    let out = model.classify(&params, &window, Some(&graph)).unwrap();
    assert!(out.alphas.values().all(|a| a.len() == 1));
}

#[test]
fn prediction_is_first_maximal_logit() {
    let (model, params, window) = static_model(8);
    let out = model.classify(&params, &window, None).unwrap();
    let logits: Vec<f64> = out.logits.values().copied().collect();
    assert_eq!(out.predicted, model.labels.label(argmax_first(&logits).unwrap()));
}

#[test]
fn end_to_end_gradients_match_finite_differences() {
    let report = srlgnn::gradcheck::run(7).unwrap();
    for g in &report.parameters {
        assert!(g.max_relative_error < 1e-4, "{}: {}", g.group, g.max_relative_error);
    }
    for g in &report.ops {
        assert!(g.max_relative_error < 1e-6, "{}: {}", g.group, g.max_relative_error);
    }
    let groups: Vec<&str> = report.groups.iter().map(|g| g.group.as_str()).collect();
    for want in ["encoder embeddings", "encoder blocks", "W_init", "V_l", "W_l", "W_1", "head"] {
        assert!(groups.contains(&want), "{want} not checked");
    }
}

fn permuted(graph_edges: &[(usize, usize)], perm: &[usize]) -> PaGraph {
    // only the edge structure matters to mean_adjacency
    let mut g = PaGraph::empty(0);
    g.nodes = (0..perm.len())
        .map(|i| srlgnn::srl::PaNode {
            id: i,
            span: srlgnn::srl::Span::new(i, i + 1),
            kind: srlgnn::srl::NodeKind::Argument,
        })
        .collect();
    g.edges = graph_edges
        .iter()
        .map(|&(a, b)| (perm[a].min(perm[b]), perm[a].max(perm[b])))
        .collect();
    g
}

proptest! {
    #[test]
    fn permutation_equivariance(seed in 0u64..1000, n in 1usize..7, shuffle in 0u64..1000) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d_lm, d_gcn) = (4, 3);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let h = random_mat(&mut rng, n, d_gcn);
        let cls = random_mat(&mut rng, 1, d_lm);
        let s = store(vec![
            ("gnn.layer0.v", Tensor::from_rows(&random_mat(&mut rng, d_gcn, d_gcn)).unwrap()),
            ("gnn.layer0.w", Tensor::from_rows(&random_mat(&mut rng, d_gcn, d_gcn)).unwrap()),
            ("gnn.w_score", Tensor::from_rows(&random_mat(&mut rng, d_gcn, d_lm)).unwrap()),
        ]);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let identity: Vec<usize> = (0..n).collect();

        let run = |perm: &[usize]| {
            // node i moves to position perm[i]
            let mut rows = vec![Vec::new(); n];
            for i in 0..n {
                rows[perm[i]] = h[i].clone();
            }
            let c = cfg(d_lm, d_gcn);
            let mut tape = Tape::new();
            let p = s.bind_frozen(&mut tape);
            let hv = tape.constant(Tensor::from_rows(&rows).unwrap());
            let adj = tape.constant(mean_adjacency(&permuted(&edges, perm)));
            let h1 = gcn_layer(&mut tape, &p, hv, adj, 0, &c).unwrap();
            let cv = tape.constant(Tensor::from_rows(&cls).unwrap());
            let out = attention_readout(&mut tape, &p, Some(h1), cv, &c).unwrap();
            (tape.value(out.alpha.unwrap()).data().to_vec(), tape.value(out.graph).data().to_vec())
        };
        let (alpha, hg) = run(&identity);
        let (alpha_p, hg_p) = run(&perm);
        for i in 0..n {
            prop_assert!((alpha[i] - alpha_p[perm[i]]).abs() < 1e-6);
        }
        prop_assert!(max_abs_diff(&hg, &hg_p) < 1e-6);
    }

    #[test]
    fn alpha_is_a_distribution(seed in 0u64..2000, n in 1usize..8, literal in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d_lm, d_gcn) = (5, 3);
        let h = Tensor::from_rows(&random_mat(&mut rng, n, d_gcn)).unwrap();
        let cls = Tensor::from_rows(&random_mat(&mut rng, 1, d_lm)).unwrap();
        let s = readout_store(d_gcn, d_lm, seed);
        let c = ModelConfig {
            attention_mode: if literal { AttentionMode::Literal } else { AttentionMode::Softmax },
            ..cfg(d_lm, d_gcn)
        };
        let mut tape = Tape::new();
        let p = s.bind_frozen(&mut tape);
        let hv = tape.constant(h);
        let cv = tape.constant(cls);
        match attention_readout(&mut tape, &p, Some(hv), cv, &c) {
            Ok(out) => {
                let total: f64 = tape.value(out.alpha.unwrap()).data().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-6);
            }
            // literal mode legitimately refuses a (near-)zero score sum
            Err(Error::Tensor(TensorError::VanishingDenominator { .. })) => prop_assert!(literal),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn argmax_survives_increasing_maps(logits in proptest::collection::vec(-20.0f64..20.0, 1..9)) {
        let best = argmax_first(&logits);
        let cubed: Vec<f64> = logits.iter().map(|x| x * x * x + 2.0 * x).collect();
        let squashed: Vec<f64> = logits.iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect();
        let affine: Vec<f64> = logits.iter().map(|x| 3.0 * x - 7.0).collect();
        prop_assert_eq!(argmax_first(&cubed), best);
        prop_assert_eq!(argmax_first(&affine), best);
        // the logistic squashes distinct large logits to equal floats, so
        // only check it where it stays injective
        if logits.iter().all(|x| x.abs() < 15.0) {
            prop_assert_eq!(argmax_first(&squashed), best);
        }
    }
}
