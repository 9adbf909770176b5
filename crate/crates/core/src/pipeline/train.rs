use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use srlgnn_tensor::{AdamConfig, AdamState, ParamStore, Precision, Scalar, Tape, Tensor, TensorError};

use super::config::ExperimentConfig;
use super::data::{build_vocab, load_split, Example, Split};
use super::report::{score_predictions, EpochStats, RunReport};
use super::trained::{build_model, predict_with, write_predictions, Params, Prediction, TrainedModel};
use crate::encoder::TransformerEncoder;
use crate::error::{Error, Result};
use crate::gnn::{init_gnn_params, SrlGnn};
use crate::srl::{parse_srl_file, SrlAnnotations};

/// File names written into an output directory.
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: TrainedModel,
    /// Report on the training split with the final parameters.
    pub report: RunReport,
    pub predictions: Vec<Prediction>,
}

impl TrainOutput {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
        self.model.save(&dir.join(CHECKPOINT_FILE))?;
        self.report.write(&dir.join(REPORT_FILE))?;
        write_predictions(&dir.join(PREDICTIONS_FILE), &self.predictions)
    }
}

pub(crate) fn load_srl(cfg: &ExperimentConfig) -> Result<Option<SrlAnnotations>> {
    cfg.srl.as_ref().map(|p| parse_srl_file(p, None)).transpose()
}

/// Trains from scratch. Parameter init and the per-epoch shuffles share one
/// ChaCha8 stream seeded by the experiment seed, so a run is a pure
/// function of its config. Writes checkpoint, report and training-set
/// predictions into `out_dir` when given.
pub fn train(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<TrainOutput> {
    let start = Instant::now();
    cfg.validate()?;
    let schema = cfg.schema()?;
    let srl = load_srl(cfg)?;
    let split = load_split(&cfg.train, &schema, srl.as_ref(), cfg.context_n)?;
    if split.examples.is_empty() {
        return Err(Error::Config(format!("{} has no training targets", cfg.train.display())));
    }
    let vocab = build_vocab(&split.conversations, &schema.labels);
    let model = build_model(cfg.model_config, vocab, schema.labels.clone())?;

    let (params, epochs) = match cfg.precision {
        Precision::F32 => {
            let (p, e) = fit::<f32>(&model, &split.examples, cfg)?;
            (Params::F32(p), e)
        }
        Precision::F64 => {
            let (p, e) = fit::<f64>(&model, &split.examples, cfg)?;
            (Params::F64(p), e)
        }
    };
    let trained = TrainedModel { model, params };
    let predictions = trained.predict(&split.examples)?;
    let report = make_report("train", cfg, &split, &predictions, epochs, start)?;
    let out = TrainOutput {
        model: trained,
        report,
        predictions,
    };
    if let Some(dir) = out_dir {
        out.write(dir)?;
    }
    Ok(out)
}

pub(crate) fn make_report(
    command: &str,
    cfg: &ExperimentConfig,
    split: &Split,
    predictions: &[Prediction],
    epochs: Vec<EpochStats>,
    start: Instant,
) -> Result<RunReport> {
    let labels = cfg.schema()?.labels;
    Ok(RunReport {
        command: command.into(),
        corpus: if command == "train" {
            cfg.train.clone()
        } else {
            cfg.eval_corpus().to_path_buf()
        },
        experiment: cfg.clone(),
        model: cfg.model_config,
        seed: cfg.seed(),
        epochs,
        targets: split.examples.len(),
        missing_srl: split.missing_srl,
        metrics: score_predictions(predictions, &labels)?,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Fresh parameters for `model` drawn from `rng`.
pub fn init_params<T: Scalar>(model: &SrlGnn<TransformerEncoder>, rng: &mut ChaCha8Rng) -> Result<ParamStore<T>> {
    let mut store = ParamStore::new();
    model.encoder.init_params(&mut store, rng)?;
    init_gnn_params(&model.config, &mut store, rng)?;
    Ok(store)
}

struct WindowGrad<T> {
    loss: f64,
    grads: Vec<Tensor<T>>,
}

fn window_grad<T: Scalar>(
    model: &SrlGnn<TransformerEncoder>,
    params: &ParamStore<T>,
    ex: &Example,
) -> Result<WindowGrad<T>> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let (loss, _) = model.window_loss(&mut tape, &bound, &ex.window, ex.graph.as_ref())?;
    let value = tape.value(loss).data()[0].as_f64();
    tape.backward(loss)?;
    Ok(WindowGrad {
        loss: value,
        grads: bound.grads(&tape),
    })
}

fn fit<T: Scalar>(
    model: &SrlGnn<TransformerEncoder>,
    examples: &[Example],
    cfg: &ExperimentConfig,
) -> Result<(ParamStore<T>, Vec<EpochStats>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut params = init_params::<T>(model, &mut rng)?;
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &params,
    );
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::new();

    // epochs and batches are numbered from 1 in logs and errors
    for epoch in 1..=cfg.epochs()? {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch, idx) in (1..).zip(order.chunks(cfg.batch_size)) {
            // per-window passes run in parallel; the sum below runs in batch
            // order so results do not depend on thread scheduling
            let parts: Vec<WindowGrad<T>> = idx
                .par_iter()
                .map(|&i| window_grad(model, &params, &examples[i]))
                .collect::<Result<_>>()
                .map_err(|e| match e {
                    Error::Tensor(TensorError::NonFinite { op }) => Error::NonFiniteLoss {
                        epoch,
                        batch,
                        cause: format!("{op} produced a non-finite value"),
                    },
                    other => other,
                })?;
            let scale = T::of(1.0 / parts.len() as f64);
            let mut total: Vec<Tensor<T>> = params.values().map(|p| Tensor::zeros(p.shape())).collect();
            for part in &parts {
                if !part.loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch,
                        cause: format!("loss is {}", part.loss),
                    });
                }
                loss_sum += part.loss;
                for (acc, g) in total.iter_mut().zip(&part.grads) {
                    for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += b * scale;
                    }
                }
            }
            adam.update(&mut params, &total)?;
        }
        let mean_loss = loss_sum / examples.len() as f64;
        let mut stats = EpochStats {
            epoch,
            mean_loss,
            train_accuracy: None,
        };
        log::info!("epoch {epoch}: mean loss {mean_loss:.6}");
        if cfg.stop_at_train_accuracy {
            let preds = predict_with(model, &params, examples)?;
            let correct = preds.iter().filter(|p| p.gold == p.pred).count();
            let acc = correct as f64 / preds.len() as f64;
            stats.train_accuracy = Some(acc);
            history.push(stats);
            if correct == preds.len() {
                log::info!("training accuracy reached 1.0 after epoch {epoch}");
                break;
            }
            continue;
        }
        history.push(stats);
    }
    Ok((params, history))
}
