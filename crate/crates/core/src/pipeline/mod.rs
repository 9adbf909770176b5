//! Experiment orchestration: training from a JSON config, evaluation of
//! checkpoints, and sweeps over the number of context utterances.
//!
//! A run directory holds `checkpoint.bin`, `report.json` and
//! `predictions.jsonl`, one line per target:
//!
//! ```text
//! {"conv_id":"c1","utt_id":"u2","gold":"hap","pred":"neu","logits":{"ang":-0.4,"hap":0.1,"neu":0.3,"sad":-1.2}}
//! ```

mod config;
mod data;
mod eval;
mod report;
mod train;
mod trained;

pub use config::{CustomLabels, ExperimentConfig};
pub use data::{build_vocab, load_split, Example, Split};
pub use eval::{context_sweep, evaluate, evaluate_model, EvalOutput, SweepRow, SweepTable};
pub use report::{score_predictions, EpochStats, RunReport};
pub use train::{init_params, train, TrainOutput, CHECKPOINT_FILE, PREDICTIONS_FILE, REPORT_FILE};
pub use trained::{read_predictions, write_predictions, Params, Prediction, TrainedModel};
