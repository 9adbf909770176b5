use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::data::load_split;
use super::report::RunReport;
use super::train::{load_srl, make_report, train, PREDICTIONS_FILE, REPORT_FILE};
use super::trained::{write_predictions, Prediction, TrainedModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub report: RunReport,
    pub predictions: Vec<Prediction>,
}

impl EvalOutput {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
        self.report.write(&dir.join(REPORT_FILE))?;
        write_predictions(&dir.join(PREDICTIONS_FILE), &self.predictions)
    }
}

/// Scores `model` on the config's evaluation corpus (test, else dev, else
/// train). Parameters are only read.
pub fn evaluate_model(model: &TrainedModel, cfg: &ExperimentConfig) -> Result<EvalOutput> {
    let start = Instant::now();
    cfg.validate()?;
    let schema = cfg.schema()?;
    model.check_compatible(&cfg.model_config, &schema.labels)?;
    let srl = load_srl(cfg)?;
    let split = load_split(cfg.eval_corpus(), &schema, srl.as_ref(), cfg.context_n)?;
    if split.examples.is_empty() {
        return Err(Error::Config(format!("{} has no targets", cfg.eval_corpus().display())));
    }
    let predictions = model.predict(&split.examples)?;
    let report = make_report("eval", cfg, &split, &predictions, Vec::new(), start)?;
    Ok(EvalOutput { report, predictions })
}

/// Loads a checkpoint and scores it. Fails with the first differing field
/// if the checkpoint's model config or labels differ from `cfg`.
pub fn evaluate(checkpoint: &Path, cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<EvalOutput> {
    let model = TrainedModel::load(checkpoint)?;
    let out = evaluate_model(&model, cfg)?;
    if let Some(dir) = out_dir {
        out.write(dir)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub context_n: usize,
    pub seed: u64,
    pub wa: f64,
    pub ua: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<RunReport>,
}

impl SweepTable {
    /// Tab-separated `model  WA  UA` lines with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("model\tWA\tUA\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{:.4}\t{:.4}\n", r.model, r.wa, r.ua));
        }
        out
    }
}

/// Train and evaluate once per context size. Run `i` uses seed
/// `cfg.seed() + i`. With `out_dir`, each run writes into `ctx<n>/`.
pub fn context_sweep(cfg: &ExperimentConfig, values: &[usize], out_dir: Option<&Path>) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one context size".into()));
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (i, &n) in values.iter().enumerate() {
        let mut run = cfg.clone();
        run.context_n = n;
        run.seed = Some(cfg.seed().wrapping_add(i as u64));
        let dir = out_dir.map(|d| d.join(format!("ctx{n}")));
        log::info!("sweep: context {n}, seed {}", run.seed());
        let trained = train(&run, dir.as_deref())?;
        let eval = evaluate_model(&trained.model, &run)?;
        if let Some(d) = &dir {
            let eval_dir = d.join("eval");
            eval.write(&eval_dir)?;
        }
        rows.push(SweepRow {
            model: format!("SRL-GNN-{n}"),
            context_n: n,
            seed: run.seed(),
            wa: eval.report.metrics.weighted_accuracy,
            ua: eval.report.metrics.unweighted_accuracy,
        });
        reports.push(eval.report);
    }
    Ok(SweepTable { rows, reports })
}
