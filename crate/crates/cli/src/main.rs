//! `srlgnn`: train, evaluate and inspect the graph-augmented emotion
//! classifier. Results go to stdout as JSON; logs and errors go to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use srlgnn::corpus::{load_corpus, ContextWindow, CorpusSchema, Utterance};
use srlgnn::encoder::tokenize;
use srlgnn::gnn::AttentionMode;
use srlgnn::pipeline::{context_sweep, evaluate, train, ExperimentConfig, TrainedModel};
use srlgnn::srl::{build_graph, graph_stats, parse_frames, parse_srl_file};
use srlgnn_tensor::Precision;

#[derive(Debug, Parser)]
#[command(name = "srlgnn", version, about = "Emotion classification in conversation with predicate-argument graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train from an experiment config and write checkpoint, report and predictions.
    Train {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Score a checkpoint on the config's evaluation corpus (test, else dev, else train).
    Eval {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Checkpoint written by `train`.
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        /// Directory for report.json and predictions.jsonl.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Classify one utterance.
    Predict {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        /// Target utterance.
        #[arg(long)]
        text: String,
        /// Preceding utterance, oldest first; repeat for more.
        #[arg(long, value_name = "TEXT")]
        context: Vec<String>,
        /// SRL frames for the target as a JSON list, e.g.
        /// '[{"predicate":[1,2],"arguments":[[0,1]]}]'. Without it the empty
        /// graph is used.
        #[arg(long, value_name = "JSON")]
        srl: Option<String>,
        /// Label set the checkpoint must have been trained on.
        #[arg(long, value_name = "NAME")]
        labels: Option<String>,
    },
    /// Build the predicate-argument graph of every annotated utterance.
    BuildGraphs {
        #[command(flatten)]
        data: DataArgs,
        /// Write one graph per line here instead of to stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Check every SRL span against the tokenization of its utterance.
    ValidateSrl {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Finite-difference check of every tensor op and every model parameter.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Train and evaluate once per context size.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Context sizes; defaults to the config's `sweep` or 0,1,2,4,8.
        #[arg(long, value_delimiter = ',', value_name = "N,...")]
        values: Option<Vec<usize>>,
        /// Directory for per-run outputs (one `ctx<N>` folder each).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, value_name = "PATH")]
    corpus: PathBuf,
    #[arg(long, value_name = "PATH")]
    srl: PathBuf,
    /// iemocap4, friends8 or friends4.
    #[arg(long, value_name = "NAME")]
    labels: String,
}

/// Config file plus overrides of its fields.
#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Corpus to train on (`train`, `sweep`) or to score (`eval`).
    #[arg(long, value_name = "PATH")]
    corpus: Option<PathBuf>,
    /// SRL annotation file.
    #[arg(long, value_name = "PATH")]
    srl: Option<PathBuf>,
    /// iemocap4, friends8, friends4 or custom.
    #[arg(long, value_name = "NAME")]
    labels: Option<String>,
    /// Number of preceding utterances given as context.
    #[arg(long, value_name = "N")]
    context: Option<usize>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    /// Seed for parameter init and data order.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Attention normalisation over graph nodes.
    #[arg(long, value_name = "softmax|literal")]
    mode: Option<AttentionMode>,
    /// Training precision.
    #[arg(long, value_name = "f32|f64")]
    precision: Option<Precision>,
}

impl ExperimentArgs {
    fn load(&self, corpus_is_eval: bool) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(c) = &self.corpus {
            if corpus_is_eval {
                cfg.test = Some(c.clone());
            } else {
                cfg.train = c.clone();
            }
        }
        if let Some(s) = &self.srl {
            cfg.srl = Some(s.clone());
        }
        if let Some(l) = &self.labels {
            cfg.labels = l.clone();
        }
        if let Some(n) = self.context {
            cfg.context_n = n;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = Some(e);
        }
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(m) = self.mode {
            cfg.model_config.attention_mode = m;
        }
        if let Some(p) = self.precision {
            cfg.precision = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A runtime error as reported on stderr.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl From<srlgnn::Error> for Failure {
    fn from(e: srlgnn::Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            kind: "json",
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message}}));
}

fn print(value: &impl serde::Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Train { exp, out } => {
            let cfg = exp.load(false)?;
            let result = train(&cfg, Some(&out))?;
            print(&result.report)
        }
        Command::Eval { exp, checkpoint, out } => {
            let cfg = exp.load(true)?;
            let result = evaluate(&checkpoint, &cfg, out.as_deref())?;
            print(&result.report)
        }
        Command::Predict {
            checkpoint,
            text,
            context,
            srl,
            labels,
        } => predict(&checkpoint, text, context, srl.as_deref(), labels.as_deref()),
        Command::BuildGraphs { data, out } => build_graphs(&data, out.as_deref()),
        Command::ValidateSrl { data } => {
            let schema = CorpusSchema::by_name(&data.labels)?;
            let corpus = load_corpus(&data.corpus, &schema)?;
            let srl = parse_srl_file(&data.srl, Some(&corpus))?;
            print(&json!({
                "valid": true,
                "annotated_utterances": srl.len(),
                "frames": srl.frame_count(),
            }))
        }
        Command::Gradcheck { seed } => {
            let report = srlgnn::gradcheck::run(seed)?;
            print(&report)?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure {
                    kind: "gradcheck_failed",
                    message: format!(
                        "max op error {:.3e} (limit {:.0e}), max parameter error {:.3e} (limit {:.0e})",
                        report.max_op_error(),
                        srlgnn::gradcheck::OP_TOLERANCE,
                        report.max_model_error(),
                        srlgnn::gradcheck::MODEL_TOLERANCE
                    ),
                })
            }
        }
        Command::Sweep { exp, values, out } => {
            let cfg = exp.load(false)?;
            let values = values
                .or_else(|| cfg.sweep.clone())
                .unwrap_or_else(|| vec![0, 1, 2, 4, 8]);
            let table = context_sweep(&cfg, &values, out.as_deref())?;
            eprint!("{}", table.to_tsv());
            print(&json!({ "rows": table.rows }))
        }
    }
}

fn predict(
    checkpoint: &Path,
    text: String,
    context: Vec<String>,
    srl: Option<&str>,
    labels: Option<&str>,
) -> Result<(), Failure> {
    let model = TrainedModel::load(checkpoint)?;
    if let Some(name) = labels {
        let schema = CorpusSchema::by_name(name)?;
        model.check_compatible(&model.model.config, &schema.labels)?;
    }
    let utterance = |i: usize, text: String| Utterance {
        id: format!("u{i}"),
        speaker: String::new(),
        text,
        votes: Vec::new(),
        gold: None,
    };
    let n = context.len();
    let window = ContextWindow {
        conv_id: "input".into(),
        context: context.into_iter().enumerate().map(|(i, t)| utterance(i, t)).collect(),
        target: utterance(n, text),
        n_requested: n,
    };
    let token_count = tokenize(&window.target.text).len();
    let graph = srl
        .map(|json| parse_frames(json, token_count).map(|f| build_graph(&f, token_count)))
        .transpose()?;
    let result = model.classify(&window, graph.as_ref())?;
    print(&json!({
        "predicted": result.predicted,
        "logits": result.logits,
        "alphas": result.alphas,
        "graph_nodes": graph.as_ref().map_or(0, |g| g.len()),
    }))
}

fn build_graphs(data: &DataArgs, out: Option<&Path>) -> Result<(), Failure> {
    let schema = CorpusSchema::by_name(&data.labels)?;
    let corpus = load_corpus(&data.corpus, &schema)?;
    let srl = parse_srl_file(&data.srl, Some(&corpus))?;
    let mut graphs: Vec<Value> = Vec::new();
    let (mut nodes, mut edges, mut annotated) = (0, 0, 0);
    for conv in &corpus {
        for u in &conv.utterances {
            let Some(frames) = srl.get(&conv.id, &u.id) else {
                continue;
            };
            let tokens = tokenize(&u.text);
            let graph = build_graph(frames, tokens.len());
            let stats = graph_stats(&graph);
            nodes += stats.node_count;
            edges += stats.edge_count;
            annotated += 1;
            graphs.push(json!({
                "conv_id": conv.id,
                "utt_id": u.id,
                "tokens": tokens,
                "graph": graph,
                "stats": stats,
            }));
        }
    }
    let total: usize = corpus.iter().map(|c| c.utterances.len()).sum();
    let summary = json!({
        "utterances": total,
        "annotated": annotated,
        "nodes": nodes,
        "edges": edges,
    });
    match out {
        Some(path) => {
            let mut text = String::new();
            for g in &graphs {
                text.push_str(&serde_json::to_string(g)?);
                text.push('\n');
            }
            std::fs::write(path, text).map_err(|e| io_failure(path, e))?;
            print(&json!({ "summary": summary, "out": path }))
        }
        None => print(&json!({ "summary": summary, "graphs": graphs })),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report_error(f.kind, &f.message);
            ExitCode::from(1)
        }
    }
}
