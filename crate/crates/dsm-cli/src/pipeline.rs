//! The pipeline stages and their on-disk contract.
//!
//! Every stage is a pure function of its input files and the config, so
//! re-running a stage (or the whole pipeline) with identical inputs
//! rewrites byte-identical outputs. The artifacts, all under the config's
//! output directory:
//!
//! | stage       | reads                         | writes                          |
//! |-------------|-------------------------------|---------------------------------|
//! | parse       | corpus dir                    | `canonical/<id>.txt`            |
//! | annotate    | corpus dir, gazetteer file    | `mentions.json`                 |
//! | index       | corpus dir, `mentions.json`   | `index.json`                    |
//! | dsm         | `index.json`, triples file    | `dsm.json`                      |
//! | build-graph | triples file, corpus dir      | `graph.json`                    |
//! | split       | `graph.json`                  | `graph.json` (splits assigned)  |
//! | train       | `graph.json`, `dsm.json`      | `checkpoint_<v>.json`, `history_<v>.csv` |
//! | eval        | `graph.json`, `dsm.json`, checkpoints | `report.csv`, `classwise.csv`, `report.json` |

use std::collections::BTreeMap;
use std::path::PathBuf;

use dsm_core::corpusindex::{build_index, enrich_mentions, CorpusIndex};
use dsm_core::docstruct::{
    annotate, parse_document, parse_gazetteers, serialize_document, Document, Gazetteer, Mention,
};
use dsm_core::dsm::{dsm_for_graph, DsmRecord};
use dsm_core::graphset::{
    add_self_loops, attach_dsm, parse_triples, split_edges, stats, DatasetStats, Split, TypedGraph,
};
use dsm_core::rgcn::{predict, train, ModelParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::io;
use crate::report::{classwise_rows, render_accuracy_csv, render_classwise_csv, ClasswiseRow};

/// An error labeled with the pipeline stage it came from.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("[{stage}] {message}")]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl StageError {
    pub fn new(stage: &'static str, message: impl ToString) -> Self {
        StageError {
            stage,
            message: message.to_string(),
        }
    }
}

pub type StageResult<T> = Result<T, StageError>;

fn artifact(config: &PipelineConfig, name: &str) -> PathBuf {
    config.output_dir.join(name)
}

/// Parses every corpus document, in file-name order.
pub fn load_documents(config: &PipelineConfig) -> StageResult<Vec<Document>> {
    let files = io::corpus_files("parse", &config.corpus_dir)?;
    files
        .iter()
        .map(|path| {
            let text = io::read_file("parse", path)?;
            parse_document(&io::doc_id(path), &text)
                .map_err(|e| StageError::new("parse", format!("{}: {e}", path.display())))
        })
        .collect()
}

pub fn load_gazetteers(config: &PipelineConfig) -> StageResult<Vec<Gazetteer>> {
    let text = io::read_file("annotate", &config.gazetteer_file)?;
    parse_gazetteers(&text).map_err(|e| {
        StageError::new(
            "annotate",
            format!("{}: {e}", config.gazetteer_file.display()),
        )
    })
}

fn load_triples(stage: &'static str, config: &PipelineConfig) -> StageResult<TypedGraph> {
    let text = io::read_file(stage, &config.triples_file)?;
    parse_triples(&text)
        .map_err(|e| StageError::new(stage, format!("{}: {e}", config.triples_file.display())))
}

/// Validates the corpus and writes each document's canonical form.
pub fn stage_parse(config: &PipelineConfig) -> StageResult<usize> {
    let docs = load_documents(config)?;
    for doc in &docs {
        let path = config
            .output_dir
            .join("canonical")
            .join(format!("{}.txt", doc.id));
        io::write_file("parse", &path, &serialize_document(doc))?;
    }
    Ok(docs.len())
}

/// Annotates and enriches mentions; writes `mentions.json`.
pub fn stage_annotate(config: &PipelineConfig) -> StageResult<usize> {
    let docs = load_documents(config)?;
    let gazetteers = load_gazetteers(config)?;
    let raw: Vec<Mention> = docs
        .iter()
        .flat_map(|doc| annotate(doc, &gazetteers))
        .collect();
    let mentions = enrich_mentions(&docs, &raw);
    io::save_json("annotate", &artifact(config, "mentions.json"), &mentions)?;
    Ok(mentions.len())
}

/// Builds the corpus index from `mentions.json`; writes `index.json`.
pub fn stage_index(config: &PipelineConfig) -> StageResult<()> {
    let docs = load_documents(config)?;
    let mentions: Vec<Mention> = io::load_json("index", &artifact(config, "mentions.json"))?;
    let catalog = config.catalog.to_catalog()?;
    let index = build_index(&docs, &mentions, &catalog).map_err(|e| StageError::new("index", e))?;
    io::save_json("index", &artifact(config, "index.json"), &index)
}

/// Scores both directions of every triple pair; writes `dsm.json`.
pub fn stage_dsm(config: &PipelineConfig) -> StageResult<usize> {
    let index: CorpusIndex = io::load_json("dsm", &artifact(config, "index.json"))?;
    let catalog = config.catalog.to_catalog()?;
    let graph = load_triples("dsm", config)?;
    let records = dsm_for_graph(&index, &catalog, &graph);
    let list: Vec<&DsmRecord> = records.values().collect();
    io::save_json("dsm", &artifact(config, "dsm.json"), &list)?;
    Ok(list.len())
}

/// Parses the triples file and adds self-loops; writes `graph.json`.
pub fn stage_build_graph(config: &PipelineConfig) -> StageResult<DatasetStats> {
    let docs = load_documents(config)?;
    let graph = add_self_loops(load_triples("build-graph", config)?);
    let dataset_stats = stats(&graph, &docs);
    io::save_json("build-graph", &artifact(config, "graph.json"), &graph)?;
    Ok(dataset_stats)
}

/// Assigns stratified splits in place on `graph.json`.
pub fn stage_split(config: &PipelineConfig) -> StageResult<()> {
    let graph: TypedGraph = io::load_json("split", &artifact(config, "graph.json"))?;
    let fractions = (config.split.train, config.split.val, config.split.test);
    let graph = split_edges(graph, fractions, config.split.seed)
        .map_err(|e| StageError::new("split", e))?;
    io::save_json("split", &artifact(config, "graph.json"), &graph)
}

/// `graph.json` with the `dsm.json` records attached to every edge.
fn load_scored_graph(stage: &'static str, config: &PipelineConfig) -> StageResult<TypedGraph> {
    let graph: TypedGraph = io::load_json(stage, &artifact(config, "graph.json"))?;
    let records: Vec<DsmRecord> = io::load_json(stage, &artifact(config, "dsm.json"))?;
    let map: BTreeMap<(String, String), DsmRecord> = records
        .into_iter()
        .map(|r| ((r.x.clone(), r.y.clone()), r))
        .collect();
    Ok(attach_dsm(graph, &map))
}

/// One trained variant's headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub name: String,
    pub epochs: usize,
    pub best_val_accuracy: f64,
}

/// Trains every configured variant; writes a checkpoint and a history CSV
/// per variant.
pub fn stage_train(config: &PipelineConfig) -> StageResult<Vec<TrainSummary>> {
    let graph = load_scored_graph("train", config)?;
    let names = config.variant_names();
    let mut summaries = Vec::with_capacity(names.len());
    for (train_config, name) in config.variants.iter().zip(&names) {
        let (params, history) = train(&graph, train_config)
            .map_err(|e| StageError::new("train", format!("{name}: {e}")))?;
        io::save_json(
            "train",
            &artifact(config, &format!("checkpoint_{name}.json")),
            &params,
        )?;
        let mut csv = String::from("epoch,loss,train_acc,val_acc\n");
        for row in &history {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.epoch, row.loss, row.train_acc, row.val_acc
            ));
        }
        io::write_file(
            "train",
            &artifact(config, &format!("history_{name}.csv")),
            &csv,
        )?;
        let best = history
            .iter()
            .map(|r| r.val_acc)
            .fold(f64::NEG_INFINITY, f64::max);
        summaries.push(TrainSummary {
            name: name.clone(),
            epochs: history.len(),
            best_val_accuracy: best,
        });
    }
    Ok(summaries)
}

/// One variant's test-set result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub test_accuracy: f64,
}

/// Everything `eval` writes, also returned for in-process callers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub stats: DatasetStats,
    pub variants: Vec<VariantReport>,
    pub classwise: Vec<ClasswiseRow>,
}

/// Scores every checkpoint on the test split; writes `report.csv`,
/// `classwise.csv`, and `report.json`.
pub fn stage_eval(config: &PipelineConfig) -> StageResult<EvalReport> {
    let graph = load_scored_graph("eval", config)?;
    let docs = load_documents(config)?;
    let names = config.variant_names();

    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    for (edge, split) in graph.edges.iter().zip(&graph.splits) {
        if *split == Split::Test && !graph.is_self_loop_edge(edge) {
            pairs.push((
                graph.node_ids[edge.subject].clone(),
                graph.node_ids[edge.object].clone(),
            ));
            labels.push(edge.relation);
        }
    }

    let mut variants = Vec::with_capacity(names.len());
    let mut predictions = Vec::with_capacity(names.len());
    for name in &names {
        let params: ModelParams = io::load_json(
            "eval",
            &artifact(config, &format!("checkpoint_{name}.json")),
        )?;
        let predicted = predict(&params, &graph, &pairs)
            .map_err(|e| StageError::new("eval", format!("{name}: {e}")))?;
        let correct = predicted
            .iter()
            .zip(&labels)
            .filter(|(p, l)| p == l)
            .count();
        let accuracy = if labels.is_empty() {
            0.0
        } else {
            correct as f64 / labels.len() as f64
        };
        variants.push(VariantReport {
            name: name.clone(),
            test_accuracy: accuracy,
        });
        predictions.push(predicted);
    }

    let rows = classwise_rows(&graph, &labels, &predictions);
    let accuracies: Vec<f64> = variants.iter().map(|v| v.test_accuracy).collect();
    io::write_file(
        "eval",
        &artifact(config, "report.csv"),
        &render_accuracy_csv(&config.name, &names, &accuracies),
    )?;
    io::write_file(
        "eval",
        &artifact(config, "classwise.csv"),
        &render_classwise_csv(&names, &rows),
    )?;
    let report = EvalReport {
        dataset: config.name.clone(),
        stats: stats(&graph, &docs),
        variants,
        classwise: rows,
    };
    io::save_json("eval", &artifact(config, "report.json"), &report)?;
    Ok(report)
}

/// Runs every stage in order.
pub fn run_pipeline(config: &PipelineConfig) -> StageResult<EvalReport> {
    stage_parse(config)?;
    stage_annotate(config)?;
    stage_index(config)?;
    stage_dsm(config)?;
    stage_build_graph(config)?;
    stage_split(config)?;
    stage_train(config)?;
    stage_eval(config)
}
