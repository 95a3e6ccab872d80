//! Evaluation reports: the per-variant accuracy table and the per-class
//! breakdown with supports.

use dsm_core::graphset::TypedGraph;
use serde::{Deserialize, Serialize};

/// One relation's test support and per-variant accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClasswiseRow {
    pub relation: String,
    pub support: usize,
    /// One accuracy per variant, in the report's variant order.
    pub accuracies: Vec<f64>,
}

/// Per-class rows over the test labels, one row per relation that actually
/// occurs (an empty test split yields no rows). `predictions` holds one
/// vector per variant, aligned with `labels`.
pub fn classwise_rows(
    graph: &TypedGraph,
    labels: &[usize],
    predictions: &[Vec<usize>],
) -> Vec<ClasswiseRow> {
    (0..graph.num_dataset_relations())
        .filter_map(|r| {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == r).collect();
            if members.is_empty() {
                return None;
            }
            let accuracies = predictions
                .iter()
                .map(|preds| {
                    let correct = members.iter().filter(|&&i| preds[i] == r).count();
                    correct as f64 / members.len() as f64
                })
                .collect();
            Some(ClasswiseRow {
                relation: graph.relations[r].clone(),
                support: members.len(),
                accuracies,
            })
        })
        .collect()
}

/// Micro accuracy recomposed from a class-wise table: the support-weighted
/// mean of the per-class accuracies.
pub fn micro_from_classwise(rows: &[ClasswiseRow], variant: usize) -> f64 {
    let total: usize = rows.iter().map(|row| row.support).sum();
    if total == 0 {
        return 0.0;
    }
    rows.iter()
        .map(|row| row.support as f64 * row.accuracies[variant])
        .sum::<f64>()
        / total as f64
}

/// `relation,support,<variant>_acc,...` — one row per class.
pub fn render_classwise_csv(variant_names: &[String], rows: &[ClasswiseRow]) -> String {
    let mut csv = String::from("relation,support");
    for name in variant_names {
        csv.push(',');
        csv.push_str(name);
        csv.push_str("_acc");
    }
    csv.push('\n');
    for row in rows {
        csv.push_str(&row.relation);
        csv.push_str(&format!(",{}", row.support));
        for acc in &row.accuracies {
            csv.push_str(&format!(",{acc}"));
        }
        csv.push('\n');
    }
    csv
}

/// `dataset,<variant>,...` — one row per dataset (this pipeline runs one).
pub fn render_accuracy_csv(dataset: &str, variant_names: &[String], accuracies: &[f64]) -> String {
    let mut csv = String::from("dataset");
    for name in variant_names {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    csv.push_str(dataset);
    for acc in accuracies {
        csv.push_str(&format!(",{acc}"));
    }
    csv.push('\n');
    csv
}
