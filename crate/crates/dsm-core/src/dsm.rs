//! Document structure measures: per-feature co-occurrence probabilities and
//! their importance-weighted aggregate.
//!
//! For a feature k and an ordered entity pair (x, y), `rho_k` is the share
//! of units where y sits in k's target role among the units where x sits in
//! k's source role — an indicator-counted conditional co-occurrence. The
//! aggregate weighs each feature's score by the catalog weight wᵏ and by an
//! importance factor f = n^{k,x}/max(n_x, 1), the share of x's mentions
//! that put it in the source role at all. The optional absolute entry
//! contributes w·absolute_share(y) directly (no importance factor; the
//! share already is one).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::corpusindex::{CorpusIndex, FeatureCatalog, FeatureKind};
use crate::docstruct::{Mention, Position, SpanKind};
use crate::graphset::TypedGraph;

/// Structure scores for one ordered entity pair.
///
/// `rho_k` holds one slot per catalog entry in k order (the absolute share
/// last when the catalog carries an absolute entry); every slot is in
/// [0, 1] and `rho_agg` is the weighted aggregate described on the module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsmRecord {
    pub x: String,
    pub y: String,
    pub rho_k: Vec<f64>,
    pub rho_agg: f64,
}

impl DsmRecord {
    /// The all-zero record: no structural evidence for the pair.
    pub fn zero(x: &str, y: &str, num_features: usize) -> Self {
        DsmRecord {
            x: x.to_string(),
            y: y.to_string(),
            rho_k: alloc::vec![0.0; num_features],
            rho_agg: 0.0,
        }
    }
}

/// Count pairs that violate 0 ≤ n_kx ≤ n_x.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsmError {
    InvalidCounts { n_x: i64, n_kx: i64 },
}

impl fmt::Display for DsmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DsmError::InvalidCounts { n_x, n_kx } => {
                write!(
                    f,
                    "invalid counts: need 0 <= n_kx <= n_x, got n_x={n_x}, n_kx={n_kx}"
                )
            }
        }
    }
}

impl core::error::Error for DsmError {}

/// The per-feature score ρᵏ(x, y): co-occurring units over source units.
///
/// Both counts come from [`CorpusIndex::pair_counts`]; a zero denominator
/// (x never in the source role) yields 0.
pub fn rho_k(index: &CorpusIndex, x: &str, y: &str, k: usize) -> f64 {
    let (num, den) = index.pair_counts(x, y, k);
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// The importance factor fᵏ = n_kx / max(n_x, 1).
///
/// In [0, 1] and monotone nondecreasing in `n_kx` for fixed `n_x`.
pub fn importance(n_x: i64, n_kx: i64) -> Result<f64, DsmError> {
    if n_kx < 0 || n_x < 0 || n_kx > n_x {
        return Err(DsmError::InvalidCounts { n_x, n_kx });
    }
    Ok(n_kx as f64 / core::cmp::max(n_x, 1) as f64)
}

/// The share of the given mentions that are bracketed, emphasized, or sit
/// in a footnote — the absolute importance of however they were gathered.
pub fn absolute_flag(mentions: &[Mention]) -> f64 {
    if mentions.is_empty() {
        return 0.0;
    }
    let flagged = mentions
        .iter()
        .filter(|m| m.span_kind != SpanKind::Plain || m.position == Position::Footnote)
        .count();
    flagged as f64 / mentions.len() as f64
}

/// The absolute share of an entity straight from index totals.
fn absolute_share(index: &CorpusIndex, entity: &str) -> f64 {
    let (n, _) = index.count(entity);
    if n == 0 {
        0.0
    } else {
        index.absolute_count(entity) as f64 / n as f64
    }
}

/// Builds the full [`DsmRecord`] for an ordered pair.
///
/// Directional: swapping x and y changes both the scores and the
/// importance factors. Entities absent from the index yield zeros.
pub fn rho_aggregate(index: &CorpusIndex, catalog: &FeatureCatalog, x: &str, y: &str) -> DsmRecord {
    let (n_x, per_feature) = index.count(x);
    let mut rho_vec = Vec::with_capacity(catalog.entries.len());
    let mut agg = 0.0;
    for entry in &catalog.entries {
        match entry.kind {
            FeatureKind::Relational => {
                let rho = rho_k(index, x, y, entry.k);
                let n_kx = per_feature.get(entry.k - 1).copied().unwrap_or(0);
                let f = n_kx as f64 / core::cmp::max(n_x, 1) as f64;
                agg += entry.weight * f * rho;
                rho_vec.push(rho);
            }
            FeatureKind::Absolute => {
                let share = absolute_share(index, y);
                agg += entry.weight * share;
                rho_vec.push(share);
            }
        }
    }
    DsmRecord {
        x: x.to_string(),
        y: y.to_string(),
        rho_k: rho_vec,
        rho_agg: agg,
    }
}

/// Scores every ordered node pair a graph's edges touch.
///
/// For each edge (s, r, o) the map gains both the (s, o) record and the
/// (o, s) record, so inverse-direction message passing can look up its own
/// direction. Pairs without index evidence get zero records.
pub fn dsm_for_graph(
    index: &CorpusIndex,
    catalog: &FeatureCatalog,
    graph: &TypedGraph,
) -> BTreeMap<(String, String), DsmRecord> {
    let mut out: BTreeMap<(String, String), DsmRecord> = BTreeMap::new();
    for edge in &graph.edges {
        let s = &graph.node_ids[edge.subject];
        let o = &graph.node_ids[edge.object];
        for (a, b) in [(s, o), (o, s)] {
            out.entry((a.clone(), b.clone()))
                .or_insert_with(|| rho_aggregate(index, catalog, a, b));
        }
    }
    out
}
