//! A minimal relational graph convolutional network for relation-type
//! prediction, with hand-derived exact gradients.
//!
//! Each layer computes, per node i,
//!
//! ```text
//! h_i' = σ( h_i·W_self  +  Σ_r Σ_{j → i via r} w_ji · (h_j·W_r) / C_{i,r} )
//! ```
//!
//! where `C_{i,r}` counts the incoming relation-r messages of node i, and
//! the message weight `w_ji` is 1 except in the edge-weights variant, where
//! it is `1 + rho_agg(j, i)`. Message passing runs over training edges plus
//! materialized inverse relations and the self-loops of isolated nodes;
//! scoring is a per-relation diagonal bilinear form over the original
//! relations, with softmax cross-entropy on top.
//!
//! Three ways of feeding structure measures into the model are supported
//! beside the [`Variant::Baseline`]: loss regularization (structurally
//! supported edges are pushed harder toward their label), scaling of the
//! first hidden layer by each node's mean incident score, and the message
//! edge weights above. All arithmetic is sequential f64 in fixed order:
//! the same inputs give bit-identical results, and with all-zero structure
//! scores every variant's forward pass equals the baseline's exactly.

pub mod tensor;
mod train;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::graphset::{Split, TypedGraph};
pub use tensor::Tensor;
pub use train::{accuracy, init_params, predict, train, EpochStats};

// === Configuration ===

/// How structure measures enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// Plain relational message passing; measures unused.
    Baseline,
    /// Adds λ · mean(rho_agg(s,o) · (1 − p(true relation))) to the loss.
    Regularization { lambda: f64 },
    /// Scales first-hidden-layer rows by 1 + mean incident rho_agg.
    HiddenScale,
    /// Multiplies each message by 1 + rho_agg(source, destination).
    EdgeWeights,
}

/// A variant plus the optional per-node additive bias term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub variant: Variant,
    /// When on, each layer adds tanh(ρ̄_i · h_i·W_self) to its output,
    /// ρ̄_i being the node's mean incident rho_agg.
    #[serde(default)]
    pub node_bias: bool,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            variant: Variant::Baseline,
            node_bias: false,
        }
    }
}

fn default_num_layers() -> usize {
    2
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    #[serde(default = "default_num_layers")]
    pub num_layers: usize,
    pub seed: u64,
    #[serde(default)]
    pub variant: VariantConfig,
}

// === Parameters ===

/// One layer's weights: the self transform and one matrix per message
/// relation (originals, then inverses, then the self-loop relation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub w_self: Tensor,
    pub w_rel: Vec<Tensor>,
}

/// Initial node representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureInit {
    /// Identity features: node i starts as the i-th unit vector.
    OneHot,
    /// A provided attribute matrix, one row per node.
    Matrix { matrix: Tensor },
}

/// Everything a checkpoint needs to reproduce predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<LayerParams>,
    /// Per original relation, the diagonal of the bilinear decoder.
    pub diagonals: Vec<Vec<f64>>,
    pub features: FeatureInit,
    pub variant: VariantConfig,
}

/// Parameter-shaped gradient accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    pub diagonals: Vec<Vec<f64>>,
}

// === Errors ===

#[derive(Debug, Clone, PartialEq)]
pub enum RgcnError {
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// The loss or an embedding went non-finite (learning-rate blowup).
    NonFiniteLoss,
    /// A split the operation needs is empty.
    DegenerateSplit {
        reason: &'static str,
    },
    UnknownNode {
        id: String,
    },
    BadConfig {
        reason: &'static str,
    },
}

impl fmt::Display for RgcnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RgcnError::ShapeMismatch {
                context,
                expected,
                got,
            } => {
                write!(
                    f,
                    "shape mismatch in {context}: expected {expected:?}, got {got:?}"
                )
            }
            RgcnError::NonFiniteLoss => write!(f, "loss became non-finite"),
            RgcnError::DegenerateSplit { reason } => write!(f, "degenerate split: {reason}"),
            RgcnError::UnknownNode { id } => write!(f, "node {id:?} is not in the graph"),
            RgcnError::BadConfig { reason } => write!(f, "bad training config: {reason}"),
        }
    }
}

impl core::error::Error for RgcnError {}

// === Message graph ===

/// One directed message: source node, destination node, message relation,
/// and the structure score of its direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub src: usize,
    pub dst: usize,
    pub relation: usize,
    pub rho: f64,
}

/// An original edge as the decoder sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEdge {
    pub subject: usize,
    pub relation: usize,
    pub object: usize,
    /// rho_agg(subject, object), used by the regularization variant.
    pub rho: f64,
    pub split: Split,
}

/// The network's view of a [`TypedGraph`]: deterministic message lists,
/// per-(node, relation) receive counts, per-node mean incident scores, and
/// the labeled edges to score.
///
/// Message relation ids are laid out as originals `0..R`, inverses
/// `R..2R`, and (when the graph has self-loops) the self-loop relation
/// last. Only training edges pass messages; every original edge appears in
/// `scored` with its split.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageGraph {
    pub num_nodes: usize,
    pub num_message_relations: usize,
    pub num_scored_relations: usize,
    pub messages: Vec<Message>,
    /// C_{i,r}, indexed `dst * num_message_relations + relation`.
    pub recv_counts: Vec<u32>,
    /// Mean rho_agg over training edges incident on each node (0 if none).
    pub node_rho: Vec<f64>,
    pub scored: Vec<ScoredEdge>,
}

impl MessageGraph {
    pub fn from_graph(graph: &TypedGraph) -> Self {
        let num_scored = graph.num_dataset_relations();
        let has_self = graph.self_loop_relation.is_some();
        let num_message_relations = 2 * num_scored + usize::from(has_self);
        let self_relation = 2 * num_scored;
        let n = graph.node_ids.len();

        let mut messages: Vec<Message> = Vec::new();
        let mut scored: Vec<ScoredEdge> = Vec::new();

        for (i, edge) in graph.edges.iter().enumerate() {
            if graph.is_self_loop_edge(edge) {
                messages.push(Message {
                    src: edge.subject,
                    dst: edge.object,
                    relation: self_relation,
                    rho: 0.0,
                });
                continue;
            }
            let (forward_rho, reverse_rho) = match &graph.dsm[i] {
                Some(d) => (d.forward.rho_agg, d.reverse.rho_agg),
                None => (0.0, 0.0),
            };
            scored.push(ScoredEdge {
                subject: edge.subject,
                relation: edge.relation,
                object: edge.object,
                rho: forward_rho,
                split: graph.splits[i],
            });
            if graph.splits[i] == Split::Train {
                messages.push(Message {
                    src: edge.subject,
                    dst: edge.object,
                    relation: edge.relation,
                    rho: forward_rho,
                });
                messages.push(Message {
                    src: edge.object,
                    dst: edge.subject,
                    relation: num_scored + edge.relation,
                    rho: reverse_rho,
                });
            }
        }
        // Fixed message order makes forward passes independent of the edge
        // list's order, bit for bit.
        messages.sort_by_key(|m| (m.relation, m.dst, m.src));
        let mut recv_counts = alloc::vec![0u32; n * num_message_relations];
        for m in &messages {
            recv_counts[m.dst * num_message_relations + m.relation] += 1;
        }
        // Mean incident score per node, accumulated over the sorted forward
        // messages (one per training edge) so the sums, too, are independent
        // of the edge list's order.
        let mut rho_sum = alloc::vec![0.0f64; n];
        let mut rho_count = alloc::vec![0u32; n];
        for m in messages.iter().filter(|m| m.relation < num_scored) {
            rho_sum[m.src] += m.rho;
            rho_count[m.src] += 1;
            rho_sum[m.dst] += m.rho;
            rho_count[m.dst] += 1;
        }
        let node_rho = (0..n)
            .map(|v| {
                if rho_count[v] == 0 {
                    0.0
                } else {
                    rho_sum[v] / f64::from(rho_count[v])
                }
            })
            .collect();
        MessageGraph {
            num_nodes: n,
            num_message_relations,
            num_scored_relations: num_scored,
            messages,
            recv_counts,
            node_rho,
            scored,
        }
    }

    #[inline]
    pub fn recv_count(&self, dst: usize, relation: usize) -> u32 {
        self.recv_counts[dst * self.num_message_relations + relation]
    }

    pub fn split_edges(&self, split: Split) -> impl Iterator<Item = &ScoredEdge> {
        self.scored.iter().filter(move |e| e.split == split)
    }
}

// === Forward ===

/// Nonlinearity of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// All intermediate states of one forward pass, enough for exact backward.
#[derive(Debug, Clone)]
pub struct Forward {
    /// h⁰ (the features) through h^L (the final embeddings).
    pub hidden: Vec<Tensor>,
    /// Per layer, the self transform h·W_self before messages.
    z_self: Vec<Tensor>,
    /// Per layer, the pre-activation sum.
    z: Vec<Tensor>,
}

impl Forward {
    pub fn final_embeddings(&self) -> &Tensor {
        self.hidden
            .last()
            .expect("forward pass has at least the input layer")
    }
}

fn forward_layer(
    h: &Tensor,
    mg: &MessageGraph,
    layer: &LayerParams,
    variant: &VariantConfig,
    activation: Activation,
) -> (Tensor, Tensor, Tensor) {
    let z_self = h.matmul(&layer.w_self);
    let mut z = z_self.clone();
    for m in &mg.messages {
        let count = f64::from(mg.recv_count(m.dst, m.relation));
        let weight = match variant.variant {
            Variant::EdgeWeights => 1.0 + m.rho,
            _ => 1.0,
        };
        tensor::vecmat_acc(
            h.row(m.src),
            &layer.w_rel[m.relation],
            weight / count,
            z.row_mut(m.dst),
        );
    }
    let mut out = z.clone();
    if activation == Activation::Relu {
        for v in &mut out.data {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    if variant.node_bias {
        for i in 0..mg.num_nodes {
            let rho = mg.node_rho[i];
            let zrow = z_self.row(i);
            for (o, &zv) in out.row_mut(i).iter_mut().zip(zrow) {
                *o += libm::tanh(rho * zv);
            }
        }
    }
    (z_self, z, out)
}

fn check_layer_shapes(h: &Tensor, mg: &MessageGraph, layer: &LayerParams) -> Result<(), RgcnError> {
    if h.rows != mg.num_nodes {
        return Err(RgcnError::ShapeMismatch {
            context: "layer input rows vs node count",
            expected: (mg.num_nodes, h.cols),
            got: h.shape(),
        });
    }
    if layer.w_self.rows != h.cols || !layer.w_self.shape_consistent() {
        return Err(RgcnError::ShapeMismatch {
            context: "self weight vs layer input",
            expected: (h.cols, layer.w_self.cols),
            got: layer.w_self.shape(),
        });
    }
    if layer.w_rel.len() != mg.num_message_relations {
        return Err(RgcnError::ShapeMismatch {
            context: "relation weight count",
            expected: (mg.num_message_relations, 0),
            got: (layer.w_rel.len(), 0),
        });
    }
    for w in &layer.w_rel {
        if w.shape() != layer.w_self.shape() || !w.shape_consistent() {
            return Err(RgcnError::ShapeMismatch {
                context: "relation weight vs self weight",
                expected: layer.w_self.shape(),
                got: w.shape(),
            });
        }
    }
    Ok(())
}

/// One message-passing layer (see the module equation).
///
/// The caller picks the activation: ReLU on hidden layers, identity on the
/// final one. The variant controls message weighting and the additive node
/// bias; the hidden-scale variant's row scaling is a separate step,
/// [`apply_dsm_hidden`].
pub fn layer_forward(
    h: &Tensor,
    mg: &MessageGraph,
    layer: &LayerParams,
    variant: &VariantConfig,
    activation: Activation,
) -> Result<Tensor, RgcnError> {
    check_layer_shapes(h, mg, layer)?;
    let (_, _, out) = forward_layer(h, mg, layer, variant, activation);
    Ok(out)
}

/// Scales row i by 1 + mean incident rho_agg — the hidden-scale variant's
/// treatment of the first hidden layer. Zero scores leave rows unchanged.
pub fn apply_dsm_hidden(h: &Tensor, mg: &MessageGraph) -> Tensor {
    let mut out = h.clone();
    for i in 0..out.rows.min(mg.node_rho.len()) {
        let scale = 1.0 + mg.node_rho[i];
        for v in out.row_mut(i) {
            *v *= scale;
        }
    }
    out
}

/// Runs the whole stack: features through every layer, caching what the
/// backward pass needs.
pub fn embeddings(params: &ModelParams, mg: &MessageGraph) -> Result<Forward, RgcnError> {
    let h0 = match &params.features {
        FeatureInit::OneHot => Tensor::identity(mg.num_nodes),
        FeatureInit::Matrix { matrix } => {
            if matrix.rows != mg.num_nodes || !matrix.shape_consistent() {
                return Err(RgcnError::ShapeMismatch {
                    context: "feature matrix rows vs node count",
                    expected: (mg.num_nodes, matrix.cols),
                    got: matrix.shape(),
                });
            }
            matrix.clone()
        }
    };
    if params.layers.is_empty() {
        return Err(RgcnError::BadConfig {
            reason: "model has no layers",
        });
    }
    let num_layers = params.layers.len();
    let mut fwd = Forward {
        hidden: alloc::vec![h0],
        z_self: Vec::with_capacity(num_layers),
        z: Vec::with_capacity(num_layers),
    };
    for (l, layer) in params.layers.iter().enumerate() {
        let h = &fwd.hidden[l];
        check_layer_shapes(h, mg, layer)?;
        let activation = if l + 1 == num_layers {
            Activation::Identity
        } else {
            Activation::Relu
        };
        let (z_self, z, mut out) = forward_layer(h, mg, layer, &params.variant, activation);
        if params.variant.variant == Variant::HiddenScale && l == 0 {
            out = apply_dsm_hidden(&out, mg);
        }
        fwd.z_self.push(z_self);
        fwd.z.push(z);
        fwd.hidden.push(out);
    }
    Ok(fwd)
}

// === Scoring and loss ===

/// Diagonal bilinear logits: logit_r = Σ_d h_s[d] · diag_r[d] · h_o[d].
///
/// The form is symmetric in subject and object, so predictions depend on
/// the node pair, never on edge direction.
pub fn score_relations(
    h_s: &[f64],
    h_o: &[f64],
    diagonals: &[Vec<f64>],
) -> Result<Vec<f64>, RgcnError> {
    if h_s.len() != h_o.len() {
        return Err(RgcnError::ShapeMismatch {
            context: "subject vs object embedding",
            expected: (h_s.len(), 1),
            got: (h_o.len(), 1),
        });
    }
    let mut logits = Vec::with_capacity(diagonals.len());
    for diag in diagonals {
        if diag.len() != h_s.len() {
            return Err(RgcnError::ShapeMismatch {
                context: "scoring diagonal vs embedding",
                expected: (h_s.len(), 1),
                got: (diag.len(), 1),
            });
        }
        let mut logit = 0.0;
        for ((&s, &d), &o) in h_s.iter().zip(diag).zip(h_o) {
            logit += s * d * o;
        }
        logits.push(logit);
    }
    Ok(logits)
}

/// Numerically stable softmax probabilities and cross-entropy of `label`.
fn softmax_ce(logits: &[f64], label: usize) -> (Vec<f64>, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let z: f64 = exps.iter().sum();
    let p: Vec<f64> = exps.iter().map(|&e| e / z).collect();
    let ce = libm::log(z) - (logits[label] - max);
    (p, ce)
}

fn zero_gradients(params: &ModelParams) -> Gradients {
    Gradients {
        layers: params
            .layers
            .iter()
            .map(|l| LayerParams {
                w_self: Tensor::zeros(l.w_self.rows, l.w_self.cols),
                w_rel: l
                    .w_rel
                    .iter()
                    .map(|w| Tensor::zeros(w.rows, w.cols))
                    .collect(),
            })
            .collect(),
        diagonals: params
            .diagonals
            .iter()
            .map(|d| alloc::vec![0.0; d.len()])
            .collect(),
    }
}

/// Mean training cross-entropy (plus the regularization term when active)
/// and its exact gradients for every parameter.
pub fn loss(graph: &TypedGraph, params: &ModelParams) -> Result<(f64, Gradients), RgcnError> {
    let mg = MessageGraph::from_graph(graph);
    let (value, grads, _) = loss_with_forward(&mg, params)?;
    Ok((value, grads))
}

/// Like [`loss`] but on a prebuilt message graph, also returning the
/// forward pass so callers can reuse the embeddings.
pub fn loss_with_forward(
    mg: &MessageGraph,
    params: &ModelParams,
) -> Result<(f64, Gradients, Forward), RgcnError> {
    if params.diagonals.len() != mg.num_scored_relations {
        return Err(RgcnError::ShapeMismatch {
            context: "scoring diagonal count vs relations",
            expected: (mg.num_scored_relations, 0),
            got: (params.diagonals.len(), 0),
        });
    }
    let fwd = embeddings(params, mg)?;
    let h = fwd.final_embeddings();
    if !h.is_finite() {
        return Err(RgcnError::NonFiniteLoss);
    }
    let train_edges: Vec<&ScoredEdge> = mg.split_edges(Split::Train).collect();
    if train_edges.is_empty() {
        return Err(RgcnError::DegenerateSplit {
            reason: "no training edges to learn from",
        });
    }
    let inv_n = 1.0 / train_edges.len() as f64;
    let lambda = match params.variant.variant {
        Variant::Regularization { lambda } => lambda,
        _ => 0.0,
    };

    let mut grads = zero_gradients(params);
    let mut total = 0.0;
    let mut d_h = Tensor::zeros(h.rows, h.cols);
    for edge in &train_edges {
        let h_s = h.row(edge.subject);
        let h_o = h.row(edge.object);
        let logits = score_relations(h_s, h_o, &params.diagonals)?;
        let (p, ce) = softmax_ce(&logits, edge.relation);
        total += ce * inv_n;
        // d total / d logit_r = (p_r − δ_r,label) · pull / n, where the
        // regularization term contributes the λ·ρ·p_label part of pull.
        let mut pull = 1.0;
        if lambda > 0.0 {
            total += lambda * edge.rho * (1.0 - p[edge.relation]) * inv_n;
            pull += lambda * edge.rho * p[edge.relation];
        }
        for (r, &p_r) in p.iter().enumerate() {
            let delta = if r == edge.relation { 1.0 } else { 0.0 };
            let d_logit = (p_r - delta) * pull * inv_n;
            if d_logit == 0.0 {
                continue;
            }
            let diag = &params.diagonals[r];
            let d_diag = &mut grads.diagonals[r];
            for d in 0..h.cols {
                d_diag[d] += d_logit * h_s[d] * h_o[d];
            }
            for d in 0..h.cols {
                let (s_val, o_val, dg) = (h_s[d], h_o[d], diag[d]);
                d_h.data[edge.subject * h.cols + d] += d_logit * dg * o_val;
                d_h.data[edge.object * h.cols + d] += d_logit * dg * s_val;
            }
        }
    }
    if !total.is_finite() {
        return Err(RgcnError::NonFiniteLoss);
    }
    backward_layers(params, mg, &fwd, d_h, &mut grads);
    Ok((total, grads, fwd))
}

/// Reverse-mode pass through the layer stack, accumulating into `grads`.
fn backward_layers(
    params: &ModelParams,
    mg: &MessageGraph,
    fwd: &Forward,
    d_final: Tensor,
    grads: &mut Gradients,
) {
    let num_layers = params.layers.len();
    let mut d_out = d_final;
    for l in (0..num_layers).rev() {
        let layer = &params.layers[l];
        let h_in = &fwd.hidden[l];
        let z = &fwd.z[l];
        let z_self = &fwd.z_self[l];

        if params.variant.variant == Variant::HiddenScale && l == 0 {
            for i in 0..mg.num_nodes {
                let scale = 1.0 + mg.node_rho[i];
                for v in d_out.row_mut(i) {
                    *v *= scale;
                }
            }
        }

        // out = σ(z) + [node_bias] tanh(ρ̄ ⊙ z_self), z = z_self + messages.
        let mut d_z = d_out.clone();
        if l + 1 != num_layers {
            for (dv, &zv) in d_z.data.iter_mut().zip(&z.data) {
                if zv <= 0.0 {
                    *dv = 0.0;
                }
            }
        }
        let mut d_z_self = d_z.clone();
        if params.variant.node_bias {
            for i in 0..mg.num_nodes {
                let rho = mg.node_rho[i];
                let zrow = z_self.row(i);
                let orow = d_out.row(i);
                let srow_start = i * d_z_self.cols;
                for d in 0..d_z_self.cols {
                    let t = libm::tanh(rho * zrow[d]);
                    d_z_self.data[srow_start + d] += orow[d] * (1.0 - t * t) * rho;
                }
            }
        }

        let mut d_h = Tensor::zeros(h_in.rows, h_in.cols);
        grads.layers[l].w_self.add_matmul_at_b(h_in, &d_z_self, 1.0);
        for i in 0..h_in.rows {
            tensor::vecmat_t_acc(d_z_self.row(i), &layer.w_self, 1.0, d_h.row_mut(i));
        }
        for m in &mg.messages {
            let count = f64::from(mg.recv_count(m.dst, m.relation));
            let weight = match params.variant.variant {
                Variant::EdgeWeights => 1.0 + m.rho,
                _ => 1.0,
            };
            let q = weight / count;
            grads.layers[l].w_rel[m.relation].add_outer(h_in.row(m.src), d_z.row(m.dst), q);
            // Split borrows: read d_z row, write d_h row.
            let (dz_row, wr) = (d_z.row(m.dst), &layer.w_rel[m.relation]);
            tensor::vecmat_t_acc(dz_row, wr, q, d_h.row_mut(m.src));
        }
        d_out = d_h;
    }
}
