//! Full-batch gradient-descent training, checkpoint selection, and
//! prediction helpers.

use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{
    embeddings, loss_with_forward, score_relations, tensor::Tensor, FeatureInit, LayerParams,
    MessageGraph, ModelParams, RgcnError, TrainConfig, Variant,
};
use crate::graphset::{Split, TypedGraph};

/// One row of training history. Loss and accuracies describe the
/// parameters *entering* this epoch, before its gradient step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// Fills a matrix with uniform draws from ±sqrt(6 / (fan_in + fan_out)),
/// row-major, so the draw sequence depends only on seed and shapes.
fn xavier_fill(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Tensor {
    let bound = libm::sqrt(6.0 / (rows + cols) as f64);
    let mut t = Tensor::zeros(rows, cols);
    for v in &mut t.data {
        *v = (rng.gen::<f64>() * 2.0 - 1.0) * bound;
    }
    t
}

/// Deterministic initial parameters for a graph's message structure.
///
/// The draw sequence depends only on the seed and the tensor shapes, never
/// on the variant, so runs that differ only in variant start identically.
pub fn init_params(mg: &MessageGraph, config: &TrainConfig) -> ModelParams {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut layers = Vec::with_capacity(config.num_layers);
    for l in 0..config.num_layers {
        let in_dim = if l == 0 {
            mg.num_nodes
        } else {
            config.hidden_dim
        };
        let w_self = xavier_fill(&mut rng, in_dim, config.hidden_dim);
        let w_rel = (0..mg.num_message_relations)
            .map(|_| xavier_fill(&mut rng, in_dim, config.hidden_dim))
            .collect();
        layers.push(LayerParams { w_self, w_rel });
    }
    let diag_bound = libm::sqrt(3.0 / config.hidden_dim as f64);
    let diagonals = (0..mg.num_scored_relations)
        .map(|_| {
            (0..config.hidden_dim)
                .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * diag_bound)
                .collect()
        })
        .collect();
    ModelParams {
        layers,
        diagonals,
        features: FeatureInit::OneHot,
        variant: config.variant,
    }
}

fn validate_config(config: &TrainConfig) -> Result<(), RgcnError> {
    if config.epochs == 0 {
        return Err(RgcnError::BadConfig {
            reason: "epochs must be at least 1",
        });
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(RgcnError::BadConfig {
            reason: "learning rate must be positive and finite",
        });
    }
    if config.hidden_dim == 0 {
        return Err(RgcnError::BadConfig {
            reason: "hidden dimension must be at least 1",
        });
    }
    if config.num_layers == 0 {
        return Err(RgcnError::BadConfig {
            reason: "at least one layer is required",
        });
    }
    if let Variant::Regularization { lambda } = config.variant.variant {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(RgcnError::BadConfig {
                reason: "regularization strength must be non-negative and finite",
            });
        }
    }
    Ok(())
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn split_counts(
    h: &Tensor,
    diagonals: &[Vec<f64>],
    mg: &MessageGraph,
    split: Split,
) -> Result<(usize, usize), RgcnError> {
    let mut total = 0usize;
    let mut correct = 0usize;
    for edge in mg.split_edges(split) {
        let logits = score_relations(h.row(edge.subject), h.row(edge.object), diagonals)?;
        if argmax(&logits) == edge.relation {
            correct += 1;
        }
        total += 1;
    }
    Ok((correct, total))
}

fn apply_step(params: &mut ModelParams, grads: &super::Gradients, learning_rate: f64) {
    for (layer, grad) in params.layers.iter_mut().zip(&grads.layers) {
        layer.w_self.add_scaled(&grad.w_self, -learning_rate);
        for (w, g) in layer.w_rel.iter_mut().zip(&grad.w_rel) {
            w.add_scaled(g, -learning_rate);
        }
    }
    for (diag, grad) in params.diagonals.iter_mut().zip(&grads.diagonals) {
        for (d, g) in diag.iter_mut().zip(grad) {
            *d -= learning_rate * g;
        }
    }
}

/// Full-batch training with checkpointing on best validation accuracy.
///
/// Each epoch records loss and accuracies of the current parameters, keeps
/// them as the checkpoint when validation accuracy strictly improves (the
/// earliest best wins ties), then takes one gradient step. Identical
/// graph + config always produce bit-identical results.
pub fn train(
    graph: &TypedGraph,
    config: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochStats>), RgcnError> {
    validate_config(config)?;
    let mg = MessageGraph::from_graph(graph);
    if mg.split_edges(Split::Train).next().is_none() {
        return Err(RgcnError::DegenerateSplit {
            reason: "no training edges",
        });
    }
    if mg.split_edges(Split::Val).next().is_none() {
        return Err(RgcnError::DegenerateSplit {
            reason: "no validation edges",
        });
    }
    let mut params = init_params(&mg, config);
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, ModelParams)> = None;
    for epoch in 1..=config.epochs {
        let (loss_value, grads, fwd) = loss_with_forward(&mg, &params)?;
        let h = fwd.final_embeddings();
        let (tc, tt) = split_counts(h, &params.diagonals, &mg, Split::Train)?;
        let (vc, vt) = split_counts(h, &params.diagonals, &mg, Split::Val)?;
        let train_acc = tc as f64 / tt as f64;
        let val_acc = vc as f64 / vt as f64;
        history.push(EpochStats {
            epoch,
            loss: loss_value,
            train_acc,
            val_acc,
        });
        if best.as_ref().is_none_or(|(b, _)| val_acc > *b) {
            best = Some((val_acc, params.clone()));
        }
        apply_step(&mut params, &grads, config.learning_rate);
    }
    let (_, checkpoint) = best.expect("at least one epoch ran");
    Ok((checkpoint, history))
}

/// Most likely relation id for each (subject, object) pair, ties going to
/// the smallest id.
pub fn predict(
    params: &ModelParams,
    graph: &TypedGraph,
    pairs: &[(String, String)],
) -> Result<Vec<usize>, RgcnError> {
    let mg = MessageGraph::from_graph(graph);
    let fwd = embeddings(params, &mg)?;
    let h = fwd.final_embeddings();
    let lookup = graph.node_lookup();
    let mut out = Vec::with_capacity(pairs.len());
    for (subject, object) in pairs {
        let &s = lookup
            .get(subject.as_str())
            .ok_or_else(|| RgcnError::UnknownNode {
                id: subject.clone(),
            })?;
        let &o = lookup
            .get(object.as_str())
            .ok_or_else(|| RgcnError::UnknownNode { id: object.clone() })?;
        let logits = score_relations(h.row(s), h.row(o), &params.diagonals)?;
        out.push(argmax(&logits));
    }
    Ok(out)
}

/// Fraction of a split's edges whose true relation gets the top score.
pub fn accuracy(params: &ModelParams, graph: &TypedGraph, split: Split) -> Result<f64, RgcnError> {
    let mg = MessageGraph::from_graph(graph);
    let fwd = embeddings(params, &mg)?;
    let (correct, total) = split_counts(fwd.final_embeddings(), &params.diagonals, &mg, split)?;
    if total == 0 {
        return Err(RgcnError::DegenerateSplit {
            reason: "no edges in the requested split",
        });
    }
    Ok(correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsm::DsmRecord;
    use crate::graphset::{add_self_loops, Edge, EdgeDsm};
    use crate::rgcn::{loss_with_forward, Variant, VariantConfig};

    fn toy(
        nodes: &[&str],
        relations: &[&str],
        edges: &[(usize, usize, usize, Split)],
    ) -> TypedGraph {
        TypedGraph {
            node_ids: nodes.iter().map(|s| s.to_string()).collect(),
            node_types: nodes.iter().map(|_| "thing".to_string()).collect(),
            relations: relations.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|&(s, r, o, _)| Edge {
                    subject: s,
                    relation: r,
                    object: o,
                })
                .collect(),
            splits: edges.iter().map(|&(.., sp)| sp).collect(),
            dsm: vec![None; edges.len()],
            self_loop_relation: None,
        }
    }

    fn attach(graph: &mut TypedGraph, scores: &[(f64, f64)]) {
        assert_eq!(scores.len(), graph.edges.len());
        for (i, &(fwd, rev)) in scores.iter().enumerate() {
            let x = graph.node_ids[graph.edges[i].subject].clone();
            let y = graph.node_ids[graph.edges[i].object].clone();
            graph.dsm[i] = Some(EdgeDsm {
                forward: DsmRecord {
                    x: x.clone(),
                    y: y.clone(),
                    rho_k: vec![fwd],
                    rho_agg: fwd,
                },
                reverse: DsmRecord {
                    x: y,
                    y: x,
                    rho_k: vec![rev],
                    rho_agg: rev,
                },
            });
        }
    }

    fn five_node() -> TypedGraph {
        let mut g = toy(
            &["a", "b", "c", "d", "e"],
            &["r0", "r1"],
            &[
                (0, 0, 1, Split::Train),
                (1, 1, 2, Split::Train),
                (2, 0, 3, Split::Train),
                (3, 1, 0, Split::Val),
                (0, 0, 2, Split::Test),
            ],
        );
        attach(
            &mut g,
            &[(0.8, 0.2), (0.5, 0.1), (0.3, 0.9), (0.7, 0.4), (0.6, 0.0)],
        );
        add_self_loops(g)
    }

    fn config(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 10,
            learning_rate: 0.3,
            hidden_dim: 4,
            num_layers: 2,
            seed,
            variant: VariantConfig::default(),
        }
    }

    #[test]
    fn initialization_depends_only_on_seed_and_shapes() {
        let mg = MessageGraph::from_graph(&five_node());
        let cfg = config(9);
        let p1 = init_params(&mg, &cfg);
        let p2 = init_params(&mg, &cfg);
        assert_eq!(p1, p2);

        let p3 = init_params(&mg, &config(10));
        assert_ne!(p1.layers[0].w_self, p3.layers[0].w_self);

        // The variant changes behavior, never the drawn numbers.
        let mut weighted_cfg = config(9);
        weighted_cfg.variant = VariantConfig {
            variant: Variant::EdgeWeights,
            node_bias: true,
        };
        let p4 = init_params(&mg, &weighted_cfg);
        assert_eq!(p1.layers, p4.layers);
        assert_eq!(p1.diagonals, p4.diagonals);
        assert_eq!(p4.variant, weighted_cfg.variant);

        // Shapes: one-hot input is num_nodes wide, everything else hidden.
        assert_eq!(p1.layers.len(), 2);
        assert_eq!(p1.layers[0].w_self.shape(), (5, 4));
        assert_eq!(p1.layers[0].w_rel.len(), 5);
        assert_eq!(p1.layers[1].w_self.shape(), (4, 4));
        assert_eq!(p1.diagonals.len(), 2);
        assert!(p1.diagonals.iter().all(|d| d.len() == 4));
        assert!(matches!(p1.features, FeatureInit::OneHot));
    }

    #[test]
    fn same_inputs_train_bit_identically() {
        let g = five_node();
        let cfg = config(3);
        let (m1, h1) = train(&g, &cfg).unwrap();
        let (m2, h2) = train(&g, &cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        assert_ne!(train(&g, &config(4)).unwrap().1, h1);
    }

    #[test]
    fn history_rows_describe_the_parameters_entering_each_epoch() {
        let g = five_node();
        let mut cfg = config(7);
        cfg.epochs = 3;
        let (_, history) = train(&g, &cfg).unwrap();
        assert_eq!(history.len(), 3);
        assert_eq!(
            history.iter().map(|r| r.epoch).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );

        // Row 1 must match the untouched initialization exactly.
        let mg = MessageGraph::from_graph(&g);
        let initial = init_params(&mg, &cfg);
        let (initial_loss, _, _) = loss_with_forward(&mg, &initial).unwrap();
        assert_eq!(history[0].loss.to_bits(), initial_loss.to_bits());
        assert_eq!(
            history[0].train_acc,
            accuracy(&initial, &g, Split::Train).unwrap()
        );
        assert_eq!(
            history[0].val_acc,
            accuracy(&initial, &g, Split::Val).unwrap()
        );
    }

    #[test]
    fn one_epoch_returns_the_initialization_as_checkpoint() {
        let g = five_node();
        let mut cfg = config(5);
        cfg.epochs = 1;
        let (best, history) = train(&g, &cfg).unwrap();
        assert_eq!(history.len(), 1);
        let mg = MessageGraph::from_graph(&g);
        assert_eq!(best, init_params(&mg, &cfg));
    }

    #[test]
    fn checkpoint_is_the_earliest_best_validation_epoch() {
        let g = five_node();
        let mut cfg = config(2);
        cfg.epochs = 40;
        cfg.learning_rate = 0.5;
        let (best, history) = train(&g, &cfg).unwrap();
        let best_val = history
            .iter()
            .map(|r| r.val_acc)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(accuracy(&best, &g, Split::Val).unwrap(), best_val);
    }

    #[test]
    fn a_separable_toy_is_memorized() {
        // The decoder's diagonal bilinear form is symmetric in subject and
        // object, so the relation must be a function of the node pair: here
        // every pair sits on exactly one edge, making the labels separable.
        let g = toy(
            &["p0", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "p9"],
            &["r0", "r1"],
            &[
                (0, 0, 1, Split::Train),
                (2, 1, 3, Split::Train),
                (4, 0, 5, Split::Train),
                (6, 1, 7, Split::Train),
                (8, 0, 9, Split::Train),
                (1, 1, 2, Split::Val),
            ],
        );
        let cfg = TrainConfig {
            epochs: 200,
            learning_rate: 0.5,
            hidden_dim: 8,
            num_layers: 2,
            seed: 1,
            variant: VariantConfig::default(),
        };
        let (_, history) = train(&g, &cfg).unwrap();
        assert!(
            history.iter().any(|r| r.train_acc == 1.0),
            "never reached full training accuracy; best {:?}",
            history.iter().map(|r| r.train_acc).fold(0.0, f64::max)
        );

        // Plain gradient descent (no checkpointing) memorizes the labels.
        let mg = MessageGraph::from_graph(&g);
        let mut params = init_params(&mg, &cfg);
        for _ in 0..cfg.epochs {
            let (_, grads, _) = loss_with_forward(&mg, &params).unwrap();
            apply_step(&mut params, &grads, cfg.learning_rate);
        }
        assert_eq!(accuracy(&params, &g, Split::Train).unwrap(), 1.0);
        let pairs: Vec<(String, String)> = [
            ("p0", "p1"),
            ("p2", "p3"),
            ("p4", "p5"),
            ("p6", "p7"),
            ("p8", "p9"),
        ]
        .iter()
        .map(|&(s, o)| (s.to_string(), o.to_string()))
        .collect();
        assert_eq!(predict(&params, &g, &pairs).unwrap(), vec![0, 1, 0, 1, 0]);
    }

    #[test]
    fn an_indifferent_model_predicts_the_first_relation() {
        let g = five_node();
        let params = ModelParams {
            layers: vec![LayerParams {
                w_self: Tensor::zeros(5, 4),
                w_rel: vec![Tensor::zeros(5, 4); 5],
            }],
            diagonals: vec![vec![0.0; 4]; 2],
            features: FeatureInit::OneHot,
            variant: VariantConfig::default(),
        };
        let pairs = vec![
            ("a".to_string(), "b".to_string()),
            ("d".to_string(), "a".to_string()),
        ];
        assert_eq!(predict(&params, &g, &pairs).unwrap(), vec![0, 0]);

        let missing = vec![("a".to_string(), "zzz".to_string())];
        assert_eq!(
            predict(&params, &g, &missing),
            Err(RgcnError::UnknownNode {
                id: "zzz".to_string()
            })
        );
    }

    #[test]
    fn zero_scores_train_every_variant_bit_identically() {
        let g = add_self_loops(toy(
            &["a", "b", "c", "d", "e"],
            &["r0", "r1"],
            &[
                (0, 0, 1, Split::Train),
                (1, 1, 2, Split::Train),
                (2, 0, 3, Split::Train),
                (3, 1, 0, Split::Val),
                (0, 0, 2, Split::Test),
            ],
        ));
        let mut cfg = config(17);
        cfg.epochs = 15;
        let (base_model, base_history) = train(&g, &cfg).unwrap();

        let variants = [
            VariantConfig {
                variant: Variant::EdgeWeights,
                node_bias: false,
            },
            VariantConfig {
                variant: Variant::HiddenScale,
                node_bias: false,
            },
            VariantConfig {
                variant: Variant::Regularization { lambda: 0.5 },
                node_bias: false,
            },
            VariantConfig {
                variant: Variant::Baseline,
                node_bias: true,
            },
        ];
        for variant in variants {
            let mut vcfg = cfg.clone();
            vcfg.variant = variant;
            let (model, history) = train(&g, &vcfg).unwrap();
            assert_eq!(history, base_history, "{variant:?} history drifted");
            assert_eq!(
                model.layers, base_model.layers,
                "{variant:?} weights drifted"
            );
            assert_eq!(model.diagonals, base_model.diagonals);
        }
    }

    #[test]
    fn bad_hyperparameters_are_rejected_up_front() {
        let g = five_node();
        let bad = [
            TrainConfig {
                epochs: 0,
                ..config(1)
            },
            TrainConfig {
                learning_rate: 0.0,
                ..config(1)
            },
            TrainConfig {
                learning_rate: -0.1,
                ..config(1)
            },
            TrainConfig {
                learning_rate: f64::NAN,
                ..config(1)
            },
            TrainConfig {
                hidden_dim: 0,
                ..config(1)
            },
            TrainConfig {
                num_layers: 0,
                ..config(1)
            },
            TrainConfig {
                variant: VariantConfig {
                    variant: Variant::Regularization { lambda: -1.0 },
                    node_bias: false,
                },
                ..config(1)
            },
            TrainConfig {
                variant: VariantConfig {
                    variant: Variant::Regularization { lambda: f64::NAN },
                    node_bias: false,
                },
                ..config(1)
            },
        ];
        for cfg in bad {
            assert!(
                matches!(train(&g, &cfg), Err(RgcnError::BadConfig { .. })),
                "accepted {cfg:?}"
            );
        }
    }

    #[test]
    fn empty_splits_are_degenerate() {
        let no_val = toy(&["a", "b"], &["r"], &[(0, 0, 1, Split::Train)]);
        assert!(matches!(
            train(&no_val, &config(1)),
            Err(RgcnError::DegenerateSplit { .. })
        ));

        let no_train = toy(&["a", "b"], &["r"], &[(0, 0, 1, Split::Val)]);
        assert!(matches!(
            train(&no_train, &config(1)),
            Err(RgcnError::DegenerateSplit { .. })
        ));

        // five_node has a test edge; a graph without one refuses test accuracy.
        let g = toy(
            &["a", "b", "c"],
            &["r"],
            &[(0, 0, 1, Split::Train), (1, 0, 2, Split::Val)],
        );
        let mg = MessageGraph::from_graph(&g);
        let params = init_params(&mg, &config(1));
        assert!(matches!(
            accuracy(&params, &g, Split::Test),
            Err(RgcnError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn history_and_checkpoints_serialize_stably() {
        let row = EpochStats {
            epoch: 3,
            loss: 0.5,
            train_acc: 1.0,
            val_acc: 0.25,
        };
        let json = serde_json::to_string(&row).unwrap();
        assert_eq!(
            json,
            r#"{"epoch":3,"loss":0.5,"train_acc":1.0,"val_acc":0.25}"#
        );
        let back: EpochStats = serde_json::from_str(&json).unwrap();
        assert_eq!(back, row);

        let g = five_node();
        let (model, _) = train(&g, &config(6)).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        assert!(json.contains(r#""kind":"one_hot""#));
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }
}
