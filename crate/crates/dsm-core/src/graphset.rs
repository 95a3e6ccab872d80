//! Typed multi-relational graphs: triple loading, self-loops, deterministic
//! splits, per-edge structure scores, and dataset statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::docstruct::Document;
use crate::dsm::DsmRecord;

/// Relation name used for the loops added to isolated nodes.
pub const SELF_LOOP_RELATION: &str = "_self_loop";

/// Which partition an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One directed edge, as indexes into the node and relation catalogs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub subject: usize,
    pub relation: usize,
    pub object: usize,
}

/// Both directions of an edge's structure scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDsm {
    /// The (subject, object) record.
    pub forward: DsmRecord,
    /// The (object, subject) record, for inverse-direction messages.
    pub reverse: DsmRecord,
}

/// A typed multi-relational graph.
///
/// Node and relation ids are dense, assigned by first appearance. `splits`
/// and `dsm` run parallel to `edges`; edges default to `Train` with no
/// scores attached. When self-loops have been added, `self_loop_relation`
/// names the (always last) relation id they use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedGraph {
    pub node_ids: Vec<String>,
    pub node_types: Vec<String>,
    pub relations: Vec<String>,
    pub edges: Vec<Edge>,
    pub splits: Vec<Split>,
    pub dsm: Vec<Option<EdgeDsm>>,
    pub self_loop_relation: Option<usize>,
}

/// Headline numbers of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub documents: usize,
    pub nodes: usize,
    pub node_types: usize,
    pub relation_types: usize,
}

/// Triple files or split requests the graph cannot digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// A triples row without exactly five tab-separated fields.
    BadRow { line: usize },
    /// An empty field in a triples row.
    EmptyField { line: usize },
    /// One entity id claimed by two node types.
    TypeConflict {
        entity: String,
        first: String,
        second: String,
    },
    /// Fractions that cannot give every split at least one edge.
    DegenerateSplit { reason: &'static str },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::BadRow { line } => write!(
                f,
                "line {line}: expected `subject<TAB>relation<TAB>object<TAB>subject_type<TAB>object_type`"
            ),
            GraphError::EmptyField { line } => write!(f, "line {line}: empty field in triples row"),
            GraphError::TypeConflict { entity, first, second } => {
                write!(f, "entity {entity:?} appears with node types {first:?} and {second:?}")
            }
            GraphError::DegenerateSplit { reason } => write!(f, "degenerate split: {reason}"),
        }
    }
}

impl core::error::Error for GraphError {}

impl TypedGraph {
    pub fn empty() -> Self {
        TypedGraph {
            node_ids: Vec::new(),
            node_types: Vec::new(),
            relations: Vec::new(),
            edges: Vec::new(),
            splits: Vec::new(),
            dsm: Vec::new(),
            self_loop_relation: None,
        }
    }

    /// Node id → index map for entity lookups.
    pub fn node_lookup(&self) -> BTreeMap<&str, usize> {
        self.node_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    /// Relations belonging to the dataset itself (the self-loop relation,
    /// when present, is bookkeeping and excluded).
    pub fn num_dataset_relations(&self) -> usize {
        self.relations.len() - usize::from(self.self_loop_relation.is_some())
    }

    pub fn is_self_loop_edge(&self, edge: &Edge) -> bool {
        Some(edge.relation) == self.self_loop_relation
    }
}

/// Parses a triples file: `subject<TAB>relation<TAB>object<TAB>subject_type
/// <TAB>object_type` rows, `#` comments and blank lines ignored, duplicate
/// triples deduplicated. Node and relation ids are assigned by first
/// appearance, so the same file always yields the same graph.
pub fn parse_triples(text: &str) -> Result<TypedGraph, GraphError> {
    let mut graph = TypedGraph::empty();
    let mut node_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut relation_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen: BTreeSet<(usize, usize, usize)> = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [subject, relation, object, subject_type, object_type] = fields[..] else {
            return Err(GraphError::BadRow { line: lineno });
        };
        if fields.iter().any(|f| f.is_empty()) {
            return Err(GraphError::EmptyField { line: lineno });
        }

        let mut intern_node =
            |id: &str, node_type: &str, graph: &mut TypedGraph| match node_index.get(id) {
                Some(&i) => {
                    if graph.node_types[i] != node_type {
                        return Err(GraphError::TypeConflict {
                            entity: id.to_string(),
                            first: graph.node_types[i].clone(),
                            second: node_type.to_string(),
                        });
                    }
                    Ok(i)
                }
                None => {
                    let i = graph.node_ids.len();
                    graph.node_ids.push(id.to_string());
                    graph.node_types.push(node_type.to_string());
                    node_index.insert(id.to_string(), i);
                    Ok(i)
                }
            };
        let s = intern_node(subject, subject_type, &mut graph)?;
        let o = intern_node(object, object_type, &mut graph)?;
        let r = match relation_index.get(relation) {
            Some(&r) => r,
            None => {
                let r = graph.relations.len();
                graph.relations.push(relation.to_string());
                relation_index.insert(relation.to_string(), r);
                r
            }
        };
        if seen.insert((s, r, o)) {
            graph.edges.push(Edge {
                subject: s,
                relation: r,
                object: o,
            });
            graph.splits.push(Split::Train);
            graph.dsm.push(None);
        }
    }
    Ok(graph)
}

/// Renders the dataset edges (self-loops excluded) back to canonical TSV.
pub fn serialize_triples(graph: &TypedGraph) -> String {
    let mut out = String::new();
    for edge in &graph.edges {
        if graph.is_self_loop_edge(edge) {
            continue;
        }
        out.push_str(&graph.node_ids[edge.subject]);
        out.push('\t');
        out.push_str(&graph.relations[edge.relation]);
        out.push('\t');
        out.push_str(&graph.node_ids[edge.object]);
        out.push('\t');
        out.push_str(&graph.node_types[edge.subject]);
        out.push('\t');
        out.push_str(&graph.node_types[edge.object]);
        out.push('\n');
    }
    out
}

/// Gives every zero-degree node a (v, self, v) edge under a dedicated
/// relation appended to the catalog. Connected nodes are untouched;
/// calling twice is the same as calling once.
pub fn add_self_loops(mut graph: TypedGraph) -> TypedGraph {
    if graph.self_loop_relation.is_some() {
        return graph;
    }
    let rel = graph.relations.len();
    graph.relations.push(SELF_LOOP_RELATION.to_string());
    graph.self_loop_relation = Some(rel);

    let mut degree = alloc::vec![0u64; graph.node_ids.len()];
    for edge in &graph.edges {
        degree[edge.subject] += 1;
        degree[edge.object] += 1;
    }
    for (v, &deg) in degree.iter().enumerate() {
        if deg == 0 {
            graph.edges.push(Edge {
                subject: v,
                relation: rel,
                object: v,
            });
            graph.splits.push(Split::Train);
            graph.dsm.push(None);
        }
    }
    graph
}

/// Assigns every dataset edge to Train/Val/Test, stratified by relation.
///
/// Per relation, val and test sizes are the floors of the fractions; any
/// remainder goes to train; classes with at least 3 edges get at least one
/// edge in every split. Membership is drawn from a ChaCha20 stream seeded
/// with `seed`, so the assignment depends only on (edge list, fractions,
/// seed). Self-loop edges always stay in Train.
pub fn split_edges(
    mut graph: TypedGraph,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<TypedGraph, GraphError> {
    let (f_train, f_val, f_test) = fractions;
    let all_finite = f_train.is_finite() && f_val.is_finite() && f_test.is_finite();
    if !all_finite || f_train <= 0.0 || f_val <= 0.0 || f_test <= 0.0 {
        return Err(GraphError::DegenerateSplit {
            reason: "fractions must be positive",
        });
    }
    if ((f_train + f_val + f_test) - 1.0).abs() > 1e-9 {
        return Err(GraphError::DegenerateSplit {
            reason: "fractions must sum to 1",
        });
    }

    let mut by_relation: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, edge) in graph.edges.iter().enumerate() {
        if graph.is_self_loop_edge(edge) {
            graph.splits[i] = Split::Train;
        } else {
            by_relation.entry(edge.relation).or_default().push(i);
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut totals = [0usize; 3];
    for (_, mut idxs) in by_relation {
        // Fisher-Yates on the class's edge indexes.
        for i in (1..idxs.len()).rev() {
            let j = rng.gen_range(0..=i);
            idxs.swap(i, j);
        }
        let n = idxs.len();
        let mut n_val = (n as f64 * f_val) as usize;
        let mut n_test = (n as f64 * f_test) as usize;
        if n >= 3 {
            // Splittable classes keep at least one edge in every split.
            n_val = n_val.max(1).min(n - 2);
            n_test = n_test.max(1).min(n - 1 - n_val);
        } else {
            n_val = n_val.min(n);
            n_test = n_test.min(n - n_val);
        }
        for (pos, &edge_idx) in idxs.iter().enumerate() {
            let split = if pos < n_val {
                Split::Val
            } else if pos < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            };
            graph.splits[edge_idx] = split;
            totals[match split {
                Split::Train => 0,
                Split::Val => 1,
                Split::Test => 2,
            }] += 1;
        }
    }
    if totals.contains(&0) {
        return Err(GraphError::DegenerateSplit {
            reason: "a fraction rounds to zero edges overall",
        });
    }
    Ok(graph)
}

/// Attaches structure scores to every edge: the (s, o) record forward and
/// the (o, s) record for the inverse direction. Missing pairs get zero
/// records, and self-loop edges always score zero.
pub fn attach_dsm(
    mut graph: TypedGraph,
    records: &BTreeMap<(String, String), DsmRecord>,
) -> TypedGraph {
    let num_features = records.values().next().map_or(0, |r| r.rho_k.len());
    for (i, edge) in graph.edges.iter().enumerate() {
        let s = &graph.node_ids[edge.subject];
        let o = &graph.node_ids[edge.object];
        let dsm = if graph.is_self_loop_edge(edge) {
            EdgeDsm {
                forward: DsmRecord::zero(s, o, num_features),
                reverse: DsmRecord::zero(o, s, num_features),
            }
        } else {
            let lookup = |a: &String, b: &String| {
                records
                    .get(&(a.clone(), b.clone()))
                    .cloned()
                    .unwrap_or_else(|| DsmRecord::zero(a, b, num_features))
            };
            EdgeDsm {
                forward: lookup(s, o),
                reverse: lookup(o, s),
            }
        };
        graph.dsm[i] = Some(dsm);
    }
    graph
}

/// Headline counts for a graph and the corpus it came from.
pub fn stats(graph: &TypedGraph, corpus: &[Document]) -> DatasetStats {
    let node_types: BTreeSet<&String> = graph.node_types.iter().collect();
    DatasetStats {
        documents: corpus.len(),
        nodes: graph.node_ids.len(),
        node_types: node_types.len(),
        relation_types: graph.num_dataset_relations(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(
        nodes: &[(&str, &str)],
        relations: &[&str],
        edges: &[(usize, usize, usize)],
    ) -> TypedGraph {
        TypedGraph {
            node_ids: nodes.iter().map(|(id, _)| id.to_string()).collect(),
            node_types: nodes.iter().map(|(_, ty)| ty.to_string()).collect(),
            relations: relations.iter().map(|r| r.to_string()).collect(),
            edges: edges
                .iter()
                .map(|&(s, r, o)| Edge {
                    subject: s,
                    relation: r,
                    object: o,
                })
                .collect(),
            splits: alloc::vec![Split::Train; edges.len()],
            dsm: alloc::vec![None; edges.len()],
            self_loop_relation: None,
        }
    }

    #[test]
    fn empty_file_gives_empty_graph() {
        let g = parse_triples("").unwrap();
        assert_eq!(g, TypedGraph::empty());
        let commented = parse_triples("# only a comment\n\n").unwrap();
        assert_eq!(commented, TypedGraph::empty());
    }

    #[test]
    fn shared_subject_interns_three_nodes() {
        let g = parse_triples("a\tknows\tb\tPerson\tPerson\na\tworks_at\tc\tPerson\tOrg").unwrap();
        assert_eq!(g.node_ids, alloc::vec!["a", "b", "c"]);
        assert_eq!(g.node_types, alloc::vec!["Person", "Person", "Org"]);
        assert_eq!(g.relations, alloc::vec!["knows", "works_at"]);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(
            g.edges[0],
            Edge {
                subject: 0,
                relation: 0,
                object: 1
            }
        );
        assert_eq!(
            g.edges[1],
            Edge {
                subject: 0,
                relation: 1,
                object: 2
            }
        );
    }

    #[test]
    fn duplicate_triples_are_dropped() {
        let g = parse_triples(
            "a\tknows\tb\tPerson\tPerson\na\tknows\tb\tPerson\tPerson\nb\tknows\ta\tPerson\tPerson",
        )
        .unwrap();
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn triple_errors_carry_line_numbers() {
        assert_eq!(
            parse_triples("a\tknows\tb\tPerson"),
            Err(GraphError::BadRow { line: 1 })
        );
        assert_eq!(
            parse_triples("# fine\na\t\tb\tPerson\tPerson"),
            Err(GraphError::EmptyField { line: 2 })
        );
        assert_eq!(
            parse_triples("a\tknows\tb\tPerson\tPerson\nc\tknows\ta\tPerson\tOrg"),
            Err(GraphError::TypeConflict {
                entity: "a".to_string(),
                first: "Person".to_string(),
                second: "Org".to_string(),
            })
        );
    }

    #[test]
    fn triples_round_trip_through_canonical_form() {
        let text = "b\tknows\ta\tPerson\tPerson\na\tworks_at\tc\tPerson\tOrg\n";
        let g = parse_triples(text).unwrap();
        assert_eq!(serialize_triples(&g), text);
        let g2 = parse_triples(&serialize_triples(&g)).unwrap();
        assert_eq!(g2, g);
        // Self-loops never leak into the dataset serialization.
        let with_loops = add_self_loops(g);
        assert_eq!(serialize_triples(&with_loops), text);
    }

    #[test]
    fn self_loops_cover_exactly_the_isolated_nodes() {
        let lonely = toy(&[("a", "Person")], &[], &[]);
        let looped = add_self_loops(lonely);
        assert_eq!(looped.edges.len(), 1);
        assert_eq!(
            looped.edges[0],
            Edge {
                subject: 0,
                relation: 0,
                object: 0
            }
        );
        assert_eq!(looped.relations, alloc::vec![SELF_LOOP_RELATION]);
        assert_eq!(looped.self_loop_relation, Some(0));
        assert_eq!(looped.num_dataset_relations(), 0);

        let three = toy(
            &[("a", "Person"), ("b", "Person"), ("c", "Person")],
            &["knows"],
            &[(0, 0, 1)],
        );
        let looped = add_self_loops(three);
        assert_eq!(looped.edges.len(), 2);
        assert_eq!(
            looped.edges[1],
            Edge {
                subject: 2,
                relation: 1,
                object: 2
            }
        );
        assert!(looped.is_self_loop_edge(&looped.edges[1]));
        assert!(!looped.is_self_loop_edge(&looped.edges[0]));
    }

    #[test]
    fn self_loops_are_idempotent_and_leave_connected_graphs_alone() {
        let g = toy(&[("a", "P"), ("b", "P")], &["knows"], &[(0, 0, 1)]);
        let once = add_self_loops(g.clone());
        assert_eq!(once.edges, g.edges);
        assert_eq!(once.relations.len(), 2);
        let twice = add_self_loops(once.clone());
        assert_eq!(twice, once);
    }

    #[test]
    fn ten_edges_split_eight_one_one() {
        let mut rows = String::new();
        for i in 0..10 {
            rows.push_str(&alloc::format!("n{i}\trel\tm{i}\tPerson\tPerson\n"));
        }
        let g = split_edges(parse_triples(&rows).unwrap(), (0.8, 0.1, 0.1), 7).unwrap();
        let count = |s: Split| g.splits.iter().filter(|&&x| x == s).count();
        assert_eq!(
            (count(Split::Train), count(Split::Val), count(Split::Test)),
            (8, 1, 1)
        );
    }

    #[test]
    fn splits_are_deterministic_under_seed() {
        let mut rows = String::new();
        for i in 0..20 {
            rows.push_str(&alloc::format!(
                "n{i}\trel{}\tm{i}\tPerson\tPerson\n",
                i % 2
            ));
        }
        let g = parse_triples(&rows).unwrap();
        let a = split_edges(g.clone(), (0.6, 0.2, 0.2), 42).unwrap();
        let b = split_edges(g.clone(), (0.6, 0.2, 0.2), 42).unwrap();
        assert_eq!(a.splits, b.splits);
        let c = split_edges(g, (0.6, 0.2, 0.2), 43).unwrap();
        assert_ne!(a.splits, c.splits);
    }

    #[test]
    fn three_edge_class_lands_one_edge_per_split() {
        let rows = "a\tr\tb\tP\tP\nb\tr\tc\tP\tP\nc\tr\ta\tP\tP\n";
        let g = split_edges(parse_triples(rows).unwrap(), (0.8, 0.1, 0.1), 1).unwrap();
        let count = |s: Split| g.splits.iter().filter(|&&x| x == s).count();
        assert_eq!(
            (count(Split::Train), count(Split::Val), count(Split::Test)),
            (1, 1, 1)
        );
    }

    #[test]
    fn stratification_covers_every_big_class() {
        let mut rows = String::new();
        for r in 0..3 {
            for i in 0..5 {
                rows.push_str(&alloc::format!(
                    "s{r}_{i}\trel{r}\to{r}_{i}\tPerson\tPerson\n"
                ));
            }
        }
        let g = split_edges(parse_triples(&rows).unwrap(), (0.8, 0.1, 0.1), 11).unwrap();
        for r in 0..3 {
            for split in [Split::Train, Split::Val, Split::Test] {
                let n = g
                    .edges
                    .iter()
                    .zip(&g.splits)
                    .filter(|(e, s)| e.relation == r && **s == split)
                    .count();
                assert!(n >= 1, "relation {r} has no {split:?} edge");
            }
        }
    }

    #[test]
    fn self_loops_always_stay_in_train() {
        let g = toy(
            &[("a", "P"), ("b", "P"), ("c", "P"), ("d", "P"), ("e", "P")],
            &["r"],
            &[(0, 0, 1), (1, 0, 2), (2, 0, 0)],
        );
        let looped = add_self_loops(g);
        let split = split_edges(looped, (0.34, 0.33, 0.33), 5).unwrap();
        for (edge, s) in split.edges.iter().zip(&split.splits) {
            if split.is_self_loop_edge(edge) {
                assert_eq!(*s, Split::Train);
            }
        }
    }

    #[test]
    fn degenerate_splits_are_rejected() {
        let two = parse_triples("a\tr\tb\tP\tP\nb\tr\tc\tP\tP\n").unwrap();
        assert_eq!(
            split_edges(two, (0.8, 0.1, 0.1), 0),
            Err(GraphError::DegenerateSplit {
                reason: "a fraction rounds to zero edges overall"
            })
        );
        let g = parse_triples("a\tr\tb\tP\tP\n").unwrap();
        assert_eq!(
            split_edges(g.clone(), (0.5, 0.5, 0.0), 0),
            Err(GraphError::DegenerateSplit {
                reason: "fractions must be positive"
            })
        );
        assert_eq!(
            split_edges(g, (0.5, 0.4, 0.2), 0),
            Err(GraphError::DegenerateSplit {
                reason: "fractions must sum to 1"
            })
        );
    }

    #[test]
    fn attach_pairs_each_edge_with_both_directions() {
        use crate::dsm::DsmRecord;
        let g = toy(
            &[("a", "P"), ("b", "P"), ("c", "P")],
            &["r"],
            &[(0, 0, 1), (1, 0, 2)],
        );
        let mut records: BTreeMap<(String, String), DsmRecord> = BTreeMap::new();
        records.insert(
            ("a".to_string(), "b".to_string()),
            DsmRecord {
                x: "a".into(),
                y: "b".into(),
                rho_k: alloc::vec![1.0],
                rho_agg: 0.9,
            },
        );
        records.insert(
            ("b".to_string(), "a".to_string()),
            DsmRecord {
                x: "b".into(),
                y: "a".into(),
                rho_k: alloc::vec![0.5],
                rho_agg: 0.4,
            },
        );
        let attached = attach_dsm(g, &records);
        let first = attached.dsm[0].as_ref().unwrap();
        assert_eq!(first.forward.rho_agg, 0.9);
        assert_eq!(first.reverse.rho_agg, 0.4);
        // The unmatched edge falls back to zero records of matching width.
        let second = attached.dsm[1].as_ref().unwrap();
        assert_eq!(second.forward, DsmRecord::zero("b", "c", 1));
        assert_eq!(second.reverse, DsmRecord::zero("c", "b", 1));
    }

    #[test]
    fn self_loop_edges_score_zero_even_with_records() {
        use crate::dsm::DsmRecord;
        let lonely = add_self_loops(toy(&[("a", "P")], &[], &[]));
        let mut records: BTreeMap<(String, String), DsmRecord> = BTreeMap::new();
        records.insert(
            ("a".to_string(), "a".to_string()),
            DsmRecord {
                x: "a".into(),
                y: "a".into(),
                rho_k: alloc::vec![1.0],
                rho_agg: 1.0,
            },
        );
        let attached = attach_dsm(lonely, &records);
        assert_eq!(attached.dsm[0].as_ref().unwrap().forward.rho_agg, 0.0);
    }

    #[test]
    fn stats_count_types_and_exclude_the_self_relation() {
        assert_eq!(
            stats(&TypedGraph::empty(), &[]),
            DatasetStats {
                documents: 0,
                nodes: 0,
                node_types: 0,
                relation_types: 0
            }
        );
        let g = add_self_loops(toy(
            &[("a", "Person"), ("b", "Org"), ("c", "Person")],
            &["works_at"],
            &[(0, 0, 1)],
        ));
        let corpus = alloc::vec![
            crate::docstruct::parse_document("d1", "# A\nbody").unwrap(),
            crate::docstruct::parse_document("d2", "# B\nbody").unwrap(),
        ];
        assert_eq!(
            stats(&g, &corpus),
            DatasetStats {
                documents: 2,
                nodes: 3,
                node_types: 2,
                relation_types: 1
            }
        );
    }

    #[test]
    fn graph_serde_round_trip() {
        let g = add_self_loops(toy(
            &[("a", "P"), ("b", "P"), ("c", "P")],
            &["r"],
            &[(0, 0, 1)],
        ));
        let json = serde_json::to_string(&g).unwrap();
        let back: TypedGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }
}
