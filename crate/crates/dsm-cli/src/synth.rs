//! Deterministic synthetic corpus generator.
//!
//! Entities belong to two of R membership pools; a pair of entities relates
//! through a pool they share, so the relation type is a function of the
//! unordered node pair (the decoder scores pairs symmetrically, so
//! direction-coded labels would be unlearnable by construction). Every
//! relation is symmetric and each triple is rendered on both endpoint
//! pages: with probability `p_struct` through structural features (infobox,
//! bullet list, heading) and with the pair's true pool relation, otherwise
//! as a plain body-text co-occurrence whose label is drawn uniformly at
//! random. Body-only triples model uncurated text co-occurrence — the page
//! mentions the pair but the asserted relation is arbitrary — so structural
//! evidence is the reliable channel and plain text is the noisy one.
//!
//! Pairs and true labels come from one random stream, structural coins from
//! a second, and noise labels from a third, so two specs differing only in
//! `p_struct` agree on the pairs themselves — that pairing is what makes
//! the ledger a strict oracle for the structure measures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use dsm_core::rgcn::{TrainConfig, Variant, VariantConfig};

use crate::config::{CatalogConfig, PipelineConfig, SplitConfig};
use crate::io;
use crate::pipeline::{StageError, StageResult};

fn default_docs_per_entity() -> usize {
    1
}

/// Generation parameters; `Default` is the benchmark setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_entities: usize,
    pub n_relation_types: usize,
    pub edges_per_relation: usize,
    /// Probability a triple is rendered through a structural feature
    /// (infobox / bullets / heading) instead of plain body text.
    pub p_struct: f64,
    #[serde(default = "default_docs_per_entity")]
    pub docs_per_entity: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 1,
            n_entities: 200,
            n_relation_types: 5,
            edges_per_relation: 40,
            p_struct: 0.8,
            docs_per_entity: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> StageResult<()> {
        let bad = |message: &str| Err(StageError::new("synth", message));
        if self.n_entities < 4 {
            return bad("n_entities must be at least 4");
        }
        if self.n_relation_types < 1 || self.edges_per_relation < 1 || self.docs_per_entity < 1 {
            return bad("counts must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.p_struct) {
            return bad("p_struct must lie in [0, 1]");
        }
        Ok(())
    }
}

/// One gold triple and how it was rendered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub structural: bool,
    /// The subject's page (the pair also co-occurs on the object's page).
    pub document: String,
}

/// Ground truth of one generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub spec: SynthSpec,
    pub structural_count: usize,
    pub body_count: usize,
    pub triples: Vec<LedgerTriple>,
}

/// A generated corpus, before any files are written.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    /// (document id, source text), in document-id order.
    pub documents: Vec<(String, String)>,
    pub gazetteer: String,
    pub triples: String,
    pub ledger: Ledger,
}

const FIRST: [&str; 20] = [
    "Aldric", "Brena", "Cassia", "Doran", "Elowen", "Fenric", "Gilda", "Hadrian", "Isolde",
    "Jorund", "Kestrel", "Lyra", "Marek", "Nerissa", "Orrin", "Petra", "Quilla", "Rosalind",
    "Severin", "Talia",
];

const LAST: [&str; 20] = [
    "Ashford",
    "Blackwood",
    "Carrow",
    "Draven",
    "Eastmere",
    "Fairwind",
    "Greenholt",
    "Harrowgate",
    "Ironwood",
    "Juniper",
    "Kingsley",
    "Larkspur",
    "Mosswell",
    "Northgate",
    "Oakhurst",
    "Pembroke",
    "Quarry",
    "Ravenhill",
    "Silverbrook",
    "Thornfield",
];

const REGIONS: [&str; 8] = [
    "harbor", "orchard", "foundry", "archive", "granary", "mill", "market", "chapel",
];

const RELATION_NAMES: [&str; 5] = ["allied", "mentor", "rival", "patron", "guild"];

pub fn entity_id(i: usize) -> String {
    format!("p{i:04}")
}

pub fn entity_name(i: usize) -> String {
    let first = FIRST[i % FIRST.len()];
    let family = i / FIRST.len();
    if family < LAST.len() {
        format!("{first} {}", LAST[family])
    } else {
        format!("{first} Clan{family}")
    }
}

pub fn relation_name(r: usize) -> String {
    if r < RELATION_NAMES.len() {
        RELATION_NAMES[r].to_string()
    } else {
        format!("kind{r}")
    }
}

/// The two pools entity `i` belongs to (one pool when R == 1).
fn profile(i: usize, relations: usize) -> Vec<usize> {
    if relations == 1 {
        return vec![0];
    }
    let mut pairs = Vec::new();
    for a in 0..relations {
        for b in (a + 1)..relations {
            pairs.push(vec![a, b]);
        }
    }
    pairs[i % pairs.len()].clone()
}

fn shared_pools(a: usize, b: usize, relations: usize) -> Vec<usize> {
    let pa = profile(a, relations);
    profile(b, relations)
        .into_iter()
        .filter(|r| pa.contains(r))
        .collect()
}

/// How many entities carry edges. Only a prefix of the entity roster joins
/// the graph: pools stay dense enough (about four incident edges per member
/// and pool) that a 60% training split still shows most nodes' memberships,
/// while the remaining entities contribute background pages that the
/// structure measures are computed against.
fn active_entities(spec: &SynthSpec) -> usize {
    let relations = spec.n_relation_types;
    let profiles = if relations == 1 {
        1
    } else {
        relations * (relations - 1) / 2
    };
    // A prefix of size a puts roughly 2a/R members in each pool (every
    // entity joins two pools); aim for edges_per_relation/2 members so the
    // expected per-pool degree is four.
    let target_members = (spec.edges_per_relation / 2).max(4);
    let mut active = if relations == 1 {
        target_members
    } else {
        (target_members * relations).div_ceil(2)
    }
    .max(profiles)
    .min(spec.n_entities);
    // Grow the prefix while any pool is too small to host its edge quota
    // (with headroom, since an unordered pair can serve only one relation).
    loop {
        let enough = (0..relations).all(|r| {
            let m = (0..active)
                .filter(|&i| profile(i, relations).contains(&r))
                .count();
            m * (m.saturating_sub(1)) / 2 >= 2 * spec.edges_per_relation
        });
        if enough || active >= spec.n_entities {
            return active;
        }
        active = (active + profiles).min(spec.n_entities);
    }
}

/// Draws the pairs and their true pool relations. Depends only on
/// (seed, counts) — never on `p_struct` — so corpora differing only in
/// rendering share their pairs.
fn draw_triples(spec: &SynthSpec) -> StageResult<Vec<(usize, usize, usize)>> {
    let relations = spec.n_relation_types;
    let active = active_entities(spec);
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut triples = Vec::with_capacity(relations * spec.edges_per_relation);
    for r in 0..relations {
        let members: Vec<usize> = (0..active)
            .filter(|&i| profile(i, relations).contains(&r))
            .collect();
        if members.len() < 2 {
            return Err(StageError::new(
                "synth",
                format!("relation {r} has fewer than two member entities"),
            ));
        }
        for _ in 0..spec.edges_per_relation {
            let mut chosen = None;
            for attempt in 0..20_000 {
                let a = members[rng.gen_range(0..members.len())];
                let b = members[rng.gen_range(0..members.len())];
                if a == b {
                    continue;
                }
                let key = (a.min(b), a.max(b));
                if used.contains(&key) {
                    continue;
                }
                // Prefer pairs whose only shared pool is r, so the label is
                // recoverable from the pair; fall back when pools are too
                // small for that to be possible.
                if shared_pools(a, b, relations).len() == 1 || attempt > 4_000 {
                    chosen = Some((a, b, key));
                    break;
                }
            }
            let Some((a, b, key)) = chosen else {
                return Err(StageError::new(
                    "synth",
                    format!("relation {r}: ran out of unused entity pairs"),
                ));
            };
            used.insert(key);
            triples.push((a, r, b));
        }
    }
    Ok(triples)
}

/// What a subject's page must show.
#[derive(Default)]
struct PagePlan {
    /// relation → structurally rendered objects, in triple order.
    structural: BTreeMap<usize, Vec<usize>>,
    /// (relation, object) pairs rendered as body text, in triple order.
    body: Vec<(usize, usize)>,
}

/// Renders one entity page. Body sentences come before the first heading,
/// so every heading scopes exactly its own relation's section. Every
/// structurally rendered relation uses the same template — a heading naming
/// the owner, a bullet list, and an infobox — so a pair's aggregate score
/// reflects how it was attested, not which relation it carries.
fn render_page(subject: usize, plan: &PagePlan) -> String {
    let name = entity_name(subject);
    let mut page = String::new();
    let _ = writeln!(page, "# {name}");
    page.push('\n');
    let _ = writeln!(
        page,
        "{name} keeps a seat at the {} commons and appears throughout the registry.",
        REGIONS[subject % REGIONS.len()]
    );

    for &(relation, object) in &plan.body {
        let rel = relation_name(relation);
        page.push('\n');
        let _ = writeln!(
            page,
            "{name} is recorded beside {} in the common {rel} ledger.",
            entity_name(object)
        );
    }

    for (&relation, objects) in &plan.structural {
        let rel = relation_name(relation);
        page.push('\n');
        let _ = writeln!(page, "## {name} {rel} circle");
        page.push('\n');
        render_bullets(&mut page, &name, &rel, objects);
        page.push('\n');
        render_infobox(&mut page, &rel, objects);
    }
    page
}

fn render_infobox(page: &mut String, rel: &str, objects: &[usize]) {
    let _ = writeln!(page, "{{{{infobox");
    for (n, &object) in objects.iter().enumerate() {
        let _ = writeln!(page, "{rel} seat {} = {}", n + 1, entity_name(object));
    }
    let _ = writeln!(page, "}}}}");
}

fn render_bullets(page: &mut String, name: &str, rel: &str, objects: &[usize]) {
    let _ = writeln!(page, "{name} lists the {rel} register below:");
    for &object in objects {
        let _ = writeln!(page, "- {}", entity_name(object));
    }
}

/// Generates a corpus in memory.
pub fn synth_corpus(spec: &SynthSpec) -> StageResult<SynthOutput> {
    spec.validate()?;
    let triples = draw_triples(spec)?;

    // Structural coins come from their own stream so they depend only on
    // (seed, triple order): corpora that differ only in p_struct flip the
    // same coins against different thresholds.
    let mut coin_rng = ChaCha20Rng::seed_from_u64(spec.seed ^ 0x9E37_79B9_7F4A_7C15);
    let structural: Vec<bool> = triples
        .iter()
        .map(|_| coin_rng.gen::<f64>() < spec.p_struct)
        .collect();

    // Body-only triples model uncurated text co-occurrence: the label they
    // carry is plausible but wrong — one of the endpoints' own relations
    // that the pair itself does not share, so the bad label lands in a
    // relation channel the endpoint genuinely uses. Noise labels come from
    // a third stream, consumed only for body triples, in triple order.
    let mut label_rng = ChaCha20Rng::seed_from_u64(spec.seed ^ 0x3C6E_F372_FE94_F82A);
    let labels: Vec<usize> = triples
        .iter()
        .zip(&structural)
        .map(|(&(s, r, o), &is_structural)| {
            if is_structural {
                return r;
            }
            let relations = spec.n_relation_types;
            let shared = shared_pools(s, o, relations);
            let mut wrong: Vec<usize> = profile(s, relations)
                .into_iter()
                .chain(profile(o, relations))
                .filter(|k| !shared.contains(k))
                .collect();
            wrong.sort_unstable();
            wrong.dedup();
            if wrong.is_empty() {
                label_rng.gen_range(0..relations)
            } else {
                wrong[label_rng.gen_range(0..wrong.len())]
            }
        })
        .collect();

    // Relations are symmetric: each pair is rendered on both endpoint
    // pages, so the structure measures see evidence in both directions.
    let mut plans: BTreeMap<usize, PagePlan> = BTreeMap::new();
    for (t, &(s, _, o)) in triples.iter().enumerate() {
        let r = labels[t];
        for (owner, other) in [(s, o), (o, s)] {
            let plan = plans.entry(owner).or_default();
            if structural[t] {
                plan.structural.entry(r).or_default().push(other);
            } else {
                plan.body.push((r, other));
            }
        }
    }

    let empty = PagePlan::default();
    let mut documents = Vec::with_capacity(spec.n_entities * spec.docs_per_entity);
    for i in 0..spec.n_entities {
        let page = render_page(i, plans.get(&i).unwrap_or(&empty));
        if spec.docs_per_entity == 1 {
            documents.push((entity_id(i), page));
        } else {
            for copy in 0..spec.docs_per_entity {
                documents.push((format!("{}_d{copy}", entity_id(i)), page.clone()));
            }
        }
    }

    let mut gazetteer = String::new();
    for i in 0..spec.n_entities {
        let _ = writeln!(gazetteer, "person\t{}\t{}", entity_name(i), entity_id(i));
    }

    let mut triples_tsv = String::new();
    let mut ledger_triples = Vec::with_capacity(triples.len());
    for (t, &(s, _, o)) in triples.iter().enumerate() {
        let relation = relation_name(labels[t]);
        let _ = writeln!(
            triples_tsv,
            "{}\t{relation}\t{}\tperson\tperson",
            entity_id(s),
            entity_id(o)
        );
        let document = if spec.docs_per_entity == 1 {
            entity_id(s)
        } else {
            format!("{}_d0", entity_id(s))
        };
        ledger_triples.push(LedgerTriple {
            subject: entity_id(s),
            relation,
            object: entity_id(o),
            structural: structural[t],
            document,
        });
    }

    let structural_count = structural.iter().filter(|&&b| b).count();
    Ok(SynthOutput {
        documents,
        gazetteer,
        triples: triples_tsv,
        ledger: Ledger {
            spec: *spec,
            structural_count,
            body_count: triples.len() - structural_count,
            triples: ledger_triples,
        },
    })
}

/// The pipeline configuration the benchmark runs with, path-relative to the
/// synth output directory.
///
/// The catalog keeps the structural slots (bullets, infobox) at twice the
/// neutral weight and halves title/section: title enrichment makes every
/// on-page co-occurrence score a little, so a moderate bullet/infobox boost
/// is what separates structurally attested pairs from plain-text ones.
/// Pushing those weights higher keeps widening the gap between the two
/// edge-weight populations but inflates the mean message scale, which the
/// shared fixed learning rate then pays for; weights of 2 sit below that
/// break-even point. The split leans toward a larger test fraction because
/// test accuracy over a couple hundred edges is the benchmark's output —
/// variance there matters more than a few extra training edges.
pub fn benchmark_config(spec: &SynthSpec) -> PipelineConfig {
    let train = |variant: Variant| TrainConfig {
        epochs: 250,
        learning_rate: 1.0,
        hidden_dim: 16,
        num_layers: 2,
        seed: spec.seed,
        variant: VariantConfig {
            variant,
            node_bias: false,
        },
    };
    PipelineConfig {
        name: "synthetic".to_string(),
        corpus_dir: "corpus".into(),
        gazetteer_file: "gazetteers.tsv".into(),
        triples_file: "triples.tsv".into(),
        output_dir: "out".into(),
        catalog: CatalogConfig {
            bullets: 2.0,
            footnotes: 1.0,
            title: 0.5,
            section: 0.5,
            infobox: 2.0,
            include_absolute: true,
            absolute_weight: 0.0,
        },
        split: SplitConfig {
            train: 0.5,
            val: 0.2,
            test: 0.3,
            seed: spec.seed,
        },
        variants: vec![
            train(Variant::Baseline),
            train(Variant::Regularization { lambda: 0.5 }),
            train(Variant::HiddenScale),
            train(Variant::EdgeWeights),
        ],
    }
}

/// Writes a generated corpus into `out_dir`: `corpus/*.txt`,
/// `gazetteers.tsv`, `triples.tsv`, `ledger.json`, and a ready-to-run
/// `config.json`.
pub fn write_synth(spec: &SynthSpec, out_dir: &Path) -> StageResult<Ledger> {
    let output = synth_corpus(spec)?;
    for (id, source) in &output.documents {
        io::write_file(
            "synth",
            &out_dir.join("corpus").join(format!("{id}.txt")),
            source,
        )?;
    }
    io::write_file("synth", &out_dir.join("gazetteers.tsv"), &output.gazetteer)?;
    io::write_file("synth", &out_dir.join("triples.tsv"), &output.triples)?;
    io::save_json("synth", &out_dir.join("ledger.json"), &output.ledger)?;
    io::save_json(
        "synth",
        &out_dir.join("config.json"),
        &benchmark_config(spec),
    )?;
    Ok(output.ledger)
}
