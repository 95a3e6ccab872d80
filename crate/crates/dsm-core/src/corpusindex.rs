//! Structure-aware corpus index: per-unit entity sets split by role.
//!
//! A [`FeatureCatalog`] names the structural features being measured and,
//! for each, which mention positions count as the *source* role (the side a
//! relation is read from, e.g. text preceding a bullet list) and which as
//! the *target* role (e.g. the bullet items). [`build_index`] folds a
//! mention list into a [`CorpusIndex`]: per-entity totals plus one posting
//! per (unit, feature) pair holding the source/target entity sets, which is
//! everything the structure measures need.
//!
//! [`enrich_mentions`] runs before indexing: it replicates title mentions
//! into every unit of the document and section-heading mentions into every
//! unit under that heading, so entities named in headings co-occur with the
//! content they enclose.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::docstruct::{unit_groups, Document, Mention, Position, SpanKind, UnitFeature, UnitKind};

// === Feature catalog ===

/// Whether a feature measures a pair relation or a per-entity property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Relational,
    Absolute,
}

/// One measured feature: an index `k` (dense from 1), a structural feature
/// tag that gates which units count, and the two position role sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub k: usize,
    pub name: String,
    /// Structural feature whose presence a unit must carry to be counted.
    /// `None` only for the absolute entry.
    pub feature: Option<UnitFeature>,
    /// Positions read as the source side of the relation.
    pub role_a: BTreeSet<Position>,
    /// Positions read as the target side.
    pub role_b: BTreeSet<Position>,
    pub weight: f64,
    pub kind: FeatureKind,
}

/// The ordered list of measured features.
///
/// Relational entries come first (k = 1..=Kr); an optional absolute entry
/// sits last. Weights default to 1.0 for relational features and 0.0 for
/// the absolute one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub entries: Vec<FeatureSpec>,
}

/// A catalog that violates its invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatalogError {
    /// Entry indexes are not exactly 1..=len in order.
    NonDenseIndexes { expected: usize, got: usize },
    /// A relational entry without a feature tag or with an empty source role.
    BadRelationalEntry { k: usize },
    /// An absolute entry anywhere but the last slot, or more than one.
    MisplacedAbsolute { k: usize },
    /// A weight that is negative, NaN, or infinite.
    BadWeight { k: usize },
}

impl fmt::Display for CatalogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogError::NonDenseIndexes { expected, got } => {
                write!(
                    f,
                    "catalog entry indexes must be dense from 1: expected {expected}, got {got}"
                )
            }
            CatalogError::BadRelationalEntry { k } => {
                write!(
                    f,
                    "relational entry k={k} needs a feature tag and a nonempty source role"
                )
            }
            CatalogError::MisplacedAbsolute { k } => {
                write!(f, "absolute entry k={k} must be the single last entry")
            }
            CatalogError::BadWeight { k } => {
                write!(
                    f,
                    "entry k={k} has a weight that is not a finite nonnegative number"
                )
            }
        }
    }
}

impl core::error::Error for CatalogError {}

fn positions_except(excluded: &[Position]) -> BTreeSet<Position> {
    [
        Position::Title,
        Position::SectionHeading,
        Position::PrecedingText,
        Position::BulletItem,
        Position::InfoboxKey,
        Position::InfoboxValue,
        Position::Footnote,
        Position::BodyText,
    ]
    .into_iter()
    .filter(|p| !excluded.contains(p))
    .collect()
}

impl FeatureCatalog {
    /// The default six-entry catalog.
    ///
    /// * `bullets` — text preceding a bullet list relates to the items.
    /// * `footnotes` — unit body text relates to the footnote text. Footnote
    ///   blocks form their own units, so this entry never fires relationally;
    ///   footnote evidence flows through the absolute entry instead.
    /// * `title` — the title entity relates to everything in the document.
    /// * `section` — heading entities relate to everything beneath them.
    /// * `infobox` — key-side entities (keys plus the page title) relate to
    ///   value entities.
    /// * `absolute` — per-entity share of bracketed/emphasized/footnote
    ///   mentions; weight 0 keeps it out of the aggregate by default.
    pub fn default_catalog() -> Self {
        let rel =
            |k: usize, name: &str, feature: UnitFeature, a: &[Position], b: BTreeSet<Position>| {
                FeatureSpec {
                    k,
                    name: name.to_string(),
                    feature: Some(feature),
                    role_a: a.iter().copied().collect(),
                    role_b: b,
                    weight: 1.0,
                    kind: FeatureKind::Relational,
                }
            };
        FeatureCatalog {
            entries: alloc::vec![
                rel(
                    1,
                    "bullets",
                    UnitFeature::Bullets,
                    &[Position::PrecedingText],
                    [Position::BulletItem].into_iter().collect()
                ),
                rel(
                    2,
                    "footnotes",
                    UnitFeature::Footnote,
                    &[Position::BodyText],
                    [Position::Footnote].into_iter().collect()
                ),
                rel(
                    3,
                    "title",
                    UnitFeature::Title,
                    &[Position::Title],
                    positions_except(&[Position::Title])
                ),
                rel(
                    4,
                    "section",
                    UnitFeature::Section,
                    &[Position::SectionHeading],
                    positions_except(&[])
                ),
                rel(
                    5,
                    "infobox",
                    UnitFeature::Infobox,
                    &[Position::InfoboxKey, Position::Title],
                    [Position::InfoboxValue].into_iter().collect()
                ),
                FeatureSpec {
                    k: 6,
                    name: "absolute".to_string(),
                    feature: None,
                    role_a: BTreeSet::new(),
                    role_b: BTreeSet::new(),
                    weight: 0.0,
                    kind: FeatureKind::Absolute,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut absolute_seen = false;
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.k != i + 1 {
                return Err(CatalogError::NonDenseIndexes {
                    expected: i + 1,
                    got: entry.k,
                });
            }
            if !entry.weight.is_finite() || entry.weight < 0.0 {
                return Err(CatalogError::BadWeight { k: entry.k });
            }
            match entry.kind {
                FeatureKind::Relational => {
                    if absolute_seen {
                        return Err(CatalogError::MisplacedAbsolute { k: entry.k });
                    }
                    if entry.feature.is_none() || entry.role_a.is_empty() {
                        return Err(CatalogError::BadRelationalEntry { k: entry.k });
                    }
                }
                FeatureKind::Absolute => {
                    if absolute_seen {
                        return Err(CatalogError::MisplacedAbsolute { k: entry.k });
                    }
                    absolute_seen = true;
                }
            }
        }
        Ok(())
    }

    /// The relational entries, in k order.
    pub fn relational(&self) -> impl Iterator<Item = &FeatureSpec> {
        self.entries
            .iter()
            .filter(|e| e.kind == FeatureKind::Relational)
    }

    /// Number of relational entries (Kr).
    pub fn num_relational(&self) -> usize {
        self.relational().count()
    }

    /// The absolute entry, if the catalog carries one.
    pub fn absolute(&self) -> Option<&FeatureSpec> {
        self.entries
            .iter()
            .find(|e| e.kind == FeatureKind::Absolute)
    }
}

impl Default for FeatureCatalog {
    fn default() -> Self {
        Self::default_catalog()
    }
}

// === Enrichment ===

/// Replicates title and heading mentions into the units they enclose.
///
/// Title-position mentions are copied into every unit of their document;
/// section-heading mentions anchored in a heading unit are copied into every
/// unit under that heading. Replicas keep the source position and get
/// `SpanKind::Plain`; a replica is only added when no mention with the same
/// (entity, doc, unit, position) already exists, which makes the operation
/// idempotent. Input mentions are passed through untouched.
pub fn enrich_mentions(docs: &[Document], mentions: &[Mention]) -> Vec<Mention> {
    let mut out: Vec<Mention> = mentions.to_vec();
    let mut present: BTreeSet<(String, String, usize, Position)> = mentions
        .iter()
        .map(|m| {
            (
                m.entity_id.clone(),
                m.doc_id.clone(),
                m.unit_index,
                m.position,
            )
        })
        .collect();

    for doc in docs {
        let groups = unit_groups(doc);
        // Own heading id of each heading unit, for scoping replication.
        let own_heading: BTreeMap<usize, String> = groups
            .iter()
            .filter(|g| g.kind == UnitKind::SectionHeading)
            .filter_map(|g| match &doc.blocks[g.block_indexes[0]].kind {
                crate::docstruct::BlockKind::SectionHeading { id, .. } => {
                    Some((g.unit_index, id.clone()))
                }
                _ => None,
            })
            .collect();

        // (entity id, entity type) pairs to replicate, per scope.
        let mut title_entities: BTreeSet<(String, String)> = BTreeSet::new();
        let mut heading_entities: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        for m in mentions.iter().filter(|m| m.doc_id == doc.id) {
            match m.position {
                Position::Title => {
                    title_entities.insert((m.entity_id.clone(), m.entity_type.clone()));
                }
                Position::SectionHeading => {
                    if let Some(hid) = own_heading.get(&m.unit_index) {
                        heading_entities
                            .entry(hid.clone())
                            .or_default()
                            .insert((m.entity_id.clone(), m.entity_type.clone()));
                    }
                }
                _ => {}
            }
        }

        let mut replicate = |entity_id: &str,
                             entity_type: &str,
                             unit: usize,
                             position: Position,
                             out: &mut Vec<Mention>| {
            let key = (entity_id.to_string(), doc.id.clone(), unit, position);
            if present.insert(key) {
                out.push(Mention {
                    entity_id: entity_id.to_string(),
                    entity_type: entity_type.to_string(),
                    doc_id: doc.id.clone(),
                    unit_index: unit,
                    position,
                    span_kind: SpanKind::Plain,
                });
            }
        };

        for group in &groups {
            for (id, ty) in &title_entities {
                replicate(id, ty, group.unit_index, Position::Title, &mut out);
            }
            for hid in &group.heading_ids {
                if let Some(entities) = heading_entities.get(hid) {
                    for (id, ty) in entities {
                        replicate(id, ty, group.unit_index, Position::SectionHeading, &mut out);
                    }
                }
            }
        }
    }
    out
}

// === Index ===

/// The source/target entity sets of one (unit, feature) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitPosting {
    pub doc: String,
    pub unit: usize,
    pub k: usize,
    pub a: BTreeSet<String>,
    pub b: BTreeSet<String>,
}

/// Serializable form of [`CorpusIndex`]; the JSON schema of index files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexData {
    /// n_x: total mentions per entity, duplicates included.
    pub totals: BTreeMap<String, u64>,
    /// Per entity, the number of units where it fills the source role of
    /// feature k, indexed k-1.
    pub feature_totals: BTreeMap<String, Vec<u64>>,
    /// Per entity, mentions that are bracketed, emphasized, or in a footnote.
    pub absolute_totals: BTreeMap<String, u64>,
    /// Units each entity was mentioned in, as (doc id, unit index).
    pub entity_units: BTreeMap<String, BTreeSet<(String, usize)>>,
    pub num_features: usize,
    pub units: Vec<UnitPosting>,
}

/// The built index: [`IndexData`] plus role-lookup acceleration maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "IndexData", from = "IndexData")]
pub struct CorpusIndex {
    data: IndexData,
    a_lookup: BTreeMap<(usize, String), Vec<usize>>,
    b_lookup: BTreeMap<(usize, String), BTreeSet<usize>>,
}

impl From<CorpusIndex> for IndexData {
    fn from(index: CorpusIndex) -> IndexData {
        index.data
    }
}

impl From<IndexData> for CorpusIndex {
    fn from(data: IndexData) -> CorpusIndex {
        let mut a_lookup: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
        let mut b_lookup: BTreeMap<(usize, String), BTreeSet<usize>> = BTreeMap::new();
        for (i, posting) in data.units.iter().enumerate() {
            for x in &posting.a {
                a_lookup.entry((posting.k, x.clone())).or_default().push(i);
            }
            for y in &posting.b {
                b_lookup
                    .entry((posting.k, y.clone()))
                    .or_default()
                    .insert(i);
            }
        }
        CorpusIndex {
            data,
            a_lookup,
            b_lookup,
        }
    }
}

/// Inputs the index cannot digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexError {
    /// A mention position that no catalog entry's roles cover.
    UnknownFeature {
        position: Position,
    },
    Catalog(CatalogError),
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::UnknownFeature { position } => {
                write!(
                    f,
                    "mention position {position:?} is covered by no catalog entry"
                )
            }
            IndexError::Catalog(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for IndexError {}

impl From<CatalogError> for IndexError {
    fn from(e: CatalogError) -> Self {
        IndexError::Catalog(e)
    }
}

/// Builds the index from documents and their mentions.
///
/// Counts exactly the mentions given: pass enriched mentions to measure
/// title/heading co-occurrence, raw ones to count surface hits only. The
/// result is independent of the order of `docs` and `mentions`.
pub fn build_index(
    docs: &[Document],
    mentions: &[Mention],
    catalog: &FeatureCatalog,
) -> Result<CorpusIndex, IndexError> {
    catalog.validate()?;
    let covered: BTreeSet<Position> = catalog
        .relational()
        .flat_map(|e| e.role_a.iter().chain(e.role_b.iter()).copied())
        .collect();

    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    let mut absolute_totals: BTreeMap<String, u64> = BTreeMap::new();
    let mut entity_units: BTreeMap<String, BTreeSet<(String, usize)>> = BTreeMap::new();
    // (doc, unit) → position → entities, for posting construction.
    let mut unit_entities: BTreeMap<(String, usize), BTreeMap<Position, BTreeSet<String>>> =
        BTreeMap::new();

    for m in mentions {
        if !covered.contains(&m.position) {
            return Err(IndexError::UnknownFeature {
                position: m.position,
            });
        }
        *totals.entry(m.entity_id.clone()).or_default() += 1;
        if m.span_kind != SpanKind::Plain || m.position == Position::Footnote {
            *absolute_totals.entry(m.entity_id.clone()).or_default() += 1;
        }
        entity_units
            .entry(m.entity_id.clone())
            .or_default()
            .insert((m.doc_id.clone(), m.unit_index));
        unit_entities
            .entry((m.doc_id.clone(), m.unit_index))
            .or_default()
            .entry(m.position)
            .or_default()
            .insert(m.entity_id.clone());
    }

    let mut doc_refs: Vec<&Document> = docs.iter().collect();
    doc_refs.sort_by(|a, b| a.id.cmp(&b.id));

    let mut units: Vec<UnitPosting> = Vec::new();
    let mut feature_totals: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for doc in doc_refs {
        for group in unit_groups(doc) {
            let Some(by_position) = unit_entities.get(&(doc.id.clone(), group.unit_index)) else {
                continue;
            };
            for entry in catalog.relational() {
                let feature = entry.feature.expect("validated relational entry");
                if !group.features.contains(&feature) {
                    continue;
                }
                let collect = |roles: &BTreeSet<Position>| -> BTreeSet<String> {
                    roles
                        .iter()
                        .filter_map(|p| by_position.get(p))
                        .flatten()
                        .cloned()
                        .collect()
                };
                let a = collect(&entry.role_a);
                let b = collect(&entry.role_b);
                if a.is_empty() && b.is_empty() {
                    continue;
                }
                for x in &a {
                    let row = feature_totals
                        .entry(x.clone())
                        .or_insert_with(|| alloc::vec![0; catalog.entries.len()]);
                    row[entry.k - 1] += 1;
                }
                units.push(UnitPosting {
                    doc: doc.id.clone(),
                    unit: group.unit_index,
                    k: entry.k,
                    a,
                    b,
                });
            }
        }
    }

    Ok(CorpusIndex::from(IndexData {
        totals,
        feature_totals,
        absolute_totals,
        entity_units,
        num_features: catalog.entries.len(),
        units,
    }))
}

impl CorpusIndex {
    pub fn data(&self) -> &IndexData {
        &self.data
    }

    /// (n_x, per-feature source-role unit counts). Zeros for unseen entities.
    pub fn count(&self, entity_id: &str) -> (u64, Vec<u64>) {
        let total = self.data.totals.get(entity_id).copied().unwrap_or(0);
        let per_feature = self
            .data
            .feature_totals
            .get(entity_id)
            .cloned()
            .unwrap_or_else(|| alloc::vec![0; self.data.num_features]);
        (total, per_feature)
    }

    /// Mentions of the entity that are bracketed, emphasized, or in footnotes.
    pub fn absolute_count(&self, entity_id: &str) -> u64 {
        self.data
            .absolute_totals
            .get(entity_id)
            .copied()
            .unwrap_or(0)
    }

    /// For feature k: (units where x is in the source role and y in the
    /// target role, units where x is in the source role).
    pub fn pair_counts(&self, x: &str, y: &str, k: usize) -> (u64, u64) {
        let Some(a_units) = self.a_lookup.get(&(k, x.to_string())) else {
            return (0, 0);
        };
        let den = a_units.len() as u64;
        let num = match self.b_lookup.get(&(k, y.to_string())) {
            Some(b_units) => a_units.iter().filter(|i| b_units.contains(i)).count() as u64,
            None => 0,
        };
        (num, den)
    }
}
