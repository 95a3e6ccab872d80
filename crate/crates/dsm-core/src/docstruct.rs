//! Structured document model: parsing, unit splitting, and entity annotation.
//!
//! Documents use a line-oriented markup dialect:
//!
//! * `# text` — the document title (first block) or a level-1 section heading,
//!   `##` through `######` for deeper headings;
//! * `- text` — one bullet item; contiguous bullet lines form one list;
//! * `{{infobox` … `}}` — a key/value box, one `key = value` pair per line;
//! * `[^ text ]` on its own line — a footnote;
//! * anything else is paragraph text; a blank line ends the paragraph.
//!   Inside paragraphs, `(…)` marks a bracketed span and `*…*` an emphasized
//!   span.
//!
//! Parsed documents are split into [`ParagraphUnit`]s — the unit of
//! co-occurrence counting — and annotated against [`Gazetteer`]s, producing
//! [`Mention`]s that record *where* in the structure an entity surfaced.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

// === Types ===

/// Inline formatting of a run of paragraph text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Plain,
    Bracketed,
    Emphasized,
}

/// A run of paragraph text with uniform formatting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub kind: SpanKind,
    /// Text without the delimiters; `(a)` parses as a `Bracketed` span `"a"`.
    pub text: String,
}

/// One block of document content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// The document title; always the first block, exactly one per document.
    Title(String),
    /// A section heading; `id` is unique within the document (`"h1"`, `"h2"`, …).
    SectionHeading {
        id: String,
        level: u8,
        text: String,
    },
    Paragraph(Vec<Span>),
    /// One or more bullet items.
    BulletList(Vec<String>),
    /// Key/value pairs; keys are nonempty.
    Infobox(Vec<(String, String)>),
    Footnote(String),
}

/// A block together with the id of its nearest enclosing section heading
/// (empty string in the preamble before any heading).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub section: String,
    pub kind: BlockKind,
}

/// A parsed document: an id, a title, and the block sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub blocks: Vec<Block>,
}

/// Structural features a paragraph unit can carry.
///
/// These gate the per-feature co-occurrence counts: a unit only contributes
/// to feature `k`'s numerator and denominator when `k` is present in it.
/// `Title` is present in every unit (the title encloses the whole document),
/// `Section` in heading units and units under at least one heading, and
/// `Bullets` / `Infobox` / `Footnote` exactly in units built from such blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitFeature {
    Title,
    Section,
    Bullets,
    Infobox,
    Footnote,
}

/// The atomic unit of co-occurrence counting.
///
/// `preceding_text` and `bullets` carry the paragraph/bullet content (empty
/// for title, heading, infobox, and footnote units); `heading_path` is the
/// title followed by the texts of the enclosing headings, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphUnit {
    pub doc_id: String,
    pub unit_index: usize,
    pub heading_path: Vec<String>,
    pub preceding_text: String,
    pub bullets: Vec<String>,
    pub features_present: BTreeSet<UnitFeature>,
}

/// What kind of blocks a unit was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Title,
    SectionHeading,
    /// A paragraph, optionally fused with the bullet list that follows it.
    Body,
    Infobox,
    Footnote,
}

/// One unit of the document partition, with block-level detail.
///
/// [`split_units`] flattens groups into [`ParagraphUnit`]s; annotation and
/// enrichment need the extra structure (block indexes, enclosing heading ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitGroup {
    pub unit_index: usize,
    pub kind: UnitKind,
    /// Indexes into `doc.blocks`; one block, or paragraph + following bullet list.
    pub block_indexes: Vec<usize>,
    /// Title text followed by enclosing heading texts, outermost first.
    pub heading_path: Vec<String>,
    /// Ids of the enclosing headings, outermost first (empty in the preamble).
    pub heading_ids: Vec<String>,
    pub features: BTreeSet<UnitFeature>,
}

/// Structural role a mention was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Title,
    SectionHeading,
    /// Paragraph text directly before a bullet list in the same unit.
    PrecedingText,
    BulletItem,
    InfoboxKey,
    InfoboxValue,
    Footnote,
    /// Paragraph text not followed by a bullet list.
    BodyText,
}

/// One gazetteer hit inside one unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mention {
    pub entity_id: String,
    pub entity_type: String,
    pub doc_id: String,
    pub unit_index: usize,
    pub position: Position,
    pub span_kind: SpanKind,
}

/// An entity dictionary for one entity type.
///
/// Lookup is case-insensitive after whitespace normalization. A normalized
/// surface form maps to exactly one entity id; several surface forms may
/// alias the same id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gazetteer {
    pub entity_type: String,
    surfaces: BTreeMap<String, String>,
}

// === Errors ===

/// Markup that violates the dialect, with the offending 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// The document does not begin with a `# title` line.
    MissingTitle,
    /// More than six `#`s.
    HeadingTooDeep { line: usize, level: usize },
    /// `{{infobox` with no closing `}}`.
    UnterminatedInfobox { line: usize },
    /// An infobox with no key/value pairs.
    EmptyInfobox { line: usize },
    /// An infobox line without `=` or with an empty key.
    BadInfoboxEntry { line: usize },
    /// A `[^` line without the closing `]`.
    UnterminatedFootnote { line: usize },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::MissingTitle => {
                write!(f, "line 1: document must begin with a `# title` line")
            }
            ParseError::HeadingTooDeep { line, level } => {
                write!(f, "line {line}: heading level {level} exceeds 6")
            }
            ParseError::UnterminatedInfobox { line } => {
                write!(f, "line {line}: infobox is never closed with `}}}}`")
            }
            ParseError::EmptyInfobox { line } => {
                write!(f, "line {line}: infobox has no key/value pairs")
            }
            ParseError::BadInfoboxEntry { line } => {
                write!(
                    f,
                    "line {line}: infobox entry must be `key = value` with a nonempty key"
                )
            }
            ParseError::UnterminatedFootnote { line } => {
                write!(f, "line {line}: footnote is never closed with `]`")
            }
        }
    }
}

impl core::error::Error for ParseError {}

/// A malformed gazetteer file, with the offending 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GazetteerError {
    /// A line without exactly three tab-separated fields.
    BadRow { line: usize },
    /// An empty entity type, surface form, or entity id.
    EmptyField { line: usize },
    /// The same normalized surface mapped to two different ids in one type.
    ConflictingSurface { line: usize, surface: String },
}

impl fmt::Display for GazetteerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GazetteerError::BadRow { line } => {
                write!(
                    f,
                    "line {line}: expected `entity_type<TAB>surface<TAB>entity_id`"
                )
            }
            GazetteerError::EmptyField { line } => {
                write!(f, "line {line}: empty field in gazetteer row")
            }
            GazetteerError::ConflictingSurface { line, surface } => {
                write!(
                    f,
                    "line {line}: surface {surface:?} already maps to a different entity id"
                )
            }
        }
    }
}

impl core::error::Error for GazetteerError {}

// === Parsing ===

/// Parses markup into a [`Document`] with the given id.
pub fn parse_document(id: &str, source: &str) -> Result<Document, ParseError> {
    let lines: Vec<&str> = source.lines().collect();
    let mut blocks: Vec<Block> = Vec::new();
    // Stack of enclosing headings as (level, id), innermost last.
    let mut stack: Vec<(u8, String)> = Vec::new();
    let mut heading_count = 0usize;
    let mut para: Vec<String> = Vec::new();
    let mut bullets: Vec<String> = Vec::new();

    fn section_of(stack: &[(u8, String)]) -> String {
        stack.last().map(|(_, id)| id.clone()).unwrap_or_default()
    }
    fn flush_para(para: &mut Vec<String>, blocks: &mut Vec<Block>, stack: &[(u8, String)]) {
        if !para.is_empty() {
            let text = para.join(" ");
            para.clear();
            blocks.push(Block {
                section: section_of(stack),
                kind: BlockKind::Paragraph(parse_spans(&text)),
            });
        }
    }
    fn flush_bullets(bullets: &mut Vec<String>, blocks: &mut Vec<Block>, stack: &[(u8, String)]) {
        if !bullets.is_empty() {
            blocks.push(Block {
                section: section_of(stack),
                kind: BlockKind::BulletList(core::mem::take(bullets)),
            });
        }
    }

    let mut i = 0usize;
    while i < lines.len() {
        let lineno = i + 1;
        let line = lines[i].trim_end();
        if line.trim().is_empty() {
            flush_para(&mut para, &mut blocks, &stack);
            flush_bullets(&mut bullets, &mut blocks, &stack);
            i += 1;
        } else if let Some(rest) = line.strip_prefix("- ") {
            flush_para(&mut para, &mut blocks, &stack);
            bullets.push(rest.to_string());
            i += 1;
        } else if line.starts_with('#') {
            flush_para(&mut para, &mut blocks, &stack);
            flush_bullets(&mut bullets, &mut blocks, &stack);
            let level = line.chars().take_while(|&c| c == '#').count();
            if level > 6 {
                return Err(ParseError::HeadingTooDeep {
                    line: lineno,
                    level,
                });
            }
            let text = line[level..].trim().to_string();
            if blocks.is_empty() && level == 1 {
                blocks.push(Block {
                    section: String::new(),
                    kind: BlockKind::Title(text),
                });
            } else {
                heading_count += 1;
                let hid = format!("h{heading_count}");
                while stack.last().is_some_and(|(l, _)| usize::from(*l) >= level) {
                    stack.pop();
                }
                blocks.push(Block {
                    section: section_of(&stack),
                    kind: BlockKind::SectionHeading {
                        id: hid.clone(),
                        level: level as u8,
                        text,
                    },
                });
                stack.push((level as u8, hid));
            }
            i += 1;
        } else if line.trim() == "{{infobox" {
            flush_para(&mut para, &mut blocks, &stack);
            flush_bullets(&mut bullets, &mut blocks, &stack);
            let start = lineno;
            let mut pairs: Vec<(String, String)> = Vec::new();
            let mut j = i + 1;
            let mut closed = false;
            while j < lines.len() {
                let inner = lines[j].trim();
                if inner == "}}" {
                    closed = true;
                    break;
                }
                if !inner.is_empty() {
                    let Some((key, value)) = inner.split_once('=') else {
                        return Err(ParseError::BadInfoboxEntry { line: j + 1 });
                    };
                    let key = key.trim();
                    if key.is_empty() {
                        return Err(ParseError::BadInfoboxEntry { line: j + 1 });
                    }
                    pairs.push((key.to_string(), value.trim().to_string()));
                }
                j += 1;
            }
            if !closed {
                return Err(ParseError::UnterminatedInfobox { line: start });
            }
            if pairs.is_empty() {
                return Err(ParseError::EmptyInfobox { line: start });
            }
            blocks.push(Block {
                section: section_of(&stack),
                kind: BlockKind::Infobox(pairs),
            });
            i = j + 1;
        } else if let Some(rest) = line.strip_prefix("[^") {
            flush_para(&mut para, &mut blocks, &stack);
            flush_bullets(&mut bullets, &mut blocks, &stack);
            let Some(inner) = rest.trim_end().strip_suffix(']') else {
                return Err(ParseError::UnterminatedFootnote { line: lineno });
            };
            blocks.push(Block {
                section: section_of(&stack),
                kind: BlockKind::Footnote(inner.trim().to_string()),
            });
            i += 1;
        } else {
            flush_bullets(&mut bullets, &mut blocks, &stack);
            para.push(line.to_string());
            i += 1;
        }
    }
    flush_para(&mut para, &mut blocks, &stack);
    flush_bullets(&mut bullets, &mut blocks, &stack);

    let Some(Block {
        kind: BlockKind::Title(title),
        ..
    }) = blocks.first()
    else {
        return Err(ParseError::MissingTitle);
    };
    Ok(Document {
        id: id.to_string(),
        title: title.clone(),
        blocks,
    })
}

/// Splits paragraph text into plain, bracketed, and emphasized spans.
///
/// `(…)` and `*…*` pairs delimit spans; an unmatched opener stays literal
/// plain text. Delimiters never nest: the content of a bracketed span is
/// taken verbatim up to the first `)`.
fn parse_spans(text: &str) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans: Vec<Span> = Vec::new();
    let mut plain = String::new();
    let mut i = 0usize;
    while i < chars.len() {
        let delim = match chars[i] {
            '(' => Some((')', SpanKind::Bracketed)),
            '*' => Some(('*', SpanKind::Emphasized)),
            _ => None,
        };
        if let Some((close, kind)) = delim {
            if let Some(j) = (i + 1..chars.len()).find(|&j| chars[j] == close) {
                if !plain.is_empty() {
                    spans.push(Span {
                        kind: SpanKind::Plain,
                        text: core::mem::take(&mut plain),
                    });
                }
                spans.push(Span {
                    kind,
                    text: chars[i + 1..j].iter().collect(),
                });
                i = j + 1;
                continue;
            }
        }
        plain.push(chars[i]);
        i += 1;
    }
    if !plain.is_empty() {
        spans.push(Span {
            kind: SpanKind::Plain,
            text: plain,
        });
    }
    spans
}

/// Renders a document back to canonical markup.
///
/// Canonical form is a fixed point: parsing the output and serializing again
/// reproduces it byte for byte, and parsing it reproduces the blocks.
pub fn serialize_document(doc: &Document) -> String {
    let mut out: Vec<String> = Vec::with_capacity(doc.blocks.len());
    for block in &doc.blocks {
        out.push(match &block.kind {
            BlockKind::Title(text) => format!("# {text}"),
            BlockKind::SectionHeading { level, text, .. } => {
                format!("{} {}", "#".repeat(usize::from(*level)), text)
            }
            BlockKind::Paragraph(spans) => render_spans(spans),
            BlockKind::BulletList(items) => {
                let lines: Vec<String> = items.iter().map(|it| format!("- {it}")).collect();
                lines.join("\n")
            }
            BlockKind::Infobox(pairs) => {
                let mut lines = Vec::with_capacity(pairs.len() + 2);
                lines.push("{{infobox".to_string());
                for (k, v) in pairs {
                    lines.push(format!("{k} = {v}"));
                }
                lines.push("}}".to_string());
                lines.join("\n")
            }
            BlockKind::Footnote(text) => format!("[^ {text} ]"),
        });
    }
    out.join("\n\n")
}

/// Renders spans back to paragraph text, delimiters included.
pub fn render_spans(spans: &[Span]) -> String {
    let mut text = String::new();
    for span in spans {
        match span.kind {
            SpanKind::Plain => text.push_str(&span.text),
            SpanKind::Bracketed => {
                text.push('(');
                text.push_str(&span.text);
                text.push(')');
            }
            SpanKind::Emphasized => {
                text.push('*');
                text.push_str(&span.text);
                text.push('*');
            }
        }
    }
    text
}

// === Unit splitting ===

/// Partitions a document's blocks into counting units.
///
/// Title, section heading, infobox, and footnote blocks each form their own
/// unit; a paragraph fuses with the bullet list immediately following it
/// (the paragraph becomes the list's preceding text), so no unit holds more
/// than one bullet list.
pub fn unit_groups(doc: &Document) -> Vec<UnitGroup> {
    // Re-derive each heading's enclosing chain from block order and levels.
    let mut groups: Vec<UnitGroup> = Vec::new();
    let mut stack: Vec<(u8, String, String)> = Vec::new(); // (level, id, text)
    let mut i = 0usize;
    while i < doc.blocks.len() {
        let block = &doc.blocks[i];
        let (kind, block_indexes) = match &block.kind {
            BlockKind::Title(_) => (UnitKind::Title, alloc::vec![i]),
            BlockKind::SectionHeading { id, level, text } => {
                while stack.last().is_some_and(|(l, _, _)| l >= level) {
                    stack.pop();
                }
                let group = make_group(
                    doc,
                    groups.len(),
                    UnitKind::SectionHeading,
                    alloc::vec![i],
                    &stack,
                );
                stack.push((*level, id.clone(), text.clone()));
                groups.push(group);
                i += 1;
                continue;
            }
            BlockKind::Paragraph(_) => {
                if let Some(Block {
                    kind: BlockKind::BulletList(_),
                    ..
                }) = doc.blocks.get(i + 1)
                {
                    (UnitKind::Body, alloc::vec![i, i + 1])
                } else {
                    (UnitKind::Body, alloc::vec![i])
                }
            }
            BlockKind::BulletList(_) => (UnitKind::Body, alloc::vec![i]),
            BlockKind::Infobox(_) => (UnitKind::Infobox, alloc::vec![i]),
            BlockKind::Footnote(_) => (UnitKind::Footnote, alloc::vec![i]),
        };
        let next = i + block_indexes.len();
        groups.push(make_group(doc, groups.len(), kind, block_indexes, &stack));
        i = next;
    }
    groups
}

fn make_group(
    doc: &Document,
    unit_index: usize,
    kind: UnitKind,
    block_indexes: Vec<usize>,
    stack: &[(u8, String, String)],
) -> UnitGroup {
    let mut heading_path = Vec::with_capacity(stack.len() + 1);
    heading_path.push(doc.title.clone());
    heading_path.extend(stack.iter().map(|(_, _, text)| text.clone()));
    let heading_ids: Vec<String> = stack.iter().map(|(_, id, _)| id.clone()).collect();

    let mut features = BTreeSet::new();
    features.insert(UnitFeature::Title);
    if !heading_ids.is_empty() || kind == UnitKind::SectionHeading {
        features.insert(UnitFeature::Section);
    }
    match kind {
        UnitKind::Infobox => {
            features.insert(UnitFeature::Infobox);
        }
        UnitKind::Footnote => {
            features.insert(UnitFeature::Footnote);
        }
        UnitKind::Body => {
            let has_bullets = block_indexes
                .iter()
                .any(|&b| matches!(doc.blocks[b].kind, BlockKind::BulletList(_)));
            if has_bullets {
                features.insert(UnitFeature::Bullets);
            }
        }
        _ => {}
    }
    UnitGroup {
        unit_index,
        kind,
        block_indexes,
        heading_path,
        heading_ids,
        features,
    }
}

/// Splits a document into [`ParagraphUnit`]s.
///
/// Concatenating `preceding_text` and `bullets` across units reproduces the
/// document's paragraph and bullet content in order.
pub fn split_units(doc: &Document) -> Vec<ParagraphUnit> {
    unit_groups(doc)
        .into_iter()
        .map(|group| {
            let mut preceding_text = String::new();
            let mut bullets: Vec<String> = Vec::new();
            for &b in &group.block_indexes {
                match &doc.blocks[b].kind {
                    BlockKind::Paragraph(spans) => preceding_text = render_spans(spans),
                    BlockKind::BulletList(items) => bullets = items.clone(),
                    _ => {}
                }
            }
            ParagraphUnit {
                doc_id: doc.id.clone(),
                unit_index: group.unit_index,
                heading_path: group.heading_path,
                preceding_text,
                bullets,
                features_present: group.features,
            }
        })
        .collect()
}

// === Gazetteers ===

/// Lowercases, trims, and collapses internal whitespace runs to single spaces.
pub fn normalize_surface(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.trim().chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            for lc in c.to_lowercase() {
                out.push(lc);
            }
        }
    }
    out
}

impl Gazetteer {
    pub fn new(entity_type: &str) -> Self {
        Gazetteer {
            entity_type: entity_type.to_string(),
            surfaces: BTreeMap::new(),
        }
    }

    /// Adds a surface form. Returns the previous id if the normalized surface
    /// was already mapped (callers treat a different id as a conflict).
    pub fn insert(&mut self, surface: &str, entity_id: &str) -> Option<String> {
        self.surfaces
            .insert(normalize_surface(surface), entity_id.to_string())
    }

    /// Looks up a surface form, normalizing first.
    pub fn get(&self, surface: &str) -> Option<&str> {
        self.surfaces
            .get(&normalize_surface(surface))
            .map(String::as_str)
    }

    /// Normalized surface → entity id pairs, in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.surfaces
            .iter()
            .map(|(s, id)| (s.as_str(), id.as_str()))
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }
}

/// Parses a gazetteer file: one `entity_type<TAB>surface<TAB>entity_id` row
/// per line, `#` comment lines and blank lines ignored. Returns one gazetteer
/// per entity type, sorted by type name.
pub fn parse_gazetteers(text: &str) -> Result<Vec<Gazetteer>, GazetteerError> {
    let mut by_type: BTreeMap<String, Gazetteer> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [entity_type, surface, entity_id] = fields[..] else {
            return Err(GazetteerError::BadRow { line: lineno });
        };
        let (entity_type, entity_id) = (entity_type.trim(), entity_id.trim());
        if entity_type.is_empty() || entity_id.is_empty() || normalize_surface(surface).is_empty() {
            return Err(GazetteerError::EmptyField { line: lineno });
        }
        let gaz = by_type
            .entry(entity_type.to_string())
            .or_insert_with(|| Gazetteer::new(entity_type));
        if let Some(prev) = gaz.insert(surface, entity_id) {
            if prev != entity_id {
                return Err(GazetteerError::ConflictingSurface {
                    line: lineno,
                    surface: normalize_surface(surface),
                });
            }
        }
    }
    Ok(by_type.into_values().collect())
}

// === Annotation ===

/// A candidate gazetteer hit inside one normalized text region.
struct Hit {
    start: usize,
    end: usize,
    entity_id: String,
    entity_type: String,
}

/// Finds gazetteer matches in documents and records their structural role.
///
/// Matching is exact on normalized text (case-insensitive, whitespace
/// collapsed) and only at word boundaries. Matches are maximal: a hit
/// strictly contained in a longer hit is dropped, and when two entities
/// match the same span the lexicographically smallest entity id wins.
/// Matches never cross block or span boundaries.
pub fn annotate(doc: &Document, gazetteers: &[Gazetteer]) -> Vec<Mention> {
    let mut mentions: Vec<Mention> = Vec::new();
    for group in unit_groups(doc) {
        let has_bullets = group.features.contains(&UnitFeature::Bullets);
        for &b in &group.block_indexes {
            match &doc.blocks[b].kind {
                BlockKind::Title(text) => {
                    scan_region(
                        text,
                        Position::Title,
                        SpanKind::Plain,
                        &group,
                        doc,
                        gazetteers,
                        &mut mentions,
                    );
                }
                BlockKind::SectionHeading { text, .. } => {
                    scan_region(
                        text,
                        Position::SectionHeading,
                        SpanKind::Plain,
                        &group,
                        doc,
                        gazetteers,
                        &mut mentions,
                    );
                }
                BlockKind::Paragraph(spans) => {
                    let position = if has_bullets {
                        Position::PrecedingText
                    } else {
                        Position::BodyText
                    };
                    for span in spans {
                        scan_region(
                            &span.text,
                            position,
                            span.kind,
                            &group,
                            doc,
                            gazetteers,
                            &mut mentions,
                        );
                    }
                }
                BlockKind::BulletList(items) => {
                    for item in items {
                        scan_region(
                            item,
                            Position::BulletItem,
                            SpanKind::Plain,
                            &group,
                            doc,
                            gazetteers,
                            &mut mentions,
                        );
                    }
                }
                BlockKind::Infobox(pairs) => {
                    for (key, value) in pairs {
                        scan_region(
                            key,
                            Position::InfoboxKey,
                            SpanKind::Plain,
                            &group,
                            doc,
                            gazetteers,
                            &mut mentions,
                        );
                        scan_region(
                            value,
                            Position::InfoboxValue,
                            SpanKind::Plain,
                            &group,
                            doc,
                            gazetteers,
                            &mut mentions,
                        );
                    }
                }
                BlockKind::Footnote(text) => {
                    scan_region(
                        text,
                        Position::Footnote,
                        SpanKind::Plain,
                        &group,
                        doc,
                        gazetteers,
                        &mut mentions,
                    );
                }
            }
        }
    }
    mentions
}

#[allow(clippy::too_many_arguments)]
fn scan_region(
    text: &str,
    position: Position,
    span_kind: SpanKind,
    group: &UnitGroup,
    doc: &Document,
    gazetteers: &[Gazetteer],
    out: &mut Vec<Mention>,
) {
    let normalized = normalize_surface(text);
    if normalized.is_empty() {
        return;
    }
    let mut hits: Vec<Hit> = Vec::new();
    for gaz in gazetteers {
        for (surface, entity_id) in gaz.entries() {
            for (start, m) in normalized.match_indices(surface) {
                let end = start + m.len();
                if word_bounded(&normalized, start, end) {
                    hits.push(Hit {
                        start,
                        end,
                        entity_id: entity_id.to_string(),
                        entity_type: gaz.entity_type.clone(),
                    });
                }
            }
        }
    }
    // Widest hit first at each start; smallest entity id breaks exact ties.
    hits.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(b.end.cmp(&a.end))
            .then(a.entity_id.cmp(&b.entity_id))
    });
    hits.dedup_by(|next, kept| kept.start == next.start && kept.end == next.end);
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for hit in hits {
        let contained = kept.iter().any(|&(s, e)| s <= hit.start && hit.end <= e);
        if contained {
            continue;
        }
        kept.push((hit.start, hit.end));
        out.push(Mention {
            entity_id: hit.entity_id,
            entity_type: hit.entity_type,
            doc_id: doc.id.clone(),
            unit_index: group.unit_index,
            position,
            span_kind,
        });
    }
}

/// True when `[start, end)` does not butt against alphanumeric neighbors.
fn word_bounded(text: &str, start: usize, end: usize) -> bool {
    let before_ok = text[..start]
        .chars()
        .next_back()
        .is_none_or(|c| !c.is_alphanumeric());
    let after_ok = text[end..]
        .chars()
        .next()
        .is_none_or(|c| !c.is_alphanumeric());
    before_ok && after_ok
}
