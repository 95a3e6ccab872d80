//! Shared helpers for the CLI and acceptance suites: scratch directories,
//! binary invocation, and deterministic random corpora built from the
//! markup grammar itself.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

use dsm_core::docstruct::Gazetteer;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// A unique scratch directory removed on drop.
pub struct Scratch {
    pub path: PathBuf,
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Scratch {
    pub fn new(label: &str) -> Self {
        let n = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
        let path =
            std::env::temp_dir().join(format!("dsm-test-{}-{}-{}", label, std::process::id(), n));
        std::fs::create_dir_all(&path).expect("create scratch dir");
        Scratch { path }
    }

    pub fn join(&self, rel: &str) -> PathBuf {
        self.path.join(rel)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.path);
    }
}

/// Runs the `dsm` binary with the given arguments.
pub fn dsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsm"))
        .args(args)
        .output()
        .expect("spawn dsm binary")
}

/// Runs `dsm` and panics (with stderr shown) unless it exits successfully.
pub fn dsm_ok(args: &[&str]) -> Output {
    let out = dsm(args);
    assert!(
        out.status.success(),
        "dsm {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Writes a small generation spec and returns its path.
pub fn small_synth_spec(dir: &Path, seed: u64) -> PathBuf {
    let spec = format!(
        r#"{{"seed": {seed}, "n_entities": 60, "n_relation_types": 3,
            "edges_per_relation": 12, "p_struct": 0.8, "docs_per_entity": 1}}"#
    );
    let path = dir.join("synth_spec.json");
    std::fs::write(&path, spec).expect("write synth spec");
    path
}

/// Every file under `dir`, as sorted relative paths.
pub fn walk_files(dir: &Path) -> Vec<PathBuf> {
    fn visit(base: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap_or_else(|e| panic!("read_dir {}: {e}", dir.display()))
            .map(|e| e.expect("dir entry").path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                visit(base, &path, out);
            } else {
                out.push(
                    path.strip_prefix(base)
                        .expect("relative path")
                        .to_path_buf(),
                );
            }
        }
    }
    let mut out = Vec::new();
    visit(dir, dir, &mut out);
    out
}

/// Asserts the two directories hold byte-identical file trees.
pub fn assert_same_tree(a: &Path, b: &Path) {
    let files_a = walk_files(a);
    let files_b = walk_files(b);
    assert_eq!(
        files_a,
        files_b,
        "{} and {} list different files",
        a.display(),
        b.display()
    );
    for rel in &files_a {
        let bytes_a = std::fs::read(a.join(rel)).expect("read file");
        let bytes_b = std::fs::read(b.join(rel)).expect("read file");
        assert_eq!(bytes_a, bytes_b, "{} differs between runs", rel.display());
    }
}

// === Deterministic random corpora ===

/// (surface, entity id, entity type); includes a multi-word surface that
/// overlaps a single-word one and an alias mapping to an existing id.
pub const ENTITIES: &[(&str, &str, &str)] = &[
    ("Alpha", "ent_alpha", "Person"),
    ("Alfa", "ent_alpha", "Person"),
    ("Beta", "ent_beta", "Person"),
    ("Gamma", "ent_gamma", "Person"),
    ("Theta Prime", "ent_theta_prime", "Person"),
    ("Delta", "ent_delta", "Place"),
    ("Epsilon", "ent_epsilon", "Place"),
    ("Zeta", "ent_zeta", "Place"),
    ("North Alpha", "ent_north_alpha", "Place"),
];

const WORDS: &[&str] = &[
    "the", "river", "stone", "old", "mill", "keeps", "its", "wheel", "turning", "under", "grey",
    "skies", "while", "quiet", "roads", "cross", "green", "fields", "near", "town",
];

pub fn gazetteers() -> Vec<Gazetteer> {
    let mut person = Gazetteer::new("Person");
    let mut place = Gazetteer::new("Place");
    for &(surface, id, ty) in ENTITIES {
        match ty {
            "Person" => person.insert(surface, id),
            _ => place.insert(surface, id),
        };
    }
    vec![person, place]
}

fn word(rng: &mut ChaCha20Rng) -> &'static str {
    WORDS[rng.gen_range(0..WORDS.len())]
}

fn surface(rng: &mut ChaCha20Rng) -> &'static str {
    ENTITIES[rng.gen_range(0..ENTITIES.len())].0
}

/// One phrase token: usually a plain word, sometimes an entity surface,
/// plain, bracketed, or emphasized.
fn token(rng: &mut ChaCha20Rng) -> String {
    match rng.gen_range(0..10) {
        0 | 1 => surface(rng).to_string(),
        2 => format!("({})", surface(rng)),
        3 => format!("*{}*", surface(rng)),
        _ => word(rng).to_string(),
    }
}

/// `min..=max` tokens joined by spaces, always starting with a plain word so
/// the line can never collide with block markup.
pub fn phrase(rng: &mut ChaCha20Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    let mut parts = vec![word(rng).to_string()];
    for _ in 1..n {
        parts.push(token(rng));
    }
    parts.join(" ")
}

/// A random, always-parseable document source covering every block kind.
pub fn random_document(rng: &mut ChaCha20Rng) -> String {
    let title = if rng.gen_bool(0.5) {
        surface(rng).to_string()
    } else {
        phrase(rng, 1, 3)
    };
    let mut chunks = vec![format!("# {title}")];

    let blocks = rng.gen_range(1..=7);
    for _ in 0..blocks {
        let chunk = match rng.gen_range(0..100) {
            0..=24 => {
                let lines: Vec<String> = (0..rng.gen_range(1..=3))
                    .map(|_| phrase(rng, 3, 8))
                    .collect();
                lines.join("\n")
            }
            25..=44 => {
                let items: Vec<String> = (0..rng.gen_range(1..=4))
                    .map(|_| format!("- {}", phrase(rng, 1, 5)))
                    .collect();
                items.join("\n")
            }
            45..=64 => {
                let level = rng.gen_range(1..=4);
                let text = if rng.gen_bool(0.4) {
                    surface(rng).to_string()
                } else {
                    phrase(rng, 1, 4)
                };
                format!("{} {}", "#".repeat(level), text)
            }
            65..=79 => {
                let mut lines = vec!["{{infobox".to_string()];
                for _ in 0..rng.gen_range(1..=3) {
                    let key = if rng.gen_bool(0.3) {
                        surface(rng).to_string()
                    } else {
                        phrase(rng, 1, 2)
                    };
                    let value = match rng.gen_range(0..10) {
                        0 => String::new(),
                        1..=4 => surface(rng).to_string(),
                        _ => phrase(rng, 1, 4),
                    };
                    lines.push(format!("{key} = {value}"));
                }
                lines.push("}}".to_string());
                lines.join("\n")
            }
            80..=89 => format!("[^ {} ]", phrase(rng, 2, 6)),
            _ => {
                // Paragraph flowing straight into a bullet list, no blank line.
                let mut lines = vec![phrase(rng, 3, 8)];
                for _ in 0..rng.gen_range(1..=3) {
                    lines.push(format!("- {}", phrase(rng, 1, 5)));
                }
                lines.join("\n")
            }
        };
        chunks.push(chunk);
    }
    chunks.join("\n\n")
}
