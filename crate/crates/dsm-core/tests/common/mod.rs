//! Deterministic random-corpus generation shared by the property suites.
//!
//! Documents are built from the markup grammar itself — titles, headings,
//! paragraphs, bullet lists, infoboxes, footnotes — with entity surfaces
//! woven into the text, so every generated source is valid and every suite
//! sees the same corpora for a given seed.

#![allow(dead_code)]

use dsm_core::docstruct::Gazetteer;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

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

/// A random, always-parseable document source.
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
    let mut source = chunks.join("\n\n");
    if rng.gen_bool(0.3) {
        source.push('\n');
    }
    source
}
