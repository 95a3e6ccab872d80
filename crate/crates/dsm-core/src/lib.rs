//! Core algorithms for measuring document structure and predicting relation
//! types on typed graphs.
//!
//! The crate is organized as a pipeline of pure building blocks:
//!
//! * [`docstruct`] — a small structured-markup model: documents made of
//!   titles, section headings, paragraphs, bullet lists, infoboxes and
//!   footnotes; splitting into paragraph units; gazetteer-based entity
//!   annotation.
//! * [`corpusindex`] — a structure-aware inverted index over annotated
//!   corpora: per-unit entity sets split by structural role, plus the raw
//!   counts the measures are built from.
//! * [`dsm`] — the document structure measures themselves: per-feature
//!   co-occurrence probabilities and their importance-weighted aggregate.
//! * [`graphset`] — typed multi-relational graphs with deterministic edge
//!   splits and per-edge structure scores.
//! * [`rgcn`] — a relational graph convolutional network with a diagonal
//!   bilinear decoder, exact hand-derived gradients, and four ways of
//!   feeding the structure measures into training.
//!
//! Everything here is `no_std` + `alloc`: parsing consumes `&str`, all
//! numeric work is `f64` via `libm`, and every iteration order is fixed so
//! identical inputs produce bit-identical outputs.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpusindex;
pub mod docstruct;
pub mod dsm;
pub mod graphset;
pub mod rgcn;
