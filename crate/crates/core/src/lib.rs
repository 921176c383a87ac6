//! Core algorithms for measuring the linguistic diversity of text corpora
//! and for building the models trained on them.
//!
//! Everything here is pure computation over in-memory data and builds with
//! `alloc` only. File formats, the command line and the staged pipeline live
//! in the `lingdiv` crate.
//!
//! The main entry points, in pipeline order:
//!
//! - [`corpus`]: documents, corpora and the time/author reorderings.
//! - [`curation`]: normalization and exact + MinHash deduplication.
//! - [`diversity`]: sentence segmentation, variety classifiers and the
//!   per-source diversity report.
//! - [`tokenizer`]: byte-level BPE and token fertility.
//! - [`packing`]: chunking, greedy packing and MLM masking.
//! - [`encoder`]: a small pre-norm transformer encoder with hand-written
//!   backpropagation, AdamW training and the learning-rate stability probe.
//! - [`eval`]: fine-tuning heads, metrics and the benchmark aggregation.
//! - [`synth`]: seeded generators for synthetic two-variety corpora and tasks.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod curation;
pub mod diversity;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod packing;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod text;
pub mod tokenizer;

pub use error::{Error, Result};
