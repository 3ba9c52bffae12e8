//! Multi-task Chinese text analysis over one shared, corpus-tag conditioned
//! transformer encoder: word segmentation, POS tagging and NER with CRF
//! heads, dependency parsing with a biaffine head, user-lexicon biasing, and
//! layer-halving compression.

pub mod biaffine;
pub mod cli;
pub mod crf;
pub mod encoder;
pub mod error;
pub mod lexicon;
pub mod params;
pub mod pipeline;
pub mod scheme;
pub mod theseus;
pub mod vocab;

pub use error::{Error, Result};
