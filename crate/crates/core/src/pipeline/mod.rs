//! The multi-task model: a shared encoder with one head per task, corpus
//! readers, training, evaluation and the on-disk container.

pub mod analyze;
pub mod container;
pub mod corpus;
pub mod metrics;
pub mod train;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::biaffine::BiaffineParser;
use crate::crf::CrfHead;
use crate::encoder::{EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::param_tree;
use crate::scheme::{LabelScheme, Task};
use crate::vocab::{CorpusTag, Vocabulary, PAD};

pub use analyze::{Analysis, Analyzer, DepRow, NamedEntity};

/// Longest accepted sentence, in characters. One encoder position is taken
/// by the corpus tag, so the encoder needs `max_len >= MAX_CHARS + 1`.
pub const MAX_CHARS: usize = 254;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub arc_dim: usize,
    pub label_dim: usize,
}

/// Label inventories of the heads a model carries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schemes {
    pub cws: Option<LabelScheme>,
    pub pos: Option<LabelScheme>,
    pub ner: Option<LabelScheme>,
    /// Dependency relations; empty when the model has no parser.
    pub relations: Vec<String>,
}

impl Schemes {
    pub fn for_task(&self, task: Task) -> Option<&LabelScheme> {
        match task {
            Task::Cws => self.cws.as_ref(),
            Task::Pos => self.pos.as_ref(),
            Task::Ner => self.ner.as_ref(),
            Task::Dep => None,
        }
    }

    pub fn relation_id(&self, rel: &str) -> Result<usize> {
        self.relations
            .iter()
            .position(|r| r == rel)
            .ok_or_else(|| Error::UnknownLabel(rel.to_string()))
    }

    /// Index of a POS category in the parser's embedding table.
    pub fn pos_category_id(&self, category: &str) -> Result<usize> {
        self.pos
            .as_ref()
            .and_then(|s| s.categories().iter().position(|c| c == category))
            .ok_or_else(|| Error::UnknownPosLabel(category.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub cws: Option<CrfHead>,
    pub pos: Option<CrfHead>,
    pub ner: Option<CrfHead>,
    pub dep: Option<BiaffineParser>,
}
param_tree!(ModelParams { encoder, cws, pos, ner, dep });

impl ModelParams {
    pub fn head(&self, task: Task) -> Option<&CrfHead> {
        match task {
            Task::Cws => self.cws.as_ref(),
            Task::Pos => self.pos.as_ref(),
            Task::Ner => self.ner.as_ref(),
            Task::Dep => None,
        }
    }

    pub fn head_mut(&mut self, task: Task) -> Option<&mut CrfHead> {
        match task {
            Task::Cws => self.cws.as_mut(),
            Task::Pos => self.pos.as_mut(),
            Task::Ner => self.ner.as_mut(),
            Task::Dep => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub schemes: Schemes,
    pub params: ModelParams,
}

impl Model {
    /// Fresh parameters. A head is created for every scheme present; the
    /// parser exists iff `relations` is non-empty, which requires a POS scheme.
    pub fn new<R: Rng>(config: ModelConfig, vocab: Vocabulary, schemes: Schemes, rng: &mut R) -> Result<Self> {
        if config.encoder.vocab_size != vocab.size() {
            return Err(Error::Config(format!(
                "encoder vocabulary size {} differs from vocabulary size {}",
                config.encoder.vocab_size,
                vocab.size()
            )));
        }
        if config.encoder.max_len < 2 {
            return Err(Error::Config("encoder max_len must be at least 2".into()));
        }
        for tag in vocab.tags() {
            let present = match tag.task {
                Task::Dep => !schemes.relations.is_empty(),
                t => schemes.for_task(t).is_some(),
            };
            if !present {
                return Err(Error::Config(format!("corpus tag `{}` has no {} head", tag.name, tag.task)));
            }
        }
        let encoder = EncoderParams::init(config.encoder.clone(), rng)?;
        let d = encoder.dim();
        let cws = schemes.cws.as_ref().map(|s| CrfHead::init(rng, d, s.len()));
        let pos = schemes.pos.as_ref().map(|s| CrfHead::init(rng, d, s.len()));
        let ner = schemes.ner.as_ref().map(|s| CrfHead::init(rng, d, s.len()));
        let dep = if schemes.relations.is_empty() {
            None
        } else {
            let pos_scheme = schemes
                .pos
                .as_ref()
                .ok_or_else(|| Error::Config("a dependency head needs a POS head".into()))?;
            Some(BiaffineParser::init(
                rng,
                d,
                pos_scheme.categories().len(),
                schemes.relations.len(),
                config.arc_dim,
                config.label_dim,
            ))
        };
        Ok(Model {
            config,
            vocab,
            schemes,
            params: ModelParams {
                encoder,
                cws,
                pos,
                ner,
                dep,
            },
        })
    }

    pub fn num_layers(&self) -> usize {
        self.params.encoder.layers.len()
    }

    /// Copy keeping only the first `k` encoder layers.
    pub fn prune_layers(&self, k: usize) -> Result<Model> {
        let encoder = self.params.encoder.prune_layers(k)?;
        let mut config = self.config.clone();
        config.encoder = encoder.config.clone();
        Ok(Model {
            config,
            vocab: self.vocab.clone(),
            schemes: self.schemes.clone(),
            params: ModelParams {
                encoder,
                ..self.params.clone()
            },
        })
    }

    /// Character features for one sentence, `T x d` (tag row dropped).
    pub fn char_features(&self, tag: &CorpusTag, chars: &[char]) -> Result<Array2<f64>> {
        let ids = check_sentence(&self.vocab, chars)?;
        let mask = vec![true; ids.len()];
        let h = self.params.encoder.forward(tag.vocab_id, &ids, &mask)?;
        Ok(h.slice(ndarray::s![1.., ..]).to_owned())
    }
}

fn check_sentence(vocab: &Vocabulary, chars: &[char]) -> Result<Vec<usize>> {
    if chars.is_empty() {
        return Err(Error::EmptySequence);
    }
    if chars.len() > MAX_CHARS {
        return Err(Error::LengthExceeded {
            len: chars.len() + 1,
            max: MAX_CHARS + 1,
        });
    }
    Ok(vocab.encode(chars))
}

/// Encoder input for a group of sentences sharing one corpus tag. Each row
/// starts with the tag id and is right-padded with `PAD`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub tag: CorpusTag,
    pub ids: Vec<Vec<usize>>,
    /// Same shape as `ids`; `true` at the tag slot and real characters.
    pub mask: Vec<Vec<bool>>,
    /// Character counts, tag slot excluded.
    pub lengths: Vec<usize>,
}

pub fn preprocess<S: AsRef<str>>(vocab: &Vocabulary, tag: &CorpusTag, sentences: &[S]) -> Result<Batch> {
    let encoded = sentences
        .iter()
        .map(|s| {
            let chars: Vec<char> = s.as_ref().chars().collect();
            check_sentence(vocab, &chars)
        })
        .collect::<Result<Vec<_>>>()?;
    let width = encoded.iter().map(Vec::len).max().unwrap_or(0) + 1;
    let mut ids = Vec::with_capacity(encoded.len());
    let mut mask = Vec::with_capacity(encoded.len());
    let mut lengths = Vec::with_capacity(encoded.len());
    for e in encoded {
        let mut row = Vec::with_capacity(width);
        row.push(tag.vocab_id);
        row.extend_from_slice(&e);
        let mut m = vec![true; row.len()];
        row.resize(width, PAD);
        m.resize(width, false);
        lengths.push(e.len());
        ids.push(row);
        mask.push(m);
    }
    Ok(Batch {
        tag: tag.clone(),
        ids,
        mask,
        lengths,
    })
}

impl Batch {
    /// Encodes every row; row `i` of the result is `(width) x d` with
    /// padded rows present but meaningless.
    pub fn encode(&self, encoder: &EncoderParams) -> Result<Vec<Array2<f64>>> {
        self.ids
            .iter()
            .zip(&self.mask)
            .map(|(ids, mask)| encoder.forward(ids[0], &ids[1..], &mask[1..]))
            .collect()
    }
}
