//! Joint multi-corpus training, fine-tuning and evaluation.
//!
//! Every batch holds sentences of a single corpus; batches of all corpora
//! are shuffled together each epoch, so a corpus is visited in proportion
//! to its size. Per-example gradients are computed in fixed-size chunks in
//! parallel and summed in chunk order, so results do not depend on the
//! thread count.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crf::nll_with_grad;
use crate::encoder::{EncoderConfig, EncoderParams, LayerParams};
use crate::error::{Error, Result};
use crate::params::{Adam, AdamConfig, Params};
use crate::scheme::{encode_bmes, encode_cross, encode_ner, LabelScheme, Segmentation, Task};
use crate::vocab::{CorpusTag, Vocabulary};

use super::corpus::{read_corpus, Corpus, Sentence};
use super::metrics::{tagged_spans, word_spans, Score};
use super::{Analyzer, Model, ModelConfig, ModelParams, Schemes, MAX_CHARS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub path: PathBuf,
    pub tag: String,
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderSettings {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        EncoderSettings {
            num_layers: 4,
            hidden_dim: 128,
            num_heads: 4,
            ffn_dim: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
    /// Share of each corpus held out for per-epoch evaluation.
    pub eval_fraction: f64,
    pub encoder: EncoderSettings,
    pub arc_dim: usize,
    pub label_dim: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            batch_size: 16,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed: 0,
            eval_fraction: 0.1,
            encoder: EncoderSettings::default(),
            arc_dim: 64,
            label_dim: 32,
        }
    }
}

impl TrainOptions {
    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            clip_norm: self.clip_norm,
            ..AdamConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.eval_fraction) {
            return Err(Error::Config("eval_fraction must lie in [0, 1)".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// A training run as read from JSON: corpora plus options at top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub corpora: Vec<CorpusSpec>,
    #[serde(flatten)]
    pub options: TrainOptions,
}

impl TrainingConfig {
    /// Reads a config; relative corpus paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: TrainingConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for c in &mut cfg.corpora {
            if c.path.is_relative() {
                c.path = base.join(&c.path);
            }
        }
        Ok(cfg)
    }

    pub fn load_corpora(&self) -> Result<Vec<Corpus>> {
        if self.corpora.is_empty() {
            return Err(Error::Config("no corpora configured".into()));
        }
        self.corpora
            .iter()
            .map(|c| {
                Ok(Corpus {
                    tag: c.tag.clone(),
                    task: c.task,
                    sentences: read_corpus(&c.path, c.task)?,
                })
            })
            .collect()
    }
}

/// Train and held-out parts of every corpus, in corpus order.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Vec<Corpus>,
    pub held_out: Vec<Corpus>,
}

/// Shuffles each corpus under `seed` and moves `round(fraction * n)`
/// sentences to the held-out part.
pub fn split_corpora(corpora: &[Corpus], fraction: f64, seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5e11);
    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for c in corpora {
        let mut order: Vec<usize> = (0..c.sentences.len()).collect();
        order.shuffle(&mut rng);
        let k = (fraction * c.sentences.len() as f64).round() as usize;
        let pick = |idx: &[usize]| Corpus {
            tag: c.tag.clone(),
            task: c.task,
            sentences: idx.iter().map(|&i| c.sentences[i].clone()).collect(),
        };
        held_out.push(pick(&order[..k]));
        train.push(pick(&order[k..]));
    }
    Split { train, held_out }
}

/// Vocabulary and label schemes for a set of training corpora.
pub fn derive_inventory(corpora: &[Corpus]) -> Result<(Vocabulary, Schemes)> {
    let mut tags: Vec<(String, Task)> = Vec::new();
    let mut chars = BTreeSet::new();
    let mut pos_cats = BTreeSet::new();
    let mut ner_cats = BTreeSet::new();
    let mut rels = BTreeSet::new();
    for c in corpora {
        match tags.iter().find(|(n, _)| *n == c.tag) {
            Some((_, t)) if *t != c.task => {
                return Err(Error::Config(format!("corpus tag `{}` used for both {t} and {}", c.tag, c.task)));
            }
            Some(_) => {}
            None => tags.push((c.tag.clone(), c.task)),
        }
        for s in &c.sentences {
            if s.task() != c.task {
                return Err(Error::Config(format!("{} sentence in {} corpus `{}`", s.task(), c.task, c.tag)));
            }
            chars.extend(s.chars().iter().copied());
            match s {
                Sentence::Cws(_) => {}
                Sentence::Pos { tags, .. } => pos_cats.extend(tags.iter().cloned()),
                Sentence::Ner { entities, .. } => ner_cats.extend(entities.iter().map(|e| e.category.clone())),
                Sentence::Dep { pos, rels: r, .. } => {
                    pos_cats.extend(pos.iter().cloned());
                    rels.extend(r.iter().cloned());
                }
            }
        }
    }
    let has = |t: Task| corpora.iter().any(|c| c.task == t);
    if has(Task::Dep) && !has(Task::Pos) {
        return Err(Error::Config("dependency corpora need a POS corpus for the tagging pass".into()));
    }
    let pos_cats: Vec<String> = pos_cats.into_iter().collect();
    let ner_cats: Vec<String> = ner_cats.into_iter().collect();
    let schemes = Schemes {
        cws: has(Task::Cws).then(LabelScheme::cws),
        pos: if has(Task::Pos) { Some(LabelScheme::pos(&pos_cats)?) } else { None },
        ner: if has(Task::Ner) { Some(LabelScheme::ner(&ner_cats)?) } else { None },
        relations: rels.into_iter().collect(),
    };
    let vocab = Vocabulary::new(&tags, chars)?;
    Ok((vocab, schemes))
}

/// Untrained model sized for `corpora`.
pub fn build_model<R: Rng>(corpora: &[Corpus], options: &TrainOptions, rng: &mut R) -> Result<Model> {
    let (vocab, schemes) = derive_inventory(corpora)?;
    let e = &options.encoder;
    let config = ModelConfig {
        encoder: EncoderConfig {
            num_layers: e.num_layers,
            hidden_dim: e.hidden_dim,
            num_heads: e.num_heads,
            ffn_dim: e.ffn_dim,
            max_len: MAX_CHARS + 1,
            vocab_size: vocab.size(),
        },
        arc_dim: options.arc_dim,
        label_dim: options.label_dim,
    };
    Model::new(config, vocab, schemes, rng)
}

#[derive(Clone, Debug)]
pub(crate) enum Target {
    Labels(Vec<usize>),
    Tree {
        segmentation: Segmentation,
        pos: Vec<usize>,
        heads: Vec<usize>,
        rels: Vec<usize>,
    },
}

/// One sentence converted to model indices.
#[derive(Clone, Debug)]
pub(crate) struct Example {
    pub tag: CorpusTag,
    pub ids: Vec<usize>,
    pub target: Target,
}

pub(crate) fn make_examples(model: &Model, corpus: &Corpus) -> Result<Vec<Example>> {
    let tag = model.vocab.tag(&corpus.tag)?.clone();
    if tag.task != corpus.task {
        return Err(Error::UnknownTag(corpus.tag.clone()));
    }
    let scheme = |t: Task| {
        model
            .schemes
            .for_task(t)
            .ok_or_else(|| Error::Config(format!("model has no {t} head")))
    };
    corpus
        .sentences
        .iter()
        .map(|s| {
            let ids = super::check_sentence(&model.vocab, s.chars())?;
            let target = match s {
                Sentence::Cws(seg) => {
                    let sc = scheme(Task::Cws)?;
                    let labels: Vec<String> = encode_bmes(seg).iter().map(|p| p.to_string()).collect();
                    Target::Labels(sc.to_indices(&labels)?)
                }
                Sentence::Pos { segmentation, tags } => {
                    Target::Labels(scheme(Task::Pos)?.to_indices(&encode_cross(segmentation, tags)?)?)
                }
                Sentence::Ner { chars, entities } => {
                    Target::Labels(scheme(Task::Ner)?.to_indices(&encode_ner(chars.len(), entities))?)
                }
                Sentence::Dep {
                    segmentation,
                    pos,
                    heads,
                    rels,
                } => {
                    if model.params.dep.is_none() {
                        return Err(Error::Config("model has no dependency head".into()));
                    }
                    Target::Tree {
                        segmentation: segmentation.clone(),
                        pos: pos
                            .iter()
                            .map(|p| model.schemes.pos_category_id(p))
                            .collect::<Result<_>>()?,
                        heads: heads.clone(),
                        rels: rels
                            .iter()
                            .map(|r| model.schemes.relation_id(r))
                            .collect::<Result<_>>()?,
                    }
                }
            };
            Ok(Example {
                tag: tag.clone(),
                ids,
                target,
            })
        })
        .collect()
}

/// Gradients of everything except the encoder layers (left empty in
/// `model.encoder.layers`) plus gradients of the layer stack in use.
pub(crate) struct Grads {
    pub model: ModelParams,
    pub stack: Vec<LayerParams>,
}

impl Grads {
    fn zeros(params: &ModelParams, stack: &[&LayerParams]) -> Grads {
        let e = &params.encoder;
        let encoder = EncoderParams {
            config: e.config.clone(),
            embedding: Array2::zeros(e.embedding.raw_dim()),
            position: Array2::zeros(e.position.raw_dim()),
            layers: Vec::new(),
            final_ln: e.final_ln.zeros_like(),
        };
        Grads {
            model: ModelParams {
                encoder,
                cws: params.cws.as_ref().map(Params::zeros_like),
                pos: params.pos.as_ref().map(Params::zeros_like),
                ner: params.ner.as_ref().map(Params::zeros_like),
                dep: params.dep.as_ref().map(Params::zeros_like),
            },
            stack: stack.iter().map(|l| l.zeros_like()).collect(),
        }
    }

    fn add(&mut self, other: &Grads) {
        self.model.add_assign(&other.model);
        for (a, b) in self.stack.iter_mut().zip(&other.stack) {
            a.add_assign(b);
        }
    }

    /// Full-model gradient when the stack is the model's own layers.
    pub fn into_params(self) -> ModelParams {
        let mut g = self.model;
        g.encoder.layers = self.stack;
        g
    }
}

/// Loss of one example through `stack`; gradients are added into `acc`.
fn example_grad(params: &ModelParams, stack: &[&LayerParams], ex: &Example, acc: &mut Grads) -> Result<f64> {
    let mask = vec![true; ex.ids.len()];
    let (h, cache) = params.encoder.forward_with(stack, ex.tag.vocab_id, &ex.ids, &mask)?;
    let feats = h.slice(s![1.., ..]);
    let mut d_h = Array2::zeros(h.raw_dim());
    let loss = match &ex.target {
        Target::Labels(gold) => {
            let task = ex.tag.task;
            let head = params.head(task).expect("examples are built against this model");
            let (em, hc) = head.emissions_cached(feats);
            let (loss, d_em, d_tr) = nll_with_grad(em.view(), &head.transitions, gold)?;
            let g = acc.model.head_mut(task).expect("gradient mirrors model");
            g.transitions.add_assign(&d_tr);
            let d_feats = head.backward(&hc, d_em.view(), g);
            d_h.slice_mut(s![1.., ..]).assign(&d_feats);
            loss
        }
        Target::Tree {
            segmentation,
            pos,
            heads,
            rels,
        } => {
            let parser = params.dep.as_ref().expect("examples are built against this model");
            let (loss, g, d_chars) = parser.loss_and_grad(feats, segmentation, pos, heads, rels)?;
            acc.model.dep.as_mut().expect("gradient mirrors model").add_assign(&g);
            d_h.slice_mut(s![1.., ..]).assign(&d_chars);
            loss
        }
    };
    let (eg, layer_grads) = params.encoder.backward_with(stack, &cache, d_h.view());
    acc.model.encoder.add_assign(&eg);
    for (a, g) in acc.stack.iter_mut().zip(&layer_grads) {
        a.add_assign(g);
    }
    Ok(loss)
}

const CHUNK: usize = 4;

/// Summed loss and summed gradients over `examples`.
pub(crate) fn batch_grad(params: &ModelParams, stack: &[&LayerParams], examples: &[&Example]) -> Result<(f64, Grads)> {
    let parts: Vec<Result<(f64, Grads)>> = examples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Grads::zeros(params, stack);
            let mut loss = 0.0;
            for ex in chunk {
                loss += example_grad(params, stack, ex, &mut acc)?;
            }
            Ok((loss, acc))
        })
        .collect();
    let mut total = 0.0;
    let mut acc: Option<Grads> = None;
    for part in parts {
        let (l, g) = part?;
        total += l;
        match acc.as_mut() {
            Some(a) => a.add(&g),
            None => acc = Some(g),
        }
    }
    Ok((total, acc.unwrap_or_else(|| Grads::zeros(params, stack))))
}

/// Mean loss over examples, no gradients.
pub(crate) fn mean_loss(model: &Model, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let stack: Vec<&LayerParams> = model.params.encoder.layers.iter().collect();
    let losses: Vec<Result<f64>> = examples
        .par_iter()
        .map(|ex| {
            let mask = vec![true; ex.ids.len()];
            let (h, _) = model.params.encoder.forward_with(&stack, ex.tag.vocab_id, &ex.ids, &mask)?;
            let feats = h.slice(s![1.., ..]);
            match &ex.target {
                Target::Labels(gold) => {
                    let head = model.params.head(ex.tag.task).expect("built against model");
                    crate::crf::nll_loss(head.emissions(feats).view(), &head.transitions, gold)
                }
                Target::Tree {
                    segmentation,
                    pos,
                    heads,
                    rels,
                } => {
                    let parser = model.params.dep.as_ref().expect("built against model");
                    parser.loss_and_grad(feats, segmentation, pos, heads, rels).map(|r| r.0)
                }
            }
        })
        .collect();
    let mut sum = 0.0;
    for l in losses {
        sum += l?;
    }
    Ok(sum / examples.len() as f64)
}

/// Batches as `(corpus, example indices)`: each corpus shuffled and cut
/// into `batch_size` pieces, then all batches shuffled together.
pub(crate) fn plan_batches<R: Rng>(sizes: &[usize], batch_size: usize, rng: &mut R) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    for (c, &n) in sizes.iter().enumerate() {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for chunk in idx.chunks(batch_size) {
            out.push((c, chunk.to_vec()));
        }
    }
    out.shuffle(rng);
    out
}

/// Score of one held-out corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub tag: String,
    pub task: Task,
    pub score: Score,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean per-sentence training loss over the epoch's batches.
    pub train_loss: f64,
    pub scores: Vec<CorpusScore>,
}

/// Renders epoch reports as an aligned text table.
pub fn format_history(history: &[EpochReport]) -> String {
    let mut out = String::new();
    for r in history {
        let _ = write!(out, "epoch {:>3}  loss {:>10.4}", r.epoch, r.train_loss);
        for s in &r.scores {
            let _ = write!(out, "  | {} [{}] {}", s.tag, s.task, s.score);
        }
        out.push('\n');
    }
    out
}

pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochReport>,
    pub held_out: Vec<Corpus>,
}

/// Runs a configured training job end to end.
pub fn train(config: &TrainingConfig) -> Result<TrainOutcome> {
    train_corpora(&config.load_corpora()?, &config.options)
}

/// Splits, builds a model and trains it jointly on all corpora.
pub fn train_corpora(corpora: &[Corpus], options: &TrainOptions) -> Result<TrainOutcome> {
    options.validate()?;
    let split = split_corpora(corpora, options.eval_fraction, options.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut model = build_model(&split.train, options, &mut rng)?;
    let history = fit(&mut model, &split.train, &split.held_out, options, &mut rng)?;
    Ok(TrainOutcome {
        model,
        history,
        held_out: split.held_out,
    })
}

/// Trains `model` in place for `options.epochs` epochs, evaluating the
/// held-out corpora after each.
pub fn fit<R: Rng>(
    model: &mut Model,
    train: &[Corpus],
    held_out: &[Corpus],
    options: &TrainOptions,
    rng: &mut R,
) -> Result<Vec<EpochReport>> {
    options.validate()?;
    let examples: Vec<Vec<Example>> = train
        .iter()
        .map(|c| make_examples(model, c))
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = examples.iter().map(Vec::len).collect();
    let mut adam = Adam::new(options.adam());
    let mut history = Vec::with_capacity(options.epochs);
    for epoch in 1..=options.epochs {
        let mut loss_sum = 0.0;
        let mut count = 0usize;
        for (c, idx) in plan_batches(&sizes, options.batch_size, rng) {
            let batch: Vec<&Example> = idx.iter().map(|&i| &examples[c][i]).collect();
            let stack: Vec<&LayerParams> = model.params.encoder.layers.iter().collect();
            let (loss, grads) = batch_grad(&model.params, &stack, &batch)?;
            let mut g = grads.into_params();
            g.scale(1.0 / batch.len() as f64);
            adam.update(&mut model.params, &g);
            loss_sum += loss;
            count += batch.len();
        }
        let scores = held_out
            .iter()
            .filter(|c| !c.sentences.is_empty())
            .map(|c| {
                Ok(CorpusScore {
                    tag: c.tag.clone(),
                    task: c.task,
                    score: evaluate(model, c)?,
                })
            })
            .collect::<Result<_>>()?;
        history.push(EpochReport {
            epoch,
            train_loss: if count == 0 { 0.0 } else { loss_sum / count as f64 },
            scores,
        });
    }
    Ok(history)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for FinetuneOptions {
    fn default() -> Self {
        FinetuneOptions {
            epochs: 5,
            batch_size: 16,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

/// Continues training a model on corpora whose tags it already knows.
/// Returns the tuned model and the mean loss over the corpora measured
/// after each epoch.
pub fn finetune(model: &Model, corpora: &[Corpus], options: &FinetuneOptions) -> Result<(Model, Vec<f64>)> {
    let train_opts = TrainOptions {
        epochs: 1,
        batch_size: options.batch_size,
        learning_rate: options.learning_rate,
        clip_norm: options.clip_norm,
        seed: options.seed,
        eval_fraction: 0.0,
        ..TrainOptions::default()
    };
    train_opts.validate()?;
    let examples: Vec<Example> = corpora
        .iter()
        .map(|c| make_examples(model, c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut tuned = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut adam = Adam::new(train_opts.adam());
    let sizes: Vec<usize> = corpora.iter().map(|c| c.sentences.len()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n;
            Some(o)
        })
        .collect();
    let mut losses = Vec::with_capacity(options.epochs);
    for _ in 0..options.epochs {
        for (c, idx) in plan_batches(&sizes, options.batch_size, &mut rng) {
            let batch: Vec<&Example> = idx.iter().map(|&i| &examples[offsets[c] + i]).collect();
            let stack: Vec<&LayerParams> = tuned.params.encoder.layers.iter().collect();
            let (_, grads) = batch_grad(&tuned.params, &stack, &batch)?;
            let mut g = grads.into_params();
            g.scale(1.0 / batch.len() as f64);
            adam.update(&mut tuned.params, &g);
        }
        losses.push(mean_loss(&tuned, &examples)?);
    }
    Ok((tuned, losses))
}

/// Held-out score of `corpus` under its own tag, without a lexicon.
pub fn evaluate(model: &Model, corpus: &Corpus) -> Result<Score> {
    // Analyzer holds an Arc; evaluation clones the model once per call.
    let analyzer = Analyzer::new(std::sync::Arc::new(model.clone()));
    evaluate_with(&analyzer, corpus)
}

/// Like [`evaluate`] but with the analyzer's lexicon and POS style.
pub fn evaluate_with(analyzer: &Analyzer, corpus: &Corpus) -> Result<Score> {
    let tag = analyzer.model().vocab.tag(&corpus.tag)?.clone();
    if tag.task != corpus.task {
        return Err(Error::UnknownTag(corpus.tag.clone()));
    }
    let parts: Vec<Result<Score>> = corpus
        .sentences
        .par_iter()
        .map(|s| {
            let chars = s.chars();
            let mut score = Score::empty(corpus.task);
            match (s, &mut score) {
                (Sentence::Cws(gold), Score::Spans(c)) => {
                    let pred = analyzer.segment_with(&tag, chars)?;
                    c.add(&word_spans(gold), &word_spans(&pred));
                }
                (Sentence::Pos { segmentation, tags }, Score::Spans(c)) => {
                    let pred = analyzer.tag_with(&tag, chars)?;
                    c.add(
                        &tagged_spans(segmentation, tags),
                        &tagged_spans(&pred.segmentation, &pred.tags),
                    );
                }
                (Sentence::Ner { entities, .. }, Score::Spans(c)) => {
                    let pred = analyzer.entities_with(&tag, chars)?;
                    let spans = |es: &[crate::scheme::Entity]| -> Vec<_> {
                        es.iter().map(|e| (e.start, e.end, e.category.clone())).collect()
                    };
                    c.add(&spans(entities), &spans(&pred));
                }
                (
                    Sentence::Dep {
                        segmentation,
                        heads,
                        rels,
                        ..
                    },
                    Score::Attachment(c),
                ) => {
                    let (tagged, ph, pr) = analyzer.parse_with(&tag, chars)?;
                    c.add((segmentation, heads, rels), (&tagged.segmentation, &ph, &pr));
                }
                _ => return Err(Error::Config(format!("{} sentence in {} corpus", s.task(), corpus.task))),
            }
            Ok(score)
        })
        .collect();
    let mut total = Score::empty(corpus.task);
    for p in parts {
        match (&mut total, p?) {
            (Score::Spans(a), Score::Spans(b)) => {
                a.correct += b.correct;
                a.predicted += b.predicted;
                a.gold += b.gold;
            }
            (Score::Attachment(a), Score::Attachment(b)) => {
                a.tokens += b.tokens;
                a.heads += b.heads;
                a.labelled += b.labelled;
            }
            _ => unreachable!("score kinds follow the corpus task"),
        }
    }
    Ok(total)
}
