//! Inference sessions over a shared, read-only model.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::crf::viterbi;
use crate::error::{Error, Result};
use crate::lexicon::{bias_matrix, compute_bias, Lexicon};
use crate::scheme::{decode_bmes, decode_cross, decode_ner, Entity, Segmentation, Task, TaggedSegmentation};
use crate::vocab::CorpusTag;

use super::Model;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TaggedToken {
    pub form: String,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedEntity {
    pub text: String,
    pub category: String,
    /// Character offsets, end exclusive.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepRow {
    pub id: usize,
    pub form: String,
    pub pos: String,
    pub head: usize,
    pub rel: String,
}

/// Result of analysing one sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Analysis {
    Cws(Vec<String>),
    Pos(Vec<TaggedToken>),
    Ner(Vec<NamedEntity>),
    Dep(Vec<DepRow>),
}

impl Analysis {
    /// Space-separated tokens, `form/tag` pairs, `text/category` entities,
    /// or one `id form pos head rel` row per line.
    pub fn to_plain(&self) -> String {
        match self {
            Analysis::Cws(tokens) => tokens.join(" "),
            Analysis::Pos(tokens) => tokens
                .iter()
                .map(|t| format!("{}/{}", t.form, t.tag))
                .collect::<Vec<_>>()
                .join(" "),
            Analysis::Ner(ents) => ents
                .iter()
                .map(|e| format!("{}/{}", e.text, e.category))
                .collect::<Vec<_>>()
                .join(" "),
            Analysis::Dep(_) => self.to_conll(),
        }
    }

    /// Tab-separated rows, one token per line: `form` (CWS), `form tag`
    /// (POS), `text category start end` (NER) or the five dependency columns.
    pub fn to_conll(&self) -> String {
        let rows: Vec<String> = match self {
            Analysis::Cws(tokens) => tokens.clone(),
            Analysis::Pos(tokens) => tokens.iter().map(|t| format!("{}\t{}", t.form, t.tag)).collect(),
            Analysis::Ner(ents) => ents
                .iter()
                .map(|e| format!("{}\t{}\t{}\t{}", e.text, e.category, e.start, e.end))
                .collect(),
            Analysis::Dep(rows) => rows
                .iter()
                .map(|r| format!("{}\t{}\t{}\t{}\t{}", r.id, r.form, r.pos, r.head, r.rel))
                .collect(),
        };
        rows.join("\n")
    }
}

/// A prediction session: a model, the corpus tag chosen for each task and
/// an optional user lexicon. Cloning is cheap; the model is shared.
#[derive(Clone, Debug)]
pub struct Analyzer {
    model: Arc<Model>,
    styles: BTreeMap<Task, CorpusTag>,
    lexicon: Option<Lexicon>,
}

impl Analyzer {
    /// Each task starts on its first registered corpus tag.
    pub fn new(model: Arc<Model>) -> Self {
        let mut styles = BTreeMap::new();
        for task in Task::ALL {
            if let Some(tag) = model.vocab.default_tag(task) {
                styles.insert(task, tag.clone());
            }
        }
        Analyzer {
            model,
            styles,
            lexicon: None,
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn shared_model(&self) -> Arc<Model> {
        Arc::clone(&self.model)
    }

    /// Selects the corpus tag used for that tag's task.
    pub fn set_style(&mut self, tag: &str) -> Result<()> {
        let tag = self.model.vocab.tag(tag)?.clone();
        self.styles.insert(tag.task, tag);
        Ok(())
    }

    /// Selects the segmentation criterion; the tag must belong to a CWS corpus.
    pub fn set_cws_style(&mut self, tag: &str) -> Result<()> {
        match self.model.vocab.tag(tag) {
            Ok(t) if t.task == Task::Cws => self.set_style(tag),
            _ => Err(Error::UnknownTag(tag.to_string())),
        }
    }

    pub fn style(&self, task: Task) -> Option<&CorpusTag> {
        self.styles.get(&task)
    }

    pub fn set_lexicon(&mut self, lexicon: Option<Lexicon>) {
        self.lexicon = lexicon;
    }

    pub fn lexicon(&self) -> Option<&Lexicon> {
        self.lexicon.as_ref()
    }

    fn require(&self, task: Task) -> Result<&CorpusTag> {
        self.styles
            .get(&task)
            .ok_or_else(|| Error::Config(format!("model has no {task} corpus")))
    }

    /// Best legal label indices for one sentence under a sequence-labelling tag.
    /// The lexicon bias applies to segmentation and POS tagging.
    pub fn label_indices(&self, tag: &CorpusTag, chars: &[char]) -> Result<Vec<usize>> {
        let m = &self.model;
        let head = m
            .params
            .head(tag.task)
            .ok_or_else(|| Error::Config(format!("model has no {} head", tag.task)))?;
        let scheme = m.schemes.for_task(tag.task).expect("head implies scheme");
        let feats = m.char_features(tag, chars)?;
        let em = head.emissions(feats.view());
        let bias = match (&self.lexicon, tag.task) {
            (Some(lex), Task::Cws | Task::Pos) if lex.weight() != 0.0 && !lex.is_empty() => {
                let b = compute_bias(em.view(), &lex.max_match(chars), lex.weight());
                Some(bias_matrix(&b, scheme))
            }
            _ => None,
        };
        let constraints = scheme.constraints();
        let (path, _) = viterbi(
            em.view(),
            &head.transitions,
            Some(&constraints),
            bias.as_ref().map(|b| b.view()),
        )?;
        Ok(path)
    }

    fn scheme(&self, task: Task) -> Result<&crate::scheme::LabelScheme> {
        self.model
            .schemes
            .for_task(task)
            .ok_or_else(|| Error::Config(format!("model has no {task} head")))
    }

    fn labels(&self, tag: &CorpusTag, chars: &[char]) -> Result<Vec<String>> {
        let scheme = self.scheme(tag.task)?;
        Ok(scheme.to_strings(&self.label_indices(tag, chars)?))
    }

    pub fn segment_with(&self, tag: &CorpusTag, chars: &[char]) -> Result<Segmentation> {
        let scheme = self.scheme(tag.task)?;
        let idx = self.label_indices(tag, chars)?;
        let pos: Vec<_> = idx.iter().map(|&i| scheme.positional(i)).collect();
        decode_bmes(chars, &pos)
    }

    pub fn tag_with(&self, tag: &CorpusTag, chars: &[char]) -> Result<TaggedSegmentation> {
        decode_cross(chars, &self.labels(tag, chars)?)
    }

    pub fn entities_with(&self, tag: &CorpusTag, chars: &[char]) -> Result<Vec<Entity>> {
        decode_ner(&self.labels(tag, chars)?)
    }

    /// POS pass with the selected POS tag, then the parser under `tag`.
    pub fn parse_with(&self, tag: &CorpusTag, chars: &[char]) -> Result<(TaggedSegmentation, Vec<usize>, Vec<String>)> {
        let m = &self.model;
        let parser = m
            .params
            .dep
            .as_ref()
            .ok_or_else(|| Error::Config("model has no dependency head".into()))?;
        let tagged = self.tag_with(self.require(Task::Pos)?, chars)?;
        let pos_ids = tagged
            .tags
            .iter()
            .map(|t| m.schemes.pos_category_id(t))
            .collect::<Result<Vec<_>>>()?;
        let feats = m.char_features(tag, chars)?;
        let (heads, rels) = parser.parse(feats.view(), &tagged.segmentation, &pos_ids)?;
        let rels = rels.into_iter().map(|r| m.schemes.relations[r].clone()).collect();
        Ok((tagged, heads, rels))
    }

    /// Analyses one sentence under the tag selected for `task`.
    pub fn analyze(&self, text: &str, task: Task) -> Result<Analysis> {
        let tag = self.require(task)?;
        self.analyze_with(tag, text)
    }

    pub fn analyze_with(&self, tag: &CorpusTag, text: &str) -> Result<Analysis> {
        let chars: Vec<char> = text.chars().collect();
        Ok(match tag.task {
            Task::Cws => Analysis::Cws(self.segment_with(tag, &chars)?.tokens()),
            Task::Pos => {
                let t = self.tag_with(tag, &chars)?;
                Analysis::Pos(
                    t.pairs()
                        .into_iter()
                        .map(|(form, tag)| TaggedToken { form, tag })
                        .collect(),
                )
            }
            Task::Ner => Analysis::Ner(
                self.entities_with(tag, &chars)?
                    .into_iter()
                    .map(|e| NamedEntity {
                        text: e.text(&chars),
                        category: e.category,
                        start: e.start,
                        end: e.end,
                    })
                    .collect(),
            ),
            Task::Dep => {
                let (tagged, heads, rels) = self.parse_with(tag, &chars)?;
                Analysis::Dep(
                    tagged
                        .pairs()
                        .into_iter()
                        .zip(heads.into_iter().zip(rels))
                        .enumerate()
                        .map(|(i, ((form, pos), (head, rel)))| DepRow {
                            id: i + 1,
                            form,
                            pos,
                            head,
                            rel,
                        })
                        .collect(),
                )
            }
        })
    }

    /// Analyses a batch in parallel; output order follows input order.
    pub fn predict<S: AsRef<str> + Sync>(&self, sentences: &[S], task: Task) -> Result<Vec<Analysis>> {
        let tag = self.require(task)?;
        sentences
            .par_iter()
            .map(|s| self.analyze_with(tag, s.as_ref()))
            .collect()
    }
}
