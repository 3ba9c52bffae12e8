//! Readers for the four training-corpus formats.
//!
//! * CWS: one sentence per line, tokens separated by whitespace.
//! * POS: one `form<TAB>tag` per line, blank line between sentences.
//! * NER: one `char<TAB>label` per line (BMES-O cross-labels), blank line
//!   between sentences.
//! * DEP: `id<TAB>form<TAB>pos<TAB>head<TAB>rel` per line, blank line between
//!   sentences.

use std::path::{Path, PathBuf};

use crate::biaffine::validate_heads;
use crate::error::{Error, Result};
use crate::scheme::{decode_ner, encode_ner, Entity, Segmentation, Task};

#[derive(Clone, Debug, PartialEq)]
pub enum Sentence {
    Cws(Segmentation),
    Pos {
        segmentation: Segmentation,
        tags: Vec<String>,
    },
    Ner {
        chars: Vec<char>,
        entities: Vec<Entity>,
    },
    Dep {
        segmentation: Segmentation,
        pos: Vec<String>,
        heads: Vec<usize>,
        rels: Vec<String>,
    },
}

impl Sentence {
    pub fn chars(&self) -> &[char] {
        match self {
            Sentence::Cws(s) => s.chars(),
            Sentence::Pos { segmentation, .. } | Sentence::Dep { segmentation, .. } => segmentation.chars(),
            Sentence::Ner { chars, .. } => chars,
        }
    }

    pub fn text(&self) -> String {
        self.chars().iter().collect()
    }

    pub fn task(&self) -> Task {
        match self {
            Sentence::Cws(_) => Task::Cws,
            Sentence::Pos { .. } => Task::Pos,
            Sentence::Ner { .. } => Task::Ner,
            Sentence::Dep { .. } => Task::Dep,
        }
    }

    /// Renders the sentence back into its corpus format (no trailing blank line).
    pub fn to_corpus_string(&self) -> String {
        match self {
            Sentence::Cws(s) => s.tokens().join(" "),
            Sentence::Pos { segmentation, tags } => segmentation
                .tokens()
                .iter()
                .zip(tags)
                .map(|(f, t)| format!("{f}\t{t}"))
                .collect::<Vec<_>>()
                .join("\n"),
            Sentence::Ner { chars, entities } => chars
                .iter()
                .zip(encode_ner(chars.len(), entities))
                .map(|(c, l)| format!("{c}\t{l}"))
                .collect::<Vec<_>>()
                .join("\n"),
            Sentence::Dep {
                segmentation,
                pos,
                heads,
                rels,
            } => segmentation
                .tokens()
                .iter()
                .enumerate()
                .map(|(i, f)| format!("{}\t{f}\t{}\t{}\t{}", i + 1, pos[i], heads[i], rels[i]))
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }
}

/// A parsed corpus bound to a corpus tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub tag: String,
    pub task: Task,
    pub sentences: Vec<Sentence>,
}

pub fn read_corpus(path: &Path, task: Task) -> Result<Vec<Sentence>> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus(&text, task, path)
}

fn format_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::CorpusFormat {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Blank-line separated blocks of `(line number, columns)`.
fn blocks(text: &str) -> Vec<Vec<(usize, Vec<&str>)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        cur.push((i + 1, line.split('\t').collect()));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn parse_corpus(text: &str, task: Task, path: &Path) -> Result<Vec<Sentence>> {
    match task {
        Task::Cws => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let tokens: Vec<&str> = l.split_whitespace().collect();
                Segmentation::from_tokens(&tokens)
                    .map(Sentence::Cws)
                    .map_err(|e| format_error(path, i + 1, e.to_string()))
            })
            .collect(),
        Task::Pos => blocks(text)
            .into_iter()
            .map(|b| {
                let mut forms = Vec::new();
                let mut tags = Vec::new();
                for (line, cols) in b {
                    match cols.as_slice() {
                        [form, tag] if !form.is_empty() && !tag.is_empty() => {
                            forms.push(form.to_string());
                            tags.push(tag.to_string());
                        }
                        _ => return Err(format_error(path, line, format!("expected 2 columns, found {}", cols.len()))),
                    }
                }
                let segmentation = Segmentation::from_tokens(&forms).map_err(|e| format_error(path, 0, e.to_string()))?;
                Ok(Sentence::Pos { segmentation, tags })
            })
            .collect(),
        Task::Ner => blocks(text)
            .into_iter()
            .map(|b| {
                let first = b[0].0;
                let mut chars = Vec::new();
                let mut labels = Vec::new();
                for (line, cols) in b {
                    match cols.as_slice() {
                        [c, label] if c.chars().count() == 1 && !label.is_empty() => {
                            chars.push(c.chars().next().expect("one char"));
                            labels.push(label.to_string());
                        }
                        _ => {
                            return Err(format_error(path, line, "expected `char<TAB>label`"));
                        }
                    }
                }
                let entities = decode_ner(&labels).map_err(|e| match e {
                    Error::IllegalSequence { position, reason } => format_error(path, first + position, reason),
                    other => format_error(path, first, other.to_string()),
                })?;
                Ok(Sentence::Ner { chars, entities })
            })
            .collect(),
        Task::Dep => blocks(text)
            .into_iter()
            .map(|b| {
                let first = b[0].0;
                let mut forms = Vec::new();
                let mut pos = Vec::new();
                let mut heads = Vec::new();
                let mut rels = Vec::new();
                for (k, (line, cols)) in b.iter().enumerate() {
                    if cols.len() != 5 {
                        return Err(format_error(path, *line, format!("expected 5 columns, found {}", cols.len())));
                    }
                    let id: usize = cols[0]
                        .parse()
                        .map_err(|_| format_error(path, *line, format!("bad token id `{}`", cols[0])))?;
                    if id != k + 1 {
                        return Err(format_error(path, *line, format!("token id {id}, expected {}", k + 1)));
                    }
                    let head: usize = cols[3]
                        .parse()
                        .map_err(|_| format_error(path, *line, format!("bad head `{}`", cols[3])))?;
                    if cols[1].is_empty() || cols[2].is_empty() || cols[4].is_empty() {
                        return Err(format_error(path, *line, "empty column"));
                    }
                    forms.push(cols[1].to_string());
                    pos.push(cols[2].to_string());
                    heads.push(head);
                    rels.push(cols[4].to_string());
                }
                validate_heads(&heads).map_err(|m| format_error(path, first, m))?;
                let segmentation = Segmentation::from_tokens(&forms).map_err(|e| format_error(path, first, e.to_string()))?;
                Ok(Sentence::Dep {
                    segmentation,
                    pos,
                    heads,
                    rels,
                })
            })
            .collect(),
    }
}

/// Writes sentences in their corpus format.
pub fn write_corpus(path: &Path, sentences: &[Sentence]) -> Result<()> {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.to_corpus_string());
        out.push('\n');
        if s.task() != Task::Cws {
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn in_memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}
