//! Label inventories and conversions between linguistic structures and
//! per-character label sequences.
//!
//! Segmentation uses the positional set `{B, M, E, S}`. POS tagging and NER
//! use cross-labels of the form `P-C` where `P` is a positional prefix and `C`
//! a category; NER additionally has the bare outside label `O`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "CWS")]
    Cws,
    #[serde(rename = "POS")]
    Pos,
    #[serde(rename = "NER")]
    Ner,
    #[serde(rename = "DEP")]
    Dep,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Cws, Task::Pos, Task::Ner, Task::Dep];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Cws => "CWS",
            Task::Pos => "POS",
            Task::Ner => "NER",
            Task::Dep => "DEP",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CWS" => Ok(Task::Cws),
            "POS" => Ok(Task::Pos),
            "NER" => Ok(Task::Ner),
            "DEP" => Ok(Task::Dep),
            _ => Err(Error::Config(format!("unknown task `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Positional {
    B,
    M,
    E,
    S,
    O,
}

impl Positional {
    pub fn as_char(self) -> char {
        match self {
            Positional::B => 'B',
            Positional::M => 'M',
            Positional::E => 'E',
            Positional::S => 'S',
            Positional::O => 'O',
        }
    }

    fn from_str(s: &str) -> Option<Self> {
        match s {
            "B" => Some(Positional::B),
            "M" => Some(Positional::M),
            "E" => Some(Positional::E),
            "S" => Some(Positional::S),
            "O" => Some(Positional::O),
            _ => None,
        }
    }

    /// Whether a label with this prefix may open a sequence.
    pub fn can_start(self) -> bool {
        matches!(self, Positional::B | Positional::S | Positional::O)
    }

    /// Whether a label with this prefix may close a sequence.
    pub fn can_end(self) -> bool {
        matches!(self, Positional::E | Positional::S | Positional::O)
    }

    /// Whether the prefix continues a token opened earlier.
    pub fn is_inside(self) -> bool {
        matches!(self, Positional::M | Positional::E)
    }
}

impl fmt::Display for Positional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Splits a label into its positional prefix and optional category.
pub fn split_label(label: &str) -> Result<(Positional, Option<&str>)> {
    if let Some(p) = Positional::from_str(label) {
        return Ok((p, None));
    }
    match label.split_once('-') {
        Some((prefix, cat)) if !cat.is_empty() => match Positional::from_str(prefix) {
            Some(Positional::O) | None => Err(Error::UnknownLabel(label.to_string())),
            Some(p) => Ok((p, Some(cat))),
        },
        _ => Err(Error::UnknownLabel(label.to_string())),
    }
}

/// Legal successor relation shared by every scheme.
pub fn legal_pair(
    prev: (Positional, Option<&str>),
    next: (Positional, Option<&str>),
) -> bool {
    match prev.0 {
        Positional::B | Positional::M => next.0.is_inside() && prev.1 == next.1,
        Positional::E | Positional::S | Positional::O => next.0.can_start(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeRepr", into = "SchemeRepr")]
pub struct LabelScheme {
    task: Task,
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    #[serde(skip)]
    positional: Vec<Positional>,
    #[serde(skip)]
    category: Vec<Option<String>>,
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    task: Task,
    labels: Vec<String>,
}

impl TryFrom<SchemeRepr> for LabelScheme {
    type Error = Error;

    fn try_from(r: SchemeRepr) -> Result<Self> {
        LabelScheme::from_labels(r.task, r.labels)
    }
}

impl From<LabelScheme> for SchemeRepr {
    fn from(s: LabelScheme) -> Self {
        SchemeRepr {
            task: s.task,
            labels: s.labels,
        }
    }
}

impl LabelScheme {
    fn from_labels(task: Task, mut labels: Vec<String>) -> Result<Self> {
        labels.sort();
        labels.dedup();
        let mut positional = Vec::with_capacity(labels.len());
        let mut category = Vec::with_capacity(labels.len());
        for l in &labels {
            let (p, c) = split_label(l)?;
            positional.push(p);
            category.push(c.map(str::to_string));
        }
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(LabelScheme {
            task,
            labels,
            index,
            positional,
            category,
        })
    }

    /// The plain `{B, M, E, S}` segmentation scheme.
    pub fn cws() -> Self {
        Self::from_labels(Task::Cws, ["B", "M", "E", "S"].map(String::from).to_vec())
            .expect("static labels")
    }

    /// Cross-labels `{B,M,E,S} x categories`.
    pub fn pos<S: AsRef<str>>(categories: &[S]) -> Result<Self> {
        Self::from_labels(Task::Pos, cross_labels(categories)?)
    }

    /// Cross-labels `{B,M,E,S} x categories` plus `O`.
    pub fn ner<S: AsRef<str>>(categories: &[S]) -> Result<Self> {
        let mut labels = cross_labels(categories)?;
        labels.push("O".to_string());
        Self::from_labels(Task::Ner, labels)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn positional(&self, i: usize) -> Positional {
        self.positional[i]
    }

    pub fn category(&self, i: usize) -> Option<&str> {
        self.category[i].as_deref()
    }

    /// Distinct categories in label order.
    pub fn categories(&self) -> Vec<String> {
        let mut cats: Vec<String> = self.category.iter().flatten().cloned().collect();
        cats.sort();
        cats.dedup();
        cats
    }

    pub fn legal_start(&self, i: usize) -> bool {
        self.positional[i].can_start()
    }

    pub fn legal_end(&self, i: usize) -> bool {
        self.positional[i].can_end()
    }

    pub fn legal_transition(&self, from: usize, to: usize) -> bool {
        legal_pair(
            (self.positional[from], self.category(from)),
            (self.positional[to], self.category(to)),
        )
    }

    /// Legality masks `(start, transition, end)` in label-index order.
    pub fn constraints(&self) -> Constraints {
        let n = self.len();
        Constraints {
            start: (0..n).map(|i| self.legal_start(i)).collect(),
            end: (0..n).map(|i| self.legal_end(i)).collect(),
            transition: (0..n)
                .map(|i| (0..n).map(|j| self.legal_transition(i, j)).collect())
                .collect(),
        }
    }

    /// Checks a whole index sequence against the scheme.
    pub fn check(&self, labels: &[usize]) -> Result<()> {
        for (t, &l) in labels.iter().enumerate() {
            if l >= self.len() {
                return Err(Error::LabelOutOfRange {
                    index: l,
                    size: self.len(),
                });
            }
            if t == 0 && !self.legal_start(l) {
                return Err(Error::illegal(t, format!("`{}` cannot open a sequence", self.label(l))));
            }
            if t > 0 && !self.legal_transition(labels[t - 1], l) {
                return Err(Error::illegal(
                    t,
                    format!("`{}` cannot follow `{}`", self.label(l), self.label(labels[t - 1])),
                ));
            }
        }
        if let Some(&last) = labels.last() {
            if !self.legal_end(last) {
                return Err(Error::illegal(
                    labels.len() - 1,
                    format!("`{}` cannot close a sequence", self.label(last)),
                ));
            }
        }
        Ok(())
    }

    pub fn to_strings(&self, labels: &[usize]) -> Vec<String> {
        labels.iter().map(|&l| self.labels[l].clone()).collect()
    }

    pub fn to_indices<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }
}

fn cross_labels<S: AsRef<str>>(categories: &[S]) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(categories.len() * 4);
    for c in categories {
        let c = c.as_ref();
        if c.is_empty() || c.chars().any(char::is_whitespace) {
            return Err(Error::UnknownLabel(c.to_string()));
        }
        for p in ["B", "M", "E", "S"] {
            out.push(format!("{p}-{c}"));
        }
    }
    Ok(out)
}

/// Boolean legality structure of a scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraints {
    pub start: Vec<bool>,
    pub end: Vec<bool>,
    pub transition: Vec<Vec<bool>>,
}

impl Constraints {
    /// No restrictions over `n` labels.
    pub fn unconstrained(n: usize) -> Self {
        Constraints {
            start: vec![true; n],
            end: vec![true; n],
            transition: vec![vec![true; n]; n],
        }
    }
}

/// A sentence split into contiguous tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    chars: Vec<char>,
    spans: Vec<(usize, usize)>,
}

impl Segmentation {
    /// Builds from explicit spans; they must tile `0..chars.len()` in order.
    pub fn new(chars: Vec<char>, spans: Vec<(usize, usize)>) -> Result<Self> {
        let mut at = 0;
        for (i, &(s, e)) in spans.iter().enumerate() {
            if s != at || e <= s {
                return Err(Error::illegal(i, format!("span {s}..{e} does not continue at {at}")));
            }
            at = e;
        }
        if at != chars.len() {
            return Err(Error::illegal(spans.len(), "spans do not cover the sentence"));
        }
        Ok(Segmentation { chars, spans })
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        let mut chars = Vec::new();
        let mut spans = Vec::with_capacity(tokens.len());
        for t in tokens {
            let start = chars.len();
            chars.extend(t.as_ref().chars());
            spans.push((start, chars.len()));
        }
        Self::new(chars, spans)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn spans(&self) -> &[(usize, usize)] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn token(&self, i: usize) -> String {
        let (s, e) = self.spans[i];
        self.chars[s..e].iter().collect()
    }

    pub fn tokens(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.token(i)).collect()
    }
}

/// Positional labels for one span of length `k`.
fn span_positionals(k: usize, out: &mut Vec<Positional>) {
    if k == 1 {
        out.push(Positional::S);
    } else {
        out.push(Positional::B);
        out.extend(std::iter::repeat_n(Positional::M, k - 2));
        out.push(Positional::E);
    }
}

pub fn encode_bmes(seg: &Segmentation) -> Vec<Positional> {
    let mut out = Vec::with_capacity(seg.chars.len());
    for &(s, e) in &seg.spans {
        span_positionals(e - s, &mut out);
    }
    out
}

/// Rebuilds spans from positional labels carrying optional categories.
fn spans_from_labels(
    labels: &[(Positional, Option<&str>)],
    allow_outside: bool,
) -> Result<Vec<(usize, usize, Option<String>)>> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for (t, &(p, c)) in labels.iter().enumerate() {
        if t == 0 && !p.can_start() {
            return Err(Error::illegal(t, format!("`{p}` cannot open a sequence")));
        }
        if t > 0 && !legal_pair(labels[t - 1], (p, c)) {
            return Err(Error::illegal(t, format!("`{p}` cannot follow `{}`", labels[t - 1].0)));
        }
        match p {
            Positional::B => open = Some(t),
            Positional::M => {}
            Positional::E => {
                let s = open.take().expect("legality checked");
                out.push((s, t + 1, c.map(str::to_string)));
            }
            Positional::S => out.push((t, t + 1, c.map(str::to_string))),
            Positional::O => {
                if !allow_outside {
                    return Err(Error::illegal(t, "`O` is not part of this scheme"));
                }
            }
        }
    }
    if open.is_some() {
        return Err(Error::illegal(labels.len() - 1, "sequence ends inside a token"));
    }
    Ok(out)
}

pub fn decode_bmes(chars: &[char], labels: &[Positional]) -> Result<Segmentation> {
    if chars.len() != labels.len() {
        return Err(Error::SpanMismatch {
            expected: chars.len(),
            found: labels.len(),
        });
    }
    let pairs: Vec<_> = labels.iter().map(|&p| (p, None)).collect();
    let spans = spans_from_labels(&pairs, false)?
        .into_iter()
        .map(|(s, e, _)| (s, e))
        .collect();
    Segmentation::new(chars.to_vec(), spans)
}

/// A segmentation with one category per token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSegmentation {
    pub segmentation: Segmentation,
    pub tags: Vec<String>,
}

impl TaggedSegmentation {
    pub fn pairs(&self) -> Vec<(String, String)> {
        self.segmentation
            .tokens()
            .into_iter()
            .zip(self.tags.iter().cloned())
            .collect()
    }
}

pub fn encode_cross<S: AsRef<str>>(seg: &Segmentation, tags: &[S]) -> Result<Vec<String>> {
    if tags.len() != seg.len() {
        return Err(Error::SpanMismatch {
            expected: seg.len(),
            found: tags.len(),
        });
    }
    let mut pos = Vec::with_capacity(seg.chars.len());
    let mut out = Vec::with_capacity(seg.chars.len());
    for (&(s, e), tag) in seg.spans.iter().zip(tags) {
        pos.clear();
        span_positionals(e - s, &mut pos);
        out.extend(pos.iter().map(|p| format!("{p}-{}", tag.as_ref())));
    }
    Ok(out)
}

pub fn decode_cross<S: AsRef<str>>(chars: &[char], labels: &[S]) -> Result<TaggedSegmentation> {
    if chars.len() != labels.len() {
        return Err(Error::SpanMismatch {
            expected: chars.len(),
            found: labels.len(),
        });
    }
    let parsed = labels
        .iter()
        .map(|l| split_label(l.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    if let Some(t) = parsed.iter().position(|(_, c)| c.is_none()) {
        return Err(Error::illegal(t, "cross-label without category"));
    }
    let spans = spans_from_labels(&parsed, false)?;
    let tags = spans.iter().map(|(_, _, c)| c.clone().expect("checked")).collect();
    let segmentation = Segmentation::new(
        chars.to_vec(),
        spans.into_iter().map(|(s, e, _)| (s, e)).collect(),
    )?;
    Ok(TaggedSegmentation { segmentation, tags })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub start: usize,
    pub end: usize,
    pub category: String,
}

impl Entity {
    pub fn text(&self, chars: &[char]) -> String {
        chars[self.start..self.end].iter().collect()
    }
}

pub fn decode_ner<S: AsRef<str>>(labels: &[S]) -> Result<Vec<Entity>> {
    let parsed = labels
        .iter()
        .map(|l| split_label(l.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    if let Some(t) = parsed
        .iter()
        .position(|(p, c)| c.is_none() && *p != Positional::O)
    {
        return Err(Error::illegal(t, "entity label without category"));
    }
    Ok(spans_from_labels(&parsed, true)?
        .into_iter()
        .map(|(start, end, c)| Entity {
            start,
            end,
            category: c.expect("checked"),
        })
        .collect())
}

/// Per-character NER labels for a set of non-overlapping entities.
pub fn encode_ner(len: usize, entities: &[Entity]) -> Vec<String> {
    let mut out = vec!["O".to_string(); len];
    let mut pos = Vec::new();
    for e in entities {
        pos.clear();
        span_positionals(e.end - e.start, &mut pos);
        for (t, p) in (e.start..e.end).zip(&pos) {
            out[t] = format!("{p}-{}", e.category);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Positional::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn bmes_football_sentence() {
        let seg = Segmentation::from_tokens(&["我", "喜欢", "踢", "足球"]).unwrap();
        assert_eq!(encode_bmes(&seg), vec![S, B, E, S, B, E]);
        let back = decode_bmes(seg.chars(), &encode_bmes(&seg)).unwrap();
        assert_eq!(back, seg);
    }

    #[test]
    fn bmes_single_and_long_tokens() {
        assert_eq!(encode_bmes(&Segmentation::from_tokens(&["我"]).unwrap()), vec![S]);
        assert_eq!(
            encode_bmes(&Segmentation::from_tokens(&["长江大桥"]).unwrap()),
            vec![B, M, M, E]
        );
    }

    #[test]
    fn bmes_decode_single_token() {
        let seg = decode_bmes(&chars("南京市"), &[B, M, E]).unwrap();
        assert_eq!(seg.tokens(), vec!["南京市"]);
    }

    #[test]
    fn bmes_rejects_m_at_start() {
        assert!(matches!(
            decode_bmes(&chars("a"), &[M]),
            Err(Error::IllegalSequence { position: 0, .. })
        ));
        assert!(decode_bmes(&chars("ab"), &[B, S]).is_err());
        assert!(decode_bmes(&chars("ab"), &[S, B]).is_err());
        assert!(decode_bmes(&chars("a"), &[O]).is_err());
    }

    #[test]
    fn cross_encode_and_mismatch() {
        let seg = Segmentation::from_tokens(&["足球"]).unwrap();
        assert_eq!(encode_cross(&seg, &["NN"]).unwrap(), vec!["B-NN", "E-NN"]);
        let err = decode_cross(&chars("足球"), &["B-NN", "E-VV"]).unwrap_err();
        assert!(matches!(err, Error::IllegalSequence { position: 1, .. }));
    }

    #[test]
    fn ner_decoding() {
        let e = decode_ner(&["B-LOC", "E-LOC", "O"]).unwrap();
        assert_eq!(
            e,
            vec![Entity {
                start: 0,
                end: 2,
                category: "LOC".into()
            }]
        );
        assert!(decode_ner(&["O", "O", "O"]).unwrap().is_empty());
        let two = decode_ner(&["S-PER", "S-PER"]).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!((two[0].start, two[0].end, two[1].start, two[1].end), (0, 1, 1, 2));
        assert!(decode_ner(&["B-LOC", "O"]).is_err());
        assert!(decode_ner(&["B-LOC", "E-PER"]).is_err());
    }

    #[test]
    fn scheme_sizes_and_order() {
        let cws = LabelScheme::cws();
        assert_eq!(cws.labels(), &["B", "E", "M", "S"]);
        let pos = LabelScheme::pos(&["VV", "NN", "PN"]).unwrap();
        assert_eq!(pos.len(), 12);
        let ner = LabelScheme::ner(&["PER", "LOC"]).unwrap();
        assert_eq!(ner.len(), 9);
        assert_eq!(ner.categories(), vec!["LOC", "PER"]);
        let b_nn = pos.index_of("B-NN").unwrap();
        let e_nn = pos.index_of("E-NN").unwrap();
        let e_vv = pos.index_of("E-VV").unwrap();
        assert!(pos.legal_transition(b_nn, e_nn));
        assert!(!pos.legal_transition(b_nn, e_vv));
        assert!(!pos.legal_start(e_nn));
    }

    #[test]
    fn scheme_serde_round_trip() {
        let ner = LabelScheme::ner(&["PER", "LOC"]).unwrap();
        let json = serde_json::to_string(&ner).unwrap();
        let back: LabelScheme = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ner);
        assert_eq!(back.index_of("S-PER").unwrap(), ner.index_of("S-PER").unwrap());
    }

    #[test]
    fn segmentation_rejects_gaps() {
        assert!(Segmentation::new(chars("abc"), vec![(0, 1), (2, 3)]).is_err());
        assert!(Segmentation::new(chars("abc"), vec![(0, 1)]).is_err());
    }
}
