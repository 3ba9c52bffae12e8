//! Span precision/recall/F and attachment scores.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scheme::{Segmentation, Task};

/// `(start, end, label)` in character offsets; `label` is empty for plain words.
pub type Span = (usize, usize, String);

/// Exact-match span counts accumulated over sentences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCounts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SpanCounts {
    pub fn add(&mut self, gold: &[Span], predicted: &[Span]) {
        let g: HashSet<&Span> = gold.iter().collect();
        let p: HashSet<&Span> = predicted.iter().collect();
        self.correct += p.intersection(&g).count();
        self.predicted += p.len();
        self.gold += g.len();
    }

    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.gold)
    }

    /// Harmonic mean of precision and recall; 1 when both sides are empty.
    pub fn f1(&self) -> f64 {
        if self.gold == 0 && self.predicted == 0 {
            return 1.0;
        }
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn word_spans(seg: &Segmentation) -> Vec<Span> {
    seg.spans().iter().map(|&(s, e)| (s, e, String::new())).collect()
}

pub fn tagged_spans<S: AsRef<str>>(seg: &Segmentation, tags: &[S]) -> Vec<Span> {
    seg.spans()
        .iter()
        .zip(tags)
        .map(|(&(s, e), t)| (s, e, t.as_ref().to_string()))
        .collect()
}

/// Unlabelled and labelled attachment counts over gold tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentCounts {
    pub tokens: usize,
    pub heads: usize,
    pub labelled: usize,
}

impl AttachmentCounts {
    /// A gold token counts only if the prediction has a token with the same
    /// character span whose head has the same span as the gold head (ROOT
    /// matching ROOT).
    pub fn add(
        &mut self,
        gold: (&Segmentation, &[usize], &[String]),
        predicted: (&Segmentation, &[usize], &[String]),
    ) {
        let (gs, gh, gr) = gold;
        let (ps, ph, pr) = predicted;
        let head_span = |seg: &Segmentation, h: usize| if h == 0 { None } else { Some(seg.spans()[h - 1]) };
        for (i, span) in gs.spans().iter().enumerate() {
            self.tokens += 1;
            let Some(j) = ps.spans().iter().position(|s| s == span) else {
                continue;
            };
            if head_span(gs, gh[i]) == head_span(ps, ph[j]) {
                self.heads += 1;
                if gr[i] == pr[j] {
                    self.labelled += 1;
                }
            }
        }
    }

    pub fn uas(&self) -> f64 {
        ratio(self.heads, self.tokens)
    }

    pub fn las(&self) -> f64 {
        ratio(self.labelled, self.tokens)
    }
}

/// Held-out score of one corpus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Score {
    Spans(SpanCounts),
    Attachment(AttachmentCounts),
}

impl Score {
    /// Span F1 for sequence tasks, LAS for parsing; in `[0, 1]`.
    pub fn primary(&self) -> f64 {
        match self {
            Score::Spans(c) => c.f1(),
            Score::Attachment(c) => c.las(),
        }
    }

    pub fn empty(task: Task) -> Score {
        match task {
            Task::Dep => Score::Attachment(AttachmentCounts::default()),
            _ => Score::Spans(SpanCounts::default()),
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Spans(c) => write!(
                f,
                "P {:.2} R {:.2} F {:.2}",
                100.0 * c.precision(),
                100.0 * c.recall(),
                100.0 * c.f1()
            ),
            Score::Attachment(c) => write!(f, "UAS {:.2} LAS {:.2}", 100.0 * c.uas(), 100.0 * c.las()),
        }
    }
}
