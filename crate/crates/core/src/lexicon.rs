//! User lexicon: forward maximum matching and the emission bias it induces.
//!
//! For every position covered by a matched lexicon word, the label the match
//! implies receives a bonus of `(max(row) - mean(row)) * w`, where `row` holds
//! the emission scores of that position.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scheme::{LabelScheme, Positional};

pub const DEFAULT_WEIGHT: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    words: BTreeSet<String>,
    max_chars: usize,
    weight: f64,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon {
            words: BTreeSet::new(),
            max_chars: 0,
            weight: DEFAULT_WEIGHT,
        }
    }
}

/// Max-match labels plus which positions came from a lexicon word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub labels: Vec<Positional>,
    pub covered: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasVector {
    pub values: Vec<f64>,
    /// Label the bias goes to; `None` where no lexicon word matched.
    pub targets: Vec<Option<Positional>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_words<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut lex = Self::new();
        for w in words {
            lex.add_word(w.as_ref())?;
        }
        Ok(lex)
    }

    /// One word per line; blank lines are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_words(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn add_word(&mut self, word: &str) -> Result<()> {
        if word.is_empty() {
            return Err(Error::EmptyWord);
        }
        self.max_chars = self.max_chars.max(word.chars().count());
        self.words.insert(word.to_string());
        Ok(())
    }

    pub fn set_weight(&mut self, w: f64) -> Result<()> {
        if w.is_nan() || w < 0.0 || !w.is_finite() {
            return Err(Error::NegativeWeight(w));
        }
        self.weight = w;
        Ok(())
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Forward, longest-first matching. Single-character entries never
    /// produce a match on their own; unmatched characters become `S`.
    pub fn max_match(&self, chars: &[char]) -> Skeleton {
        let n = chars.len();
        let mut labels = Vec::with_capacity(n);
        let mut covered = Vec::with_capacity(n);
        let mut buf = String::new();
        let mut i = 0;
        while i < n {
            let longest = self.max_chars.min(n - i);
            let hit = (2..=longest).rev().find(|&k| {
                buf.clear();
                buf.extend(&chars[i..i + k]);
                self.words.contains(&buf)
            });
            match hit {
                Some(k) => {
                    labels.push(Positional::B);
                    labels.extend(std::iter::repeat_n(Positional::M, k - 2));
                    labels.push(Positional::E);
                    covered.extend(std::iter::repeat_n(true, k));
                    i += k;
                }
                None => {
                    labels.push(Positional::S);
                    covered.push(false);
                    i += 1;
                }
            }
        }
        Skeleton { labels, covered }
    }
}

/// `b_t = (max(em[t]) - mean(em[t])) * w` at covered positions; zero elsewhere.
pub fn compute_bias(em: ArrayView2<f64>, skeleton: &Skeleton, w: f64) -> BiasVector {
    let mut values = Vec::with_capacity(em.nrows());
    let mut targets = Vec::with_capacity(em.nrows());
    for (t, row) in em.rows().into_iter().enumerate() {
        if skeleton.covered.get(t).copied().unwrap_or(false) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = row.sum() / row.len() as f64;
            values.push((max - mean) * w);
            targets.push(Some(skeleton.labels[t]));
        } else {
            values.push(0.0);
            targets.push(None);
        }
    }
    BiasVector { values, targets }
}

/// Spreads a bias vector over a scheme's labels: every label whose
/// positional prefix equals the target receives `b_t`.
pub fn bias_matrix(bias: &BiasVector, scheme: &LabelScheme) -> Array2<f64> {
    let mut m = Array2::zeros((bias.values.len(), scheme.len()));
    for (t, (&b, target)) in bias.values.iter().zip(&bias.targets).enumerate() {
        if let Some(p) = target {
            for l in 0..scheme.len() {
                if scheme.positional(l) == *p {
                    m[[t, l]] = b;
                }
            }
        }
    }
    m
}
