//! Character vocabulary and the corpus-tag registry.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::Task;

pub const PAD: usize = 0;
pub const UNK: usize = 1;

/// A corpus criterion; its id is an ordinary row of the embedding table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusTag {
    pub name: String,
    pub task: Task,
    pub vocab_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tags: Vec<CorpusTag>,
    chars: Vec<char>,
    char_ids: HashMap<char, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tags: Vec<(String, Task)>,
    chars: String,
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabRepr) -> Result<Self> {
        let v = Vocabulary::new(&r.tags, r.chars.chars())?;
        if v.chars.len() != r.chars.chars().count() {
            return Err(Error::CorruptContainer("duplicate vocabulary characters".into()));
        }
        Ok(v)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tags: v.tags.into_iter().map(|t| (t.name, t.task)).collect(),
            chars: v.chars.into_iter().collect(),
        }
    }
}

impl Vocabulary {
    /// Layout: PAD, UNK, the tags in the given order, then the distinct
    /// characters in code-point order.
    pub fn new<S: AsRef<str>>(tags: &[(S, Task)], chars: impl IntoIterator<Item = char>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut registry = Vec::with_capacity(tags.len());
        for (i, (name, task)) in tags.iter().enumerate() {
            let name = name.as_ref();
            if name.is_empty() || !seen.insert(name.to_string()) {
                return Err(Error::Config(format!("duplicate or empty corpus tag `{name}`")));
            }
            registry.push(CorpusTag {
                name: name.to_string(),
                task: *task,
                vocab_id: 2 + i,
            });
        }
        let chars: Vec<char> = chars.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let base = 2 + registry.len();
        let char_ids = chars.iter().enumerate().map(|(i, &c)| (c, base + i)).collect();
        Ok(Vocabulary {
            tags: registry,
            chars,
            char_ids,
        })
    }

    pub fn size(&self) -> usize {
        2 + self.tags.len() + self.chars.len()
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_ids.get(&c).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, text: &[char]) -> Vec<usize> {
        text.iter().map(|&c| self.char_id(c)).collect()
    }

    pub fn tags(&self) -> &[CorpusTag] {
        &self.tags
    }

    pub fn tag(&self, name: &str) -> Result<&CorpusTag> {
        self.tags
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::UnknownTag(name.to_string()))
    }

    /// First registered tag of a task.
    pub fn default_tag(&self, task: Task) -> Option<&CorpusTag> {
        self.tags.iter().find(|t| t.task == task)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}
