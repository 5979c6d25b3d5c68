//! String ↔ id tables for forms, lemmas and POS tags.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::conll::{Sentence, Token};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const ROOT: &str = "<root>";

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const ROOT_ID: usize = 2;

/// Which lemma/POS columns feed the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputColumns {
    /// PLEMMA / PPOS.
    Predicted,
    /// LEMMA / POS.
    Gold,
}

impl InputColumns {
    pub fn lemma<'a>(&self, t: &'a Token) -> &'a str {
        match self {
            InputColumns::Predicted => &t.plemma,
            InputColumns::Gold => &t.lemma,
        }
    }

    pub fn pos<'a>(&self, t: &'a Token) -> &'a str {
        match self {
            InputColumns::Predicted => &t.ppos,
            InputColumns::Gold => &t.pos,
        }
    }
}

/// Dense id table with the reserved symbols at ids 0–2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Lexicon {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Lexicon {
    fn from(items: Vec<String>) -> Self {
        let index = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Lexicon { items, index }
    }
}

impl From<Lexicon> for Vec<String> {
    fn from(l: Lexicon) -> Self {
        l.items
    }
}

impl Lexicon {
    /// Reserved symbols followed by `entries` in the given order.
    pub fn with_entries<I: IntoIterator<Item = String>>(entries: I) -> Self {
        let mut items: Vec<String> = vec![PAD.into(), UNK.into(), ROOT.into()];
        for e in entries {
            if !items.contains(&e) {
                items.push(e);
            }
        }
        Lexicon::from(items)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Id of `s`, or the UNK id.
    pub fn id(&self, s: &str) -> usize {
        self.get(s).unwrap_or(UNK_ID)
    }

    pub fn item(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub forms: Lexicon,
    pub lemmas: Lexicon,
    pub pos: Lexicon,
}

fn frequent(counts: HashMap<&str, usize>, min_count: usize) -> Vec<String> {
    let mut kept: Vec<(&str, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    kept.into_iter().map(|(s, _)| s.to_owned()).collect()
}

/// Forms and lemmas seen fewer than `min_count` times map to UNK; every POS
/// tag is kept. Ids are ordered by descending frequency, then lexically.
pub fn build_vocab(corpus: &[Sentence], min_count: usize, columns: InputColumns) -> Vocabulary {
    let min_count = min_count.max(1);
    let mut forms = HashMap::new();
    let mut lemmas = HashMap::new();
    let mut pos = HashMap::new();
    for t in corpus.iter().flat_map(|s| &s.tokens) {
        *forms.entry(t.form.as_str()).or_insert(0) += 1;
        *lemmas.entry(columns.lemma(t)).or_insert(0) += 1;
        *pos.entry(columns.pos(t)).or_insert(0) += 1;
    }
    Vocabulary {
        forms: Lexicon::with_entries(frequent(forms, min_count)),
        lemmas: Lexicon::with_entries(frequent(lemmas, min_count)),
        pos: Lexicon::with_entries(frequent(pos, 1)),
    }
}
