use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::conll::{split_sense, Sentence};
use crate::vocab::InputColumns;

pub type LabelId = usize;

pub const NONE_ID: LabelId = 0;

/// One entry of the unified inventory. Senses live in their own variant so
/// a sense suffix such as `01` can never collide with a role string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    None,
    Role(String),
    Sense(String),
}

impl Label {
    pub fn is_none(&self) -> bool {
        matches!(self, Label::None)
    }
}

/// `None`, then roles in lexical order, then senses in lexical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Label>", into = "Vec<Label>")]
pub struct LabelSpace {
    labels: Vec<Label>,
    index: HashMap<Label, LabelId>,
}

impl From<Vec<Label>> for LabelSpace {
    fn from(labels: Vec<Label>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        LabelSpace { labels, index }
    }
}

impl From<LabelSpace> for Vec<Label> {
    fn from(s: LabelSpace) -> Self {
        s.labels
    }
}

impl LabelSpace {
    pub fn new<R, S>(roles: R, senses: S) -> Self
    where
        R: IntoIterator<Item = String>,
        S: IntoIterator<Item = String>,
    {
        let roles: BTreeSet<String> = roles.into_iter().collect();
        let senses: BTreeSet<String> = senses.into_iter().collect();
        let mut labels = vec![Label::None];
        labels.extend(roles.into_iter().map(Label::Role));
        labels.extend(senses.into_iter().map(Label::Sense));
        LabelSpace::from(labels)
    }

    /// N_r.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, id: LabelId) -> &Label {
        &self.labels[id]
    }

    pub fn id(&self, label: &Label) -> Option<LabelId> {
        self.index.get(label).copied()
    }

    pub fn role_id(&self, role: &str) -> Option<LabelId> {
        self.id(&Label::Role(role.to_owned()))
    }

    pub fn sense_id(&self, sense: &str) -> Option<LabelId> {
        self.id(&Label::Sense(sense.to_owned()))
    }

    /// Permitted labels on sense pairs: None and every sense.
    pub fn sense_mask(&self) -> Vec<bool> {
        self.labels
            .iter()
            .map(|l| matches!(l, Label::None | Label::Sense(_)))
            .collect()
    }

    /// Permitted labels on role pairs: None and every role.
    pub fn role_mask(&self) -> Vec<bool> {
        self.labels
            .iter()
            .map(|l| matches!(l, Label::None | Label::Role(_)))
            .collect()
    }
}

/// Sense suffix of a PRED value.
pub fn sense_of(pred: &str) -> &str {
    split_sense(pred).1
}

pub fn build_label_space(corpus: &[Sentence]) -> LabelSpace {
    let mut roles = BTreeSet::new();
    let mut senses = BTreeSet::new();
    for t in corpus.iter().flat_map(|s| &s.tokens) {
        for role in t.apreds.iter().flatten() {
            roles.insert(role.clone());
        }
        if t.fillpred {
            if let Some(pred) = &t.pred {
                senses.insert(sense_of(pred).to_owned());
            }
        }
    }
    LabelSpace::new(roles, senses)
}

/// Sense counts per lemma, used when the scorer cannot supply a sense.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseLexicon {
    by_lemma: BTreeMap<String, BTreeMap<String, usize>>,
    overall: BTreeMap<String, usize>,
}

fn most_frequent(counts: &BTreeMap<String, usize>) -> Option<&str> {
    // max_by_key keeps the last maximum; reversing prefers the smallest key
    counts
        .iter()
        .rev()
        .max_by_key(|(_, c)| **c)
        .map(|(s, _)| s.as_str())
}

impl SenseLexicon {
    pub fn build(corpus: &[Sentence], columns: InputColumns) -> Self {
        let mut lex = SenseLexicon::default();
        for t in corpus.iter().flat_map(|s| &s.tokens) {
            if !t.fillpred {
                continue;
            }
            let Some(pred) = &t.pred else { continue };
            let sense = sense_of(pred).to_owned();
            *lex.by_lemma
                .entry(columns.lemma(t).to_owned())
                .or_default()
                .entry(sense.clone())
                .or_insert(0) += 1;
            *lex.overall.entry(sense).or_insert(0) += 1;
        }
        lex
    }

    pub fn knows(&self, lemma: &str) -> bool {
        self.by_lemma.contains_key(lemma)
    }

    /// Most frequent sense overall; ties go to the lexically smallest.
    pub fn global_sense(&self) -> Option<&str> {
        most_frequent(&self.overall)
    }

    /// Most frequent sense of `lemma`, or the global one for unseen lemmas.
    pub fn fallback(&self, lemma: &str) -> Option<&str> {
        self.by_lemma
            .get(lemma)
            .and_then(most_frequent)
            .or_else(|| self.global_sense())
    }
}
