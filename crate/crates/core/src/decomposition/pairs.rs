use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::labels::{sense_of, Label, LabelId, LabelSpace, NONE_ID};
use super::DecompositionError;
use crate::conll::{split_sense, PredicateFrame, SemanticAnnotation, Sentence};
use crate::vocab::InputColumns;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    Sense,
    Role,
}

/// One (head, dependent) classification sample. Head 0 is the virtual root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordPairSample {
    pub head: usize,
    pub dependent: usize,
    pub kind: PairKind,
    /// `None` when the gold label is outside the label space.
    pub gold: Option<LabelId>,
}

/// Which words get a sense pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenseMode {
    /// One pair per gold predicate.
    GivenPredicates,
    /// One pair per word; non-predicates are labelled None.
    AllWords,
}

fn gold_sense(
    sentence: &Sentence,
    position: usize,
    labels: &LabelSpace,
) -> Result<Option<LabelId>, DecompositionError> {
    let t = sentence.token(position);
    if !t.fillpred {
        return Ok(Some(NONE_ID));
    }
    match &t.pred {
        Some(pred) => Ok(labels.sense_id(sense_of(pred))),
        None => Err(DecompositionError::MissingSense { position }),
    }
}

pub fn sense_pairs(
    sentence: &Sentence,
    mode: SenseMode,
    labels: &LabelSpace,
) -> Result<Vec<WordPairSample>, DecompositionError> {
    let positions: Vec<usize> = match mode {
        SenseMode::GivenPredicates => sentence.predicate_positions(),
        SenseMode::AllWords => (1..=sentence.n_words()).collect(),
    };
    positions
        .into_iter()
        .map(|p| {
            Ok(WordPairSample {
                head: 0,
                dependent: p,
                kind: PairKind::Sense,
                gold: gold_sense(sentence, p, labels)?,
            })
        })
        .collect()
}

/// `(predicate, w)` for every word `w`, the predicate itself included.
/// Words without an APRED entry for `predicate` are labelled None.
pub fn role_pairs(sentence: &Sentence, predicate: usize, labels: &LabelSpace) -> Vec<WordPairSample> {
    (1..=sentence.n_words())
        .map(|w| WordPairSample {
            head: predicate,
            dependent: w,
            kind: PairKind::Role,
            gold: match sentence.role(predicate, w) {
                Some(r) => labels.role_id(r),
                None => Some(NONE_ID),
            },
        })
        .collect()
}

/// [`role_pairs`] limited to the `retained` dependents.
pub fn role_pairs_within(
    sentence: &Sentence,
    predicate: usize,
    labels: &LabelSpace,
    retained: &BTreeSet<usize>,
) -> Vec<WordPairSample> {
    role_pairs(sentence, predicate, labels)
        .into_iter()
        .filter(|s| retained.contains(&s.dependent))
        .collect()
}

/// Where the lemma part of an emitted PRED value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredLemma {
    /// The lemma part already present in PRED, else PLEMMA.
    Original,
    /// The given lemma column.
    Column(InputColumns),
}

impl PredLemma {
    fn lemma(&self, sentence: &Sentence, position: usize) -> String {
        let t = sentence.token(position);
        match self {
            PredLemma::Original => t
                .pred
                .as_deref()
                .and_then(|p| split_sense(p).0)
                .unwrap_or(&t.plemma)
                .to_owned(),
            PredLemma::Column(c) => c.lemma(t).to_owned(),
        }
    }
}

/// Builds an annotation from labelled pairs `(head, dependent, label)`.
/// Sense pairs with a sense label create a frame; role pairs with a role
/// label attach an argument to the frame of their head. Role pairs whose
/// head has no frame are dropped.
pub fn reconstruct(
    sentence: &Sentence,
    labelled: &[(usize, usize, LabelId)],
    labels: &LabelSpace,
    lemma: PredLemma,
) -> SemanticAnnotation {
    let mut frames: Vec<PredicateFrame> = Vec::new();
    for &(head, dep, id) in labelled {
        if head != 0 {
            continue;
        }
        if let Label::Sense(sense) = labels.label(id) {
            if frames.iter().all(|f| f.position != dep) {
                frames.push(PredicateFrame {
                    position: dep,
                    sense: sense.clone(),
                    lemma: Some(lemma.lemma(sentence, dep)),
                    arguments: Vec::new(),
                });
            }
        }
    }
    for &(head, dep, id) in labelled {
        if head == 0 {
            continue;
        }
        if let Label::Role(role) = labels.label(id) {
            if let Some(f) = frames.iter_mut().find(|f| f.position == head) {
                f.arguments.push((dep, role.clone()));
            }
        }
    }
    frames.sort_by_key(|f| f.position);
    for f in &mut frames {
        f.arguments.sort_by_key(|a| a.0);
        f.arguments.dedup_by_key(|a| a.0);
    }
    SemanticAnnotation { frames }
}

/// Every gold pair of a sentence in 2009 layout: the sense pair of each
/// predicate followed by its role pairs.
pub fn gold_pairs(sentence: &Sentence, labels: &LabelSpace) -> Result<Vec<WordPairSample>, DecompositionError> {
    let mut out = Vec::new();
    for s in sense_pairs(sentence, SenseMode::GivenPredicates, labels)? {
        out.push(s);
        out.extend(role_pairs(sentence, s.dependent, labels));
    }
    Ok(out)
}
