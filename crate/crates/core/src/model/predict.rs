use std::collections::BTreeSet;

use super::decode::decode;
use super::network::Model;
use super::ModelError;
use crate::conll::{SemanticAnnotation, Sentence};
use crate::decomposition::{prune_candidates, reconstruct, Label, LabelId, PredLemma, TaskMode, NONE_ID};

/// Decoded labels of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub annotation: SemanticAnnotation,
    /// Every decoded `(head, dependent, label)`, None labels included.
    pub pairs: Vec<(usize, usize, LabelId)>,
    pub encoder_passes: usize,
}

impl Model {
    fn sense_mask(&self) -> Option<Vec<bool>> {
        self.config.mask_decoding.then(|| self.labels.sense_mask())
    }

    fn role_mask(&self) -> Option<Vec<bool>> {
        self.config.mask_decoding.then(|| self.labels.role_mask())
    }

    /// Dependents scored for `predicate`; all words unless pruning is on.
    pub fn candidates(&self, sentence: &Sentence, predicate: usize) -> Result<BTreeSet<usize>, ModelError> {
        match self.config.pruning {
            Some(cfg) => Ok(prune_candidates(sentence, predicate, cfg)?),
            None => Ok((1..=sentence.n_words()).collect()),
        }
    }

    /// Sense for a predicate at `position` given the decoded label: lemmas
    /// never seen in training get the overall most frequent sense, and a
    /// non-sense label falls back to the lemma's most frequent sense.
    fn choose_sense(&self, sentence: &Sentence, position: usize, decoded: LabelId) -> Option<LabelId> {
        let lemma = self.config.columns.lemma(sentence.token(position));
        let sense = if !self.lexicon.knows(lemma) {
            self.lexicon.global_sense()
        } else {
            match self.labels.label(decoded) {
                Label::Sense(s) => Some(s.as_str()),
                _ => self.lexicon.fallback(lemma),
            }
        };
        sense.and_then(|s| self.labels.sense_id(s))
    }

    /// Role labels of every word for one predicate, in one encoder pass
    /// whose indicator marks the predicate. Also returns the sense-pair
    /// label when `with_sense` is set.
    fn predicate_pass(
        &self,
        sentence: &Sentence,
        predicate: usize,
        with_sense: bool,
    ) -> Result<(Option<LabelId>, Vec<(usize, usize, LabelId)>), ModelError> {
        let inputs = self.inputs(sentence);
        let kept = self.candidates(sentence, predicate)?;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        if with_sense {
            pairs.push((0, predicate));
        }
        pairs.extend(kept.iter().map(|&w| (predicate, w)));
        let rows = self.score_pass(&inputs, Some(predicate), &pairs)?;
        let mut rows = rows.iter();
        let sense = if with_sense {
            Some(decode(rows.next().expect("sense row"), self.sense_mask().as_deref())?)
        } else {
            None
        };
        let role_mask = self.role_mask();
        let mut scored = kept.iter().zip(rows);
        let mut out = Vec::with_capacity(sentence.n_words());
        let mut next = scored.next();
        for w in 1..=sentence.n_words() {
            let label = match next {
                Some((&k, row)) if k == w => {
                    next = scored.next();
                    decode(row, role_mask.as_deref())?
                }
                _ => NONE_ID,
            };
            out.push((predicate, w, label));
        }
        Ok((sense, out))
    }

    /// Predicts PRED/APRED content. In 2009 mode the FILLPRED positions are
    /// the predicates; in 2008 mode a first pass without any predicate mark
    /// labels `(0, w)` for every word and the words given a sense become
    /// the predicates.
    pub fn predict_sentence(&self, sentence: &Sentence, mode: TaskMode) -> Result<Prediction, ModelError> {
        let mut labelled: Vec<(usize, usize, LabelId)> = Vec::new();
        let mut passes = 0;
        let predicates: Vec<usize> = match mode {
            TaskMode::Conll2009 => sentence.predicate_positions(),
            TaskMode::Conll2008 => {
                if sentence.n_words() == 0 {
                    Vec::new()
                } else {
                    let inputs = self.inputs(sentence);
                    let pairs: Vec<(usize, usize)> = (1..=sentence.n_words()).map(|w| (0, w)).collect();
                    let rows = self.score_pass(&inputs, None, &pairs)?;
                    passes += 1;
                    let mask = self.sense_mask();
                    let mut found = Vec::new();
                    for (w, row) in (1..=sentence.n_words()).zip(&rows) {
                        let k = decode(row, mask.as_deref())?;
                        let sense = match self.labels.label(k) {
                            Label::Sense(_) => self.choose_sense(sentence, w, k),
                            _ => None,
                        };
                        labelled.push((0, w, sense.unwrap_or(NONE_ID)));
                        if sense.is_some() {
                            found.push(w);
                        }
                    }
                    found
                }
            }
        };
        for &p in &predicates {
            let with_sense = mode == TaskMode::Conll2009;
            let (sense, roles) = self.predicate_pass(sentence, p, with_sense)?;
            passes += 1;
            if let Some(k) = sense {
                labelled.push((0, p, self.choose_sense(sentence, p, k).unwrap_or(k)));
            }
            labelled.extend(roles);
        }
        let annotation = reconstruct(
            sentence,
            &labelled,
            &self.labels,
            PredLemma::Column(self.config.columns),
        );
        Ok(Prediction {
            annotation,
            pairs: labelled,
            encoder_passes: passes,
        })
    }

    /// Copies of `sentences` with predicted PRED/APRED columns.
    pub fn annotate(&self, sentences: &[Sentence], mode: TaskMode) -> Result<Vec<Sentence>, ModelError> {
        sentences
            .iter()
            .map(|s| {
                let pred = self.predict_sentence(s, mode)?;
                let mut out = s.clone();
                out.apply_annotation(&pred.annotation);
                Ok(out)
            })
            .collect()
    }
}
