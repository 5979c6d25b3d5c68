//! Labeled precision, recall and F1 over sense and argument items.
//!
//! A sense item is `(sentence, predicate, sense)` and an argument item is
//! `(sentence, predicate, argument, role)`. A predicted item is correct when
//! the identical item occurs in the gold corpus. Senses are compared by
//! suffix in 2009 mode and by the full `lemma.sense` string in 2008 mode.

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::conll::{split_sense, Sentence};
use crate::decomposition::TaskMode;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("corpora differ in length: {gold} gold vs {predicted} predicted sentences (first unmatched: {first})")]
    Length {
        gold: usize,
        predicted: usize,
        first: usize,
    },
    #[error("sentence {sentence} is misaligned: {reason}")]
    Misaligned { sentence: usize, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Counts {
    pub fn precision(&self) -> f64 {
        percent(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        percent(self.correct, self.gold)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    fn add(&mut self, other: Counts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: TaskMode,
    /// Senses and arguments together.
    pub semantic: Counts,
    /// Arguments only.
    pub arguments: Counts,
    pub senses: Counts,
    /// Correct senses over gold predicates, in percent.
    pub pd_precision: f64,
    /// Predicate identification and labeling; 2008 mode only.
    pub predicates: Option<Counts>,
}

fn check_alignment(gold: &[Sentence], pred: &[Sentence]) -> Result<(), EvalError> {
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.n_words() != p.n_words() {
            return Err(EvalError::Misaligned {
                sentence: i + 1,
                reason: format!("{} gold tokens vs {} predicted", g.n_words(), p.n_words()),
            });
        }
        if let Some(t) = g.tokens.iter().zip(&p.tokens).find(|(a, b)| a.form != b.form) {
            return Err(EvalError::Misaligned {
                sentence: i + 1,
                reason: format!("token {} is '{}' in gold but '{}' in prediction", t.0.id, t.0.form, t.1.form),
            });
        }
    }
    if gold.len() != pred.len() {
        return Err(EvalError::Length {
            gold: gold.len(),
            predicted: pred.len(),
            first: gold.len().min(pred.len()) + 1,
        });
    }
    Ok(())
}

type SenseItem = (usize, String);
type ArgItem = (usize, usize, String);

fn items(s: &Sentence, mode: TaskMode) -> (BTreeSet<SenseItem>, BTreeSet<ArgItem>) {
    let ann = s.annotation();
    let mut senses = BTreeSet::new();
    let mut args = BTreeSet::new();
    for f in &ann.frames {
        let pred = s.token(f.position).pred.as_deref();
        if let Some(pred) = pred {
            let key = match mode {
                TaskMode::Conll2009 => split_sense(pred).1.to_owned(),
                TaskMode::Conll2008 => pred.to_owned(),
            };
            senses.insert((f.position, key));
        }
        for (a, role) in &f.arguments {
            args.insert((f.position, *a, role.clone()));
        }
    }
    (senses, args)
}

fn count<T: Ord>(gold: &BTreeSet<T>, pred: &BTreeSet<T>) -> Counts {
    Counts {
        correct: pred.intersection(gold).count(),
        predicted: pred.len(),
        gold: gold.len(),
    }
}

pub fn score_semantic(gold: &[Sentence], pred: &[Sentence], mode: TaskMode) -> Result<EvalReport, EvalError> {
    check_alignment(gold, pred)?;
    let mut senses = Counts::default();
    let mut arguments = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        let (gs, ga) = items(g, mode);
        let (ps, pa) = items(p, mode);
        senses.add(count(&gs, &ps));
        arguments.add(count(&ga, &pa));
    }
    let mut semantic = senses;
    semantic.add(arguments);
    let predicates = match mode {
        TaskMode::Conll2008 => Some(score_predicates_2008(gold, pred)?),
        TaskMode::Conll2009 => None,
    };
    Ok(EvalReport {
        mode,
        semantic,
        arguments,
        senses,
        pd_precision: percent(senses.correct, senses.gold),
        predicates,
    })
}

/// Predicate items `(sentence, position, PRED)`; both position and the full
/// PRED string must match.
pub fn score_predicates_2008(gold: &[Sentence], pred: &[Sentence]) -> Result<Counts, EvalError> {
    check_alignment(gold, pred)?;
    let mut c = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        let (gs, _) = items(g, TaskMode::Conll2008);
        let (ps, _) = items(p, TaskMode::Conll2008);
        c.add(count(&gs, &ps));
    }
    Ok(c)
}

fn line(out: &mut String, name: &str, c: &Counts) {
    let _ = writeln!(
        out,
        "{name:<22} P {:>6.2}  R {:>6.2}  F1 {:>6.2}  ({} correct, {} predicted, {} gold)",
        c.precision(),
        c.recall(),
        c.f1(),
        c.correct,
        c.predicted,
        c.gold
    );
}

/// Aligned plain-text report.
pub fn format_report(r: &EvalReport) -> String {
    let mut out = String::new();
    line(&mut out, "semantic", &r.semantic);
    line(&mut out, "argument labeling", &r.arguments);
    match (r.mode, &r.predicates) {
        (TaskMode::Conll2008, Some(p)) => line(&mut out, "predicate labeling", p),
        _ => {
            let _ = writeln!(out, "{:<22} P {:>6.2}", "predicate sense", r.pd_precision);
        }
    }
    out
}

/// One `key<TAB>value` record per line.
pub fn format_tsv(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode\t{}", r.mode);
    let mut block = |name: &str, c: &Counts| {
        let _ = writeln!(out, "{name}_precision\t{:.4}", c.precision());
        let _ = writeln!(out, "{name}_recall\t{:.4}", c.recall());
        let _ = writeln!(out, "{name}_f1\t{:.4}", c.f1());
        let _ = writeln!(out, "{name}_correct\t{}", c.correct);
        let _ = writeln!(out, "{name}_predicted\t{}", c.predicted);
        let _ = writeln!(out, "{name}_gold\t{}", c.gold);
    };
    block("semantic", &r.semantic);
    block("argument", &r.arguments);
    block("sense", &r.senses);
    if let Some(p) = &r.predicates {
        block("predicate", p);
    }
    let _ = writeln!(out, "pd_precision\t{:.4}", r.pd_precision);
    out
}

/// Argument-labeling P/R/F1 and sense precision per configuration, sorted by
/// name.
pub fn ablation_report(rows: &[(String, EvalReport)]) -> String {
    let mut rows: Vec<&(String, EvalReport)> = rows.iter().collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("configuration".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}", "configuration", "P", "R", "F1", "PD");
    for (name, r) in rows {
        let a = &r.arguments;
        let _ = writeln!(
            out,
            "{name:<width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6.2}",
            a.precision(),
            a.recall(),
            a.f1(),
            r.pd_precision
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::conll::{parse_str, Format, PredicateFrame, SemanticAnnotation};

    fn fixture(text: &str, format: Format) -> Vec<Sentence> {
        parse_str(text, format).unwrap()
    }

    fn all_fixtures() -> Vec<(TaskMode, Vec<Sentence>)> {
        vec![
            (
                TaskMode::Conll2009,
                fixture(include_str!("../tests/fixtures/gene_sentence.conll09"), Format::Conll2009),
            ),
            (
                TaskMode::Conll2009,
                fixture(include_str!("../tests/fixtures/treebank.conll09"), Format::Conll2009),
            ),
            (
                TaskMode::Conll2008,
                fixture(include_str!("../tests/fixtures/small.conll08"), Format::Conll2008),
            ),
        ]
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 0.01
    }

    #[test]
    fn identical_corpora_score_100() {
        for (mode, c) in all_fixtures() {
            let r = score_semantic(&c, &c, mode).unwrap();
            assert_eq!(r.semantic.f1(), 100.0);
            assert_eq!(r.pd_precision, 100.0);
            if let Some(p) = r.predicates {
                assert_eq!(p.f1(), 100.0);
            }
        }
    }

    #[test]
    fn hand_fixture_two_thirds() {
        // gold: sense + 2 arcs; prediction: sense right, 1 arc right, 1 spurious
        let gold = fixture(include_str!("../tests/fixtures/eval_gold.conll09"), Format::Conll2009);
        let pred = fixture(include_str!("../tests/fixtures/eval_pred.conll09"), Format::Conll2009);
        let r = score_semantic(&gold, &pred, TaskMode::Conll2009).unwrap();
        assert_eq!(r.semantic, Counts { correct: 2, predicted: 3, gold: 3 });
        assert!(close(r.semantic.precision(), 66.67));
        assert!(close(r.semantic.recall(), 66.67));
        assert!(close(r.semantic.f1(), 66.67));
        assert_eq!(r.pd_precision, 100.0);
        assert_eq!(r.arguments, Counts { correct: 1, predicted: 2, gold: 2 });
    }

    #[test]
    fn predicate_fixture_2008() {
        let gold = fixture(include_str!("../tests/fixtures/pred_gold.conll08"), Format::Conll2008);
        let pred = fixture(include_str!("../tests/fixtures/pred_pred.conll08"), Format::Conll2008);
        let c = score_predicates_2008(&gold, &pred).unwrap();
        assert_eq!(c, Counts { correct: 1, predicted: 2, gold: 3 });
        assert!(close(c.precision(), 50.0));
        assert!(close(c.recall(), 33.33));
        assert!(close(c.f1(), 40.0));
    }

    #[test]
    fn wrong_sense_counts_nowhere() {
        let gold = fixture(include_str!("../tests/fixtures/small.conll08"), Format::Conll2008);
        let mut pred = gold.clone();
        pred[0].tokens[1].pred = Some("sleep.02".into());
        let c = score_predicates_2008(&gold, &pred).unwrap();
        assert_eq!(c, Counts { correct: 2, predicted: 3, gold: 3 });
        // 2009 keys on the suffix only, so a different lemma part still counts
        let mut pred = gold.clone();
        pred[0].tokens[1].pred = Some("slept.01".into());
        let r = score_semantic(&gold, &pred, TaskMode::Conll2009).unwrap();
        assert_eq!(r.senses.correct, 3);
        let r = score_semantic(&gold, &pred, TaskMode::Conll2008).unwrap();
        assert_eq!(r.senses.correct, 2);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let gold = fixture(include_str!("../tests/fixtures/gene_sentence.conll09"), Format::Conll2009);
        let mut pred = gold.clone();
        for s in &mut pred {
            s.apply_annotation(&SemanticAnnotation::default());
        }
        let r = score_semantic(&gold, &pred, TaskMode::Conll2009).unwrap();
        assert_eq!(r.semantic.predicted, 0);
        assert_eq!((r.semantic.precision(), r.semantic.recall(), r.semantic.f1()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn misalignment_is_reported() {
        let gold = fixture(include_str!("../tests/fixtures/treebank.conll09"), Format::Conll2009);
        let mut pred = gold.clone();
        pred[2].tokens[0].form = "Thank".into();
        assert!(matches!(
            score_semantic(&gold, &pred, TaskMode::Conll2009),
            Err(EvalError::Misaligned { sentence: 3, .. })
        ));
        assert!(matches!(
            score_semantic(&gold, &gold[..2], TaskMode::Conll2009),
            Err(EvalError::Length { first: 3, .. })
        ));
    }

    #[test]
    fn reports_render() {
        let c = fixture(include_str!("../tests/fixtures/small.conll08"), Format::Conll2008);
        let r = score_semantic(&c, &c, TaskMode::Conll2008).unwrap();
        let text = format_report(&r);
        assert!(text.contains("predicate labeling"));
        assert!(text.lines().next().unwrap().contains("F1 100.00"));
        let tsv = format_tsv(&r);
        assert!(tsv.lines().all(|l| l.split('\t').count() == 2));
        assert!(tsv.contains("semantic_f1\t100.0000"));
        assert!(tsv.contains("predicate_f1\t100.0000"));
    }

    #[test]
    fn ablation_rows_sorted() {
        let c = fixture(include_str!("../tests/fixtures/gene_sentence.conll09"), Format::Conll2009);
        let r = score_semantic(&c, &c, TaskMode::Conll2009).unwrap();
        let table = ablation_report(&[("sba".into(), r.clone()), ("full".into(), r.clone())]);
        let names: Vec<&str> = table.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(names, vec!["full", "sba"]);
        let single = ablation_report(&[("full".into(), r)]);
        assert_eq!(single.lines().count(), 2);
    }

    fn with_frames(base: &Sentence, frames: Vec<PredicateFrame>) -> Sentence {
        let mut s = base.clone();
        s.apply_annotation(&SemanticAnnotation { frames });
        s
    }

    fn frame_strategy(n: usize) -> impl Strategy<Value = Vec<PredicateFrame>> {
        prop::collection::btree_map(
            1..=n,
            (
                prop::sample::select(vec!["01", "02"]),
                prop::collection::btree_map(1..=n, prop::sample::select(vec!["A0", "A1", "AM-TMP"]), 0..4),
            ),
            0..3,
        )
        .prop_map(|m| {
            m.into_iter()
                .map(|(p, (sense, args))| PredicateFrame {
                    position: p,
                    sense: sense.into(),
                    lemma: Some("x".into()),
                    arguments: args.into_iter().map(|(a, r)| (a, r.to_owned())).collect(),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn count_identities(g in frame_strategy(9), p in frame_strategy(9)) {
            let base = &fixture(include_str!("../tests/fixtures/treebank.conll09"), Format::Conll2009)[0];
            let gold = vec![with_frames(base, g)];
            let pred = vec![with_frames(base, p)];
            for mode in [TaskMode::Conll2009, TaskMode::Conll2008] {
                let r = score_semantic(&gold, &pred, mode).unwrap();
                for c in [r.semantic, r.arguments, r.senses] {
                    prop_assert!(c.correct <= c.predicted.min(c.gold));
                    let (p, rr, f) = (c.precision(), c.recall(), c.f1());
                    prop_assert!(f >= p.min(rr) - 1e-9 && f <= p.max(rr) + 1e-9);
                }
                let same = score_semantic(&gold, &gold, mode).unwrap();
                prop_assert!(same.semantic.gold == 0 || same.semantic.f1() == 100.0);
            }
        }

        #[test]
        fn spurious_items_never_raise_precision(g in frame_strategy(9), p in frame_strategy(9), extra in 1usize..=9) {
            let base = &fixture(include_str!("../tests/fixtures/treebank.conll09"), Format::Conll2009)[0];
            let gold = vec![with_frames(base, g.clone())];
            let before = score_semantic(&gold, &[with_frames(base, p.clone())], TaskMode::Conll2009).unwrap();
            // an argument role that never occurs in gold is always spurious
            let mut more = p.clone();
            if let Some(f) = more.first_mut() {
                f.arguments.retain(|a| a.0 != extra);
                f.arguments.push((extra, "AM-NEVER".into()));
                f.arguments.sort();
                let after = score_semantic(&gold, &[with_frames(base, more)], TaskMode::Conll2009).unwrap();
                prop_assert!(after.semantic.precision() <= before.semantic.precision() + 1e-9);
                prop_assert!(after.semantic.recall() <= before.semantic.recall() + 1e-9);
            }
            // dropping a predicted frame never raises recall
            let mut fewer = p;
            if !fewer.is_empty() {
                fewer.remove(0);
                let after = score_semantic(&gold, &[with_frames(base, fewer)], TaskMode::Conll2009).unwrap();
                prop_assert!(after.semantic.recall() <= before.semantic.recall() + 1e-9);
            }
        }
    }
}
