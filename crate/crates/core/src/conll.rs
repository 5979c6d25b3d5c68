//! Reader and writer for the CoNLL-2008 and CoNLL-2009 shared-task formats.
//!
//! CoNLL-2009 rows carry 14 fixed columns followed by one APRED column per
//! predicate of the sentence:
//!
//! *ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL PDEPREL FILLPRED PRED APRED…*
//!
//! CoNLL-2008 rows carry 11 fixed columns followed by the ARG columns:
//!
//! *ID FORM LEMMA GPOS PPOS SPLIT_FORM SPLIT_LEMMA PPOSS HEAD DEPREL PRED ARG…*
//!
//! For 2008 input, LEMMA fills both lemma fields, GPOS is the gold POS, PPOS
//! the predicted POS, HEAD/DEPREL fill both the gold and predicted syntax
//! fields, and the three split columns are kept verbatim in [`Token::extra`].
//! FILLPRED is implied by a non-empty PRED.
//!
//! Sentences are separated by blank lines. Input may use LF or CRLF line
//! endings; output always uses LF, tab separators, and a blank line after
//! every sentence.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const EMPTY: &str = "_";

/// Column layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Format {
    Conll2008,
    Conll2009,
}

impl Format {
    fn fixed_columns(self) -> usize {
        match self {
            Format::Conll2008 => 11,
            Format::Conll2009 => 14,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conll2008" => Ok(Format::Conll2008),
            "conll2009" => Ok(Format::Conll2009),
            _ => Err(format!("unknown format '{s}' (expected conll2008 or conll2009)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Conll2008 => "conll2008",
            Format::Conll2009 => "conll2009",
        })
    }
}

#[derive(Debug, Error)]
pub enum ConllError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected at least {expected} columns, found {found}")]
    TooFewColumns {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: row has {found} columns but the sentence's first row has {expected}")]
    InconsistentColumns {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid token id '{value}'")]
    InvalidId { line: usize, value: String },
    #[error("line {line}: token ids must be contiguous from 1 (expected {expected}, found {found})")]
    NonContiguousId {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid head '{value}'")]
    InvalidHead { line: usize, value: String },
    #[error("line {line}: invalid FILLPRED value '{value}'")]
    InvalidFillpred { line: usize, value: String },
    #[error("line {line}: PRED is filled but FILLPRED is not set")]
    PredWithoutFillpred { line: usize },
    #[error("sentence starting at line {line}: {predicates} predicates but {apreds} argument columns")]
    ApredCount {
        line: usize,
        predicates: usize,
        apreds: usize,
    },
}

/// One row of a CoNLL file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub plemma: String,
    pub pos: String,
    pub ppos: String,
    pub feat: String,
    pub pfeat: String,
    pub head: Option<usize>,
    pub phead: Option<usize>,
    pub deprel: String,
    pub pdeprel: String,
    pub fillpred: bool,
    /// Predicate sense, e.g. `prevent.01`.
    pub pred: Option<String>,
    /// One slot per predicate of the sentence, in sentence order.
    pub apreds: Vec<Option<String>>,
    /// Format-specific columns copied through unchanged.
    pub extra: Vec<String>,
}

impl Token {
    /// A token with every column empty apart from id and form.
    pub fn new(id: usize, form: impl Into<String>) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: EMPTY.into(),
            plemma: EMPTY.into(),
            pos: EMPTY.into(),
            ppos: EMPTY.into(),
            feat: EMPTY.into(),
            pfeat: EMPTY.into(),
            head: None,
            phead: None,
            deprel: EMPTY.into(),
            pdeprel: EMPTY.into(),
            fillpred: false,
            pred: None,
            apreds: Vec::new(),
            extra: Vec::new(),
        }
    }
}

/// Splits a PRED value into its lemma part and sense suffix
/// (`"prevent.01"` → `(Some("prevent"), "01")`).
pub fn split_sense(pred: &str) -> (Option<&str>, &str) {
    match pred.rsplit_once('.') {
        Some((lemma, sense)) if !lemma.is_empty() && !sense.is_empty() => (Some(lemma), sense),
        _ => (None, pred),
    }
}

/// Predicate-argument structure of one predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateFrame {
    /// 1-based token position.
    pub position: usize,
    /// Sense suffix, e.g. `01`.
    pub sense: String,
    /// Lemma part of the emitted PRED value; `None` emits the bare sense.
    pub lemma: Option<String>,
    /// `(argument position, role)` sorted by position.
    pub arguments: Vec<(usize, String)>,
}

impl PredicateFrame {
    pub fn pred_string(&self) -> String {
        match &self.lemma {
            Some(l) => format!("{l}.{}", self.sense),
            None => self.sense.clone(),
        }
    }
}

/// All predicate frames of a sentence, sorted by predicate position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SemanticAnnotation {
    pub frames: Vec<PredicateFrame>,
}

/// A sentence without the virtual root; positions are 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    /// Number of words, excluding the virtual root.
    pub fn n_words(&self) -> usize {
        self.tokens.len()
    }

    /// Length including the virtual root.
    pub fn len_with_root(&self) -> usize {
        self.tokens.len() + 1
    }

    /// Token at a 1-based position.
    pub fn token(&self, position: usize) -> &Token {
        &self.tokens[position - 1]
    }

    /// Positions flagged as predicates, in sentence order.
    pub fn predicate_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|t| t.fillpred)
            .map(|t| t.id)
            .collect()
    }

    /// Role of `argument` for the predicate at `predicate`, if annotated.
    pub fn role(&self, predicate: usize, argument: usize) -> Option<&str> {
        let k = self.predicate_index(predicate)?;
        self.token(argument).apreds.get(k)?.as_deref()
    }

    /// Index of a predicate among the sentence's predicates (its APRED column).
    pub fn predicate_index(&self, predicate: usize) -> Option<usize> {
        self.predicate_positions().iter().position(|&p| p == predicate)
    }

    /// The gold annotation carried by the PRED/APRED columns. Predicates
    /// whose PRED is empty get an empty sense.
    pub fn annotation(&self) -> SemanticAnnotation {
        let preds = self.predicate_positions();
        let frames = preds
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let (lemma, sense) = match &self.token(p).pred {
                    Some(s) => {
                        let (l, s) = split_sense(s);
                        (l.map(str::to_owned), s.to_owned())
                    }
                    None => (None, String::new()),
                };
                let arguments = self
                    .tokens
                    .iter()
                    .filter_map(|t| {
                        t.apreds
                            .get(k)
                            .and_then(|a| a.as_ref())
                            .map(|r| (t.id, r.clone()))
                    })
                    .collect();
                PredicateFrame {
                    position: p,
                    sense,
                    lemma,
                    arguments,
                }
            })
            .collect();
        SemanticAnnotation { frames }
    }

    /// Removes all FILLPRED/PRED/APRED content.
    pub fn clear_semantics(&mut self) {
        for t in &mut self.tokens {
            t.fillpred = false;
            t.pred = None;
            t.apreds.clear();
        }
    }

    /// Overwrites FILLPRED/PRED/APRED with `annotation`; all other columns
    /// are left untouched.
    pub fn apply_annotation(&mut self, annotation: &SemanticAnnotation) {
        let mut frames: Vec<&PredicateFrame> = annotation.frames.iter().collect();
        frames.sort_by_key(|f| f.position);
        let n_preds = frames.len();
        for t in &mut self.tokens {
            t.fillpred = false;
            t.pred = None;
            t.apreds = vec![None; n_preds];
        }
        for (k, frame) in frames.iter().enumerate() {
            let t = &mut self.tokens[frame.position - 1];
            t.fillpred = true;
            t.pred = Some(frame.pred_string());
            for (arg, role) in &frame.arguments {
                self.tokens[arg - 1].apreds[k] = Some(role.clone());
            }
        }
    }
}

fn opt(field: &str) -> Option<String> {
    (field != EMPTY).then(|| field.to_owned())
}

fn show(field: &Option<String>) -> &str {
    field.as_deref().unwrap_or(EMPTY)
}

fn parse_head(field: &str, line: usize) -> Result<Option<usize>, ConllError> {
    if field == EMPTY {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| ConllError::InvalidHead {
            line,
            value: field.to_owned(),
        })
}

fn show_head(head: Option<usize>) -> String {
    head.map_or_else(|| EMPTY.to_owned(), |h| h.to_string())
}

fn split_columns(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn parse_row(cols: &[&str], format: Format, line: usize) -> Result<Token, ConllError> {
    let fixed = format.fixed_columns();
    if cols.len() < fixed {
        return Err(ConllError::TooFewColumns {
            line,
            expected: fixed,
            found: cols.len(),
        });
    }
    let id = cols[0].parse().map_err(|_| ConllError::InvalidId {
        line,
        value: cols[0].to_owned(),
    })?;
    let s = |i: usize| cols[i].to_owned();
    let apreds = cols[fixed..].iter().map(|c| opt(c)).collect();
    let token = match format {
        Format::Conll2009 => {
            let fillpred = match cols[12] {
                "Y" => true,
                EMPTY => false,
                v => {
                    return Err(ConllError::InvalidFillpred {
                        line,
                        value: v.to_owned(),
                    })
                }
            };
            let pred = opt(cols[13]);
            if pred.is_some() && !fillpred {
                return Err(ConllError::PredWithoutFillpred { line });
            }
            Token {
                id,
                form: s(1),
                lemma: s(2),
                plemma: s(3),
                pos: s(4),
                ppos: s(5),
                feat: s(6),
                pfeat: s(7),
                head: parse_head(cols[8], line)?,
                phead: parse_head(cols[9], line)?,
                deprel: s(10),
                pdeprel: s(11),
                fillpred,
                pred,
                apreds,
                extra: Vec::new(),
            }
        }
        Format::Conll2008 => {
            let head = parse_head(cols[8], line)?;
            let pred = opt(cols[10]);
            Token {
                id,
                form: s(1),
                lemma: s(2),
                plemma: s(2),
                pos: s(3),
                ppos: s(4),
                feat: EMPTY.into(),
                pfeat: EMPTY.into(),
                head,
                phead: head,
                deprel: s(9),
                pdeprel: s(9),
                fillpred: pred.is_some(),
                pred,
                apreds,
                extra: vec![s(5), s(6), s(7)],
            }
        }
    };
    Ok(token)
}

fn finish_sentence(
    rows: &mut Vec<Token>,
    start_line: usize,
    out: &mut Vec<Sentence>,
) -> Result<(), ConllError> {
    if rows.is_empty() {
        return Ok(());
    }
    let predicates = rows.iter().filter(|t| t.fillpred).count();
    let apreds = rows[0].apreds.len();
    if predicates != apreds {
        return Err(ConllError::ApredCount {
            line: start_line,
            predicates,
            apreds,
        });
    }
    out.push(Sentence {
        tokens: std::mem::take(rows),
    });
    Ok(())
}

/// Reads every sentence from `reader`.
pub fn parse_conll<R: BufRead>(reader: R, format: Format) -> Result<Vec<Sentence>, ConllError> {
    let mut sentences = Vec::new();
    let mut rows: Vec<Token> = Vec::new();
    let mut start_line = 0;
    let mut width = 0;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            finish_sentence(&mut rows, start_line, &mut sentences)?;
            continue;
        }
        let cols = split_columns(line);
        if rows.is_empty() {
            start_line = lineno;
            width = cols.len();
        } else if cols.len() != width {
            return Err(ConllError::InconsistentColumns {
                line: lineno,
                expected: width,
                found: cols.len(),
            });
        }
        let token = parse_row(&cols, format, lineno)?;
        if token.id != rows.len() + 1 {
            return Err(ConllError::NonContiguousId {
                line: lineno,
                expected: rows.len() + 1,
                found: token.id,
            });
        }
        rows.push(token);
    }
    finish_sentence(&mut rows, start_line, &mut sentences)?;
    Ok(sentences)
}

pub fn parse_str(text: &str, format: Format) -> Result<Vec<Sentence>, ConllError> {
    parse_conll(text.as_bytes(), format)
}

fn row_columns(t: &Token, format: Format) -> Vec<String> {
    let mut cols: Vec<String> = match format {
        Format::Conll2009 => vec![
            t.id.to_string(),
            t.form.clone(),
            t.lemma.clone(),
            t.plemma.clone(),
            t.pos.clone(),
            t.ppos.clone(),
            t.feat.clone(),
            t.pfeat.clone(),
            show_head(t.head),
            show_head(t.phead),
            t.deprel.clone(),
            t.pdeprel.clone(),
            if t.fillpred { "Y".into() } else { EMPTY.into() },
            show(&t.pred).to_owned(),
        ],
        Format::Conll2008 => {
            let extra = if t.extra.len() == 3 {
                t.extra.clone()
            } else {
                vec![t.form.clone(), t.plemma.clone(), t.ppos.clone()]
            };
            let mut c = vec![
                t.id.to_string(),
                t.form.clone(),
                t.lemma.clone(),
                t.pos.clone(),
                t.ppos.clone(),
            ];
            c.extend(extra);
            c.extend([show_head(t.head), t.deprel.clone(), show(&t.pred).to_owned()]);
            c
        }
    };
    cols.extend(t.apreds.iter().map(|a| show(a).to_owned()));
    cols
}

pub fn write_conll<W: Write>(
    mut writer: W,
    sentences: &[Sentence],
    format: Format,
) -> io::Result<()> {
    for s in sentences {
        for t in &s.tokens {
            writeln!(writer, "{}", row_columns(t, format).join("\t"))?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn to_string(sentences: &[Sentence], format: Format) -> String {
    let mut buf = Vec::new();
    write_conll(&mut buf, sentences, format).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 input yields utf-8 output")
}

#[cfg(test)]
mod tests {
    use super::*;

    const GENE_SENTENCE: &str = include_str!("../tests/fixtures/gene_sentence.conll09");
    const SMALL08: &str = include_str!("../tests/fixtures/small.conll08");

    #[test]
    fn gene_sentence_predicates_and_arcs() {
        let sents = parse_str(GENE_SENTENCE, Format::Conll2009).unwrap();
        assert_eq!(sents.len(), 1);
        let s = &sents[0];
        assert_eq!(s.n_words(), 11);
        assert_eq!(s.len_with_root(), 12);
        let ann = s.annotation();
        let senses: Vec<(String, &str)> = ann
            .frames
            .iter()
            .map(|f| (s.token(f.position).form.clone(), f.sense.as_str()))
            .collect();
        assert_eq!(
            senses,
            vec![("prevent".to_owned(), "01"), ("fertilizing".to_owned(), "01")]
        );
        assert_eq!(s.role(5, 2), Some("A0"));
        assert_eq!(s.role(9, 10), Some("A1"));
        assert_eq!(s.role(5, 10), None);
    }

    #[test]
    fn two_token_roundtrip() {
        let text = "1\tJohn\tjohn\tjohn\tNNP\tNNP\t_\t_\t2\t2\tSBJ\tSBJ\t_\t_\tA0\n\
                    2\tsleeps\tsleep\tsleep\tVBZ\tVBZ\t_\t_\t0\t0\tROOT\tROOT\tY\tsleep.01\t_\n\n";
        let sents = parse_str(text, Format::Conll2009).unwrap();
        assert_eq!(to_string(&sents, Format::Conll2009), text);
        assert_eq!(sents[0].role(2, 1), Some("A0"));
    }

    #[test]
    fn empty_input() {
        assert!(parse_str("", Format::Conll2009).unwrap().is_empty());
        assert!(parse_str("\n\n", Format::Conll2008).unwrap().is_empty());
    }

    #[test]
    fn crlf_accepted_lf_emitted() {
        let crlf = GENE_SENTENCE.replace('\n', "\r\n");
        let sents = parse_str(&crlf, Format::Conll2009).unwrap();
        assert_eq!(to_string(&sents, Format::Conll2009), GENE_SENTENCE);
    }

    #[test]
    fn conll2008_roundtrip() {
        let sents = parse_str(SMALL08, Format::Conll2008).unwrap();
        assert_eq!(to_string(&sents, Format::Conll2008), SMALL08);
        assert!(sents.iter().any(|s| !s.predicate_positions().is_empty()));
    }

    #[test]
    fn zero_predicate_sentence_has_fixed_columns_only() {
        let mut s = parse_str(GENE_SENTENCE, Format::Conll2009).unwrap().remove(0);
        s.clear_semantics();
        let out = to_string(&[s], Format::Conll2009);
        for line in out.lines().filter(|l| !l.is_empty()) {
            assert_eq!(line.split('\t').count(), 14);
        }
    }

    #[test]
    fn apply_annotation_touches_only_semantic_columns() {
        let original = parse_str(GENE_SENTENCE, Format::Conll2009).unwrap().remove(0);
        let mut s = original.clone();
        s.apply_annotation(&SemanticAnnotation {
            frames: vec![PredicateFrame {
                position: 7,
                sense: "02".into(),
                lemma: Some("plant".into()),
                arguments: vec![(6, "AM-X".into())],
            }],
        });
        let before = to_string(&[original], Format::Conll2009);
        let after = to_string(&[s], Format::Conll2009);
        for (a, b) in before.lines().zip(after.lines()) {
            let (a, b): (Vec<_>, Vec<_>) = (a.split('\t').collect(), b.split('\t').collect());
            if a.len() > 1 {
                assert_eq!(a[..12], b[..12]);
            }
        }
        assert!(after.contains("Y\tplant.02"));
    }

    #[test]
    fn annotation_reapplied_is_identity() {
        let sents = parse_str(GENE_SENTENCE, Format::Conll2009).unwrap();
        let mut s = sents[0].clone();
        let ann = s.annotation();
        s.apply_annotation(&ann);
        assert_eq!(s, sents[0]);
    }

    #[test]
    fn malformed_rows_report_lines() {
        let bad_id = "x\tJohn\t_\t_\t_\t_\t_\t_\t0\t0\t_\t_\t_\t_\n";
        assert!(matches!(
            parse_str(bad_id, Format::Conll2009),
            Err(ConllError::InvalidId { line: 1, .. })
        ));

        let ragged = "1\ta\t_\t_\t_\t_\t_\t_\t0\t0\t_\t_\t_\t_\n2\tb\t_\t_\t_\t_\t_\t_\t1\t1\t_\t_\t_\t_\t_\n";
        assert!(matches!(
            parse_str(ragged, Format::Conll2009),
            Err(ConllError::InconsistentColumns { line: 2, .. })
        ));

        let missing_apred = "1\tgo\t_\t_\t_\t_\t_\t_\t0\t0\t_\t_\tY\tgo.01\n";
        assert!(matches!(
            parse_str(missing_apred, Format::Conll2009),
            Err(ConllError::ApredCount { line: 1, .. })
        ));

        let short = "1\tgo\t_\n";
        assert!(matches!(
            parse_str(short, Format::Conll2009),
            Err(ConllError::TooFewColumns { line: 1, .. })
        ));

        let gap = "1\ta\t_\t_\t_\t_\t_\t_\t0\t0\t_\t_\t_\t_\n3\tb\t_\t_\t_\t_\t_\t_\t1\t1\t_\t_\t_\t_\n";
        assert!(matches!(
            parse_str(gap, Format::Conll2009),
            Err(ConllError::NonContiguousId { line: 2, .. })
        ));

        let orphan_pred = "1\tgo\t_\t_\t_\t_\t_\t_\t0\t0\t_\t_\t_\tgo.01\n";
        assert!(matches!(
            parse_str(orphan_pred, Format::Conll2009),
            Err(ConllError::PredWithoutFillpred { line: 1 })
        ));
    }

    #[test]
    fn split_sense_cases() {
        assert_eq!(split_sense("prevent.01"), (Some("prevent"), "01"));
        assert_eq!(split_sense("a.b.02"), (Some("a.b"), "02"));
        assert_eq!(split_sense("bare"), (None, "bare"));
        assert_eq!(split_sense("%.01"), (Some("%"), "01"));
    }
}
