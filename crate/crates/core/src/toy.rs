//! Deterministic synthetic corpora whose roles follow fixed local rules.
//!
//! A sentence is one to three clauses joined by `and`:
//!
//! *[det] noun [modal] verb [det] noun [adverb]*
//!
//! Every verb is a predicate whose sense is fixed by its lemma. The subject
//! noun is A0, the object noun A1, the modal AM-MOD and the adverb AM-TMP
//! (temporal) or AM-MNR (manner).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conll::{Sentence, Token};
use crate::model::ModelConfig;

const NOUNS: &[&str] = &[
    "dog", "cat", "bird", "farmer", "teacher", "child", "doctor", "river", "car", "house", "tree", "letter",
    "book", "song", "horse", "garden", "city", "friend", "baker", "window",
];
const VERBS: &[&str] = &[
    "chase", "see", "find", "build", "write", "carry", "paint", "watch", "help", "open",
];
const MODALS: &[&str] = &["can", "will", "must"];
const DETS: &[&str] = &["the", "a"];
const ADVERBS: &[(&str, &str)] = &[
    ("today", "AM-TMP"),
    ("often", "AM-TMP"),
    ("quickly", "AM-MNR"),
    ("slowly", "AM-MNR"),
];

/// Sense suffix of a toy verb lemma.
pub fn toy_sense(lemma: &str) -> &'static str {
    match VERBS.iter().position(|v| *v == lemma) {
        Some(i) if i % 3 == 0 => "02",
        _ => "01",
    }
}

struct Row {
    form: String,
    lemma: String,
    pos: &'static str,
    head: usize,
    deprel: &'static str,
}

fn row(form: &str, lemma: &str, pos: &'static str) -> Row {
    Row {
        form: form.into(),
        lemma: lemma.into(),
        pos,
        head: 0,
        deprel: "_",
    }
}

fn finish(rows: Vec<Row>, predicates: Vec<(usize, String)>, args: Vec<Vec<(usize, &str)>>) -> Sentence {
    let tokens = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let id = i + 1;
            let mut t = Token::new(id, r.form);
            t.lemma = r.lemma.clone();
            t.plemma = r.lemma;
            t.pos = r.pos.into();
            t.ppos = r.pos.into();
            t.head = Some(r.head);
            t.phead = Some(r.head);
            t.deprel = r.deprel.into();
            t.pdeprel = r.deprel.into();
            if let Some((_, pred)) = predicates.iter().find(|(p, _)| *p == id) {
                t.fillpred = true;
                t.pred = Some(pred.clone());
            }
            t.apreds = args
                .iter()
                .map(|a| a.iter().find(|(w, _)| *w == id).map(|(_, r)| (*r).to_owned()))
                .collect();
            t
        })
        .collect();
    Sentence::new(tokens)
}

fn sentence(rng: &mut ChaCha8Rng, max_clauses: usize) -> Sentence {
    let clauses = rng.gen_range(1..=max_clauses.clamp(1, 3));
    let mut rows: Vec<Row> = Vec::new();
    let mut predicates = Vec::new();
    let mut args = Vec::new();
    let mut main_verb = 0;
    let mut last_conj = 0;
    for c in 0..clauses {
        if c > 0 {
            rows.push(row("and", "and", "CC"));
            last_conj = rows.len();
            rows.last_mut().unwrap().head = main_verb;
            rows.last_mut().unwrap().deprel = "COORD";
        }
        let mut clause_args = Vec::new();
        let det = rng.gen_bool(0.5).then(|| *DETS.choose(rng).unwrap());
        if let Some(d) = det {
            rows.push(row(d, d, "DT"));
        }
        let subj_det = det.map(|_| rows.len());
        let subj = *NOUNS.choose(rng).unwrap();
        rows.push(row(subj, subj, "NN"));
        let subj_pos = rows.len();
        clause_args.push((subj_pos, "A0"));
        if rng.gen_bool(0.3) {
            let m = *MODALS.choose(rng).unwrap();
            rows.push(row(m, m, "MD"));
            clause_args.push((rows.len(), "AM-MOD"));
        }
        let lemma = *VERBS.choose(rng).unwrap();
        rows.push(row(&format!("{lemma}s"), lemma, "VBZ"));
        let verb = rows.len();
        predicates.push((verb, format!("{lemma}.{}", toy_sense(lemma))));
        let obj_det = rng.gen_bool(0.5).then(|| {
            let d = *DETS.choose(rng).unwrap();
            rows.push(row(d, d, "DT"));
            rows.len()
        });
        let obj = *NOUNS.choose(rng).unwrap();
        rows.push(row(obj, obj, "NN"));
        let obj_pos = rows.len();
        clause_args.push((obj_pos, "A1"));
        if rng.gen_bool(0.3) {
            let (a, role) = *ADVERBS.choose(rng).unwrap();
            rows.push(row(a, a, "RB"));
            clause_args.push((rows.len(), role));
        }

        if c == 0 {
            main_verb = verb;
            rows[verb - 1].head = 0;
            rows[verb - 1].deprel = "ROOT";
        } else {
            rows[verb - 1].head = last_conj;
            rows[verb - 1].deprel = "CONJ";
        }
        for &(w, role) in &clause_args {
            rows[w - 1].head = verb;
            rows[w - 1].deprel = match role {
                "A0" => "SBJ",
                "A1" => "OBJ",
                "AM-MOD" => "VC",
                _ => "ADV",
            };
        }
        if let Some(d) = subj_det {
            rows[d - 1].head = subj_pos;
            rows[d - 1].deprel = "NMOD";
        }
        if let Some(d) = obj_det {
            rows[d - 1].head = obj_pos;
            rows[d - 1].deprel = "NMOD";
        }
        args.push(clause_args);
    }
    rows.push(row(".", ".", "."));
    let last = rows.len() - 1;
    rows[last].head = main_verb;
    rows[last].deprel = "P";
    finish(rows, predicates, args)
}

/// `n` sentences with one to `max_clauses` (at most 3) predicates each.
pub fn toy_corpus(n: usize, max_clauses: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sentence(&mut rng, max_clauses)).collect()
}

/// Sentences of 19 nouns and one verb whose only argument is the following
/// word, so 18 of the 20 pairs of every pass are labelled None.
pub fn skewed_corpus(n: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let verb = rng.gen_range(1..19);
            let mut rows: Vec<Row> = (1..=19)
                .map(|i| {
                    if i == verb {
                        row("sees", "see", "VBZ")
                    } else {
                        let n = *NOUNS.choose(&mut rng).unwrap();
                        row(n, n, "NN")
                    }
                })
                .collect();
            for (i, r) in rows.iter_mut().enumerate() {
                r.head = if i + 1 == verb { 0 } else { verb };
            }
            finish(rows, vec![(verb, "see.01".into())], vec![vec![(verb + 1, "A1")]])
        })
        .collect()
}

/// Small dimensions that fit the toy corpora in seconds; no pre-trained
/// block.
pub fn reduced_config() -> ModelConfig {
    ModelConfig {
        word_dim: 16,
        pretrained_dim: 16,
        lemma_dim: 16,
        pos_dim: 8,
        indicator_dim: 8,
        lstm_layers: 1,
        lstm_hidden: 32,
        proj_dim: 32,
        use_pretrained: false,
        ..ModelConfig::default()
    }
}
