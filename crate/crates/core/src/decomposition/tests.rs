use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::conll::{parse_str, to_string, Format, Sentence, Token};
use crate::vocab::InputColumns;

fn gene_sentence() -> Sentence {
    parse_str(include_str!("../../tests/fixtures/gene_sentence.conll09"), Format::Conll2009)
        .unwrap()
        .remove(0)
}

fn fixtures() -> Vec<(Format, Vec<Sentence>)> {
    vec![
        (
            Format::Conll2009,
            parse_str(include_str!("../../tests/fixtures/gene_sentence.conll09"), Format::Conll2009).unwrap(),
        ),
        (
            Format::Conll2009,
            parse_str(include_str!("../../tests/fixtures/treebank.conll09"), Format::Conll2009).unwrap(),
        ),
        (
            Format::Conll2008,
            parse_str(include_str!("../../tests/fixtures/small.conll08"), Format::Conll2008).unwrap(),
        ),
    ]
}

/// Sentence whose heads are `heads[1..]`; `heads[0]` is ignored.
fn tree(heads: &[usize]) -> Sentence {
    let tokens = (1..heads.len())
        .map(|i| {
            let mut t = Token::new(i, format!("w{i}"));
            t.head = Some(heads[i]);
            t.phead = Some(heads[i]);
            t
        })
        .collect();
    Sentence::new(tokens)
}

/// Retained set by walking up from every word: `w` is kept iff some node at
/// distance ≤ k above it (itself included) is the predicate or one of its
/// ancestors.
fn brute_force_retained(heads: &[usize], predicate: usize, k: usize) -> BTreeSet<usize> {
    let mut anchors = BTreeSet::from([predicate, 0]);
    let mut a = predicate;
    while a != 0 {
        a = heads[a];
        anchors.insert(a);
    }
    let mut out = BTreeSet::new();
    for w in 1..heads.len() {
        let mut node = w;
        for d in 0..=k {
            if anchors.contains(&node) {
                out.insert(w);
                break;
            }
            if node == 0 || d == k {
                break;
            }
            node = heads[node];
        }
    }
    out.insert(predicate);
    out
}

#[test]
fn gene_sentence_label_space() {
    let s = gene_sentence();
    let labels = build_label_space(std::slice::from_ref(&s));
    assert_eq!(labels.label(NONE_ID), &Label::None);
    for role in ["A0", "A1", "AM-MOD", "AM-MIS"] {
        assert!(labels.role_id(role).is_some(), "{role}");
    }
    assert!(labels.sense_id("01").is_some());
    assert_eq!(labels.len(), 6);
    // a role literally named "01" would not alias the sense
    assert!(labels.role_id("01").is_none());
}

#[test]
fn empty_corpus_has_only_none() {
    let labels = build_label_space(&[]);
    assert_eq!(labels.len(), 1);
    assert_eq!(labels.labels(), &[Label::None]);
}

#[test]
fn every_gold_label_has_an_id() {
    for (_, corpus) in fixtures() {
        let labels = build_label_space(&corpus);
        for s in &corpus {
            for t in &s.tokens {
                for r in t.apreds.iter().flatten() {
                    assert!(labels.role_id(r).is_some());
                }
                if let Some(p) = &t.pred {
                    assert!(labels.sense_id(sense_of(p)).is_some());
                }
            }
            for p in gold_pairs(s, &labels).unwrap() {
                assert!(p.gold.is_some());
            }
        }
    }
}

#[test]
fn masks_partition_labels() {
    let (_, corpus) = fixtures().remove(1);
    let labels = build_label_space(&corpus);
    let sense = labels.sense_mask();
    let role = labels.role_mask();
    assert!(sense[NONE_ID] && role[NONE_ID]);
    for (id, l) in labels.labels().iter().enumerate().skip(1) {
        assert!(sense[id] != role[id]);
        assert_eq!(sense[id], matches!(l, Label::Sense(_)));
    }
}

#[test]
fn gene_sentence_word_pairs() {
    let s = gene_sentence();
    let labels = build_label_space(std::slice::from_ref(&s));
    let senses = sense_pairs(&s, SenseMode::GivenPredicates, &labels).unwrap();
    let got: Vec<(usize, usize, &Label)> = senses
        .iter()
        .map(|p| (p.head, p.dependent, labels.label(p.gold.unwrap())))
        .collect();
    let one = Label::Sense("01".into());
    assert_eq!(got, vec![(0, 5, &one), (0, 9, &one)]);

    let expected: [(usize, &[(usize, &str)]); 2] = [
        (5, &[(2, "A0"), (3, "AM-MIS"), (4, "AM-MOD")]),
        (9, &[(10, "A1")]),
    ];
    for (pred, args) in expected {
        let pairs = role_pairs(&s, pred, &labels);
        assert_eq!(pairs.len(), 11);
        for p in pairs {
            assert_eq!((p.head, p.kind), (pred, PairKind::Role));
            let want = args
                .iter()
                .find(|(w, _)| *w == p.dependent)
                .map_or(Label::None, |(_, r)| Label::Role((*r).into()));
            assert_eq!(labels.label(p.gold.unwrap()), &want, "({pred},{})", p.dependent);
        }
    }
    // the self pair exists and is None
    let self_pair = role_pairs(&s, 5, &labels).into_iter().find(|p| p.dependent == 5).unwrap();
    assert_eq!(self_pair.gold, Some(NONE_ID));
}

#[test]
fn all_words_mode_counts() {
    let (_, corpus) = fixtures().remove(2);
    let labels = build_label_space(&corpus);
    // "Mary gave Tom a book": 5 words, predicates gave and book
    let pairs = sense_pairs(&corpus[1], SenseMode::AllWords, &labels).unwrap();
    assert_eq!(pairs.len(), 5);
    assert_eq!(pairs.iter().filter(|p| p.gold == Some(NONE_ID)).count(), 3);
    // no predicates
    let pairs = sense_pairs(&corpus[2], SenseMode::AllWords, &labels).unwrap();
    assert!(pairs.iter().all(|p| p.gold == Some(NONE_ID) && p.head == 0));
}

#[test]
fn predicate_without_sense_is_an_error() {
    let mut s = gene_sentence();
    s.tokens[4].pred = None;
    let labels = build_label_space(std::slice::from_ref(&s));
    assert_eq!(
        sense_pairs(&s, SenseMode::GivenPredicates, &labels),
        Err(DecompositionError::MissingSense { position: 5 })
    );
}

#[test]
fn one_word_predicate_has_single_self_pair() {
    let mut t = Token::new(1, "Go");
    t.fillpred = true;
    t.pred = Some("go.01".into());
    t.apreds = vec![None];
    let s = Sentence::new(vec![t]);
    let labels = build_label_space(std::slice::from_ref(&s));
    let pairs = role_pairs(&s, 1, &labels);
    assert_eq!(pairs.len(), 1);
    assert_eq!((pairs[0].head, pairs[0].dependent), (1, 1));
}

#[test]
fn reconstruction_is_byte_exact_on_fixtures() {
    for (format, corpus) in fixtures() {
        let labels = build_label_space(&corpus);
        let mut rebuilt = corpus.clone();
        for s in &mut rebuilt {
            let labelled: Vec<(usize, usize, LabelId)> = gold_pairs(s, &labels)
                .unwrap()
                .iter()
                .map(|p| (p.head, p.dependent, p.gold.unwrap()))
                .collect();
            let ann = reconstruct(s, &labelled, &labels, PredLemma::Original);
            s.apply_annotation(&ann);
        }
        assert_eq!(to_string(&rebuilt, format), to_string(&corpus, format));
    }
}

#[test]
fn reconstruct_uses_requested_lemma_column() {
    let s = gene_sentence();
    let labels = build_label_space(std::slice::from_ref(&s));
    let one = labels.sense_id("01").unwrap();
    let ann = reconstruct(&s, &[(0, 9, one)], &labels, PredLemma::Column(InputColumns::Predicted));
    assert_eq!(ann.frames[0].pred_string(), "fertilize.01");
    // a role pair whose head has no frame is dropped
    let a0 = labels.role_id("A0").unwrap();
    let ann = reconstruct(&s, &[(5, 2, a0)], &labels, PredLemma::Original);
    assert!(ann.frames.is_empty());
}

#[test]
fn sense_lexicon_fallbacks() {
    let (_, corpus) = fixtures().remove(1);
    let lex = SenseLexicon::build(&corpus, InputColumns::Predicted);
    assert_eq!(lex.fallback("rain"), Some("02"));
    assert_eq!(lex.fallback("expect"), Some("01"));
    assert!(!lex.knows("zebra"));
    assert_eq!(lex.fallback("zebra"), Some("01"));
    assert_eq!(SenseLexicon::default().fallback("x"), None);
}

#[test]
fn chain_tree_order_one() {
    // 1 ← 2 ← 3 ← 4: word i+1 heads word i, word 4 is the root
    let s = tree(&[0, 2, 3, 4, 0]);
    let cfg = PruningConfig { k: 1, source: HeadSource::Gold };
    assert_eq!(prune_candidates(&s, 2, cfg).unwrap(), BTreeSet::from([1, 2, 3, 4]));
    // the same chain read the other way: 2's ancestors are 1 and the root
    let s = tree(&[0, 0, 1, 2, 3]);
    assert_eq!(prune_candidates(&s, 2, cfg).unwrap(), BTreeSet::from([1, 2, 3]));
}

#[test]
fn order_zero_keeps_predicate_and_ancestors() {
    let s = gene_sentence();
    let cfg = PruningConfig { k: 0, source: HeadSource::Gold };
    // fertilizing(9) ← from(8) ← prevent(5) ← can(4) ← root
    assert_eq!(prune_candidates(&s, 9, cfg).unwrap(), BTreeSet::from([4, 5, 8, 9]));
}

#[test]
fn large_order_keeps_everything() {
    for (_, corpus) in fixtures() {
        for s in &corpus {
            let h = tree_height(s, HeadSource::Gold).unwrap();
            for p in s.predicate_positions() {
                let kept = prune_candidates(s, p, PruningConfig { k: h, source: HeadSource::Gold }).unwrap();
                assert_eq!(kept.len(), s.n_words());
            }
        }
        let h = corpus.iter().map(|s| tree_height(s, HeadSource::Gold).unwrap()).max().unwrap();
        let stats = pruning_stats(&corpus, PruningConfig { k: h, source: HeadSource::Gold }).unwrap();
        assert_eq!(stats.coverage(), 1.0);
        assert_eq!(stats.reduction(), 0.0);
    }
}

#[test]
fn fixture_pruning_matches_brute_force() {
    for (_, corpus) in fixtures() {
        for k in 0..6 {
            let cfg = PruningConfig { k, source: HeadSource::Gold };
            let mut expect = PruningStats {
                true_arguments: 0,
                retained_arguments: 0,
                candidates: 0,
                pruned: 0,
            };
            for s in &corpus {
                let heads: Vec<usize> =
                    std::iter::once(0).chain(s.tokens.iter().map(|t| t.head.unwrap())).collect();
                for p in s.predicate_positions() {
                    let oracle = brute_force_retained(&heads, p, k);
                    assert_eq!(prune_candidates(s, p, cfg).unwrap(), oracle);
                    expect.candidates += s.n_words();
                    expect.pruned += s.n_words() - oracle.len();
                    for w in 1..=s.n_words() {
                        if s.role(p, w).is_some() {
                            expect.true_arguments += 1;
                            expect.retained_arguments += oracle.contains(&w) as usize;
                        }
                    }
                }
            }
            assert_eq!(pruning_stats(&corpus, cfg).unwrap(), expect);
        }
    }
}

#[test]
fn treebank_order_one_values() {
    let (_, corpus) = fixtures().remove(1);
    let cfg = PruningConfig { k: 1, source: HeadSource::Gold };
    // report(6) ← to(5) ← expect(2) ← root; "the" and "higher" fall outside
    assert_eq!(
        prune_candidates(&corpus[0], 6, cfg).unwrap(),
        BTreeSet::from([1, 2, 4, 5, 6, 8, 9])
    );
}

#[test]
fn malformed_trees_are_rejected() {
    let s = tree(&[0, 2, 1]);
    let cfg = PruningConfig { k: 1, source: HeadSource::Gold };
    assert_eq!(prune_candidates(&s, 1, cfg), Err(DecompositionError::Cycle { position: 1 }));
    let s = tree(&[0, 5]);
    assert!(matches!(
        prune_candidates(&s, 1, cfg),
        Err(DecompositionError::HeadOutOfRange { position: 1, head: 5 })
    ));
    let mut s = tree(&[0, 0]);
    s.tokens[0].phead = None;
    assert_eq!(
        prune_candidates(&s, 1, PruningConfig { k: 0, source: HeadSource::Predicted }),
        Err(DecompositionError::MissingHead { position: 1 })
    );
}

#[test]
fn task_mode_parses() {
    assert_eq!("conll2009".parse::<TaskMode>(), Ok(TaskMode::Conll2009));
    assert_eq!(TaskMode::Conll2008.to_string(), "conll2008");
    assert!("conll2010".parse::<TaskMode>().is_err());
}

/// Random rooted trees: node `order[i]` attaches to an earlier node of
/// `order` or to the root.
fn random_tree() -> impl Strategy<Value = Vec<usize>> {
    (1usize..14).prop_flat_map(|n| {
        let order = Just((1..=n).collect::<Vec<_>>()).prop_shuffle();
        let picks = prop::collection::vec(any::<prop::sample::Index>(), n);
        (order, picks).prop_map(move |(order, picks)| {
            let mut heads = vec![0; n + 1];
            for (i, pick) in picks.iter().enumerate() {
                let j = pick.index(i + 1);
                heads[order[i]] = if j == 0 { 0 } else { order[j - 1] };
            }
            heads
        })
    })
}

proptest! {
    #[test]
    fn pruning_agrees_with_brute_force(heads in random_tree(), k in 0usize..6, pick in any::<prop::sample::Index>()) {
        let s = tree(&heads);
        let p = pick.index(s.n_words()) + 1;
        let cfg = PruningConfig { k, source: HeadSource::Gold };
        prop_assert_eq!(prune_candidates(&s, p, cfg).unwrap(), brute_force_retained(&heads, p, k));
    }

    #[test]
    fn retained_sets_are_nested(heads in random_tree(), k in 0usize..6, pick in any::<prop::sample::Index>()) {
        let s = tree(&heads);
        let p = pick.index(s.n_words()) + 1;
        let small = prune_candidates(&s, p, PruningConfig { k, source: HeadSource::Gold }).unwrap();
        let large = prune_candidates(&s, p, PruningConfig { k: k + 1, source: HeadSource::Gold }).unwrap();
        prop_assert!(small.is_subset(&large));
        prop_assert!(small.contains(&p));
    }

    #[test]
    fn role_pairs_cover_each_word_once(heads in random_tree(), pick in any::<prop::sample::Index>()) {
        let s = tree(&heads);
        let p = pick.index(s.n_words()) + 1;
        let labels = build_label_space(std::slice::from_ref(&s));
        let deps: Vec<usize> = role_pairs(&s, p, &labels).iter().map(|x| x.dependent).collect();
        prop_assert_eq!(deps, (1..=s.n_words()).collect::<Vec<_>>());
    }

    #[test]
    fn coverage_and_reduction_monotone(k in 0usize..6) {
        for (_, corpus) in fixtures() {
            let a = pruning_stats(&corpus, PruningConfig { k, source: HeadSource::Gold }).unwrap();
            let b = pruning_stats(&corpus, PruningConfig { k: k + 1, source: HeadSource::Gold }).unwrap();
            prop_assert!(a.coverage() <= b.coverage());
            prop_assert!(a.reduction() >= b.reduction());
            prop_assert!((0.0..=1.0).contains(&a.coverage()) && (0.0..=1.0).contains(&a.reduction()));
        }
    }
}
