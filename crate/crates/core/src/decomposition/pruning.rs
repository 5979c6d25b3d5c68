use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DecompositionError;
use crate::conll::Sentence;

/// Which column supplies syntactic heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeadSource {
    /// HEAD.
    Gold,
    /// PHEAD.
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruningConfig {
    pub k: usize,
    pub source: HeadSource,
}

/// Head of every position, index 0 being the virtual root (its own entry
/// is 0). Fails unless the heads form a tree rooted at 0.
pub fn syntactic_heads(sentence: &Sentence, source: HeadSource) -> Result<Vec<usize>, DecompositionError> {
    let n = sentence.n_words();
    let mut heads = vec![0; n + 1];
    for t in &sentence.tokens {
        let h = match source {
            HeadSource::Gold => t.head,
            HeadSource::Predicted => t.phead,
        };
        let h = h.ok_or(DecompositionError::MissingHead { position: t.id })?;
        if h > n {
            return Err(DecompositionError::HeadOutOfRange {
                position: t.id,
                head: h,
            });
        }
        heads[t.id] = h;
    }
    for start in 1..=n {
        let mut node = start;
        for _ in 0..=n {
            if node == 0 {
                break;
            }
            node = heads[node];
        }
        if node != 0 {
            return Err(DecompositionError::Cycle { position: start });
        }
    }
    Ok(heads)
}

fn children(heads: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); heads.len()];
    for (w, &h) in heads.iter().enumerate().skip(1) {
        out[h].push(w);
    }
    out
}

/// Depth of the deepest word below the virtual root.
pub fn tree_height(sentence: &Sentence, source: HeadSource) -> Result<usize, DecompositionError> {
    let heads = syntactic_heads(sentence, source)?;
    Ok((1..heads.len())
        .map(|mut w| {
            let mut d = 0;
            while w != 0 {
                w = heads[w];
                d += 1;
            }
            d
        })
        .max()
        .unwrap_or(0))
}

/// Words within depth `k` below the predicate or any of its ancestors,
/// the virtual root counting as an ancestor. The predicate is always kept.
pub fn prune_candidates(
    sentence: &Sentence,
    predicate: usize,
    cfg: PruningConfig,
) -> Result<BTreeSet<usize>, DecompositionError> {
    let heads = syntactic_heads(sentence, cfg.source)?;
    let kids = children(&heads);
    let mut retained = BTreeSet::new();
    let mut anchor = predicate;
    loop {
        let mut frontier = vec![anchor];
        for depth in 0..=cfg.k {
            for &w in &frontier {
                if w != 0 {
                    retained.insert(w);
                }
            }
            if depth == cfg.k {
                break;
            }
            frontier = frontier.iter().flat_map(|&w| kids[w].iter().copied()).collect();
            if frontier.is_empty() {
                break;
            }
        }
        if anchor == 0 {
            break;
        }
        anchor = heads[anchor];
    }
    Ok(retained)
}

/// Coverage of true arguments and reduction of candidates over a corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruningStats {
    pub true_arguments: usize,
    pub retained_arguments: usize,
    pub candidates: usize,
    pub pruned: usize,
}

impl PruningStats {
    /// 1 when there are no true arguments.
    pub fn coverage(&self) -> f64 {
        if self.true_arguments == 0 {
            1.0
        } else {
            self.retained_arguments as f64 / self.true_arguments as f64
        }
    }

    /// 0 when there are no candidates.
    pub fn reduction(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.pruned as f64 / self.candidates as f64
        }
    }
}

/// Candidates are all `(predicate, word)` pairs of every gold predicate.
pub fn pruning_stats(corpus: &[Sentence], cfg: PruningConfig) -> Result<PruningStats, DecompositionError> {
    let mut stats = PruningStats {
        true_arguments: 0,
        retained_arguments: 0,
        candidates: 0,
        pruned: 0,
    };
    for s in corpus {
        for p in s.predicate_positions() {
            let kept = prune_candidates(s, p, cfg)?;
            stats.candidates += s.n_words();
            stats.pruned += s.n_words() - kept.len();
            for w in 1..=s.n_words() {
                if s.role(p, w).is_some() {
                    stats.true_arguments += 1;
                    if kept.contains(&w) {
                        stats.retained_arguments += 1;
                    }
                }
            }
        }
    }
    Ok(stats)
}
