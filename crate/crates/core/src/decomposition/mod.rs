//! Sentences as word-pair classification samples.
//!
//! Position 0 is the virtual root. Sense pairs are `(0, p)`; role pairs are
//! `(p, w)` for every word `w`, including `w == p`. Both kinds share one
//! label inventory whose id 0 is None.

mod labels;
mod pairs;
mod pruning;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use labels::{build_label_space, sense_of, Label, LabelId, LabelSpace, SenseLexicon, NONE_ID};
pub use pairs::{
    gold_pairs, reconstruct, role_pairs, role_pairs_within, sense_pairs, PairKind, PredLemma, SenseMode,
    WordPairSample,
};
pub use pruning::{
    prune_candidates, pruning_stats, syntactic_heads, tree_height, HeadSource, PruningConfig, PruningStats,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("predicate at position {position} has no sense")]
    MissingSense { position: usize },
    #[error("word {position} has no syntactic head")]
    MissingHead { position: usize },
    #[error("word {position} has head {head} outside the sentence")]
    HeadOutOfRange { position: usize, head: usize },
    #[error("word {position} does not reach the root")]
    Cycle { position: usize },
}

/// Task layout: 2009 gives predicates, 2008 requires identifying them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskMode {
    Conll2009,
    Conll2008,
}

impl TaskMode {
    pub fn sense_mode(&self) -> SenseMode {
        match self {
            TaskMode::Conll2009 => SenseMode::GivenPredicates,
            TaskMode::Conll2008 => SenseMode::AllWords,
        }
    }
}

impl FromStr for TaskMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conll2009" => Ok(TaskMode::Conll2009),
            "conll2008" => Ok(TaskMode::Conll2008),
            other => Err(format!("unknown mode '{other}' (expected conll2009 or conll2008)")),
        }
    }
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskMode::Conll2009 => "conll2009",
            TaskMode::Conll2008 => "conll2008",
        })
    }
}

#[cfg(test)]
mod tests;
