use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::{PruningConfig, TaskMode};
use crate::vocab::InputColumns;

/// Scorer variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Separate predicate and argument heads, bilinear + linear + bias.
    Full,
    /// One projection head shared by predicates and arguments.
    Sba,
    /// Bilinear term only.
    Dba,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "sba" => Ok(Variant::Sba),
            "dba" => Ok(Variant::Dba),
            other => Err(format!("unknown variant '{other}' (expected full, sba or dba)")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Sba => "sba",
            Variant::Dba => "dba",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub pretrained_dim: usize,
    pub lemma_dim: usize,
    pub pos_dim: usize,
    pub indicator_dim: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub proj_dim: usize,
    /// Drop probability on the word representation.
    pub word_dropout: f64,
    pub recurrent_keep: f64,
    pub projection_keep: f64,
    pub variant: Variant,
    pub use_pretrained: bool,
    pub use_lemma: bool,
    pub use_pos: bool,
    pub use_indicator: bool,
    /// Restrict sense pairs to sense labels and role pairs to role labels
    /// when decoding.
    pub mask_decoding: bool,
    pub pruning: Option<PruningConfig>,
    pub columns: InputColumns,
    pub mode: TaskMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 100,
            pretrained_dim: 100,
            lemma_dim: 100,
            pos_dim: 100,
            indicator_dim: 16,
            lstm_layers: 3,
            lstm_hidden: 400,
            proj_dim: 300,
            word_dropout: 0.2,
            recurrent_keep: 0.8,
            projection_keep: 0.8,
            variant: Variant::Full,
            use_pretrained: true,
            use_lemma: true,
            use_pos: true,
            use_indicator: true,
            mask_decoding: true,
            pruning: None,
            columns: InputColumns::Predicted,
            mode: TaskMode::Conll2009,
        }
    }
}

impl ModelConfig {
    /// Length of the word representation with the indicator block included
    /// when enabled.
    pub fn input_dim(&self) -> usize {
        self.word_dim
            + if self.use_pretrained { self.pretrained_dim } else { 0 }
            + if self.use_lemma { self.lemma_dim } else { 0 }
            + if self.use_pos { self.pos_dim } else { 0 }
            + if self.use_indicator { self.indicator_dim } else { 0 }
    }

    /// Width of each encoder state `g_i`.
    pub fn encoder_dim(&self) -> usize {
        2 * self.lstm_hidden
    }

    pub fn validate(&self) -> Result<(), String> {
        let dims = [
            ("word_dim", self.word_dim),
            ("pretrained_dim", self.pretrained_dim),
            ("lemma_dim", self.lemma_dim),
            ("pos_dim", self.pos_dim),
            ("indicator_dim", self.indicator_dim),
            ("lstm_layers", self.lstm_layers),
            ("lstm_hidden", self.lstm_hidden),
            ("proj_dim", self.proj_dim),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.word_dropout) {
            return Err(format!("word_dropout must be in [0, 1), got {}", self.word_dropout));
        }
        for (name, p) in [
            ("recurrent_keep", self.recurrent_keep),
            ("projection_keep", self.projection_keep),
        ] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(format!("{name} must be in (0, 1], got {p}"));
            }
        }
        Ok(())
    }
}
