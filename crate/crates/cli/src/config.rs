//! Run configuration: `key = value` lines, `#` comments and optional
//! `[section]` headers. Absent keys keep the library defaults.

use std::path::{Path, PathBuf};

use biaffine_srl::conll::Format;
use biaffine_srl::decomposition::{HeadSource, PruningConfig, TaskMode};
use biaffine_srl::model::ModelConfig;
use biaffine_srl::training::TrainConfig;
use biaffine_srl::vocab::InputColumns;
use thiserror::Error;

const SECTIONS: [&str; 3] = ["data", "model", "training"];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: unknown section '{name}'")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: invalid value '{value}' for '{key}': {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub log: Option<PathBuf>,
    /// File format of the data; follows `mode` unless set.
    pub format: Option<Format>,
    pub model: ModelConfig,
    pub training: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            dev: None,
            embeddings: None,
            checkpoint: None,
            log: None,
            format: None,
            model: ModelConfig::default(),
            training: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn format(&self) -> Format {
        self.format.unwrap_or(match self.model.mode {
            TaskMode::Conll2009 => Format::Conll2009,
            TaskMode::Conll2008 => Format::Conll2008,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate().map_err(ConfigError::Invalid)?;
        self.training.validate().map_err(ConfigError::Invalid)
    }
}

fn value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        line,
        key: key.into(),
        value: raw.into(),
        reason: e.to_string(),
    })
}

fn flag(line: usize, key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            line,
            key: key.into(),
            value: raw.into(),
            reason: "expected true or false".into(),
        }),
    }
}

fn choice<T: Copy>(line: usize, key: &str, raw: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(raw))
        .map(|(_, v)| *v)
        .ok_or_else(|| ConfigError::InvalidValue {
            line,
            key: key.into(),
            value: raw.into(),
            reason: format!(
                "expected one of {}",
                options.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            ),
        })
}

/// Parses `text`; relative paths are resolved against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut pruning_k: Option<usize> = None;
    let mut pruning_source = HeadSource::Predicted;
    let path = |raw: &str| -> PathBuf {
        let p = PathBuf::from(raw);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection { line, name: name.into() });
            }
            continue;
        }
        let Some((key, raw)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line });
        };
        let (key, raw) = (key.trim(), raw.trim());
        let m = &mut cfg.model;
        let t = &mut cfg.training;
        match key {
            "train" => cfg.train = Some(path(raw)),
            "dev" => cfg.dev = Some(path(raw)),
            "embeddings" => cfg.embeddings = Some(path(raw)),
            "checkpoint" => cfg.checkpoint = Some(path(raw)),
            "log" => cfg.log = Some(path(raw)),
            "format" => cfg.format = Some(value(line, key, raw)?),
            "mode" => m.mode = value(line, key, raw)?,

            "word_dim" => m.word_dim = value(line, key, raw)?,
            "pretrained_dim" => m.pretrained_dim = value(line, key, raw)?,
            "lemma_dim" => m.lemma_dim = value(line, key, raw)?,
            "pos_dim" => m.pos_dim = value(line, key, raw)?,
            "indicator_dim" => m.indicator_dim = value(line, key, raw)?,
            "lstm_layers" => m.lstm_layers = value(line, key, raw)?,
            "lstm_hidden" => m.lstm_hidden = value(line, key, raw)?,
            "proj_dim" => m.proj_dim = value(line, key, raw)?,
            "word_dropout" => m.word_dropout = value(line, key, raw)?,
            "recurrent_keep" => m.recurrent_keep = value(line, key, raw)?,
            "projection_keep" => m.projection_keep = value(line, key, raw)?,
            "variant" => m.variant = value(line, key, raw)?,
            "use_pretrained" => m.use_pretrained = flag(line, key, raw)?,
            "use_lemma" => m.use_lemma = flag(line, key, raw)?,
            "use_pos" => m.use_pos = flag(line, key, raw)?,
            "use_indicator" => m.use_indicator = flag(line, key, raw)?,
            "mask_decoding" => m.mask_decoding = flag(line, key, raw)?,
            "columns" => {
                m.columns = choice(
                    line,
                    key,
                    raw,
                    &[("predicted", InputColumns::Predicted), ("gold", InputColumns::Gold)],
                )?
            }
            "pruning_k" => {
                pruning_k = if raw.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(value(line, key, raw)?)
                }
            }
            "pruning_source" => {
                pruning_source = choice(
                    line,
                    key,
                    raw,
                    &[("predicted", HeadSource::Predicted), ("gold", HeadSource::Gold)],
                )?
            }

            "batch_tokens" => t.batch_tokens = value(line, key, raw)?,
            "max_epochs" => t.max_epochs = value(line, key, raw)?,
            "eval_every" => t.eval_every = value(line, key, raw)?,
            "patience" => t.patience = value(line, key, raw)?,
            "clip_norm" => t.clip_norm = value(line, key, raw)?,
            "seed" => t.seed = value(line, key, raw)?,
            "min_count" => t.min_count = value(line, key, raw)?,
            "learning_rate" => t.adam.learning_rate = value(line, key, raw)?,
            "beta1" => t.adam.beta1 = value(line, key, raw)?,
            "beta2" => t.adam.beta2 = value(line, key, raw)?,
            "eps" => t.adam.eps = value(line, key, raw)?,
            "anneal_rate" => t.adam.anneal_rate = value(line, key, raw)?,
            "anneal_period" => t.adam.anneal_period = value(line, key, raw)?,
            "frozen" => {
                t.frozen = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
            }
            _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
        }
    }
    cfg.model.pruning = pruning_k.map(|k| PruningConfig { k, source: pruning_source });
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use biaffine_srl::model::Variant;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(text, Path::new("/data"))
    }

    #[test]
    fn empty_config_is_the_default_recipe() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.model, ModelConfig::default());
        assert_eq!(cfg.training, TrainConfig::default());
        assert_eq!(parse("# nothing\n\n[model]\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn every_key_is_settable() {
        let text = "\
[data]
train = train.txt
dev = /abs/dev.txt
embeddings = glove.txt
checkpoint = out/model.ckpt
log = out/train.log
format = conll2008
mode = conll2008
[model]
word_dim = 1
pretrained_dim = 2
lemma_dim = 3
pos_dim = 4
indicator_dim = 5
lstm_layers = 6
lstm_hidden = 7
proj_dim = 8
word_dropout = 0.1
recurrent_keep = 0.7
projection_keep = 0.6
variant = sba
use_pretrained = false
use_lemma = no
use_pos = off
use_indicator = 0
mask_decoding = false
columns = gold
pruning_k = 3
pruning_source = gold
[training]
batch_tokens = 11
max_epochs = 12
eval_every = 2
patience = 13
clip_norm = 1.5
seed = 14
min_count = 2
learning_rate = 0.01
beta1 = 0.8
beta2 = 0.95
eps = 1e-6
anneal_rate = 0.5
anneal_period = 100
frozen = biaffine.w_role, biaffine.u_role
";
        let c = parse(text).unwrap();
        assert_eq!(c.train, Some(PathBuf::from("/data/train.txt")));
        assert_eq!(c.dev, Some(PathBuf::from("/abs/dev.txt")));
        assert_eq!(c.checkpoint, Some(PathBuf::from("/data/out/model.ckpt")));
        assert_eq!(c.format(), Format::Conll2008);
        let m = &c.model;
        assert_eq!(
            (m.word_dim, m.pretrained_dim, m.lemma_dim, m.pos_dim, m.indicator_dim),
            (1, 2, 3, 4, 5)
        );
        assert_eq!((m.lstm_layers, m.lstm_hidden, m.proj_dim), (6, 7, 8));
        assert_eq!((m.word_dropout, m.recurrent_keep, m.projection_keep), (0.1, 0.7, 0.6));
        assert_eq!(m.variant, Variant::Sba);
        assert!(!(m.use_pretrained || m.use_lemma || m.use_pos || m.use_indicator || m.mask_decoding));
        assert_eq!(m.columns, InputColumns::Gold);
        assert_eq!(m.pruning, Some(PruningConfig { k: 3, source: HeadSource::Gold }));
        assert_eq!(m.mode, TaskMode::Conll2008);
        let t = &c.training;
        assert_eq!((t.batch_tokens, t.max_epochs, t.eval_every, t.patience), (11, 12, 2, 13));
        assert_eq!((t.clip_norm, t.seed, t.min_count), (1.5, 14, 2));
        assert_eq!(
            (t.adam.learning_rate, t.adam.beta1, t.adam.beta2, t.adam.eps, t.adam.anneal_rate, t.adam.anneal_period),
            (0.01, 0.8, 0.95, 1e-6, 0.5, 100)
        );
        assert_eq!(t.frozen, vec!["biaffine.w_role", "biaffine.u_role"]);
    }

    #[test]
    fn errors_name_the_problem() {
        assert_eq!(
            parse("word_dim = 3\nhidden_size = 4\n"),
            Err(ConfigError::UnknownKey { line: 2, key: "hidden_size".into() })
        );
        assert!(matches!(parse("[optim]\n"), Err(ConfigError::UnknownSection { line: 1, .. })));
        assert!(matches!(parse("word_dim 3\n"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(parse("word_dim = many\n"), Err(ConfigError::InvalidValue { line: 1, .. })));
        assert!(matches!(parse("variant = triaffine\n"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(parse("use_pos = maybe\n"), Err(ConfigError::InvalidValue { .. })));
        assert!(parse("recurrent_keep = 0\n").unwrap().validate().is_err());
    }

    #[test]
    fn comments_and_pruning_none() {
        let c = parse("pruning_k = 2 # order\npruning_k = none\n").unwrap();
        assert_eq!(c.model.pruning, None);
        let c = parse("pruning_k = 2\n").unwrap();
        assert_eq!(c.model.pruning, Some(PruningConfig { k: 2, source: HeadSource::Predicted }));
    }
}
