use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use biaffine_srl::conll::{parse_conll, to_string, ConllError, Format, Sentence};
use biaffine_srl::decomposition::{pruning_stats, HeadSource, PruningConfig, TaskMode};
use biaffine_srl::embeddings::{load_embeddings, EmbeddingTable};
use biaffine_srl::evaluation::{ablation_report, format_report, format_tsv, score_semantic, EvalReport};
use biaffine_srl::model::{load_checkpoint, save_checkpoint, CheckpointError, ModelConfig, ModelError, Variant};
use biaffine_srl::training::{build_passes, pair_accuracy, train, TrainError};
use log::{info, warn};
use thiserror::Error;

use crate::config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Data(_) | TrainError::Eval(_) | TrainError::Model(ModelError::Data(_)) => {
                CliError::Data(e.to_string())
            }
            TrainError::Config(_) | TrainError::Model(ModelError::Config(_)) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e).into()
    }
}

fn checkpoint_error(path: &Path, e: CheckpointError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        CheckpointError::ConfigMismatch(_) => CliError::Usage(msg),
        CheckpointError::Model(_) => CliError::Internal(msg),
        _ => CliError::Data(msg),
    }
}

fn read_corpus(path: &Path, format: Format) -> Result<Vec<Sentence>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_conll(BufReader::new(file), format).map_err(|e: ConllError| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn format_for(mode: TaskMode) -> Format {
    match mode {
        TaskMode::Conll2009 => Format::Conll2009,
        TaskMode::Conll2008 => Format::Conll2008,
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = parse_config(&text, base).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Train and dev corpora plus the optional embedding table.
struct Data {
    train: Vec<Sentence>,
    dev: Vec<Sentence>,
    embeddings: Option<EmbeddingTable>,
}

fn load_data(cfg: &RunConfig) -> Result<Data, CliError> {
    let train_path = cfg.train.as_ref().ok_or_else(|| CliError::Usage("config has no 'train' path".into()))?;
    let train = read_corpus(train_path, cfg.format())?;
    let dev = match &cfg.dev {
        Some(p) => read_corpus(p, cfg.format())?,
        None => {
            warn!("no dev set configured; selecting on the training set");
            train.clone()
        }
    };
    let embeddings = match &cfg.embeddings {
        Some(p) if cfg.model.use_pretrained => {
            let f = File::open(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Some(load_embeddings(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?)
        }
        _ => {
            if cfg.model.use_pretrained {
                warn!("use_pretrained is set but no embeddings file is configured; the block stays zero");
            }
            None
        }
    };
    Ok(Data { train, dev, embeddings })
}

pub fn cmd_train(config: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.training.seed = s;
    }
    let out = cfg
        .checkpoint
        .clone()
        .ok_or_else(|| CliError::Usage("config has no 'checkpoint' path".into()))?;
    let log_path = cfg.log.clone().unwrap_or_else(|| {
        let mut p = out.clone().into_os_string();
        p.push(".log");
        PathBuf::from(p)
    });
    let data = load_data(&cfg)?;

    let log_file = File::create(&log_path).map_err(|e| CliError::Data(format!("{}: {e}", log_path.display())))?;
    let mut log = BufWriter::new(log_file);
    let mut write_err = None;
    let outcome = train(&data.train, &data.dev, &cfg.model, &cfg.training, data.embeddings.as_ref(), &mut |e| {
        info!("{e}");
        if let Err(err) = writeln!(log, "{e}").and_then(|_| log.flush()) {
            write_err.get_or_insert(err);
        }
    })?;
    if let Some(e) = write_err {
        return Err(CliError::Data(format!("{}: {e}", log_path.display())));
    }
    save_checkpoint(&outcome.checkpoint, &out).map_err(|e| checkpoint_error(&out, e))?;
    println!(
        "epochs {}{}; best dev F1 {:.2} at step {}; checkpoint {}",
        outcome.epochs_run,
        if outcome.stopped_early { " (stopped early)" } else { "" },
        outcome.checkpoint.best_dev_f1,
        outcome.checkpoint.step,
        out.display()
    );
    Ok(())
}

pub fn cmd_predict(model: &Path, input: &Path, output: &Path, mode: TaskMode) -> Result<(), CliError> {
    let ckpt = load_checkpoint(model, None).map_err(|e| checkpoint_error(model, e))?;
    let m = &ckpt.model;
    if m.config.mode != mode {
        return Err(CliError::Usage(format!(
            "{} was trained for {} but --mode is {mode}",
            model.display(),
            m.config.mode
        )));
    }
    let format = format_for(mode);
    let sentences = read_corpus(input, format)?;
    let predicted = m.annotate(&sentences, mode)?;
    write_file(output, &to_string(&predicted, format))?;
    info!("annotated {} sentences", predicted.len());
    Ok(())
}

pub fn cmd_evaluate(gold: &Path, pred: &Path, mode: TaskMode, tsv: bool) -> Result<(), CliError> {
    let format = format_for(mode);
    let g = read_corpus(gold, format)?;
    let p = read_corpus(pred, format)?;
    let report = score_semantic(&g, &p, mode).map_err(|e| CliError::Data(e.to_string()))?;
    print!("{}", if tsv { format_tsv(&report) } else { format_report(&report) });
    Ok(())
}

pub fn cmd_stats(input: &Path, k_max: usize, mode: TaskMode, source: HeadSource) -> Result<(), CliError> {
    let corpus = read_corpus(input, format_for(mode))?;
    let mut out = String::from("k\tcoverage\treduction\n");
    for k in 0..=k_max {
        let s = pruning_stats(&corpus, PruningConfig { k, source })
            .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
        let _ = writeln!(out, "{k}\t{:.2}\t{:.2}", 100.0 * s.coverage(), 100.0 * s.reduction());
    }
    print!("{out}");
    Ok(())
}

/// One configuration of an ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    Full,
    NoPos,
    NoLemma,
    NoIndicator,
    Sba,
    Dba,
    WithPruning(usize),
}

impl FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let pruning = s
            .strip_prefix("with-pruning(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("with-pruning-"));
        if let Some(k) = pruning {
            return k
                .parse()
                .map(Ablation::WithPruning)
                .map_err(|_| format!("invalid pruning order in '{s}'"));
        }
        Ok(match s.as_str() {
            "full" => Ablation::Full,
            "no-pos" => Ablation::NoPos,
            "no-lemma" => Ablation::NoLemma,
            "no-indicator" => Ablation::NoIndicator,
            "sba" => Ablation::Sba,
            "dba" => Ablation::Dba,
            _ => return Err(format!("unknown variant '{s}'")),
        })
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ablation::Full => f.write_str("full"),
            Ablation::NoPos => f.write_str("no-pos"),
            Ablation::NoLemma => f.write_str("no-lemma"),
            Ablation::NoIndicator => f.write_str("no-indicator"),
            Ablation::Sba => f.write_str("sba"),
            Ablation::Dba => f.write_str("dba"),
            Ablation::WithPruning(k) => write!(f, "with-pruning({k})"),
        }
    }
}

impl Ablation {
    pub fn apply(self, base: &ModelConfig, source: HeadSource) -> ModelConfig {
        let mut m = base.clone();
        match self {
            Ablation::Full => {}
            Ablation::NoPos => m.use_pos = false,
            Ablation::NoLemma => m.use_lemma = false,
            Ablation::NoIndicator => m.use_indicator = false,
            Ablation::Sba => m.variant = Variant::Sba,
            Ablation::Dba => m.variant = Variant::Dba,
            Ablation::WithPruning(k) => m.pruning = Some(PruningConfig { k, source }),
        }
        m
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Single-line summary of the settings an ablation varies.
pub fn describe(m: &ModelConfig) -> String {
    format!(
        "variant={} heads={} pos={} lemma={} indicator={} pruning={}",
        m.variant,
        if m.variant == Variant::Sba { "shared" } else { "separate" },
        on_off(m.use_pos),
        on_off(m.use_lemma),
        on_off(m.use_indicator),
        m.pruning.map_or("off".to_string(), |p| format!("k={}", p.k)),
    )
}

pub fn parse_variants(list: &str) -> Result<Vec<Ablation>, CliError> {
    let variants = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Ablation>().map_err(CliError::Usage))
        .collect::<Result<Vec<_>, _>>()?;
    if variants.is_empty() {
        return Err(CliError::Usage("no variants given".into()));
    }
    Ok(variants)
}

pub fn cmd_ablate(config: &Path, variants: &str) -> Result<(), CliError> {
    let variants = parse_variants(variants)?;
    let cfg = load_config(config)?;
    let source = cfg.model.pruning.map_or(HeadSource::Predicted, |p| p.source);
    let data = load_data(&cfg)?;
    let mode = cfg.model.mode;
    let mut rows: Vec<(String, EvalReport)> = Vec::new();
    for v in variants {
        let model_cfg = v.apply(&cfg.model, source);
        model_cfg.validate().map_err(CliError::Usage)?;
        info!("training variant {v}");
        let outcome = train(&data.train, &data.dev, &model_cfg, &cfg.training, data.embeddings.as_ref(), &mut |e| {
            info!("{v}: {e}")
        })?;
        let model = &outcome.checkpoint.model;
        let predicted = model.annotate(&data.dev, mode)?;
        let report = score_semantic(&data.dev, &predicted, mode).map_err(|e| CliError::Data(e.to_string()))?;
        let passes = build_passes(&data.dev, model)?;
        let (correct, total) = pair_accuracy(model, &data.dev, &passes)?;
        let accuracy = if total == 0 { 0.0 } else { 100.0 * correct as f64 / total as f64 };
        println!("{v}\t{}\tpair_accuracy={accuracy:.2}", describe(&model_cfg));
        rows.push((v.to_string(), report));
    }
    println!();
    print!("{}", ablation_report(&rows));
    Ok(())
}
