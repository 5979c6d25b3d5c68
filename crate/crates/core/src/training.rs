//! Batching, loss, the optimization loop and dev-set model selection.

use std::fmt;

use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AdamConfig, AdamState, DropoutMode, Graph};
use crate::conll::Sentence;
use crate::decomposition::{
    build_label_space, role_pairs_within, sense_pairs, DecompositionError, LabelSpace, PairKind, SenseLexicon,
    TaskMode, WordPairSample,
};
use crate::embeddings::EmbeddingTable;
use crate::evaluation::{score_semantic, EvalError};
use crate::model::{decode, Checkpoint, Model, ModelConfig, ModelError};
use crate::tensor::{Tensor, TensorError};
use crate::vocab::build_vocab;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Data(#[from] DecompositionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("non-finite loss at epoch {epoch}, step {step}, batch {batch}")]
    NonFinite { epoch: usize, step: u64, batch: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Approximate number of tokens per batch.
    pub batch_tokens: usize,
    pub max_epochs: usize,
    /// Dev evaluation interval in epochs.
    pub eval_every: usize,
    /// Evaluations without improvement before stopping.
    pub patience: usize,
    /// Global gradient-norm bound.
    pub clip_norm: f64,
    pub seed: u64,
    /// Forms and lemmas rarer than this map to the unknown symbol.
    pub min_count: usize,
    pub adam: AdamConfig,
    /// Parameters held fixed during training.
    pub frozen: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_tokens: 5000,
            max_epochs: 50,
            eval_every: 1,
            patience: 10,
            clip_norm: 5.0,
            seed: 1,
            min_count: 1,
            adam: AdamConfig::default(),
            frozen: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("batch_tokens", self.batch_tokens),
            ("max_epochs", self.max_epochs),
            ("eval_every", self.eval_every),
            ("patience", self.patience),
        ] {
            if v == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        if !(self.clip_norm > 0.0) {
            return Err(format!("clip_norm must be positive, got {}", self.clip_norm));
        }
        Ok(())
    }
}

/// One encoder pass: the sentence, the predicate its indicator marks, and
/// the pairs scored in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Pass {
    pub sentence: usize,
    pub predicate: Option<usize>,
    pub pairs: Vec<WordPairSample>,
    pub tokens: usize,
}

/// Training passes of a corpus. 2009: one pass per predicate scoring its
/// sense pair and role pairs. 2008: one pass without a marked predicate
/// scoring `(0, w)` for every word, then one role pass per predicate.
pub fn build_passes(corpus: &[Sentence], model: &Model) -> Result<Vec<Pass>, TrainError> {
    let labels = &model.labels;
    let mut out = Vec::new();
    for (i, s) in corpus.iter().enumerate() {
        if s.n_words() == 0 {
            continue;
        }
        let senses = sense_pairs(s, model.config.mode.sense_mode(), labels)?;
        if model.config.mode == TaskMode::Conll2008 {
            out.push(Pass {
                sentence: i,
                predicate: None,
                pairs: senses.clone(),
                tokens: s.n_words(),
            });
        }
        for p in s.predicate_positions() {
            let kept = model.candidates(s, p)?;
            let mut pairs = Vec::new();
            if model.config.mode == TaskMode::Conll2009 {
                pairs.extend(senses.iter().filter(|x| x.dependent == p));
            }
            pairs.extend(role_pairs_within(s, p, labels, &kept));
            out.push(Pass {
                sentence: i,
                predicate: Some(p),
                pairs,
                tokens: s.n_words(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    /// Indices into the pass list.
    pub passes: Vec<usize>,
    pub tokens: usize,
}

/// Seeded shuffle, then greedy filling up to `budget` tokens. A pass larger
/// than the budget forms its own batch.
pub fn make_batches(token_counts: &[usize], budget: usize, seed: u64) -> Vec<Batch> {
    let mut order: Vec<usize> = (0..token_counts.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::new();
    let mut current = Batch {
        passes: Vec::new(),
        tokens: 0,
    };
    for i in order {
        let n = token_counts[i];
        if !current.passes.is_empty() && current.tokens + n > budget {
            out.push(std::mem::replace(
                &mut current,
                Batch {
                    passes: Vec::new(),
                    tokens: 0,
                },
            ));
        }
        current.passes.push(i);
        current.tokens += n;
    }
    if !current.passes.is_empty() {
        out.push(current);
    }
    out
}

/// Mean cross-entropy over every pair of `passes`. In train mode the
/// gradients are added to the parameters' accumulators.
pub fn batch_loss<R: Rng + ?Sized>(
    model: &mut Model,
    corpus: &[Sentence],
    passes: &[&Pass],
    mode: DropoutMode,
    rng: &mut R,
) -> Result<f64, TrainError> {
    let total: usize = passes.iter().map(|p| p.pairs.iter().filter(|x| x.gold.is_some()).count()).sum();
    if total == 0 {
        return Ok(0.0);
    }
    let scale = 1.0 / total as f64;
    let mut loss = 0.0;
    let mut buffer: Vec<Option<Tensor>> = vec![None; model.params.len()];
    for pass in passes {
        let inputs = model.inputs(&corpus[pass.sentence]);
        let mut g = Graph::new(&model.params);
        let enc = model.encode_pass(&mut g, &inputs, pass.predicate, mode, rng)?;
        let scored: Vec<&WordPairSample> = pass.pairs.iter().filter(|x| x.gold.is_some()).collect();
        if scored.is_empty() {
            continue;
        }
        let pairs: Vec<(usize, usize)> = scored.iter().map(|x| (x.head, x.dependent)).collect();
        let scores = model.score_pairs(&mut g, &enc, &pairs)?;
        let ces = scores
            .iter()
            .zip(&scored)
            .map(|(s, x)| g.cross_entropy(*s, x.gold.expect("filtered")))
            .collect::<Result<Vec<_>, _>>()?;
        let sum = g.add_n(&ces)?;
        let pass_loss = g.scale(sum, scale);
        loss += g.value(pass_loss).item();
        if mode == DropoutMode::Train {
            let grads = g.backward(pass_loss)?;
            for (id, _) in model.params.iter() {
                if let Some(t) = grads.param(id) {
                    match &mut buffer[id.index()] {
                        Some(b) => b.add_assign(t),
                        slot => *slot = Some(t.clone()),
                    }
                }
            }
        }
    }
    for (p, b) in model.params.iter_mut().zip(buffer) {
        if let Some(b) = b {
            p.grad.add_assign(&b);
        }
    }
    Ok(loss)
}

/// Decoded-versus-gold agreement over every word pair of the passes.
pub fn pair_accuracy(model: &Model, corpus: &[Sentence], passes: &[Pass]) -> Result<(usize, usize), TrainError> {
    let sense_mask = model.config.mask_decoding.then(|| model.labels.sense_mask());
    let role_mask = model.config.mask_decoding.then(|| model.labels.role_mask());
    let mut correct = 0;
    let mut total = 0;
    for pass in passes {
        let inputs = model.inputs(&corpus[pass.sentence]);
        let pairs: Vec<(usize, usize)> = pass.pairs.iter().map(|x| (x.head, x.dependent)).collect();
        let rows = model.score_pass(&inputs, pass.predicate, &pairs)?;
        for (row, x) in rows.iter().zip(&pass.pairs) {
            let mask = match x.kind {
                PairKind::Sense => sense_mask.as_deref(),
                PairKind::Role => role_mask.as_deref(),
            };
            total += 1;
            if Some(decode(row, mask)?) == x.gold {
                correct += 1;
            }
        }
    }
    Ok((correct, total))
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub step: u64,
    /// Mean of the batch losses.
    pub loss: f64,
    /// Learning rate of the last update.
    pub learning_rate: f64,
    /// Dev precision, recall and F1, when evaluated this epoch.
    pub dev: Option<(f64, f64, f64)>,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} step={} loss={:.6} lr={:.8}",
            self.epoch, self.step, self.loss, self.learning_rate
        )?;
        if let Some((p, r, f1)) = self.dev {
            write!(f, " dev_p={p:.2} dev_r={r:.2} dev_f1={f1:.2}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The best model by dev F1.
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub epochs_run: usize,
    pub stopped_early: bool,
}

/// Vocabulary, labels and sense lexicon from `train`, then fresh weights.
pub fn init_model(
    train: &[Sentence],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Model, TrainError> {
    let labels: LabelSpace = build_label_space(train);
    let vocab = build_vocab(train, train_cfg.min_count, model_cfg.columns);
    let lexicon = SenseLexicon::build(train, model_cfg.columns);
    Ok(Model::new(model_cfg.clone(), labels, vocab, lexicon, embeddings, train_cfg.seed)?)
}

/// Semantic precision, recall and F1 of the model's predictions on `dev`.
pub fn dev_scores(model: &Model, dev: &[Sentence]) -> Result<(f64, f64, f64), TrainError> {
    let pred = model.annotate(dev, model.config.mode)?;
    let r = score_semantic(dev, &pred, model.config.mode)?;
    Ok((r.semantic.precision(), r.semantic.recall(), r.semantic.f1()))
}

/// Trains from scratch; see [`train_model`].
pub fn train(
    train_set: &[Sentence],
    dev: &[Sentence],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    embeddings: Option<&EmbeddingTable>,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainError> {
    let model = init_model(train_set, model_cfg, train_cfg, embeddings)?;
    train_model(model, train_set, dev, train_cfg, on_epoch)
}

/// Epoch loop: forward, backward, clipping and one Adam step per batch;
/// dev F1 every `eval_every` epochs; keeps the best model and stops after
/// `patience` evaluations without improvement.
pub fn train_model(
    mut model: Model,
    train_set: &[Sentence],
    dev: &[Sentence],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate().map_err(TrainError::Config)?;
    let trainable: Vec<bool> = model.params.iter().map(|(_, p)| p.trainable).collect();
    for name in &cfg.frozen {
        model
            .params
            .by_name_mut(name)
            .ok_or_else(|| TrainError::Config(format!("unknown parameter '{name}'")))?
            .trainable = false;
    }
    let passes = build_passes(train_set, &model)?;
    let tokens: Vec<usize> = passes.iter().map(|p| p.tokens).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(&model.params, cfg.adam);
    let mut best: Option<(f64, Model, u64)> = None;
    let mut stale = 0;
    let mut log = Vec::new();
    let mut stopped_early = false;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        let batches = make_batches(&tokens, cfg.batch_tokens, rng.gen());
        let mut loss_sum = 0.0;
        let mut lr = adam.current_learning_rate();
        for (b, batch) in batches.iter().enumerate() {
            let members: Vec<&Pass> = batch.passes.iter().map(|&i| &passes[i]).collect();
            let loss = batch_loss(&mut model, train_set, &members, DropoutMode::Train, &mut rng)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    step: adam.t,
                    batch: b,
                });
            }
            loss_sum += loss;
            model.params.clip_grad_norm(cfg.clip_norm);
            lr = adam.step(&mut model.params);
        }
        let mut entry = EpochLog {
            epoch,
            step: adam.t,
            loss: loss_sum / batches.len().max(1) as f64,
            learning_rate: lr,
            dev: None,
        };
        if epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs {
            let scores = dev_scores(&model, dev)?;
            entry.dev = Some(scores);
            if best.as_ref().is_none_or(|(f, _, _)| scores.2 > *f) {
                best = Some((scores.2, model.clone(), adam.t));
                stale = 0;
            } else {
                stale += 1;
            }
        }
        info!("{entry}");
        on_epoch(&entry);
        log.push(entry);
        if stale >= cfg.patience {
            stopped_early = true;
            break;
        }
    }

    let (best_f1, mut best_model, best_step) = best.unwrap_or_else(|| (0.0, model.clone(), adam.t));
    for (p, t) in best_model.params.iter_mut().zip(trainable) {
        p.trainable = t;
    }
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model: best_model,
            seed: cfg.seed,
            step: best_step,
            best_dev_f1: best_f1,
        },
        log,
        epochs_run,
        stopped_early,
    })
}
