use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, Variant};
use super::ModelError;
use crate::autodiff::{DropoutMode, Graph, ParamId, ParamStore, Var};
use crate::conll::Sentence;
use crate::decomposition::{LabelSpace, SenseLexicon};
use crate::embeddings::EmbeddingTable;
use crate::tensor::{Tensor, TensorError};
use crate::vocab::{Vocabulary, ROOT_ID};

/// Rows of the frozen pre-trained table before the first key.
pub const PRETRAINED_OOV_ROW: usize = 0;
pub const PRETRAINED_ROOT_ROW: usize = 1;
const PRETRAINED_OFFSET: usize = 2;

/// Row ids of one sentence, root first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceInputs {
    pub words: Vec<usize>,
    pub pretrained: Vec<usize>,
    pub lemmas: Vec<usize>,
    pub pos: Vec<usize>,
}

impl SentenceInputs {
    /// Length including the root.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct LstmIds {
    w_input: ParamId,
    w_hidden: ParamId,
    bias: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct Affine {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
struct ParamIds {
    word: ParamId,
    pretrained: Option<ParamId>,
    lemma: Option<ParamId>,
    pos: Option<ParamId>,
    indicator: Option<ParamId>,
    lstm: Vec<[LstmIds; 2]>,
    proj_pred: Affine,
    proj_arg: Affine,
    w_role: ParamId,
    u_role: Option<ParamId>,
    b_role: Option<ParamId>,
}

/// Projection outputs of one encoder pass, root at index 0.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub states: Vec<Var>,
    pub h_pred: Vec<Var>,
    pub h_arg: Vec<Var>,
}

/// Weights plus everything needed to map a sentence onto them.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub labels: LabelSpace,
    pub vocab: Vocabulary,
    pub lexicon: SenseLexicon,
    pub params: ParamStore,
    pretrained_keys: Vec<String>,
    pretrained_index: HashMap<String, usize>,
    ids: ParamIds,
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], bound: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-bound..=bound)).collect())
        .expect("positive dims")
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    uniform(rng, &[rows, cols], (6.0 / (rows + cols) as f64).sqrt())
}

fn embedding(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Tensor {
    uniform(rng, &[rows, dim], (3.0 / dim as f64).sqrt())
}

fn lookup_name(store: &ParamStore, name: &str) -> Result<ParamId, ModelError> {
    store
        .id(name)
        .ok_or_else(|| ModelError::Config(format!("missing parameter '{name}'")))
}

impl ParamIds {
    fn resolve(store: &ParamStore, config: &ModelConfig) -> Result<Self, ModelError> {
        let get = |name: &str| lookup_name(store, name);
        let opt = |on: bool, name: &str| on.then(|| get(name)).transpose();
        let mut lstm = Vec::new();
        for l in 0..config.lstm_layers {
            let dir = |d: &str| -> Result<LstmIds, ModelError> {
                Ok(LstmIds {
                    w_input: get(&format!("lstm.l{l}.{d}.w_input"))?,
                    w_hidden: get(&format!("lstm.l{l}.{d}.w_hidden"))?,
                    bias: get(&format!("lstm.l{l}.{d}.bias"))?,
                })
            };
            lstm.push([dir("fwd")?, dir("bwd")?]);
        }
        let affine = |head: &str| -> Result<Affine, ModelError> {
            Ok(Affine {
                w: get(&format!("proj.{head}.w"))?,
                b: get(&format!("proj.{head}.b"))?,
            })
        };
        let (proj_pred, proj_arg) = match config.variant {
            Variant::Sba => (affine("shared")?, affine("shared")?),
            _ => (affine("pred")?, affine("arg")?),
        };
        let linear = config.variant != Variant::Dba;
        Ok(ParamIds {
            word: get("word_embedding")?,
            pretrained: opt(config.use_pretrained, "pretrained_embedding")?,
            lemma: opt(config.use_lemma, "lemma_embedding")?,
            pos: opt(config.use_pos, "pos_embedding")?,
            indicator: opt(config.use_indicator, "indicator_embedding")?,
            lstm,
            proj_pred,
            proj_arg,
            w_role: get("biaffine.w_role")?,
            u_role: opt(linear, "biaffine.u_role")?,
            b_role: opt(linear, "biaffine.b_role")?,
        })
    }
}

/// Expected shape of every parameter, in creation order.
pub fn parameter_shapes(
    config: &ModelConfig,
    vocab: &Vocabulary,
    n_labels: usize,
    n_pretrained: usize,
) -> Vec<(String, Vec<usize>, bool)> {
    let mut out: Vec<(String, Vec<usize>, bool)> = Vec::new();
    let mut add = |name: String, shape: Vec<usize>, trainable: bool| out.push((name, shape, trainable));
    add("word_embedding".into(), vec![vocab.forms.len(), config.word_dim], true);
    if config.use_pretrained {
        add(
            "pretrained_embedding".into(),
            vec![n_pretrained + PRETRAINED_OFFSET, config.pretrained_dim],
            false,
        );
    }
    if config.use_lemma {
        add("lemma_embedding".into(), vec![vocab.lemmas.len(), config.lemma_dim], true);
    }
    if config.use_pos {
        add("pos_embedding".into(), vec![vocab.pos.len(), config.pos_dim], true);
    }
    if config.use_indicator {
        add("indicator_embedding".into(), vec![2, config.indicator_dim], true);
    }
    let h = config.lstm_hidden;
    for l in 0..config.lstm_layers {
        let input = if l == 0 { config.input_dim() } else { config.encoder_dim() };
        for d in ["fwd", "bwd"] {
            add(format!("lstm.l{l}.{d}.w_input"), vec![4 * h, input], true);
            add(format!("lstm.l{l}.{d}.w_hidden"), vec![4 * h, h], true);
            add(format!("lstm.l{l}.{d}.bias"), vec![4 * h], true);
        }
    }
    let heads: &[&str] = if config.variant == Variant::Sba { &["shared"] } else { &["pred", "arg"] };
    for head in heads {
        add(format!("proj.{head}.w"), vec![config.proj_dim, config.encoder_dim()], true);
        add(format!("proj.{head}.b"), vec![config.proj_dim], true);
    }
    let d = config.proj_dim;
    add("biaffine.w_role".into(), vec![d, n_labels, d], true);
    if config.variant != Variant::Dba {
        add("biaffine.u_role".into(), vec![n_labels, 2 * d], true);
        add("biaffine.b_role".into(), vec![n_labels], true);
    }
    out
}

impl Model {
    /// Fresh weights. Biaffine weights and bias start at zero, so every
    /// label initially scores 0.
    pub fn new(
        config: ModelConfig,
        labels: LabelSpace,
        vocab: Vocabulary,
        lexicon: SenseLexicon,
        embeddings: Option<&EmbeddingTable>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        config.validate().map_err(ModelError::Config)?;
        if let Some(e) = embeddings.filter(|_| config.use_pretrained) {
            if e.dim() != config.pretrained_dim {
                return Err(ModelError::Config(format!(
                    "pretrained_dim is {} but the embedding file has {} components",
                    config.pretrained_dim,
                    e.dim()
                )));
            }
        }
        let keys: Vec<String> = match embeddings {
            Some(e) if config.use_pretrained => e.keys().to_vec(),
            _ => Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let h = config.lstm_hidden;
        for (name, shape, trainable) in parameter_shapes(&config, &vocab, labels.len(), keys.len()) {
            let value = if name == "pretrained_embedding" {
                let mut t = Tensor::zeros(&shape);
                if let Some(e) = embeddings {
                    let dim = shape[1];
                    t.values_mut()[PRETRAINED_OFFSET * dim..].copy_from_slice(
                        &(0..e.len()).flat_map(|i| e.vector(i).to_vec()).collect::<Vec<_>>(),
                    );
                }
                t
            } else if name.ends_with("_embedding") {
                embedding(&mut rng, shape[0], shape[1])
            } else if name.starts_with("biaffine.") || (name.starts_with("proj.") && name.ends_with(".b")) {
                Tensor::zeros(&shape)
            } else if name.ends_with(".bias") {
                let mut b = Tensor::zeros(&shape);
                b.values_mut()[h..2 * h].fill(1.0);
                b
            } else {
                glorot(&mut rng, shape[0], shape[1])
            };
            store.add(name, value, trainable);
        }
        Model::from_parts(config, labels, vocab, lexicon, keys, store)
    }

    /// Assembles a model from loaded parts, checking every shape.
    pub fn from_parts(
        config: ModelConfig,
        labels: LabelSpace,
        vocab: Vocabulary,
        lexicon: SenseLexicon,
        pretrained_keys: Vec<String>,
        params: ParamStore,
    ) -> Result<Self, ModelError> {
        config.validate().map_err(ModelError::Config)?;
        let expected = parameter_shapes(&config, &vocab, labels.len(), pretrained_keys.len());
        if expected.len() != params.len() {
            return Err(ModelError::Config(format!(
                "expected {} parameters, found {}",
                expected.len(),
                params.len()
            )));
        }
        for (name, shape, _) in &expected {
            let p = params
                .by_name(name)
                .ok_or_else(|| ModelError::Config(format!("missing parameter '{name}'")))?;
            if p.value.shape() != shape.as_slice() {
                return Err(ModelError::Tensor(TensorError::Shape {
                    op: "load",
                    expected: format!("{name} {shape:?}"),
                    got: format!("{:?}", p.value.shape()),
                }));
            }
        }
        let ids = ParamIds::resolve(&params, &config)?;
        let pretrained_index = pretrained_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i + PRETRAINED_OFFSET))
            .collect();
        Ok(Model {
            config,
            labels,
            vocab,
            lexicon,
            params,
            pretrained_keys,
            pretrained_index,
            ids,
        })
    }

    pub fn pretrained_keys(&self) -> &[String] {
        &self.pretrained_keys
    }

    pub fn inputs(&self, sentence: &Sentence) -> SentenceInputs {
        let cols = self.config.columns;
        let mut inputs = SentenceInputs {
            words: vec![ROOT_ID],
            pretrained: vec![PRETRAINED_ROOT_ROW],
            lemmas: vec![ROOT_ID],
            pos: vec![ROOT_ID],
        };
        for t in &sentence.tokens {
            inputs.words.push(self.vocab.forms.id(&t.form));
            inputs.pretrained.push(
                self.pretrained_index
                    .get(&t.form.to_lowercase())
                    .copied()
                    .unwrap_or(PRETRAINED_OOV_ROW),
            );
            inputs.lemmas.push(self.vocab.lemmas.id(cols.lemma(t)));
            inputs.pos.push(self.vocab.pos.id(cols.pos(t)));
        }
        inputs
    }

    /// `e^(r) ⊕ e^(p) ⊕ e^(l) ⊕ e^(pos) ⊕ e^(i)` for position `i`, with
    /// disabled blocks left out and dropout applied in train mode.
    pub fn word_representation<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        inputs: &SentenceInputs,
        i: usize,
        is_predicate: bool,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Var, TensorError> {
        let ids = &self.ids;
        let mut parts = vec![g.lookup(ids.word, inputs.words[i])?];
        if let Some(p) = ids.pretrained {
            parts.push(g.lookup(p, inputs.pretrained[i])?);
        }
        if let Some(p) = ids.lemma {
            parts.push(g.lookup(p, inputs.lemmas[i])?);
        }
        if let Some(p) = ids.pos {
            parts.push(g.lookup(p, inputs.pos[i])?);
        }
        if let Some(p) = ids.indicator {
            parts.push(g.lookup(p, is_predicate as usize)?);
        }
        let e = g.concat(&parts)?;
        g.dropout(e, 1.0 - self.config.word_dropout, mode, None, rng)
    }

    fn lstm_direction<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        xs: &[Var],
        p: LstmIds,
        reverse: bool,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Vec<Var>, TensorError> {
        let h = self.config.lstm_hidden;
        let keep = self.config.recurrent_keep;
        let in_dim = g.value(xs[0]).len();
        let train = mode == DropoutMode::Train && keep < 1.0;
        let in_mask = train.then(|| crate::autodiff::dropout_mask(in_dim, keep, rng)).transpose()?;
        let h_mask = train.then(|| crate::autodiff::dropout_mask(h, keep, rng)).transpose()?;

        let (wx, wh, b) = (g.param(p.w_input), g.param(p.w_hidden), g.param(p.bias));
        let mut out = vec![None; xs.len()];
        let mut state: Option<(Var, Var)> = None;
        let order: Vec<usize> = if reverse {
            (0..xs.len()).rev().collect()
        } else {
            (0..xs.len()).collect()
        };
        for t in order {
            let x = match &in_mask {
                Some(m) => g.apply_mask(xs[t], m)?,
                None => xs[t],
            };
            let mut terms = vec![g.matvec(wx, x)?, b];
            if let Some((h_prev, _)) = state {
                let h_in = match &h_mask {
                    Some(m) => g.apply_mask(h_prev, m)?,
                    None => h_prev,
                };
                terms.push(g.matvec(wh, h_in)?);
            }
            let z = g.add_n(&terms)?;
            let zi = g.slice(z, 0, h)?;
            let zf = g.slice(z, h, h)?;
            let zo = g.slice(z, 2 * h, h)?;
            let zg = g.slice(z, 3 * h, h)?;
            let i_gate = g.sigmoid(zi);
            let o_gate = g.sigmoid(zo);
            let cand = g.tanh(zg);
            let mut c = g.mul(i_gate, cand)?;
            if let Some((_, c_prev)) = state {
                let f_gate = g.sigmoid(zf);
                let kept = g.mul(f_gate, c_prev)?;
                c = g.add(kept, c)?;
            }
            let tc = g.tanh(c);
            let h_t = g.mul(o_gate, tc)?;
            out[t] = Some(h_t);
            state = Some((h_t, c));
        }
        Ok(out.into_iter().map(|v| v.expect("every step visited")).collect())
    }

    /// Stacked BiLSTM; each output is the forward state ⊕ backward state.
    pub fn encode<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        reps: &[Var],
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Vec<Var>, TensorError> {
        if reps.is_empty() {
            return Err(TensorError::Argument {
                op: "encode",
                message: "empty sequence".into(),
            });
        }
        let mut xs = reps.to_vec();
        for layer in &self.ids.lstm {
            let fwd = self.lstm_direction(g, &xs, layer[0], false, mode, rng)?;
            let bwd = self.lstm_direction(g, &xs, layer[1], true, mode, rng)?;
            xs = fwd
                .iter()
                .zip(&bwd)
                .map(|(f, b)| g.concat(&[*f, *b]))
                .collect::<Result<_, _>>()?;
        }
        Ok(xs)
    }

    fn affine_relu<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        x: Var,
        a: Affine,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Var, TensorError> {
        let (w, b) = (g.param(a.w), g.param(a.b));
        let wx = g.matvec(w, x)?;
        let z = g.add(wx, b)?;
        let h = g.relu(z);
        g.dropout(h, self.config.projection_keep, mode, None, rng)
    }

    /// `(h^(pred), h^(arg))` of one encoder state.
    pub fn project<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        state: Var,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<(Var, Var), TensorError> {
        let hp = self.affine_relu(g, state, self.ids.proj_pred, mode, rng)?;
        if self.config.variant == Variant::Sba {
            return Ok((hp, hp));
        }
        let ha = self.affine_relu(g, state, self.ids.proj_arg, mode, rng)?;
        Ok((hp, ha))
    }

    /// Word representations, encoder and projections for one pass; the
    /// indicator marks `predicate` when given.
    pub fn encode_pass<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        inputs: &SentenceInputs,
        predicate: Option<usize>,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Encoded, TensorError> {
        let reps = (0..inputs.len())
            .map(|i| self.word_representation(g, inputs, i, predicate == Some(i), mode, rng))
            .collect::<Result<Vec<_>, _>>()?;
        let states = self.encode(g, &reps, mode, rng)?;
        let mut h_pred = Vec::with_capacity(states.len());
        let mut h_arg = Vec::with_capacity(states.len());
        for &s in &states {
            let (p, a) = self.project(g, s, mode, rng)?;
            h_pred.push(p);
            h_arg.push(a);
        }
        Ok(Encoded { states, h_pred, h_arg })
    }

    /// `h_argᵀ W h_pred + U(h_arg ⊕ h_pred) + b`; the DBA variant keeps only
    /// the bilinear term. `contracted` is `W h_pred` when already computed.
    pub fn biaffine_score(
        &self,
        g: &mut Graph,
        h_arg: Var,
        h_pred: Var,
        contracted: Option<Var>,
    ) -> Result<Var, TensorError> {
        let m = match contracted {
            Some(m) => m,
            None => {
                let w = g.param(self.ids.w_role);
                g.contract(w, h_pred)?
            }
        };
        let bilinear = g.vecmat(h_arg, m)?;
        match (self.ids.u_role, self.ids.b_role) {
            (Some(u), Some(b)) => {
                let u = g.param(u);
                let b = g.param(b);
                let pair = g.concat(&[h_arg, h_pred])?;
                let linear = g.matvec(u, pair)?;
                g.add_n(&[bilinear, linear, b])
            }
            _ => Ok(bilinear),
        }
    }

    /// Score vectors for `(head, dependent)` pairs of an encoded pass.
    pub fn score_pairs(
        &self,
        g: &mut Graph,
        enc: &Encoded,
        pairs: &[(usize, usize)],
    ) -> Result<Vec<Var>, TensorError> {
        let w = g.param(self.ids.w_role);
        let mut contracted: HashMap<usize, Var> = HashMap::new();
        let mut out = Vec::with_capacity(pairs.len());
        for &(head, dep) in pairs {
            let m = match contracted.get(&head) {
                Some(&m) => m,
                None => {
                    let m = g.contract(w, enc.h_pred[head])?;
                    contracted.insert(head, m);
                    m
                }
            };
            out.push(self.biaffine_score(g, enc.h_arg[dep], enc.h_pred[head], Some(m))?);
        }
        Ok(out)
    }

    /// Inference-mode score rows for `pairs` in one pass.
    pub fn score_pass(
        &self,
        inputs: &SentenceInputs,
        predicate: Option<usize>,
        pairs: &[(usize, usize)],
    ) -> Result<Vec<Vec<f64>>, TensorError> {
        let mut g = Graph::new(&self.params);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let enc = self.encode_pass(&mut g, inputs, predicate, DropoutMode::Infer, &mut rng)?;
        let scores = self.score_pairs(&mut g, &enc, pairs)?;
        Ok(scores.iter().map(|s| g.value(*s).values().to_vec()).collect())
    }

    pub fn param_id(&self, name: &str) -> Option<ParamId> {
        self.params.id(name)
    }
}
