//! Single-file checkpoint: a header line, a JSON manifest, then one binary
//! section per parameter holding row-major little-endian f64 values.
//!
//! ```text
//! biaffine-srl checkpoint
//! manifest <bytes>
//! {...}
//! param <name> <rank> <dim…> <bytes>
//! <raw values>
//! end
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ModelConfig;
use super::network::{parameter_shapes, Model};
use super::ModelError;
use crate::autodiff::ParamStore;
use crate::decomposition::{LabelSpace, SenseLexicon};
use crate::tensor::Tensor;
use crate::vocab::Vocabulary;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "biaffine-srl checkpoint";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported checkpoint version: {0}")]
    Version(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("parameter '{name}': expected shape {expected:?}, found {found:?}")]
    Shape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("checkpoint truncated: {0}")]
    Truncated(String),
    #[error("checkpoint configuration conflicts with the requested one: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    config: ModelConfig,
    labels: LabelSpace,
    vocab: Vocabulary,
    lexicon: SenseLexicon,
    pretrained_keys: Vec<String>,
    seed: u64,
    step: u64,
    best_dev_f1: f64,
}

/// Trained model plus training bookkeeping.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub seed: u64,
    pub step: u64,
    pub best_dev_f1: f64,
}

pub fn checkpoint_bytes(ckpt: &Checkpoint) -> Vec<u8> {
    let m = &ckpt.model;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: m.config.clone(),
        labels: m.labels.clone(),
        vocab: m.vocab.clone(),
        lexicon: m.lexicon.clone(),
        pretrained_keys: m.pretrained_keys().to_vec(),
        seed: ckpt.seed,
        step: ckpt.step,
        best_dev_f1: ckpt.best_dev_f1,
    };
    let json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let mut out = Vec::new();
    out.extend_from_slice(format!("{MAGIC}\nmanifest {}\n", json.len()).as_bytes());
    out.extend_from_slice(&json);
    out.push(b'\n');
    for (_, p) in m.params.iter() {
        let shape = p.value.shape();
        let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
        let nbytes = p.value.len() * 8;
        out.extend_from_slice(
            format!("param {} {} {} {nbytes}\n", p.name, shape.len(), dims.join(" ")).as_bytes(),
        );
        for v in p.value.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(b'\n');
    }
    out.extend_from_slice(b"end\n");
    out
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&checkpoint_bytes(ckpt))?;
    f.flush()?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<&'a str, CheckpointError> {
        let rest = &self.data[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| CheckpointError::Truncated("missing line terminator".into()))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| CheckpointError::Manifest("header is not UTF-8".into()))
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.data.len() - self.pos < n + 1 {
            return Err(CheckpointError::Truncated(format!("expected {n} more bytes")));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        if self.data[self.pos] != b'\n' {
            return Err(CheckpointError::Truncated("section not terminated".into()));
        }
        self.pos += 1;
        Ok(out)
    }
}

fn parse_num(s: Option<&str>, what: &str) -> Result<usize, CheckpointError> {
    s.and_then(|v| v.parse().ok())
        .ok_or_else(|| CheckpointError::Manifest(format!("bad {what} in section header")))
}

pub fn checkpoint_from_bytes(data: &[u8], expected: Option<&ModelConfig>) -> Result<Checkpoint, CheckpointError> {
    let mut cur = Cursor { data, pos: 0 };
    let magic = cur.line()?;
    if magic != MAGIC {
        return Err(CheckpointError::Version(format!("unrecognized header '{magic}'")));
    }
    let header = cur.line()?;
    let n = match header.split_once(' ') {
        Some(("manifest", n)) => parse_num(Some(n), "manifest length")?,
        _ => return Err(CheckpointError::Manifest("missing manifest header".into())),
    };
    let json = cur.bytes(n)?;
    let raw: serde_json::Value =
        serde_json::from_slice(json).map_err(|e| CheckpointError::Version(format!("unreadable manifest: {e}")))?;
    match raw.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(CheckpointError::Version(format!("version {v}, expected {FORMAT_VERSION}"))),
        None => return Err(CheckpointError::Version("manifest has no format_version".into())),
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| CheckpointError::Manifest(e.to_string()))?;
    if let Some(want) = expected {
        if want != &manifest.config {
            return Err(CheckpointError::ConfigMismatch(describe_difference(want, &manifest.config)));
        }
    }

    let shapes = parameter_shapes(
        &manifest.config,
        &manifest.vocab,
        manifest.labels.len(),
        manifest.pretrained_keys.len(),
    );
    let mut store = ParamStore::new();
    for (name, shape, trainable) in shapes {
        let header = cur.line()?;
        let mut parts = header.split(' ');
        if parts.next() != Some("param") {
            return Err(CheckpointError::Truncated(format!("missing section for '{name}'")));
        }
        let found_name = parts.next().unwrap_or_default();
        if found_name != name {
            return Err(CheckpointError::Manifest(format!("expected section '{name}', found '{found_name}'")));
        }
        let rank = parse_num(parts.next(), "rank")?;
        let dims = (0..rank)
            .map(|_| parse_num(parts.next(), "dimension"))
            .collect::<Result<Vec<_>, _>>()?;
        if dims != shape {
            return Err(CheckpointError::Shape {
                name,
                expected: shape,
                found: dims,
            });
        }
        let nbytes = parse_num(parts.next(), "byte count")?;
        let count: usize = dims.iter().product();
        if nbytes != count * 8 {
            return Err(CheckpointError::Manifest(format!("'{name}' declares {nbytes} bytes for {count} values")));
        }
        let raw = cur.bytes(nbytes)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::new(dims, values).map_err(ModelError::from)?;
        store.add(name, t, trainable);
    }
    if cur.line()? != "end" {
        return Err(CheckpointError::Manifest("unexpected trailing section".into()));
    }
    let model = Model::from_parts(
        manifest.config,
        manifest.labels,
        manifest.vocab,
        manifest.lexicon,
        manifest.pretrained_keys,
        store,
    )?;
    Ok(Checkpoint {
        model,
        seed: manifest.seed,
        step: manifest.step,
        best_dev_f1: manifest.best_dev_f1,
    })
}

/// Loads a checkpoint; with `expected` set, its configuration must match.
pub fn load_checkpoint(path: &Path, expected: Option<&ModelConfig>) -> Result<Checkpoint, CheckpointError> {
    let data = fs::read(path)?;
    checkpoint_from_bytes(&data, expected)
}

fn describe_difference(a: &ModelConfig, b: &ModelConfig) -> String {
    let (ja, jb) = (
        serde_json::to_value(a).expect("config serializes"),
        serde_json::to_value(b).expect("config serializes"),
    );
    let (Some(oa), Some(ob)) = (ja.as_object(), jb.as_object()) else {
        return "configurations differ".into();
    };
    let diffs: Vec<String> = oa
        .iter()
        .filter(|(k, v)| ob.get(*k) != Some(v))
        .map(|(k, v)| format!("{k}: requested {v}, checkpoint {}", ob.get(k).cloned().unwrap_or_default()))
        .collect();
    diffs.join("; ")
}
