use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use biaffine_srl::conll::{to_string, Format};
use biaffine_srl::toy::toy_corpus;
use tempfile::TempDir;

fn srl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srl")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const REDUCED: &str = "\
[model]
word_dim = 16
lemma_dim = 16
pos_dim = 8
indicator_dim = 8
use_pretrained = false
lstm_layers = 1
lstm_hidden = 32
proj_dim = 32
";

/// Toy corpus of `n` sentences plus a config training on it.
fn toy_setup(dir: &TempDir, n: usize, training: &str) -> (PathBuf, PathBuf) {
    let data = dir.path().join("toy.conll09");
    fs::write(&data, to_string(&toy_corpus(n, 3, 7), Format::Conll2009)).unwrap();
    let config = dir.path().join("run.cfg");
    let text = format!(
        "# toy run\n[data]\ntrain = toy.conll09\ndev = toy.conll09\ncheckpoint = model.ckpt\nlog = train.log\n{REDUCED}[training]\n{training}"
    );
    fs::write(&config, text).unwrap();
    (data, config)
}

#[test]
fn train_predict_evaluate_on_toy_corpus() {
    let dir = TempDir::new().unwrap();
    let (data, config) = toy_setup(&dir, 50, "batch_tokens = 200\nmax_epochs = 200\neval_every = 5\npatience = 4\n");
    let out = srl(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ckpt = dir.path().join("model.ckpt");
    assert!(ckpt.exists());
    let best: f64 = stdout(&out)
        .split("best dev F1 ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(best >= 99.0, "{}", stdout(&out));
    let log = fs::read_to_string(dir.path().join("train.log")).unwrap();
    assert!(log.lines().next().unwrap().starts_with("epoch=1 "));

    // the overfit model reproduces the gold columns
    let pred = dir.path().join("pred.conll09");
    let out = srl(&[
        "predict", "--model", ckpt.to_str().unwrap(), "--input", data.to_str().unwrap(),
        "--output", pred.to_str().unwrap(), "--mode", "conll2009",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&pred).unwrap(), fs::read_to_string(&data).unwrap());

    let out = srl(&[
        "evaluate", "--gold", data.to_str().unwrap(), "--pred", pred.to_str().unwrap(),
        "--mode", "conll2009", "--tsv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("semantic_f1\t100.0000"));

    // wrong task mode for this checkpoint
    let out = srl(&[
        "predict", "--model", ckpt.to_str().unwrap(), "--input", data.to_str().unwrap(),
        "--output", pred.to_str().unwrap(), "--mode", "conll2008",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let empty = dir.path().join("empty.conll09");
    fs::write(&empty, "").unwrap();
    let empty_out = dir.path().join("empty.out");
    let out = srl(&[
        "predict", "--model", ckpt.to_str().unwrap(), "--input", empty.to_str().unwrap(),
        "--output", empty_out.to_str().unwrap(), "--mode", "conll2009",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&empty_out).unwrap(), "");

    let out = srl(&[
        "predict", "--model", data.to_str().unwrap(), "--input", data.to_str().unwrap(),
        "--output", empty_out.to_str().unwrap(), "--mode", "conll2009",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn predict_touches_only_semantic_columns() {
    let dir = TempDir::new().unwrap();
    let (_, config) = toy_setup(&dir, 10, "max_epochs = 2\n");
    assert_eq!(srl(&["train", "--config", config.to_str().unwrap()]).status.code(), Some(0));
    let input = fixture("treebank.conll09");
    let pred = dir.path().join("pred");
    let out = srl(&[
        "predict", "--model", dir.path().join("model.ckpt").to_str().unwrap(),
        "--input", input.to_str().unwrap(), "--output", pred.to_str().unwrap(), "--mode", "conll2009",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let original = fs::read_to_string(&input).unwrap();
    let written = fs::read_to_string(&pred).unwrap();
    let (a, b): (Vec<&str>, Vec<&str>) = (original.lines().collect(), written.lines().collect());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        let (x, y): (Vec<&str>, Vec<&str>) = (x.split('\t').collect(), y.split('\t').collect());
        // ID through PDEPREL, then FILLPRED which is given in 2009 mode
        assert_eq!(x.get(..13), y.get(..13));
    }
}

#[test]
fn same_seed_gives_identical_logs() {
    let dir = TempDir::new().unwrap();
    let (_, config) = toy_setup(&dir, 8, "max_epochs = 3\nbatch_tokens = 60\n");
    let cfg = config.to_str().unwrap();
    let mut logs = Vec::new();
    let mut ckpts = Vec::new();
    for _ in 0..2 {
        assert_eq!(srl(&["train", "--config", cfg, "--seed", "7"]).status.code(), Some(0));
        logs.push(fs::read_to_string(dir.path().join("train.log")).unwrap());
        ckpts.push(fs::read(dir.path().join("model.ckpt")).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
    assert_eq!(ckpts[0], ckpts[1]);
    assert_eq!(logs[0].lines().count(), 3);
}

#[test]
fn config_and_data_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "train = x\nhidden_units = 3\n").unwrap();
    let out = srl(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("hidden_units"));

    fs::write(&cfg, "train = missing.conll09\ncheckpoint = m.ckpt\n").unwrap();
    let out = srl(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("missing.conll09"));

    fs::write(&cfg, "lstm_hidden = 0\n").unwrap();
    assert_eq!(srl(&["train", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));

    let broken = dir.path().join("broken.conll09");
    fs::write(&broken, "1\tonly\ttwo\n").unwrap();
    fs::write(&cfg, "train = broken.conll09\ncheckpoint = m.ckpt\n").unwrap();
    let out = srl(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 1"));

    assert_eq!(srl(&[]).status.code(), Some(2));
    assert_eq!(srl(&["evaluate", "--gold", "x"]).status.code(), Some(2));
    assert_eq!(srl(&["stats", "--input", "x", "--k-max", "2", "--mode", "conll2010"]).status.code(), Some(2));
}

#[test]
fn evaluate_fixtures() {
    let gold = fixture("eval_gold.conll09");
    let out = srl(&[
        "evaluate", "--gold", gold.to_str().unwrap(), "--pred", fixture("eval_pred.conll09").to_str().unwrap(),
        "--mode", "conll2009",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().contains("F1  66.67"), "{text}");

    let out = srl(&["evaluate", "--gold", gold.to_str().unwrap(), "--pred", gold.to_str().unwrap(), "--mode", "conll2009", "--tsv"]);
    let text = stdout(&out);
    for key in ["semantic_precision", "semantic_recall", "semantic_f1"] {
        assert!(text.contains(&format!("{key}\t100.0000")), "{text}");
    }
    assert!(text.lines().all(|l| l.split('\t').count() == 2));

    let out = srl(&[
        "evaluate", "--gold", fixture("pred_gold.conll08").to_str().unwrap(),
        "--pred", fixture("pred_pred.conll08").to_str().unwrap(), "--mode", "conll2008", "--tsv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("predicate_f1\t40.0000"));

    // different sentence counts
    let out = srl(&[
        "evaluate", "--gold", gold.to_str().unwrap(), "--pred", fixture("treebank.conll09").to_str().unwrap(),
        "--mode", "conll2009",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn stats_rows() {
    let out = srl(&["stats", "--input", fixture("treebank.conll09").to_str().unwrap(), "--k-max", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1] && w[1][2] <= w[0][2]);
    }
    assert_eq!(&rows[8][1..], &[100.0, 0.0]);

    let dir = TempDir::new().unwrap();
    let headless = dir.path().join("headless.conll09");
    let text = fs::read_to_string(fixture("gene_sentence.conll09")).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split('\t').collect();
            if f.len() > 9 {
                f[8] = "_";
            }
            f.join("\t") + "\n"
        })
        .collect();
    fs::write(&headless, stripped).unwrap();
    let out = srl(&["stats", "--input", headless.to_str().unwrap(), "--k-max", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn ablation_table() {
    let dir = TempDir::new().unwrap();
    let (_, config) = toy_setup(&dir, 50, "batch_tokens = 200\nmax_epochs = 120\neval_every = 5\npatience = 3\n");
    let cfg = config.to_str().unwrap();
    let out = srl(&["ablate", "--config", cfg, "--variants", "full,dba,sba"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let echo: Vec<&str> = text.lines().take(3).collect();
    assert!(echo[2].starts_with("sba\t") && echo[2].contains("heads=shared"), "{text}");
    for line in &echo[..2] {
        let acc: f64 = line.split("pair_accuracy=").nth(1).unwrap().parse().unwrap();
        assert!(acc >= 99.0, "{line}");
    }
    let table: Vec<&str> = text.lines().skip(4).collect();
    assert!(table[0].starts_with("configuration"));
    let names: Vec<&str> = table[1..].iter().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, vec!["dba", "full", "sba"]);

    let out = srl(&["ablate", "--config", cfg, "--variants", "full,no-syntax"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no-syntax"));
}

#[test]
fn ablation_single_row() {
    let dir = TempDir::new().unwrap();
    let (_, config) = toy_setup(&dir, 5, "max_epochs = 1\n");
    let out = srl(&["ablate", "--config", config.to_str().unwrap(), "--variants", "full"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let table: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(table.len(), 2, "{text}");
    assert!(table[1].starts_with("full"));
}
