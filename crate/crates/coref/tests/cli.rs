use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coref::jsonl::{parse_jsonl, write_gold_jsonl};
use coref_core::corpus::Span;
use coref_core::synth::{generate_corpus, SynthConfig};
use tempfile::TempDir;

fn coref(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coref")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = TempDir::new().unwrap();
        let docs = generate_corpus(&SynthConfig {
            n_docs: 4,
            pronoun_rate: 0.3,
            speakers: true,
            ..SynthConfig::default()
        });
        std::fs::write(dir.path().join("train.jsonl"), write_gold_jsonl(&docs).unwrap()).unwrap();
        let config = r#"{"d_model": 8, "layers": 1, "heads": 2, "d_hid": 8, "d_pair": 8,
            "clusterer": "s2e", "epochs": 2, "lr_heads": 1e-3, "lr_encoder": 1e-3}"#;
        std::fs::write(dir.path().join("cfg.json"), config).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn train(&self) -> PathBuf {
        ok(&coref(&[
            "train",
            "--config",
            &self.s("cfg.json"),
            "--train",
            &self.s("train.jsonl"),
            "--out",
            &self.s("model.mvk"),
        ]));
        self.path("model.mvk")
    }
}

fn conll_f1(json: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["conll_f1"].as_f64().unwrap()
}

#[test]
fn train_predict_evaluate_stats() {
    let fx = Fixture::new();
    let model = fx.train();
    assert!(model.exists());
    let log = std::fs::read_to_string(fx.path("model.mvk.log")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains("dev_conll_f1")).count(), 2);

    let model = model.display().to_string();
    ok(&coref(&["predict", "--model", &model, "--input", &fx.s("train.jsonl"), "--output", &fx.s("pred.jsonl")]));
    let report = ok(&coref(&["evaluate", "--gold", &fx.s("train.jsonl"), "--pred", &fx.s("pred.jsonl")]));
    let f1 = conll_f1(&report);
    assert!((0.0..=1.0).contains(&f1));

    let same = ok(&coref(&["evaluate", "--gold", &fx.s("train.jsonl"), "--pred", &fx.s("train.jsonl")]));
    assert_eq!(conll_f1(&same), 1.0);

    let table = ok(&coref(&["stats", "--input", &fx.s("train.jsonl")]));
    assert!(table.contains("total"));
    let with_model = ok(&coref(&["stats", "--input", &fx.s("train.jsonl"), "--model", &model]));
    assert!(with_model.contains("clustering"));
}

#[test]
fn gold_mentions_only_yield_gold_spans() {
    let fx = Fixture::new();
    let model = fx.train().display().to_string();
    ok(&coref(&[
        "predict",
        "--model",
        &model,
        "--input",
        &fx.s("train.jsonl"),
        "--output",
        &fx.s("pred.jsonl"),
        "--gold-mentions",
        "--singletons",
        "--threshold",
        "0.7",
    ]));
    let gold = parse_jsonl(&std::fs::read_to_string(fx.path("train.jsonl")).unwrap()).unwrap();
    let pred = parse_jsonl(&std::fs::read_to_string(fx.path("pred.jsonl")).unwrap()).unwrap();
    assert_eq!(gold.len(), pred.len());
    for (g, p) in gold.iter().zip(&pred) {
        let gold_spans: Vec<Span> = g.gold_clusters.iter().flatten().copied().collect();
        let pred_spans: Vec<Span> = p.gold_clusters.iter().flatten().copied().collect();
        assert!(pred_spans.iter().all(|s| gold_spans.contains(s)));
        // With singletons kept, every gold mention is placed somewhere.
        assert_eq!(pred_spans.len(), gold_spans.len());
    }
}

#[test]
fn empty_input_gives_empty_output() {
    let fx = Fixture::new();
    let model = fx.train().display().to_string();
    std::fs::write(fx.path("empty.jsonl"), "").unwrap();
    ok(&coref(&["predict", "--model", &model, "--input", &fx.s("empty.jsonl"), "--output", &fx.s("out.jsonl")]));
    assert_eq!(std::fs::read_to_string(fx.path("out.jsonl")).unwrap(), "");
}

fn conll_file(dir: &Path, name: &str, coref_cells: [&str; 3]) -> String {
    let mut text = String::from("#begin document d\n");
    for (i, (tok, cell)) in ["a", "b", "c"].iter().zip(coref_cells).enumerate() {
        text.push_str(&format!("d\t0\t{i}\t{tok}\t{cell}\n"));
    }
    text.push_str("\n#end document\n");
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn worked_example_files() {
    let dir = TempDir::new().unwrap();
    let gold = conll_file(dir.path(), "gold.conll", ["(0)", "(0)", "(0)"]);
    let pred = conll_file(dir.path(), "pred.conll", ["(0)", "(0)", "(1)"]);
    let f1 = conll_f1(&ok(&coref(&["evaluate", "--gold", &gold, "--pred", &pred])));
    assert!((f1 - 0.6381).abs() < 5e-5, "{f1}");
    assert_eq!(conll_f1(&ok(&coref(&["evaluate", "--gold", &gold, "--pred", &gold]))), 1.0);
}

#[test]
fn error_paths_exit_nonzero() {
    let fx = Fixture::new();
    let model = fx.train().display().to_string();

    std::fs::write(fx.path("zero.json"), r#"{"epochs": 0}"#).unwrap();
    let out = coref(&["train", "--config", &fx.s("zero.json"), "--train", &fx.s("train.jsonl"), "--out", &fx.s("z")]);
    assert!(!out.status.success());

    std::fs::write(fx.path("typo.json"), r#"{"epoch": 3}"#).unwrap();
    let out = coref(&["train", "--config", &fx.s("typo.json"), "--train", &fx.s("train.jsonl"), "--out", &fx.s("z")]);
    assert!(!out.status.success());

    let text = std::fs::read_to_string(fx.path("train.jsonl")).unwrap();
    let first_two: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    std::fs::write(fx.path("partial.jsonl"), first_two).unwrap();
    let out = coref(&["evaluate", "--gold", &fx.s("train.jsonl"), "--pred", &fx.s("partial.jsonl")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("synth_002"));

    let mut bytes = std::fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes.truncate(mid);
    std::fs::write(fx.path("broken.mvk"), bytes).unwrap();
    let out = coref(&["predict", "--model", &fx.s("broken.mvk"), "--input", &fx.s("train.jsonl"), "--output", &fx.s("o")]);
    assert!(!out.status.success());

    let out = coref(&["predict", "--model", &model, "--input", &fx.s("missing.jsonl"), "--output", &fx.s("o")]);
    assert!(!out.status.success());

    let out = coref(&["predict", "--model", &model, "--input", &fx.s("train.jsonl"), "--output", &fx.s("o"), "--threshold", "1.5"]);
    assert!(!out.status.success());

    std::fs::write(fx.path("bad.conll"), "#begin document x\nx\t0\t0\ta\t(0\n#end document\n").unwrap();
    let out = coref(&["stats", "--input", &fx.s("bad.conll")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}
