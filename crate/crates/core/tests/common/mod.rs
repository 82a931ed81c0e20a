#![allow(dead_code)]

use std::path::PathBuf;

use linearizer::corpus::{parse_conll, DepSentence};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

pub fn load(name: &str) -> Vec<DepSentence> {
    let text = std::fs::read_to_string(data_path(name)).expect("bundled corpus");
    parse_conll(&text).expect("bundled corpus parses")
}

pub fn forms(s: &DepSentence) -> Vec<String> {
    s.forms().into_iter().map(String::from).collect()
}

/// `(reference, hypothesis, score)` rows of the sacrebleu fixture and the
/// pooled corpus score over all of them.
pub fn sacrebleu_pairs() -> (Vec<(Vec<String>, Vec<String>, f64)>, f64) {
    let text = std::fs::read_to_string(fixture_path("sacrebleu_pairs.tsv")).expect("fixture");
    let mut rows = Vec::new();
    let mut pooled = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# pooled\t") {
            pooled = Some(rest.parse().expect("pooled score"));
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let toks = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
        rows.push((toks(f[0]), toks(f[1]), f[2].parse().expect("score")));
    }
    (rows, pooled.expect("pooled line"))
}
