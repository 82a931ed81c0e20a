//! The command implementations behind the `linearizer` binary.
//!
//! Decode output is one tab-separated record per input sentence:
//!
//! ```text
//! id  sentence  score  derivation  arcs
//! ```
//!
//! `derivation` joins action names with spaces (`Shift-I Pos-PRP ... End`);
//! `arcs` lists `head->dependent:label` over 1-based output positions, or
//! `-` in `lstm-only` mode.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::container::{Component, ModelFile};
use crate::corpus::{parse_conll_lenient, replay, to_bag, DepSentence, Rejection, WordBag};
use crate::decoder::{Decoded, Decoder, Models};
use crate::error::{Error, Result};
use crate::eval::{action_neighbors, corpus_bleu};
use crate::lstm_lm::train_lm;
use crate::model::train_linearizer;
use crate::optim::Tensors;
use crate::transition::Variant;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

/// Reads a treebank, reporting sentences that were skipped.
pub fn read_corpus(path: &Path, log: &mut dyn Write) -> Result<Vec<DepSentence>> {
    let (sentences, rejected) = parse_conll_lenient(&read(path)?).map_err(|e| e.in_file(path))?;
    report_rejections(path, &rejected, log)?;
    if sentences.is_empty() {
        return Err(Error::Data("no usable sentences".into()).in_file(path));
    }
    Ok(sentences)
}

fn report_rejections(path: &Path, rejected: &[Rejection], log: &mut dyn Write) -> Result<()> {
    if !rejected.is_empty() {
        writeln!(log, "{}: skipped {} sentence(s)", path.display(), rejected.len())?;
        for r in rejected {
            writeln!(log, "  sentence {} (line {}): {}", r.sentence, r.line, r.reason)?;
        }
    }
    Ok(())
}

pub fn train_lm_cmd(corpus: &Path, output: &Path, config: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let sentences = read_corpus(corpus, log)?;
    let indexers = crate::corpus::build_indexers(&sentences, config.min_count);
    let (lm, history) = train_lm(&sentences, indexers, config.lm.clone())?;
    for (i, e) in history.epochs.iter().enumerate() {
        writeln!(log, "epoch {} perplexity {:.4}", i + 1, e.perplexity)?;
    }
    ModelFile::lm(lm).save(output)
}

pub fn train_cmd(
    corpus: &Path,
    output: &Path,
    lm_path: Option<&Path>,
    config: &RunConfig,
    log: &mut dyn Write,
) -> Result<()> {
    let sentences = read_corpus(corpus, log)?;
    let lm = match lm_path {
        Some(p) => {
            let file = ModelFile::load(p)?;
            Some(file.lm.ok_or_else(|| {
                Error::Config("file holds no language model".into()).in_file(p)
            })?)
        }
        None => None,
    };
    let (model, history) =
        train_linearizer(&sentences, config.variant, &config.train, config.min_count, lm.as_ref())?;
    for (i, e) in history.epochs.iter().enumerate() {
        writeln!(log, "epoch {} loss {:.6} norm {:.4}", i + 1, e.mean_loss, e.param_norm)?;
    }
    ModelFile {
        linearizer: Some(model),
        lm,
    }
    .save(output)
}

/// How decode input is laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    /// A treebank; each sentence's words form one bag.
    Conll,
    /// One bag per line, words separated by whitespace.
    Bags,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<InputFormat> {
        match s {
            "conll" => Ok(InputFormat::Conll),
            "bags" | "bag" => Ok(InputFormat::Bags),
            _ => Err(Error::Config(format!("unknown input format '{s}'"))),
        }
    }
}

pub fn read_bags(path: &Path, format: InputFormat, log: &mut dyn Write) -> Result<Vec<WordBag>> {
    match format {
        InputFormat::Conll => Ok(read_corpus(path, log)?.iter().map(to_bag).collect()),
        InputFormat::Bags => Ok(read(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| WordBag::new(l.split_whitespace()))
            .collect()),
    }
}

/// One output record (without the trailing newline).
pub fn format_record(id: usize, d: &Decoded) -> String {
    let mut position = vec![0; d.tokens.len()];
    for (p, &t) in d.tokens.iter().enumerate() {
        position[t] = p + 1;
    }
    let arcs = if d.arcs.is_empty() {
        "-".to_string()
    } else {
        let mut arcs: Vec<(usize, usize, String)> = d
            .arcs
            .iter()
            .map(|a| (position[a.dependent], position[a.head], a.label.clone().unwrap_or_default()))
            .collect();
        arcs.sort();
        arcs.iter()
            .map(|(dep, head, l)| {
                if l.is_empty() {
                    format!("{head}->{dep}")
                } else {
                    format!("{head}->{dep}:{l}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "{id}\t{}\t{:.6}\t{}\t{arcs}",
        d.sentence(),
        d.score,
        d.names.join(" ")
    )
}

/// Loads the models named on the command line. A combined file supplies its
/// own language model.
pub fn load_models(model: Option<&Path>, lm: Option<&Path>) -> Result<ModelFile> {
    let mut out = ModelFile {
        linearizer: None,
        lm: None,
    };
    if let Some(p) = model {
        let f = ModelFile::load(p)?;
        match f.component()? {
            Component::Lm => out.lm = f.lm,
            _ => {
                out.linearizer = f.linearizer;
                out.lm = f.lm;
            }
        }
    }
    if let Some(p) = lm {
        let f = ModelFile::load(p)?;
        let lm = f
            .lm
            .ok_or_else(|| Error::Config("file holds no language model".into()).in_file(p))?;
        if let Some(existing) = &out.lm {
            if existing != &lm {
                return Err(Error::Config(
                    "the linearizer carries its own language model; --lm names a different one".into(),
                ));
            }
        }
        out.lm = Some(lm);
    }
    Ok(out)
}

/// Decodes every bag, in parallel over `threads`, keeping input order.
pub fn decode_bags(models: &ModelFile, bags: Vec<WordBag>, config: &RunConfig) -> Result<Vec<Decoded>> {
    let decoder = Decoder::new(
        Models {
            linearizer: models.linearizer.as_ref(),
            lm: models.lm.as_ref(),
        },
        config.decode.clone(),
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        bags.into_par_iter()
            .map(|b| decoder.beam_decode(Arc::new(b)))
            .collect()
    })
}

pub fn decode_cmd(
    model: Option<&Path>,
    lm: Option<&Path>,
    input: &Path,
    format: InputFormat,
    config: &RunConfig,
    out: &mut dyn Write,
    log: &mut dyn Write,
) -> Result<()> {
    let models = load_models(model, lm)?;
    let bags = read_bags(input, format, log)?;
    for (i, d) in decode_bags(&models, bags, config)?.iter().enumerate() {
        writeln!(out, "{}", format_record(i + 1, d))?;
    }
    Ok(())
}

/// Reads sentences as token lists from a treebank, a decode output file or
/// plain text (one sentence per line).
pub fn read_sentences(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = read(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let is_conll = first.is_some_and(|l| l.split('\t').count() >= 8);
    if is_conll {
        let (sentences, rejected) = parse_conll_lenient(&text).map_err(|e| e.in_file(path))?;
        if let Some(r) = rejected.first() {
            return Err(Error::Data(format!(
                "sentence {} (line {}) is unusable: {}",
                r.sentence, r.line, r.reason
            ))
            .in_file(path));
        }
        return Ok(sentences
            .iter()
            .map(|s| s.forms().iter().map(|f| f.to_string()).collect())
            .collect());
    }
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let sentence = match l.split('\t').collect::<Vec<_>>() {
                fields if fields.len() >= 2 => fields[1],
                _ => l,
            };
            sentence.split_whitespace().map(String::from).collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    KeyValue,
}

pub fn evaluate_cmd(refs: &Path, hyps: &Path, format: ReportFormat) -> Result<String> {
    let mut r = read_sentences(refs)?;
    let mut h = read_sentences(hyps)?;
    // plain-text files may end in blank lines
    for list in [&mut r, &mut h] {
        while list.last().is_some_and(Vec::is_empty) {
            list.pop();
        }
    }
    let report = corpus_bleu(&r, &h)?;
    Ok(match format {
        ReportFormat::Table => report.to_table(),
        ReportFormat::KeyValue => report.to_key_values(),
    })
}

pub fn inspect_cmd(model: &Path, action: Option<&str>, k: usize) -> Result<String> {
    let file = ModelFile::load(model)?;
    let mut out = String::new();
    match action {
        Some(action) => {
            let lin = file.linearizer.as_ref().ok_or_else(|| {
                Error::Config("action neighbours need a linearizer model".into()).in_file(model)
            })?;
            writeln!(out, "rank\taction\tcosine").unwrap();
            for (i, (name, c)) in action_neighbors(lin, action, k)?.iter().enumerate() {
                writeln!(out, "{}\t{name}\t{c:.6}", i + 1).unwrap();
            }
        }
        None => {
            let component = file.component()?;
            writeln!(out, "component\t{component:?}").unwrap();
            if let Some(l) = &file.linearizer {
                writeln!(out, "variant\t{}", l.variant).unwrap();
                writeln!(
                    out,
                    "vocabulary\twords={} pos={} labels={}",
                    l.indexers.n_words(),
                    l.indexers.n_pos(),
                    l.indexers.n_labels()
                )
                .unwrap();
                for t in l.params.tensors() {
                    writeln!(out, "tensor\t{}\t{:?}", t.name, t.shape).unwrap();
                }
            }
            if let Some(lm) = &file.lm {
                writeln!(
                    out,
                    "lm\tlayers={} units={} vocabulary={}",
                    lm.config.layers,
                    lm.config.n_units,
                    lm.params.vocab_size()
                )
                .unwrap();
                for t in lm.params.tensors() {
                    writeln!(out, "tensor\t{}\t{:?}", t.name, t.shape).unwrap();
                }
            }
        }
    }
    Ok(out)
}

/// Derives and replays the oracle of every sentence. A replay that does not
/// reproduce its gold tree is a hard error.
pub fn oracle_check_cmd(corpus: &Path, variant: Variant, min_count: usize) -> Result<String> {
    let (sentences, rejected) = parse_conll_lenient(&read(corpus)?).map_err(|e| e.in_file(corpus))?;
    let indexers = crate::corpus::build_indexers(&sentences, min_count);
    let mut pass = 0;
    for (i, s) in sentences.iter().enumerate() {
        let r = replay(s, &indexers, variant).map_err(|e| e.in_file(corpus))?;
        if !r.matches_gold(s, &indexers) {
            return Err(Error::Oracle(format!(
                "sentence {} does not round-trip: {}",
                i + 1,
                s.forms().join(" ")
            ))
            .in_file(corpus));
        }
        pass += 1;
    }
    let mut out = String::new();
    writeln!(out, "variant={variant}").unwrap();
    writeln!(out, "sentences={}", sentences.len() + rejected.len()).unwrap();
    writeln!(out, "pass={pass}").unwrap();
    writeln!(out, "skipped={}", rejected.len()).unwrap();
    for r in &rejected {
        writeln!(out, "# skipped sentence {} (line {}): {}", r.sentence, r.line, r.reason).unwrap();
    }
    Ok(out)
}
