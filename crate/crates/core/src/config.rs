//! Run configuration: every tunable as a flat `key=value` setting.
//!
//! A config file holds one `key = value` per line; blank lines and lines
//! starting with `#` are ignored. Unknown keys are rejected. Later settings
//! override earlier ones, so command-line flags applied after the file win.

use std::fmt::Write;
use std::str::FromStr;

use crate::decoder::{DecodeConfig, Mode};
use crate::error::{Error, Result};
use crate::ffnn::TrainConfig;
use crate::lstm_lm::LmConfig;
use crate::transition::Variant;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub variant: Variant,
    pub min_count: usize,
    pub threads: usize,
    pub train: TrainConfig,
    pub lm: LmConfig,
    pub decode: DecodeConfig,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            seed: 1,
            variant: Variant::Full,
            min_count: 1,
            threads: 1,
            train: TrainConfig::default(),
            lm: LmConfig::default(),
            decode: DecodeConfig::default(),
        }
    }
}

/// Every key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "seed for initialization, shuffling and dropout"),
    ("variant", "transition system: full or light"),
    ("min_count", "words seen fewer times become UNK"),
    ("threads", "decoding threads"),
    ("learning_rate", "linearizer Adagrad learning rate"),
    ("l2", "linearizer L2 coefficient"),
    ("dropout", "linearizer hidden-layer dropout"),
    ("epochs", "linearizer training epochs"),
    ("batch_size", "linearizer examples per update"),
    ("embed_dim", "linearizer embedding width"),
    ("hidden", "linearizer hidden units"),
    ("init_range", "linearizer uniform initialization range"),
    ("adagrad_eps", "linearizer Adagrad epsilon"),
    ("lm.layers", "LSTM layers"),
    ("lm.n_units", "LSTM units per layer (also the word embedding width)"),
    ("lm.dropout", "LSTM dropout on non-recurrent connections"),
    ("lm.bias", "LSTM gate bias: true or false"),
    ("lm.learning_rate", "LSTM Adagrad learning rate"),
    ("lm.l2", "LSTM L2 coefficient"),
    ("lm.epochs", "LSTM training epochs"),
    ("lm.batch_size", "LSTM sentences per update"),
    ("lm.init_range", "LSTM uniform initialization range"),
    ("lm.adagrad_eps", "LSTM Adagrad epsilon"),
    ("mode", "decoding mode: syn, lstm-only, syn+lstm or syn*lstm"),
    ("beam", "beam size (1 is greedy)"),
    ("alpha", "LM weight in syn+lstm mode"),
    ("normalize", "renormalize syn+lstm scores per step: true or false"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "seed" => {
                self.seed = parse(key, v)?;
                self.train.seed = self.seed;
                self.lm.seed = self.seed;
            }
            "variant" => self.variant = v.parse()?,
            "min_count" => self.min_count = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "learning_rate" => self.train.learning_rate = parse(key, v)?,
            "l2" => self.train.l2 = parse(key, v)?,
            "dropout" => self.train.dropout = parse(key, v)?,
            "epochs" => self.train.epochs = parse(key, v)?,
            "batch_size" => self.train.batch_size = parse(key, v)?,
            "embed_dim" => self.train.embed_dim = parse(key, v)?,
            "hidden" => self.train.hidden = parse(key, v)?,
            "init_range" => self.train.init_range = parse(key, v)?,
            "adagrad_eps" => self.train.adagrad_eps = parse(key, v)?,
            "lm.layers" => self.lm.layers = parse(key, v)?,
            "lm.n_units" => self.lm.n_units = parse(key, v)?,
            "lm.dropout" => self.lm.dropout = parse(key, v)?,
            "lm.bias" => self.lm.bias = parse(key, v)?,
            "lm.learning_rate" => self.lm.learning_rate = parse(key, v)?,
            "lm.l2" => self.lm.l2 = parse(key, v)?,
            "lm.epochs" => self.lm.epochs = parse(key, v)?,
            "lm.batch_size" => self.lm.batch_size = parse(key, v)?,
            "lm.init_range" => self.lm.init_range = parse(key, v)?,
            "lm.adagrad_eps" => self.lm.adagrad_eps = parse(key, v)?,
            "mode" => self.decode.mode = v.parse::<Mode>()?,
            "beam" => self.decode.beam_size = parse(key, v)?,
            "alpha" => self.decode.alpha = parse(key, v)?,
            "normalize" => self.decode.normalize = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{assignment}'")))?;
        self.set(k, v)
    }

    /// Applies every setting of a config file's text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.set_assignment(line).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "seed" => self.seed.to_string(),
            "variant" => self.variant.to_string(),
            "min_count" => self.min_count.to_string(),
            "threads" => self.threads.to_string(),
            "learning_rate" => self.train.learning_rate.to_string(),
            "l2" => self.train.l2.to_string(),
            "dropout" => self.train.dropout.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "batch_size" => self.train.batch_size.to_string(),
            "embed_dim" => self.train.embed_dim.to_string(),
            "hidden" => self.train.hidden.to_string(),
            "init_range" => self.train.init_range.to_string(),
            "adagrad_eps" => self.train.adagrad_eps.to_string(),
            "lm.layers" => self.lm.layers.to_string(),
            "lm.n_units" => self.lm.n_units.to_string(),
            "lm.dropout" => self.lm.dropout.to_string(),
            "lm.bias" => self.lm.bias.to_string(),
            "lm.learning_rate" => self.lm.learning_rate.to_string(),
            "lm.l2" => self.lm.l2.to_string(),
            "lm.epochs" => self.lm.epochs.to_string(),
            "lm.batch_size" => self.lm.batch_size.to_string(),
            "lm.init_range" => self.lm.init_range.to_string(),
            "lm.adagrad_eps" => self.lm.adagrad_eps.to_string(),
            "mode" => self.decode.mode.to_string(),
            "beam" => self.decode.beam_size.to_string(),
            "alpha" => self.decode.alpha.to_string(),
            "normalize" => self.decode.normalize.to_string(),
            _ => return None,
        })
    }

    /// All settings as a config file, with descriptions as comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, doc) in KEYS {
            writeln!(out, "# {doc}").unwrap();
            writeln!(out, "{key} = {}", self.get(key).expect("listed key")).unwrap();
        }
        out
    }
}
