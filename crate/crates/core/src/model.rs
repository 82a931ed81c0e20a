//! A trained linearizer: symbol tables, variant, hyperparameters and
//! weights, plus the glue that turns a treebank into training examples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{build_indexers, replay, DepSentence, Indexers};
use crate::error::{Error, Result};
use crate::ffnn::{replay_examples, Example, LinearizerParams, TrainConfig, TrainLog};
use crate::lstm_lm::LanguageModel;
use crate::transition::{Action, Variant};

#[derive(Clone, Debug, PartialEq)]
pub struct Linearizer {
    pub variant: Variant,
    pub indexers: Indexers,
    pub config: TrainConfig,
    pub params: LinearizerParams,
}

impl Linearizer {
    /// Whether the network reads language-model features.
    pub fn uses_lm(&self) -> bool {
        self.params.lm_dim().is_some()
    }
}

/// Top-layer LM outputs for every step of a derivation over `forms`: the
/// state after `<s>` and the words shifted so far.
pub fn lm_features(lm: &LanguageModel, actions: &[Action], slot_form: impl Fn(usize) -> String) -> Vec<Vec<f64>> {
    let mut state = lm.start_state();
    let mut out = Vec::with_capacity(actions.len());
    for &a in actions {
        out.push(state.top().to_vec());
        if let Action::Shift(slot) = a {
            state = lm
                .params
                .step(&state, lm.word_id(&slot_form(slot)))
                .expect("LM ids are in range");
        }
    }
    out
}

/// Oracle examples for every sentence of `corpus`.
pub fn build_examples(
    corpus: &[DepSentence],
    indexers: &Indexers,
    variant: Variant,
    lm: Option<&LanguageModel>,
) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for sentence in corpus {
        let r = replay(sentence, indexers, variant)?;
        let feats = lm.map(|lm| lm_features(lm, &r.actions, |s| r.bag.form(s).to_string()));
        out.extend(replay_examples(&r, indexers, feats));
    }
    Ok(out)
}

/// Builds the symbol tables, derives oracles and trains a linearizer. With
/// `lm`, the network gets a feature block fed by the frozen language model.
pub fn train_linearizer(
    corpus: &[DepSentence],
    variant: Variant,
    config: &TrainConfig,
    min_count: usize,
    lm: Option<&LanguageModel>,
) -> Result<(Linearizer, TrainLog)> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Data("training corpus is empty".into()));
    }
    let indexers = build_indexers(corpus, min_count);
    if variant == Variant::Full && (indexers.n_pos() <= 1 || indexers.n_labels() <= 1) {
        return Err(Error::Data(
            "full variant needs POS tags and arc labels, but the corpus has none; use the light variant".into(),
        ));
    }
    let examples = build_examples(corpus, &indexers, variant, lm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lm_dim = lm.map(|lm| lm.params.n_units());
    let mut params = LinearizerParams::new(variant, &indexers, config, lm_dim, &mut rng);
    let log = params.train(&examples, config)?;
    Ok((
        Linearizer {
            variant,
            indexers,
            config: config.clone(),
            params,
        },
        log,
    ))
}
