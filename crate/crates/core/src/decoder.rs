//! Greedy, beam and exhaustive search over derivations.
//!
//! Four scoring modes:
//!
//! * `syn`: linearizer log-probabilities over legal actions.
//! * `syn+lstm`: `syn` plus `α · log p_LM(w)` on every `Shift-w`, the LM
//!   distribution being restricted to the remaining bag. Non-shift actions get
//!   no LM term. The sum is not renormalized unless asked.
//! * `syn×lstm`: the linearizer reads the LM's top-layer output as an extra
//!   feature block.
//! * `lstm-only`: the LM alone picks the next word from the remaining bag; the
//!   derivation has `n` shifts and builds no tree.
//!
//! In the LM modes the LM state starts after `<s>` and advances only on
//! `Shift`. All items of a beam have taken the same number of actions, and
//! every derivation of a bag has the same length, so the search runs a fixed
//! number of steps. Equal scores are ordered by derivation history, comparing
//! actions in their canonical order.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Indexers, WordBag};
use crate::error::{Error, Result};
use crate::features;
use crate::ffnn::{bag_word_ids, ActionInventory};
use crate::lstm_lm::{LanguageModel, LmState};
use crate::math::log_softmax;
use crate::model::Linearizer;
use crate::transition::{Action, DepArc, State, TransitionSystem, Variant};

/// Largest bag [`Decoder::exhaustive_decode`] accepts in tree-building modes.
pub const EXHAUSTIVE_TREE_BOUND: usize = 6;
/// Largest bag [`Decoder::exhaustive_decode`] accepts in `lstm-only` mode.
pub const EXHAUSTIVE_LM_BOUND: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "syn")]
    Syn,
    #[serde(rename = "lstm-only")]
    LstmOnly,
    #[serde(rename = "syn+lstm")]
    Joint,
    #[serde(rename = "syn×lstm")]
    Feature,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Syn, Mode::LstmOnly, Mode::Joint, Mode::Feature];

    pub fn needs_linearizer(self) -> bool {
        self != Mode::LstmOnly
    }

    pub fn needs_lm(self) -> bool {
        self != Mode::Syn
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Syn => "syn",
            Mode::LstmOnly => "lstm-only",
            Mode::Joint => "syn+lstm",
            Mode::Feature => "syn×lstm",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    /// Accepts the display names plus the ASCII spellings `syn*lstm`,
    /// `synxlstm`, `feature`, `joint` and `lstm`.
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "syn" => Ok(Mode::Syn),
            "lstm-only" | "lstm" => Ok(Mode::LstmOnly),
            "syn+lstm" | "joint" => Ok(Mode::Joint),
            "syn×lstm" | "syn*lstm" | "synxlstm" | "feature" => Ok(Mode::Feature),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected syn, lstm-only, syn+lstm or syn*lstm)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub mode: Mode,
    pub beam_size: usize,
    /// LM weight in `syn+lstm` mode.
    pub alpha: f64,
    /// Renormalize the interpolated `syn+lstm` scores over the legal actions.
    pub normalize: bool,
}

impl Default for DecodeConfig {
    fn default() -> DecodeConfig {
        DecodeConfig {
            mode: Mode::Syn,
            beam_size: 10,
            alpha: 0.4,
            normalize: false,
        }
    }
}

/// The models a decoder may draw on.
#[derive(Clone, Copy, Debug, Default)]
pub struct Models<'a> {
    pub linearizer: Option<&'a Linearizer>,
    pub lm: Option<&'a LanguageModel>,
}

/// Per-bag lookup tables shared by all items of a search.
#[derive(Debug)]
struct BagIds {
    word: Vec<usize>,
    lm: Vec<usize>,
}

/// A partial derivation.
#[derive(Clone, Debug)]
pub struct BeamItem {
    pub state: State,
    pub score: f64,
    pub lm_state: Option<LmState>,
    history: Vec<Action>,
    ids: Arc<BagIds>,
}

impl BeamItem {
    pub fn history(&self) -> &[Action] {
        &self.history
    }
}

/// An arc of a decoded tree between bag tokens, with its label name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedArc {
    pub head: usize,
    pub dependent: usize,
    pub label: Option<String>,
}

/// A complete derivation and its realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    /// Bag token indices in output order.
    pub tokens: Vec<usize>,
    pub forms: Vec<String>,
    /// Arcs between bag tokens; empty in `lstm-only` mode.
    pub arcs: Vec<NamedArc>,
    pub derivation: Vec<Action>,
    /// Derivation as action names, e.g. `Shift-I Pos-PRP RArc-dobj`.
    pub names: Vec<String>,
    pub score: f64,
}

impl Decoded {
    pub fn sentence(&self) -> String {
        self.forms.join(" ")
    }
}

/// A decoding strategy bound to its models.
#[derive(Clone, Debug)]
pub struct Decoder<'a> {
    pub config: DecodeConfig,
    models: Models<'a>,
    system: TransitionSystem,
    inventory: Option<ActionInventory>,
}

fn by_score_then_history(a: (f64, &[Action], Action), b: (f64, &[Action], Action)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.cmp(b.1))
        .then_with(|| a.2.cmp(&b.2))
}

impl<'a> Decoder<'a> {
    /// Checks that `models` fit `config.mode`.
    pub fn new(models: Models<'a>, config: DecodeConfig) -> Result<Decoder<'a>> {
        if config.beam_size == 0 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        let mode = config.mode;
        if mode.needs_lm() && models.lm.is_none() {
            return Err(Error::Config(format!("mode {mode} needs a language model")));
        }
        let linearizer = match (mode.needs_linearizer(), models.linearizer) {
            (true, None) => {
                return Err(Error::Config(format!("mode {mode} needs a linearizer model")))
            }
            (true, Some(l)) => Some(l),
            (false, _) => None,
        };
        if let Some(l) = linearizer {
            match (mode, l.params.lm_dim()) {
                (Mode::Feature, None) => {
                    return Err(Error::Config(
                        "mode syn×lstm needs a linearizer trained with language-model features".into(),
                    ))
                }
                (Mode::Feature, Some(dim)) => {
                    let n = models.lm.expect("checked").params.n_units();
                    if dim != n {
                        return Err(Error::Config(format!(
                            "linearizer expects LM features of width {dim}, language model has {n} units"
                        )));
                    }
                }
                (_, Some(_)) => {
                    return Err(Error::Config(format!(
                        "linearizer was trained with language-model features; mode {mode} cannot feed them (use syn×lstm)"
                    )))
                }
                (_, None) => {}
            }
        }
        let (system, inventory) = match linearizer {
            Some(l) => (
                TransitionSystem::new(l.variant, &l.indexers),
                Some(ActionInventory::new(l.variant, &l.indexers)),
            ),
            None => (
                TransitionSystem {
                    variant: Variant::Light,
                    n_pos: 0,
                    n_labels: 0,
                },
                None,
            ),
        };
        Ok(Decoder {
            config,
            models,
            system,
            inventory,
        })
    }

    fn linearizer(&self) -> &'a Linearizer {
        self.models.linearizer.expect("validated in Decoder::new")
    }

    fn lm(&self) -> &'a LanguageModel {
        self.models.lm.expect("validated in Decoder::new")
    }

    fn indexers(&self) -> &'a Indexers {
        match self.models.linearizer {
            Some(l) if self.config.mode.needs_linearizer() => &l.indexers,
            _ => &self.lm().indexers,
        }
    }

    /// Number of actions in every derivation of an `n`-word bag.
    pub fn derivation_len(&self, n: usize) -> usize {
        match self.config.mode {
            Mode::LstmOnly => n,
            _ => self.system.variant.derivation_len(n),
        }
    }

    pub fn initial_item(&self, bag: Arc<WordBag>) -> Result<BeamItem> {
        let state = self.system.initial_state(bag.clone())?;
        let word = match self.config.mode {
            Mode::LstmOnly => Vec::new(),
            _ => bag_word_ids(&bag, &self.linearizer().indexers),
        };
        let (lm, lm_state) = match self.config.mode {
            Mode::Syn => (Vec::new(), None),
            _ => {
                let lm = self.lm();
                let ids = bag.forms().iter().map(|f| lm.word_id(f)).collect();
                (ids, Some(lm.start_state()))
            }
        };
        Ok(BeamItem {
            state,
            score: 0.0,
            lm_state,
            history: Vec::new(),
            ids: Arc::new(BagIds { word, lm }),
        })
    }

    fn is_complete(&self, item: &BeamItem) -> bool {
        match self.config.mode {
            Mode::LstmOnly => item.state.remaining() == 0,
            _ => item.state.is_terminal(),
        }
    }

    /// Log scores of every action available to `item`, in canonical action
    /// order.
    pub fn step_scores(&self, item: &BeamItem) -> Result<Vec<(Action, f64)>> {
        let state = &item.state;
        if self.is_complete(item) {
            return Err(Error::NotTerminal);
        }
        let mode = self.config.mode;
        let legal: Vec<Action> = match mode {
            Mode::LstmOnly => (0..state.bag().n_forms())
                .filter(|&s| state.remaining_count(s) > 0)
                .map(Action::Shift)
                .collect(),
            _ => self.system.legal_actions(state),
        };
        let lm_scores = |shifts: &[usize]| -> Vec<f64> {
            let ids: Vec<usize> = shifts.iter().map(|&s| item.ids.lm[s]).collect();
            let lm_state = item.lm_state.as_ref().expect("LM modes carry an LM state");
            self.lm().params.next_word_log_probs(lm_state, &ids)
        };
        if mode == Mode::LstmOnly {
            let slots: Vec<usize> = legal
                .iter()
                .map(|a| match a {
                    Action::Shift(s) => *s,
                    _ => unreachable!("lstm-only offers shifts only"),
                })
                .collect();
            return Ok(legal.into_iter().zip(lm_scores(&slots)).collect());
        }

        let lin = self.linearizer();
        let inventory = self.inventory.as_ref().expect("tree modes have an inventory");
        let fv = features::extract(state, &item.ids.word, lin.variant);
        let lm_feat = match mode {
            Mode::Feature => item.lm_state.as_ref().map(LmState::top),
            _ => None,
        };
        let h = lin.params.hidden_one(&fv, lm_feat)?;
        let rows: Vec<usize> = legal.iter().map(|&a| inventory.row(a, &item.ids.word)).collect();
        let mut scores = lin.params.log_probs_from_hidden(h.view(), &rows);
        if mode == Mode::Joint {
            let shifts: Vec<(usize, usize)> = legal
                .iter()
                .enumerate()
                .filter_map(|(k, a)| match a {
                    Action::Shift(s) => Some((k, *s)),
                    _ => None,
                })
                .collect();
            if !shifts.is_empty() {
                let slots: Vec<usize> = shifts.iter().map(|p| p.1).collect();
                for ((k, _), lp) in shifts.iter().zip(lm_scores(&slots)) {
                    scores[*k] += self.config.alpha * lp;
                }
            }
            if self.config.normalize {
                scores = log_softmax(&scores);
            }
        }
        Ok(legal.into_iter().zip(scores).collect())
    }

    /// The successor of `item` after `action` worth `step_score`.
    pub fn advance(&self, item: &BeamItem, action: Action, step_score: f64) -> Result<BeamItem> {
        let state = self.system.apply(&item.state, action)?;
        let lm_state = match (&item.lm_state, action) {
            (Some(ls), Action::Shift(slot)) => Some(self.lm().params.step(ls, item.ids.lm[slot])?),
            (ls, _) => ls.clone(),
        };
        let mut history = Vec::with_capacity(item.history.len() + 1);
        history.extend_from_slice(&item.history);
        history.push(action);
        let next = BeamItem {
            state,
            score: item.score + step_score,
            lm_state,
            history,
            ids: item.ids.clone(),
        };
        if cfg!(debug_assertions) {
            if let Some(ls) = &next.lm_state {
                let shifted: Vec<usize> =
                    next.state.shifted_slots().iter().map(|&s| next.ids.lm[s]).collect();
                debug_assert_eq!(&ls.prefix()[1..], shifted.as_slice());
            }
        }
        Ok(next)
    }

    fn finish(&self, item: &BeamItem) -> Result<Decoded> {
        let bag = item.state.bag();
        let (tokens, arcs) = match self.config.mode {
            Mode::LstmOnly => {
                let mut seen = vec![0; bag.n_forms()];
                let tokens = item
                    .state
                    .shifted_slots()
                    .into_iter()
                    .map(|s| {
                        seen[s] += 1;
                        bag.first_token(s) + seen[s] - 1
                    })
                    .collect();
                (tokens, Vec::new())
            }
            _ => (item.state.realized_sentence()?, item.state.arcs()),
        };
        let indexers = self.indexers();
        let arcs = arcs
            .into_iter()
            .map(|a: DepArc| NamedArc {
                head: a.head,
                dependent: a.dependent,
                label: a.label.map(|l| indexers.labels.item(l).to_string()),
            })
            .collect();
        Ok(Decoded {
            forms: tokens.iter().map(|&t| bag.token_form(t).to_string()).collect(),
            tokens,
            arcs,
            names: item.history.iter().map(|a| a.name(bag, indexers)).collect(),
            derivation: item.history.clone(),
            score: item.score,
        })
    }

    /// Synchronous beam search; beam size 1 is greedy decoding.
    pub fn beam_decode(&self, bag: Arc<WordBag>) -> Result<Decoded> {
        let steps = self.derivation_len(bag.len());
        let mut beam = vec![self.initial_item(bag)?];
        for _ in 0..steps {
            let mut candidates: Vec<(usize, Action, f64, f64)> = Vec::new();
            for (p, item) in beam.iter().enumerate() {
                for (a, s) in self.step_scores(item)? {
                    candidates.push((p, a, s, item.score + s));
                }
            }
            candidates.sort_by(|x, y| {
                by_score_then_history(
                    (x.3, &beam[x.0].history, x.1),
                    (y.3, &beam[y.0].history, y.1),
                )
            });
            candidates.truncate(self.config.beam_size);
            beam = candidates
                .into_iter()
                .map(|(p, a, s, _)| self.advance(&beam[p], a, s))
                .collect::<Result<_>>()?;
        }
        let best = &beam[0];
        debug_assert!(beam.iter().all(|i| self.is_complete(i)));
        self.finish(best)
    }

    pub fn greedy_decode(&self, bag: Arc<WordBag>) -> Result<Decoded> {
        Decoder {
            config: DecodeConfig {
                beam_size: 1,
                ..self.config.clone()
            },
            ..self.clone()
        }
        .beam_decode(bag)
    }

    /// Scores every derivation of `bag` and returns the best together with
    /// the number of derivations enumerated.
    pub fn exhaustive_decode(&self, bag: Arc<WordBag>) -> Result<(Decoded, usize)> {
        let bound = match self.config.mode {
            Mode::LstmOnly => EXHAUSTIVE_LM_BOUND,
            _ => EXHAUSTIVE_TREE_BOUND,
        };
        if bag.len() > bound {
            return Err(Error::SearchTooLarge { n: bag.len(), bound });
        }
        let mut best: Option<BeamItem> = None;
        let mut count = 0;
        self.enumerate(self.initial_item(bag)?, &mut best, &mut count)?;
        let best = best.expect("every bag has a derivation");
        Ok((self.finish(&best)?, count))
    }

    fn enumerate(&self, item: BeamItem, best: &mut Option<BeamItem>, count: &mut usize) -> Result<()> {
        if self.is_complete(&item) {
            *count += 1;
            let better = match best {
                None => true,
                Some(b) => item
                    .score
                    .total_cmp(&b.score)
                    .then_with(|| b.history.cmp(&item.history))
                    == Ordering::Greater,
            };
            if better {
                *best = Some(item);
            }
            return Ok(());
        }
        for (a, s) in self.step_scores(&item)? {
            let next = self.advance(&item, a, s)?;
            self.enumerate(next, best, count)?;
        }
        Ok(())
    }
}
