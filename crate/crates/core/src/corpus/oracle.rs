use std::sync::Arc;

use super::{to_bag_aligned, DepSentence, Indexers, WordBag};
use crate::error::{Error, Result};
use crate::transition::{Action, DepArc, State, TransitionSystem, Variant};

/// Gold action sequence for `sentence`.
///
/// Arc-standard over the gold word order: `RightArc` as soon as the top item
/// is complete and attaches to the item below; `LeftArc` when the item below
/// is complete and attaches to the top, unless the top still has right
/// dependents to collect, in which case the next word is shifted first.
/// Repeated forms are shifted lowest gold index first.
pub fn derive_oracle(
    sentence: &DepSentence,
    indexers: &Indexers,
    variant: Variant,
) -> Result<Vec<Action>> {
    let (bag, align) = to_bag_aligned(sentence);
    let n = sentence.len();
    let mut bag_token = vec![0; n + 1];
    for (tok, &gold) in align.iter().enumerate() {
        bag_token[gold] = tok;
    }

    let needed = sentence.dependent_counts();
    let needed_right: Vec<usize> = (0..=n)
        .map(|h| {
            sentence
                .tokens()
                .iter()
                .filter(|t| t.head == h && h != 0 && t.index > h)
                .count()
        })
        .collect();
    let mut attached = vec![0usize; n + 1];
    let mut attached_right = vec![0usize; n + 1];

    let label = |dep: usize| -> Result<Option<usize>> {
        match variant {
            Variant::Light => Ok(None),
            Variant::Full => {
                let t = sentence.token(dep);
                let l = t.label.as_deref().ok_or_else(|| {
                    Error::Data(format!("token {dep} ({}) has no arc label", t.form))
                })?;
                indexers
                    .label_id(l)
                    .map(Some)
                    .ok_or_else(|| Error::Data(format!("label {l:?} is not indexed")))
            }
        }
    };

    let mut actions = Vec::with_capacity(variant.derivation_len(n));
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 1;
    loop {
        if stack.len() >= 2 {
            let i = stack[stack.len() - 1];
            let j = stack[stack.len() - 2];
            let head = |t: usize| sentence.token(t).head;
            if head(i) == j && attached[i] == needed[i] {
                actions.push(Action::RightArc(label(i)?));
                attached[j] += 1;
                attached_right[j] += 1;
                stack.pop();
                continue;
            }
            if head(j) == i && attached[j] == needed[j] && attached_right[i] == needed_right[i] {
                actions.push(Action::LeftArc(label(j)?));
                attached[i] += 1;
                stack.remove(stack.len() - 2);
                continue;
            }
        }
        if next <= n {
            let token = sentence.token(next);
            actions.push(Action::Shift(bag.slot_of(bag_token[next])));
            if variant == Variant::Full {
                let tag = token.pos.as_deref().ok_or_else(|| {
                    Error::Data(format!("token {next} ({}) has no POS tag", token.form))
                })?;
                let p = indexers
                    .pos_id(tag)
                    .ok_or_else(|| Error::Data(format!("POS tag {tag:?} is not indexed")))?;
                actions.push(Action::Pos(p));
            }
            stack.push(next);
            next += 1;
            continue;
        }
        if stack.len() == 1 {
            actions.push(Action::End);
            return Ok(actions);
        }
        return Err(Error::Oracle(format!(
            "stuck with {} items on the stack (tree is not projective?)",
            stack.len()
        )));
    }
}

/// A gold derivation replayed through the transition system.
#[derive(Clone, Debug)]
pub struct Replay {
    pub bag: Arc<WordBag>,
    /// Bag token to 1-based gold index.
    pub alignment: Vec<usize>,
    pub actions: Vec<Action>,
    /// `states[k]` is the state in which `actions[k]` is taken.
    pub states: Vec<State>,
    pub terminal: State,
}

impl Replay {
    /// Whether the terminal state reproduces the gold order and gold arcs
    /// (labels included in the full variant).
    pub fn matches_gold(&self, sentence: &DepSentence, indexers: &Indexers) -> bool {
        let Ok(order) = self.terminal.realized_sentence() else {
            return false;
        };
        let gold_order: Vec<usize> = order.iter().map(|&t| self.alignment[t]).collect();
        if gold_order != (1..=sentence.len()).collect::<Vec<_>>() {
            return false;
        }
        let full = self.terminal.variant() == Variant::Full;
        let mut built: Vec<(usize, usize, Option<usize>)> = self
            .terminal
            .arcs()
            .iter()
            .map(|a: &DepArc| (self.alignment[a.head], self.alignment[a.dependent], a.label))
            .collect();
        let mut gold: Vec<(usize, usize, Option<usize>)> = sentence
            .arcs()
            .into_iter()
            .map(|(h, d)| {
                let label = if full {
                    sentence.token(d).label.as_deref().and_then(|l| indexers.label_id(l))
                } else {
                    None
                };
                (h, d, label)
            })
            .collect();
        built.sort();
        gold.sort();
        built == gold
    }
}

/// Derives the oracle for `sentence` and runs it, keeping every state.
pub fn replay(sentence: &DepSentence, indexers: &Indexers, variant: Variant) -> Result<Replay> {
    let actions = derive_oracle(sentence, indexers, variant)?;
    let (bag, alignment) = to_bag_aligned(sentence);
    let bag = Arc::new(bag);
    let system = TransitionSystem::new(variant, indexers);
    let mut state = system.initial_state(bag.clone())?;
    let mut states = Vec::with_capacity(actions.len());
    for &a in &actions {
        let next = system.apply(&state, a)?;
        states.push(std::mem::replace(&mut state, next));
    }
    Ok(Replay {
        bag,
        alignment,
        actions,
        states,
        terminal: state,
    })
}
