//! The shift-reduce deduction system for linearization.
//!
//! A state is a stack of partially built dependency subtrees, the multiset of
//! words not yet placed, and the arcs built so far. `Shift-w` moves any
//! remaining word onto the stack; `LeftArc`/`RightArc` join the top two
//! subtrees; `End` closes a derivation with a single tree and nothing left to
//! place. In the full variant every `Shift-w` is followed by exactly one
//! `Pos-p`, and arcs carry labels; the light variant has neither.
//!
//! States are persistent: applying an action shares all unchanged structure
//! with its parent, so a beam can hold many siblings cheaply.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Indexers, WordBag, NULL_ID};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Words, POS tags and labelled arcs; `3n` actions per sentence.
    Full,
    /// Words and unlabelled arcs only; `2n` actions per sentence.
    Light,
}

impl Variant {
    /// Length of every complete derivation over `n` words.
    pub fn derivation_len(self, n: usize) -> usize {
        match self {
            Variant::Full => 3 * n,
            Variant::Light => 2 * n,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Light => "light",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "full" => Ok(Variant::Full),
            "light" => Ok(Variant::Light),
            _ => Err(Error::Config(format!("unknown variant {s:?}"))),
        }
    }
}

/// A transition. `Shift` names a form slot of the state's bag, `Pos` a POS id
/// and the arcs a label id (`None` in the light variant).
///
/// The derived ordering is the canonical action order used for tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Shift(usize),
    Pos(usize),
    LeftArc(Option<usize>),
    RightArc(Option<usize>),
    End,
}

impl Action {
    pub fn is_shift(&self) -> bool {
        matches!(self, Action::Shift(_))
    }

    /// Human-readable name in the `Shift-I`, `Pos-PRP`, `RArc-dobj` style.
    pub fn name(&self, bag: &WordBag, indexers: &Indexers) -> String {
        match *self {
            Action::Shift(slot) => format!("Shift-{}", bag.form(slot)),
            Action::Pos(p) => format!("Pos-{}", indexers.pos.item(p)),
            Action::LeftArc(Some(l)) => format!("LArc-{}", indexers.labels.item(l)),
            Action::RightArc(Some(l)) => format!("RArc-{}", indexers.labels.item(l)),
            Action::LeftArc(None) => "LArc".to_string(),
            Action::RightArc(None) => "RArc".to_string(),
            Action::End => "End".to_string(),
        }
    }
}

/// A dependent attached to a subtree, with its arc label.
#[derive(Clone, Debug)]
pub struct Child {
    pub label: Option<usize>,
    pub tree: Arc<Subtree>,
}

/// One stack item: a partially built dependency subtree over bag tokens.
///
/// Children on each side are stored in attachment order, which is nearest to
/// the root first; a later arc always attaches outside the earlier ones.
#[derive(Clone, Debug)]
pub struct Subtree {
    pub root: usize,
    pub pos: Option<usize>,
    pub left: Vec<Child>,
    pub right: Vec<Child>,
    size: usize,
}

impl Subtree {
    fn leaf(root: usize) -> Subtree {
        Subtree {
            root,
            pos: None,
            left: Vec::new(),
            right: Vec::new(),
            size: 1,
        }
    }

    /// Number of tokens in the subtree.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `k`-th leftmost child (1-based): `lc1` is the outermost left child.
    pub fn leftmost(&self, k: usize) -> Option<&Child> {
        self.left.len().checked_sub(k).map(|i| &self.left[i])
    }

    /// `k`-th rightmost child (1-based): `rc1` is the outermost right child.
    pub fn rightmost(&self, k: usize) -> Option<&Child> {
        self.right.len().checked_sub(k).map(|i| &self.right[i])
    }

    /// Tokens of the subtree in surface order.
    pub fn span(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size);
        self.collect_span(&mut out);
        out
    }

    fn collect_span(&self, out: &mut Vec<usize>) {
        for c in self.left.iter().rev() {
            c.tree.collect_span(out);
        }
        out.push(self.root);
        for c in &self.right {
            c.tree.collect_span(out);
        }
    }

    fn collect_arcs(&self, out: &mut Vec<DepArc>) {
        for c in self.left.iter().chain(&self.right) {
            out.push(DepArc {
                head: self.root,
                dependent: c.tree.root,
                label: c.label,
            });
            c.tree.collect_arcs(out);
        }
    }
}

/// A built dependency arc between bag tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepArc {
    pub head: usize,
    pub dependent: usize,
    pub label: Option<usize>,
}

#[derive(Debug)]
struct StackNode {
    item: Arc<Subtree>,
    below: Option<Arc<StackNode>>,
}

#[derive(Debug)]
struct HistoryNode {
    action: Action,
    prev: Option<Arc<HistoryNode>>,
}

/// A configuration of the transition system.
#[derive(Clone, Debug)]
pub struct State {
    bag: Arc<WordBag>,
    variant: Variant,
    stack: Option<Arc<StackNode>>,
    depth: usize,
    consumed: Arc<[u32]>,
    remaining: usize,
    history: Option<Arc<HistoryNode>>,
    steps: usize,
    pending_pos: bool,
    terminal: bool,
}

impl State {
    pub fn bag(&self) -> &WordBag {
        &self.bag
    }

    pub fn bag_arc(&self) -> &Arc<WordBag> {
        &self.bag
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Stack height.
    pub fn stack_len(&self) -> usize {
        self.depth
    }

    /// `i`-th stack item counting from the top (0 = top).
    pub fn stack_item(&self, i: usize) -> Option<&Arc<Subtree>> {
        let mut node = self.stack.as_ref()?;
        for _ in 0..i {
            node = node.below.as_ref()?;
        }
        Some(&node.item)
    }

    /// Stack items from bottom to top.
    pub fn stack_items(&self) -> Vec<&Arc<Subtree>> {
        let mut items = Vec::with_capacity(self.depth);
        let mut node = self.stack.as_ref();
        while let Some(n) = node {
            items.push(&n.item);
            node = n.below.as_ref();
        }
        items.reverse();
        items
    }

    /// Copies of form `slot` not yet shifted.
    pub fn remaining_count(&self, slot: usize) -> usize {
        self.bag.count(slot) - self.consumed[slot] as usize
    }

    /// Total number of tokens not yet shifted.
    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Number of actions applied so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn pending_pos(&self) -> bool {
        self.pending_pos
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn last_action(&self) -> Option<Action> {
        self.history.as_ref().map(|h| h.action)
    }

    /// Applied actions, oldest first.
    pub fn history(&self) -> Vec<Action> {
        let mut out = Vec::with_capacity(self.steps);
        let mut node = self.history.as_ref();
        while let Some(n) = node {
            out.push(n.action);
            node = n.prev.as_ref();
        }
        out.reverse();
        out
    }

    /// Forms shifted so far, in shift order.
    pub fn shifted_slots(&self) -> Vec<usize> {
        self.history()
            .into_iter()
            .filter_map(|a| match a {
                Action::Shift(slot) => Some(slot),
                _ => None,
            })
            .collect()
    }

    /// All arcs built so far.
    pub fn arcs(&self) -> Vec<DepArc> {
        let mut out = Vec::new();
        for item in self.stack_items() {
            item.collect_arcs(&mut out);
        }
        out.sort();
        out
    }

    /// Tokens of the single finished tree in surface order.
    pub fn realized_sentence(&self) -> Result<Vec<usize>> {
        if !self.terminal {
            return Err(Error::NotTerminal);
        }
        Ok(self.stack_item(0).expect("terminal state has a tree").span())
    }

    /// Word forms of [`State::realized_sentence`].
    pub fn realized_forms(&self) -> Result<Vec<&str>> {
        Ok(self
            .realized_sentence()?
            .into_iter()
            .map(|t| self.bag.token_form(t))
            .collect())
    }

    /// Tokens placed on the stack, in left-to-right order.
    pub fn stack_tokens(&self) -> usize {
        self.stack_items().iter().map(|s| s.size()).sum()
    }

    fn summary(&self) -> String {
        let stack: Vec<String> = self
            .stack_items()
            .iter()
            .map(|s| self.bag.token_form(s.root).to_string())
            .collect();
        format!(
            "(stack=[{}], remaining={}, steps={}, pending_pos={}, terminal={})",
            stack.join(" "),
            self.remaining,
            self.steps,
            self.pending_pos,
            self.terminal
        )
    }

    fn push_history(&self, action: Action) -> Option<Arc<HistoryNode>> {
        Some(Arc::new(HistoryNode {
            action,
            prev: self.history.clone(),
        }))
    }
}

/// Action inventory and rules for one variant: POS ids `1..n_pos` and label
/// ids `1..n_labels` (id 0 is the NULL symbol and never an action payload).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    pub variant: Variant,
    pub n_pos: usize,
    pub n_labels: usize,
}

impl TransitionSystem {
    pub fn new(variant: Variant, indexers: &Indexers) -> TransitionSystem {
        TransitionSystem {
            variant,
            n_pos: indexers.n_pos(),
            n_labels: indexers.n_labels(),
        }
    }

    pub fn initial_state(&self, bag: Arc<WordBag>) -> Result<State> {
        if bag.is_empty() {
            return Err(Error::EmptyBag);
        }
        Ok(State {
            consumed: vec![0; bag.n_forms()].into(),
            remaining: bag.len(),
            bag,
            variant: self.variant,
            stack: None,
            depth: 0,
            history: None,
            steps: 0,
            pending_pos: false,
            terminal: false,
        })
    }

    fn labels(&self) -> Vec<Option<usize>> {
        match self.variant {
            Variant::Full => (1..self.n_labels).map(Some).collect(),
            Variant::Light => vec![None],
        }
    }

    /// Legal actions in canonical order.
    pub fn legal_actions(&self, state: &State) -> Vec<Action> {
        if state.terminal {
            return Vec::new();
        }
        if state.pending_pos {
            return (1..self.n_pos).map(Action::Pos).collect();
        }
        let mut out = Vec::new();
        for slot in 0..state.bag.n_forms() {
            if state.remaining_count(slot) > 0 {
                out.push(Action::Shift(slot));
            }
        }
        if state.depth >= 2 {
            let labels = self.labels();
            out.extend(labels.iter().map(|&l| Action::LeftArc(l)));
            out.extend(labels.iter().map(|&l| Action::RightArc(l)));
        }
        if state.remaining == 0 && state.depth == 1 {
            out.push(Action::End);
        }
        out
    }

    pub fn is_legal(&self, state: &State, action: Action) -> bool {
        if state.terminal {
            return false;
        }
        let label_ok = |l: Option<usize>| match (self.variant, l) {
            (Variant::Full, Some(l)) => l != NULL_ID && l < self.n_labels,
            (Variant::Light, None) => true,
            _ => false,
        };
        match action {
            Action::Pos(p) => {
                state.pending_pos && self.variant == Variant::Full && p != NULL_ID && p < self.n_pos
            }
            _ if state.pending_pos => false,
            Action::Shift(slot) => {
                slot < state.bag.n_forms() && state.remaining_count(slot) > 0
            }
            Action::LeftArc(l) | Action::RightArc(l) => state.depth >= 2 && label_ok(l),
            Action::End => state.remaining == 0 && state.depth == 1,
        }
    }

    /// The successor of `state` under `action`. `state` is left untouched.
    pub fn apply(&self, state: &State, action: Action) -> Result<State> {
        if !self.is_legal(state, action) {
            return Err(Error::IllegalAction {
                action: format!("{action:?}"),
                state: state.summary(),
            });
        }
        let mut next = state.clone();
        next.history = state.push_history(action);
        next.steps += 1;
        match action {
            Action::Shift(slot) => {
                let token = state.bag.first_token(slot) + state.consumed[slot] as usize;
                let mut consumed = state.consumed.to_vec();
                consumed[slot] += 1;
                next.consumed = consumed.into();
                next.remaining -= 1;
                next.stack = Some(Arc::new(StackNode {
                    item: Arc::new(Subtree::leaf(token)),
                    below: state.stack.clone(),
                }));
                next.depth += 1;
                next.pending_pos = self.variant == Variant::Full;
            }
            Action::Pos(p) => {
                let top = state.stack.as_ref().expect("pending POS implies a stack");
                let mut item = (*top.item).clone();
                item.pos = Some(p);
                next.stack = Some(Arc::new(StackNode {
                    item: Arc::new(item),
                    below: top.below.clone(),
                }));
                next.pending_pos = false;
            }
            Action::LeftArc(label) | Action::RightArc(label) => {
                let top = state.stack.as_ref().expect("arc needs two items");
                let second = top.below.as_ref().expect("arc needs two items");
                let (i, j) = (&top.item, &second.item);
                let combined = if matches!(action, Action::LeftArc(_)) {
                    // j <- i: j becomes the outermost left child of i
                    let mut head = (**i).clone();
                    head.left.push(Child {
                        label,
                        tree: j.clone(),
                    });
                    head.size += j.size;
                    head
                } else {
                    // j -> i: i becomes the outermost right child of j
                    let mut head = (**j).clone();
                    head.right.push(Child {
                        label,
                        tree: i.clone(),
                    });
                    head.size += i.size;
                    head
                };
                next.stack = Some(Arc::new(StackNode {
                    item: Arc::new(combined),
                    below: second.below.clone(),
                }));
                next.depth -= 1;
            }
            Action::End => {
                next.terminal = true;
            }
        }
        Ok(next)
    }

    /// Applies a whole action sequence from the initial state.
    pub fn run(&self, bag: Arc<WordBag>, actions: &[Action]) -> Result<State> {
        let mut state = self.initial_state(bag)?;
        for &a in actions {
            state = self.apply(&state, a)?;
        }
        Ok(state)
    }
}
