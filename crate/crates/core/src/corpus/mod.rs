//! Dependency-annotated sentences: reading them, indexing their symbols,
//! turning them into bags of words, and deriving gold transition sequences.

mod bag;
mod conll;
mod indexers;
mod oracle;

pub use bag::{to_bag, to_bag_aligned, WordBag};
pub use conll::{parse_conll, parse_conll_lenient, write_conll, Rejection};
pub use indexers::{build_indexers, Indexers, Vocab, NULL_ID, UNK_ID};
pub use oracle::{derive_oracle, replay, Replay};

use crate::error::TreeError;

/// One token of a gold sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the gold sentence.
    pub index: usize,
    pub form: String,
    /// `None` when the corpus leaves the column as `_`.
    pub pos: Option<String>,
    /// Head position, 0 for the artificial root.
    pub head: usize,
    pub label: Option<String>,
}

impl Token {
    pub fn new(index: usize, form: &str, pos: &str, head: usize, label: &str) -> Token {
        let opt = |s: &str| (s != "_" && !s.is_empty()).then(|| s.to_string());
        Token {
            index,
            form: form.to_string(),
            pos: opt(pos),
            head,
            label: opt(label),
        }
    }
}

/// A sentence whose heads form a single projective tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepSentence {
    tokens: Vec<Token>,
}

impl DepSentence {
    /// Validates the tree invariants. Token indices are renumbered from 1 if
    /// they are not already.
    pub fn new(tokens: Vec<Token>) -> Result<DepSentence, TreeError> {
        if tokens.is_empty() {
            return Err(TreeError::NoRoot);
        }
        let mut tokens = tokens;
        for (i, token) in tokens.iter_mut().enumerate() {
            token.index = i + 1;
        }
        validate_tree(&tokens.iter().map(|t| t.head).collect::<Vec<_>>())?;
        Ok(DepSentence { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// Token with 1-based `index`.
    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }

    pub fn root(&self) -> &Token {
        self.tokens
            .iter()
            .find(|t| t.head == 0)
            .expect("validated sentence has a root")
    }

    /// Gold arcs as `(head, dependent)` pairs of 1-based indices, excluding
    /// the attachment to the artificial root.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.tokens
            .iter()
            .filter(|t| t.head != 0)
            .map(|t| (t.head, t.index))
            .collect()
    }

    /// Number of gold dependents of each token, indexed from 1 (slot 0 counts
    /// the root's single child).
    pub(crate) fn dependent_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.len() + 1];
        for t in &self.tokens {
            counts[t.head] += 1;
        }
        counts
    }
}

/// Checks that `heads` (position `i` holds the head of token `i + 1`) forms a
/// single-rooted, acyclic, projective tree.
pub fn validate_tree(heads: &[usize]) -> Result<(), TreeError> {
    let n = heads.len();
    if n == 0 {
        return Err(TreeError::NoRoot);
    }
    let mut root = None;
    for (i, &h) in heads.iter().enumerate() {
        let token = i + 1;
        if h > n {
            return Err(TreeError::HeadOutOfRange {
                token,
                head: h,
                len: n,
            });
        }
        if h == token {
            return Err(TreeError::SelfLoop(token));
        }
        if h == 0 {
            if let Some(first) = root {
                return Err(TreeError::MultipleRoots(first, token));
            }
            root = Some(token);
        }
    }
    if root.is_none() {
        return Err(TreeError::NoRoot);
    }

    // Every token must reach the root within n steps.
    for start in 1..=n {
        let mut cur = start;
        let mut steps = 0;
        while cur != 0 {
            cur = heads[cur - 1];
            steps += 1;
            if steps > n {
                return Err(TreeError::Cycle(start));
            }
        }
    }

    let dominates = |head: usize, mut node: usize| {
        while node != 0 {
            if node == head {
                return true;
            }
            node = heads[node - 1];
        }
        false
    };
    for (i, &h) in heads.iter().enumerate() {
        let d = i + 1;
        if h == 0 {
            continue;
        }
        let (lo, hi) = if h < d { (h, d) } else { (d, h) };
        if ((lo + 1)..hi).any(|k| !dominates(h, k)) {
            return Err(TreeError::NonProjective { head: h, dependent: d });
        }
    }
    Ok(())
}
