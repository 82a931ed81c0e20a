//! Stack feature templates.
//!
//! Fifteen structural positions are read off the top of the stack:
//!
//! | slot  | position        |
//! |-------|-----------------|
//! | 0–2   | `S1`, `S2`, `S3` |
//! | 3–6   | `lc1(S1)`, `lc2(S1)`, `rc1(S1)`, `rc2(S1)` |
//! | 7–10  | `lc1(S2)`, `lc2(S2)`, `rc1(S2)`, `rc2(S2)` |
//! | 11–12 | `lc1(lc1(S1))`, `rc1(rc1(S1))` |
//! | 13–14 | `lc1(lc1(S2))`, `rc1(rc1(S2))` |
//!
//! Each position contributes its word and POS tag; positions 3–14 (children)
//! also contribute the label of the arc attaching them, giving 15 word, 15 POS
//! and 12 label slots. `lc1` is the leftmost child and `rc1` the rightmost.
//! Missing positions read as NULL. The light variant keeps the word slots
//! only. The remaining bag is never consulted.

use crate::corpus::NULL_ID;
use crate::transition::{State, Subtree, Variant};

pub const WORD_SLOTS: usize = 15;
pub const POS_SLOTS: usize = 15;
pub const LABEL_SLOTS: usize = 12;

const POSITIONS: [&str; WORD_SLOTS] = [
    "S1",
    "S2",
    "S3",
    "lc1(S1)",
    "lc2(S1)",
    "rc1(S1)",
    "rc2(S1)",
    "lc1(S2)",
    "lc2(S2)",
    "rc1(S2)",
    "rc2(S2)",
    "lc1(lc1(S1))",
    "rc1(rc1(S1))",
    "lc1(lc1(S2))",
    "rc1(rc1(S2))",
];

/// Vocabulary ids for every feature slot. In the light variant `pos` and
/// `labels` are empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    pub words: Vec<usize>,
    pub pos: Vec<usize>,
    pub labels: Vec<usize>,
}

impl FeatureVector {
    pub fn null(variant: Variant) -> FeatureVector {
        let (p, l) = match variant {
            Variant::Full => (POS_SLOTS, LABEL_SLOTS),
            Variant::Light => (0, 0),
        };
        FeatureVector {
            words: vec![NULL_ID; WORD_SLOTS],
            pos: vec![NULL_ID; p],
            labels: vec![NULL_ID; l],
        }
    }
}

/// Slot names in positional order, e.g. `S1.w`, `lc1(S2).l`.
pub fn slot_layout(variant: Variant) -> Vec<String> {
    let mut out: Vec<String> = POSITIONS.iter().map(|p| format!("{p}.w")).collect();
    if variant == Variant::Full {
        out.extend(POSITIONS.iter().map(|p| format!("{p}.t")));
        out.extend(POSITIONS[3..].iter().map(|p| format!("{p}.l")));
    }
    out
}

struct Node<'a> {
    tree: &'a Subtree,
    label: Option<usize>,
}

fn child<'a>(n: &Option<Node<'a>>, k: usize, left: bool) -> Option<Node<'a>> {
    let tree = n.as_ref()?.tree;
    let c = if left { tree.leftmost(k) } else { tree.rightmost(k) }?;
    Some(Node {
        tree: &c.tree,
        label: c.label,
    })
}

fn lc<'a>(n: &Option<Node<'a>>, k: usize) -> Option<Node<'a>> {
    child(n, k, true)
}

fn rc<'a>(n: &Option<Node<'a>>, k: usize) -> Option<Node<'a>> {
    child(n, k, false)
}

fn positions(state: &State) -> [Option<Node<'_>>; WORD_SLOTS] {
    let s = |i| state.stack_item(i).map(|t| Node { tree: t, label: None });
    let (s1, s2, s3) = (s(0), s(1), s(2));
    let (lc1_s1, lc2_s1, rc1_s1, rc2_s1) = (lc(&s1, 1), lc(&s1, 2), rc(&s1, 1), rc(&s1, 2));
    let (lc1_s2, lc2_s2, rc1_s2, rc2_s2) = (lc(&s2, 1), lc(&s2, 2), rc(&s2, 1), rc(&s2, 2));
    let lc1lc1_s1 = lc(&lc1_s1, 1);
    let rc1rc1_s1 = rc(&rc1_s1, 1);
    let lc1lc1_s2 = lc(&lc1_s2, 1);
    let rc1rc1_s2 = rc(&rc1_s2, 1);
    [
        s1, s2, s3, lc1_s1, lc2_s1, rc1_s1, rc2_s1, lc1_s2, lc2_s2, rc1_s2, rc2_s2, lc1lc1_s1,
        rc1rc1_s1, lc1lc1_s2, rc1rc1_s2,
    ]
}

/// Extracts the feature vector of `state`. `word_ids[slot]` is the vocabulary
/// id of the bag's form `slot`.
pub fn extract(state: &State, word_ids: &[usize], variant: Variant) -> FeatureVector {
    let nodes = positions(state);
    let bag = state.bag();
    let words = nodes
        .iter()
        .map(|n| match n {
            Some(n) => word_ids[bag.slot_of(n.tree.root)],
            None => NULL_ID,
        })
        .collect();
    if variant == Variant::Light {
        return FeatureVector {
            words,
            pos: Vec::new(),
            labels: Vec::new(),
        };
    }
    let pos = nodes
        .iter()
        .map(|n| n.as_ref().and_then(|n| n.tree.pos).unwrap_or(NULL_ID))
        .collect();
    let labels = nodes[3..]
        .iter()
        .map(|n| n.as_ref().and_then(|n| n.label).unwrap_or(NULL_ID))
        .collect();
    FeatureVector { words, pos, labels }
}

/// Word-only features for the light variant.
pub fn extract_light(state: &State, word_ids: &[usize]) -> FeatureVector {
    extract(state, word_ids, Variant::Light)
}
