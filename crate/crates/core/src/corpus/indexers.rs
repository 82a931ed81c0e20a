use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::DepSentence;

/// Id of the NULL symbol in every vocabulary.
pub const NULL_ID: usize = 0;
/// Id of the unknown-word symbol in the word vocabulary.
pub const UNK_ID: usize = 1;

pub(crate) const NULL_WORD: &str = "<null-w>";
pub(crate) const UNK_WORD: &str = "<unk>";
pub(crate) const NULL_POS: &str = "<null-t>";
pub(crate) const NULL_LABEL: &str = "<null-l>";

/// Dense bijection between strings and ids in `0..len()`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    items: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Vocab {
        Vocab::default()
    }

    /// Returns the id of `item`, adding it if needed.
    pub fn add(&mut self, item: &str) -> usize {
        if let Some(&id) = self.ids.get(item) {
            return id;
        }
        let id = self.items.len();
        self.items.push(item.to_string());
        self.ids.insert(item.to_string(), id);
        id
    }

    pub fn get(&self, item: &str) -> Option<usize> {
        self.ids.get(item).copied()
    }

    pub fn item(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Vocab) -> bool {
        self.items == other.items
    }
}

impl From<Vec<String>> for Vocab {
    fn from(items: Vec<String>) -> Vocab {
        let mut v = Vocab::new();
        for item in &items {
            v.add(item);
        }
        v
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Vec<String> {
        v.items
    }
}

/// Symbol tables for words, POS tags and arc labels.
///
/// Word id 0 is NULL^w and 1 is UNK; POS id 0 is NULL^t; label id 0 is
/// NULL^l. Real symbols follow in order of first appearance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Indexers {
    pub words: Vocab,
    pub pos: Vocab,
    pub labels: Vocab,
    /// Corpus frequency of every word form, including those below `min_count`.
    pub counts: BTreeMap<String, usize>,
    pub min_count: usize,
}

impl Indexers {
    /// Word id used for embedding lookup; rare and unseen forms become UNK.
    pub fn word_id(&self, form: &str) -> usize {
        match self.words.get(form) {
            Some(id) if id > UNK_ID => id,
            _ => UNK_ID,
        }
    }

    pub fn pos_id(&self, tag: &str) -> Option<usize> {
        self.pos.get(tag).filter(|&id| id != NULL_ID)
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.get(label).filter(|&id| id != NULL_ID)
    }

    /// Number of word ids, reserved ones included.
    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_pos(&self) -> usize {
        self.pos.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }
}

/// Builds the symbol tables. Words seen fewer than `min_count` times are left
/// out of the word vocabulary and look up as UNK. POS tags and labels are all
/// kept; `_` columns contribute nothing.
pub fn build_indexers(corpus: &[DepSentence], min_count: usize) -> Indexers {
    let min_count = min_count.max(1);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut first_seen: Vec<&str> = Vec::new();
    let mut pos = Vocab::from(vec![NULL_POS.to_string()]);
    let mut labels = Vocab::from(vec![NULL_LABEL.to_string()]);

    for sentence in corpus {
        for t in sentence.tokens() {
            let c = counts.entry(t.form.clone()).or_insert(0);
            if *c == 0 {
                first_seen.push(&t.form);
            }
            *c += 1;
            if let Some(p) = &t.pos {
                pos.add(p);
            }
            if let Some(l) = &t.label {
                labels.add(l);
            }
        }
    }

    let mut words = Vocab::from(vec![NULL_WORD.to_string(), UNK_WORD.to_string()]);
    for form in first_seen {
        if counts[form] >= min_count {
            words.add(form);
        }
    }

    Indexers {
        words,
        pos,
        labels,
        counts,
        min_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_conll;

    fn corpus() -> Vec<DepSentence> {
        parse_conll(
            "1\tI\t_\t_\tPRP\t_\t2\tnsubj\n2\tlove\t_\t_\tVBP\t_\t0\troot\n3\tNLP\t_\t_\tNNP\t_\t2\tdobj\n\n\
             1\tthey\t_\t_\tPRP\t_\t2\tnsubj\n2\tlove\t_\t_\tVBP\t_\t0\troot\n3\tRust\t_\t_\tNNP\t_\t2\tdobj\n",
        )
        .unwrap()
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let ix = build_indexers(&corpus()[..1], 1);
        assert_eq!(ix.n_words(), 3 + 2);
        assert_eq!(ix.word_id("love"), 3);
        assert_eq!(ix.word_id("unseen"), UNK_ID);
        assert_eq!(ix.n_pos(), 4);
        assert_eq!(ix.n_labels(), 4);
    }

    #[test]
    fn min_count_two_on_single_sentence() {
        let ix = build_indexers(&corpus()[..1], 2);
        assert_eq!(ix.n_words(), 2);
        for w in ["I", "love", "NLP"] {
            assert_eq!(ix.word_id(w), UNK_ID);
        }
    }

    #[test]
    fn shared_word_survives_min_count() {
        let ix = build_indexers(&corpus(), 2);
        assert_eq!(ix.n_words(), 3);
        assert_eq!(ix.words.item(2), "love");
        assert_eq!(ix.counts["love"], 2);
        assert_eq!(ix.counts["Rust"], 1);
    }

    #[test]
    fn ids_are_bijective() {
        let ix = build_indexers(&corpus(), 1);
        for (id, w) in ix.words.iter().enumerate() {
            assert_eq!(ix.words.get(w), Some(id));
        }
        for (id, p) in ix.pos.iter().enumerate() {
            assert_eq!(ix.pos.get(p), Some(id));
        }
    }

    #[test]
    fn serde_round_trip() {
        let ix = build_indexers(&corpus(), 1);
        let json = serde_json::to_string(&ix).unwrap();
        let back: Indexers = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ix);
        assert_eq!(back.word_id("Rust"), ix.word_id("Rust"));
    }
}
