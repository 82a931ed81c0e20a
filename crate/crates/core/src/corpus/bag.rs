use serde::{Deserialize, Serialize};

use super::DepSentence;

/// An unordered multiset of words.
///
/// Distinct forms are kept in byte-lexicographic order ("form slots").
/// Individual tokens are numbered `0..len()` grouped by slot, so that the
/// `k`-th copy of slot `f` is token `first_token(f) + k`. Nothing about the
/// original sentence order survives except through [`to_bag_aligned`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordBag {
    forms: Vec<String>,
    counts: Vec<usize>,
    starts: Vec<usize>,
    token_slots: Vec<usize>,
}

impl WordBag {
    pub fn new<'a>(words: impl IntoIterator<Item = &'a str>) -> WordBag {
        let mut words: Vec<&str> = words.into_iter().collect();
        words.sort_unstable();
        let mut forms: Vec<String> = Vec::new();
        let mut counts = Vec::new();
        let mut starts = Vec::new();
        let mut token_slots = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if forms.last().map(String::as_str) != Some(*w) {
                forms.push(w.to_string());
                counts.push(0);
                starts.push(i);
            }
            *counts.last_mut().unwrap() += 1;
            token_slots.push(forms.len() - 1);
        }
        WordBag {
            forms,
            counts,
            starts,
            token_slots,
        }
    }

    /// Number of tokens.
    pub fn len(&self) -> usize {
        self.token_slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_slots.is_empty()
    }

    pub fn n_forms(&self) -> usize {
        self.forms.len()
    }

    pub fn form(&self, slot: usize) -> &str {
        &self.forms[slot]
    }

    pub fn forms(&self) -> &[String] {
        &self.forms
    }

    pub fn count(&self, slot: usize) -> usize {
        self.counts[slot]
    }

    pub fn first_token(&self, slot: usize) -> usize {
        self.starts[slot]
    }

    /// Form slot of token `token`.
    pub fn slot_of(&self, token: usize) -> usize {
        self.token_slots[token]
    }

    pub fn token_form(&self, token: usize) -> &str {
        &self.forms[self.token_slots[token]]
    }

    pub fn slot_of_form(&self, form: &str) -> Option<usize> {
        self.forms.binary_search_by(|f| f.as_str().cmp(form)).ok()
    }

    /// `(form, multiplicity)` pairs in slot order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, usize)> {
        self.forms.iter().map(String::as_str).zip(self.counts.iter().copied())
    }
}

/// The bag of a gold sentence.
pub fn to_bag(sentence: &DepSentence) -> WordBag {
    WordBag::new(sentence.tokens().iter().map(|t| t.form.as_str()))
}

/// The bag of a gold sentence together with, for each bag token, the 1-based
/// gold index it came from. Copies of a repeated form are numbered in gold
/// order.
pub fn to_bag_aligned(sentence: &DepSentence) -> (WordBag, Vec<usize>) {
    let bag = to_bag(sentence);
    let mut order: Vec<usize> = (1..=sentence.len()).collect();
    // Stable: equal forms keep increasing gold index.
    order.sort_by(|&a, &b| sentence.token(a).form.cmp(&sentence.token(b).form));
    (bag, order)
}
