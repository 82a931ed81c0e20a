//! Corpus BLEU, length-bucketed BLEU and action-embedding neighbours.
//!
//! BLEU is case-sensitive 4-gram corpus BLEU over pre-tokenized input with
//! clipped n-gram counts pooled over the corpus and no smoothing. An n-gram
//! order nobody's hypothesis is long enough for (zero denominator) is left
//! out of the geometric mean, so a corpus of one-word sentences can still
//! score 100. Any order with a positive denominator and no match makes the
//! score 0.

use std::collections::HashMap;
use std::fmt::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{Indexers, NULL_ID};
use crate::error::{Error, Result};
use crate::ffnn::ActionInventory;
use crate::model::Linearizer;
use crate::transition::Variant;

pub const MAX_ORDER: usize = 4;

/// Reference-length buckets as `(low, high)`; `None` is open-ended.
pub const BUCKETS: [(usize, Option<usize>); 7] = [
    (1, Some(10)),
    (11, Some(15)),
    (16, Some(20)),
    (21, Some(25)),
    (26, Some(30)),
    (31, Some(35)),
    (36, None),
];

/// Pooled n-gram statistics of a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn sentence<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> BleuStats {
        let mut stats = BleuStats {
            hyp_len: hypothesis.len(),
            ref_len: reference.len(),
            ..BleuStats::default()
        };
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in ngram_counts(hypothesis, n) {
                stats.matches[n - 1] += count.min(ref_counts.get(&gram).copied().unwrap_or(0));
                stats.totals[n - 1] += count;
            }
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Modified precision of each order; `None` where the denominator is 0.
    pub fn precisions(&self) -> [Option<f64>; MAX_ORDER] {
        let mut p = [None; MAX_ORDER];
        for n in 0..MAX_ORDER {
            if self.totals[n] > 0 {
                p[n] = Some(self.matches[n] as f64 / self.totals[n] as f64);
            }
        }
        p
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    /// BLEU as a percentage.
    pub fn bleu(&self) -> f64 {
        let used: Vec<f64> = self.precisions().into_iter().flatten().collect();
        if used.is_empty() || used.contains(&0.0) {
            return 0.0;
        }
        let log_mean = used.iter().map(|p| p.ln()).sum::<f64>() / used.len() as f64;
        100.0 * self.brevity_penalty() * log_mean.exp()
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub low: usize,
    pub high: Option<usize>,
    pub sentences: usize,
    /// `None` for an empty bucket.
    pub bleu: Option<f64>,
}

impl BucketScore {
    pub fn label(&self) -> String {
        match self.high {
            Some(h) => format!("{}-{}", self.low, h),
            None => format!("{}+", self.low),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub bleu: f64,
    pub stats: BleuStats,
    pub precisions: [Option<f64>; MAX_ORDER],
    pub brevity_penalty: f64,
    pub sentences: usize,
    pub buckets: Vec<BucketScore>,
}

/// Corpus BLEU of aligned reference/hypothesis token lists, with per-bucket
/// scores grouped by reference length.
pub fn corpus_bleu<S: AsRef<str>>(refs: &[Vec<S>], hyps: &[Vec<S>]) -> Result<BleuReport> {
    if refs.len() != hyps.len() {
        return Err(Error::LengthMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    let per_sentence: Vec<BleuStats> = refs
        .iter()
        .zip(hyps)
        .map(|(r, h)| BleuStats::sentence(r, h))
        .collect();
    let mut total = BleuStats::default();
    let mut buckets: Vec<(BleuStats, usize)> = vec![(BleuStats::default(), 0); BUCKETS.len()];
    for (r, s) in refs.iter().zip(&per_sentence) {
        total.add(s);
        let len = r.len();
        if let Some(b) = BUCKETS
            .iter()
            .position(|&(lo, hi)| len >= lo && hi.is_none_or(|hi| len <= hi))
        {
            buckets[b].0.add(s);
            buckets[b].1 += 1;
        }
    }
    Ok(BleuReport {
        bleu: total.bleu(),
        precisions: total.precisions(),
        brevity_penalty: total.brevity_penalty(),
        stats: total,
        sentences: refs.len(),
        buckets: BUCKETS
            .iter()
            .zip(buckets)
            .map(|(&(low, high), (stats, sentences))| BucketScore {
                low,
                high,
                sentences,
                bleu: (sentences > 0).then(|| stats.bleu()),
            })
            .collect(),
    })
}

impl BleuReport {
    /// Human-readable summary with one row per length bucket.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let p: Vec<String> = self
            .precisions
            .iter()
            .map(|p| p.map_or("-".into(), |p| format!("{:.2}", 100.0 * p)))
            .collect();
        writeln!(out, "BLEU = {:.2}  ({})", self.bleu, p.join("/")).unwrap();
        writeln!(
            out,
            "BP = {:.3}  hyp_len = {}  ref_len = {}  sentences = {}",
            self.brevity_penalty, self.stats.hyp_len, self.stats.ref_len, self.sentences
        )
        .unwrap();
        writeln!(out).unwrap();
        writeln!(out, "{:<8} {:>9} {:>7}", "length", "sentences", "BLEU").unwrap();
        for b in &self.buckets {
            let bleu = b.bleu.map_or("-".into(), |x| format!("{x:.2}"));
            writeln!(out, "{:<8} {:>9} {:>7}", b.label(), b.sentences, bleu).unwrap();
        }
        out
    }

    /// `key=value` lines for scripts.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        writeln!(out, "bleu={:.6}", self.bleu).unwrap();
        for (n, p) in self.precisions.iter().enumerate() {
            let v = p.map_or("nan".into(), |p| format!("{p:.6}"));
            writeln!(out, "p{}={v}", n + 1).unwrap();
        }
        writeln!(out, "bp={:.6}", self.brevity_penalty).unwrap();
        writeln!(out, "hyp_len={}", self.stats.hyp_len).unwrap();
        writeln!(out, "ref_len={}", self.stats.ref_len).unwrap();
        writeln!(out, "sentences={}", self.sentences).unwrap();
        for b in &self.buckets {
            let v = b.bleu.map_or("nan".into(), |x| format!("{x:.6}"));
            writeln!(out, "bucket.{}.sentences={}", b.label(), b.sentences).unwrap();
            writeln!(out, "bucket.{}.bleu={v}", b.label()).unwrap();
        }
        out
    }
}

fn cosine(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(&b) / (na * nb)
    }
}

/// The `k` rows among `candidates` most cosine-similar to `row` (itself
/// excluded), most similar first; ties go to the lower row index.
pub fn cosine_neighbors(
    w2: &Array2<f64>,
    row: usize,
    k: usize,
    candidates: impl IntoIterator<Item = usize>,
) -> Vec<(usize, f64)> {
    let target = w2.row(row);
    let mut scored: Vec<(usize, f64)> = candidates
        .into_iter()
        .filter(|&r| r != row)
        .map(|r| (r, cosine(target, w2.row(r))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Rows that can ever be taken: NULL shifts, NULL POS and NULL labels are
/// skipped.
fn live_rows(inventory: &ActionInventory) -> Vec<usize> {
    let mut dead = vec![NULL_ID];
    if inventory.variant == Variant::Full {
        let left = inventory.n_words + inventory.n_pos;
        dead.extend([
            inventory.n_words + NULL_ID,
            left + NULL_ID,
            left + inventory.n_labels + NULL_ID,
        ]);
    }
    (0..inventory.len()).filter(|r| !dead.contains(r)).collect()
}

/// Nearest actions to `action` (e.g. `Shift-dog`) by cosine similarity of
/// their `W2` rows.
pub fn action_neighbors(model: &Linearizer, action: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let inventory = ActionInventory::new(model.variant, &model.indexers);
    let indexers: &Indexers = &model.indexers;
    let row = inventory
        .find(action, indexers)
        .ok_or_else(|| Error::UnknownAction(action.to_string()))?;
    Ok(cosine_neighbors(&model.params.w2, row, k, live_rows(&inventory))
        .into_iter()
        .map(|(r, c)| (inventory.name(r, indexers), c))
        .collect())
}
