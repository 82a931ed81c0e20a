//! Feed-forward action scorer.
//!
//! Feature ids are looked up in word, POS and label embedding tables and
//! concatenated per kind. One tanh hidden layer combines them,
//!
//! ```text
//! h = tanh(W1_w·x_w + W1_t·x_t + W1_l·x_l [+ W1_lm·h_lm] + b1)
//! ```
//!
//! and each legal action is scored by the dot product of its row of `W2`
//! with `h`. The softmax runs over the legal actions of the state only; the
//! output layer has no bias. The optional `W1_lm` block reads the top-layer
//! output of a frozen language model.
//!
//! Training minimizes summed cross-entropy plus `λ/2·‖θ‖²` with Adagrad and
//! inverted dropout on `h`.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Indexers, Replay, WordBag};
use crate::error::{Error, Result};
use crate::features::{self, FeatureVector, LABEL_SLOTS, POS_SLOTS, WORD_SLOTS};
use crate::gradcheck::{self, GradCheckReport};
use crate::math::log_softmax;
use crate::optim::{Adagrad, TensorRef, Tensors};
use crate::transition::{Action, State, TransitionSystem, Variant};

/// Linearizer training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub embed_dim: usize,
    pub hidden: usize,
    pub init_range: f64,
    pub adagrad_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.01,
            l2: 1e-8,
            dropout: 0.3,
            epochs: 20,
            batch_size: 32,
            seed: 1,
            embed_dim: 50,
            hidden: 200,
            init_range: 0.01,
            adagrad_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if self.embed_dim == 0 || self.hidden == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "embed_dim, hidden and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.l2 >= 0.0) {
            return Err(Error::Config("learning_rate and l2 must be >= 0".into()));
        }
        Ok(())
    }
}

/// Maps actions to rows of `W2`.
///
/// Full variant rows: `Shift-w` for every word id, then `Pos-p` for every POS
/// id, `LArc-l` and `RArc-l` for every label id, and `End`. Light variant:
/// `Shift-w` rows, then `LArc`, `RArc`, `End`. Rows for the NULL ids exist
/// but are never feasible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionInventory {
    pub variant: Variant,
    pub n_words: usize,
    pub n_pos: usize,
    pub n_labels: usize,
}

impl ActionInventory {
    pub fn new(variant: Variant, indexers: &Indexers) -> ActionInventory {
        ActionInventory {
            variant,
            n_words: indexers.n_words(),
            n_pos: indexers.n_pos(),
            n_labels: indexers.n_labels(),
        }
    }

    fn left_base(&self) -> usize {
        match self.variant {
            Variant::Full => self.n_words + self.n_pos,
            Variant::Light => self.n_words,
        }
    }

    fn right_base(&self) -> usize {
        match self.variant {
            Variant::Full => self.left_base() + self.n_labels,
            Variant::Light => self.left_base() + 1,
        }
    }

    fn end_row(&self) -> usize {
        match self.variant {
            Variant::Full => self.right_base() + self.n_labels,
            Variant::Light => self.right_base() + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.end_row() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row of `action`; `word_ids[slot]` gives the word id of bag form `slot`.
    pub fn row(&self, action: Action, word_ids: &[usize]) -> usize {
        match action {
            Action::Shift(slot) => word_ids[slot],
            Action::Pos(p) => self.n_words + p,
            Action::LeftArc(l) => self.left_base() + l.unwrap_or(0),
            Action::RightArc(l) => self.right_base() + l.unwrap_or(0),
            Action::End => self.end_row(),
        }
    }

    /// Display name of a row, e.g. `Shift-dog`, `Pos-NN`, `LArc-det`.
    pub fn name(&self, row: usize, indexers: &Indexers) -> String {
        let full = self.variant == Variant::Full;
        if row < self.n_words {
            format!("Shift-{}", indexers.words.item(row))
        } else if full && row < self.left_base() {
            format!("Pos-{}", indexers.pos.item(row - self.n_words))
        } else if row < self.right_base() {
            if full {
                format!("LArc-{}", indexers.labels.item(row - self.left_base()))
            } else {
                "LArc".into()
            }
        } else if row < self.end_row() {
            if full {
                format!("RArc-{}", indexers.labels.item(row - self.right_base()))
            } else {
                "RArc".into()
            }
        } else {
            "End".into()
        }
    }

    /// Inverse of [`ActionInventory::name`].
    pub fn find(&self, name: &str, indexers: &Indexers) -> Option<usize> {
        (0..self.len()).find(|&r| self.name(r, indexers) == name)
    }
}

/// Word id of every form slot of `bag`.
pub fn bag_word_ids(bag: &WordBag, indexers: &Indexers) -> Vec<usize> {
    bag.forms().iter().map(|f| indexers.word_id(f)).collect()
}

/// Legal actions of `state` in canonical order, with their `W2` rows.
pub fn feasible_rows(
    system: &TransitionSystem,
    inventory: &ActionInventory,
    state: &State,
    word_ids: &[usize],
) -> (Vec<Action>, Vec<usize>) {
    let actions = system.legal_actions(state);
    let rows = actions.iter().map(|&a| inventory.row(a, word_ids)).collect();
    (actions, rows)
}

/// Training examples for every step of a replayed oracle derivation.
/// `lm_feats[k]`, when given, is the language-model feature of step `k`.
pub fn replay_examples(
    replay: &Replay,
    indexers: &Indexers,
    lm_feats: Option<Vec<Vec<f64>>>,
) -> Vec<Example> {
    let variant = replay.terminal.variant();
    let system = TransitionSystem::new(variant, indexers);
    let inventory = ActionInventory::new(variant, indexers);
    let word_ids = bag_word_ids(&replay.bag, indexers);
    let mut lm_feats = lm_feats.map(Vec::into_iter);
    replay
        .states
        .iter()
        .zip(&replay.actions)
        .map(|(state, &action)| {
            let (_, feasible) = feasible_rows(&system, &inventory, state, &word_ids);
            Example {
                features: features::extract(state, &word_ids, variant),
                lm_feat: lm_feats.as_mut().and_then(Iterator::next),
                feasible,
                gold: inventory.row(action, &word_ids),
            }
        })
        .collect()
}

/// One supervised decision: the features of a state, its legal actions as
/// `W2` rows, and the row of the oracle action.
#[derive(Clone, Debug)]
pub struct Example {
    pub features: FeatureVector,
    pub lm_feat: Option<Vec<f64>>,
    pub feasible: Vec<usize>,
    pub gold: usize,
}

impl Example {
    fn gold_position(&self, index: usize) -> Result<usize> {
        self.feasible
            .iter()
            .position(|&r| r == self.gold)
            .ok_or_else(|| {
                Error::Data(format!(
                    "example {index}: gold action row {} is not among the {} feasible actions",
                    self.gold,
                    self.feasible.len()
                ))
            })
    }
}

/// Embedding tables and network weights. Embedding tables hold one row per
/// symbol id.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizerParams {
    pub variant: Variant,
    pub word_emb: Array2<f64>,
    pub pos_emb: Option<Array2<f64>>,
    pub label_emb: Option<Array2<f64>>,
    pub w1_word: Array2<f64>,
    pub w1_pos: Option<Array2<f64>>,
    pub w1_label: Option<Array2<f64>>,
    pub w1_lm: Option<Array2<f64>>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
}

fn uniform<R: Rng>(rows: usize, cols: usize, range: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        if range > 0.0 {
            rng.random_range(-range..range)
        } else {
            0.0
        }
    })
}

/// Summed cross-entropy and the L2 term of one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchLoss {
    pub cross_entropy: f64,
    pub regularizer: f64,
}

impl BatchLoss {
    pub fn total(&self) -> f64 {
        self.cross_entropy + self.regularizer
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// Mean cross-entropy per example (with dropout active).
    pub mean_loss: f64,
    /// `‖θ‖` after the epoch.
    pub param_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

struct Inputs {
    word: Array2<f64>,
    pos: Option<Array2<f64>>,
    label: Option<Array2<f64>>,
    lm: Option<Array2<f64>>,
}

impl LinearizerParams {
    /// Random initialization in `(-init_range, init_range)`; `b1` starts at 0.
    /// `lm_dim` adds the language-model feature block.
    pub fn new<R: Rng>(
        variant: Variant,
        indexers: &Indexers,
        config: &TrainConfig,
        lm_dim: Option<usize>,
        rng: &mut R,
    ) -> LinearizerParams {
        let d = config.embed_dim;
        let h = config.hidden;
        let r = config.init_range;
        let n_actions = ActionInventory::new(variant, indexers).len();
        let full = variant == Variant::Full;
        let word_emb = uniform(indexers.n_words(), d, r, rng);
        let pos_emb = full.then(|| uniform(indexers.n_pos(), d, r, rng));
        let label_emb = full.then(|| uniform(indexers.n_labels(), d, r, rng));
        let w1_word = uniform(h, WORD_SLOTS * d, r, rng);
        let w1_pos = full.then(|| uniform(h, POS_SLOTS * d, r, rng));
        let w1_label = full.then(|| uniform(h, LABEL_SLOTS * d, r, rng));
        let w1_lm = lm_dim.map(|l| uniform(h, l, r, rng));
        let w2 = uniform(n_actions, h, r, rng);
        LinearizerParams {
            variant,
            word_emb,
            pos_emb,
            label_emb,
            w1_word,
            w1_pos,
            w1_label,
            w1_lm,
            b1: Array1::zeros(h),
            w2,
        }
    }

    pub fn zeros_like(&self) -> LinearizerParams {
        let z = |a: &Array2<f64>| Array2::zeros(a.raw_dim());
        LinearizerParams {
            variant: self.variant,
            word_emb: z(&self.word_emb),
            pos_emb: self.pos_emb.as_ref().map(z),
            label_emb: self.label_emb.as_ref().map(z),
            w1_word: z(&self.w1_word),
            w1_pos: self.w1_pos.as_ref().map(z),
            w1_label: self.w1_label.as_ref().map(z),
            w1_lm: self.w1_lm.as_ref().map(z),
            b1: Array1::zeros(self.b1.len()),
            w2: z(&self.w2),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.word_emb.ncols()
    }

    pub fn hidden_size(&self) -> usize {
        self.b1.len()
    }

    /// Width of the language-model feature block, if present.
    pub fn lm_dim(&self) -> Option<usize> {
        self.w1_lm.as_ref().map(|w| w.ncols())
    }

    fn gather(&self, fvs: &[&FeatureVector], lm: &[Option<&[f64]>]) -> Result<Inputs> {
        let d = self.embed_dim();
        let b = fvs.len();
        let fill = |table: &Array2<f64>,
                    slots: usize,
                    pick: &dyn Fn(&FeatureVector) -> &[usize],
                    kind: &str|
         -> Result<Array2<f64>> {
            let mut x = Array2::zeros((b, slots * d));
            for (i, fv) in fvs.iter().enumerate() {
                let ids = pick(fv);
                if ids.len() != slots {
                    return Err(Error::Config(format!(
                        "expected {slots} {kind} slots, found {}",
                        ids.len()
                    )));
                }
                for (s, &id) in ids.iter().enumerate() {
                    if id >= table.nrows() {
                        return Err(Error::Config(format!(
                            "{kind} id {id} outside a vocabulary of {}",
                            table.nrows()
                        )));
                    }
                    x.row_mut(i)
                        .slice_mut(ndarray::s![s * d..(s + 1) * d])
                        .assign(&table.row(id));
                }
            }
            Ok(x)
        };

        let word = fill(&self.word_emb, WORD_SLOTS, &|f| &f.words, "word")?;
        let pos = match &self.pos_emb {
            Some(t) => Some(fill(t, POS_SLOTS, &|f| &f.pos, "POS")?),
            None => None,
        };
        let label = match &self.label_emb {
            Some(t) => Some(fill(t, LABEL_SLOTS, &|f| &f.labels, "label")?),
            None => None,
        };
        let lm = match &self.w1_lm {
            Some(w) => {
                let l = w.ncols();
                let mut x = Array2::zeros((b, l));
                for (i, feat) in lm.iter().enumerate() {
                    let feat = feat.ok_or_else(|| {
                        Error::Config("model expects language-model features".into())
                    })?;
                    if feat.len() != l {
                        return Err(Error::Config(format!(
                            "language-model feature of width {} for a block of width {l}",
                            feat.len()
                        )));
                    }
                    x.row_mut(i).assign(&ArrayView1::from(feat));
                }
                Some(x)
            }
            None => {
                if lm.iter().any(Option::is_some) {
                    return Err(Error::Config(
                        "language-model features given to a model without an LM block".into(),
                    ));
                }
                None
            }
        };
        Ok(Inputs {
            word,
            pos,
            label,
            lm,
        })
    }

    fn pre_activation(&self, x: &Inputs) -> Array2<f64> {
        let mut pre = x.word.dot(&self.w1_word.t());
        let blocks = [
            (&x.pos, &self.w1_pos),
            (&x.label, &self.w1_label),
            (&x.lm, &self.w1_lm),
        ];
        for (input, weight) in blocks {
            if let (Some(input), Some(weight)) = (input, weight) {
                pre += &input.dot(&weight.t());
            }
        }
        pre += &self.b1;
        pre
    }

    /// Hidden activations (one row per feature vector), without dropout.
    /// `lm` must be empty or aligned with `fvs`.
    pub fn hidden(&self, fvs: &[&FeatureVector], lm: &[Option<&[f64]>]) -> Result<Array2<f64>> {
        let lm = if lm.is_empty() {
            vec![None; fvs.len()]
        } else {
            lm.to_vec()
        };
        let x = self.gather(fvs, &lm)?;
        Ok(self.pre_activation(&x).mapv(f64::tanh))
    }

    /// Hidden activation of one state, computed with matrix-vector products
    /// so the value does not depend on how states are batched.
    pub fn hidden_one(&self, fv: &FeatureVector, lm_feat: Option<&[f64]>) -> Result<Array1<f64>> {
        let x = self.gather(&[fv], &[lm_feat])?;
        let mut pre = self.w1_word.dot(&x.word.row(0));
        let blocks = [
            (&x.pos, &self.w1_pos),
            (&x.label, &self.w1_label),
            (&x.lm, &self.w1_lm),
        ];
        for (input, weight) in blocks {
            if let (Some(input), Some(weight)) = (input, weight) {
                pre += &weight.dot(&input.row(0));
            }
        }
        pre += &self.b1;
        Ok(pre.mapv(f64::tanh))
    }

    /// Log-probabilities of the `feasible` rows given a hidden vector.
    pub fn log_probs_from_hidden(&self, h: ArrayView1<f64>, feasible: &[usize]) -> Vec<f64> {
        let logits: Vec<f64> = feasible.iter().map(|&r| self.w2.row(r).dot(&h)).collect();
        log_softmax(&logits)
    }

    /// Log-probabilities over `feasible` (aligned with it). With `dropout`,
    /// an inverted-dropout mask is drawn from the given generator.
    pub fn forward<R: Rng>(
        &self,
        fv: &FeatureVector,
        lm_feat: Option<&[f64]>,
        feasible: &[usize],
        dropout: Option<(f64, &mut R)>,
    ) -> Result<Vec<f64>> {
        if feasible.is_empty() {
            return Err(Error::Data("no feasible actions".into()));
        }
        if let Some(&r) = feasible.iter().find(|&&r| r >= self.w2.nrows()) {
            return Err(Error::Config(format!("action row {r} outside W2")));
        }
        let mut h = self.hidden_one(fv, lm_feat)?;
        if let Some((p, rng)) = dropout {
            let mask = dropout_mask(1, self.hidden_size(), p, rng);
            h *= &mask.row(0);
        }
        Ok(self.log_probs_from_hidden(h.view(), feasible))
    }

    /// Summed cross-entropy of the oracle actions plus `λ/2·‖θ‖²`, without
    /// dropout.
    pub fn loss(&self, batch: &[Example], l2: f64) -> Result<f64> {
        let refs: Vec<&Example> = batch.iter().collect();
        Ok(self
            .loss_and_grad::<ChaCha8Rng>(&refs, l2, None)?
            .0
            .total())
    }

    /// Loss and its gradient with respect to every tensor.
    pub fn loss_and_grad<R: Rng>(
        &self,
        batch: &[&Example],
        l2: f64,
        dropout: Option<(f64, &mut R)>,
    ) -> Result<(BatchLoss, LinearizerParams)> {
        let golds = batch
            .iter()
            .enumerate()
            .map(|(i, e)| e.gold_position(i))
            .collect::<Result<Vec<_>>>()?;
        let fvs: Vec<&FeatureVector> = batch.iter().map(|e| &e.features).collect();
        let lm: Vec<Option<&[f64]>> = batch.iter().map(|e| e.lm_feat.as_deref()).collect();
        let x = self.gather(&fvs, &lm)?;
        let h = self.pre_activation(&x).mapv(f64::tanh);
        let mask = match dropout {
            Some((p, rng)) if p > 0.0 => Some(dropout_mask(batch.len(), self.hidden_size(), p, rng)),
            _ => None,
        };
        let hd = match &mask {
            Some(m) => &h * m,
            None => h.clone(),
        };

        let mut grad = self.zeros_like();
        let mut dhd = Array2::<f64>::zeros(h.raw_dim());
        let mut cross_entropy = 0.0;
        for (b, ex) in batch.iter().enumerate() {
            let hrow = hd.row(b);
            let logp = self.log_probs_from_hidden(hrow, &ex.feasible);
            cross_entropy -= logp[golds[b]];
            for (k, (&row, lp)) in ex.feasible.iter().zip(&logp).enumerate() {
                let dz = lp.exp() - if k == golds[b] { 1.0 } else { 0.0 };
                grad.w2.row_mut(row).scaled_add(dz, &hrow);
                dhd.row_mut(b).scaled_add(dz, &self.w2.row(row));
            }
        }

        let mut dpre = dhd;
        if let Some(m) = &mask {
            dpre *= m;
        }
        dpre.zip_mut_with(&h, |g, &a| *g *= 1.0 - a * a);

        grad.b1 = dpre.sum_axis(Axis(0));
        grad.w1_word = dpre.t().dot(&x.word);
        let d = self.embed_dim();
        scatter(&mut grad.word_emb, &dpre.dot(&self.w1_word), &fvs, |f| &f.words, d);
        if let (Some(w1), Some(xp)) = (&self.w1_pos, &x.pos) {
            grad.w1_pos = Some(dpre.t().dot(xp));
            let g = grad.pos_emb.as_mut().expect("full variant");
            scatter(g, &dpre.dot(w1), &fvs, |f| &f.pos, d);
        }
        if let (Some(w1), Some(xl)) = (&self.w1_label, &x.label) {
            grad.w1_label = Some(dpre.t().dot(xl));
            let g = grad.label_emb.as_mut().expect("full variant");
            scatter(g, &dpre.dot(w1), &fvs, |f| &f.labels, d);
        }
        if let Some(xlm) = &x.lm {
            grad.w1_lm = Some(dpre.t().dot(xlm));
        }

        let mut regularizer = 0.0;
        if l2 != 0.0 {
            regularizer = 0.5 * l2 * self.squared_norm();
            let params = self.tensors();
            for (g, p) in grad.tensors_mut().into_iter().zip(params) {
                for (g, &p) in g.iter_mut().zip(p.data) {
                    *g += l2 * p;
                }
            }
        }
        Ok((
            BatchLoss {
                cross_entropy,
                regularizer,
            },
            grad,
        ))
    }

    /// Finite-difference check of [`LinearizerParams::loss_and_grad`] on
    /// `batch` (dropout off).
    pub fn grad_check(
        &mut self,
        batch: &[Example],
        l2: f64,
        eps: f64,
        per_tensor: usize,
        seed: u64,
    ) -> Result<GradCheckReport> {
        let refs: Vec<&Example> = batch.iter().collect();
        let (_, analytic) = self.loss_and_grad::<ChaCha8Rng>(&refs, l2, None)?;
        // Validated above, so the closure cannot fail.
        Ok(gradcheck::check(
            self,
            &analytic,
            |p| p.loss(batch, l2).expect("batch validated"),
            eps,
            per_tensor,
            seed,
        ))
    }

    /// Mini-batch Adagrad over `examples`, shuffled every epoch under
    /// `config.seed`.
    pub fn train(&mut self, examples: &[Example], config: &TrainConfig) -> Result<TrainLog> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut opt = Adagrad::new(self, config.learning_rate, config.adagrad_eps);
        let mut log = TrainLog::default();
        let mut order: Vec<usize> = (0..examples.len()).collect();
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
                let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
                let (loss, grad) =
                    self.loss_and_grad(&batch, config.l2, Some((config.dropout, &mut rng)))?;
                if !loss.total().is_finite() {
                    return Err(Error::NonFinite {
                        epoch,
                        batch: bi,
                        detail: format!(
                            "cross-entropy {} regularizer {} param norm {}",
                            loss.cross_entropy,
                            loss.regularizer,
                            self.squared_norm().sqrt()
                        ),
                    });
                }
                opt.step(self, &grad);
                total += loss.cross_entropy;
            }
            log.epochs.push(EpochStats {
                mean_loss: total / examples.len().max(1) as f64,
                param_norm: self.squared_norm().sqrt(),
            });
        }
        Ok(log)
    }
}

fn dropout_mask<R: Rng>(rows: usize, cols: usize, p: f64, rng: &mut R) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn((rows, cols), || {
        if rng.random::<f64>() < p {
            0.0
        } else {
            keep
        }
    })
}

fn scatter(
    table: &mut Array2<f64>,
    dx: &Array2<f64>,
    fvs: &[&FeatureVector],
    pick: impl Fn(&FeatureVector) -> &[usize],
    d: usize,
) {
    for (b, fv) in fvs.iter().enumerate() {
        for (s, &id) in pick(fv).iter().enumerate() {
            table
                .row_mut(id)
                .scaled_add(1.0, &dx.row(b).slice(ndarray::s![s * d..(s + 1) * d]));
        }
    }
}

fn push<'a>(out: &mut Vec<TensorRef<'a>>, name: &str, a: &'a Array2<f64>) {
    out.push(TensorRef::of(name, a));
}

impl Tensors for LinearizerParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        push(&mut out, "E_w", &self.word_emb);
        if let Some(a) = &self.pos_emb {
            push(&mut out, "E_t", a);
        }
        if let Some(a) = &self.label_emb {
            push(&mut out, "E_l", a);
        }
        push(&mut out, "W1_w", &self.w1_word);
        if let Some(a) = &self.w1_pos {
            push(&mut out, "W1_t", a);
        }
        if let Some(a) = &self.w1_label {
            push(&mut out, "W1_l", a);
        }
        if let Some(a) = &self.w1_lm {
            push(&mut out, "W1_lm", a);
        }
        out.push(TensorRef::of("b1", &self.b1));
        push(&mut out, "W2", &self.w2);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        out.push(self.word_emb.as_slice_mut().unwrap());
        if let Some(a) = &mut self.pos_emb {
            out.push(a.as_slice_mut().unwrap());
        }
        if let Some(a) = &mut self.label_emb {
            out.push(a.as_slice_mut().unwrap());
        }
        out.push(self.w1_word.as_slice_mut().unwrap());
        if let Some(a) = &mut self.w1_pos {
            out.push(a.as_slice_mut().unwrap());
        }
        if let Some(a) = &mut self.w1_label {
            out.push(a.as_slice_mut().unwrap());
        }
        if let Some(a) = &mut self.w1_lm {
            out.push(a.as_slice_mut().unwrap());
        }
        out.push(self.b1.as_slice_mut().unwrap());
        out.push(self.w2.as_slice_mut().unwrap());
        out
    }
}
