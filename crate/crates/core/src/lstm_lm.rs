//! Stacked LSTM word language model.
//!
//! Layer `i` at time `t` reads `(h[t][i-1]; h[t-1][i])` through a single
//! `4n × 2n` matrix producing the gates `(i, f, o, g)`:
//!
//! ```text
//! i, f, o = σ(·)    g = tanh(·)
//! c = f ⊙ c_prev + i ⊙ g
//! h = o ⊙ tanh(c)
//! ```
//!
//! `h[t][0]` is the input embedding of word `t`, so the embedding width equals
//! the layer width. The next word is predicted by a softmax over
//! `v_j · h[t][I]` with one output embedding `v_j` per vocabulary entry.
//! Gate biases are off unless [`LmConfig::bias`] is set.
//!
//! The vocabulary is the corpus word vocabulary followed by `<s>` and `</s>`.
//! Sentences are trained as `<s> w1 … wn` predicting `w1 … wn </s>`.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{DepSentence, Indexers};
use crate::error::{Error, Result};
use crate::gradcheck::{self, GradCheckReport};
use crate::math::log_softmax;
use crate::optim::{Adagrad, TensorRef, Tensors};

/// Language-model architecture and training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub layers: usize,
    pub n_units: usize,
    /// Dropout on non-recurrent connections (embedding, between layers,
    /// before the softmax), training only.
    pub dropout: f64,
    pub bias: bool,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Sentences per update.
    pub batch_size: usize,
    pub seed: u64,
    pub init_range: f64,
    pub adagrad_eps: f64,
}

impl Default for LmConfig {
    fn default() -> LmConfig {
        LmConfig {
            layers: 2,
            n_units: 128,
            dropout: 0.2,
            bias: false,
            learning_rate: 0.1,
            l2: 0.0,
            epochs: 20,
            batch_size: 8,
            seed: 1,
            init_range: 0.1,
            adagrad_eps: 1e-8,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.n_units == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "layers, n_units and batch_size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if !(self.learning_rate >= 0.0 && self.l2 >= 0.0) {
            return Err(Error::Config("learning_rate and l2 must be >= 0".into()));
        }
        Ok(())
    }
}

/// One LSTM layer: gate weights over `(h_below; h_prev)` and an optional
/// gate bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayer {
    pub w: Array2<f64>,
    pub b: Option<Array1<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmParams {
    pub embed: Array2<f64>,
    pub layers: Vec<LstmLayer>,
    pub out: Array2<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn uniform<R: Rng>(shape: (usize, usize), range: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || {
        if range > 0.0 {
            rng.random_range(-range..range)
        } else {
            0.0
        }
    })
}

struct CellCache {
    z: Array1<f64>,
    gates: Array1<f64>,
    c_prev: Array1<f64>,
    tanh_c: Array1<f64>,
}

fn cell_forward(
    layer: &LstmLayer,
    h_below: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
) -> (Array1<f64>, Array1<f64>, CellCache) {
    let n = h_prev.len();
    let mut z = Array1::zeros(2 * n);
    z.slice_mut(s![..n]).assign(&h_below);
    z.slice_mut(s![n..]).assign(&h_prev);
    let mut a = layer.w.dot(&z);
    if let Some(b) = &layer.b {
        a += b;
    }
    for (k, v) in a.iter_mut().enumerate() {
        *v = if k < 3 * n { sigmoid(*v) } else { v.tanh() };
    }
    let (i, f, o, g) = (
        a.slice(s![..n]),
        a.slice(s![n..2 * n]),
        a.slice(s![2 * n..3 * n]),
        a.slice(s![3 * n..]),
    );
    let c = &f * &c_prev + &i * &g;
    let tanh_c = c.mapv(f64::tanh);
    let h = &o * &tanh_c;
    let cache = CellCache {
        z,
        gates: a,
        c_prev: c_prev.to_owned(),
        tanh_c,
    };
    (h, c, cache)
}

/// One LSTM cell step. `w` is `4n × 2n` with gate rows ordered `i, f, o, g`.
pub fn lstm_cell(
    w: &Array2<f64>,
    b: Option<&Array1<f64>>,
    h_below: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = h_prev.len();
    if w.dim() != (4 * n, 2 * n) || h_below.len() != n || c_prev.len() != n {
        return Err(Error::Config(format!(
            "cell widths do not match: weights {:?}, input {}, h {}, c {}",
            w.dim(),
            h_below.len(),
            n,
            c_prev.len()
        )));
    }
    if let Some(b) = b {
        if b.len() != 4 * n {
            return Err(Error::Config(format!("gate bias of width {}", b.len())));
        }
    }
    let layer = LstmLayer {
        w: w.clone(),
        b: b.cloned(),
    };
    let (h, c, _) = cell_forward(
        &layer,
        ArrayView1::from(h_below),
        ArrayView1::from(h_prev),
        ArrayView1::from(c_prev),
    );
    Ok((h.to_vec(), c.to_vec()))
}

/// Per-layer `(h, c)` after a consumed prefix. Stepping returns a new state
/// and leaves the old one untouched, so beams can branch from it.
#[derive(Clone, Debug, PartialEq)]
pub struct LmState {
    h: Vec<Array1<f64>>,
    c: Vec<Array1<f64>>,
    prefix: Vec<usize>,
}

impl LmState {
    /// Output of the top layer (zeros before the first step).
    pub fn top(&self) -> &[f64] {
        self.h.last().expect("at least one layer").as_slice().expect("contiguous")
    }

    pub fn h(&self, layer: usize) -> &[f64] {
        self.h[layer].as_slice().expect("contiguous")
    }

    pub fn c(&self, layer: usize) -> &[f64] {
        self.c[layer].as_slice().expect("contiguous")
    }

    /// Vocabulary ids consumed so far, `<s>` included.
    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }
}

/// Summed next-word cross-entropy over a batch and the number of predictions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmLoss {
    pub cross_entropy: f64,
    pub regularizer: f64,
    pub tokens: usize,
}

impl LmLoss {
    pub fn total(&self) -> f64 {
        self.cross_entropy + self.regularizer
    }
}

impl LmParams {
    pub fn new<R: Rng>(vocab_size: usize, config: &LmConfig, rng: &mut R) -> LmParams {
        let n = config.n_units;
        let r = config.init_range;
        let embed = uniform((vocab_size, n), r, rng);
        let layers = (0..config.layers)
            .map(|_| LstmLayer {
                w: uniform((4 * n, 2 * n), r, rng),
                b: config.bias.then(|| Array1::zeros(4 * n)),
            })
            .collect();
        let out = uniform((vocab_size, n), r, rng);
        LmParams { embed, layers, out }
    }

    pub fn zeros_like(&self) -> LmParams {
        LmParams {
            embed: Array2::zeros(self.embed.raw_dim()),
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayer {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: l.b.as_ref().map(|b| Array1::zeros(b.len())),
                })
                .collect(),
            out: Array2::zeros(self.out.raw_dim()),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.nrows()
    }

    pub fn n_units(&self) -> usize {
        self.embed.ncols()
    }

    /// All-zero state with nothing consumed.
    pub fn initial_state(&self) -> LmState {
        let n = self.n_units();
        LmState {
            h: vec![Array1::zeros(n); self.layers.len()],
            c: vec![Array1::zeros(n); self.layers.len()],
            prefix: Vec::new(),
        }
    }

    /// Feeds `word` and returns the successor state; its `top()` is the new
    /// top-layer output. No dropout.
    pub fn step(&self, state: &LmState, word: usize) -> Result<LmState> {
        if word >= self.vocab_size() {
            return Err(Error::Config(format!(
                "word id {word} outside a language-model vocabulary of {}",
                self.vocab_size()
            )));
        }
        let mut below = self.embed.row(word).to_owned();
        let mut h = Vec::with_capacity(self.layers.len());
        let mut c = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let (hl, cl, _) = cell_forward(layer, below.view(), state.h[l].view(), state.c[l].view());
            below = hl.clone();
            h.push(hl);
            c.push(cl);
        }
        let mut prefix = state.prefix.clone();
        prefix.push(word);
        Ok(LmState { h, c, prefix })
    }

    /// Log-probabilities of `allowed` (aligned with it) under the softmax
    /// restricted to the distinct ids in `allowed`. Repeated ids get the same
    /// value and are counted once in the normalizer.
    pub fn next_word_log_probs(&self, state: &LmState, allowed: &[usize]) -> Vec<f64> {
        let top = ArrayView1::from(state.top());
        let mut distinct: Vec<usize> = allowed.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let logits: Vec<f64> = distinct.iter().map(|&j| self.out.row(j).dot(&top)).collect();
        let logp = log_softmax(&logits);
        allowed
            .iter()
            .map(|j| logp[distinct.binary_search(j).expect("present")])
            .collect()
    }

    /// Probabilities over the distinct ids of `allowed` (aligned with
    /// `allowed`), or over the whole vocabulary when `allowed` is `None`.
    pub fn next_word_distribution(&self, state: &LmState, allowed: Option<&[usize]>) -> Vec<f64> {
        let all: Vec<usize>;
        let ids = match allowed {
            Some(ids) => ids,
            None => {
                all = (0..self.vocab_size()).collect();
                &all
            }
        };
        self.next_word_log_probs(state, ids)
            .into_iter()
            .map(f64::exp)
            .collect()
    }

    /// Loss and gradient over `sentences` (each `<s> w1 … wn </s>` as ids),
    /// backpropagating through the whole sentence.
    pub fn loss_and_grad<R: Rng>(
        &self,
        sentences: &[&[usize]],
        l2: f64,
        dropout: Option<(f64, &mut R)>,
    ) -> Result<(LmLoss, LmParams)> {
        let mut grad = self.zeros_like();
        let mut loss = LmLoss {
            cross_entropy: 0.0,
            regularizer: 0.0,
            tokens: 0,
        };
        let mut dropout = dropout.filter(|(p, _)| *p > 0.0);
        for ids in sentences {
            if ids.len() < 2 {
                return Err(Error::Data("language-model sequence shorter than 2".into()));
            }
            if let Some(&bad) = ids.iter().find(|&&j| j >= self.vocab_size()) {
                return Err(Error::Config(format!("word id {bad} outside the vocabulary")));
            }
            let drop = dropout.as_mut().map(|(p, rng)| (*p, &mut **rng));
            loss.cross_entropy += self.sentence_backward(ids, drop, &mut grad);
            loss.tokens += ids.len() - 1;
        }
        if l2 != 0.0 {
            loss.regularizer = 0.5 * l2 * self.squared_norm();
            let params = self.tensors();
            for (g, p) in grad.tensors_mut().into_iter().zip(params) {
                for (g, &p) in g.iter_mut().zip(p.data) {
                    *g += l2 * p;
                }
            }
        }
        Ok((loss, grad))
    }

    fn sentence_backward<R: Rng>(
        &self,
        ids: &[usize],
        mut dropout: Option<(f64, &mut R)>,
        grad: &mut LmParams,
    ) -> f64 {
        let n = self.n_units();
        let n_layers = self.layers.len();
        let steps = ids.len() - 1;
        let mask = |rng_p: &mut Option<(f64, &mut R)>| -> Option<Array1<f64>> {
            rng_p.as_mut().map(|(p, rng)| {
                let keep = 1.0 / (1.0 - *p);
                Array1::from_shape_simple_fn(n, || if rng.random::<f64>() < *p { 0.0 } else { keep })
            })
        };

        // masks[t][l] applies to the input of layer l; masks[t][n_layers] to the top output
        let mut masks: Vec<Vec<Option<Array1<f64>>>> = Vec::with_capacity(steps);
        let mut caches: Vec<Vec<CellCache>> = Vec::with_capacity(steps);
        let mut top = Array2::zeros((steps, n));
        let mut h: Vec<Array1<f64>> = vec![Array1::zeros(n); n_layers];
        let mut c: Vec<Array1<f64>> = vec![Array1::zeros(n); n_layers];
        for t in 0..steps {
            let mut below = self.embed.row(ids[t]).to_owned();
            let mut mt = Vec::with_capacity(n_layers + 1);
            let mut ct = Vec::with_capacity(n_layers);
            for l in 0..n_layers {
                let m = mask(&mut dropout);
                if let Some(m) = &m {
                    below *= m;
                }
                mt.push(m);
                let (hl, cl, cache) = cell_forward(&self.layers[l], below.view(), h[l].view(), c[l].view());
                below = hl.clone();
                h[l] = hl;
                c[l] = cl;
                ct.push(cache);
            }
            let m = mask(&mut dropout);
            if let Some(m) = &m {
                below *= m;
            }
            mt.push(m);
            top.row_mut(t).assign(&below);
            masks.push(mt);
            caches.push(ct);
        }

        // output layer for all steps at once
        let logits = top.dot(&self.out.t());
        let mut dlogits = Array2::zeros(logits.raw_dim());
        let mut ce = 0.0;
        for t in 0..steps {
            let lp = log_softmax(logits.row(t).as_slice().expect("contiguous"));
            let target = ids[t + 1];
            ce -= lp[target];
            let mut row = dlogits.row_mut(t);
            for (d, l) in row.iter_mut().zip(&lp) {
                *d = l.exp();
            }
            row[target] -= 1.0;
        }
        grad.out += &dlogits.t().dot(&top);
        let dtop = dlogits.dot(&self.out);

        let mut dh_next: Vec<Array1<f64>> = vec![Array1::zeros(n); n_layers];
        let mut dc_next: Vec<Array1<f64>> = vec![Array1::zeros(n); n_layers];
        let mut da_rows: Vec<Array2<f64>> = vec![Array2::zeros((steps, 4 * n)); n_layers];
        for t in (0..steps).rev() {
            let mut dh_above = dtop.row(t).to_owned();
            if let Some(m) = &masks[t][n_layers] {
                dh_above *= m;
            }
            for l in (0..n_layers).rev() {
                let cache = &caches[t][l];
                let g = &cache.gates;
                let (gi, gf, go, gg) = (
                    g.slice(s![..n]),
                    g.slice(s![n..2 * n]),
                    g.slice(s![2 * n..3 * n]),
                    g.slice(s![3 * n..]),
                );
                let dh = &dh_above + &dh_next[l];
                let mut da = da_rows[l].row_mut(t);
                let mut dc_prev = Array1::zeros(n);
                for k in 0..n {
                    let dc = dh[k] * go[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]) + dc_next[l][k];
                    da[k] = dc * gg[k] * gi[k] * (1.0 - gi[k]);
                    da[n + k] = dc * cache.c_prev[k] * gf[k] * (1.0 - gf[k]);
                    da[2 * n + k] = dh[k] * cache.tanh_c[k] * go[k] * (1.0 - go[k]);
                    da[3 * n + k] = dc * gi[k] * (1.0 - gg[k] * gg[k]);
                    dc_prev[k] = dc * gf[k];
                }
                let dz = self.layers[l].w.t().dot(&da);
                let mut dx = dz.slice(s![..n]).to_owned();
                dh_next[l] = dz.slice(s![n..]).to_owned();
                dc_next[l] = dc_prev;
                if let Some(m) = &masks[t][l] {
                    dx *= m;
                }
                dh_above = dx;
            }
            grad.embed.row_mut(ids[t]).scaled_add(1.0, &dh_above);
        }
        for l in 0..n_layers {
            let z = Array2::from_shape_fn((steps, 2 * n), |(t, k)| caches[t][l].z[k]);
            grad.layers[l].w += &da_rows[l].t().dot(&z);
            if let Some(b) = &mut grad.layers[l].b {
                *b += &da_rows[l].sum_axis(Axis(0));
            }
        }
        ce
    }

    /// Summed cross-entropy plus the L2 term, without dropout.
    pub fn loss(&self, sentences: &[&[usize]], l2: f64) -> Result<f64> {
        Ok(self.loss_and_grad::<ChaCha8Rng>(sentences, l2, None)?.0.total())
    }

    /// Finite-difference check of the LM gradient.
    pub fn grad_check(
        &mut self,
        sentences: &[&[usize]],
        l2: f64,
        eps: f64,
        per_tensor: usize,
        seed: u64,
    ) -> Result<GradCheckReport> {
        let (_, analytic) = self.loss_and_grad::<ChaCha8Rng>(sentences, l2, None)?;
        Ok(gradcheck::check(
            self,
            &analytic,
            |p| p.loss(sentences, l2).expect("sentences validated"),
            eps,
            per_tensor,
            seed,
        ))
    }
}

impl Tensors for LmParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = vec![TensorRef::of("lm.embed", &self.embed)];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push(TensorRef::of(format!("lm.layer{l}.W"), &layer.w));
            if let Some(b) = &layer.b {
                out.push(TensorRef::of(format!("lm.layer{l}.b"), b));
            }
        }
        out.push(TensorRef::of("lm.out", &self.out));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.embed.as_slice_mut().unwrap()];
        for layer in &mut self.layers {
            out.push(layer.w.as_slice_mut().unwrap());
            if let Some(b) = &mut layer.b {
                out.push(b.as_slice_mut().unwrap());
            }
        }
        out.push(self.out.as_slice_mut().unwrap());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmEpoch {
    /// Training perplexity of the epoch (dropout active when configured).
    pub perplexity: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LmLog {
    pub epochs: Vec<LmEpoch>,
}

/// A trained language model together with the word vocabulary it was built
/// on.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageModel {
    pub config: LmConfig,
    pub indexers: Indexers,
    pub params: LmParams,
}

impl LanguageModel {
    pub fn new(indexers: Indexers, config: LmConfig) -> Result<LanguageModel> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = LmParams::new(indexers.n_words() + 2, &config, &mut rng);
        Ok(LanguageModel {
            config,
            indexers,
            params,
        })
    }

    pub fn bos(&self) -> usize {
        self.indexers.n_words()
    }

    pub fn eos(&self) -> usize {
        self.indexers.n_words() + 1
    }

    /// Language-model id of a word form (UNK for rare or unseen forms).
    pub fn word_id(&self, form: &str) -> usize {
        self.indexers.word_id(form)
    }

    /// Name of an id, with `<s>` and `</s>` for the boundary symbols.
    pub fn id_name(&self, id: usize) -> &str {
        if id == self.bos() {
            "<s>"
        } else if id == self.eos() {
            "</s>"
        } else {
            self.indexers.words.item(id)
        }
    }

    /// State after consuming `<s>`.
    pub fn start_state(&self) -> LmState {
        self.params
            .step(&self.params.initial_state(), self.bos())
            .expect("<s> is in the vocabulary")
    }

    /// `<s> w1 … wn </s>` as ids.
    pub fn encode(&self, forms: &[&str]) -> Vec<usize> {
        let mut ids = Vec::with_capacity(forms.len() + 2);
        ids.push(self.bos());
        ids.extend(forms.iter().map(|f| self.word_id(f)));
        ids.push(self.eos());
        ids
    }

    /// Perplexity of gold-order sentences under the full-vocabulary softmax.
    pub fn perplexity(&self, corpus: &[DepSentence]) -> Result<f64> {
        let encoded: Vec<Vec<usize>> = corpus.iter().map(|s| self.encode(&s.forms())).collect();
        let refs: Vec<&[usize]> = encoded.iter().map(Vec::as_slice).collect();
        let (loss, _) = self.params.loss_and_grad::<ChaCha8Rng>(&refs, 0.0, None)?;
        Ok((loss.cross_entropy / loss.tokens.max(1) as f64).exp())
    }

    /// Adagrad training on gold-order sentences.
    pub fn train(&mut self, corpus: &[DepSentence]) -> Result<LmLog> {
        if corpus.is_empty() {
            return Err(Error::EmptyBag);
        }
        let config = self.config.clone();
        config.validate()?;
        let encoded: Vec<Vec<usize>> = corpus.iter().map(|s| self.encode(&s.forms())).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        let mut opt = Adagrad::new(&self.params, config.learning_rate, config.adagrad_eps);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut log = LmLog::default();
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut ce = 0.0;
            let mut tokens = 0;
            for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
                let batch: Vec<&[usize]> = chunk.iter().map(|&i| encoded[i].as_slice()).collect();
                let (loss, grad) =
                    self.params
                        .loss_and_grad(&batch, config.l2, Some((config.dropout, &mut rng)))?;
                if !loss.total().is_finite() {
                    return Err(Error::NonFinite {
                        epoch,
                        batch: bi,
                        detail: format!(
                            "language-model cross-entropy {} over {} tokens",
                            loss.cross_entropy, loss.tokens
                        ),
                    });
                }
                opt.step(&mut self.params, &grad);
                ce += loss.cross_entropy;
                tokens += loss.tokens;
            }
            log.epochs.push(LmEpoch {
                perplexity: (ce / tokens.max(1) as f64).exp(),
            });
        }
        Ok(log)
    }
}

/// Builds a language model over `indexers` and trains it on `corpus`.
pub fn train_lm(
    corpus: &[DepSentence],
    indexers: Indexers,
    config: LmConfig,
) -> Result<(LanguageModel, LmLog)> {
    let mut lm = LanguageModel::new(indexers, config)?;
    let log = lm.train(corpus)?;
    Ok((lm, log))
}
