mod common;

use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

use ndarray::Array2;
use proptest::prelude::*;

use common::load;
use linearizer::corpus::{build_indexers, WordBag};
use linearizer::decoder::{DecodeConfig, Decoded, Decoder, Mode, Models};
use linearizer::eval::{corpus_bleu, cosine_neighbors};
use linearizer::ffnn::TrainConfig;
use linearizer::lstm_lm::{train_lm, LanguageModel, LmConfig};
use linearizer::math::{log_softmax, softmax};
use linearizer::model::{train_linearizer, Linearizer};
use linearizer::transition::Variant;

struct Models3 {
    full: Linearizer,
    light: Linearizer,
    lm: LanguageModel,
    vocab: Vec<String>,
}

fn models() -> &'static Models3 {
    static MODELS: OnceLock<Models3> = OnceLock::new();
    MODELS.get_or_init(|| {
        let corpus = load("toy-train.conll");
        let config = TrainConfig {
            epochs: 2,
            embed_dim: 8,
            hidden: 16,
            ..TrainConfig::default()
        };
        let (full, _) = train_linearizer(&corpus, Variant::Full, &config, 1, None).unwrap();
        let (light, _) = train_linearizer(&corpus, Variant::Light, &config, 1, None).unwrap();
        let lm_config = LmConfig {
            layers: 2,
            n_units: 12,
            epochs: 2,
            ..LmConfig::default()
        };
        let (lm, _) = train_lm(&corpus, build_indexers(&corpus, 1), lm_config).unwrap();
        let mut vocab: Vec<String> = corpus
            .iter()
            .flat_map(|s| s.tokens().iter().map(|t| t.form.clone()))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        vocab.sort();
        vocab.push("zyzzyva".into());
        Models3 { full, light, lm, vocab }
    })
}

fn bag_strategy(max: usize) -> impl Strategy<Value = Vec<String>> {
    let n = models().vocab.len();
    prop::collection::vec(0..n, 1..=max).prop_map(|ids| ids.into_iter().map(|i| models().vocab[i].clone()).collect())
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

/// Every token but one has exactly one head, and following heads never cycles.
fn assert_tree(out: &Decoded) {
    let n = out.tokens.len();
    assert_eq!(out.arcs.len(), n - 1);
    let mut head = vec![None; n];
    for a in &out.arcs {
        assert!(head[a.dependent].replace(a.head).is_none(), "two heads for {}", a.dependent);
    }
    for start in 0..n {
        let (mut t, mut hops) = (start, 0);
        while let Some(h) = head[t] {
            t = h;
            hops += 1;
            assert!(hops <= n, "cycle through {start}");
        }
    }
}

fn words(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_is_a_distribution(xs in prop::collection::vec(-700.0f64..700.0, 1..40)) {
        let p = softmax(&xs);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let lp = log_softmax(&xs);
        prop_assert!(lp.iter().all(|v| v.is_finite() && *v <= 0.0));
    }

    #[test]
    fn softmax_argmax_matches_scores(xs in prop::collection::vec(-50.0f64..50.0, 1..30), shift in -100.0f64..100.0) {
        let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a))).unwrap();
        let p = softmax(&xs);
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let q = softmax(&shifted);
        prop_assert_eq!(argmax(&p), argmax(&xs));
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn restricted_lm_distribution_renormalizes_the_full_one(
        prefix in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
        allowed in prop::collection::vec(any::<prop::sample::Index>(), 1..8),
    ) {
        let lm = &models().lm;
        let v = lm.params.vocab_size();
        let mut state = lm.start_state();
        for i in &prefix {
            state = lm.params.step(&state, i.index(v)).unwrap();
        }
        let allowed: Vec<usize> = allowed.iter().map(|i| i.index(v)).collect();
        let full = lm.params.next_word_distribution(&state, None);
        let restricted = lm.params.next_word_distribution(&state, Some(&allowed));
        let mut distinct = allowed.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let z: f64 = distinct.iter().map(|&j| full[j]).sum();
        for (&j, &p) in allowed.iter().zip(&restricted) {
            prop_assert!((p - full[j] / z).abs() < 1e-12, "id {j}: {p} vs {}", full[j] / z);
        }
        let mass: f64 = distinct.iter().map(|j| restricted[allowed.iter().position(|a| a == j).unwrap()]).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lm_states_are_pure_functions_of_the_prefix(
        prefix in prop::collection::vec(any::<prop::sample::Index>(), 1..6),
        other in any::<prop::sample::Index>(),
    ) {
        let lm = &models().lm;
        let v = lm.params.vocab_size();
        let ids: Vec<usize> = prefix.iter().map(|i| i.index(v)).collect();
        let walk = |ids: &[usize]| ids.iter().fold(lm.start_state(), |s, &w| lm.params.step(&s, w).unwrap());
        let base = walk(&ids[..ids.len() - 1]);
        let snapshot = base.clone();
        let _branch = lm.params.step(&base, other.index(v)).unwrap();
        prop_assert_eq!(&base, &snapshot);
        let a = lm.params.step(&base, ids[ids.len() - 1]).unwrap();
        prop_assert_eq!(&a, &walk(&ids));
        prop_assert_eq!(a.prefix_len(), ids.len() + 1);
    }

    #[test]
    fn neighbours_ignore_row_scale(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 3..10),
        scales in prop::collection::vec(0.01f64..100.0, 10),
        target in any::<prop::sample::Index>(),
    ) {
        let n = rows.len();
        let w = Array2::from_shape_fn((n, 4), |(r, c)| rows[r][c]);
        let scaled = Array2::from_shape_fn((n, 4), |(r, c)| rows[r][c] * scales[r]);
        let row = target.index(n);
        let a = cosine_neighbors(&w, row, n, 0..n);
        let b = cosine_neighbors(&scaled, row, n, 0..n);
        prop_assert_eq!(a.len(), n - 1);
        for ((_, ca), (_, cb)) in a.iter().zip(&b) {
            prop_assert!((ca - cb).abs() < 1e-9);
        }
        let tied = a.windows(2).any(|p| (p[0].1 - p[1].1).abs() < 1e-9);
        if !tied {
            let ra: Vec<usize> = a.iter().map(|p| p.0).collect();
            let rb: Vec<usize> = b.iter().map(|p| p.0).collect();
            prop_assert_eq!(ra, rb);
        }
        let set_a: HashSet<usize> = a.iter().map(|p| p.0).collect();
        prop_assert!(!set_a.contains(&row));
    }

    #[test]
    fn bleu_ignores_pair_order(
        pairs in prop::collection::vec(
            (prop::collection::vec(0u8..6, 1..12), prop::collection::vec(0u8..6, 1..12)), 1..12),
        rotate in any::<prop::sample::Index>(),
    ) {
        let toks = |v: &[u8]| v.iter().map(|b| format!("w{b}")).collect::<Vec<_>>();
        let refs: Vec<Vec<String>> = pairs.iter().map(|p| toks(&p.0)).collect();
        let hyps: Vec<Vec<String>> = pairs.iter().map(|p| toks(&p.1)).collect();
        let k = rotate.index(pairs.len());
        let (mut refs2, mut hyps2) = (refs.clone(), hyps.clone());
        refs2.rotate_left(k);
        hyps2.rotate_left(k);
        refs2.reverse();
        hyps2.reverse();
        let a = corpus_bleu(&refs, &hyps).unwrap();
        let b = corpus_bleu(&refs2, &hyps2).unwrap();
        prop_assert_eq!(a.bleu, b.bleu);
        prop_assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn permuted_references_have_full_unigram_precision(
        sents in prop::collection::vec(prop::collection::vec(0u8..8, 1..15), 1..8),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let refs: Vec<Vec<String>> = sents.iter().map(|s| s.iter().map(|b| format!("w{b}")).collect()).collect();
        let hyps: Vec<Vec<String>> = refs.iter().map(|r| { let mut h = r.clone(); h.shuffle(&mut rng); h }).collect();
        let report = corpus_bleu(&refs, &hyps).unwrap();
        prop_assert_eq!(report.precisions[0], Some(1.0));
        prop_assert_eq!(report.brevity_penalty, 1.0);
        prop_assert!((0.0..=100.0).contains(&report.bleu));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoded_output_is_a_permutation_and_a_tree(bag in bag_strategy(7), beam in 1usize..5, light in any::<bool>()) {
        let m = models();
        let lin = if light { &m.light } else { &m.full };
        let d = Decoder::new(
            Models { linearizer: Some(lin), lm: None },
            DecodeConfig { mode: Mode::Syn, beam_size: beam, ..DecodeConfig::default() },
        ).unwrap();
        let out = d.beam_decode(Arc::new(WordBag::new(words(&bag)))).unwrap();
        prop_assert_eq!(sorted(out.forms.clone()), sorted(bag.clone()));
        let mut seen = out.tokens.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..bag.len()).collect::<Vec<_>>());
        prop_assert_eq!(out.derivation.len(), lin.variant.derivation_len(bag.len()));
        assert_tree(&out);
    }

    #[test]
    fn every_mode_decodes_a_permutation(bag in bag_strategy(6), mode in prop::sample::select(vec![Mode::Syn, Mode::LstmOnly, Mode::Joint])) {
        let m = models();
        let d = Decoder::new(
            Models { linearizer: Some(&m.full), lm: Some(&m.lm) },
            DecodeConfig { mode, beam_size: 3, ..DecodeConfig::default() },
        ).unwrap();
        let out = d.beam_decode(Arc::new(WordBag::new(words(&bag)))).unwrap();
        prop_assert_eq!(sorted(out.forms.clone()), sorted(bag.clone()));
        prop_assert!(out.score.is_finite() && out.score <= 1e-12);
        if mode == Mode::LstmOnly {
            prop_assert!(out.arcs.is_empty());
        } else {
            assert_tree(&out);
        }
    }

    #[test]
    fn hypotheses_advance_in_lockstep(bag in bag_strategy(6), picks in prop::collection::vec(any::<prop::sample::Index>(), 24)) {
        let m = models();
        let d = Decoder::new(
            Models { linearizer: Some(&m.full), lm: Some(&m.lm) },
            DecodeConfig { mode: Mode::Joint, ..DecodeConfig::default() },
        ).unwrap();
        let total = d.derivation_len(bag.len());
        let mut frontier = vec![d.initial_item(Arc::new(WordBag::new(words(&bag)))).unwrap()];
        for step in 0..total {
            let mut next = Vec::new();
            for (i, item) in frontier.iter().enumerate() {
                prop_assert_eq!(item.state.steps(), step);
                prop_assert!(!item.state.is_terminal());
                let scores = d.step_scores(item).unwrap();
                prop_assert!(!scores.is_empty());
                for k in 0..2 {
                    let (a, s) = scores[picks[(step + i + k) % picks.len()].index(scores.len())];
                    next.push(d.advance(item, a, s).unwrap());
                }
            }
            next.truncate(4);
            frontier = next;
        }
        for item in &frontier {
            prop_assert!(item.state.is_terminal());
            prop_assert_eq!(item.history().len(), total);
        }
    }
}
