mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use common::{data_path, load};
use linearizer::container::ModelFile;
use linearizer::corpus::build_indexers;
use linearizer::ffnn::{LinearizerParams, TrainConfig};
use linearizer::lstm_lm::{LanguageModel, LmConfig};
use linearizer::transition::Variant;

const I_LOVE_NLP: &str = "\
1\tI\t_\tPRP\tPRP\t_\t2\tnsubj\t_\t_
2\tlove\t_\tVBP\tVBP\t_\t0\troot\t_\t_
3\tNLP\t_\tNNP\tNNP\t_\t2\tdobj\t_\t_
";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linearizer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8")
}

/// Runs a command that must succeed and returns its standard output.
fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

/// Runs a command that must fail with `code` on a single stderr line.
fn fails(args: &[&str], code: &str) -> String {
    let o = run(args);
    assert!(!o.status.success(), "{args:?} unexpectedly succeeded");
    let err = stderr(&o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{args:?} printed {err:?}");
    assert!(lines[0].starts_with(&format!("error[{code}]: ")), "{args:?} printed {err:?}");
    err
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn data(name: &str) -> String {
    s(&data_path(name))
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Work {
        Work {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        s(&self.path(name))
    }

    fn write(&self, name: &str, text: &str) -> String {
        fs::write(self.path(name), text).expect("write");
        self.p(name)
    }

    fn train_lm(&self, name: &str, seed: &str) -> String {
        let out = self.p(name);
        ok(&[
            "train-lm", "--corpus", &data("toy-train.conll"), "-o", &out, "--epochs", "1", "--seed", seed, "--set",
            "lm.n_units=16",
        ]);
        out
    }

    fn train(&self, name: &str, extra: &[&str]) -> String {
        let out = self.p(name);
        let corpus = data("toy-train.conll");
        let mut args = vec!["train", "--corpus", &corpus, "-o", &out];
        args.extend_from_slice(extra);
        ok(&args);
        out
    }
}

fn records(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split('\t').map(String::from).collect())
        .collect()
}

#[test]
fn train_lm_is_reproducible_per_seed() {
    let w = Work::new();
    let a = fs::read(w.train_lm("a.bin", "7")).unwrap();
    let b = fs::read(w.train_lm("b.bin", "7")).unwrap();
    let c = fs::read(w.train_lm("c.bin", "8")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(&a[..8], b"LINRZMDL");
}

#[test]
fn train_lm_logs_perplexity_per_epoch() {
    let w = Work::new();
    let o = run(&[
        "train-lm", "--corpus", &data("toy-train.conll"), "-o", &w.p("lm.bin"), "--epochs", "2", "--set",
        "lm.n_units=8",
    ]);
    assert!(o.status.success());
    let log = stderr(&o);
    let epochs: Vec<&str> = log.lines().filter(|l| l.starts_with("epoch ")).collect();
    assert_eq!(epochs.len(), 2, "{log}");
    assert!(epochs[0].contains("perplexity"));
}

#[test]
fn missing_corpus_argument_is_a_usage_error() {
    let o = run(&["train-lm", "-o", "x.bin"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[usage]: ") && err.contains("--corpus"), "{err}");
}

#[test]
fn nonexistent_corpus_is_an_io_error_naming_the_file() {
    let err = fails(&["train-lm", "--corpus", "/no/such/corpus.conll", "-o", "x.bin"], "io");
    assert!(err.contains("/no/such/corpus.conll"));
    assert_eq!(run(&["train", "--corpus", "/no/such", "-o", "x"]).status.code(), Some(1));
}

#[test]
fn zero_epochs_stores_the_initialization() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "0", "--seed", "3"]);
    let lm = w.p("lm.bin");
    ok(&[
        "train-lm", "--corpus", &data("toy-train.conll"), "-o", &lm, "--epochs", "0", "--seed", "3", "--set",
        "lm.n_units=8",
    ]);

    let corpus = load("toy-train.conll");
    let indexers = build_indexers(&corpus, 1);
    let config = TrainConfig {
        epochs: 0,
        seed: 3,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let expected = LinearizerParams::new(Variant::Full, &indexers, &config, None, &mut rng);
    let loaded = ModelFile::load(&lin).unwrap().linearizer.unwrap();
    assert_eq!(loaded.params, expected);

    let lm_config = LmConfig {
        epochs: 0,
        seed: 3,
        n_units: 8,
        ..LmConfig::default()
    };
    let expected = LanguageModel::new(indexers, lm_config).unwrap();
    assert_eq!(ModelFile::load(&lm).unwrap().lm.unwrap().params, expected.params);
}

fn pos_free_corpus(w: &Work) -> String {
    let text = fs::read_to_string(data_path("toy-train.conll")).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split('\t').collect();
            if f.len() >= 8 {
                f[3] = "_";
                f[4] = "_";
            }
            f.join("\t") + "\n"
        })
        .collect();
    w.write("nopos.conll", &stripped)
}

#[test]
fn light_variant_trains_without_pos_tags() {
    let w = Work::new();
    let corpus = pos_free_corpus(&w);
    ok(&["train", "--corpus", &corpus, "-o", &w.p("light.bin"), "--variant", "light", "--epochs", "1"]);
    let out = ok(&["decode", "--model", &w.p("light.bin"), "--input", &corpus, "--beam", "2"]);
    assert_eq!(out.lines().count(), 50);
}

#[test]
fn full_variant_refuses_a_corpus_without_pos_tags() {
    let w = Work::new();
    let corpus = pos_free_corpus(&w);
    let err = fails(&["train", "--corpus", &corpus, "-o", &w.p("full.bin"), "--epochs", "1"], "data");
    assert!(err.contains("POS"), "{err}");
    assert!(!w.path("full.bin").exists());
}

#[test]
fn decode_records_have_five_fields_and_rerun_identically() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "2"]);
    let args = ["decode", "--model", &lin, "--input", &data("toy-dev.conll"), "--beam", "1"];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    let recs = records(&first);
    assert_eq!(recs.len(), 20);
    let dev = load("toy-dev.conll");
    for (i, (r, gold)) in recs.iter().zip(&dev).enumerate() {
        assert_eq!(r.len(), 5);
        assert_eq!(r[0], (i + 1).to_string());
        let mut got: Vec<&str> = r[1].split(' ').collect();
        let mut want = gold.forms();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want, "output is a permutation of the bag");
        assert!(r[2].parse::<f64>().unwrap() <= 0.0);
        let names: Vec<&str> = r[3].split(' ').collect();
        assert_eq!(names.len(), 3 * gold.len());
        assert!(names[0].starts_with("Shift-") && names[1].starts_with("Pos-"));
        assert_eq!(*names.last().unwrap(), "End");
        assert_eq!(r[4].split(' ').count(), gold.len() - 1 + usize::from(gold.len() == 1));
    }
}

#[test]
fn decode_is_independent_of_thread_count_and_seed() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "1"]);
    let base = ["decode", "--model", &lin, "--input", &data("toy-dev.conll"), "--beam", "3"];
    let one = ok(&[&base[..], &["--threads", "1"]].concat());
    assert_eq!(one, ok(&[&base[..], &["--threads", "4", "--seed", "99"]].concat()));
}

#[test]
fn joint_decoding_with_zero_weight_matches_syn() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "2"]);
    let lm = w.train_lm("lm.bin", "1");
    let dev = data("toy-dev.conll");
    let syn = ok(&["decode", "--model", &lin, "--input", &dev]);
    let joint = ok(&["decode", "--model", &lin, "--lm", &lm, "--input", &dev, "--mode", "syn+lstm", "--alpha", "0"]);
    assert_eq!(syn, joint);
}

#[test]
fn wider_beam_never_scores_lower() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "2"]);
    let dev = data("toy-dev.conll");
    let score = |beam: &str| -> Vec<f64> {
        records(&ok(&["decode", "--model", &lin, "--input", &dev, "--beam", beam]))
            .iter()
            .map(|r| r[2].parse().unwrap())
            .collect()
    };
    for (narrow, wide) in score("10").iter().zip(score("64")) {
        assert!(wide >= *narrow, "{wide} < {narrow}");
    }
}

#[test]
fn feature_training_writes_a_combined_file() {
    let w = Work::new();
    let lm = w.train_lm("lm.bin", "1");
    let lin = w.train("feat.bin", &["--lm", &lm, "--epochs", "1"]);
    let file = ModelFile::load(&lin).unwrap();
    assert!(file.linearizer.as_ref().unwrap().uses_lm());
    assert!(file.lm.is_some());
    let out = ok(&["decode", "--model", &lin, "--input", &data("toy-dev.conll"), "--mode", "syn*lstm", "--beam", "2"]);
    assert_eq!(out.lines().count(), 20);
    let summary = ok(&["inspect", "--model", &lin]);
    assert!(summary.starts_with("component\tCombined"), "{summary}");
}

#[test]
fn lstm_only_decoding_needs_only_the_language_model() {
    let w = Work::new();
    let lm = w.train_lm("lm.bin", "1");
    let out = ok(&["decode", "--lm", &lm, "--input", &data("toy-dev.conll"), "--mode", "lstm-only", "--beam", "4"]);
    for r in records(&out) {
        assert_eq!(r[3].split(' ').filter(|a| !a.starts_with("Shift-")).count(), 0);
        assert_eq!(r[4], "-");
    }
}

#[test]
fn mode_and_model_mismatches_are_config_errors() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "0"]);
    let lm = w.train_lm("lm.bin", "1");
    let dev = data("toy-dev.conll");
    fails(&["decode", "--model", &lin, "--input", &dev, "--mode", "syn+lstm"], "config");
    fails(&["decode", "--model", &lin, "--input", &dev, "--mode", "syn*lstm", "--lm", &lm], "config");
    fails(&["decode", "--lm", &lm, "--input", &dev, "--mode", "syn"], "config");
    fails(&["decode", "--model", &lin, "--input", &dev, "--beam", "0"], "config");
    fails(&["decode", "--model", &lin, "--input", &dev, "--mode", "beam"], "config");
}

#[test]
fn decodes_plain_bags() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "1", "--variant", "light"]);
    let bags = w.write("bags.txt", "dog the barked\nthe the cat\n");
    let out = ok(&["decode", "--model", &lin, "--input", &bags, "--format", "bags"]);
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    let mut words: Vec<&str> = recs[1][1].split(' ').collect();
    words.sort_unstable();
    assert_eq!(words, ["cat", "the", "the"]);
}

#[test]
fn evaluate_scores_identity_at_one_hundred() {
    let dev = data("toy-dev.conll");
    let table = ok(&["evaluate", "--refs", &dev, "--hyps", &dev]);
    assert!(table.starts_with("BLEU = 100.00"), "{table}");
    let kv = ok(&["evaluate", "--refs", &dev, "--hyps", &dev, "--kv"]);
    assert!(kv.lines().any(|l| l == "bleu=100.000000"), "{kv}");
    assert!(kv.lines().any(|l| l == "sentences=20"));
}

#[test]
fn evaluate_reads_decode_output_and_plain_text() {
    let w = Work::new();
    let refs = w.write("refs.txt", "I love NLP\nthe dog barked\n");
    let hyps = w.write("hyps.tsv", "1\tNLP love I\t-1.0\t-\t-\n2\tthe dog barked\t-0.5\t-\t-\n");
    let kv = ok(&["evaluate", "--refs", &refs, "--hyps", &hyps, "--kv"]);
    assert!(kv.contains("p1=1.000000"), "{kv}");
    assert!(kv.contains("hyp_len=6"), "{kv}");
    let short = w.write("short.txt", "I love NLP\n");
    fails(&["evaluate", "--refs", &refs, "--hyps", &short], "length-mismatch");
}

#[test]
fn oracle_check_passes_the_worked_example() {
    let w = Work::new();
    let corpus = w.write("i-love-nlp.conll", I_LOVE_NLP);
    for variant in ["full", "light"] {
        let out = ok(&["oracle-check", "--corpus", &corpus, "--variant", variant]);
        assert!(out.contains("sentences=1") && out.contains("pass=1") && out.contains("skipped=0"), "{out}");
    }
}

#[test]
fn oracle_check_counts_skipped_non_projective_sentences() {
    let w = Work::new();
    let crossing = "\
1\ta\t_\tX\tX\t_\t3\tdep\t_\t_
2\tb\t_\tX\tX\t_\t4\tdep\t_\t_
3\tc\t_\tX\tX\t_\t0\troot\t_\t_
4\td\t_\tX\tX\t_\t3\tdep\t_\t_
";
    let corpus = w.write("mixed.conll", &format!("{I_LOVE_NLP}\n{crossing}"));
    let o = run(&["oracle-check", "--corpus", &corpus]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("sentences=2") && out.contains("pass=1") && out.contains("skipped=1"), "{out}");
}

#[test]
fn inspect_lists_deterministic_neighbours() {
    let w = Work::new();
    let lin = w.train("lin.bin", &["--epochs", "1"]);
    let args = ["inspect", "--model", &lin, "--action", "Shift-dog", "-k", "4"];
    let table = ok(&args);
    assert_eq!(table, ok(&args));
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "rank\taction\tcosine");
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().skip(1).all(|r| !r.contains("Shift-dog\t")));
    fails(&["inspect", "--model", &lin, "--action", "Jump-dog"], "unknown-action");
}

#[test]
fn config_files_and_overrides() {
    let w = Work::new();
    let cfg = w.write("run.conf", "# toy run\nepochs = 1\nhidden = 16\nseed = 5\n");
    let a = w.p("a.bin");
    ok(&["train", "--corpus", &data("toy-train.conll"), "-o", &a, "--config", &cfg]);
    let b = w.p("b.bin");
    ok(&[
        "train", "--corpus", &data("toy-train.conll"), "-o", &b, "--set", "epochs=1", "--set", "hidden=16", "--seed", "5",
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let model = ModelFile::load(&a).unwrap().linearizer.unwrap();
    assert_eq!(model.config.hidden, 16);
    assert_eq!(model.config.seed, 5);

    let c = w.p("c.bin");
    ok(&["train", "--corpus", &data("toy-train.conll"), "-o", &c, "--config", &cfg, "--epochs", "0"]);
    assert_eq!(ModelFile::load(&c).unwrap().linearizer.unwrap().config.epochs, 0);

    let bad = w.write("bad.conf", "epochs = 1\nhiden = 16\n");
    let err = fails(&["train", "--corpus", &data("toy-train.conll"), "-o", &c, "--config", &bad], "config");
    assert!(err.contains("bad.conf"), "{err}");
    fails(&["train", "--corpus", &data("toy-train.conll"), "-o", &c, "--set", "epochs=many"], "config");
}

#[test]
fn error_paths_print_one_coded_line() {
    let w = Work::new();
    let garbage = w.write("garbage.bin", "not a model");
    fails(&["inspect", "--model", &garbage], "model-format");
    let broken = w.write("broken.conll", "1\tI\t_\tPRP\tPRP\t_\tx\tnsubj\t_\t_\n");
    fails(&["oracle-check", "--corpus", &broken], "parse");
    fails(&["decode", "--input", &data("toy-dev.conll")], "config");
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert!(run(&["--help"]).status.success());
}
