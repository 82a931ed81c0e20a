//! Regenerates the bundled toy corpora in `data/` from a small dependency
//! grammar.
//!
//! ```text
//! cargo run --example gen_corpus -- crates/core/data
//! ```

use std::fs;
use std::path::PathBuf;

use linearizer::corpus::{write_conll, DepSentence, Token};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DETS: &[(&str, u32)] = &[("the", 6), ("a", 3), ("this", 1)];
const ANIMATE: &[&str] = &[
    "man", "woman", "dog", "cat", "teacher", "child", "farmer", "doctor", "bird", "student",
];
const THINGS: &[&str] = &[
    "book", "ball", "apple", "letter", "car", "song", "cake", "house", "picture", "box",
];
const PLACES: &[&str] = &["park", "garden", "city", "kitchen", "school", "river"];
const SIZE: &[&str] = &["big", "small", "tall", "little"];
const COLOR: &[&str] = &["red", "old", "green", "young"];
const TRANSITIVE: &[&str] = &[
    "saw", "liked", "found", "took", "wrote", "ate", "built", "painted", "bought", "carried",
];
const INTRANSITIVE: &[&str] = &["slept", "ran", "laughed", "smiled", "waited", "sang"];
const PREPS: &[&str] = &["in", "near", "behind", "under", "at"];
const ADVERBS: &[&str] = &["quickly", "slowly", "yesterday", "today", "again"];
const PRONOUNS: &[&str] = &["she", "he", "they"];
const IMPERATIVES: &[&str] = &["stop", "go", "wait", "listen"];

struct Node {
    form: String,
    pos: &'static str,
    label: &'static str,
    left: Vec<Node>,
    right: Vec<Node>,
}

impl Node {
    fn new(form: &str, pos: &'static str, label: &'static str) -> Node {
        Node {
            form: form.to_string(),
            pos,
            label,
            left: Vec::new(),
            right: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        1 + self.left.iter().chain(&self.right).map(Node::len).sum::<usize>()
    }

    // Appends the subtree in surface order and returns this node's position.
    fn flatten(&self, head: usize, out: &mut Vec<Token>) -> usize {
        let mut left_pos = Vec::new();
        for c in &self.left {
            left_pos.push(c.flatten(0, out));
        }
        out.push(Token::new(out.len() + 1, &self.form, self.pos, head, self.label));
        let me = out.len();
        for p in left_pos {
            out[p - 1].head = me;
        }
        for c in &self.right {
            c.flatten(me, out);
        }
        me
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).unwrap()
}

fn det(rng: &mut ChaCha8Rng) -> Node {
    let total: u32 = DETS.iter().map(|d| d.1).sum();
    let mut r = rng.random_range(0..total);
    for (d, w) in DETS {
        if r < *w {
            return Node::new(d, "DT", "det");
        }
        r -= w;
    }
    unreachable!()
}

fn noun_phrase(rng: &mut ChaCha8Rng, nouns: &[&str], label: &'static str, adj_p: f64) -> Node {
    let mut n = Node::new(pick(rng, nouns), "NN", label);
    let mut left = Vec::new();
    left.push(det(rng));
    if rng.random_bool(adj_p) {
        if rng.random_bool(0.3) {
            left.push(Node::new(pick(rng, SIZE), "JJ", "amod"));
            left.push(Node::new(pick(rng, COLOR), "JJ", "amod"));
        } else if rng.random_bool(0.5) {
            left.push(Node::new(pick(rng, SIZE), "JJ", "amod"));
        } else {
            left.push(Node::new(pick(rng, COLOR), "JJ", "amod"));
        }
    }
    n.left = left;
    n
}

fn sentence(rng: &mut ChaCha8Rng) -> Node {
    if rng.random_bool(0.04) {
        let mut v = Node::new(pick(rng, IMPERATIVES), "VB", "root");
        if rng.random_bool(0.5) {
            v.right.push(Node::new(".", ".", "punct"));
        }
        return v;
    }
    let transitive = rng.random_bool(0.65);
    let verbs = if transitive { TRANSITIVE } else { INTRANSITIVE };
    let mut v = Node::new(pick(rng, verbs), "VBD", "root");
    let subj = if rng.random_bool(0.2) {
        Node::new(pick(rng, PRONOUNS), "PRP", "nsubj")
    } else {
        noun_phrase(rng, ANIMATE, "nsubj", 0.4)
    };
    v.left.push(subj);
    if transitive {
        v.right.push(noun_phrase(rng, THINGS, "dobj", 0.4));
    }
    if rng.random_bool(0.4) {
        let mut p = Node::new(pick(rng, PREPS), "IN", "prep");
        p.right.push(noun_phrase(rng, PLACES, "pobj", 0.25));
        v.right.push(p);
    }
    if rng.random_bool(0.3) {
        v.right.push(Node::new(pick(rng, ADVERBS), "RB", "advmod"));
    }
    if rng.random_bool(0.6) {
        v.right.push(Node::new(".", ".", "punct"));
    }
    v
}

fn to_sentence(root: &Node) -> DepSentence {
    let mut tokens = Vec::new();
    root.flatten(0, &mut tokens);
    DepSentence::new(tokens).expect("grammar builds projective trees")
}

fn generate(seed: u64, count: usize, min_len: usize, max_len: usize) -> Vec<DepSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<DepSentence> = Vec::new();
    while out.len() < count {
        let tree = sentence(&mut rng);
        let n = tree.len();
        if n < min_len || n > max_len {
            continue;
        }
        let s = to_sentence(&tree);
        if out.iter().any(|o| o.forms() == s.forms()) {
            continue;
        }
        out.push(s);
    }
    out
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    fs::create_dir_all(&dir).unwrap();
    let sets = [
        ("synthetic.conll", generate(1, 240, 1, 15)),
        ("toy-train.conll", generate(2, 50, 1, 15)),
        ("toy-dev.conll", generate(3, 20, 1, 15)),
        ("lm10.conll", generate(4, 10, 11, 15)),
    ];
    for (name, sentences) in sets {
        fs::write(dir.join(name), write_conll(&sentences)).unwrap();
        println!("{name}: {} sentences", sentences.len());
    }
}
