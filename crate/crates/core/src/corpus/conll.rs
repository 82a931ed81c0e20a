use std::fmt::Write as _;

use super::{DepSentence, Token};
use crate::error::{Error, Result, TreeError};

/// A sentence dropped by [`parse_conll_lenient`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based index of the sentence block in the file.
    pub sentence: usize,
    /// Line on which the block starts.
    pub line: usize,
    pub reason: TreeError,
}

/// Reads CoNLL-X text. Any sentence whose heads do not form a single
/// projective tree is an error.
pub fn parse_conll(text: &str) -> Result<Vec<DepSentence>> {
    let (sentences, rejected) = parse_conll_lenient(text)?;
    match rejected.into_iter().next() {
        Some(r) => Err(Error::InvalidTree {
            sentence: r.sentence,
            reason: r.reason,
        }),
        None => Ok(sentences),
    }
}

/// Reads CoNLL-X text, setting aside sentences with invalid trees instead of
/// failing. Malformed lines are still errors.
///
/// Columns used: 1 id, 2 form, 5 pos, 7 head, 8 deprel. Lines starting with
/// `#` are comments; CoNLL-U range (`3-4`) and empty-node (`3.1`) lines are
/// skipped. Lines without a tab are split on whitespace.
pub fn parse_conll_lenient(text: &str) -> Result<(Vec<DepSentence>, Vec<Rejection>)> {
    let mut sentences = Vec::new();
    let mut rejected = Vec::new();
    let mut block: Vec<Token> = Vec::new();
    let mut block_start = 0;
    let mut n_blocks = 0;

    let mut flush = |block: &mut Vec<Token>, start: usize| {
        if block.is_empty() {
            return;
        }
        n_blocks += 1;
        match DepSentence::new(std::mem::take(block)) {
            Ok(s) => sentences.push(s),
            Err(reason) => rejected.push(Rejection {
                sentence: n_blocks,
                line: start,
                reason,
            }),
        }
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut block, block_start);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split_whitespace().collect()
        };
        if cols.len() < 8 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected at least 8 columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("token id {:?} is not a number", cols[0]),
        })?;
        if id != block.len() + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected token id {}, found {}", block.len() + 1, id),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("head {:?} is not a number", cols[6]),
        })?;
        if cols[1].is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty word form".into(),
            });
        }
        if block.is_empty() {
            block_start = lineno;
        }
        block.push(Token::new(id, cols[1], cols[4], head, cols[7]));
    }
    flush(&mut block, block_start);
    Ok((sentences, rejected))
}

/// Writes sentences as 10-column CoNLL-X.
pub fn write_conll(sentences: &[DepSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for t in s.tokens() {
            let pos = t.pos.as_deref().unwrap_or("_");
            let label = t.label.as_deref().unwrap_or("_");
            writeln!(
                out,
                "{}\t{}\t_\t{}\t{}\t_\t{}\t{}\t_\t_",
                t.index, t.form, pos, pos, t.head, label
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}
