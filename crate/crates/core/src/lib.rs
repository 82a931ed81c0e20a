pub mod cli;
pub mod config;
pub mod container;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod features;
pub mod ffnn;
pub mod gradcheck;
pub mod lstm_lm;
pub mod math;
pub mod model;
pub mod optim;
pub mod transition;

pub use error::{Error, Result};

// The guide's chapters compile and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/transitions.md")]
    mod transitions {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/language-model.md")]
    mod language_model {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
