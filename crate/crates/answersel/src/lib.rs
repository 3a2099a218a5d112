//! IO, training and command-line companion to [`answersel_core`].
//!
//! * [`jsonl`]: the canonical one-question-per-line corpus format
//! * [`tsv`]: converter from four-column TSV
//! * [`vocab_io`], [`checkpoint`]: model artifacts on disk
//! * [`harness`]: the training loop
//! * [`report`]: evaluation report JSON and TREC run files
//! * [`synthetic`]: a generated corpus with a known perfect ranking rule

pub mod checkpoint;
pub mod error;
pub mod harness;
pub mod jsonl;
pub mod report;
pub mod synthetic;
pub mod tsv;
pub mod vocab_io;

pub use answersel_core as core;
pub use error::{Error, Result};
