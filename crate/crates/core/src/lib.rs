//! Pairwise answer selection at desk scale.
//!
//! A question's candidate answers are scored one (question, answer) pair at a
//! time by a small transformer encoder: the hidden state at the leading `[CLS]`
//! position goes through a single fully connected unit and a sigmoid. Training
//! works on (question, positive, negative) triples whose two arms share the
//! same parameters, and the loss mixes a cross-entropy term with a margin
//! hinge on the two scores. Rankings are evaluated with MRR and MAP.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, the training
//! harness and the command line live in the `answersel` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod sampling;
pub mod step;
pub mod textenc;

pub use corpus::{CandidateAnswer, CorpusError, Dataset, DatasetStats, FilterMode, Question, Split};
pub use metrics::{EvalError, EvalReport, QuestionEval, RankedList};
pub use objective::LossConfig;
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use model::{Cache, Gradients, ModelConfig, ModelError, ModelParams};
pub use rng::Rng;
pub use sampling::{SamplingConfig, SamplingStrategy, TrainingTriple};
pub use textenc::{EncodeError, EncodedPair, TruncationPolicy, Vocab};
