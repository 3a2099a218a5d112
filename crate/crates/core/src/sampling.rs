//! Expansion of a dataset into (question, positive, negative) training triples.

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrainingTriple {
    pub question_id: String,
    pub positive_id: String,
    pub negative_id: String,
}

/// Index form of a triple: question position in the dataset and candidate
/// positions within that question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripleIndex {
    pub question: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum SamplingStrategy {
    #[default]
    CrossProduct,
    SampledK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct SamplingConfig {
    pub strategy: SamplingStrategy,
    /// Negatives drawn per positive under `SampledK`.
    pub k: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            strategy: SamplingStrategy::CrossProduct,
            k: 1,
            seed: 0,
        }
    }
}

/// Triples plus the number of questions that could not contribute any.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TripleSet {
    pub triples: Vec<TripleIndex>,
    pub skipped_questions: usize,
}

impl TripleSet {
    pub fn resolve(&self, dataset: &Dataset) -> Vec<TrainingTriple> {
        self.triples.iter().map(|t| resolve_triple(dataset, t)).collect()
    }
}

pub fn resolve_triple(dataset: &Dataset, t: &TripleIndex) -> TrainingTriple {
    let q = &dataset.questions()[t.question];
    TrainingTriple {
        question_id: q.question_id.clone(),
        positive_id: q.candidates[t.positive].answer_id.clone(),
        negative_id: q.candidates[t.negative].answer_id.clone(),
    }
}

/// Expands every question into triples.
///
/// `CrossProduct` emits all (positive, negative) combinations in
/// (question, positive, negative) order. `SampledK` draws, for each positive,
/// `k` distinct negatives (or all of them if fewer exist) from one generator
/// seeded with `config.seed` and consumed in question order. Questions without
/// a positive or without a negative are skipped and counted.
pub fn generate_triples(dataset: &Dataset, config: &SamplingConfig) -> TripleSet {
    let mut rng = Rng::new(config.seed);
    let mut out = TripleSet::default();
    for (qi, q) in dataset.questions().iter().enumerate() {
        let pos: Vec<usize> = (0..q.candidates.len()).filter(|&i| q.candidates[i].label).collect();
        let neg: Vec<usize> = (0..q.candidates.len()).filter(|&i| !q.candidates[i].label).collect();
        if pos.is_empty() || neg.is_empty() {
            out.skipped_questions += 1;
            continue;
        }
        for &p in &pos {
            match config.strategy {
                SamplingStrategy::CrossProduct => {
                    out.triples.extend(neg.iter().map(|&n| TripleIndex {
                        question: qi,
                        positive: p,
                        negative: n,
                    }));
                }
                SamplingStrategy::SampledK => {
                    let take = config.k.max(1).min(neg.len());
                    let mut pool = neg.clone();
                    // partial Fisher-Yates from the front
                    for i in 0..take {
                        let j = i + rng.below((pool.len() - i) as u64) as usize;
                        pool.swap(i, j);
                        out.triples.push(TripleIndex {
                            question: qi,
                            positive: p,
                            negative: pool[i],
                        });
                    }
                }
            }
        }
    }
    out
}

/// A seeded permutation of `triples`.
pub fn shuffle_triples<T: Clone>(triples: &[T], seed: u64) -> Vec<T> {
    let mut out = triples.to_vec();
    Rng::new(seed).shuffle(&mut out);
    out
}

/// Checks that a triple names a positive and a distinct negative of one question.
pub fn triple_is_valid(dataset: &Dataset, t: &TrainingTriple) -> bool {
    let Some(q) = dataset.get(&t.question_id) else {
        return false;
    };
    let label = |id: &str| q.candidates.iter().find(|c| c.answer_id == id).map(|c| c.label);
    t.positive_id != t.negative_id
        && label(&t.positive_id) == Some(true)
        && label(&t.negative_id) == Some(false)
}
