//! Ranking candidates and scoring rankings with MRR and MAP.
//!
//! Ranks are 1-based. Ties in score keep the original candidate order.
//! A question with no positive candidate has RR = AP = 0.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corpus::{filter_evaluable, Dataset, FilterMode, Question};
use crate::model::{forward, ModelError, ModelParams};
use crate::textenc::{encode_pair_with, TruncationPolicy, Vocab};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("question {question:?}: {scores} scores for {candidates} candidates")]
    LengthMismatch { question: String, candidates: usize, scores: usize },
    #[error("question {question:?}: score for candidate {index} is NaN")]
    NaNScore { question: String, index: usize },
    #[error("no questions left to evaluate after filtering with {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub answer_id: String,
    pub score: f64,
    pub label: bool,
    /// Position of the candidate in the question as parsed.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub question_id: String,
    pub entries: Vec<RankedEntry>,
}

/// Stable sort by descending score.
pub fn rank_candidates(question: &Question, scores: &[f64]) -> Result<RankedList, EvalError> {
    if scores.len() != question.candidates.len() {
        return Err(EvalError::LengthMismatch {
            question: question.question_id.clone(),
            candidates: question.candidates.len(),
            scores: scores.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| s.is_nan()) {
        return Err(EvalError::NaNScore { question: question.question_id.clone(), index });
    }
    let mut entries: Vec<RankedEntry> = question
        .candidates
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(index, (c, &score))| RankedEntry { answer_id: c.answer_id.clone(), score, label: c.label, index })
        .collect();
    entries.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
    Ok(RankedList { question_id: question.question_id.clone(), entries })
}

pub fn reciprocal_rank(ranked: &RankedList) -> f64 {
    ranked
        .entries
        .iter()
        .position(|e| e.label)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Mean over positives of the precision at each positive's rank.
pub fn average_precision(ranked: &RankedList) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, e) in ranked.entries.iter().enumerate() {
        if e.label {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QuestionEval {
    pub question_id: String,
    pub reciprocal_rank: f64,
    pub average_precision: f64,
    pub num_candidates: usize,
    pub num_positive: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalReport {
    pub mrr: f64,
    pub map: f64,
    pub num_questions_scored: usize,
    pub num_questions_skipped: usize,
    pub filter_mode: FilterMode,
    pub per_question: Vec<QuestionEval>,
}

/// Evaluates with caller-supplied scores. Returns the report and the
/// ranking of every scored question (in dataset order).
pub fn evaluate_with<F>(dataset: &Dataset, filter_mode: FilterMode, mut scorer: F) -> Result<(EvalReport, Vec<RankedList>), EvalError>
where
    F: FnMut(&Question) -> Result<Vec<f64>, EvalError>,
{
    let kept = filter_evaluable(dataset, filter_mode);
    if kept.is_empty() {
        return Err(EvalError::Empty(filter_mode.as_str()));
    }
    let mut per_question = Vec::with_capacity(kept.len());
    let mut rankings = Vec::with_capacity(kept.len());
    for q in kept.questions() {
        let scores = scorer(q)?;
        let ranked = rank_candidates(q, &scores)?;
        per_question.push(QuestionEval {
            question_id: q.question_id.clone(),
            reciprocal_rank: reciprocal_rank(&ranked),
            average_precision: average_precision(&ranked),
            num_candidates: q.candidates.len(),
            num_positive: q.num_positive(),
        });
        rankings.push(ranked);
    }
    let n = per_question.len() as f64;
    let mrr = per_question.iter().map(|e| e.reciprocal_rank).sum::<f64>() / n;
    let map = per_question.iter().map(|e| e.average_precision).sum::<f64>() / n;
    let report = EvalReport {
        mrr,
        map,
        num_questions_scored: per_question.len(),
        num_questions_skipped: dataset.len() - kept.len(),
        filter_mode,
        per_question,
    };
    Ok((report, rankings))
}

/// Scores all candidates of a question in one eval-mode batch.
pub fn score_question(params: &ModelParams, vocab: &Vocab, question: &Question, policy: TruncationPolicy) -> Result<Vec<f64>, ModelError> {
    let max_len = params.config().max_len;
    let batch = question
        .candidates
        .iter()
        .map(|c| encode_pair_with(vocab, &question.text, &c.text, max_len, policy))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(forward(params, &batch, false, 0)?.0)
}

/// Filters, scores every remaining candidate with the model, ranks and
/// averages RR and AP over the scored questions.
pub fn evaluate(params: &ModelParams, vocab: &Vocab, dataset: &Dataset, filter_mode: FilterMode) -> Result<EvalReport, EvalError> {
    params.check_vocab(vocab)?;
    evaluate_with(dataset, filter_mode, |q| Ok(score_question(params, vocab, q, TruncationPolicy::AnswerFirst)?))
        .map(|(report, _)| report)
}
