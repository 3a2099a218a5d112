//! Answer-selection corpora: questions with labeled candidate answers.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("empty question_id")]
    EmptyQuestionId,
    #[error("duplicate question_id {0:?}")]
    DuplicateQuestion(String),
    #[error("question {0:?} has no candidates")]
    NoCandidates(String),
    #[error("question {0:?} has empty text")]
    EmptyQuestionText(String),
    #[error("question {question:?}: empty answer_id")]
    EmptyAnswerId { question: String },
    #[error("question {question:?}: duplicate answer_id {answer:?}")]
    DuplicateAnswer { question: String, answer: String },
    #[error("question {question:?}: answer {answer:?} has empty text")]
    EmptyAnswerText { question: String, answer: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "lowercase"))]
pub enum Split {
    #[default]
    Train,
    Dev,
    Test,
}

/// Which questions survive [`filter_evaluable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum FilterMode {
    KeepAll,
    #[default]
    RequirePositive,
    RequireBoth,
}

impl FilterMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterMode::KeepAll => "keep_all",
            FilterMode::RequirePositive => "require_positive",
            FilterMode::RequireBoth => "require_both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "keep_all" => Some(FilterMode::KeepAll),
            "require_positive" => Some(FilterMode::RequirePositive),
            "require_both" => Some(FilterMode::RequireBoth),
            _ => None,
        }
    }
}

/// Extra JSON members carried through untouched: key and compact JSON value text.
pub type Extras = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAnswer {
    pub answer_id: String,
    pub text: String,
    pub label: bool,
    pub extra: Extras,
}

impl CandidateAnswer {
    pub fn new(answer_id: impl Into<String>, text: impl Into<String>, label: bool) -> Self {
        CandidateAnswer {
            answer_id: answer_id.into(),
            text: text.into(),
            label,
            extra: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub question_id: String,
    pub text: String,
    /// Order is significant: it is the tie-break key when ranking.
    pub candidates: Vec<CandidateAnswer>,
    pub extra: Extras,
}

impl Question {
    pub fn new(
        question_id: impl Into<String>,
        text: impl Into<String>,
        candidates: Vec<CandidateAnswer>,
    ) -> Self {
        Question {
            question_id: question_id.into(),
            text: text.into(),
            candidates,
            extra: Vec::new(),
        }
    }

    pub fn positives(&self) -> impl Iterator<Item = &CandidateAnswer> {
        self.candidates.iter().filter(|c| c.label)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &CandidateAnswer> {
        self.candidates.iter().filter(|c| !c.label)
    }

    pub fn num_positive(&self) -> usize {
        self.positives().count()
    }

    pub fn num_negative(&self) -> usize {
        self.candidates.len() - self.num_positive()
    }

    /// Checks the per-question invariants.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.question_id.is_empty() {
            return Err(CorpusError::EmptyQuestionId);
        }
        if self.text.trim().is_empty() {
            return Err(CorpusError::EmptyQuestionText(self.question_id.clone()));
        }
        if self.candidates.is_empty() {
            return Err(CorpusError::NoCandidates(self.question_id.clone()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.candidates {
            if c.answer_id.is_empty() {
                return Err(CorpusError::EmptyAnswerId {
                    question: self.question_id.clone(),
                });
            }
            if !seen.insert(c.answer_id.as_str()) {
                return Err(CorpusError::DuplicateAnswer {
                    question: self.question_id.clone(),
                    answer: c.answer_id.clone(),
                });
            }
            if c.text.trim().is_empty() {
                return Err(CorpusError::EmptyAnswerText {
                    question: self.question_id.clone(),
                    answer: c.answer_id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// An ordered, validated collection of questions.
///
/// Fields are private so that every `Dataset` in existence satisfies the
/// invariants; build one with [`Dataset::new`] or incrementally with
/// [`Dataset::push`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    split: Split,
    questions: Vec<Question>,
    ids: BTreeSet<String>,
}

impl Dataset {
    pub fn empty(name: impl Into<String>, split: Split) -> Self {
        Dataset {
            name: name.into(),
            split,
            questions: Vec::new(),
            ids: BTreeSet::new(),
        }
    }

    pub fn new(
        name: impl Into<String>,
        split: Split,
        questions: Vec<Question>,
    ) -> Result<Self, CorpusError> {
        let mut d = Dataset::empty(name, split);
        for q in questions {
            d.push(q)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, question: Question) -> Result<(), CorpusError> {
        question.validate()?;
        if self.ids.contains(&question.question_id) {
            return Err(CorpusError::DuplicateQuestion(question.question_id));
        }
        self.ids.insert(question.question_id.clone());
        self.questions.push(question);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn get(&self, question_id: &str) -> Option<&Question> {
        if !self.ids.contains(question_id) {
            return None;
        }
        self.questions.iter().find(|q| q.question_id == question_id)
    }

    /// Every question and candidate text, in corpus order.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.questions.iter().flat_map(|q| {
            core::iter::once(q.text.as_str()).chain(q.candidates.iter().map(|c| c.text.as_str()))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DatasetStats {
    pub num_questions: usize,
    pub num_candidates: usize,
    pub num_positive: usize,
    pub num_negative: usize,
    /// Questions with at least one positive and at least one negative.
    pub num_answerable: usize,
    /// Sum over questions of positives times negatives.
    pub num_train_pairs: usize,
}

pub fn compute_stats(dataset: &Dataset) -> DatasetStats {
    let mut s = DatasetStats::default();
    for q in dataset.questions() {
        let pos = q.num_positive();
        let neg = q.num_negative();
        s.num_questions += 1;
        s.num_candidates += q.candidates.len();
        s.num_positive += pos;
        s.num_negative += neg;
        if pos > 0 && neg > 0 {
            s.num_answerable += 1;
        }
        s.num_train_pairs += pos * neg;
    }
    s
}

pub fn filter_evaluable(dataset: &Dataset, mode: FilterMode) -> Dataset {
    let keep = |q: &Question| match mode {
        FilterMode::KeepAll => true,
        FilterMode::RequirePositive => q.num_positive() > 0,
        FilterMode::RequireBoth => q.num_positive() > 0 && q.num_negative() > 0,
    };
    let questions: Vec<Question> = dataset.questions().iter().filter(|q| keep(q)).cloned().collect();
    let ids = questions.iter().map(|q| q.question_id.clone()).collect();
    Dataset {
        name: dataset.name.clone(),
        split: dataset.split,
        questions,
        ids,
    }
}
