//! A generated corpus in which ranking is solvable by token overlap.
//!
//! Every question mentions one marker word; its positive answers contain the
//! same marker and every negative answer carries a different one. Fillers are
//! drawn from a shared pool, and marker positions and candidate order are
//! randomised, so "the answer repeats the question's marker" is the only
//! signal.

use answersel_core::corpus::{CandidateAnswer, Dataset, Question, Split};
use answersel_core::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub num_questions: usize,
    pub num_markers: usize,
    pub num_fillers: usize,
    pub negatives_per_question: usize,
    pub filler_words: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_questions: 50,
            num_markers: 5,
            num_fillers: 6,
            negatives_per_question: 4,
            filler_words: 2,
            seed: 0,
        }
    }
}

fn marker(i: usize) -> String {
    format!("marker{i}")
}

fn sentence(rng: &mut Rng, cfg: &SyntheticConfig, key: &str) -> String {
    let mut words: Vec<String> = (0..cfg.filler_words)
        .map(|_| format!("w{}", rng.below(cfg.num_fillers as u64)))
        .collect();
    let at = rng.below(words.len() as u64 + 1) as usize;
    words.insert(at, key.to_string());
    words.join(" ")
}

pub fn generate(cfg: &SyntheticConfig, name: &str, split: Split) -> Dataset {
    assert!(cfg.num_markers > cfg.negatives_per_question, "need a distinct marker per negative");
    let mut rng = Rng::new(cfg.seed);
    let mut questions = Vec::with_capacity(cfg.num_questions);
    for qi in 0..cfg.num_questions {
        let key = rng.below(cfg.num_markers as u64) as usize;
        let text = format!("what about {}", sentence(&mut rng, cfg, &marker(key)));
        let mut others: Vec<usize> = (0..cfg.num_markers).filter(|&m| m != key).collect();
        rng.shuffle(&mut others);
        let mut texts = vec![(sentence(&mut rng, cfg, &marker(key)), true)];
        for &m in &others[..cfg.negatives_per_question] {
            texts.push((sentence(&mut rng, cfg, &marker(m)), false));
        }
        rng.shuffle(&mut texts);
        let candidates = texts
            .into_iter()
            .enumerate()
            .map(|(i, (t, label))| CandidateAnswer::new(format!("a{i}"), t, label))
            .collect();
        questions.push(Question::new(format!("{name}-q{qi}"), text, candidates));
    }
    Dataset::new(name, split, questions).expect("generated questions are valid")
}
