//! Tokenizer, vocabulary and the packed `[CLS] q [SEP] a [SEP]` pair layout.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
pub const RESERVED: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"];

/// Smallest sequence that holds CLS, one question token, SEP, one answer token, SEP.
pub const MIN_MAX_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("max_len {0} cannot hold [CLS] q [SEP] a [SEP] (need at least {MIN_MAX_LEN})")]
    MaxLenTooSmall(usize),
    #[error("vocabulary must start with [PAD] [UNK] [CLS] [SEP]")]
    MissingReserved,
    #[error("vocabulary token {0:?} is duplicated")]
    DuplicateToken(String),
    #[error("vocabulary token at id {0} is empty or contains whitespace")]
    BadToken(usize),
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Lowercases, splits on Unicode whitespace and makes every punctuation
/// character (anything neither alphanumeric nor whitespace) its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in lower.chars() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(core::mem::take(&mut cur));
            }
        } else if is_punct(c) {
            if !cur.is_empty() {
                out.push(core::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Dense token ↔ id mapping with the four reserved ids in front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl Vocab {
    /// Builds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, EncodeError> {
        if tokens.len() < RESERVED.len() || tokens.iter().zip(RESERVED).any(|(t, r)| t != r) {
            return Err(EncodeError::MissingReserved);
        }
        let mut ids = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(EncodeError::BadToken(i));
            }
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(EncodeError::DuplicateToken(t.clone()));
            }
        }
        Ok(Vocab { tokens, ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }
}

/// Keeps every token seen at least `min_freq` times; ids are assigned by
/// descending frequency, ties broken lexicographically.
pub fn build_vocab<'a>(texts: impl IntoIterator<Item = &'a str>, min_freq: usize) -> Vocab {
    let min_freq = min_freq.max(1);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        for tok in tokenize(text) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|(_, n)| *n >= min_freq).collect();
    // BTreeMap iteration is already lexicographic; a stable sort keeps that for ties.
    kept.sort_by_key(|&(_, n)| core::cmp::Reverse(n));
    let tokens = RESERVED
        .iter()
        .map(|s| s.to_string())
        .chain(kept.into_iter().map(|(t, _)| t))
        .collect();
    Vocab::from_tokens(tokens).expect("tokenizer output never collides with reserved tokens")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum TruncationPolicy {
    /// Drop answer tokens from the end before touching the question.
    #[default]
    AnswerFirst,
    /// Drop one token at a time from whichever side is longer (answer on ties).
    LongestFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedPair {
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
}

impl EncodedPair {
    pub fn max_len(&self) -> usize {
        self.token_ids.len()
    }

    /// Number of non-PAD positions (the mask is a prefix of ones).
    pub fn active_len(&self) -> usize {
        self.attention_mask.iter().take_while(|&&m| m == 1).count()
    }
}

fn truncate(q: usize, a: usize, budget: usize, policy: TruncationPolicy) -> (usize, usize) {
    if q + a <= budget {
        return (q, a);
    }
    match policy {
        TruncationPolicy::AnswerFirst => {
            let a_keep = a.min(budget.saturating_sub(q).max(1));
            let q_keep = q.min(budget - a_keep.min(budget));
            (q_keep, a_keep)
        }
        TruncationPolicy::LongestFirst => {
            let (mut q, mut a) = (q, a);
            while q + a > budget {
                if (a >= q && a > 1) || q <= 1 {
                    a -= 1;
                } else {
                    q -= 1;
                }
            }
            (q, a)
        }
    }
}

pub fn encode_pair(
    vocab: &Vocab,
    question: &str,
    answer: &str,
    max_len: usize,
) -> Result<EncodedPair, EncodeError> {
    encode_pair_with(vocab, question, answer, max_len, TruncationPolicy::AnswerFirst)
}

pub fn encode_pair_with(
    vocab: &Vocab,
    question: &str,
    answer: &str,
    max_len: usize,
    policy: TruncationPolicy,
) -> Result<EncodedPair, EncodeError> {
    if max_len < MIN_MAX_LEN {
        return Err(EncodeError::MaxLenTooSmall(max_len));
    }
    let q = tokenize(question);
    let a = tokenize(answer);
    let (q_keep, a_keep) = truncate(q.len(), a.len(), max_len - 3, policy);

    let mut token_ids = Vec::with_capacity(max_len);
    let mut segment_ids = Vec::with_capacity(max_len);
    token_ids.push(CLS);
    token_ids.extend(q[..q_keep].iter().map(|t| vocab.id(t)));
    token_ids.push(SEP);
    segment_ids.resize(token_ids.len(), 0);
    token_ids.extend(a[..a_keep].iter().map(|t| vocab.id(t)));
    token_ids.push(SEP);
    segment_ids.resize(token_ids.len(), 1);
    let active = token_ids.len();
    token_ids.resize(max_len, PAD);
    segment_ids.resize(max_len, 0);
    let mut attention_mask = alloc::vec![1u8; active];
    attention_mask.resize(max_len, 0);
    Ok(EncodedPair { token_ids, segment_ids, attention_mask })
}
