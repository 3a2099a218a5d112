//! Training loop: triples → encoded pairs → both arms through the shared
//! encoder → pairwise loss → one optimizer step per batch.

use std::time::Instant;

use answersel_core::corpus::{Dataset, FilterMode};
use answersel_core::metrics::evaluate;
use answersel_core::model::{ModelConfig, ModelParams};
use answersel_core::objective::LossConfig;
use answersel_core::optim::{optimizer_step, OptimizerConfig, OptimizerKind, OptimizerState};
use answersel_core::sampling::{generate_triples, shuffle_triples, SamplingConfig, TripleIndex};
use answersel_core::step::{pairwise_step, StepError};
use answersel_core::textenc::{build_vocab, encode_pair_with, EncodedPair, TruncationPolicy, Vocab};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything a training run depends on. Every key is optional in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub sampling: SamplingConfig,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub num_epochs: usize,
    /// Evaluate on the dev set every this many steps; 0 evaluates only at the end.
    pub eval_every: u64,
    pub base_seed: u64,
    pub filter_mode: FilterMode,
    pub vocab_min_freq: usize,
    pub truncation: TruncationPolicy,
    /// Redraw triples each epoch with seed `sampling.seed + epoch`.
    pub resample_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            loss: LossConfig::default(),
            sampling: SamplingConfig::default(),
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 16,
            num_epochs: 3,
            eval_every: 0,
            base_seed: 0,
            filter_mode: FilterMode::RequirePositive,
            vocab_min_freq: 1,
            truncation: TruncationPolicy::AnswerFirst,
            resample_each_epoch: false,
        }
    }
}

impl TrainConfig {
    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            kind: self.optimizer,
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_epochs < 1 {
            return bad("num_epochs must be >= 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1".into());
        }
        if self.sampling.k < 1 {
            return bad("sampling.k must be >= 1".into());
        }
        self.optimizer_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.loss.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: u64,
    pub mrr: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub steps: Vec<StepRecord>,
    pub evals: Vec<EvalRecord>,
    pub epochs: Vec<EpochRecord>,
    pub num_triples: usize,
    pub skipped_questions: usize,
}

impl TrainHistory {
    /// The history without wall-clock timings, which is what repeats exactly.
    pub fn without_timings(&self) -> TrainHistory {
        let mut h = self.clone();
        h.epochs.iter_mut().for_each(|e| e.seconds = 0.0);
        h
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub vocab: Vocab,
    pub history: TrainHistory,
}

fn step_dropout_seed(base_seed: u64, step: u64) -> u64 {
    base_seed ^ 0xD1B5_4A32_D192_ED03u64.wrapping_mul(step)
}

/// Every (question, candidate) pair of the dataset, encoded once.
struct Encoded {
    offsets: Vec<usize>,
    pairs: Vec<EncodedPair>,
}

impl Encoded {
    fn new(dataset: &Dataset, vocab: &Vocab, max_len: usize, policy: TruncationPolicy) -> Result<Self> {
        let mut offsets = Vec::with_capacity(dataset.len());
        let mut pairs = Vec::new();
        for q in dataset.questions() {
            offsets.push(pairs.len());
            for c in &q.candidates {
                pairs.push(encode_pair_with(vocab, &q.text, &c.text, max_len, policy)?);
            }
        }
        Ok(Encoded { offsets, pairs })
    }

    fn get(&self, question: usize, candidate: usize) -> &EncodedPair {
        &self.pairs[self.offsets[question] + candidate]
    }
}

/// Trains from scratch. The vocabulary is built from the training questions
/// and answers; `config.model.vocab_size` may be 0 (filled in) or must match.
pub fn train(config: &TrainConfig, train_set: &Dataset, dev_set: Option<&Dataset>) -> Result<TrainOutcome> {
    config.validate()?;
    let vocab = build_vocab(train_set.texts(), config.vocab_min_freq);
    let mut model_cfg = config.model.clone();
    if model_cfg.vocab_size == 0 {
        model_cfg.vocab_size = vocab.len();
    } else if model_cfg.vocab_size != vocab.len() {
        return Err(Error::Config(format!(
            "model.vocab_size is {} but the training vocabulary has {} tokens",
            model_cfg.vocab_size,
            vocab.len()
        )));
    }
    let mut params = ModelParams::init(&model_cfg)?;
    let encoded = Encoded::new(train_set, &vocab, model_cfg.max_len, config.truncation)?;
    let opt = config.optimizer_config();
    let mut state = OptimizerState::new(params.len());
    let mut history = TrainHistory::default();

    let fixed = generate_triples(train_set, &config.sampling);
    history.skipped_questions = fixed.skipped_questions;
    history.num_triples = fixed.triples.len();
    if fixed.triples.is_empty() {
        return Err(Error::Config("training set yields no (positive, negative) triples".into()));
    }
    log::info!(
        "training on {} triples ({} questions skipped), {} parameters",
        fixed.triples.len(),
        fixed.skipped_questions,
        params.len()
    );

    let mut step: u64 = 0;
    let run_eval = |params: &ModelParams, step: u64, history: &mut TrainHistory| -> Result<()> {
        if let Some(dev) = dev_set {
            let report = evaluate(params, &vocab, dev, config.filter_mode)?;
            log::info!("step {step}: dev MRR {:.4} MAP {:.4}", report.mrr, report.map);
            history.evals.push(EvalRecord { step, mrr: report.mrr, map: report.map });
        }
        Ok(())
    };

    for epoch in 0..config.num_epochs {
        let started = Instant::now();
        let triples: Vec<TripleIndex> = if config.resample_each_epoch {
            let cfg = SamplingConfig { seed: config.sampling.seed.wrapping_add(epoch as u64), ..config.sampling };
            generate_triples(train_set, &cfg).triples
        } else {
            fixed.triples.clone()
        };
        let order = shuffle_triples(&triples, config.base_seed.wrapping_add(epoch as u64));
        let mut epoch_loss = 0.0;
        let mut epoch_batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            step += 1;
            let pos: Vec<EncodedPair> = batch.iter().map(|t| encoded.get(t.question, t.positive).clone()).collect();
            let neg: Vec<EncodedPair> = batch.iter().map(|t| encoded.get(t.question, t.negative).clone()).collect();
            let out = pairwise_step(&params, &pos, &neg, &config.loss, true, step_dropout_seed(config.base_seed, step))
                .map_err(|e| match e {
                    StepError::NonFiniteLoss(v) => Error::Numerical { step, message: format!("loss is {v}") },
                    StepError::Model(m) => Error::Model(m),
                    StepError::Objective(o) => Error::Config(o.to_string()),
                })?;
            optimizer_step(&mut params, &out.grads, &mut state, &opt)
                .map_err(|e| Error::Numerical { step, message: e.to_string() })?;
            history.steps.push(StepRecord { step, epoch, loss: out.loss });
            epoch_loss += out.loss;
            epoch_batches += 1;
            if config.eval_every > 0 && step.is_multiple_of(config.eval_every) {
                run_eval(&params, step, &mut history)?;
            }
        }
        let mean_loss = epoch_loss / epoch_batches as f64;
        let seconds = started.elapsed().as_secs_f64();
        log::info!("epoch {epoch}: mean loss {mean_loss:.5} ({seconds:.2}s)");
        history.epochs.push(EpochRecord { epoch, mean_loss, seconds });
    }
    if history.evals.last().map(|e| e.step) != Some(step) {
        run_eval(&params, step, &mut history)?;
    }
    Ok(TrainOutcome { params, vocab, history })
}
