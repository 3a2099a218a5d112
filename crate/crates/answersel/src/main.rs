use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use answersel::error::{Error, Result};
use answersel::harness::{train, TrainConfig};
use answersel::{checkpoint, jsonl, report, tsv, vocab_io};
use answersel_core::corpus::{compute_stats, CandidateAnswer, Dataset, FilterMode, Question, Split};
use answersel_core::metrics::{evaluate_with, score_question};
use answersel_core::sampling::{generate_triples, SamplingConfig, SamplingStrategy};
use answersel_core::textenc::TruncationPolicy;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "answersel", version, about = "Pairwise answer selection: train, evaluate and rank")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceFormat {
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    KeepAll,
    RequirePositive,
    RequireBoth,
}

impl From<FilterArg> for FilterMode {
    fn from(f: FilterArg) -> FilterMode {
        match f {
            FilterArg::KeepAll => FilterMode::KeepAll,
            FilterArg::RequirePositive => FilterMode::RequirePositive,
            FilterArg::RequireBoth => FilterMode::RequireBoth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    CrossProduct,
    SampledK,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a corpus into canonical JSONL.
    Convert {
        #[arg(long, value_enum)]
        from: SourceFormat,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "train")]
        split: SplitArg,
    },
    /// Print dataset statistics as JSON.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write the training triples of a corpus as TSV.
    Triples {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "cross-product")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a model; writes model.ckpt, vocab.txt, history.json and config.json.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a checkpoint and print the report as JSON.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "require-positive")]
        filter: FilterArg,
        #[arg(long)]
        run_file: Option<PathBuf>,
        #[arg(long, default_value = "answersel")]
        run_tag: String,
    },
    /// Score and rank ad-hoc answers (one per line) for a question.
    Rank {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        question: String,
        #[arg(long)]
        answers: PathBuf,
    },
}

fn read_dataset(path: &Path, split: Split) -> Result<Dataset> {
    Ok(jsonl::read_file(path, split)?.dataset)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(Error::io(path))?))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert { from: SourceFormat::Tsv, input, out, split } => {
            let f = File::open(&input).map_err(Error::io(&input))?;
            let name = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let d = tsv::convert(BufReader::new(f), create(&out)?, &name, split.into())?;
            eprintln!("wrote {} questions to {}", d.len(), out.display());
        }
        Command::Stats { input } => {
            let d = read_dataset(&input, Split::Train)?;
            println!("{}", json(&compute_stats(&d)));
        }
        Command::Triples { input, out, strategy, k, seed } => {
            let d = read_dataset(&input, Split::Train)?;
            let strategy = match strategy {
                StrategyArg::CrossProduct => SamplingStrategy::CrossProduct,
                StrategyArg::SampledK => SamplingStrategy::SampledK,
            };
            if k == 0 {
                return Err(Error::Config("--k must be at least 1".into()));
            }
            let set = generate_triples(&d, &SamplingConfig { strategy, k, seed });
            tsv::write_triples(&set.resolve(&d), create(&out)?)?;
            eprintln!("wrote {} triples ({} questions skipped)", set.triples.len(), set.skipped_questions);
        }
        Command::Train { train: train_path, dev, config, epochs, seed, out_dir } => {
            let mut cfg = match &config {
                Some(p) => TrainConfig::from_json(&std::fs::read_to_string(p).map_err(Error::io(p))?)?,
                None => TrainConfig::default(),
            };
            if let Some(e) = epochs {
                cfg.num_epochs = e;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            let train_set = read_dataset(&train_path, Split::Train)?;
            let dev_set = dev.as_deref().map(|p| read_dataset(p, Split::Dev)).transpose()?;
            let out = train(&cfg, &train_set, dev_set.as_ref())?;
            std::fs::create_dir_all(&out_dir).map_err(Error::io(&out_dir))?;
            checkpoint::save(&out.params, &out_dir.join("model.ckpt"))?;
            vocab_io::save(&out.vocab, &out_dir.join("vocab.txt"))?;
            let mut resolved = cfg.clone();
            resolved.model = out.params.config().clone();
            let mut w = create(&out_dir.join("config.json"))?;
            writeln!(w, "{}", json(&resolved))?;
            let mut w = create(&out_dir.join("history.json"))?;
            writeln!(w, "{}", json(&out.history))?;
            eprintln!("wrote model.ckpt, vocab.txt, config.json and history.json to {}", out_dir.display());
        }
        Command::Eval { checkpoint: ckpt, vocab, data, filter, run_file, run_tag } => {
            let params = checkpoint::load(&ckpt)?;
            let vocab = vocab_io::load(&vocab)?;
            params.check_vocab(&vocab)?;
            let d = read_dataset(&data, Split::Test)?;
            let (rep, rankings) = evaluate_with(&d, filter.into(), |q| {
                Ok(score_question(&params, &vocab, q, TruncationPolicy::AnswerFirst)?)
            })?;
            if let Some(path) = run_file {
                report::write_run_file(&rankings, &run_tag, create(&path)?)?;
            }
            println!("{}", report::report_json(&rep));
        }
        Command::Rank { checkpoint: ckpt, vocab, question, answers } => {
            let params = checkpoint::load(&ckpt)?;
            let vocab = vocab_io::load(&vocab)?;
            params.check_vocab(&vocab)?;
            let text = std::fs::read_to_string(&answers).map_err(Error::io(&answers))?;
            let candidates: Vec<CandidateAnswer> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| CandidateAnswer::new(format!("a{i}"), l, false))
                .collect();
            if candidates.is_empty() {
                return Err(Error::Malformed { line: 0, message: "no answers given".into() });
            }
            let q = Question::new("query", question, candidates);
            let scores = score_question(&params, &vocab, &q, TruncationPolicy::AnswerFirst)?;
            let ranked = answersel_core::metrics::rank_candidates(&q, &scores)?;
            let rows: Vec<serde_json::Value> = ranked
                .entries
                .iter()
                .enumerate()
                .map(|(r, e)| {
                    serde_json::json!({
                        "rank": r + 1,
                        "index": e.index,
                        "score": e.score,
                        "text": q.candidates[e.index].text,
                    })
                })
                .collect();
            println!("{}", json(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
