//! Four-column TSV → canonical corpus.
//!
//! Columns: `question_id`, `question_text`, `answer_text`, `label` (0 or 1).
//! Rows of a question must be contiguous; answer ids are assigned `a0, a1, …`
//! in row order. Blank lines and `#` comments are skipped.

use std::io::{BufRead, Write};

use answersel_core::corpus::{CandidateAnswer, Dataset, Question, Split};
use answersel_core::sampling::TrainingTriple;

use crate::error::{Error, Result};
use crate::jsonl::write_canonical;

/// Header comment written at the top of converted files.
pub const HEADER: &str = "# converted from tsv; label 1 = correct, 0 = incorrect";

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::Malformed { line, message: message.into() }
}

pub fn parse_tsv<R: BufRead>(reader: R, name: &str, split: Split) -> Result<Dataset> {
    let mut dataset = Dataset::empty(name, split);
    let mut current: Option<(Question, usize)> = None;
    let flush = |dataset: &mut Dataset, cur: Option<(Question, usize)>| -> Result<()> {
        if let Some((q, line)) = cur {
            dataset.push(q).map_err(|source| Error::Corpus { line, source })?;
        }
        Ok(())
    };
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(malformed(line_no, format!("expected 4 tab-separated columns, found {}", cols.len())));
        }
        let label = match cols[3].trim() {
            "1" => true,
            "0" => false,
            other => return Err(malformed(line_no, format!("label must be 0 or 1, found {other:?}"))),
        };
        let (qid, qtext, atext) = (cols[0], cols[1], cols[2]);
        match &mut current {
            Some((q, _)) if q.question_id == qid => {
                if q.text != qtext {
                    return Err(malformed(line_no, format!("question {qid:?} has differing text across rows")));
                }
                let id = format!("a{}", q.candidates.len());
                q.candidates.push(CandidateAnswer::new(id, atext, label));
            }
            _ => {
                if dataset.get(qid).is_some() {
                    return Err(malformed(line_no, format!("rows of question {qid:?} are not contiguous")));
                }
                flush(&mut dataset, current.take())?;
                let q = Question::new(qid, qtext, vec![CandidateAnswer::new("a0", atext, label)]);
                current = Some((q, line_no));
            }
        }
    }
    flush(&mut dataset, current)?;
    Ok(dataset)
}

/// Converts TSV into canonical JSONL, preceded by [`HEADER`].
pub fn convert<R: BufRead, W: Write>(reader: R, mut writer: W, name: &str, split: Split) -> Result<Dataset> {
    let dataset = parse_tsv(reader, name, split)?;
    writeln!(writer, "{HEADER}")?;
    write_canonical(&dataset, &mut writer)?;
    Ok(dataset)
}

/// Audit dump of triples: `question_id \t positive_id \t negative_id` per line.
pub fn write_triples<W: Write>(triples: &[TrainingTriple], mut writer: W) -> Result<()> {
    for t in triples {
        writeln!(writer, "{}\t{}\t{}", t.question_id, t.positive_id, t.negative_id)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsonl::parse_canonical;

    const TSV: &str = "q1\twho wrote hamlet\tshakespeare\t1\nq1\twho wrote hamlet\tparis\t0\nq2\tcapital of france\tparis\t1\n";

    #[test]
    fn converts_and_reparses() {
        let mut out = Vec::new();
        let d = convert(TSV.as_bytes(), &mut out, "t", Split::Train).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.questions()[0].candidates[1].answer_id, "a1");
        assert!(!d.questions()[0].candidates[1].label);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with(HEADER));
        let back = parse_canonical(text.as_bytes(), "t", Split::Train).unwrap();
        assert_eq!(back.dataset, d);
    }

    #[test]
    fn triples_tsv() {
        let t = TrainingTriple { question_id: "q1".into(), positive_id: "a0".into(), negative_id: "a1".into() };
        let mut out = Vec::new();
        write_triples(&[t.clone(), t], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "q1\ta0\ta1\nq1\ta0\ta1\n");
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(parse_tsv("q\tx\ty\n".as_bytes(), "t", Split::Train), Err(Error::Malformed { line: 1, .. })));
        assert!(matches!(parse_tsv("q\tx\ty\t2\n".as_bytes(), "t", Split::Train), Err(Error::Malformed { .. })));
        let split = "q1\tx\ta\t1\nq2\ty\tb\t0\nq1\tx\tc\t0\n";
        assert!(matches!(parse_tsv(split.as_bytes(), "t", Split::Train), Err(Error::Malformed { line: 3, .. })));
        let drift = "q1\tx\ta\t1\nq1\tz\tb\t0\n";
        assert!(matches!(parse_tsv(drift.as_bytes(), "t", Split::Train), Err(Error::Malformed { line: 2, .. })));
    }
}
