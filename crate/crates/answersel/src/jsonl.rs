//! Canonical corpus format: UTF-8, one JSON object per `\n`-terminated line.
//!
//! ```text
//! {"question_id":"q1","question_text":"...","candidates":[{"answer_id":"a1","text":"...","label":true}]}
//! ```
//!
//! Blank lines and lines starting with `#` are skipped, which lets converters
//! leave a header comment (for instance how graded labels were binarised).
//! Members other than the known ones are kept verbatim and written back out,
//! with a warning on read.

use std::io::{BufRead, Write};

use answersel_core::corpus::{CandidateAnswer, Dataset, Extras, Question, Split};
use serde_json::{Map, Value};

use crate::error::{Error, Result};


/// A non-fatal observation made while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub dataset: Dataset,
    pub warnings: Vec<ParseWarning>,
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::Malformed { line, message: message.into() }
}

fn take_string(obj: &mut Map<String, Value>, key: &str, line: usize, what: &str) -> Result<String> {
    match obj.shift_remove(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(malformed(line, format!("{what}: `{key}` must be a string"))),
        None => Err(malformed(line, format!("{what}: missing `{key}`"))),
    }
}

fn extras(obj: Map<String, Value>, line: usize, what: &str, warnings: &mut Vec<ParseWarning>) -> Extras {
    obj.into_iter()
        .map(|(k, v)| {
            warnings.push(ParseWarning { line, message: format!("{what}: unknown field `{k}` kept as-is") });
            (k, v.to_string())
        })
        .collect()
}

fn parse_line(text: &str, line: usize, warnings: &mut Vec<ParseWarning>) -> Result<Question> {
    let value: Value = serde_json::from_str(text).map_err(|e| malformed(line, format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(malformed(line, "expected a JSON object"));
    };
    let question_id = take_string(&mut obj, "question_id", line, "question")?;
    let what = format!("question {question_id:?}");
    let text = take_string(&mut obj, "question_text", line, &what)?;
    let raw = match obj.shift_remove("candidates") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(malformed(line, format!("{what}: `candidates` must be an array"))),
        None => return Err(malformed(line, format!("{what}: missing `candidates`"))),
    };
    let mut candidates = Vec::with_capacity(raw.len());
    for (i, c) in raw.into_iter().enumerate() {
        let Value::Object(mut c) = c else {
            return Err(malformed(line, format!("{what}: candidate {i} is not an object")));
        };
        let answer_id = take_string(&mut c, "answer_id", line, &what)?;
        let cwhat = format!("{what} answer {answer_id:?}");
        let text = take_string(&mut c, "text", line, &cwhat)?;
        let label = match c.shift_remove("label") {
            Some(Value::Bool(b)) => b,
            Some(_) => return Err(malformed(line, format!("{cwhat}: `label` must be true or false"))),
            None => return Err(malformed(line, format!("{cwhat}: missing `label`"))),
        };
        let extra = extras(c, line, &cwhat, warnings);
        candidates.push(CandidateAnswer { answer_id, text, label, extra });
    }
    let extra = extras(obj, line, &what, warnings);
    Ok(Question { question_id, text, candidates, extra })
}

/// Reads a canonical corpus. Errors carry the 1-based line number.
pub fn parse_canonical<R: BufRead>(reader: R, name: &str, split: Split) -> Result<Parsed> {
    let mut dataset = Dataset::empty(name, split);
    let mut warnings = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = if line_no == 1 { line.strip_prefix('\u{feff}').map(str::to_owned).unwrap_or(line) } else { line };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let q = parse_line(trimmed, line_no, &mut warnings)?;
        dataset.push(q).map_err(|source| Error::Corpus { line: line_no, source })?;
    }
    for w in &warnings {
        log::warn!("line {}: {}", w.line, w.message);
    }
    Ok(Parsed { dataset, warnings })
}

fn with_extras(mut obj: Map<String, Value>, extra: &Extras) -> Value {
    for (k, raw) in extra {
        let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        obj.insert(k.clone(), v);
    }
    Value::Object(obj)
}

pub fn question_to_json(q: &Question) -> Value {
    let candidates = q
        .candidates
        .iter()
        .map(|c| {
            let mut o = Map::new();
            o.insert("answer_id".into(), Value::String(c.answer_id.clone()));
            o.insert("text".into(), Value::String(c.text.clone()));
            o.insert("label".into(), Value::Bool(c.label));
            with_extras(o, &c.extra)
        })
        .collect();
    let mut o = Map::new();
    o.insert("question_id".into(), Value::String(q.question_id.clone()));
    o.insert("question_text".into(), Value::String(q.text.clone()));
    o.insert("candidates".into(), Value::Array(candidates));
    with_extras(o, &q.extra)
}

/// Writes one compact JSON line per question, in order.
pub fn write_canonical<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    for q in dataset.questions() {
        serde_json::to_writer(&mut writer, &question_to_json(q)).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_file(path: &std::path::Path, split: Split) -> Result<Parsed> {
    let f = std::fs::File::open(path).map_err(Error::io(path))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_canonical(std::io::BufReader::new(f), &name, split)
}

pub fn write_file(dataset: &Dataset, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(Error::io(path))?;
    write_canonical(dataset, std::io::BufWriter::new(f))
}
