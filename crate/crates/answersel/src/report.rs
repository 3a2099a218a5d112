//! Evaluation output: report JSON and TREC-style run files.

use std::io::Write;

use answersel_core::metrics::{EvalReport, RankedList};

use crate::error::Result;

pub fn report_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialises")
}

/// One line per ranked candidate: `question_id Q0 answer_id rank score run_tag`.
pub fn write_run_file<W: Write>(rankings: &[RankedList], run_tag: &str, mut w: W) -> Result<()> {
    for list in rankings {
        for (i, e) in list.entries.iter().enumerate() {
            writeln!(w, "{} Q0 {} {} {} {}", list.question_id, e.answer_id, i + 1, e.score, run_tag)?;
        }
    }
    w.flush()?;
    Ok(())
}
