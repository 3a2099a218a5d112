//! Vocabulary text file: one token per line, line number = id, starting
//! with `[PAD]`, `[UNK]`, `[CLS]`, `[SEP]`.

use std::io::{BufRead, Write};
use std::path::Path;

use answersel_core::textenc::Vocab;

use crate::error::{Error, Result};

pub fn write_vocab<W: Write>(vocab: &Vocab, mut writer: W) -> Result<()> {
    for t in vocab.tokens() {
        writeln!(writer, "{t}")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_vocab<R: BufRead>(reader: R) -> Result<Vocab> {
    let tokens = reader.lines().collect::<Result<Vec<_>, _>>()?;
    Ok(Vocab::from_tokens(tokens)?)
}

pub fn save(vocab: &Vocab, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(Error::io(path))?;
    write_vocab(vocab, std::io::BufWriter::new(f))
}

pub fn load(path: &Path) -> Result<Vocab> {
    let f = std::fs::File::open(path).map_err(Error::io(path))?;
    read_vocab(std::io::BufReader::new(f))
}
