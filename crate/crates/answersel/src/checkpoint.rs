//! Binary checkpoint.
//!
//! ```text
//! magic      8 bytes  "ANSWSEL\0"
//! version    u32 LE   1
//! header_len u32 LE
//! header     UTF-8 JSON of the ModelConfig
//! count      u64 LE   number of parameters
//! values     count × f32 LE, in the flat parameter order
//! ```
//!
//! Parameters produced by `ModelParams::init` and `optimizer_step` are on the
//! `f32` grid, so saving and loading them is exact.

use std::io::{Read, Write};
use std::path::Path;

use answersel_core::model::{ModelConfig, ModelParams};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ANSWSEL\0";
pub const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut w: W) -> Result<()> {
    let header = serde_json::to_vec(params.config()).map_err(std::io::Error::from)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(params.len() * 4);
    for &x in params.as_slice() {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => bad(format!("truncated file (while reading {what})")),
        _ => Error::RawIo(e),
    })
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelParams> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(bad("bad magic bytes, not an answersel checkpoint"));
    }
    let mut u32buf = [0u8; 4];
    read_exact(&mut r, &mut u32buf, "version")?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(bad(format!("unsupported format version {version} (expected {VERSION})")));
    }
    read_exact(&mut r, &mut u32buf, "header length")?;
    let mut header = vec![0u8; u32::from_le_bytes(u32buf) as usize];
    read_exact(&mut r, &mut header, "header")?;
    let config: ModelConfig = serde_json::from_slice(&header).map_err(|e| bad(format!("bad header: {e}")))?;
    let mut u64buf = [0u8; 8];
    read_exact(&mut r, &mut u64buf, "parameter count")?;
    let count = u64::from_le_bytes(u64buf) as usize;
    let expected = answersel_core::model::Layout::new(&config).total;
    if count != expected {
        return Err(bad(format!("header describes {expected} parameters but file holds {count}")));
    }
    let mut raw = vec![0u8; count * 4];
    read_exact(&mut r, &mut raw, "parameters")?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes after parameters"));
    }
    let data = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(ModelParams::from_flat(&config, data)?)
}

pub fn save(params: &ModelParams, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(Error::io(path))?;
    write_checkpoint(params, std::io::BufWriter::new(f))
}

pub fn load(path: &Path) -> Result<ModelParams> {
    let f = std::fs::File::open(path).map_err(Error::io(path))?;
    read_checkpoint(std::io::BufReader::new(f))
}
