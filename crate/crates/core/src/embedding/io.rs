//! Binary model container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "LXRSKEMB"
//! version    u32
//! hyper      u32 length + JSON
//! vocab      u64 total_tokens, u64 min_count, u32 n,
//!            n x (u32 byte length + UTF-8 token + u64 count)
//! matrices   words, padding (1 row), outputs, docs;
//!            each u32 rows, u32 cols, rows*cols f32
//! ```

use std::fs;
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::wire::{Reader, Writer};

use super::{EmbeddingModel, Hyperparams, Matrix};

pub const MODEL_MAGIC: &[u8; 8] = b"LXRSKEMB";
pub const MODEL_FORMAT_VERSION: u32 = 1;

fn write_matrix(w: &mut Writer, m: &Matrix) {
    w.u32(m.rows() as u32);
    w.u32(m.cols() as u32);
    for &x in m.as_slice() {
        w.f32(x);
    }
}

fn read_matrix(r: &mut Reader<'_>) -> Result<Matrix> {
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::format("model", "matrix too large"))?;
    let data = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_raw(rows, cols, data))
}

impl EmbeddingModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MODEL_MAGIC, MODEL_FORMAT_VERSION);
        w.bytes(&serde_json::to_vec(&self.hyper).expect("hyperparams serialize"));

        w.u64(self.vocab.total_tokens());
        w.u64(self.vocab.min_count());
        w.u32(self.vocab.len() as u32);
        for (token, &count) in self.vocab.tokens().iter().zip(self.vocab.counts()) {
            w.bytes(token.as_bytes());
            w.u64(count);
        }

        write_matrix(&mut w, &self.words);
        write_matrix(&mut w, &Matrix::from_raw(1, self.padding.len(), self.padding.clone()));
        write_matrix(&mut w, &self.outputs);
        write_matrix(&mut w, &self.docs);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, MODEL_MAGIC, MODEL_FORMAT_VERSION, "model")?;
        let hyper: Hyperparams = serde_json::from_slice(r.bytes()?)?;

        let total_tokens = r.u64()?;
        let min_count = r.u64()?;
        let n = r.u32()? as usize;
        let mut tokens = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for _ in 0..n {
            let token = std::str::from_utf8(r.bytes()?)
                .map_err(|e| Error::format("model", format!("token is not UTF-8: {e}")))?;
            tokens.push(token.to_string());
            counts.push(r.u64()?);
        }
        let vocab = Vocabulary::from_parts(tokens, counts, total_tokens, min_count);

        let words = read_matrix(&mut r)?;
        let padding = read_matrix(&mut r)?.as_slice().to_vec();
        let outputs = read_matrix(&mut r)?;
        let docs = read_matrix(&mut r)?;
        r.finish()?;
        EmbeddingModel::from_parts(hyper, vocab, words, padding, outputs, docs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
