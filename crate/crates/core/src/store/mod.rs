//! On-disk formats: per-utterance embeddings (LWE1), per-entity Gaussian
//! summaries (LWS1) and the JSON dataset manifest.
//!
//! Both binary formats are little-endian regardless of host.

mod embeddings;
mod manifest;
mod summaries;

pub use embeddings::{
    decode_embeddings, encode_embeddings, read_embedding_file, read_embedding_header,
    write_embedding_file, EmbeddingHeader, UtteranceEmbeddings, LWE1_MAGIC,
};
pub use manifest::{read_manifest, validate_dataset, write_manifest, DatasetManifest, SystemEntry};
pub use summaries::{
    decode_summaries, encode_summaries, read_summary_file, read_summary_header, read_summary_layer,
    write_summary_file, LWS1_MAGIC,
};

/// Format version written into both binary headers.
pub const FORMAT_VERSION: u32 = 1;

use crate::error::{Error, Result};

/// Little-endian cursor over a byte slice that reports truncation.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8], what: &'a str) -> Self {
        Reader { buf, pos: 0, what }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Truncation(format!(
                "{}: needed {n} more bytes at offset {}, only {} remain",
                self.what,
                self.pos,
                self.buf.len() - self.pos
            ))),
        }
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}
