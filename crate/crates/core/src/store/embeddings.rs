use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{Reader, FORMAT_VERSION};
use crate::error::{Error, Result};

pub const LWE1_MAGIC: &[u8; 4] = b"LWE1";

/// Hidden states of every layer for one utterance.
///
/// `data` holds `n_layers` blocks, each `n_frames × dim` in frame-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceEmbeddings {
    pub utterance_id: String,
    pub n_layers: usize,
    pub dim: usize,
    pub n_frames: usize,
    pub data: Vec<f32>,
}

/// The fixed-size part of an LWE1 file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingHeader {
    pub utterance_id: String,
    pub n_layers: usize,
    pub dim: usize,
    pub n_frames: usize,
}

impl UtteranceEmbeddings {
    pub fn new(
        utterance_id: impl Into<String>,
        n_layers: usize,
        dim: usize,
        n_frames: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let emb = UtteranceEmbeddings {
            utterance_id: utterance_id.into(),
            n_layers,
            dim,
            n_frames,
            data,
        };
        emb.validate()?;
        Ok(emb)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 || self.dim == 0 || self.n_frames == 0 {
            return Err(Error::Data(format!(
                "utterance {:?}: layers, dim and frames must all be positive (got {}, {}, {})",
                self.utterance_id, self.n_layers, self.dim, self.n_frames
            )));
        }
        for (v, name) in [
            (self.n_layers, "n_layers"),
            (self.dim, "dim"),
            (self.n_frames, "n_frames"),
        ] {
            if v > u32::MAX as usize {
                return Err(Error::Range(format!("{name} = {v} does not fit in u32")));
            }
        }
        if self.utterance_id.len() > u16::MAX as usize {
            return Err(Error::Range(format!(
                "utterance id is {} bytes, limit is {}",
                self.utterance_id.len(),
                u16::MAX
            )));
        }
        let expected = self.n_layers * self.n_frames * self.dim;
        if self.data.len() != expected {
            return Err(Error::Dim(format!(
                "utterance {:?}: {} values, expected {} ({}×{}×{})",
                self.utterance_id,
                self.data.len(),
                expected,
                self.n_layers,
                self.n_frames,
                self.dim
            )));
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "utterance {:?}: non-finite value at index {i}",
                self.utterance_id
            )));
        }
        Ok(())
    }

    /// Row-major `n_frames × dim` block of one layer.
    pub fn layer(&self, l: usize) -> &[f32] {
        let block = self.n_frames * self.dim;
        &self.data[l * block..(l + 1) * block]
    }

    /// Mean over frames of one layer, in f64.
    pub fn layer_mean(&self, l: usize) -> Vec<f64> {
        let mut mean = vec![0.0f64; self.dim];
        for frame in self.layer(l).chunks_exact(self.dim) {
            for (m, &v) in mean.iter_mut().zip(frame) {
                *m += v as f64;
            }
        }
        let n = self.n_frames as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

fn header_len(id_len: usize) -> usize {
    4 + 4 * 4 + 2 + id_len
}

pub fn encode_embeddings(emb: &UtteranceEmbeddings) -> Result<Vec<u8>> {
    emb.validate()?;
    let mut out = Vec::with_capacity(header_len(emb.utterance_id.len()) + 4 * emb.data.len());
    out.extend_from_slice(LWE1_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(emb.n_layers as u32).to_le_bytes());
    out.extend_from_slice(&(emb.dim as u32).to_le_bytes());
    out.extend_from_slice(&(emb.n_frames as u32).to_le_bytes());
    out.extend_from_slice(&(emb.utterance_id.len() as u16).to_le_bytes());
    out.extend_from_slice(emb.utterance_id.as_bytes());
    for v in &emb.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn decode_header(r: &mut Reader<'_>) -> Result<EmbeddingHeader> {
    let magic = r.take(4)?;
    if magic != LWE1_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"LWE1\"",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported LWE1 version {version}")));
    }
    let n_layers = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let n_frames = r.u32()? as usize;
    let id_len = r.u16()? as usize;
    let utterance_id = std::str::from_utf8(r.take(id_len)?)
        .map_err(|_| Error::Format("utterance id is not valid UTF-8".into()))?
        .to_owned();
    if n_layers == 0 || dim == 0 || n_frames == 0 {
        return Err(Error::Format(format!(
            "zero-sized shape {n_layers}×{n_frames}×{dim}"
        )));
    }
    Ok(EmbeddingHeader {
        utterance_id,
        n_layers,
        dim,
        n_frames,
    })
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<UtteranceEmbeddings> {
    let mut r = Reader::new(bytes, "LWE1");
    let h = decode_header(&mut r)?;
    let count = h
        .n_layers
        .checked_mul(h.n_frames)
        .and_then(|v| v.checked_mul(h.dim))
        .ok_or_else(|| Error::Format("shape overflows".into()))?;
    let payload = r.take(
        count
            .checked_mul(4)
            .ok_or_else(|| Error::Format("shape overflows".into()))?,
    )?;
    if r.remaining() != 0 {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            r.remaining()
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "utterance {:?}: non-finite value at index {i}",
            h.utterance_id
        )));
    }
    Ok(UtteranceEmbeddings {
        utterance_id: h.utterance_id,
        n_layers: h.n_layers,
        dim: h.dim,
        n_frames: h.n_frames,
        data,
    })
}

/// Writes an LWE1 file. Invalid embeddings are rejected before the file is touched.
pub fn write_embedding_file(emb: &UtteranceEmbeddings, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_embeddings(emb)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<UtteranceEmbeddings> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes).map_err(|e| e.context(path.display().to_string()))
}

/// Reads only the header, without loading the payload.
pub fn read_embedding_header(path: impl AsRef<Path>) -> Result<EmbeddingHeader> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut fixed = [0u8; 22];
    let n = read_up_to(&mut file, &mut fixed).map_err(|e| Error::io(path, e))?;
    let id_len = if n == fixed.len() {
        u16::from_le_bytes([fixed[20], fixed[21]]) as usize
    } else {
        0
    };
    let mut buf = fixed[..n].to_vec();
    if n == fixed.len() && id_len > 0 {
        let mut id = vec![0u8; id_len];
        let m = read_up_to(&mut file, &mut id).map_err(|e| Error::io(path, e))?;
        buf.extend_from_slice(&id[..m]);
    }
    decode_header(&mut Reader::new(&buf, "LWE1 header"))
        .map_err(|e| e.context(path.display().to_string()))
}

fn read_up_to(file: &mut File, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match file.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}
