use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use super::{Reader, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::stats::GaussianSummary;

pub const LWS1_MAGIC: &[u8; 4] = b"LWS1";

const HEADER_LEN: u64 = 16;

fn layer_len(dim: usize) -> u64 {
    8 + 8 * dim as u64 + 8 * (dim as u64) * (dim as u64)
}

fn check_layers(layers: &[GaussianSummary]) -> Result<usize> {
    let first = layers
        .first()
        .ok_or_else(|| Error::Validation("summary file needs at least one layer".into()))?;
    let dim = first.dim();
    for (l, s) in layers.iter().enumerate() {
        if s.dim() != dim {
            return Err(Error::Dim(format!(
                "layer {l} has dimension {}, layer 0 has {dim}",
                s.dim()
            )));
        }
        s.validate().map_err(|e| e.context(format!("layer {l}")))?;
    }
    if layers.len() > u32::MAX as usize || dim > u32::MAX as usize {
        return Err(Error::Range("summary shape does not fit in u32".into()));
    }
    Ok(dim)
}

fn write_layer(out: &mut impl Write, s: &GaussianSummary) -> std::io::Result<()> {
    out.write_all(&s.count.to_le_bytes())?;
    for v in s.mean.iter().chain(&s.covariance) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn encode_summaries(layers: &[GaussianSummary]) -> Result<Vec<u8>> {
    let dim = check_layers(layers)?;
    let mut out =
        Vec::with_capacity(HEADER_LEN as usize + layers.len() * layer_len(dim) as usize);
    out.extend_from_slice(LWS1_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for s in layers {
        write_layer(&mut out, s).expect("writing to a Vec cannot fail");
    }
    Ok(out)
}

fn decode_header(r: &mut Reader<'_>) -> Result<(usize, usize)> {
    let magic = r.take(4)?;
    if magic != LWS1_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"LWS1\"",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported LWS1 version {version}")));
    }
    let n_layers = r.u32()? as usize;
    let dim = r.u32()? as usize;
    if n_layers == 0 || dim == 0 {
        return Err(Error::Format(format!(
            "zero-sized summary shape {n_layers}×{dim}"
        )));
    }
    Ok((n_layers, dim))
}

fn decode_layer(r: &mut Reader<'_>, dim: usize) -> Result<GaussianSummary> {
    let count = r.u64()?;
    let values: Vec<f64> = r
        .take(8 * (dim + dim * dim))?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let covariance = values[dim..].to_vec();
    let mut mean = values;
    mean.truncate(dim);
    let s = GaussianSummary {
        count,
        mean,
        covariance,
    };
    s.validate()?;
    Ok(s)
}

pub fn decode_summaries(bytes: &[u8]) -> Result<Vec<GaussianSummary>> {
    let mut r = Reader::new(bytes, "LWS1");
    let (n_layers, dim) = decode_header(&mut r)?;
    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let at = r.position();
        layers.push(
            decode_layer(&mut r, dim)
                .map_err(|e| e.context(format!("layer {l} at offset {at}")))?,
        );
    }
    if r.remaining() != 0 {
        return Err(Error::Format(format!(
            "{} trailing bytes after last layer",
            r.remaining()
        )));
    }
    Ok(layers)
}

/// Writes one summary per layer. Every summary must pass validation
/// (`count ≥ 2`, finite, symmetric) and share one dimension.
pub fn write_summary_file(layers: &[GaussianSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dim = check_layers(layers)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let result = (|| {
        w.write_all(LWS1_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(layers.len() as u32).to_le_bytes())?;
        w.write_all(&(dim as u32).to_le_bytes())?;
        for s in layers {
            write_layer(&mut w, s)?;
        }
        w.flush()
    })();
    result.map_err(|e| Error::io(path, e))
}

pub fn read_summary_file(path: impl AsRef<Path>) -> Result<Vec<GaussianSummary>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_summaries(&bytes).map_err(|e| e.context(path.display().to_string()))
}

/// `(n_layers, dim)` of an LWS1 file.
pub fn read_summary_header(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; HEADER_LEN as usize];
    let mut filled = 0;
    while filled < buf.len() {
        match file.read(&mut buf[filled..]).map_err(|e| Error::io(path, e))? {
            0 => break,
            n => filled += n,
        }
    }
    decode_header(&mut Reader::new(&buf[..filled], "LWS1 header"))
        .map_err(|e| e.context(path.display().to_string()))
}

/// Reads a single layer by seeking, so large summaries can be streamed layer by layer.
pub fn read_summary_layer(path: impl AsRef<Path>, layer: usize) -> Result<GaussianSummary> {
    let path = path.as_ref();
    let (n_layers, dim) = read_summary_header(path)?;
    if layer >= n_layers {
        return Err(Error::Validation(format!(
            "{}: layer {layer} requested, file has {n_layers}",
            path.display()
        )));
    }
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = layer_len(dim);
    let size = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if size < HEADER_LEN + n_layers as u64 * len {
        return Err(Error::Truncation(format!(
            "{}: {size} bytes, expected {}",
            path.display(),
            HEADER_LEN + n_layers as u64 * len
        )));
    }
    file.seek(SeekFrom::Start(HEADER_LEN + layer as u64 * len))
        .map_err(|e| Error::io(path, e))?;
    let mut buf = vec![0u8; len as usize];
    file.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    decode_layer(&mut Reader::new(&buf, "LWS1 layer"), dim)
        .map_err(|e| e.context(format!("{} layer {layer}", path.display())))
}
