//! Binary checkpoint format.
//!
//! An MLP block is the magic `EHDMMLP1`, the layer count `L` as `u64`, the
//! `L + 1` layer dimensions as `u64`, then for each layer its weights
//! (input-major, `dims[l] * dims[l+1]` values) followed by its bias, all as
//! little-endian `f32`. A student checkpoint is an MLP block followed by the
//! decoder weight (`dims[L]` values) and the decoder bias.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Mlp, StudentModel};
use crate::error::{Error, Result};

pub const MLP_MAGIC: &[u8; 8] = b"EHDMMLP1";

pub fn encode_mlp(m: &Mlp<f32>, out: &mut Vec<u8>) {
    out.extend_from_slice(MLP_MAGIC);
    out.extend_from_slice(&(m.num_layers() as u64).to_le_bytes());
    for &d in m.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for l in 0..m.num_layers() {
        put_f32s(out, m.weight(l));
        put_f32s(out, m.bias(l));
    }
}

pub fn encode_student(m: &StudentModel<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    encode_mlp(&m.encoder, &mut out);
    put_f32s(&mut out, &m.decoder_weight);
    put_f32s(&mut out, std::slice::from_ref(&m.decoder_bias));
    out
}

pub fn write_student(path: impl AsRef<Path>, m: &StudentModel<f32>) -> Result<()> {
    std::fs::write(path, encode_student(m))?;
    Ok(())
}

pub fn read_student(path: impl AsRef<Path>) -> Result<StudentModel<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    decode_student(&bytes).map_err(|msg| Error::format(path, msg))
}

pub fn decode_student(bytes: &[u8]) -> Result<StudentModel<f32>, String> {
    let mut r = ByteReader::new(bytes);
    let encoder = decode_mlp(&mut r)?;
    let u = r.f32s(encoder.output_dim())?;
    let b = r.f32s(1)?[0];
    r.finish()?;
    StudentModel::from_parts(encoder, u, b).map_err(|e| e.to_string())
}

pub fn decode_mlp(r: &mut ByteReader<'_>) -> Result<Mlp<f32>, String> {
    if r.take(8)? != MLP_MAGIC {
        return Err("missing EHDMMLP1 magic".into());
    }
    let layers = r.u64()? as usize;
    if layers == 0 || layers > 64 {
        return Err(format!("implausible layer count {layers}"));
    }
    let dims = (0..=layers)
        .map(|_| r.u64().map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let mut weights = Vec::with_capacity(layers);
    let mut biases = Vec::with_capacity(layers);
    for l in 0..layers {
        let n = dims[l]
            .checked_mul(dims[l + 1])
            .ok_or("layer size overflows")?;
        weights.push(r.f32s(n)?);
        biases.push(r.f32s(dims[l + 1])?);
    }
    Mlp::from_parts(dims, weights, biases).map_err(|e| e.to_string())
}

/// Hex SHA-256 of a byte string; identifies checkpoints in gate headers.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    Ok(digest(&std::fs::read(path)?))
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, v: &[f32]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Little-endian cursor over a byte slice.
pub struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>, String> {
        let raw = self.take(n.checked_mul(4).ok_or("length overflows")?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(&self) -> Result<(), String> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(format!("{} trailing bytes", self.bytes.len() - self.pos))
        }
    }
}
