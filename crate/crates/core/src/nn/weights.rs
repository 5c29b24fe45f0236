//! Versioned binary weight files.
//!
//! Layout (little endian): `b"DRNW"`, `u32` version, `u64` architecture
//! fingerprint, `u32` tensor count, then per tensor a `u64` length followed
//! by that many `f64` values. Tensors alternate weights and bias per layer.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::network::{LayerParams, Network, NetworkSpec};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"DRNW";
pub const VERSION: u32 = 1;

pub fn encode_weights<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * net.spec.param_count() + 16 * net.params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&net.spec.fingerprint().to_le_bytes());
    out.extend_from_slice(&(2 * net.params.len() as u32).to_le_bytes());
    for p in &net.params {
        for t in [&p.weights, &p.bias] {
            out.extend_from_slice(&(t.len() as u64).to_le_bytes());
            for v in t.iter() {
                out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::WeightFile {
            offset: self.bytes.len(),
            message: format!("truncated while reading {what} (needed {n} bytes at offset {})", self.pos),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Decode weights for `spec`; the file's fingerprint must match.
pub fn decode_weights<T: Scalar>(spec: &NetworkSpec, bytes: &[u8]) -> Result<Network<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::WeightFile { offset: 0, message: "bad magic".into() });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::WeightFile { offset: 4, message: format!("unsupported version {version}") });
    }
    let found = r.u64("spec hash")?;
    let expected = spec.fingerprint();
    if found != expected {
        return Err(Error::SpecHashMismatch { expected, found });
    }
    let count = r.u32("tensor count")? as usize;
    if count != 2 * spec.layers.len() {
        return Err(Error::WeightFile {
            offset: 16,
            message: format!("{count} tensors for {} layers", spec.layers.len()),
        });
    }
    let mut params = Vec::with_capacity(spec.layers.len());
    for layer in &spec.layers {
        let mut pair = Vec::with_capacity(2);
        for want in [layer.weight_len(), layer.out_ch] {
            let at = r.pos;
            let len = r.u64("tensor length")? as usize;
            if len != want {
                return Err(Error::WeightFile {
                    offset: at,
                    message: format!("tensor for {} has {len} values, expected {want}", layer.describe()),
                });
            }
            let raw = r.take(len.saturating_mul(8), "tensor values")?;
            pair.push(
                raw.chunks_exact(8)
                    .map(|c| T::from_f64_lossy(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
                    .collect::<Vec<T>>(),
            );
        }
        let bias = pair.pop().expect("bias");
        let weights = pair.pop().expect("weights");
        params.push(LayerParams { weights, bias });
    }
    if r.pos != bytes.len() {
        return Err(Error::WeightFile { offset: r.pos, message: "trailing bytes".into() });
    }
    Network::from_params(spec.clone(), params)
}

pub fn save_weights<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_weights(net))?;
    Ok(())
}

pub fn load_weights<T: Scalar>(spec: &NetworkSpec, path: impl AsRef<Path>) -> Result<Network<T>> {
    decode_weights(spec, &std::fs::read(path)?)
}
