//! Binary checkpoint format, all integers little-endian:
//!
//! ```text
//! "MA3C" | version u32 | config (13 × u32) | tensor count u32 |
//!   { name_len u32 | name utf-8 | rank u32 | dims u32×rank | f32×numel }* |
//! crc32 of every preceding byte
//! ```
//!
//! Payloads are single precision regardless of the training precision.

use std::fs;
use std::path::Path;

use crate::autodiff::{Real, Tensor};
use crate::error::{Error, Result};
use crate::network::{NetworkConfig, Weights};

pub const MAGIC: &[u8; 4] = b"MA3C";
pub const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn config_words(cfg: &NetworkConfig) -> [usize; 13] {
    [
        cfg.input_hw,
        cfg.fe_channels[0],
        cfg.fe_channels[1],
        cfg.fe_channels[2],
        cfg.lstm_channels,
        cfg.branch_channels,
        cfg.n_actions,
        cfg.policy_mask as usize,
        cfg.value_mask as usize,
        cfg.invert_value_mask as usize,
        cfg.conv_kernel,
        cfg.conv_stride,
        cfg.conv_padding,
    ]
}

pub fn encode_checkpoint<T: Real>(weights: &Weights<T>, cfg: &NetworkConfig) -> Result<Vec<u8>> {
    weights.validate(cfg)?;
    let mut buf = Vec::with_capacity(64 + 4 * weights.num_parameters());
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION as usize);
    for w in config_words(cfg) {
        put_u32(&mut buf, w);
    }
    put_u32(&mut buf, weights.len());
    for (name, t) in weights.iter() {
        put_u32(&mut buf, name.len());
        buf.extend_from_slice(name.as_bytes());
        put_u32(&mut buf, t.shape().len());
        for &d in t.shape() {
            put_u32(&mut buf, d);
        }
        for &x in t.data() {
            buf.extend_from_slice(&(x.as_f64() as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<usize> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }
}

pub fn decode_checkpoint(bytes: &[u8], origin: &Path) -> Result<(NetworkConfig, Weights<f32>)> {
    let bad = |reason: &str| Error::checkpoint(origin, reason);
    if bytes.len() < 12 {
        return Err(bad("checksum mismatch (file too short)"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(bad("checksum mismatch"));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4) != Some(MAGIC.as_slice()) {
        return Err(bad("bad magic"));
    }
    let version = r.u32().ok_or_else(|| bad("truncated header"))?;
    if version != VERSION as usize {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let mut words = [0usize; 13];
    for w in &mut words {
        *w = r.u32().ok_or_else(|| bad("truncated config"))?;
    }
    let flag = |v: usize| match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(bad("corrupt config flag")),
    };
    let cfg = NetworkConfig {
        input_hw: words[0],
        fe_channels: [words[1], words[2], words[3]],
        lstm_channels: words[4],
        branch_channels: words[5],
        n_actions: words[6],
        policy_mask: flag(words[7])?,
        value_mask: flag(words[8])?,
        invert_value_mask: flag(words[9])?,
        conv_kernel: words[10],
        conv_stride: words[11],
        conv_padding: words[12],
    };
    cfg.validate()
        .map_err(|e| bad(&format!("invalid stored config: {e}")))?;
    let count = r.u32().ok_or_else(|| bad("truncated tensor count"))?;
    let mut names = Vec::new();
    let mut tensors = Vec::new();
    for _ in 0..count {
        let len = r.u32().ok_or_else(|| bad("truncated name"))?;
        let name = r
            .take(len)
            .and_then(|b| std::str::from_utf8(b).ok())
            .ok_or_else(|| bad("bad tensor name"))?
            .to_string();
        let rank = r.u32().ok_or_else(|| bad("truncated rank"))?;
        if rank == 0 || rank > 8 {
            return Err(bad(&format!("{name}: bad rank {rank}")));
        }
        let dims = (0..rank)
            .map(|_| r.u32())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("truncated dims"))?;
        let numel = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| bad("tensor too large"))?;
        let payload = r
            .take(numel.checked_mul(4).ok_or_else(|| bad("tensor too large"))?)
            .ok_or_else(|| bad("truncated payload"))?;
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        tensors.push(
            Tensor::new(&dims, data)
                .map_err(|e| bad(&format!("{name}: {e}")))?
                .with_requires_grad(true),
        );
        names.push(name);
    }
    if r.pos != body.len() {
        return Err(bad("trailing bytes"));
    }
    let weights = Weights::from_parts(names, tensors).map_err(|e| bad(&e.to_string()))?;
    weights.validate(&cfg).map_err(|e| match e {
        Error::VariantMismatch(m) => bad(&format!("parameter names do not match config: {m}")),
        other => bad(&other.to_string()),
    })?;
    Ok((cfg, weights))
}

pub fn save_checkpoint<T: Real>(weights: &Weights<T>, cfg: &NetworkConfig, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(weights, cfg)?;
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_checkpoint(path: &Path) -> Result<(NetworkConfig, Weights<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::checkpoint(path, format!("cannot read: {e}")))?;
    decode_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_weights, Variant};

    #[test]
    fn round_trip_is_bit_identical() {
        for v in Variant::ALL {
            let cfg = NetworkConfig::new(20, 3, v);
            let w = init_weights::<f32>(&cfg, 9).unwrap();
            let bytes = encode_checkpoint(&w, &cfg).unwrap();
            let (cfg2, w2) = decode_checkpoint(&bytes, Path::new("mem")).unwrap();
            assert_eq!(cfg2, cfg);
            for (a, b) in w.tensors().iter().zip(w2.tensors()) {
                let bits = |t: &Tensor<f32>| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(a), bits(b));
                assert_eq!(a.shape(), b.shape());
            }
            assert_eq!(w.names(), w2.names());
        }
    }

    #[test]
    fn every_single_bit_flip_is_detected_in_header() {
        let cfg = NetworkConfig::new(20, 3, Variant::Both);
        let w = init_weights::<f32>(&cfg, 0).unwrap();
        let bytes = encode_checkpoint(&w, &cfg).unwrap();
        for i in 0..64 {
            for bit in 0..8 {
                let mut c = bytes.clone();
                c[i] ^= 1 << bit;
                assert!(decode_checkpoint(&c, Path::new("mem")).is_err());
            }
        }
    }

    #[test]
    fn truncation_fails_checksum() {
        let cfg = NetworkConfig::new(20, 3, Variant::Vanilla);
        let w = init_weights::<f32>(&cfg, 0).unwrap();
        let bytes = encode_checkpoint(&w, &cfg).unwrap();
        let err = decode_checkpoint(&bytes[..bytes.len() - 10], Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
        let err = decode_checkpoint(&bytes[..5], Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn name_set_must_match_config() {
        // a vanilla payload relabelled as "both" in the header
        let cfg = NetworkConfig::new(20, 3, Variant::Vanilla);
        let w = init_weights::<f32>(&cfg, 0).unwrap();
        let mut bytes = encode_checkpoint(&w, &cfg).unwrap();
        bytes.truncate(bytes.len() - 4);
        // policy_mask and value_mask words
        bytes[8 + 7 * 4] = 1;
        bytes[8 + 8 * 4] = 1;
        let crc = crc32fast::hash(&bytes);
        bytes.extend_from_slice(&crc.to_le_bytes());
        let err = decode_checkpoint(&bytes, Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("names"), "{err}");
    }
}
