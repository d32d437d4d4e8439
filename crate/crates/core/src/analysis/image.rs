//! Netpbm output and the integer pixel rules used by the heatmaps.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// `floor(v·255 + 0.5)` clamped to `[0, 255]`; NaN maps to 0.
pub fn quantize(v: f64) -> u8 {
    let q = (v * 255.0 + 0.5).floor();
    if q.is_nan() {
        0
    } else {
        q.clamp(0.0, 255.0) as u8
    }
}

pub fn dequantize(q: u8) -> f64 {
    q as f64 / 255.0
}

/// Binary greyscale (P5, maxval 255).
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::InvalidShape(format!(
            "{} pixels for a {width}×{height} image",
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

/// Binary RGB (P6, maxval 255); `rgb` is interleaved.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Result<Vec<u8>> {
    if rgb.len() != 3 * width * height {
        return Err(Error::InvalidShape(format!(
            "{} bytes for a {width}×{height} RGB image",
            rgb.len()
        )));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    Ok(out)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Greyscale image as read back from a P5 file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

/// Parses a binary P5 file with maxval ≤ 255. Header comments are allowed.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let bad = |m: &str| Error::InvalidArgument(format!("PGM: {m}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("only binary P5 is supported"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 255 {
        return Err(bad("unsupported dimensions or maxval"));
    }
    // single whitespace byte after maxval
    pos += 1;
    let data = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| bad("truncated pixel data"))?;
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u16,
        pixels: data.to_vec(),
    })
}

/// Splits `size` pixels over `cells` blocks as evenly as possible, larger
/// blocks first: 20 over 3 gives 7, 7, 6.
pub fn block_sizes(size: usize, cells: usize) -> Vec<usize> {
    let base = size / cells;
    let extra = size % cells;
    (0..cells).map(|i| base + usize::from(i < extra)).collect()
}

/// Cell index covering each pixel along one axis.
pub fn block_index(size: usize, cells: usize) -> Vec<usize> {
    block_sizes(size, cells)
        .into_iter()
        .enumerate()
        .flat_map(|(i, n)| std::iter::repeat_n(i, n))
        .collect()
}

/// Nearest-neighbour replication of a `side × side` grid to `out × out`.
pub fn upsample(grid: &[f64], side: usize, out: usize) -> Result<Vec<f64>> {
    if grid.len() != side * side || side == 0 {
        return Err(Error::InvalidShape(format!(
            "{} values for a {side}×{side} grid",
            grid.len()
        )));
    }
    if out < side {
        return Err(Error::InvalidArgument(format!(
            "cannot upsample {side} cells to {out} pixels"
        )));
    }
    let idx = block_index(out, side);
    Ok((0..out * out)
        .map(|p| grid[idx[p / out] * side + idx[p % out]])
        .collect())
}

/// Red = α·mask + (1−α)·obs, green = blue = (1−α)·obs, with α = 0.5.
pub fn overlay(mask: &[f64], obs: &[f64]) -> Result<Vec<u8>> {
    const ALPHA: f64 = 0.5;
    if mask.len() != obs.len() {
        return Err(Error::InvalidShape(format!(
            "overlay of {} mask pixels on {} observation pixels",
            mask.len(),
            obs.len()
        )));
    }
    let mut rgb = Vec::with_capacity(3 * obs.len());
    for (&m, &o) in mask.iter().zip(obs) {
        let gb = quantize((1.0 - ALPHA) * o);
        rgb.extend_from_slice(&[quantize(ALPHA * m + (1.0 - ALPHA) * o), gb, gb]);
    }
    Ok(rgb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(7.0), 255);
        assert_eq!(quantize(f64::NAN), 0);
    }

    #[test]
    fn blocks_are_even() {
        assert_eq!(block_sizes(20, 3), vec![7, 7, 6]);
        assert_eq!(block_sizes(80, 10), vec![8; 10]);
        assert_eq!(block_sizes(10, 4), vec![3, 3, 2, 2]);
    }

    #[test]
    fn upsample_replicates() {
        let up = upsample(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], 3, 20).unwrap();
        assert_eq!(up.len(), 400);
        assert_eq!(up[0], 0.1);
        assert_eq!(up[6], 0.1);
        assert_eq!(up[7], 0.2);
        assert_eq!(up[14], 0.3);
        assert_eq!(up[7 * 20], 0.4);
        assert_eq!(up[399], 0.9);
        assert!(upsample(&[0.0; 4], 3, 20).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let px = vec![0, 128, 255, 7, 9, 11];
        let bytes = encode_pgm(3, 2, &px).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.pixels), (3, 2, px));
        let commented = b"P5\n# sprite\n1 1\n255\n\x40".to_vec();
        assert_eq!(decode_pgm(&commented).unwrap().pixels, vec![0x40]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn overlay_channels() {
        let rgb = overlay(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(rgb, vec![128, 0, 0, 128, 128, 128]);
    }
}
