//! Netpbm grayscale I/O. Writes binary PGM (`P5`, maxval 255); reads
//! `P2`/`P5` and converts `P3`/`P6` color to luma.

use std::fs;
use std::path::Path;

use super::image::{round_half_up, GrayImage};
use crate::error::{Error, Result};

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|m| Error::format(path, m))
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&[u8], String> {
        self.skip_space();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err("truncated header".into());
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<usize, String> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("expected a number, found {:?}", String::from_utf8_lossy(tok)))
    }
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage, String> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token()?.to_vec();
    let (channels, binary) = match magic.as_slice() {
        b"P2" => (1, false),
        b"P5" => (1, true),
        b"P3" => (3, false),
        b"P6" => (3, true),
        other => return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(other))),
    };
    let width = h.number()?;
    let height = h.number()?;
    let maxval = h.number()?;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if !(1..=255).contains(&maxval) {
        return Err(format!("unsupported maxval {maxval} (8-bit only)"));
    }
    let count = width * height * channels;
    let samples: Vec<u8> = if binary {
        // exactly one whitespace byte separates the header from raster data
        let start = h.pos + 1;
        let raster = bytes
            .get(start..start + count)
            .ok_or_else(|| format!("raster truncated: expected {count} bytes"))?;
        raster.to_vec()
    } else {
        (0..count)
            .map(|_| h.number().and_then(|v| u8::try_from(v).map_err(|_| format!("sample {v} > 255"))))
            .collect::<Result<_, _>>()?
    };
    if let Some(&bad) = samples.iter().find(|&&s| usize::from(s) > maxval) {
        return Err(format!("sample {bad} exceeds maxval {maxval}"));
    }
    let scale = |s: u8| f64::from(s) * 255.0 / maxval as f64;
    let pixels = if channels == 1 {
        if maxval == 255 {
            samples
        } else {
            samples.into_iter().map(|s| round_half_up(scale(s))).collect()
        }
    } else {
        samples
            .chunks_exact(3)
            .map(|c| round_half_up(0.299 * scale(c[0]) + 0.587 * scale(c[1]) + 0.114 * scale(c[2])))
            .collect()
    };
    GrayImage::new(width, height, pixels).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let img = GrayImage::from_fn(7, 3, |x, y| (x * 30 + y) as u8);
        assert_eq!(decode(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn ascii_with_comments() {
        let src = b"P2\n# made by hand\n3 1 # trailing\n255\n0 128 255\n";
        assert_eq!(decode(src).unwrap().pixels(), &[0, 128, 255]);
    }

    #[test]
    fn color_to_luma() {
        let mut src = b"P6 2 1 255\n".to_vec();
        src.extend_from_slice(&[255, 255, 255, 0, 0, 0]);
        assert_eq!(decode(&src).unwrap().pixels(), &[255, 0]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode(b"P7 1 1 255\n\0").is_err());
        assert!(decode(b"P5 2 2 255\n\0\0").is_err());
        assert!(decode(b"P5 2 2").is_err());
        assert!(decode(b"P5 1 1 65535\n\0\0").is_err());
    }

    #[test]
    fn file_errors_carry_path() {
        let err = read_pgm(Path::new("/nonexistent/x.pgm")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.pgm"));
    }
}
