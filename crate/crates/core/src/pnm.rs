//! Binary PGM (P5) and PPM (P6) with 8-bit samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BinaryMask, ColorImage, GrayImage};

/// A decoded PNM file.
#[derive(Clone, Debug, PartialEq)]
pub enum PnmImage {
    Gray(GrayImage),
    Color(ColorImage),
}

impl PnmImage {
    pub fn into_color(self) -> ColorImage {
        match self {
            PnmImage::Color(c) => c,
            PnmImage::Gray(g) => {
                ColorImage::from_channels(&g, &g, &g).expect("planes share dimensions")
            }
        }
    }

    pub fn into_gray(self) -> GrayImage {
        match self {
            PnmImage::Gray(g) => g,
            PnmImage::Color(c) => crate::image::to_gray_luma(&c),
        }
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Pnm { offset, message: message.into() }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(start, format!("{what} out of range")))
    }
}

/// Decode a P5 or P6 byte stream.
pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage> {
    if bytes.len() < 2 {
        return Err(parse_err(0, "missing magic number"));
    }
    let color = match &bytes[..2] {
        b"P5" => false,
        b"P6" => true,
        _ => return Err(parse_err(0, "unsupported magic, expected P5 or P6")),
    };
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")?;
    let height = r.number("height")?;
    if width == 0 || height == 0 {
        return Err(parse_err(r.pos, format!("invalid dimensions {width}x{height}")));
    }
    let maxval_at = r.pos;
    let maxval = r.number("maxval")?;
    if maxval != 255 {
        return Err(parse_err(maxval_at, format!("unsupported maxval {maxval}, only 255 is accepted")));
    }
    match bytes.get(r.pos) {
        Some(b) if b.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(parse_err(r.pos, "expected single whitespace after maxval")),
    }
    let channels = if color { 3 } else { 1 };
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| parse_err(0, "dimensions overflow"))?;
    let payload = &bytes[r.pos..];
    if payload.len() < expected {
        return Err(parse_err(
            r.pos + payload.len(),
            format!("truncated payload: expected {expected} bytes, found {}", payload.len()),
        ));
    }
    let payload = &payload[..expected];
    Ok(if color {
        PnmImage::Color(ColorImage::from_u8(width, height, payload)?)
    } else {
        PnmImage::Gray(GrayImage::from_u8(width, height, payload)?)
    })
}

fn encode(magic: &str, width: usize, height: usize, payload: &[u8]) -> Vec<u8> {
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(payload);
    out
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    encode("P5", img.width(), img.height(), &img.to_u8())
}

pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    encode("P6", img.width(), img.height(), &img.to_u8())
}

/// Masks are written as documents: text 0, background 255.
pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    encode_pgm(&mask.to_gray())
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<PnmImage> {
    decode_pnm(&std::fs::read(path)?)
}

pub fn read_color(path: impl AsRef<Path>) -> Result<ColorImage> {
    Ok(read_pnm(path)?.into_color())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    Ok(BinaryMask::from_gray(&read_pnm(path)?.into_gray()))
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, encode_pgm(img))?)
}

pub fn write_ppm(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, encode_ppm(img))?)
}

pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, encode_mask(mask))?)
}

pub fn write_pnm(img: &PnmImage, path: impl AsRef<Path>) -> Result<()> {
    match img {
        PnmImage::Gray(g) => write_pgm(g, path),
        PnmImage::Color(c) => write_ppm(c, path),
    }
}
