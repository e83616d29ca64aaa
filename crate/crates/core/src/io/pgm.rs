//! Grayscale PGM input (`P2` ASCII and `P5` binary, maxval up to 65535).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A grayscale raster with intensities rescaled to `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    /// Row-major, row 0 at the top.
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ImageFormat("empty image".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::ImageFormat(format!(
                "expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=255.0).contains(p)) {
            return Err(Error::ImageFormat("intensity outside [0, 255]".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(col, row));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Bilinear intensity at `(x1, x2)` in the unit square.
    ///
    /// `x1` runs left to right across columns; `x2` runs bottom to top, so
    /// `x2 = 1` is the first image row. The aspect ratio is stretched.
    pub fn sample(&self, x1: f64, x2: f64) -> f64 {
        let fx = x1.clamp(0.0, 1.0) * (self.width - 1) as f64;
        let fy = (1.0 - x2.clamp(0.0, 1.0)) * (self.height - 1) as f64;
        let c0 = (fx.floor() as usize).min(self.width - 1);
        let r0 = (fy.floor() as usize).min(self.height - 1);
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let top = self.pixel(c0, r0) * (1.0 - tx) + self.pixel(c1, r0) * tx;
        let bottom = self.pixel(c0, r1) * (1.0 - tx) + self.pixel(c1, r1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

pub fn read_pgm_file(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| {
        Error::ImageFormat(format!("cannot read {}: {e}", path.as_ref().display()))
    })?;
    decode_pgm(&bytes)
}

pub fn read_pgm<R: Read>(mut source: R) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode_pgm(&bytes)
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
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

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::ImageFormat("unexpected end of header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::ImageFormat("header is not ASCII".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::ImageFormat(format!("bad {what}: {tok:?}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut header = Header { bytes, pos: 0 };
    let magic = header.token()?.to_owned();
    if magic != "P2" && magic != "P5" {
        return Err(Error::ImageFormat(format!("unsupported magic {magic:?}")));
    }
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::ImageFormat(format!("maxval {maxval} out of range")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::ImageFormat("image too large".into()))?;

    let raw: Vec<usize> = if magic == "P2" {
        (0..count)
            .map(|_| header.number("sample"))
            .collect::<Result<_>>()?
    } else {
        // exactly one whitespace byte separates maxval from the raster
        let data = &bytes[(header.pos + 1).min(bytes.len())..];
        let width_bytes = if maxval < 256 { 1 } else { 2 };
        if data.len() < count * width_bytes {
            return Err(Error::ImageFormat(format!(
                "raster truncated: need {} bytes, have {}",
                count * width_bytes,
                data.len()
            )));
        }
        if width_bytes == 1 {
            data[..count].iter().map(|&b| b as usize).collect()
        } else {
            data[..2 * count]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as usize)
                .collect()
        }
    };
    if let Some(bad) = raw.iter().find(|&&v| v > maxval) {
        return Err(Error::ImageFormat(format!("sample {bad} exceeds maxval {maxval}")));
    }
    let scale = 255.0 / maxval as f64;
    GrayImage::new(width, height, raw.into_iter().map(|v| v as f64 * scale).collect())
}

/// Writes an 8-bit binary PGM; intensities are rounded.
pub fn write_pgm<W: Write>(image: &GrayImage, mut sink: W) -> Result<()> {
    write!(sink, "P5\n{} {}\n255\n", image.width, image.height)?;
    let data: Vec<u8> = image.pixels.iter().map(|p| p.round() as u8).collect();
    sink.write_all(&data)?;
    Ok(())
}
