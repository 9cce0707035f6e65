//! Binary NetPBM codec: P5 (grayscale) and P6 (RGB), maxval 255 only.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit raster with interleaved channels, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::geometry(format!("image dims {width}x{height} must be positive")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::shape(format!("images have 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::shape(format!(
                "{width}x{height}x{channels} image needs {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn rgb(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 3, data)
    }
}

pub fn encode_netpbm(image: &Image) -> Vec<u8> {
    let magic = if image.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Codec {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a decimal number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Codec {
                offset: start,
                reason: "number out of range".into(),
            })
    }
}

pub fn decode_netpbm(bytes: &[u8]) -> Result<Image> {
    let mut hdr = Header { bytes, pos: 0 };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(hdr.err("expected magic P5 or P6")),
    };
    hdr.pos = 2;
    let width = hdr.number()?;
    let height = hdr.number()?;
    hdr.skip_space_and_comments();
    let maxval_at = hdr.pos;
    let maxval = hdr.number()?;
    if maxval != 255 {
        return Err(Error::Codec {
            offset: maxval_at,
            reason: format!("unsupported maxval {maxval}, only 255 is accepted"),
        });
    }
    if !bytes.get(hdr.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(hdr.err("expected a single whitespace byte before the raster"));
    }
    hdr.pos += 1;
    if width == 0 || height == 0 {
        return Err(hdr.err(format!("degenerate dimensions {width}x{height}")));
    }
    let need = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| hdr.err("dimensions overflow"))?;
    let body = &bytes[hdr.pos..];
    if body.len() < need {
        return Err(Error::Codec {
            offset: bytes.len(),
            reason: format!("truncated raster: expected {need} bytes, found {}", body.len()),
        });
    }
    Image::new(width, height, channels, body[..need].to_vec())
}

pub fn read_netpbm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_netpbm(&bytes)
}

pub fn write_netpbm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_netpbm(image)).map_err(|e| Error::io(path, e))
}
