//! `LSR1` packed record files.
//!
//! Little-endian layout: magic `LSR1`, `u32` record count, then per record
//! `u16` id length, UTF-8 id, `u32` H, `u32` W, `u32` orig_h, `u32` orig_w,
//! `u8` channels (always 3), `H*W*3` image bytes and `H*W` mask bytes (0/1).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::Sample;

pub const RECORD_MAGIC: &[u8; 4] = b"LSR1";

pub fn encode_records(samples: &[Sample]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(RECORD_MAGIC);
    let count = u32::try_from(samples.len()).map_err(|_| Error::CorruptRecord("too many records".into()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for s in samples {
        s.validate()?;
        let id = s.id.as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::CorruptRecord(format!("id of {} bytes is too long", id.len())))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(id);
        for dim in [s.height, s.width, s.orig_h, s.orig_w] {
            let dim = u32::try_from(dim).map_err(|_| Error::CorruptRecord(format!("dimension {dim} overflows u32")))?;
            out.extend_from_slice(&dim.to_le_bytes());
        }
        out.push(3);
        out.extend_from_slice(&s.image);
        out.extend_from_slice(&s.mask);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::CorruptRecord(format!("truncated: needed {n} bytes at offset {}", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_records(bytes: &[u8]) -> Result<Vec<Sample>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(RECORD_MAGIC.as_slice()) {
        return Err(Error::CorruptRecord("bad magic, expected LSR1".into()));
    }
    let count = r.u32()? as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 16));
    for index in 0..count {
        let id_len = r.u16()? as usize;
        let id = std::str::from_utf8(r.take(id_len)?)
            .map_err(|_| Error::CorruptRecord(format!("record {index}: id is not UTF-8")))?
            .to_owned();
        let [height, width, orig_h, orig_w] = [r.u32()?, r.u32()?, r.u32()?, r.u32()?].map(|v| v as usize);
        let channels = r.take(1)?[0];
        if channels != 3 {
            return Err(Error::CorruptRecord(format!("record {id}: {channels} channels, expected 3")));
        }
        let area = height
            .checked_mul(width)
            .ok_or_else(|| Error::CorruptRecord(format!("record {id}: dimensions overflow")))?;
        let image = r.take(area.saturating_mul(3))?.to_vec();
        let mask = r.take(area)?.to_vec();
        if let Some(&bad) = mask.iter().find(|&&v| v > 1) {
            return Err(Error::CorruptRecord(format!("record {id}: mask byte {bad} is not 0 or 1")));
        }
        let sample = Sample {
            id,
            height,
            width,
            image,
            mask,
            orig_h,
            orig_w,
        };
        sample
            .validate()
            .map_err(|e| Error::CorruptRecord(format!("record {index}: {e}")))?;
        samples.push(sample);
    }
    if r.pos != bytes.len() {
        return Err(Error::CorruptRecord(format!(
            "count mismatch: {} trailing bytes after {count} records",
            bytes.len() - r.pos
        )));
    }
    Ok(samples)
}

pub fn pack_records(samples: &[Sample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_records(samples)?).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_records(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str) -> Sample {
        Sample {
            id: id.into(),
            height: 2,
            width: 3,
            image: (0..18).collect(),
            mask: vec![0, 1, 1, 0, 0, 1],
            orig_h: 20,
            orig_w: 30,
        }
    }

    #[test]
    fn empty_file_is_eight_bytes() {
        let bytes = encode_records(&[]).unwrap();
        assert_eq!(bytes, b"LSR1\0\0\0\0");
        assert!(decode_records(&bytes).unwrap().is_empty());
    }

    #[test]
    fn roundtrip() {
        let samples = vec![sample("a"), sample("lesion_0002")];
        assert_eq!(decode_records(&encode_records(&samples).unwrap()).unwrap(), samples);
    }

    #[test]
    fn bad_mask_byte() {
        let mut bytes = encode_records(&[sample("a")]).unwrap();
        let last = bytes.len() - 1;
        bytes[last] = 7;
        assert!(matches!(decode_records(&bytes), Err(Error::CorruptRecord(_))));
    }

    #[test]
    fn count_mismatch_and_bad_magic() {
        let mut bytes = encode_records(&[sample("a")]).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode_records(&bytes), Err(Error::CorruptRecord(_))));
        bytes[4] = 0;
        assert!(matches!(decode_records(&bytes), Err(Error::CorruptRecord(_))));
        assert!(matches!(decode_records(b"TFR1\0\0\0\0"), Err(Error::CorruptRecord(_))));
    }
}
