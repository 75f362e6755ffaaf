//! Binary PGM (`P5`) ground-truth masks: 0 = normal, maxval = abnormal.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::Mask;

pub fn encode_mask(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.pixels.iter().map(|&p| if p { 255u8 } else { 0 }));
    out
}

pub fn decode_mask(bytes: &[u8], path: &Path) -> Result<Mask> {
    let err = |pos: usize, msg: &str| Error::data(path, format!("byte offset {pos}"), msg);
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // Whitespace and comments between header tokens.
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(err(pos, "truncated PGM header"));
        }
        fields.push((start, &bytes[start..pos]));
    }
    if fields[0].1 != b"P5" {
        return Err(err(0, "not a binary PGM (expected P5)"));
    }
    let number = |(at, raw): (usize, &[u8])| -> Result<u32> {
        std::str::from_utf8(raw)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(at, "bad PGM header number"))
    };
    let width = number(fields[1])?;
    let height = number(fields[2])?;
    let maxval = number(fields[3])?;
    if maxval == 0 || maxval > 255 {
        return Err(err(fields[3].0, "PGM maxval must be in 1..=255"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let count = width as usize * height as usize;
    if bytes.len() < pos + count {
        return Err(err(
            bytes.len().min(pos),
            &format!(
                "truncated payload: need {count} pixel bytes, {} available",
                bytes.len().saturating_sub(pos)
            ),
        ));
    }
    if bytes.len() > pos + count {
        return Err(err(pos + count, "trailing bytes after raster"));
    }
    let raster = &bytes[pos..];
    let mut pixels = Vec::with_capacity(count);
    for (i, &b) in raster.iter().enumerate() {
        match u32::from(b) {
            0 => pixels.push(false),
            v if v == maxval => pixels.push(true),
            v => {
                return Err(err(
                    pos + i,
                    &format!("mask value {v} is neither 0 nor {maxval}"),
                ))
            }
        }
    }
    Mask::new(width, height, pixels)
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    fs::write(path, encode_mask(mask)).map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mask(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BBox;

    #[test]
    fn round_trip() {
        let mut m = Mask::empty(5, 3);
        m.fill(BBox::new(1, 1, 2, 2));
        let bytes = encode_mask(&m);
        assert!(bytes.starts_with(b"P5\n5 3\n255\n"));
        assert_eq!(decode_mask(&bytes, Path::new("m.pgm")).unwrap(), m);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5 # mask\n2 1\n# max\n255\n".to_vec();
        bytes.extend([0, 255]);
        let m = decode_mask(&bytes, Path::new("m.pgm")).unwrap();
        assert_eq!(m.pixels, vec![false, true]);
    }

    #[test]
    fn rejects_grey_values_and_truncation() {
        let mut bytes = b"P5\n2 1\n255\n".to_vec();
        bytes.extend([0, 128]);
        assert!(decode_mask(&bytes, Path::new("m.pgm")).is_err());
        assert!(decode_mask(&bytes[..bytes.len() - 1], Path::new("m.pgm")).is_err());
        assert!(decode_mask(b"P2\n1 1\n255\n0", Path::new("m.pgm")).is_err());
    }
}
