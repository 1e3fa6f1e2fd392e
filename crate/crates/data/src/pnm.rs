//! Binary netpbm codecs: P6 (RGB) and P5 (grayscale), maxval up to 255.

use crate::{DataError, Result};
use std::io::Write;
use std::path::Path;

/// Decoded 8-bit image, interleaved channels (1 for PGM, 3 for PPM).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image8 {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub maxval: u16,
    pub data: Vec<u8>,
}

impl Image8 {
    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            channels: 1,
            maxval: 255,
            data,
        }
    }

    pub fn rgb(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), 3 * width * height);
        Self {
            width,
            height,
            channels: 3,
            maxval: 255,
            data,
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn err(&self, what: impl Into<String>) -> DataError {
        DataError::Malformed {
            path: self.path.to_path_buf(),
            offset: self.pos,
            what: what.into(),
        }
    }

    /// Skips whitespace and `#` comment lines between header tokens.
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn ascii_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(format!("unparsable {what}")))
    }
}

/// Reads a binary PPM (P6) or PGM (P5); the magic decides the channel count.
pub fn read_pnm(path: &Path) -> Result<Image8> {
    let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if bytes.len() < 2 {
        return Err(cur.err("missing magic"));
    }
    let channels = match &bytes[..2] {
        b"P6" => 3,
        b"P5" => 1,
        other => {
            return Err(cur.err(format!(
                "unsupported magic {:?} (want P5 or P6)",
                String::from_utf8_lossy(other)
            )))
        }
    };
    cur.pos = 2;
    let width = cur.ascii_uint("width")?;
    let height = cur.ascii_uint("height")?;
    let maxval = cur.ascii_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.err("zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(cur.err(format!("maxval {maxval} outside 1..=255")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(cur.err("expected single whitespace before payload"));
    }
    cur.pos += 1;
    let expected = width * height * channels;
    let got = bytes.len() - cur.pos;
    if got < expected {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len(),
            expected,
            got,
        });
    }
    if got > expected {
        return Err(cur.err(format!("{} trailing bytes after payload", got - expected)));
    }
    Ok(Image8 {
        width,
        height,
        channels,
        maxval: maxval as u16,
        data: bytes[cur.pos..].to_vec(),
    })
}

fn write_binary(path: &Path, magic: &str, img: &Image8) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
    }
    let mut out = Vec::with_capacity(img.data.len() + 32);
    write!(out, "{magic}\n{} {}\n255\n", img.width, img.height).expect("vec write");
    out.extend_from_slice(&img.data);
    std::fs::write(path, out).map_err(|e| DataError::io(path, e))
}

pub fn write_ppm(path: &Path, img: &Image8) -> Result<()> {
    assert_eq!(img.channels, 3, "write_ppm expects RGB");
    write_binary(path, "P6", img)
}

pub fn write_pgm(path: &Path, img: &Image8) -> Result<()> {
    assert_eq!(img.channels, 1, "write_pgm expects grayscale");
    write_binary(path, "P5", img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_comments_are_skipped() {
        let dir = std::env::temp_dir().join("groupsod_pnm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("comment.pgm");
        std::fs::write(&path, b"P5\n# a comment\n2 1\n255\n\x10\x20").unwrap();
        let img = read_pnm(&path).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(img.data, vec![0x10, 0x20]);
    }

    #[test]
    fn bad_magic_rejected_at_offset_zero() {
        let dir = std::env::temp_dir().join("groupsod_pnm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.pgm");
        std::fs::write(&path, b"P2\n2 1\n255\n..").unwrap();
        match read_pnm(&path) {
            Err(DataError::Malformed { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_counts() {
        let dir = std::env::temp_dir().join("groupsod_pnm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("short.pgm");
        std::fs::write(&path, b"P5\n2 2\n255\n\x01\x02").unwrap();
        match read_pnm(&path) {
            Err(DataError::Truncated { expected, got, .. }) => {
                assert_eq!((expected, got), (4, 2));
            }
            other => panic!("expected truncated, got {other:?}"),
        }
    }
}
