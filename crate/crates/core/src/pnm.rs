//! Netpbm bitmaps and graymaps.
//!
//! Masks are read from plain bitmaps (`P1`, where `1` marks a set pixel).
//! Count images go out as graymaps, plain (`P2`) or raw (`P5`), with the
//! maximum value equal to the largest pixel so that files are bit-exact
//! functions of the counts.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::raster::Raster;

const MAX_GRAY: u64 = u16::MAX as u64;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Byte cursor that understands netpbm whitespace and `#` comments.
struct Tokens<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.buf.get(self.pos) {
            if b == b'#' {
                while self.buf.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> Option<&'a [u8]> {
        self.skip_space();
        let start = self.pos;
        while self.buf.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.buf[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        let w = self.word().ok_or_else(|| format_err(format!("missing {what}")))?;
        std::str::from_utf8(w)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(format!("bad {what}: {:?}", String::from_utf8_lossy(w))))
    }

    /// A single `0`/`1`; plain bitmaps may omit whitespace between bits.
    fn bit(&mut self) -> Result<bool> {
        self.skip_space();
        match self.buf.get(self.pos) {
            Some(b'0') => {
                self.pos += 1;
                Ok(false)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(true)
            }
            Some(&b) => Err(format_err(format!("unexpected byte {b:#04x} in bitmap"))),
            None => Err(format_err("bitmap data ends early")),
        }
    }
}

fn header(tok: &mut Tokens<'_>) -> Result<(usize, usize)> {
    let w = tok.number("width")? as usize;
    let h = tok.number("height")? as usize;
    if w == 0 || h == 0 {
        return Err(format_err("zero image dimension"));
    }
    Ok((w, h))
}

/// Read a plain (`P1`) bitmap.
pub fn read_pbm(mut r: impl Read) -> Result<Raster<bool>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut tok = Tokens { buf: &buf, pos: 0 };
    if tok.word() != Some(b"P1") {
        return Err(format_err("not a plain PBM (P1) file"));
    }
    let (w, h) = header(&mut tok)?;
    let bits = (0..w * h).map(|_| tok.bit()).collect::<Result<Vec<_>>>()?;
    Raster::from_vec(w, h, bits)
}

/// Write a plain (`P1`) bitmap, one image row per line.
pub fn write_pbm(mut w: impl Write, mask: &Raster<bool>) -> Result<()> {
    writeln!(w, "P1\n{} {}", mask.width(), mask.height())?;
    for row in mask.as_slice().chunks(mask.width()) {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrayEncoding {
    /// `P2`, decimal text.
    #[default]
    Plain,
    /// `P5`, one byte per pixel below 256, otherwise two bytes big-endian.
    Raw,
}

/// Read a `P2` or `P5` graymap.
pub fn read_pgm(mut r: impl Read) -> Result<Raster<u64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut tok = Tokens { buf: &buf, pos: 0 };
    let raw = match tok.word() {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(format_err("not a PGM (P2/P5) file")),
    };
    let (w, h) = header(&mut tok)?;
    let maxval = tok.number("maxval")?;
    if maxval == 0 || maxval > MAX_GRAY {
        return Err(format_err(format!("maxval {maxval} outside 1..=65535")));
    }
    let n = w * h;
    let data = if raw {
        // exactly one whitespace byte separates the header from the samples
        let start = tok.pos + 1;
        let width = if maxval < 256 { 1 } else { 2 };
        let body = buf
            .get(start..start + n * width)
            .ok_or_else(|| format_err("graymap data ends early"))?;
        if width == 1 {
            body.iter().map(|&b| b as u64).collect::<Vec<_>>()
        } else {
            body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u64).collect()
        }
    } else {
        (0..n).map(|_| tok.number("sample")).collect::<Result<Vec<_>>>()?
    };
    if let Some(v) = data.iter().find(|&&v| v > maxval) {
        return Err(format_err(format!("sample {v} exceeds maxval {maxval}")));
    }
    Raster::from_vec(w, h, data)
}

/// Write a graymap whose maxval is the largest sample (at least 1).
pub fn write_pgm(mut w: impl Write, img: &Raster<u64>, encoding: GrayEncoding) -> Result<()> {
    let maxval = img.as_slice().iter().copied().max().unwrap_or(0).max(1);
    if maxval > MAX_GRAY {
        return Err(format_err(format!("sample {maxval} does not fit a graymap")));
    }
    match encoding {
        GrayEncoding::Plain => {
            writeln!(w, "P2\n{} {}\n{maxval}", img.width(), img.height())?;
            for row in img.as_slice().chunks(img.width()) {
                let line: Vec<String> = row.iter().map(u64::to_string).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
        GrayEncoding::Raw => {
            write!(w, "P5\n{} {}\n{maxval}\n", img.width(), img.height())?;
            let mut body = Vec::with_capacity(img.len() * 2);
            for &v in img.as_slice() {
                if maxval < 256 {
                    body.push(v as u8);
                } else {
                    body.extend_from_slice(&(v as u16).to_be_bytes());
                }
            }
            w.write_all(&body)?;
        }
    }
    Ok(())
}
