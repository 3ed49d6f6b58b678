//! 8-bit PGM (P2 ASCII / P5 binary) reading and writing.

use std::fs;
use std::path::Path;

use crate::error::PgmError;
use crate::image::Image;

const MAXVAL: u32 = 255;

/// Quantizes an intensity for storage: clamp to `[0, 255]`, round half away from zero.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image, PgmError> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|source| PgmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_pgm(&data)
}

pub fn save_pgm(img: &Image, path: impl AsRef<Path>, binary: bool) -> Result<(), PgmError> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img, binary)).map_err(|source| PgmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn encode_pgm(img: &Image, binary: bool) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    if binary {
        let mut out = format!("P5\n{w} {h}\n{MAXVAL}\n").into_bytes();
        out.extend(img.pixels().iter().map(|&v| quantize(v)));
        out
    } else {
        let mut out = format!("P2\n{w} {h}\n{MAXVAL}\n");
        for r in 0..h {
            let line: Vec<String> = img
                .row(r)
                .iter()
                .map(|&v| quantize(v).to_string())
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out.into_bytes()
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Option<&'a [u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.data.len()
            && !self.data[self.pos].is_ascii_whitespace()
            && self.data[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn header_number(&mut self, field: &str) -> Result<u32, PgmError> {
        let tok = self
            .next_token()
            .ok_or_else(|| PgmError::MalformedHeader(format!("missing {field}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                PgmError::MalformedHeader(format!(
                    "{field} is not a number: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

pub fn decode_pgm(data: &[u8]) -> Result<Image, PgmError> {
    if data.len() < 2 {
        return Err(PgmError::MalformedHeader("file too short".into()));
    }
    let binary = match &data[..2] {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(PgmError::BadMagic(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut cur = Cursor { data, pos: 2 };
    if cur.pos < data.len() && !data[cur.pos].is_ascii_whitespace() && data[cur.pos] != b'#' {
        return Err(PgmError::MalformedHeader(
            "magic number must be followed by whitespace".into(),
        ));
    }
    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if maxval != MAXVAL {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    let expected = width * height;
    let pixels: Vec<f64> = if binary {
        // exactly one whitespace byte separates maxval from the raster
        if cur.pos >= data.len() || !data[cur.pos].is_ascii_whitespace() {
            return Err(PgmError::Truncated { expected, found: 0 });
        }
        let raster = &data[cur.pos + 1..];
        if raster.len() < expected {
            return Err(PgmError::Truncated {
                expected,
                found: raster.len(),
            });
        }
        raster[..expected].iter().map(|&b| f64::from(b)).collect()
    } else {
        let mut values = Vec::with_capacity(expected);
        while values.len() < expected {
            let Some(tok) = cur.next_token() else {
                return Err(PgmError::Truncated {
                    expected,
                    found: values.len(),
                });
            };
            let v = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| {
                    PgmError::MalformedHeader(format!(
                        "invalid sample {:?}",
                        String::from_utf8_lossy(tok)
                    ))
                })?;
            if v > MAXVAL {
                return Err(PgmError::SampleOutOfRange(v));
            }
            values.push(f64::from(v));
        }
        values
    };
    Ok(Image::from_raw(width, height, pixels))
}
