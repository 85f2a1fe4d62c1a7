//! PGM (P2/P5) and CSV image files.
//!
//! PGM samples are mapped to `[0, 1]` by dividing by `maxval`; on save,
//! values are clamped to `[0, 1]` and quantized. CSV files hold one image
//! row per line and round-trip exactly.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::grid::{GridError, ImageGrid};

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("PGM parse error at byte {offset}: {message}")]
    Pgm { offset: usize, message: String },
    #[error("CSV parse error at line {line}, byte {offset}: {message}")]
    Csv {
        line: usize,
        offset: usize,
        message: String,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn pgm_err(offset: usize, message: impl Into<String>) -> ImageIoError {
    ImageIoError::Pgm {
        offset,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, ImageIoError> {
    fs::read(path).map_err(|source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ImageIoError> {
    fs::write(path, bytes).map_err(|source| ImageIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, ImageIoError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(pgm_err(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| pgm_err(start, format!("{what} out of range")))
    }
}

/// Parses a PGM file held in memory.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageGrid, ImageIoError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(pgm_err(0, "expected magic number P2 or P5"));
    }
    let binary = bytes[1] == b'5';
    let mut c = Cursor { bytes, pos: 2 };
    let width = c.number("width")?;
    let height = c.number("height")?;
    c.skip_space_and_comments();
    let maxval_at = c.pos;
    let maxval = c.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(pgm_err(maxval_at, "image dimensions must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(pgm_err(maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| pgm_err(maxval_at, "image dimensions overflow"))?;
    let scale = maxval as f64;
    let mut data = Vec::with_capacity(n);
    if binary {
        if c.pos >= bytes.len() || !bytes[c.pos].is_ascii_whitespace() {
            return Err(pgm_err(c.pos, "expected a single whitespace byte before raster"));
        }
        c.pos += 1;
        let bps = if maxval > 255 { 2 } else { 1 };
        let need = n * bps;
        if bytes.len() - c.pos < need {
            return Err(pgm_err(
                bytes.len(),
                format!("raster truncated: need {need} bytes, found {}", bytes.len() - c.pos),
            ));
        }
        for k in 0..n {
            let at = c.pos + k * bps;
            let v = if bps == 2 {
                u16::from_be_bytes([bytes[at], bytes[at + 1]]) as usize
            } else {
                bytes[at] as usize
            };
            if v > maxval {
                return Err(pgm_err(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64 / scale);
        }
    } else {
        for _ in 0..n {
            c.skip_space_and_comments();
            let at = c.pos;
            if at >= bytes.len() {
                return Err(pgm_err(at, format!("raster truncated: expected {n} samples")));
            }
            let v = c.number("sample")?;
            if v > maxval {
                return Err(pgm_err(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64 / scale);
        }
        c.skip_space_and_comments();
        if c.pos < bytes.len() {
            return Err(pgm_err(c.pos, "unexpected data after raster"));
        }
    }
    Ok(ImageGrid::new(width, height, 1.0, data)?)
}

pub fn load_pgm(path: &Path) -> Result<ImageGrid, ImageIoError> {
    parse_pgm(&read(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    Ascii,
    Binary,
}

/// Encodes values clamped to `[0, 1]` with the given `maxval`.
pub fn encode_pgm(grid: &ImageGrid, maxval: u16, encoding: PgmEncoding) -> Vec<u8> {
    let maxval = maxval.max(1);
    let q = |v: f64| (v.clamp(0.0, 1.0) * maxval as f64).round() as u16;
    let magic = match encoding {
        PgmEncoding::Ascii => "P2",
        PgmEncoding::Binary => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", grid.width, grid.height).into_bytes();
    match encoding {
        PgmEncoding::Ascii => {
            for row in grid.data.chunks(grid.width) {
                let line: Vec<String> = row.iter().map(|&v| q(v).to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        PgmEncoding::Binary => {
            for &v in &grid.data {
                let s = q(v);
                if maxval > 255 {
                    out.extend_from_slice(&s.to_be_bytes());
                } else {
                    out.push(s as u8);
                }
            }
        }
    }
    out
}

pub fn save_pgm(grid: &ImageGrid, path: &Path) -> Result<(), ImageIoError> {
    write(path, &encode_pgm(grid, 255, PgmEncoding::Binary))
}

/// Parses comma-separated rows of reals; all rows must have equal length.
pub fn parse_csv(text: &str) -> Result<ImageGrid, ImageIoError> {
    let mut data = Vec::new();
    let mut width = None;
    let mut height = 0;
    let mut offset = 0;
    for (ln, line) in text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += line.len();
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        let mut col = start;
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| ImageIoError::Csv {
                line: ln + 1,
                offset: col,
                message: format!("`{}` is not a number", field.trim()),
            })?;
            data.push(v);
            count += 1;
            col += field.len() + 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(ImageIoError::Csv {
                    line: ln + 1,
                    offset: start,
                    message: format!("row has {count} values, expected {w}"),
                })
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or(ImageIoError::Csv {
        line: 1,
        offset: 0,
        message: "no data rows".to_string(),
    })?;
    Ok(ImageGrid::new(width, height, 1.0, data)?)
}

pub fn load_csv(path: &Path) -> Result<ImageGrid, ImageIoError> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| ImageIoError::Csv {
        line: 0,
        offset: e.utf8_error().valid_up_to(),
        message: "file is not UTF-8".to_string(),
    })?;
    parse_csv(&text)
}

/// Shortest round-trip decimal representation, one image row per line.
pub fn encode_csv(grid: &ImageGrid) -> String {
    let mut out = String::new();
    for row in grid.data.chunks(grid.width) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn save_csv(grid: &ImageGrid, path: &Path) -> Result<(), ImageIoError> {
    write(path, encode_csv(grid).as_bytes())
}
