//! File formats for features, pairs and labels.
//!
//! * CSV features: one sample per line, comma-separated decimal floats, with
//!   an optional first line `# dim=D count=N`.
//! * Binary features: `CMF1`, little-endian `u64` N, `u64` D, then `N·D`
//!   little-endian `f64` values in row-major order.
//! * Pairs: CSV lines `i,j,y` with 0-based sample indices and `y ∈ {0,1}`.
//! * Labels: one non-negative integer identity id per line.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::matrix::FeatureMatrix;
use super::pairs::{Pair, PairSet};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"CMF1";
const BINARY_HEADER_LEN: usize = 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    Binary,
}

impl FeatureFormat {
    /// Sniffs the format from the first bytes of `path`.
    pub fn detect(path: &Path) -> Result<Self> {
        let mut head = [0u8; 4];
        let mut file = fs::File::open(path)?;
        let n = file.read(&mut head)?;
        Ok(if n == 4 && &head == BINARY_MAGIC {
            FeatureFormat::Binary
        } else {
            FeatureFormat::Csv
        })
    }

    /// Picks a format from the file extension; `.bin` and `.cmf` are binary.
    pub fn from_extension(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("cmf") => FeatureFormat::Binary,
            _ => FeatureFormat::Csv,
        }
    }
}

pub fn load_features(path: &Path, format: FeatureFormat) -> Result<FeatureMatrix> {
    match format {
        FeatureFormat::Csv => read_csv(BufReader::new(fs::File::open(path)?)),
        FeatureFormat::Binary => read_binary(&fs::read(path)?),
    }
}

pub fn save_features(path: &Path, features: &FeatureMatrix, format: FeatureFormat) -> Result<()> {
    let mut out = Vec::new();
    match format {
        FeatureFormat::Csv => write_csv(&mut out, features)?,
        FeatureFormat::Binary => write_binary(&mut out, features)?,
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut dim = None;
    let mut count = None;
    for token in line.trim_start_matches('#').split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("bad header token {token:?}"),
        })?;
        let value: usize = value.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("bad header value {token:?}"),
        })?;
        match key {
            "dim" => dim = Some(value),
            "count" => count = Some(value),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unknown header key {key:?}"),
                })
            }
        }
    }
    match (dim, count) {
        (Some(d), Some(n)) => Ok((d, n)),
        _ => Err(Error::Parse {
            line: lineno,
            message: "header must be \"# dim=D count=N\"".into(),
        }),
    }
}

pub fn read_csv<R: BufRead>(reader: R) -> Result<FeatureMatrix> {
    let mut header = None;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if header.is_some() || rows > 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "header is only allowed on the first line".into(),
                });
            }
            header = Some(parse_header(trimmed, lineno)?);
            continue;
        }
        let start = data.len();
        for (col, field) in trimmed.split(',').enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("column {col}: {:?} is not a number", field.trim()),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { row: rows, col });
            }
            data.push(value);
        }
        let width = data.len() - start;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {c} columns, found {width}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Malformed("feature file has no samples".into()))?;
    if let Some((dim, count)) = header {
        if dim != cols {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: cols,
            });
        }
        if count != rows {
            return Err(Error::DimensionMismatch {
                expected: count,
                actual: rows,
            });
        }
    }
    FeatureMatrix::new(rows, cols, data)
}

/// Writes the header line followed by one row per line. Values use the
/// shortest representation that parses back to the same bits.
pub fn write_csv<W: Write>(mut out: W, features: &FeatureMatrix) -> Result<()> {
    writeln!(out, "# dim={} count={}", features.dim(), features.count())?;
    for row in features.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b",")?;
            }
            write!(out, "{v}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_binary(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < BINARY_HEADER_LEN {
        return Err(Error::Malformed(format!(
            "binary feature file is {} bytes, header needs {BINARY_HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..4] != BINARY_MAGIC {
        return Err(Error::Malformed(
            "binary feature file lacks CMF1 magic".into(),
        ));
    }
    let count = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let dim = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let payload = &bytes[BINARY_HEADER_LEN..];
    let expected = count
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Malformed(format!("header shape {count}x{dim} overflows")))?;
    if payload.len() as u64 != expected {
        return Err(Error::Malformed(format!(
            "header declares {count}x{dim} ({expected} payload bytes) but payload has {} bytes",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(count as usize, dim as usize, data)
}

pub fn write_binary<W: Write>(mut out: W, features: &FeatureMatrix) -> Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(features.count() as u64).to_le_bytes())?;
    out.write_all(&(features.dim() as u64).to_le_bytes())?;
    for v in features.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_pairs<R: BufRead>(reader: R) -> Result<PairSet> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad(format!(
                "expected i,j,y, found {} fields",
                fields.len()
            )));
        }
        let i = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", fields[0])))?;
        let j = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", fields[1])))?;
        let matched = match fields[2] {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("label must be 0 or 1, found {other:?}"))),
        };
        if i == j {
            return Err(bad(format!("pair ({i},{j}) pairs a sample with itself")));
        }
        pairs.push(Pair { i, j, matched });
    }
    Ok(PairSet::new(pairs))
}

pub fn write_pairs<W: Write>(mut out: W, pairs: &PairSet) -> Result<()> {
    for p in pairs.iter() {
        writeln!(out, "{},{},{}", p.i, p.j, u8::from(p.matched))?;
    }
    Ok(())
}

pub fn load_pairs(path: &Path) -> Result<PairSet> {
    read_pairs(BufReader::new(fs::File::open(path)?))
}

pub fn save_pairs(path: &Path, pairs: &PairSet) -> Result<()> {
    let mut out = Vec::new();
    write_pairs(&mut out, pairs)?;
    fs::write(path, out)?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<Vec<u32>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        labels.push(trimmed.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("bad identity label {trimmed:?}"),
        })?);
    }
    Ok(labels)
}

pub fn save_labels(path: &Path, labels: &[u32]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 4);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
