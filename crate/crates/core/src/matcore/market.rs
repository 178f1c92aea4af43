use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::SymmetricCsc;
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads a `coordinate real symmetric` (or `integer symmetric`) Matrix Market
/// stream. Entries from either triangle are accepted; duplicates are summed.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SymmetricCsc> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (lineno, header) = match lines.next() {
        Some((k, l)) => (k, l?),
        None => return Err(parse_err(1, "empty input")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(lineno, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>' header"));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(lineno, format!("unsupported object/format '{} {}'", tokens[1], tokens[2])));
    }
    if !matches!(tokens[3].as_str(), "real" | "double" | "integer") {
        return Err(parse_err(lineno, format!("unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "symmetric" {
        return Err(parse_err(lineno, format!("matrix declared '{}', expected symmetric", tokens[4])));
    }

    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "size line needs 'rows cols entries'"));
                }
                let nums: Vec<usize> = fields
                    .iter()
                    .map(|f| f.parse::<usize>().map_err(|_| parse_err(lineno, format!("bad integer '{f}'"))))
                    .collect::<Result<_>>()?;
                if nums[0] != nums[1] {
                    return Err(parse_err(lineno, format!("matrix is {}x{}, expected square", nums[0], nums[1])));
                }
                size = Some((nums[0], nums[2]));
                entries.reserve(nums[2]);
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "entry line needs 'row col value'"));
                }
                let idx = |f: &str| -> Result<usize> {
                    let v: usize = f.parse().map_err(|_| parse_err(lineno, format!("bad index '{f}'")))?;
                    if v == 0 || v > n {
                        return Err(parse_err(lineno, format!("index {v} outside 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let i = idx(fields[0])?;
                let j = idx(fields[1])?;
                let v: f64 = fields[2].parse().map_err(|_| parse_err(lineno, format!("bad value '{}'", fields[2])))?;
                entries.push((i, j, v));
            }
        }
    }
    let (n, declared) = size.ok_or_else(|| parse_err(lineno, "missing size line"))?;
    if entries.len() != declared {
        return Err(parse_err(0, format!("size line declares {declared} entries, found {}", entries.len())));
    }
    SymmetricCsc::from_triplets(n, entries)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<SymmetricCsc> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Writes the lower triangle in column-major order. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix_market<W: Write>(m: &SymmetricCsc, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.n(), m.n(), m.nnz())?;
    for (i, j, v) in m.iter() {
        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_file(m: &SymmetricCsc, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(m, BufWriter::new(File::create(path)?))
}
