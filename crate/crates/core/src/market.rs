//! Matrix Market reader (coordinate and array formats, real or integer fields).

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

/// Loads a Matrix Market file. Duplicate coordinates are summed and symmetric
/// or skew-symmetric storage is expanded to the full matrix.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_matrix_market(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Parses Matrix Market content from any buffered reader.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (line_no, header) = match lines.next() {
        Some((n, l)) => (n, l.map_err(io_err)?),
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    };
    let (layout, symmetry) = parse_header(line_no, &header)?;

    // size line: first non-comment, non-blank line
    let mut size: Option<(usize, Vec<usize>)> = None;
    for (n, line) in lines.by_ref() {
        let line = line.map_err(io_err)?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let nums = t
            .split_whitespace()
            .map(|tok| tok.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Parse {
                line: n,
                msg: format!("malformed size line `{t}`"),
            })?;
        size = Some((n, nums));
        break;
    }
    let (size_line, dims) = size.ok_or(Error::Parse {
        line: line_no,
        msg: "missing size line".into(),
    })?;
    let expected_fields = match layout {
        Layout::Coordinate => 3,
        Layout::Array => 2,
    };
    if dims.len() != expected_fields {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("size line needs {expected_fields} integers, found {}", dims.len()),
        });
    }
    let (m, n) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && m != n {
        return Err(Error::Parse {
            line: size_line,
            msg: "symmetric storage requires a square matrix".into(),
        });
    }

    let mut raw: Vec<(usize, usize, f64)> = Vec::new();
    let mut last_line = size_line;
    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            raw.reserve(nnz);
            for (ln, line) in lines {
                let line = line.map_err(io_err)?;
                last_line = ln;
                let t = line.trim();
                if t.is_empty() || t.starts_with('%') {
                    continue;
                }
                let mut toks = t.split_whitespace();
                let bad = |what: &str| Error::Parse {
                    line: ln,
                    msg: format!("{what} in `{t}`"),
                };
                let i: usize = toks
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("bad row index"))?;
                let j: usize = toks
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("bad column index"))?;
                let v = toks
                    .next()
                    .and_then(parse_value)
                    .ok_or_else(|| bad("bad value"))?;
                if toks.next().is_some() {
                    return Err(bad("trailing tokens"));
                }
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(bad("index out of range"));
                }
                if raw.len() == nnz {
                    return Err(bad("more entries than declared"));
                }
                raw.push((i - 1, j - 1, v));
            }
            if raw.len() != nnz {
                return Err(Error::Parse {
                    line: last_line,
                    msg: format!("expected {nnz} entries, found {}", raw.len()),
                });
            }
        }
        Layout::Array => {
            // column-major; packed lower triangle for symmetric storage
            let positions: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..n).flat_map(|j| (0..m).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..n).flat_map(|j| (j..m).map(move |i| (i, j))).collect(),
                Symmetry::SkewSymmetric => {
                    (0..n).flat_map(|j| (j + 1..m).map(move |i| (i, j))).collect()
                }
            };
            let mut next = positions.iter();
            for (ln, line) in lines {
                let line = line.map_err(io_err)?;
                last_line = ln;
                let t = line.trim();
                if t.is_empty() || t.starts_with('%') {
                    continue;
                }
                let v = parse_value(t).ok_or_else(|| Error::Parse {
                    line: ln,
                    msg: format!("bad value `{t}`"),
                })?;
                let &(i, j) = next.next().ok_or_else(|| Error::Parse {
                    line: ln,
                    msg: "more entries than the declared size".into(),
                })?;
                if v != 0.0 {
                    raw.push((i, j, v));
                }
            }
            if next.next().is_some() {
                return Err(Error::Parse {
                    line: last_line,
                    msg: format!("expected {} values", positions.len()),
                });
            }
        }
    }

    let mut entries = Vec::with_capacity(raw.len() * 2);
    for (i, j, v) in raw {
        match symmetry {
            Symmetry::General => entries.push((i, j, v)),
            Symmetry::Symmetric => {
                entries.push((i, j, v));
                if i != j {
                    entries.push((j, i, v));
                }
            }
            Symmetry::SkewSymmetric => {
                if i == j {
                    if v != 0.0 {
                        return Err(Error::Parse {
                            line: last_line,
                            msg: "nonzero diagonal entry in a skew-symmetric matrix".into(),
                        });
                    }
                    continue;
                }
                entries.push((i, j, v));
                entries.push((j, i, -v));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, entries)
}

fn parse_header(line_no: usize, header: &str) -> Result<(Layout, Symmetry)> {
    let toks: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("malformed header `{}`", header.trim()),
        });
    }
    let layout = match toks[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(Error::UnsupportedField(other.to_string())),
    };
    match toks[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(Error::UnsupportedField(other.to_string())),
    }
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(Error::UnsupportedField(other.to_string())),
    };
    Ok((layout, symmetry))
}

fn parse_value(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn io_err(source: std::io::Error) -> Error {
    Error::Io {
        path: Default::default(),
        source,
    }
}
