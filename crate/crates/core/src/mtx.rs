//! Matrix Market coordinate format, real general matrices only.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub fn write<W: Write>(mut out: W, a: &SparseMatrix) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read<R: BufRead>(input: R) -> Result<SparseMatrix> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty file".into()))??;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse(format!("bad header: {header}")));
    }
    if fields[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported format {}", fields[2])));
    }
    let pattern = match fields[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(Error::Parse(format!("unsupported field {other}"))),
    };
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trips = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            tok.next()
                .ok_or_else(|| Error::Parse(format!("missing {what} in '{line}'")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{what}: {e}")))
        };
        match size {
            None => {
                let r = next_usize("rows")?;
                let c = next_usize("cols")?;
                let nnz = next_usize("nnz")?;
                size = Some((r, c, nnz));
                trips.reserve(nnz);
            }
            Some(_) => {
                let i = next_usize("row index")?;
                let j = next_usize("column index")?;
                let v = if pattern {
                    1.0
                } else {
                    tok.next()
                        .ok_or_else(|| Error::Parse(format!("missing value in '{line}'")))?
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("value: {e}")))?
                };
                if i == 0 || j == 0 {
                    return Err(Error::Parse("indices are 1-based".into()));
                }
                trips.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trips.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = if symmetric {
        trips.iter().filter(|t| t.0 <= t.1).count()
    } else {
        trips.len()
    };
    if stored != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    SparseMatrix::from_triplets(r, c, &trips)
}

pub fn write_file(path: impl AsRef<std::path::Path>, a: &SparseMatrix) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<SparseMatrix> {
    let f = std::fs::File::open(path)?;
    read(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = SparseMatrix::from_triplets(3, 2, &[(0, 1, 0.1), (2, 0, -3.5), (1, 1, 1e-300)])
            .unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &a).unwrap();
        let b = read(&buf[..]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_and_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% c\n2 2 2\n1 1\n2 1\n";
        let a = read(text.as_bytes()).unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 1.0);
    }

    #[test]
    fn rejects_wrong_count() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read(text.as_bytes()).is_err());
    }
}
