//! Coordinate-format text export: a header `rows cols nnz`, then one `i j value`
//! triplet per line, 0-based.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Entries with `|a_ij| <= SPARSE_DROP_TOL * max |a|` are not written.
pub const SPARSE_DROP_TOL: f64 = 1e-14;

pub fn sparse_text<T: Scalar>(a: &DMatrix<T>) -> String {
    let amax = a.iter().fold(0.0f64, |m, x| m.max(x.as_f64().abs()));
    let cut = amax * SPARSE_DROP_TOL;
    let mut entries = Vec::new();
    // column-major walk gives a stable order; sort row-major for readability
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)].as_f64();
            if v.abs() > cut && v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    entries.sort_by_key(|&(i, j, _)| (i, j));
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(s, "{i} {j} {v:.17e}");
    }
    s
}

pub fn write_sparse<T: Scalar>(path: &Path, a: &DMatrix<T>) -> Result<()> {
    std::fs::write(path, sparse_text(a)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_sparse(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty sparse file".into()))?;
    let h: Vec<usize> = header
        .split_whitespace()
        .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad header `{header}`"))))
        .collect::<Result<_>>()?;
    if h.len() != 3 {
        return Err(Error::Parse(format!("bad header `{header}`")));
    }
    let mut a = DMatrix::zeros(h[0], h[1]);
    let mut count = 0;
    for (ln, line) in lines.enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Parse(format!("line {}: `{line}`", ln + 2));
        if f.len() != 3 {
            return Err(bad());
        }
        let i: usize = f[0].parse().map_err(|_| bad())?;
        let j: usize = f[1].parse().map_err(|_| bad())?;
        let v: f64 = f[2].parse().map_err(|_| bad())?;
        if i >= h[0] || j >= h[1] {
            return Err(bad());
        }
        a[(i, j)] = v;
        count += 1;
    }
    if count != h[2] {
        return Err(Error::Parse(format!("header announces {} entries, found {count}", h[2])));
    }
    Ok(a)
}

pub fn read_sparse(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_sparse(&text)
}
