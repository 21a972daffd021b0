//! Matrix ingestion: Matrix Market files and a small JSON literal form.
//!
//! Matrix Market parsing is delegated to `nalgebra-sparse`. Its scalar
//! conversions are strict (an integer file cannot be read as `f64`), so the
//! header's field is inspected first and the file loaded with the matching
//! scalar type. `pattern` files carry no values and are rejected.

use std::path::Path;

use nalgebra_sparse::io::load_coo_from_matrix_market_str;
use nalgebra_sparse::CooMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LapError, Result};
use crate::linalg::{c64, CMatrix, C64};
use crate::operator::StorageKind;

/// Row-major literal `{rows, cols, entries: [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl JsonMatrix {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.entries.len() != self.rows * self.cols {
            return Err(LapError::MatrixFormat(format!(
                "{} entries for a {}x{} matrix",
                self.entries.len(),
                self.rows,
                self.cols
            )));
        }
        if self.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LapError::MatrixFormat("non-finite entry".into()));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.entries[i * self.cols + j];
            c64(re, im)
        }))
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        JsonMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

/// A matrix read from disk together with the storage its format suggests:
/// `coordinate` files are sparse, `array` files dense.
#[derive(Debug, Clone)]
pub struct LoadedMatrix {
    pub matrix: CMatrix,
    pub storage: StorageKind,
}

fn format_error(msg: impl Into<String>) -> LapError {
    LapError::MatrixFormat(msg.into())
}

fn densify<T: Copy>(coo: &CooMatrix<T>, convert: impl Fn(T) -> C64) -> CMatrix {
    let mut m = CMatrix::zeros(coo.nrows(), coo.ncols());
    for (i, j, &v) in coo.triplet_iter() {
        m[(i, j)] += convert(v);
    }
    m
}

pub fn parse_matrix_market(text: &str) -> Result<LoadedMatrix> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| format_error("empty Matrix Market input"))?
        .to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(format_error(format!("bad Matrix Market header: {header}")));
    }
    let storage = match fields[2] {
        "coordinate" => StorageKind::Sparse,
        "array" => StorageKind::Dense,
        other => return Err(format_error(format!("unknown Matrix Market format {other}"))),
    };
    let wrap = |e: nalgebra_sparse::io::MatrixMarketError| format_error(e.to_string());
    let matrix = match fields[3] {
        "real" => densify(&load_coo_from_matrix_market_str::<f64>(text).map_err(wrap)?, |v| c64(v, 0.0)),
        "integer" => densify(&load_coo_from_matrix_market_str::<i64>(text).map_err(wrap)?, |v| {
            c64(v as f64, 0.0)
        }),
        "complex" => densify(&load_coo_from_matrix_market_str::<C64>(text).map_err(wrap)?, |v| v),
        other => return Err(format_error(format!("unsupported Matrix Market field {other}"))),
    };
    Ok(LoadedMatrix { matrix, storage })
}

pub fn read_matrix_market(path: &Path) -> Result<LoadedMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_market(&text).map_err(|e| match e {
        LapError::MatrixFormat(msg) => format_error(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes a dense `complex general` array file.
pub fn write_matrix_market(path: &Path, m: &CMatrix) -> Result<()> {
    use std::fmt::Write;
    let mut out = String::from("%%MatrixMarket matrix array complex general\n");
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    // Array format is column-major.
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let _ = writeln!(out, "{:e} {:e}", m[(i, j)].re, m[(i, j)].im);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| c64(i as f64, j as f64 - 1.0));
        let j = JsonMatrix::from_matrix(&m);
        assert_eq!(j.entries[1], [0.0, 0.0]);
        assert_eq!(j.to_matrix().unwrap(), m);
        let text = serde_json::to_string(&j).unwrap();
        let back: JsonMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn json_size_mismatch() {
        let j = JsonMatrix {
            rows: 2,
            cols: 2,
            entries: vec![[1.0, 0.0]],
        };
        assert!(matches!(j.to_matrix(), Err(LapError::MatrixFormat(_))));
    }

    #[test]
    fn coordinate_real_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2.0\n2 1 -1\n2 2 2\n3 3 5\n";
        let l = parse_matrix_market(text).unwrap();
        assert_eq!(l.storage, StorageKind::Sparse);
        assert_eq!(l.matrix[(0, 1)], c64(-1.0, 0.0));
        assert_eq!(l.matrix[(1, 0)], c64(-1.0, 0.0));
        assert_eq!(l.matrix[(2, 2)], c64(5.0, 0.0));
    }

    #[test]
    fn integer_and_complex_hermitian() {
        let text = "%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 3\n2 2 -4\n";
        let l = parse_matrix_market(text).unwrap();
        assert_eq!(l.matrix[(1, 1)], c64(-4.0, 0.0));

        let text = "%%MatrixMarket matrix coordinate complex hermitian\n2 2 3\n1 1 1 0\n2 1 0 2\n2 2 3 0\n";
        let l = parse_matrix_market(text).unwrap();
        assert_eq!(l.matrix[(1, 0)], c64(0.0, 2.0));
        assert_eq!(l.matrix[(0, 1)], c64(0.0, -2.0));
    }

    #[test]
    fn array_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        let m = CMatrix::from_fn(3, 2, |i, j| c64(i as f64 + 0.25, -(j as f64)));
        write_matrix_market(&path, &m).unwrap();
        let l = read_matrix_market(&path).unwrap();
        assert_eq!(l.storage, StorageKind::Dense);
        assert_eq!(l.matrix, m);
    }

    #[test]
    fn pattern_and_garbage_rejected() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n";
        assert!(matches!(parse_matrix_market(text), Err(LapError::MatrixFormat(_))));
        assert!(matches!(parse_matrix_market("hello"), Err(LapError::MatrixFormat(_))));
    }
}
