//! Plain-text matrix format: a `# rows cols` header, then one comma-separated row
//! per line. Values are written with the shortest representation that parses back
//! to the same number.

use std::fmt::Write as _;

use crate::error::{CamError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub fn format_matrix<T: Scalar>(m: &Matrix<T>) -> String {
    let mut out = format!("# {} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(i, j)]).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Parses the matrix format. Fields may be separated by commas, whitespace or both;
/// blank lines and further `#` lines are ignored.
pub fn parse_matrix<T: Scalar + std::str::FromStr>(text: &str) -> Result<Matrix<T>> {
    let mut lines = text.lines().enumerate();
    let (rows, cols) = loop {
        let (no, line) = lines.next().ok_or_else(|| CamError::Parse("missing `# rows cols` header".into()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| CamError::Parse(format!("line {}: expected `# rows cols` header", no + 1)))?;
        let dims: Vec<usize> = body
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CamError::Parse(format!("line {}: bad header: {e}", no + 1)))?;
        match dims.as_slice() {
            [r, c] => break (*r, *c),
            _ => return Err(CamError::Parse(format!("line {}: header needs two sizes", no + 1))),
        }
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        if fields.len() != cols {
            return Err(CamError::Parse(format!("line {}: {} values, expected {cols}", no + 1, fields.len())));
        }
        for f in fields {
            let v = f
                .parse::<T>()
                .map_err(|_| CamError::Parse(format!("line {}: {f:?} is not a number", no + 1)))?;
            data.push(v);
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(CamError::Parse(format!("{seen_rows} data rows, header says {rows}")));
    }
    Matrix::from_row_major(rows, cols, &data)
}
