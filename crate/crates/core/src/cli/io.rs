//! Matrix CSV files and small CSV/JSON writing helpers.
//!
//! Matrix format: a header line `# rows cols`, then `rows` lines of `cols`
//! comma-separated numbers (row-major). Blank lines are ignored.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .strip_prefix('#')
        .ok_or_else(|| Error::InvalidInput(format!("expected '# rows cols' header, got '{header}'")))?
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidInput(format!("bad header '{header}': {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::InvalidInput(format!("header needs two integers, got '{header}'")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for line in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("row {}: {e}", seen + 1)))?;
        if row.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} entries, header says {cols}",
                seen + 1,
                row.len()
            )));
        }
        data.extend(row);
        seen += 1;
    }
    if seen != rows {
        return Err(Error::DimensionMismatch(format!("found {seen} rows, header says {rows}")));
    }
    Matrix::from_vec(rows, cols, data)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(&read_text(path)?)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("# {} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &format_matrix(m))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Header plus rows, comma separated, `\n` terminated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip formatting, so identical values give identical bytes.
/// Very small or large magnitudes use exponent notation.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}
