//! Plain-text matrix format.
//!
//! ```text
//! # optional comment lines
//! 2 2 real
//! 0 1
//! 0 1e-3
//! ```
//!
//! The header is `rows cols real|complex`. Complex rows hold `re im` pairs.
//! Values are written in shortest round-trip form, so a write/read cycle is
//! bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use aznn_core::{DenseMatrix, C64};

pub fn format_matrix(m: &DenseMatrix) -> String {
    let real = m.is_real();
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), if real { "real" } else { "complex" });
    for i in 0..m.rows() {
        let mut line = String::new();
        for j in 0..m.cols() {
            let z = m[(i, j)];
            if j > 0 {
                line.push(' ');
            }
            if real {
                let _ = write!(line, "{:e}", z.re);
            } else {
                let _ = write!(line, "{:e} {:e}", z.re, z.im);
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().context("empty matrix file")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        bail!("line {hline}: expected header `rows cols real|complex`, got `{header}`");
    }
    let rows: usize = fields[0].parse().with_context(|| format!("line {hline}: bad row count"))?;
    let cols: usize = fields[1].parse().with_context(|| format!("line {hline}: bad column count"))?;
    let complex = match fields[2] {
        "real" => false,
        "complex" => true,
        other => bail!("line {hline}: entry kind must be real or complex, got `{other}`"),
    };
    if rows == 0 || cols == 0 {
        bail!("line {hline}: matrix dimensions must be at least 1x1");
    }
    let per_row = if complex { 2 * cols } else { cols };
    let mut data = vec![C64::new(0.0, 0.0); rows * cols];
    for i in 0..rows {
        let (ln, line) = lines.next().with_context(|| format!("expected {rows} rows, found {i}"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().with_context(|| format!("line {ln}: bad number `{t}`")))
            .collect::<Result<_>>()?;
        if vals.len() != per_row {
            bail!("line {ln}: expected {per_row} numbers, got {}", vals.len());
        }
        for j in 0..cols {
            let z = if complex { C64::new(vals[2 * j], vals[2 * j + 1]) } else { C64::new(vals[j], 0.0) };
            if !z.is_finite() {
                bail!("line {ln}: non-finite entry in column {}", j + 1);
            }
            data[i + j * rows] = z;
        }
    }
    if let Some((ln, _)) = lines.next() {
        bail!("line {ln}: trailing data after {rows} rows");
    }
    Ok(DenseMatrix::from_col_major(rows, cols, data)?)
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_matrix(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(m)).with_context(|| format!("writing {}", path.display()))
}
