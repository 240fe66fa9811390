//! Matrix and pattern file formats. All on-disk indices are one-based.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pattern::{PatternJson, SparsityPattern};

/// Output format selector shared by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    Csv,
    Json,
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" | "matrixmarket" => Ok(MatrixFormat::MatrixMarket),
            "csv" => Ok(MatrixFormat::Csv),
            "json" => Ok(MatrixFormat::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format '{s}' (mm, csv, json)"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Parses a MatrixMarket `coordinate` or `array` real matrix.
pub fn parse_matrix_market(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty MatrixMarket input".into()))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if h.len() < 4 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(Error::Parse("missing '%%MatrixMarket matrix' header".into()));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::Parse(format!("unsupported storage '{other}'"))),
    };
    match h[3].as_str() {
        "real" | "integer" | "double" => {}
        "pattern" if coordinate => {}
        other => return Err(Error::Parse(format!("unsupported field '{other}'"))),
    }
    let is_pattern = h[3] == "pattern";
    let symmetry = match h.get(4).map(String::as_str).unwrap_or("general") {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(Error::Parse(format!("unsupported symmetry '{other}'"))),
    };
    let mut body = lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| Error::Parse(format!("size line: {e}"))))
        .collect::<Result<_>>()?;
    let num = |t: &str| -> Result<f64> {
        t.parse::<f64>().map_err(|e| Error::Parse(format!("'{t}': {e}")))
    };
    if coordinate {
        if sizes.len() != 3 {
            return Err(Error::Parse("coordinate size line needs 'rows cols nnz'".into()));
        }
        let (r, c, nnz) = (sizes[0], sizes[1], sizes[2]);
        let mut m = DMatrix::zeros(r, c);
        let mut count = 0;
        for line in body {
            let t: Vec<&str> = line.split_whitespace().collect();
            let need = if is_pattern { 2 } else { 3 };
            if t.len() < need {
                return Err(Error::Parse(format!("bad entry line '{line}'")));
            }
            let i: usize = t[0].parse().map_err(|e| Error::Parse(format!("'{}': {e}", t[0])))?;
            let j: usize = t[1].parse().map_err(|e| Error::Parse(format!("'{}': {e}", t[1])))?;
            if i == 0 || j == 0 || i > r || j > c {
                return Err(Error::Parse(format!("entry ({i}, {j}) outside {r}x{c}")));
            }
            let v = if is_pattern { 1.0 } else { num(t[2])? };
            m[(i - 1, j - 1)] = v;
            if i != j {
                match symmetry {
                    Symmetry::Symmetric => m[(j - 1, i - 1)] = v,
                    Symmetry::Skew => m[(j - 1, i - 1)] = -v,
                    Symmetry::General => {}
                }
            }
            count += 1;
        }
        if count != nnz {
            return Err(Error::Parse(format!("expected {nnz} entries, found {count}")));
        }
        check_finite(m)
    } else {
        if sizes.len() != 2 {
            return Err(Error::Parse("array size line needs 'rows cols'".into()));
        }
        let (r, c) = (sizes[0], sizes[1]);
        let vals: Vec<f64> = body
            .flat_map(str::split_whitespace)
            .map(num)
            .collect::<Result<_>>()?;
        let mut m = DMatrix::zeros(r, c);
        if symmetry == Symmetry::General {
            if vals.len() != r * c {
                return Err(Error::Parse(format!("expected {} values, found {}", r * c, vals.len())));
            }
            // column-major
            m.copy_from_slice(&vals);
        } else {
            // lower triangle, column by column
            let mut it = vals.into_iter();
            for j in 0..c {
                let start = if symmetry == Symmetry::Skew { j + 1 } else { j };
                for i in start..r {
                    let v = it.next().ok_or_else(|| Error::Parse("too few array values".into()))?;
                    m[(i, j)] = v;
                    m[(j, i)] = if symmetry == Symmetry::Skew { -v } else { v };
                }
            }
        }
        check_finite(m)
    }
}

fn check_finite(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(m)
    } else {
        Err(Error::NonFinite)
    }
}

/// Parses a dense CSV matrix: one row per line, comma separated, `#`
/// comments allowed.
pub fn parse_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("'{t}': {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse("ragged CSV rows".into()));
    }
    check_finite(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Parses a JSON array of rows.
pub fn parse_json_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse("ragged JSON rows".into()));
    }
    check_finite(DMatrix::from_fn(rows.len(), c, |i, j| rows[i][j]))
}

/// Parses a matrix, detecting MatrixMarket by its header, JSON by a leading
/// `[`, and CSV otherwise.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let t = text.trim_start();
    if t.to_lowercase().starts_with("%%matrixmarket") {
        parse_matrix_market(t)
    } else if t.starts_with('[') {
        parse_json_matrix(t)
    } else {
        parse_csv(text)
    }
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

/// MatrixMarket coordinate output of the nonzero entries.
pub fn to_matrix_market(m: &DMatrix<f64>) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let nz: Vec<(usize, usize, f64)> = (0..m.ncols())
        .flat_map(|j| (0..m.nrows()).map(move |i| (i, j)))
        .filter_map(|(i, j)| (m[(i, j)] != 0.0).then(|| (i, j, m[(i, j)])))
        .collect();
    s.push_str(&format!("{} {} {}\n", m.nrows(), m.ncols(), nz.len()));
    for (i, j, v) in nz {
        s.push_str(&format!("{} {} {}\n", i + 1, j + 1, fmt_f64(v)));
    }
    s
}

pub fn to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn to_json_rows(m: &DMatrix<f64>) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    serde_json::json!(rows)
}

pub fn format_matrix(m: &DMatrix<f64>, f: MatrixFormat) -> String {
    match f {
        MatrixFormat::MatrixMarket => to_matrix_market(m),
        MatrixFormat::Csv => to_csv(m),
        MatrixFormat::Json => format!("{}\n", to_json_rows(m)),
    }
}

/// Shortest representation that parses back to the same value.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Parses a pattern from JSON (`{n, l, support}`) or coordinate lines.
/// `n` is required for coordinate input; `l` is inferred when absent.
pub fn parse_pattern(text: &str, n: Option<usize>, l: Option<usize>) -> Result<SparsityPattern> {
    let t = text.trim_start();
    if t.starts_with('{') {
        let j: PatternJson = serde_json::from_str(t).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(n) = n {
            if n != j.n {
                return Err(Error::Dimension(format!("pattern has n = {}, expected {n}", j.n)));
            }
        }
        SparsityPattern::from_json(&j)
    } else {
        let n = n.ok_or_else(|| Error::InvalidArgument("coordinate patterns need the state dimension".into()))?;
        SparsityPattern::from_coords(text, n, l)
    }
}

pub fn read_pattern(path: &Path, n: Option<usize>, l: Option<usize>) -> Result<SparsityPattern> {
    parse_pattern(&std::fs::read_to_string(path)?, n, l)
}

/// Parses a one-based index list such as `1,3,5` or `2 4`.
pub fn parse_index_list(s: &str, n: usize) -> Result<Vec<usize>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v: usize = t.parse().map_err(|e| Error::Parse(format!("index '{t}': {e}")))?;
            if v == 0 || v > n {
                return Err(Error::IndexOutOfRange { index: v, size: n });
            }
            Ok(v - 1)
        })
        .collect()
}
