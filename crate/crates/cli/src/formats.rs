//! Weight-matrix files: dense CSV and MatrixMarket coordinate.
//!
//! CSV: one row per sender, comma separated; `NA` or an empty cell marks a
//! missing entry. An optional header row of receiver labels and an
//! optional first column of sender labels are recognised when their cells
//! are not numbers.
//!
//! MatrixMarket: `coordinate` layout with `real`, `integer` or `pattern`
//! values and `general` or `symmetric` symmetry. Duplicate entries are
//! summed. Entries absent from the file are observed zeros unless
//! `absent_as_missing` is set, in which case they are missing.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use slpm::WeightMatrix;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    #[value(name = "mtx")]
    MatrixMarket,
}

impl Format {
    /// From a file extension; CSV unless the name ends in `.mtx`.
    pub fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("mtx") => Format::MatrixMarket,
            _ => Format::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::MatrixMarket => "mtx",
        }
    }
}

/// A weight matrix with node labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub matrix: WeightMatrix,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

pub fn default_labels(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

impl LabeledMatrix {
    pub fn unlabeled(matrix: WeightMatrix) -> Self {
        let row_labels = default_labels("s", matrix.rows());
        let col_labels = default_labels("r", matrix.cols());
        Self { matrix, row_labels, col_labels }
    }
}

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Format { path: path.display().to_string(), line, message: msg.into() }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na")
}

fn parse_weight(path: &Path, line: usize, row: usize, col: usize, cell: &str) -> Result<f64, CliError> {
    let value = f64::from_str(cell).map_err(|_| format_err(path, line, format!("'{cell}' is not a number")))?;
    if !value.is_finite() {
        return Err(format_err(path, line, format!("non-finite weight '{cell}' at row {}, column {}", row + 1, col + 1)));
    }
    if value < 0.0 {
        return Err(format_err(path, line, format!("negative weight {value} at row {}, column {}", row + 1, col + 1)));
    }
    Ok(value)
}

fn numeric_or_missing(cell: &str) -> bool {
    is_missing(cell) || f64::from_str(cell).is_ok()
}

pub fn read_csv(path: &Path, text: &str) -> Result<LabeledMatrix, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let split = |l: &str| -> Vec<String> { l.split(',').map(|c| c.trim().trim_matches('"').to_string()).collect() };

    let mut col_labels = None;
    let mut has_row_labels = false;
    if let Some(&(_, first)) = lines.peek() {
        let cells = split(first);
        if !cells.iter().all(|c| numeric_or_missing(c)) {
            // Header row; a leading empty corner cell means row labels follow.
            has_row_labels = cells[0].is_empty() || !numeric_or_missing(&cells[0]);
            let labels = if has_row_labels { cells[1..].to_vec() } else { cells };
            col_labels = Some(labels);
            lines.next();
        }
    }

    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut row_labels = Vec::new();
    let mut width = col_labels.as_ref().map(|l| l.len());
    for (row, (line_no, line)) in lines.enumerate() {
        let mut cells = split(line);
        if row == 0 && col_labels.is_none() && !numeric_or_missing(&cells[0]) {
            has_row_labels = true;
        }
        if has_row_labels {
            row_labels.push(cells.remove(0));
        }
        match width {
            Some(w) if w != cells.len() => {
                return Err(format_err(path, line_no, format!("expected {w} fields, found {}", cells.len())))
            }
            None => width = Some(cells.len()),
            _ => {}
        }
        for (col, cell) in cells.iter().enumerate() {
            if is_missing(cell) {
                values.push(0.0);
                mask.push(false);
            } else {
                values.push(parse_weight(path, line_no, row, col, cell)?);
                mask.push(true);
            }
        }
    }
    let cols = width.unwrap_or(0);
    let rows = values.len().checked_div(cols).unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(format_err(path, 1, "no data rows"));
    }
    let matrix = WeightMatrix::with_mask(rows, cols, values, mask)?;
    Ok(LabeledMatrix {
        row_labels: if has_row_labels { row_labels } else { default_labels("s", rows) },
        col_labels: col_labels.unwrap_or_else(|| default_labels("r", cols)),
        matrix,
    })
}

pub fn read_matrix_market(path: &Path, text: &str, absent_as_missing: bool) -> Result<LabeledMatrix, CliError> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
    let (_, banner) = lines.next().ok_or_else(|| format_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(format_err(path, 1, "missing '%%MatrixMarket matrix' banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(format_err(path, 1, format!("unsupported layout '{}'", tokens[2])));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(format_err(path, 1, format!("unsupported field '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(format_err(path, 1, format!("unsupported symmetry '{other}'"))),
    };
    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| format_err(path, 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format_err(path, size_line, format!("bad size field '{t}'"))))
        .collect::<Result<_, _>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(format_err(path, size_line, "size line needs rows, columns and entry count"));
    };
    if rows == 0 || cols == 0 {
        return Err(format_err(path, size_line, "matrix must have at least one row and column"));
    }
    if symmetric && rows != cols {
        return Err(format_err(path, size_line, "symmetric matrix must be square"));
    }
    let mut values = vec![0.0; rows * cols];
    let mut mask = vec![!absent_as_missing; rows * cols];
    let mut seen = 0;
    for (line_no, line) in body {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let expected = if pattern { 2 } else { 3 };
        if fields.len() != expected {
            return Err(format_err(path, line_no, format!("expected {expected} fields, found {}", fields.len())));
        }
        let index = |t: &str, limit: usize| -> Result<usize, CliError> {
            match t.parse::<usize>() {
                Ok(v) if (1..=limit).contains(&v) => Ok(v - 1),
                _ => Err(format_err(path, line_no, format!("index '{t}' out of range 1..={limit}"))),
            }
        };
        let (i, j) = (index(fields[0], rows)?, index(fields[1], cols)?);
        let v = if pattern { 1.0 } else { parse_weight(path, line_no, i, j, fields[2])? };
        let mut add = |i: usize, j: usize| {
            values[i * cols + j] += v;
            mask[i * cols + j] = true;
        };
        add(i, j);
        if symmetric && i != j {
            add(j, i);
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(format_err(path, size_line, format!("header declares {nnz} entries, file has {seen}")));
    }
    Ok(LabeledMatrix::unlabeled(WeightMatrix::with_mask(rows, cols, values, mask)?))
}

pub fn read_matrix(path: &Path, format: Option<Format>, absent_as_missing: bool) -> Result<LabeledMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match format.unwrap_or_else(|| Format::detect(path)) {
        Format::Csv => read_csv(path, &text),
        Format::MatrixMarket => read_matrix_market(path, &text, absent_as_missing),
    }
}

/// Shortest text that parses back to exactly `x`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Dense CSV with `NA` for missing entries and a label header.
pub fn write_csv(m: &LabeledMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ",{}", m.col_labels.join(","));
    let x = &m.matrix;
    for i in 0..x.rows() {
        out.push_str(&m.row_labels[i]);
        for j in 0..x.cols() {
            out.push(',');
            if x.is_observed(i, j) {
                out.push_str(&num(x.get(i, j)));
            } else {
                out.push_str("NA");
            }
        }
        out.push('\n');
    }
    out
}

/// Coordinate file listing every observed entry, zeros included, so that
/// reading it back with `absent_as_missing` restores the mask.
pub fn write_matrix_market(x: &WeightMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", x.rows(), x.cols(), x.observed_count());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            if x.is_observed(i, j) {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, num(x.get(i, j)));
            }
        }
    }
    out
}

pub fn write_matrix(m: &LabeledMatrix, format: Format) -> String {
    match format {
        Format::Csv => write_csv(m),
        Format::MatrixMarket => write_matrix_market(&m.matrix),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn plain_csv() {
        let m = read_csv(p(), "1,0\n0,1\n").unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.cols()), (2, 2));
        assert_eq!(m.matrix.values(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.row_labels, vec!["s1", "s2"]);
    }

    #[test]
    fn labeled_csv_with_missing() {
        let m = read_csv(p(), ",a,b\nx,1,NA\ny,,2.5\n").unwrap();
        assert_eq!(m.col_labels, vec!["a", "b"]);
        assert_eq!(m.row_labels, vec!["x", "y"]);
        assert!(!m.matrix.is_observed(0, 1) && !m.matrix.is_observed(1, 0));
        assert_eq!(m.matrix.get(1, 1), 2.5);
    }

    #[test]
    fn csv_errors() {
        let neg = read_csv(p(), "1,2\n3,-4\n").unwrap_err().to_string();
        assert!(neg.contains("row 2, column 2"), "{neg}");
        let ragged = read_csv(p(), "1,2\n3\n").unwrap_err().to_string();
        assert!(ragged.contains("line 2"), "{ragged}");
        assert!(read_csv(p(), "1,NaN\n").is_err());
        assert!(read_csv(p(), "1,inf\n").is_err());
    }

    #[test]
    fn coordinate_densifies() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 1\n1 2 3.5\n";
        let m = read_matrix_market(p(), text, false).unwrap().matrix;
        assert_eq!(m.values(), &[0.0, 3.5, 0.0, 0.0]);
        assert_eq!(m.observed_count(), 4);
        let m = read_matrix_market(p(), text, true).unwrap().matrix;
        assert_eq!(m.observed_count(), 1);
    }

    #[test]
    fn coordinate_symmetric_pattern_duplicates() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 3\n2 1\n2 1\n3 3\n";
        let m = read_matrix_market(p(), text, false).unwrap().matrix;
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(2, 2), 1.0);
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n";
        assert!(read_matrix_market(p(), bad, false).is_err());
        let neg = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 -1\n";
        assert!(read_matrix_market(p(), neg, false).is_err());
    }

    #[test]
    fn round_trips_are_exact() {
        let values = vec![0.1, 1.0 / 3.0, 0.0, 1e-300, 7e12, std::f64::consts::PI];
        let mask = vec![true, true, false, true, true, true];
        let m = LabeledMatrix::unlabeled(WeightMatrix::with_mask(2, 3, values, mask).unwrap());
        assert_eq!(read_csv(p(), &write_csv(&m)).unwrap(), m);
        let back = read_matrix_market(p(), &write_matrix_market(&m.matrix), true).unwrap();
        assert_eq!(back.matrix, m.matrix);
    }
}
