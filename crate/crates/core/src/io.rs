//! Matrix Market input and output, DOS curve files and run reports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dos::{DosCurve, DosMeta};
use crate::error::{Error, Result};
use crate::estimate::{EstimatorKind, PhaseTimings, RankEstimate};
use crate::kpm::DampingKind;
use crate::linops::{CsrMatrix, DenseMatrix, Factor, LinearOperator, SymmetricOperator, Window};
use crate::probe::ProbeDistribution;
use crate::threshold::{ThresholdResult, ThresholdStrategy};

/// Operators whose stored entries exceed this fraction of `rows * cols`
/// are kept dense.
const DENSE_FILL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

/// A parsed Matrix Market file.
#[derive(Debug, Clone)]
pub struct LoadedMatrix {
    pub operator: LinearOperator,
    pub rows: usize,
    pub cols: usize,
    /// Entries stored in the file, before symmetric expansion.
    pub stored_entries: usize,
    /// Notes about how the input was interpreted.
    pub warnings: Vec<String>,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<LoadedMatrix> {
    parse_matrix_market(BufReader::new(File::open(path)?))
}

/// Parses `coordinate` or `array` files with `real` or `integer` fields and
/// `general` or `symmetric` symmetry. Indices are 1-based in the file and
/// 0-based from here on; duplicate coordinates are summed. Square inputs
/// that are not symmetric, and rectangular inputs, become Gram operators on
/// the smaller side.
pub fn parse_matrix_market(reader: impl BufRead) -> Result<LoadedMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(Error::parse(1, "empty file")),
    };
    let (layout, symmetry) = parse_header(lineno, &header)?;

    let mut data_lines = lines.filter_map(|(n, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        other => Some((n, other)),
    });
    let (size_line, size) = match data_lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(Error::parse(lineno + 1, "missing size line")),
    };
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|f| f.parse::<usize>().map_err(|_| Error::parse(size_line, format!("bad size field '{f}'"))))
        .collect::<Result<_>>()?;

    let mut triplets = Vec::new();
    let (rows, cols, stored) = match layout {
        Layout::Coordinate => {
            let [rows, cols, nnz] = dims[..] else {
                return Err(Error::parse(size_line, "coordinate size line needs 'rows cols nnz'"));
            };
            check_shape(size_line, rows, cols, symmetry)?;
            triplets.reserve(nnz);
            let mut last_line = size_line;
            for _ in 0..nnz {
                let (n, l) = data_lines.next().ok_or_else(|| {
                    Error::parse(last_line + 1, format!("expected {nnz} entries, found {}", triplets.len()))
                })?;
                let l = l?;
                last_line = n;
                let mut fields = l.split_whitespace();
                let i = parse_index(n, fields.next(), rows, "row")?;
                let j = parse_index(n, fields.next(), cols, "column")?;
                let v = parse_value(n, fields.next())?;
                if fields.next().is_some() {
                    return Err(Error::parse(n, "trailing fields after value"));
                }
                triplets.push((i, j, v));
            }
            if let Some((n, _)) = data_lines.next() {
                return Err(Error::parse(n, format!("more than the declared {nnz} entries")));
            }
            (rows, cols, nnz)
        }
        Layout::Array => {
            let [rows, cols] = dims[..] else {
                return Err(Error::parse(size_line, "array size line needs 'rows cols'"));
            };
            check_shape(size_line, rows, cols, symmetry)?;
            // Column-major; symmetric files store the lower triangle only.
            let positions: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = if symmetry == Symmetry::Symmetric { j } else { 0 };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            let mut last_line = size_line;
            for &(i, j) in &positions {
                let (n, l) = data_lines
                    .next()
                    .ok_or_else(|| Error::parse(last_line + 1, format!("expected {} values", positions.len())))?;
                last_line = n;
                let v = parse_value(n, l?.split_whitespace().next())?;
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
            if let Some((n, _)) = data_lines.next() {
                return Err(Error::parse(n, "more values than the declared size"));
            }
            (rows, cols, positions.len())
        }
    };

    let mut warnings = Vec::new();
    let operator = match symmetry {
        Symmetry::Symmetric => {
            let mut full = Vec::with_capacity(2 * triplets.len());
            for &(i, j, v) in &triplets {
                full.push((i, j, v));
                if i != j {
                    full.push((j, i, v));
                }
            }
            symmetric_operator(rows, &full)?
        }
        Symmetry::General => {
            let csr = CsrMatrix::from_triplets(rows, cols, &triplets)?;
            if rows == cols && is_symmetric(&csr)? {
                symmetric_operator(rows, &triplets)?
            } else {
                let factor = if dense_enough(csr.nnz(), rows, cols) {
                    Factor::Dense(csr.to_dense())
                } else {
                    Factor::Sparse(csr)
                };
                let op = LinearOperator::gram(factor, None);
                let what = if rows == cols { "square non-symmetric" } else { "rectangular" };
                warnings.push(format!(
                    "{what} {rows}x{cols} input wrapped as the Gram operator {} of dimension {}; \
                     its eigenvalues are the squared singular values of the input",
                    gram_label(&op),
                    op.dim()
                ));
                op
            }
        }
    };
    Ok(LoadedMatrix { operator, rows, cols, stored_entries: stored, warnings })
}

fn parse_header(line: usize, header: &str) -> Result<(Layout, Symmetry)> {
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::parse(line, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match fields[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(Error::parse(line, format!("unknown layout '{other}'"))),
    };
    match fields[3].as_str() {
        "real" | "integer" | "double" => {}
        other => {
            return Err(Error::parse(line, format!("unsupported field '{other}'; only real matrices are accepted")))
        }
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::parse(line, format!("unsupported symmetry '{other}'"))),
    };
    Ok((layout, symmetry))
}

fn check_shape(line: usize, rows: usize, cols: usize, symmetry: Symmetry) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::parse(line, "matrix dimensions must be positive"));
    }
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(Error::parse(line, "symmetric matrix must be square"));
    }
    Ok(())
}

fn parse_index(line: usize, field: Option<&str>, bound: usize, what: &str) -> Result<usize> {
    let f = field.ok_or_else(|| Error::parse(line, format!("missing {what} index")))?;
    let i: usize = f.parse().map_err(|_| Error::parse(line, format!("bad {what} index '{f}'")))?;
    if i == 0 || i > bound {
        return Err(Error::parse(line, format!("{what} index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

fn parse_value(line: usize, field: Option<&str>) -> Result<f64> {
    let f = field.ok_or_else(|| Error::parse(line, "missing value"))?;
    let v: f64 = f.parse().map_err(|_| Error::parse(line, format!("bad value '{f}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value '{f}'")));
    }
    Ok(v)
}

fn dense_enough(nnz: usize, rows: usize, cols: usize) -> bool {
    nnz as f64 > DENSE_FILL * rows as f64 * cols as f64
}

fn symmetric_operator(n: usize, full: &[(usize, usize, f64)]) -> Result<LinearOperator> {
    let csr = CsrMatrix::from_triplets(n, n, full)?;
    Ok(if dense_enough(csr.nnz(), n, n) {
        LinearOperator::DenseSymmetric(csr.to_dense())
    } else {
        LinearOperator::SparseSymmetric(csr)
    })
}

fn is_symmetric(csr: &CsrMatrix) -> Result<bool> {
    let transposed: Vec<(usize, usize, f64)> = csr.triplets().map(|(i, j, v)| (j, i, v)).collect();
    let t = CsrMatrix::from_triplets(csr.ncols(), csr.nrows(), &transposed)?;
    Ok(csr.triplets().eq(t.triplets()))
}

fn gram_label(op: &LinearOperator) -> &'static str {
    match op {
        LinearOperator::Gram { side: crate::linops::GramSide::XXt, .. } => "X X^T",
        _ => "X^T X",
    }
}

/// Shortest round-trip decimal is not guaranteed by every reader, so values
/// are written with 17 significant digits.
fn fmt_value(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

/// Writes `op` as a Matrix Market file. Gram operators are written as their
/// `general` factor; everything else as the lower triangle of a `symmetric`
/// coordinate matrix, materializing implicit operators densely.
pub fn write_matrix_market(path: impl AsRef<Path>, op: &LinearOperator) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(render_matrix_market(op).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn render_matrix_market(op: &LinearOperator) -> String {
    let mut out = String::new();
    let emit = |out: &mut String, symmetry: &str, rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>| {
        writeln!(out, "%%MatrixMarket matrix coordinate real {symmetry}").unwrap();
        writeln!(out, "{rows} {cols} {}", entries.len()).unwrap();
        for (i, j, v) in entries {
            write!(out, "{} {} ", i + 1, j + 1).unwrap();
            fmt_value(out, v);
            out.push('\n');
        }
    };
    match op {
        LinearOperator::Gram { factor, .. } => {
            let entries: Vec<_> = match factor {
                Factor::Sparse(m) => m.triplets().collect(),
                Factor::Dense(m) => dense_entries(m, false),
            };
            emit(&mut out, "general", factor.nrows(), factor.ncols(), entries);
        }
        LinearOperator::SparseSymmetric(m) => {
            let n = m.nrows();
            emit(&mut out, "symmetric", n, n, m.triplets().filter(|&(i, j, _)| i >= j).collect());
        }
        LinearOperator::Diagonal(d) => {
            let n = d.len();
            let entries = d.iter().enumerate().filter(|&(_, &v)| v != 0.0).map(|(i, &v)| (i, i, v)).collect();
            emit(&mut out, "symmetric", n, n, entries);
        }
        LinearOperator::DenseSymmetric(m) => {
            let n = m.nrows();
            emit(&mut out, "symmetric", n, n, dense_entries(m, true));
        }
        other => {
            let m = other.to_dense();
            let n = m.nrows();
            emit(&mut out, "symmetric", n, n, dense_entries(&m, true));
        }
    }
    out
}

fn dense_entries(m: &DenseMatrix, lower: bool) -> Vec<(usize, usize, f64)> {
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        let start = if lower { j } else { 0 };
        for i in start..m.nrows() {
            let v = m.get(i, j);
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    entries
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosFormat {
    #[default]
    Csv,
    Json,
}

impl DosFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => DosFormat::Json,
            _ => DosFormat::Csv,
        }
    }
}

pub fn render_dos_csv(curve: &DosCurve) -> String {
    let mut out = String::from("t,phi\n");
    for (&t, &p) in curve.t.iter().zip(&curve.phi) {
        fmt_value(&mut out, t);
        out.push(',');
        fmt_value(&mut out, p);
        out.push('\n');
    }
    out
}

pub fn write_dos(curve: &DosCurve, path: impl AsRef<Path>, format: DosFormat) -> Result<()> {
    if curve.t.len() != curve.phi.len() {
        return Err(Error::DimensionMismatch { expected: curve.t.len(), actual: curve.phi.len() });
    }
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        DosFormat::Csv => w.write_all(render_dos_csv(curve).as_bytes())?,
        DosFormat::Json => serde_json::to_writer_pretty(&mut w, curve)?,
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_dos`]: JSON when the content starts with
/// `{`, otherwise two comma-separated columns with an optional header. CSV
/// curves carry no metadata.
pub fn read_dos(path: impl AsRef<Path>) -> Result<DosCurve> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut t = Vec::new();
    let mut phi = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::parse(idx + 1, "expected two comma-separated columns")),
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                t.push(x);
                phi.push(y);
            }
            _ if t.is_empty() && idx == 0 => {}
            _ => return Err(Error::parse(idx + 1, format!("bad numbers '{a}', '{b}'"))),
        }
    }
    let curve = DosCurve { t, phi, meta: DosMeta::external() };
    if !curve.is_well_formed() {
        return Err(Error::InvalidConfig("DOS abscissae must be strictly increasing".into()));
    }
    Ok(curve)
}

/// Where the operator came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub source: String,
    pub operator: String,
    pub n: usize,
    pub nnz: usize,
    pub warnings: Vec<String>,
}

impl InputDescriptor {
    pub fn new(source: impl Into<String>, op: &LinearOperator, warnings: Vec<String>) -> Self {
        Self { source: source.into(), operator: op.describe(), n: op.dim(), nnz: op.nnz(), warnings }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodParameters {
    pub method: EstimatorKind,
    /// Chebyshev degree or Lanczos steps.
    pub degree: usize,
    pub nv: usize,
    pub distribution: ProbeDistribution,
    /// KPM only.
    pub damping: Option<DampingKind>,
    pub seed: u64,
    pub strategy: ThresholdStrategy,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub mean: f64,
    pub std_error: f64,
    pub per_probe: Vec<f64>,
    pub running_mean: Vec<f64>,
}

/// Everything a rank run produced. Timings live in their own field so two
/// runs can be compared after clearing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub input: InputDescriptor,
    pub parameters: MethodParameters,
    pub window: Window,
    pub threshold: ThresholdResult,
    pub rank: RankSummary,
    pub timings: PhaseTimings,
    pub dos: Option<DosCurve>,
}

impl ReportDocument {
    pub fn new(
        input: InputDescriptor,
        parameters: MethodParameters,
        estimate: &RankEstimate,
        include_dos: bool,
    ) -> Self {
        Self {
            input,
            parameters,
            window: estimate.window,
            threshold: estimate.threshold.clone().unwrap_or_else(|| ThresholdResult::manual(estimate.eps)),
            rank: RankSummary {
                mean: estimate.mean,
                std_error: estimate.series.std_error(),
                per_probe: estimate.series.per_probe.clone(),
                running_mean: estimate.series.running_mean.clone(),
            },
            timings: estimate.timings,
            dos: if include_dos { estimate.dos.clone() } else { None },
        }
    }
}

pub fn write_report(report: &ReportDocument, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ReportDocument> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
