//! Column-oriented table, uniform train/test splitting and CSV round-tripping.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::sampling::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Real(Vec<f64>),
    Integer(Vec<i64>),
    Binary(Vec<u8>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Real(v) => v.len(),
            Column::Integer(v) => v.len(),
            Column::Binary(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Column::Real(v) => v.clone(),
            Column::Integer(v) => v.iter().map(|&x| x as f64).collect(),
            Column::Binary(v) => v.iter().map(|&x| f64::from(x)).collect(),
        }
    }

    fn take(&self, rows: &[usize]) -> Column {
        match self {
            Column::Real(v) => Column::Real(rows.iter().map(|&i| v[i]).collect()),
            Column::Integer(v) => Column::Integer(rows.iter().map(|&i| v[i]).collect()),
            Column::Binary(v) => Column::Binary(rows.iter().map(|&i| v[i]).collect()),
        }
    }

    fn format_cell(&self, row: usize) -> String {
        match self {
            Column::Real(v) => format_real(v[row]),
            Column::Integer(v) => v[row].to_string(),
            Column::Binary(v) => v[row].to_string(),
        }
    }
}

/// Named, equal-length columns. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Table {
    pub fn new(columns: Vec<(String, Column)>) -> Result<Table> {
        let n_rows = columns.first().map_or(0, |(_, c)| c.len());
        let mut names = Vec::with_capacity(columns.len());
        let mut cols = Vec::with_capacity(columns.len());
        for (name, col) in columns {
            if col.len() != n_rows {
                return Err(Error::invalid(format!(
                    "column {name} has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
            if names.contains(&name) {
                return Err(Error::invalid(format!("duplicate column name {name}")));
            }
            names.push(name);
            cols.push(col);
        }
        Ok(Table {
            names,
            columns: cols,
            n_rows,
        })
    }

    /// Header-only table with zero rows; every column is typed `Real`.
    pub fn empty(names: &[&str]) -> Result<Table> {
        Table::new(
            names
                .iter()
                .map(|n| (n.to_string(), Column::Real(Vec::new())))
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.names.iter().map(String::as_str).zip(self.columns.iter())
    }

    /// New table holding `rows` in the given order.
    pub fn take_rows(&self, rows: &[usize]) -> Table {
        Table {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            n_rows: rows.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub rng: RngStream,
}

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

/// Row indices of a uniform random partition: `(train, test)`, each sorted
/// ascending so both parts keep the input's row order.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} rows")));
    }
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::invalid(format!("train fraction {f} outside (0, 1)")));
    }
    let n_train = ((f * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = spec.rng.clone();
    order.shuffle(&mut rng);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(table: &Table, spec: &SplitSpec) -> Result<(Table, Table)> {
    let (train, test) = split_indices(table.n_rows(), spec)?;
    Ok((table.take_rows(&train), table.take_rows(&test)))
}

/// Nine significant digits, `%.9g` style: fixed notation for decimal
/// exponents in [-5, 9), scientific otherwise, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv_to<W: Write>(table: &Table, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.names())?;
    let mut record = Vec::with_capacity(table.columns.len());
    for row in 0..table.n_rows() {
        record.clear();
        record.extend(table.columns.iter().map(|c| c.format_cell(row)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(table, BufWriter::new(file)).map_err(|e| csv_to_error(e, path))
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses CSV text with a required header. Column types are inferred: a
/// column whose every value is `0` or `1` is binary, one of plain integers
/// is integer, anything else numeric is real. A header-only file yields
/// real columns.
pub fn read_csv_from<R: Read>(input: R) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| csv_to_error(e, Path::new("<input>")))?
        .clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(Error::MalformedHeader(format!("{:?}", names)));
    }
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::MalformedHeader(format!("duplicate column {n}")));
        }
    }

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| csv_to_error(e, Path::new("<input>")))?;
        if record.len() != names.len() {
            return Err(Error::RaggedRow {
                line: record.position().map_or(0, |p| p.line()),
                expected: names.len(),
                found: record.len(),
            });
        }
        for (col, field) in raw.iter_mut().zip(record.iter()) {
            col.push(field.trim().to_string());
        }
    }

    let columns = names
        .into_iter()
        .zip(raw)
        .map(|(name, values)| {
            let col = infer_column(&name, &values)?;
            Ok((name, col))
        })
        .collect::<Result<Vec<_>>>()?;
    Table::new(columns)
}

fn infer_column(name: &str, values: &[String]) -> Result<Column> {
    if values.is_empty() {
        return Ok(Column::Real(Vec::new()));
    }
    if values.iter().all(|v| v == "0" || v == "1") {
        return Ok(Column::Binary(values.iter().map(|v| u8::from(v == "1")).collect()));
    }
    if let Ok(ints) = values.iter().map(|v| v.parse::<i64>()).collect() {
        return Ok(Column::Integer(ints));
    }
    values
        .iter()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("column {name}: cannot parse {v:?} as a number")))
        })
        .collect::<Result<Vec<f64>>>()
        .map(Column::Real)
}

fn csv_to_error(e: csv::Error, path: &Path) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::RaggedRow {
            line,
            expected: expected_len as usize,
            found: len as usize,
        },
        other => Error::Parse(format!("{other:?}")),
    }
}
