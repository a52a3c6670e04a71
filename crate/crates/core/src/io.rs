//! CSV and binary formats. Every reader validates its input and reports
//! problems as `Error::Parse`; none of them panic on malformed bytes.
//!
//! Binary operator matrix layout (little endian):
//!
//! | offset | size        | field                               |
//! |--------|-------------|-------------------------------------|
//! | 0      | 8           | magic `NHOPMAT\0`                   |
//! | 8      | 4           | u32 format version (1)              |
//! | 12     | 4           | u32 reserved, must be 0             |
//! | 16     | 8           | i64 `j_lo` (= -J)                   |
//! | 24     | 8           | u64 `dim` (= 2J + 1)                |
//! | 32     | 16·dim²     | f64 pairs (re, im), row-major `M[η][ξ]` |

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::calculus::OperatorMatrix;
use crate::error::{Error, Result};
use crate::model::{EigenData, FrequencyWindow};
use crate::symbols::{SpatialRegularity, SymbolGrid};
use crate::transform::{CoefficientVector, GridFunction, TransformKind};
use crate::weights::WeightFunction;

pub const MATRIX_MAGIC: &[u8; 8] = b"NHOPMAT\0";
pub const MATRIX_VERSION: u32 = 1;
const MATRIX_HEADER: usize = 32;
/// Largest accepted matrix dimension (J = 4096).
pub const MATRIX_MAX_DIM: u64 = 8193;

fn parse_err(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let h = rdr.headers().map_err(|e| Error::Parse(format!("header: {e}")))?;
    let got: Vec<&str> = h.iter().collect();
    if got != expected {
        return Err(Error::Parse(format!("expected header {expected:?}, found {got:?}")));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64, name: &str) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| parse_err(line, format!("missing field '{name}'")))?;
    s.parse::<T>().map_err(|_| parse_err(line, format!("bad value '{s}' for '{name}'")))
}

fn finite(v: f64, line: u64, name: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("non-finite '{name}'")))
    }
}

fn records<R: Read>(rdr: &mut csv::Reader<R>, width: usize) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        out.push((line, rec));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// eigendata

pub fn write_eigendata_csv<W: Write>(w: W, data: &[EigenData]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "eigenvalue_re", "eigenvalue_im", "bracket", "norm_const"])?;
    for d in data {
        wr.write_record([
            d.j.to_string(),
            fmt(d.eigenvalue.re),
            fmt(d.eigenvalue.im),
            fmt(d.bracket),
            fmt(d.norm_const),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Shortest round-trip decimal representation.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

// ---------------------------------------------------------------------------
// grid functions

pub fn write_grid_function_csv<W: Write>(w: W, f: &GridFunction) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["k", "x", "re", "im"])?;
    let n = f.len() as f64;
    for (k, z) in f.values().iter().enumerate() {
        wr.write_record([k.to_string(), fmt(k as f64 / n), fmt(z.re), fmt(z.im)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Rows `k, x, re, im` with `k = 0, 1, ...` in order; `x` is informational.
pub fn read_grid_function_csv<R: Read>(r: R) -> Result<GridFunction> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["k", "x", "re", "im"])?;
    let mut values = Vec::new();
    for (line, rec) in records(&mut rdr, 4)? {
        let k: usize = field(&rec, 0, line, "k")?;
        if k != values.len() {
            return Err(parse_err(line, format!("expected k = {}, found {k}", values.len())));
        }
        let _x: f64 = field(&rec, 1, line, "x")?;
        let re = finite(field(&rec, 2, line, "re")?, line, "re")?;
        let im = finite(field(&rec, 3, line, "im")?, line, "im")?;
        values.push(Complex64::new(re, im));
    }
    if values.is_empty() {
        return Err(Error::Parse("grid function has no samples".into()));
    }
    GridFunction::new(values)
}

// ---------------------------------------------------------------------------
// coefficient vectors

fn kind_name(k: TransformKind) -> &'static str {
    match k {
        TransformKind::L => "L",
        TransformKind::LStar => "LStar",
    }
}

pub fn write_coefficients_csv<W: Write>(w: W, a: &CoefficientVector) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["kind", "j", "re", "im"])?;
    for (j, z) in a.window().indices().zip(a.values()) {
        wr.write_record([kind_name(a.kind()).to_string(), j.to_string(), fmt(z.re), fmt(z.im)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Rows `kind, j, re, im` with `j = -J, ..., J` in order and one kind.
pub fn read_coefficients_csv<R: Read>(r: R) -> Result<CoefficientVector> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["kind", "j", "re", "im"])?;
    let rows = records(&mut rdr, 4)?;
    if rows.is_empty() || rows.len() % 2 == 0 {
        return Err(Error::Parse(format!(
            "coefficient file needs an odd number 2J+1 of rows, found {}",
            rows.len()
        )));
    }
    let half = (rows.len() - 1) / 2;
    let window = FrequencyWindow::new(half).map_err(|e| Error::Parse(e.to_string()))?;
    let mut kind = None;
    let mut values = Vec::with_capacity(rows.len());
    for (pos, (line, rec)) in rows.iter().enumerate() {
        let k = match rec.get(0) {
            Some("L") => TransformKind::L,
            Some("LStar") => TransformKind::LStar,
            other => return Err(parse_err(*line, format!("unknown kind {other:?}"))),
        };
        if *kind.get_or_insert(k) != k {
            return Err(parse_err(*line, "mixed coefficient kinds"));
        }
        let j: i64 = field(rec, 1, *line, "j")?;
        if j != window.index_at(pos) {
            return Err(parse_err(*line, format!("expected j = {}, found {j}", window.index_at(pos))));
        }
        let re = finite(field(rec, 2, *line, "re")?, *line, "re")?;
        let im = finite(field(rec, 3, *line, "im")?, *line, "im")?;
        values.push(Complex64::new(re, im));
    }
    CoefficientVector::new(kind.expect("nonempty"), window, values)
}

// ---------------------------------------------------------------------------
// weight tables

pub fn write_weight_table_csv<W: Write>(w: W, table: &BTreeMap<i64, f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "value"])?;
    for (j, v) in table {
        wr.write_record([j.to_string(), fmt(*v)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Rows `j, value`; indices unique, values finite and positive.
pub fn read_weight_table_csv<R: Read>(r: R) -> Result<BTreeMap<i64, f64>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["j", "value"])?;
    let mut table = BTreeMap::new();
    for (line, rec) in records(&mut rdr, 2)? {
        let j: i64 = field(&rec, 0, line, "j")?;
        let v = finite(field(&rec, 1, line, "value")?, line, "value")?;
        if v <= 0.0 {
            return Err(parse_err(line, format!("weight value {v} is not positive")));
        }
        if table.insert(j, v).is_some() {
            return Err(parse_err(line, format!("duplicate index {j}")));
        }
    }
    if table.is_empty() {
        return Err(Error::Parse("weight table is empty".into()));
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// symbols

pub fn write_symbol_csv<W: Write>(w: W, s: &SymbolGrid) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "k", "re", "im"])?;
    for j in s.j_lo()..=s.j_hi() {
        for (k, z) in s.column(j).iter().enumerate() {
            wr.write_record([j.to_string(), k.to_string(), fmt(z.re), fmt(z.im)])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Raw symbol samples in rows `j, k, re, im`, grouped by consecutive `j`
/// with `k = 0..N_x` inside each group. The result is marked `Sampled`.
pub fn read_symbol_samples<R: Read>(r: R) -> Result<(usize, i64, i64, Vec<Complex64>)> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["j", "k", "re", "im"])?;
    let rows = records(&mut rdr, 4)?;
    let mut values = Vec::with_capacity(rows.len());
    let mut nx: Option<usize> = None;
    let mut j_lo = 0i64;
    let mut cur_j: Option<i64> = None;
    let mut k_expect = 0usize;
    for (line, rec) in &rows {
        let j: i64 = field(rec, 0, *line, "j")?;
        let k: usize = field(rec, 1, *line, "k")?;
        match cur_j {
            None => {
                j_lo = j;
                cur_j = Some(j);
            }
            Some(c) if c == j => {}
            Some(c) => {
                if Some(j) != c.checked_add(1) {
                    return Err(parse_err(*line, format!("expected j = {} after {c}, found {j}", c.saturating_add(1))));
                }
                match nx {
                    None => nx = Some(k_expect),
                    Some(n) if n == k_expect => {}
                    Some(n) => return Err(parse_err(*line, format!("column {c} has {k_expect} samples, expected {n}"))),
                }
                cur_j = Some(j);
                k_expect = 0;
            }
        }
        if k != k_expect {
            return Err(parse_err(*line, format!("expected k = {k_expect}, found {k}")));
        }
        k_expect += 1;
        let re = finite(field(rec, 2, *line, "re")?, *line, "re")?;
        let im = finite(field(rec, 3, *line, "im")?, *line, "im")?;
        values.push(Complex64::new(re, im));
    }
    let j_hi = cur_j.ok_or_else(|| Error::Parse("symbol file has no samples".into()))?;
    match nx {
        None => nx = Some(k_expect),
        Some(n) if n == k_expect => {}
        Some(n) => {
            return Err(Error::Parse(format!("column {j_hi} has {k_expect} samples, expected {n}")));
        }
    }
    Ok((nx.expect("set above"), j_lo, j_hi, values))
}

pub fn read_symbol_csv<R: Read>(r: R, order: f64, rho: f64, weight: Arc<WeightFunction>) -> Result<SymbolGrid> {
    let (nx, lo, hi, values) = read_symbol_samples(r)?;
    SymbolGrid::new(nx, lo, hi, values, order, rho, weight, SpatialRegularity::Sampled)
}

// ---------------------------------------------------------------------------
// operator matrices

pub fn encode_matrix(m: &OperatorMatrix) -> Vec<u8> {
    let dim = m.dim();
    let mut out = Vec::with_capacity(MATRIX_HEADER + 16 * dim * dim);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&m.window().lo().to_le_bytes());
    out.extend_from_slice(&(dim as u64).to_le_bytes());
    let e = m.entries();
    for p in 0..dim {
        for q in 0..dim {
            out.extend_from_slice(&e[(p, q)].re.to_le_bytes());
            out.extend_from_slice(&e[(p, q)].im.to_le_bytes());
        }
    }
    out
}

fn take<const N: usize>(bytes: &[u8], at: usize) -> [u8; N] {
    let mut buf = [0u8; N];
    buf.copy_from_slice(&bytes[at..at + N]);
    buf
}

pub fn decode_matrix(bytes: &[u8]) -> Result<OperatorMatrix> {
    if bytes.len() < MATRIX_HEADER {
        return Err(Error::Parse(format!("matrix file is {} bytes, header needs 32", bytes.len())));
    }
    if &bytes[..8] != MATRIX_MAGIC {
        return Err(Error::Parse("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(bytes, 8));
    if version != MATRIX_VERSION {
        return Err(Error::Parse(format!("unsupported matrix version {version}")));
    }
    if u32::from_le_bytes(take(bytes, 12)) != 0 {
        return Err(Error::Parse("reserved header field is not zero".into()));
    }
    let j_lo = i64::from_le_bytes(take(bytes, 16));
    let dim = u64::from_le_bytes(take(bytes, 24));
    if dim == 0 || dim % 2 == 0 || dim > MATRIX_MAX_DIM {
        return Err(Error::Parse(format!("dimension {dim} is not an odd number in 1..={MATRIX_MAX_DIM}")));
    }
    let half = (dim - 1) / 2;
    if j_lo != -(half as i64) {
        return Err(Error::Parse(format!("j_lo = {j_lo} does not match dimension {dim}")));
    }
    let dim = dim as usize;
    let expected = MATRIX_HEADER + 16 * dim * dim;
    if bytes.len() != expected {
        return Err(Error::Parse(format!("matrix file is {} bytes, expected {expected}", bytes.len())));
    }
    let mut values = Vec::with_capacity(dim * dim);
    for i in 0..dim * dim {
        let at = MATRIX_HEADER + 16 * i;
        let re = f64::from_le_bytes(take(bytes, at));
        let im = f64::from_le_bytes(take(bytes, at + 8));
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Parse(format!("non-finite entry at index {i}")));
        }
        values.push(Complex64::new(re, im));
    }
    let window = FrequencyWindow::new(half as usize).map_err(|e| Error::Parse(e.to_string()))?;
    OperatorMatrix::new(window, DMatrix::from_row_slice(dim, dim, &values))
}
