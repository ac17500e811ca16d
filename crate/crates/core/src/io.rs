//! CSV and JSON input/output.
//!
//! Problem files hold `y` in the first column and `X` in the rest; the header
//! row is optional and detected by whether the first row parses as numbers.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::Groups;

pub fn read_problem<R: Read>(reader: R) -> Result<(Array2<f64>, Array1<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", i + 1))),
        }
    }
    let Some(first) = rows.first() else {
        return Err(Error::Parse("no data rows".into()));
    };
    let width = first.len();
    if width < 2 {
        return Err(Error::Dimension("need a response column and at least one feature".into()));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::Dimension(format!("row {} has {} fields, expected {width}", k + 1, rows[k].len())));
    }
    let n = rows.len();
    let y = Array1::from_iter(rows.iter().map(|r| r[0]));
    let x = Array2::from_shape_fn((n, width - 1), |(i, j)| rows[i][j + 1]);
    Ok((x, y))
}

pub fn read_problem_csv(path: &Path) -> Result<(Array2<f64>, Array1<f64>)> {
    read_problem(File::open(path)?)
}

/// A JSON array of arrays of 1-based column indices.
pub fn read_groups<R: Read>(reader: R, p: usize) -> Result<Groups> {
    let members: Vec<Vec<usize>> = serde_json::from_reader(reader)?;
    Groups::from_one_based(members, p)
}

pub fn read_groups_json(path: &Path, p: usize) -> Result<Groups> {
    read_groups(File::open(path)?, p)
}

pub fn write_problem<W: Write>(writer: W, x: &Array2<f64>, y: &Array1<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string()];
    header.extend((1..=x.ncols()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (i, row) in x.rows().into_iter().enumerate() {
        let mut rec = vec![format!("{:?}", y[i])];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_problem_csv(path: &Path, x: &Array2<f64>, y: &Array1<f64>) -> Result<()> {
    write_problem(File::create(path)?, x, y)
}

/// One value per line under a single header.
pub fn write_vector_csv(path: &Path, name: &str, v: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([name])?;
    for x in v {
        w.write_record([format!("{x:?}")])?;
    }
    w.flush()?;
    Ok(())
}
