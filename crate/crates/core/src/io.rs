//! Plain-text field dumps:
//!
//! ```text
//! RELGS-FIELD v1 N=<dim> n=<points per axis> L=<box length>
//! <value>
//! ...
//! ```
//!
//! Values are in storage order (last axis fastest), one per line.

use crate::error::{Error, Result};
use crate::spectral::{Grid, RealField};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const FIELD_MAGIC: &str = "RELGS-FIELD v1";

pub fn format_field(u: &RealField) -> String {
    let g = u.grid();
    let mut out = String::with_capacity(24 * g.len() + 64);
    writeln!(out, "{FIELD_MAGIC} N={} n={} L={:?}", g.dim(), g.n_per_dim(), g.box_length()).expect("string write");
    for v in u.values() {
        writeln!(out, "{v:.16e}").expect("string write");
    }
    out
}

pub fn parse_field(text: &str) -> Result<RealField> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::FieldFormat("empty input".into()))?;
    let rest = header
        .strip_prefix(FIELD_MAGIC)
        .ok_or_else(|| Error::FieldFormat(format!("bad header `{header}`")))?;
    let (mut dim, mut n, mut length) = (None, None, None);
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::FieldFormat(format!("bad header token `{token}`")))?;
        let bad = |_| Error::FieldFormat(format!("bad value in `{token}`"));
        match key {
            "N" => dim = Some(value.parse::<usize>().map_err(bad)?),
            "n" => n = Some(value.parse::<usize>().map_err(bad)?),
            "L" => length = Some(value.parse::<f64>().map_err(|_| Error::FieldFormat(format!("bad value in `{token}`")))?),
            _ => return Err(Error::FieldFormat(format!("unknown header key `{key}`"))),
        }
    }
    let missing = |k: &str| Error::FieldFormat(format!("header lacks {k}"));
    let grid = Grid::new(dim.ok_or_else(|| missing("N"))?, n.ok_or_else(|| missing("n"))?, length.ok_or_else(|| missing("L"))?)?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::FieldFormat(format!("line {}: `{l}` is not a number", i + 2)))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != grid.len() {
        return Err(Error::FieldFormat(format!("expected {} values, found {}", grid.len(), values.len())));
    }
    RealField::new(grid, values)
}

pub fn write_field(path: &Path, u: &RealField) -> Result<()> {
    fs::write(path, format_field(u))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<RealField> {
    parse_field(&fs::read_to_string(path)?)
}
