//! CSV ingestion and export of datasets.
//!
//! Columns are matched by header name: `t` and `y` are required, any column
//! whose name starts with `x` is a covariate (in header order), and an
//! optional `weight` column carries precomputed stabilized weights. Lines
//! starting with `#` are ignored.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Dataset, Error, Observation, Result};

fn parse_field(raw: &str, line: u64, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("column `{column}`: `{raw}` is not a number"),
    })
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::InvalidInput("empty input".into()));
    }
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let t_col = find("t").ok_or_else(|| Error::MissingColumn("t".into()))?;
    let y_col = find("y").ok_or_else(|| Error::MissingColumn("y".into()))?;
    let w_col = find("weight");
    let x_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with(['x', 'X']))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut obs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).ok_or_else(|| Error::Parse { line, message: format!("missing field `{name}`") })?;
            parse_field(raw, line, name)
        };
        let x = x_cols.iter().map(|(i, name)| get(*i, name)).collect::<Result<Vec<_>>>()?;
        let mut o = Observation::new(get(t_col, "t")?, x, get(y_col, "y")?);
        if let Some(w) = w_col {
            o = o.with_weight(get(w, "weight")?);
        }
        obs.push(o);
    }
    if obs.is_empty() {
        return Err(Error::InvalidInput("no data rows".into()));
    }
    Dataset::new(obs)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        _ => Error::Parse { line, message: e.to_string() },
    }
}

pub fn read_dataset_path(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_dataset(std::io::BufReader::new(file))
}

/// Writes `t, x1..xr, y[, weight]` with shortest round-trip float formatting.
pub fn write_dataset<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=ds.r()).map(|j| format!("x{j}")));
    header.push("y".into());
    if ds.has_weights() {
        header.push("weight".into());
    }
    wtr.write_record(&header).map_err(csv_error)?;
    for o in ds.observations() {
        let mut row = vec![o.t.to_string()];
        row.extend(o.x.iter().map(f64::to_string));
        row.push(o.y.to_string());
        if let Some(w) = o.weight {
            row.push(w.to_string());
        }
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_dataset_path(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(ds, std::fs::File::create(path)?)
}
