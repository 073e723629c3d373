//! Numeric CSV input and output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DataKind, Dataset};

fn parse_error(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column,
        message: message.into(),
    }
}

/// Parses comma-separated numeric rows. A first line containing any
/// non-numeric cell is taken as a header. Rows and columns in errors are
/// 1-based line and field numbers.
pub fn parse_csv<R: Read>(input: R, kind: Option<DataKind>) -> Result<Dataset> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, rec) in reader.records().enumerate() {
        let line = idx + 1;
        let rec = rec.map_err(|e| parse_error(line, 0, e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = rec
            .iter()
            .enumerate()
            .map(|(j, f)| f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(j + 1))
            .collect();
        if idx == 0 && parsed.iter().any(|p| p.is_err()) {
            width = Some(rec.len());
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(parse_error(
                line,
                rec.len().min(expected) + 1,
                format!("expected {expected} fields, found {}", rec.len()),
            ));
        }
        let mut row = Vec::with_capacity(expected);
        for p in parsed {
            match p {
                Ok(v) => row.push(v),
                Err(col) => {
                    return Err(parse_error(line, col, format!("not a finite number: {:?}", &rec[col - 1])));
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(1, 1, "no data rows"));
    }
    match kind {
        Some(k) => Dataset::from_rows(rows, k),
        None => Dataset::infer(rows),
    }
}

pub fn load_csv(path: &Path, kind: Option<DataKind>) -> Result<Dataset> {
    parse_csv(File::open(path)?, kind)
}

/// Writes a header `y1,…,yq` and one line per row.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=data.dim()).map(|j| format!("y{j}")).collect();
    w.write_record(&header).map_err(csv_io)?;
    for r in data.rows() {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: ::csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let d = parse_csv("1,2\n3,4\n".as_bytes(), None).unwrap();
        assert_eq!((d.n(), d.dim(), d.kind()), (2, 2, DataKind::Continuous));
        let b = parse_csv("0,1\n1,0\n".as_bytes(), None).unwrap();
        assert_eq!(b.kind(), DataKind::Binary);
        let forced = parse_csv("0,1\n1,0\n".as_bytes(), Some(DataKind::Continuous)).unwrap();
        assert_eq!(forced.kind(), DataKind::Continuous);
        match parse_csv("1,2\n3\n".as_bytes(), None) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_and_bad_cells() {
        let d = parse_csv("a,b\n1,2\n".as_bytes(), None).unwrap();
        assert_eq!(d.n(), 1);
        match parse_csv("1,2\n3,x\n".as_bytes(), None) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv("".as_bytes(), None), Err(Error::Parse { .. })));
        assert!(matches!(parse_csv("a,b\n".as_bytes(), None), Err(Error::Parse { .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let d = Dataset::from_rows(vec![vec![0.1, -1e-300], vec![1.0 / 3.0, 2.5e10]], DataKind::Continuous).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        assert_eq!(parse_csv(buf.as_slice(), None).unwrap(), d);
    }
}
