//! Landmark CSV: header `label,x1,y1,z1,...,x42,y42,z42`, then one sample
//! per row with exactly 127 fields. The label is a class name (`A`-`Z`,
//! `SPACE`, `DELETE`, `BLANK`) or empty for unlabeled input.

use std::path::Path;

use signbridge::features::{LandmarkFrame, NUM_LANDMARKS};
use signbridge::Label;

use crate::error::{CliError, CliResult};

pub const COLUMNS: usize = 1 + 3 * NUM_LANDMARKS;

pub fn header() -> Vec<String> {
    let mut h = vec!["label".to_string()];
    for i in 1..=NUM_LANDMARKS {
        h.extend([format!("x{i}"), format!("y{i}"), format!("z{i}")]);
    }
    h
}

fn data_err(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: line {line}: {msg}", path.display()))
}

pub fn parse_landmark_csv(path: &Path) -> CliResult<Vec<LandmarkFrame<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut frames = Vec::new();
    let mut records = reader.records();
    match records.next() {
        None => return Err(data_err(path, 1, "missing header")),
        Some(Err(e)) => return Err(data_err(path, 1, e)),
        Some(Ok(h)) => {
            if h.iter().ne(header().iter().map(String::as_str)) {
                return Err(data_err(path, 1, "header must be label,x1,y1,z1,...,x42,y42,z42"));
            }
        }
    }
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            data_err(path, line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != COLUMNS {
            return Err(data_err(path, line, format!("expected {COLUMNS} fields, found {}", record.len())));
        }
        let label = match record[0].trim() {
            "" => None,
            name => Some(name.parse::<Label>().map_err(|e| data_err(path, line, e))?),
        };
        let mut values = Vec::with_capacity(COLUMNS - 1);
        for (i, field) in record.iter().enumerate().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| data_err(path, line, format!("column {} is not a number: {field:?}", i + 1)))?;
            values.push(v);
        }
        let points = values.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        frames.push(LandmarkFrame::new(points, label).map_err(|e| data_err(path, line, e))?);
    }
    Ok(frames)
}

pub fn write_landmark_csv(path: &Path, frames: &[LandmarkFrame<f64>]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header()).map_err(io)?;
    for f in frames {
        let mut row = vec![f.label.map_or(String::new(), |l| l.to_string())];
        for p in f.points() {
            row.extend(p.iter().map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
