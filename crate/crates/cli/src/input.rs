//! CSV ingestion.
//!
//! Comma separated, UTF-8, `.` decimal separator. A header row is assumed
//! when the first field of the first row does not parse as a number; it may
//! then name the `score`, `label` and `calibrated` columns in any order.
//! Without a header the columns are positional in that order.

use std::fs::File;
use std::path::Path;

use pavcal_core::{Label, Trial};

use crate::CliError;

#[derive(Debug, Clone, Copy)]
struct Columns {
    score: usize,
    label: Option<usize>,
    calibrated: Option<usize>,
}

/// A parsed data row together with its 1-based line number.
#[derive(Debug, Clone)]
pub struct Row {
    pub line: u64,
    pub score: f64,
    pub label: Option<Label>,
    pub calibrated: Option<f64>,
}

pub struct Need {
    pub label: bool,
    pub calibrated: bool,
}

pub fn read_rows(path: &Path, need: Need) -> Result<Vec<Row>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut columns: Option<Columns> = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let cols = match columns {
            Some(c) => c,
            None => {
                let first = record.get(0).unwrap_or("");
                let c = if first.parse::<f64>().is_err() {
                    let c = header_columns(&record, path)?;
                    columns = Some(c);
                    continue;
                } else {
                    Columns {
                        score: 0,
                        label: Some(1),
                        calibrated: Some(2),
                    }
                };
                columns = Some(c);
                c
            }
        };
        let at = |what: &str| format!("{} line {line}: {what}", path.display());
        let field = |idx: usize, name: &str| {
            record
                .get(idx)
                .filter(|f| !f.is_empty())
                .ok_or_else(|| CliError::Data(at(&format!("missing {name} column"))))
        };

        let raw = field(cols.score, "score")?;
        let score: f64 = raw
            .parse()
            .map_err(|_| CliError::Data(at(&format!("score {raw:?} is not a number"))))?;
        if !score.is_finite() {
            return Err(CliError::Data(at(&format!("score {raw:?} is not finite"))));
        }

        let label = if need.label {
            let idx = cols.label.ok_or_else(|| CliError::Data(format!("{}: no label column", path.display())))?;
            let raw = field(idx, "label")?;
            Some(raw.parse::<Label>().map_err(|e| CliError::Data(at(&e)))?)
        } else {
            None
        };

        let calibrated = if need.calibrated {
            let idx = cols
                .calibrated
                .ok_or_else(|| CliError::Data(format!("{}: no calibrated column", path.display())))?;
            let raw = field(idx, "calibrated")?;
            let v: f64 = raw
                .parse()
                .map_err(|_| CliError::Data(at(&format!("calibrated value {raw:?} is not a number"))))?;
            if v.is_nan() {
                return Err(CliError::Data(at("calibrated value is NaN")));
            }
            Some(v)
        } else {
            None
        };

        rows.push(Row {
            line,
            score,
            label,
            calibrated,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

fn header_columns(record: &csv::StringRecord, path: &Path) -> Result<Columns, CliError> {
    let find = |name: &str| record.iter().position(|f| f.eq_ignore_ascii_case(name));
    let score = find("score").ok_or_else(|| {
        CliError::Data(format!("{}: header has no \"score\" column", path.display()))
    })?;
    Ok(Columns {
        score,
        label: find("label"),
        calibrated: find("calibrated"),
    })
}

pub fn trials(rows: &[Row]) -> Vec<Trial> {
    rows.iter()
        .map(|r| Trial::new(r.score, r.label.expect("labelled rows")))
        .collect()
}
