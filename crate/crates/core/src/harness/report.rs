use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::ReportFormat;
use super::HarnessError;

pub fn write_rows<T: Serialize, W: Write>(
    rows: &[T],
    format: ReportFormat,
    out: W,
) -> Result<(), HarnessError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(|source| HarnessError::Io {
                path: "<csv>".into(),
                source,
            })?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(|source| HarnessError::Io {
                path: "<json>".into(),
                source,
            })?;
        }
    }
    Ok(())
}

/// Write rows to `path`, or stdout when `path` is `None`.
pub fn emit_report<T: Serialize>(
    rows: &[T],
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<(), HarnessError> {
    match path {
        Some(path) => {
            let io_err = |source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            };
            let file = File::create(path).map_err(io_err)?;
            let mut w = BufWriter::new(file);
            write_rows(rows, format, &mut w)?;
            w.flush().map_err(io_err)
        }
        None => write_rows(rows, format, io::stdout().lock()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
        flag: bool,
    }

    #[test]
    fn csv_and_json() {
        let rows = [
            Row { name: "a", value: 0.5, flag: true },
            Row { name: "b", value: 2.0, flag: false },
        ];
        let mut buf = Vec::new();
        write_rows(&rows, ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "name,value,flag\na,0.5,true\nb,2.0,false\n"
        );
        let mut buf = Vec::new();
        write_rows(&rows, ReportFormat::Json, &mut buf).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(parsed[1]["value"], 2.0);
    }

    #[test]
    fn io_error_names_the_path() {
        let err = emit_report(
            &[Row { name: "a", value: 1.0, flag: true }],
            ReportFormat::Csv,
            Some(Path::new("/nonexistent-dir/x.csv")),
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
