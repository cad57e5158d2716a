//! Flat-file formats: the `time,cause` dataset CSV, generic numeric tables
//! and JSON summary records.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Cause, Dataset, DesignSpec, Observation};

/// Parses a `time,cause` CSV into a dataset under `design`. Errors name the
/// offending line.
pub fn parse_dataset_csv<R: Read>(reader: R, design: DesignSpec) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::data("line 1: empty file, expected header `time,cause`"));
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::data(format!("line 1: missing column `{name}` in header")))
    };
    let time_col = col("time")?;
    let cause_col = col("cause")?;

    let mut observations = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 2;
        let record = record?;
        let field = |c: usize| {
            record
                .get(c)
                .ok_or_else(|| Error::data(format!("line {line}: missing field")))
        };
        let time: f64 = field(time_col)?
            .parse()
            .map_err(|_| Error::data(format!("line {line}: time {:?} is not a number", &record[time_col])))?;
        let label: i64 = field(cause_col)?
            .parse()
            .map_err(|_| Error::data(format!("line {line}: cause {:?} is not an integer", &record[cause_col])))?;
        let cause = Cause::from_label(label).map_err(|e| match e {
            Error::Data(msg) => Error::data(format!("line {line}: {msg}")),
            other => other,
        })?;
        observations.push(Observation { time, cause });
    }
    if observations.is_empty() {
        return Err(Error::data("line 2: no observations after the header"));
    }
    Dataset::new(design, observations)
}

pub fn read_dataset_csv(path: &Path, design: DesignSpec) -> Result<Dataset> {
    let file = File::open(path)?;
    parse_dataset_csv(file, design)
}

/// Writes the dataset as `time,cause` with full precision.
pub fn write_dataset_csv<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "cause"])?;
    for obs in data.observations() {
        w.write_record([format!("{}", obs.time), obs.cause.label().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a numeric table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Reads a CSV of named numeric columns; missing values may be left empty.
pub fn read_numeric_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<Option<f64>>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::data(format!("line 1: missing column `{n}`")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        for (c, &i) in idx.iter().enumerate() {
            let raw = record.get(i).unwrap_or("");
            let v = if raw.is_empty() || raw.eq_ignore_ascii_case("nan") {
                None
            } else {
                Some(raw.parse::<f64>().map_err(|_| {
                    Error::data(format!("line {}: {:?} is not a number", k + 2, raw))
                })?)
            };
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// Formats `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{:.5e}", x);
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Full-precision representation for CSV artefacts; missing values are empty.
pub fn full(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{solar_lighting, solar_lighting_design};

    #[test]
    fn empty_input_is_a_data_error() {
        let err = parse_dataset_csv("".as_bytes(), solar_lighting_design()).unwrap_err();
        assert!(matches!(err, Error::Data(ref m) if m.contains("line 1")), "{err}");
    }

    #[test]
    fn bad_cause_names_the_row() {
        let text = "time,cause\n0.5,1\n1.0,3\n";
        let err = parse_dataset_csv(text.as_bytes(), solar_lighting_design()).unwrap_err();
        assert!(matches!(err, Error::Data(ref m) if m.contains("line 3")), "{err}");
    }

    #[test]
    fn dataset_round_trip() {
        let data = solar_lighting();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &data).unwrap();
        let back = parse_dataset_csv(buf.as_slice(), *data.design()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(4.50641234), "4.50641");
        assert_eq!(sig6(-4.7131), "-4.71310");
        assert_eq!(sig6(0.0946), "0.0946000");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
    }
}
