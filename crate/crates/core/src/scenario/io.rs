//! CSV readers and writers with fixed headers and line-numbered errors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const COUNTY_HEADER: &[&str] = &["county_id", "name", "lat", "lon"];
pub const POPULATION_HEADER: &[&str] = &["county_id", "sex", "age_years"];
pub const STACH_HEADER: &[&str] = &[
    "facility_id",
    "name",
    "county_id",
    "lat",
    "lon",
    "beds_nonicu",
    "beds_icu",
    "pct_out_of_state",
];
pub const LTACH_HEADER: &[&str] = &["facility_id", "name", "county_id", "lat", "lon", "beds"];
pub const NH_HEADER: &[&str] = &[
    "facility_id",
    "name",
    "county_id",
    "lat",
    "lon",
    "beds",
    "starting_occupancy",
];
pub const DISCHARGE_HEADER: &[&str] = &["facility_id", "age_group", "disposition", "count"];
pub const COUNTY_SHARES_HEADER: &[&str] = &["facility_id", "county_id", "discharges"];
pub const LOS_HEADER: &[&str] = &["facility_id", "mean_los_days", "sd_los_days", "total_discharges"];
pub const COMMUNITY_ADMISSIONS_HEADER: &[&str] = &["county_id", "age_group", "category", "count"];
pub const CAPACITY_HEADER: &[&str] = &["facility_id", "nonicu_fill", "icu_fill"];

fn parse_error(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(file: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(file, line, e.to_string())
}

/// Reads every row of `path`, requiring the header to equal `header` exactly.
pub fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows_from(BufReader::new(file), path, header)
}

/// As [`read_rows`], for any reader; `label` names the source in errors.
pub fn read_rows_from<R: Read, T: DeserializeOwned>(reader: R, label: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(label, e))?.clone();
    if headers.iter().ne(header.iter().copied()) {
        return Err(parse_error(
            label,
            1,
            format!(
                "expected header '{}', found '{}'",
                header.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(label, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .deserialize(Some(&headers))
            .map_err(|e| parse_error(label, line, e.to_string()))?;
        out.push(row);
    }
    Ok(out)
}

/// Writes `header` then every row. The header is written even when `rows` is empty.
pub fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows_to(BufWriter::new(file), path, header, rows)
}

pub fn write_rows_to<W: Write, T: Serialize>(writer: W, label: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(header)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io(label, e))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
